"""Classical Fokker-Planck limit on the periodic phase space (alpha, p).

    dW/dt = -(p/I) dW/dalpha + d/dp [ (V'(alpha) + Gamma p) W + D dW/dp ]

Fourier differentiation in alpha, a second-order conservative flux scheme in p
with zero flux through |p| = p_max, and RK4 in time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import DensityMatrix, PotentialSpec
from .wigner import AuxWignerField, angle_grid, split_contributions, to_aux


class CFLError(ValueError):
    """Time step exceeds the explicit stability bound of the scheme."""


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform angle grid on [-pi, pi) and cell-centred momenta in [-p_max, p_max]."""

    n_alpha: int
    n_p: int
    p_max: float

    def __post_init__(self):
        if self.n_alpha < 4 or self.n_p < 4 or self.p_max <= 0:
            raise ValueError("grid needs n_alpha, n_p >= 4 and p_max > 0")

    @property
    def alpha(self) -> np.ndarray:
        return angle_grid(self.n_alpha)

    @property
    def d_alpha(self) -> float:
        return 2 * np.pi / self.n_alpha

    @property
    def dp(self) -> float:
        return 2 * self.p_max / self.n_p

    @property
    def p(self) -> np.ndarray:
        return -self.p_max + (np.arange(self.n_p) + 0.5) * self.dp

    @property
    def p_faces(self) -> np.ndarray:
        return -self.p_max + np.arange(1, self.n_p) * self.dp

    @classmethod
    def for_rotor(cls, hbar: float, M: int, n_alpha: int, sub: int = 8) -> "PhaseGrid":
        """Grid whose momentum cells [hbar(m - 1/2), hbar(m + 1/2)] hold ``sub`` points each."""
        return cls(n_alpha, (2 * M + 1) * sub, hbar * (M + 0.5))


@dataclass(frozen=True)
class ClassicalField:
    """Phase-space density W(alpha_i, p_j), shape (n_alpha, n_p)."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_alpha, self.grid.n_p):
            raise GridMismatch(f"values shape {v.shape} does not match grid {(self.grid.n_alpha, self.grid.n_p)}")
        object.__setattr__(self, "values", v)

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.d_alpha * self.grid.dp)

    def moment(self, power: int) -> float:
        g = self.grid
        return float((self.values * g.p[None, :] ** power).sum() * g.d_alpha * g.dp)

    def momentum_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.grid.d_alpha

    def angle_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.grid.dp

    def boundary_density(self) -> float:
        """Largest momentum-marginal density in the outermost cells."""
        m = self.momentum_marginal()
        return float(max(m[0], m[-1]))

    def min(self) -> float:
        return float(self.values.min())


@dataclass(frozen=True)
class FokkerPlanck:
    potential: PotentialSpec
    gamma: float
    diffusion: float
    inertia: float = 1.0

    @classmethod
    def thermal(cls, potential: PotentialSpec, gamma: float, temperature: float, inertia: float = 1.0):
        return cls(potential, gamma, gamma * temperature * inertia, inertia)

    def max_dt(self, grid: PhaseGrid) -> float:
        """0.5 min(d_alpha I / p_max, dp / max|V'|, dp^2 / 2D)."""
        alpha = np.linspace(-np.pi, np.pi, 4096, endpoint=False)
        force = np.abs(self.potential.derivative(alpha)).max(initial=0.0) + self.gamma * grid.p_max
        bounds = [grid.d_alpha * self.inertia / grid.p_max]
        if force > 0:
            bounds.append(grid.dp / force)
        if self.diffusion > 0:
            bounds.append(grid.dp ** 2 / (2 * self.diffusion))
        return 0.5 * min(bounds)


def _alpha_derivative(W: np.ndarray) -> np.ndarray:
    n = W.shape[0]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0     # drop the unpaired Nyquist mode
    return np.fft.ifft(1j * k[:, None] * np.fft.fft(W, axis=0), axis=0).real


def fp_rhs(field: ClassicalField, fp: FokkerPlanck) -> np.ndarray:
    g = field.grid
    W = field.values
    out = -(g.p[None, :] / fp.inertia) * _alpha_derivative(W)
    drift = fp.potential.derivative(g.alpha)[:, None] + fp.gamma * g.p_faces[None, :]
    flux = drift * 0.5 * (W[:, 1:] + W[:, :-1]) + fp.diffusion * (W[:, 1:] - W[:, :-1]) / g.dp
    div = np.zeros_like(W)
    div[:, :-1] += flux
    div[:, 1:] -= flux
    return out + div / g.dp


def fp_step(field: ClassicalField, fp: FokkerPlanck, dt: float) -> ClassicalField:
    """One RK4 step; rejects dt above the explicit stability bound."""
    limit = fp.max_dt(field.grid)
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"dt={dt:.3g} exceeds the stability bound {limit:.3g}")
    g = field.grid

    def f(v):
        return fp_rhs(ClassicalField(g, v), fp)

    y = field.values
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return ClassicalField(g, y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def evolve_fp(field: ClassicalField, fp: FokkerPlanck, t_final: float, dt: float | None = None,
              snapshot_times=()) -> tuple[ClassicalField, dict]:
    """Step to t_final, landing exactly on each snapshot time."""
    dt = dt or fp.max_dt(field.grid)
    events = sorted(set(float(s) for s in snapshot_times) | {float(t_final)})
    snaps = {}
    t = 0.0
    for target in events:
        n = int(np.ceil((target - t) / dt - 1e-9))
        if n > 0:
            h = (target - t) / n
            for _ in range(n):
                field = fp_step(field, fp, h)
        t = target
        snaps[target] = field
    return field, snaps


def classical_gibbs(grid: PhaseGrid, potential: PotentialSpec, temperature: float, inertia: float = 1.0) -> ClassicalField:
    """exp[-(p^2/2I + V)/T] normalized on the grid."""
    e = grid.p[None, :] ** 2 / (2 * inertia) + potential.value(grid.alpha)[:, None]
    W = np.exp(-(e - e.min()) / temperature)
    W /= W.sum() * grid.d_alpha * grid.dp
    return ClassicalField(grid, W)


def stationarity_residual(field: ClassicalField, fp: FokkerPlanck) -> float:
    """||dW/dt||_1 / ||W||_1, a rate (per unit time)."""
    r = fp_rhs(field, fp)
    return float(np.abs(r).sum() / np.abs(field.values).sum())


# ---------------------------------------------------------------- quantum vs classical


def cell_average(field: ClassicalField, hbar: float, M: int) -> np.ndarray:
    """Classical density integrated over momentum cells of width hbar around hbar m.

    Returns shape (2M+1, n_alpha), laid out like the quantum W(alpha, m).
    """
    g = field.grid
    sub = g.n_p / (2 * M + 1)
    if abs(sub - round(sub)) > 1e-9 or abs(g.p_max - hbar * (M + 0.5)) > 1e-9 * g.p_max:
        raise GridMismatch("classical momentum grid is not aligned with the cells hbar(m +- 1/2)")
    sub = int(round(sub))
    cells = field.values.reshape(g.n_alpha, 2 * M + 1, sub).sum(axis=2) * g.dp
    return cells.T


def quantum_wigner_on_grid(rho, n_alpha: int) -> np.ndarray:
    """W(alpha, m) restricted to |m| <= M, shape (2M+1, n_alpha)."""
    field = rho if isinstance(rho, AuxWignerField) else to_aux(rho)
    _, _, ip, hp = split_contributions(field, n_alpha)
    return ip + hp


def l1_distance(rho, classical: ClassicalField, hbar: float) -> float:
    """sum_m integral |W_q(alpha, m) - W_c,cell(alpha, m)| d alpha."""
    field = rho if isinstance(rho, AuxWignerField) else to_aux(rho)
    g = classical.grid
    Wq = quantum_wigner_on_grid(field, g.n_alpha)
    Wc = cell_average(classical, hbar, field.M)
    return float(np.abs(Wq - Wc).sum() * g.d_alpha)


def half_integer_weight(rho, n_alpha: int | None = None) -> float:
    """Non-local part of the half-integer contribution, relative to the total.

    The half-integer rows enter W(alpha, m) through a sinc sum over all
    nu = m' + 1/2.  In the continuum limit this sum collapses onto the two
    neighbouring rows; what is left over is the genuinely discrete part:

        || sum_nu sinc((m - nu) pi) W_nu - (W_{m-1/2} + W_{m+1/2}) / 2 ||_1 / ||W||_1.
    """
    field = rho if isinstance(rho, AuxWignerField) else to_aux(rho)
    M = field.M
    n_alpha = n_alpha or 4 * M + 2
    alpha, m, ip, hp = split_contributions(field, n_alpha)
    rows = field.evaluate(alpha)
    half = rows[1::2]                       # nu = -M + 1/2 .. M - 1/2
    local = np.zeros_like(hp)
    local[1:] += 0.5 * half                 # W_{m - 1/2} for m = -M + 1 .. M
    local[:-1] += 0.5 * half                # W_{m + 1/2} for m = -M .. M - 1
    return float(np.abs(hp - local).sum() / np.abs(ip + hp).sum())


@dataclass
class Comparison:
    times: list
    l1: list
    half_weight: list


def quantum_classical_compare(quantum_snapshots: dict, classical_snapshots: dict, hbar: float) -> Comparison:
    """Per-snapshot L1 distance and half-integer weight on matched times."""
    times = sorted(set(quantum_snapshots) & set(classical_snapshots))
    if not times:
        raise GridMismatch("no common snapshot times")
    l1, hw = [], []
    for t in times:
        rho = quantum_snapshots[t]
        c = classical_snapshots[t]
        l1.append(l1_distance(rho, c, hbar))
        hw.append(half_integer_weight(rho, c.grid.n_alpha))
    return Comparison(times, l1, hw)


def density_from_state(rho: DensityMatrix, hbar: float, n_alpha: int) -> np.ndarray:
    """Quantum W(alpha, p = hbar m) as a density in p (divide by the cell width)."""
    return quantum_wigner_on_grid(rho, n_alpha) / hbar
