"""Rotor states in the truncated angular-momentum basis |m>, |m| <= M."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .special import bessel_i_scaled_all


class TruncationError(ValueError):
    """Raised when the basis cutoff M drops non-negligible weight."""


def basis_m(M: int) -> np.ndarray:
    return np.arange(-M, M + 1)


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix rho_{m m'} with m, m' in -M..M (row index i = m + M)."""

    data: np.ndarray

    def __post_init__(self):
        a = np.array(self.data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2 != 1:
            raise ValueError(f"density matrix must be square with odd dimension, got {a.shape}")
        a = _hermitize(a)
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def M(self) -> int:
        return (self.data.shape[0] - 1) // 2

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> np.ndarray:
        return basis_m(self.M)

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def purity(self) -> float:
        return float(np.vdot(self.data, self.data).real)

    def populations(self) -> np.ndarray:
        return np.diag(self.data).real.copy()

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data)[0])

    def boundary_population(self) -> float:
        d = np.diag(self.data).real
        return float(d[0] + d[-1])

    def moment(self, power: int, hbar: float = 1.0) -> float:
        """<p^power> with p = hbar * m."""
        return float(np.sum((hbar * self.m) ** power * np.diag(self.data).real))

    def angle_density(self, alpha) -> np.ndarray:
        """<alpha|rho|alpha> evaluated at the given angles."""
        alpha = np.asarray(alpha, dtype=float)
        phases = np.exp(1j * np.outer(alpha.ravel(), self.m)) / np.sqrt(2 * np.pi)
        vals = np.einsum("am,mn,an->a", phases, self.data, phases.conj())
        return vals.real.reshape(alpha.shape)

    def normalized(self) -> "DensityMatrix":
        return DensityMatrix(self.data / self.trace())

    def check(self, trace_tol: float = 1e-12, psd_tol: float = 1e-8) -> None:
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace {tr!r} differs from 1 by more than {trace_tol}")
        lam = self.min_eigenvalue()
        if lam < -psd_tol:
            raise ValueError(f"density matrix not positive: min eigenvalue {lam:.3e}")

    @classmethod
    def from_pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        nrm = np.vdot(psi, psi).real
        if nrm <= 0:
            raise ValueError("zero-norm state vector")
        psi = psi / np.sqrt(nrm)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def momentum_eigenstate(cls, m: int, M: int) -> "DensityMatrix":
        if abs(m) > M:
            raise TruncationError(f"|m|={abs(m)} exceeds truncation M={M}")
        psi = np.zeros(2 * M + 1, dtype=complex)
        psi[m + M] = 1.0
        return cls.from_pure(psi)

    @classmethod
    def mixture(cls, states: Sequence["DensityMatrix"], probs: Sequence[float]) -> "DensityMatrix":
        data = sum(p * s.data for p, s in zip(probs, states))
        return cls(data / np.trace(data).real)


@dataclass(frozen=True)
class PotentialSpec:
    """Static 2pi-periodic potential V(a) = sum_k a_k cos(k a) + b_k sin(k a).

    ``terms`` holds ``(k, a_k, b_k)`` triples with k >= 1; ``V0`` is the
    characteristic energy scale used for dimensionless units.
    """

    terms: tuple = ()
    V0: float = 1.0

    def __post_init__(self):
        clean = []
        for term in self.terms:
            k, a, b = term
            if int(k) != k or k < 1:
                raise ValueError(f"harmonic index must be a positive integer, got {k!r}")
            clean.append((int(k), float(a), float(b)))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def tilted_double_well(cls, V0: float = 1.0) -> "PotentialSpec":
        """V0 (cos a - cos 2a): local minimum at 0, global minimum at +-pi."""
        return cls(terms=((1, V0, 0.0), (2, -V0, 0.0)), V0=V0)

    @classmethod
    def free(cls, V0: float = 1.0) -> "PotentialSpec":
        return cls(terms=(), V0=V0)

    @property
    def is_zero(self) -> bool:
        return all(a == 0 and b == 0 for _, a, b in self.terms)

    @property
    def max_harmonic(self) -> int:
        return max((k for k, _, _ in self.terms), default=0)

    def value(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        out = np.zeros_like(alpha)
        for k, a, b in self.terms:
            out = out + a * np.cos(k * alpha) + b * np.sin(k * alpha)
        return out

    def derivative(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        out = np.zeros_like(alpha)
        for k, a, b in self.terms:
            out = out + k * (-a * np.sin(k * alpha) + b * np.cos(k * alpha))
        return out

    def second_derivative(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        out = np.zeros_like(alpha)
        for k, a, b in self.terms:
            out = out + k * k * (-a * np.cos(k * alpha) - b * np.sin(k * alpha))
        return out

    def max_second_derivative(self, n_grid: int = 8192) -> float:
        alpha = np.linspace(-np.pi, np.pi, n_grid, endpoint=False)
        return float(np.max(np.abs(self.second_derivative(alpha)), initial=0.0))

    def matrix(self, M: int) -> np.ndarray:
        """Hermitian matrix of V(alpha-hat) in the truncated m basis."""
        n = 2 * M + 1
        out = np.zeros((n, n), dtype=complex)
        for k, a, b in self.terms:
            if k >= n:
                continue
            # <m+k| e^{ik alpha} |m> = 1
            v = 0.5 * (a - 1j * b)
            idx = np.arange(n - k)
            out[idx + k, idx] += v
            out[idx, idx + k] += np.conj(v)
        return out

    def sup_norm(self) -> float:
        return float(sum(abs(a) + abs(b) for _, a, b in self.terms))


@dataclass(frozen=True)
class BathParams:
    """Bath and rotor constants; k_B = 1 so temperature is an energy.

    The diffusion coefficient is fixed by D = gamma * T * I.
    """

    temperature: float
    gamma: float
    inertia: float = 1.0
    hbar: float = 1.0
    diffusion: float = field(init=False)

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.gamma < 0:
            raise ValueError("friction rate must be non-negative")
        if self.inertia <= 0 or self.hbar <= 0:
            raise ValueError("inertia and hbar must be positive")
        object.__setattr__(self, "diffusion", self.gamma * self.temperature * self.inertia)

    @property
    def epsilon1(self) -> float:
        return self.hbar ** 2 / (self.temperature * self.inertia)

    def epsilon2(self, potential: PotentialSpec) -> float:
        return (self.hbar ** 2 * potential.max_second_derivative()
                / (self.temperature ** 2 * self.inertia))


def kinetic_diagonal(M: int, hbar: float = 1.0, inertia: float = 1.0) -> np.ndarray:
    m = basis_m(M)
    return (hbar * m) ** 2 / (2.0 * inertia)


def hamiltonian(potential: PotentialSpec, M: int, hbar: float = 1.0, inertia: float = 1.0) -> np.ndarray:
    return np.diag(kinetic_diagonal(M, hbar, inertia)).astype(complex) + potential.matrix(M)


def wavepacket_amplitudes(sigma: float, alpha0: float, M: int, tol: float = 1e-10) -> np.ndarray:
    """Momentum amplitudes of the periodic Gaussian exp[-sin^2((a-a0)/2)/sigma^2].

    psi_m is proportional to exp(-i m a0) * Ie_m(1/(2 sigma^2)) with Ie the
    exponentially scaled modified Bessel function.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z = 1.0 / (2.0 * sigma ** 2)
    m = basis_m(M)
    scaled = bessel_i_scaled_all(M, z)
    psi = scaled[np.abs(m)] * np.exp(-1j * m * alpha0)
    psi = psi / np.linalg.norm(psi)
    edge = abs(psi[0]) ** 2
    if edge > tol:
        raise TruncationError(
            f"wave packet sigma={sigma} needs a larger basis: |psi_(+-M)|^2 = {edge:.2e} at M={M}")
    return psi


def build_wavepacket(sigma: float, alpha0: float, M: int) -> DensityMatrix:
    return DensityMatrix.from_pure(wavepacket_amplitudes(sigma, alpha0, M))


def superpose(states: Sequence[np.ndarray], weights: Sequence[complex]) -> DensityMatrix:
    """Pure state from a weighted sum of amplitude vectors."""
    states = [np.asarray(s, dtype=complex) for s in states]
    if not states:
        raise ValueError("need at least one state")
    dims = {s.shape for s in states}
    if len(dims) != 1:
        raise ValueError(f"states differ in dimension: {sorted(dims)}")
    if len(weights) != len(states):
        raise ValueError("one weight per state required")
    psi = sum(w * s for w, s in zip(weights, states))
    if np.linalg.norm(psi) < 1e-14:
        raise ValueError("superposition has zero norm")
    return DensityMatrix.from_pure(psi)


def gibbs_state(potential: PotentialSpec, bath: BathParams, M: int, tol: float = 1e-10) -> DensityMatrix:
    """exp(-H/T)/Z for H = p^2/2I + V in the truncated basis."""
    H = hamiltonian(potential, M, bath.hbar, bath.inertia)
    evals, evecs = np.linalg.eigh(H)
    w = np.exp(-(evals - evals[0]) / bath.temperature)
    w /= w.sum()
    rho = (evecs * w) @ evecs.conj().T
    state = DensityMatrix(rho)
    edge = state.boundary_population()
    if edge > tol:
        raise TruncationError(f"Gibbs state boundary population {edge:.2e} exceeds {tol:.0e} at M={M}")
    return state


def random_state(M: int, rng: np.random.Generator, rank: int | None = None, margin: int = 0) -> DensityMatrix:
    """Random full-rank (or given-rank) density matrix.

    ``margin`` leaves the outermost ``margin`` momenta on each side empty.
    """
    inner = 2 * (M - margin) + 1
    rank = inner if rank is None else rank
    g = rng.normal(size=(inner, rank)) + 1j * rng.normal(size=(inner, rank))
    rho_inner = g @ g.conj().T
    rho = np.zeros((2 * M + 1, 2 * M + 1), dtype=complex)
    rho[margin:margin + inner, margin:margin + inner] = rho_inner
    return DensityMatrix(rho / np.trace(rho).real)


def auto_truncation(potential: PotentialSpec, bath: BathParams, M_start: int = 8, tol: float = 1e-10,
                    step: int = 4, M_max: int = 160) -> int:
    """Smallest M (in steps from M_start) whose Gibbs state keeps boundary population below tol."""
    M = M_start
    while M <= M_max:
        try:
            gibbs_state(potential, bath, M, tol=tol)
            return M
        except TruncationError:
            M += step
    raise TruncationError(f"Gibbs state needs M > {M_max}")
