"""Generators of the rotor master equation in two independent representations.

Matrix form acts on rho_{m m'} through the shift operators L+- = exp(+-i alpha).
Aux form acts on the Fourier coefficients c[nu, k] of the auxiliary Wigner
functions. Both drop contributions whose target lies outside |m| <= M
(absorbing truncation), so they agree exactly through the reindexing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .state import BathParams, DensityMatrix, PotentialSpec, basis_m
from .wigner import AuxWignerField, nu_k_grids, valid_mask

MODES = ("full", "unitary_only", "diffusion_only", "no_angular_diffusion")
REPRESENTATIONS = ("matrix", "aux_wigner")


class LeakageError(RuntimeError):
    """Norm flow across the truncation boundary exceeded the allowed level."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Which terms act, with which constants, in which representation.

    In ``diffusion_only`` mode the friction rate is zero and ``diffusion``
    must be supplied; otherwise the diffusion constant follows D = gamma T I.
    """

    bath: BathParams
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    mode: str = "full"
    representation: str = "matrix"
    diffusion: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.mode == "diffusion_only":
            if self.diffusion is None or self.diffusion < 0:
                raise ValueError("diffusion_only mode needs a non-negative diffusion constant")
        elif self.diffusion is not None and not np.isclose(self.diffusion, self.bath.diffusion):
            raise ValueError("D = gamma T I is fixed by the bath outside diffusion_only mode")

    @property
    def D(self) -> float:
        return self.diffusion if self.mode == "diffusion_only" else self.bath.diffusion

    @property
    def gamma(self) -> float:
        return 0.0 if self.mode == "diffusion_only" else self.bath.gamma

    @property
    def hbar(self) -> float:
        return self.bath.hbar

    @property
    def inertia(self) -> float:
        return self.bath.inertia

    def with_representation(self, representation: str) -> "GeneratorSpec":
        return GeneratorSpec(self.bath, self.potential, self.mode, representation, self.diffusion)

    def with_mode(self, mode: str, diffusion: float | None = None) -> "GeneratorSpec":
        return GeneratorSpec(self.bath, self.potential, mode, self.representation, diffusion)


# ---------------------------------------------------------------- matrix form


class ShiftOperators:
    """exp(+-i alpha) and p on the truncated basis, applied by slicing."""

    def __init__(self, M: int, hbar: float = 1.0):
        self.M = M
        self.hbar = hbar
        self.m = basis_m(M).astype(float)
        self.p = hbar * self.m

    @property
    def L_plus(self) -> np.ndarray:
        n = 2 * self.M + 1
        return np.eye(n, k=-1, dtype=complex)

    @property
    def L_minus(self) -> np.ndarray:
        return self.L_plus.conj().T

    @property
    def P(self) -> np.ndarray:
        return np.diag(self.p).astype(complex)

    def cos(self, k: int = 1) -> np.ndarray:
        Lp = np.linalg.matrix_power(self.L_plus, k)
        return 0.5 * (Lp + Lp.conj().T)

    def sin(self, k: int = 1) -> np.ndarray:
        Lp = np.linalg.matrix_power(self.L_plus, k)
        return (Lp - Lp.conj().T) / 2j

    @staticmethod
    def raise_both(x: np.ndarray) -> np.ndarray:
        """L+ X L-, i.e. X[m-1, m'-1]."""
        out = np.zeros_like(x)
        out[1:, 1:] = x[:-1, :-1]
        return out

    @staticmethod
    def lower_both(x: np.ndarray) -> np.ndarray:
        """L- X L+, i.e. X[m+1, m'+1]."""
        out = np.zeros_like(x)
        out[:-1, :-1] = x[1:, 1:]
        return out

    @staticmethod
    def raise_left(x: np.ndarray, k: int) -> np.ndarray:
        """L+^k X."""
        out = np.zeros_like(x)
        if k < x.shape[0]:
            out[k:] = x[:-k]
        return out

    @staticmethod
    def lower_left(x: np.ndarray, k: int) -> np.ndarray:
        """L-^k X."""
        out = np.zeros_like(x)
        if k < x.shape[0]:
            out[:-k] = x[k:]
        return out


def _as_array(rho) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)


def kinetic_matrix(rho, hbar: float = 1.0, inertia: float = 1.0) -> np.ndarray:
    """-(i/hbar)[p^2/2I, rho]."""
    x = _as_array(rho)
    M = (x.shape[0] - 1) // 2
    e = (hbar * basis_m(M)) ** 2 / (2 * inertia)
    return (-1j / hbar) * (e[:, None] - e[None, :]) * x


def potential_matrix(rho, potential: PotentialSpec, hbar: float = 1.0) -> np.ndarray:
    """-(i/hbar)[V, rho] with V = sum_k v_k L+^k + conj(v_k) L-^k."""
    x = _as_array(rho)
    out = np.zeros_like(x, dtype=complex)
    s = ShiftOperators
    for k, a, b in potential.terms:
        v = 0.5 * (a - 1j * b)
        # V rho
        out += v * s.raise_left(x, k) + np.conj(v) * s.lower_left(x, k)
        # - rho V = -(V rho)^dagger for Hermitian rho; keep general
        out -= v * s.lower_left(x.T, k).T + np.conj(v) * s.raise_left(x.T, k).T
    return (-1j / hbar) * out


def dissipator_matrix(rho, g: GeneratorSpec) -> np.ndarray:
    """Thermalization dissipator built from e_r, e_phi expansions in L+-.

    e_r . X e_r = e_phi . X e_phi = (L+ X L- + L- X L+)/2,
    e_phi . X e_r = -(e_r . X e_phi) = (i/2)(L+ X L- - L- X L+).
    """
    x = _as_array(rho).astype(complex, copy=False)
    M = (x.shape[0] - 1) // 2
    hbar, inertia = g.hbar, g.inertia
    sh = ShiftOperators(M, hbar)
    p = sh.p
    D = g.D
    out = np.zeros_like(x)
    if g.mode == "unitary_only":
        return out
    # momentum diffusion: (2D/hbar^2)[e_r . rho e_r - rho]
    out += (D / hbar ** 2) * (sh.raise_both(x) + sh.lower_both(x) - 2.0 * x)
    if g.mode == "diffusion_only":
        return out
    gamma = g.gamma
    # friction: (i gamma / 2 hbar)[e_phi . p rho e_r - e_r . rho p e_phi]
    anti = p[:, None] * x + x * p[None, :]
    out += (-gamma / (4.0 * hbar)) * (sh.raise_both(anti) - sh.lower_both(anti))
    if g.mode == "no_angular_diffusion":
        return out
    # angular diffusion: D/(8 T^2 I^2) [e_phi p . rho p e_phi - {p^2, rho}/2]
    T = g.bath.temperature
    pxp = p[:, None] * x * p[None, :]
    p2 = p ** 2
    line3 = 0.5 * (sh.raise_both(pxp) + sh.lower_both(pxp)) - 0.5 * (p2[:, None] + p2[None, :]) * x
    out += (D / (8.0 * T ** 2 * inertia ** 2)) * line3
    return out


def dissipator_from_operators(rho, g: GeneratorSpec) -> np.ndarray:
    """Same dissipator assembled from dense cos/sin/p matrices term by term.

    Slow; used as an independent check of :func:`dissipator_matrix`.
    """
    x = _as_array(rho).astype(complex)
    M = (x.shape[0] - 1) // 2
    sh = ShiftOperators(M, g.hbar)
    c, s, P = sh.cos(), sh.sin(), sh.P
    er = (c, s)
    ephi = (-s, c)
    D, hbar = g.D, g.hbar
    out = np.zeros_like(x)
    if g.mode == "unitary_only":
        return out
    out += (2 * D / hbar ** 2) * (sum(e @ x @ e for e in er) - x)
    if g.mode == "diffusion_only":
        return out
    gamma = g.gamma
    out += (1j * gamma / (2 * hbar)) * (sum(f @ P @ x @ e for f, e in zip(ephi, er))
                                         - sum(e @ x @ P @ f for f, e in zip(ephi, er)))
    if g.mode == "no_angular_diffusion":
        return out
    T, inertia = g.bath.temperature, g.inertia
    out += (D / (8 * T ** 2 * inertia ** 2)) * (sum(f @ P @ x @ P @ f for f in ephi)
                                                 - 0.5 * (P @ P @ x + x @ P @ P))
    return out


# ------------------------------------------------------------------- aux form


def _shift(c: np.ndarray, dn: int, dk: int) -> np.ndarray:
    """out[n, k] = c[n - dn, k - dk] on the (2nu, k) array; zero fill."""
    out = np.zeros_like(c)
    N = c.shape[0]
    src_n = slice(max(0, -dn), N - max(0, dn))
    dst_n = slice(max(0, dn), N - max(0, -dn))
    src_k = slice(max(0, -dk), N - max(0, dk))
    dst_k = slice(max(0, dk), N - max(0, -dk))
    out[dst_n, dst_k] = c[src_n, src_k]
    return out


def _coeffs(field) -> tuple[int, np.ndarray]:
    if isinstance(field, AuxWignerField):
        return field.M, field.coeffs
    c = np.asarray(field)
    return (c.shape[0] - 1) // 4, c


def _masked(M: int, out: np.ndarray) -> np.ndarray:
    return np.where(valid_mask(M), out, 0.0)


def _check_leakage(op, c: np.ndarray, M: int, pad: int, tol: float, label: str) -> None:
    """Apply ``op`` on a basis enlarged by ``pad`` and measure what lands outside |m| <= M."""
    big = np.zeros((4 * (M + pad) + 1,) * 2, dtype=complex)
    o = 2 * pad
    big[o:o + c.shape[0], o:o + c.shape[0]] = c
    out = op(big, M + pad)
    inside = np.zeros(out.shape, dtype=bool)
    inside[o:o + c.shape[0], o:o + c.shape[0]] = valid_mask(M)
    dropped = np.abs(out[~inside]).sum()
    if dropped > tol * max(np.abs(out[inside]).sum(), 1e-300):
        raise LeakageError(f"{label}: boundary leakage {dropped:.3e} above tolerance")


def apply_kinetic(field, hbar: float = 1.0, inertia: float = 1.0):
    """-(nu hbar / I) d/dalpha W_nu, i.e. c[nu, k] -> -(i k nu hbar / I) c[nu, k]."""
    M, c = _coeffs(field)
    nu, k = nu_k_grids(M)
    out = (-1j * hbar / inertia) * nu * k * c
    return AuxWignerField(M, out) if isinstance(field, AuxWignerField) else out


def apply_potential(field, potential: PotentialSpec, hbar: float = 1.0,
                    strict: bool = False, tol: float = 1e-8, cos_sign: float = -1.0):
    """(1/hbar) sum_q [a_q sin q alpha - b_q cos q alpha][W_{nu-q/2} - W_{nu+q/2}].

    The bracket is -V_q'(alpha)/q for V_q = a_q cos q alpha + b_q sin q alpha,
    as the commutator -(i/hbar)[V, rho] requires. ``cos_sign=+1`` gives the
    bracket a_q sin + b_q cos instead, which does not match the commutator
    when b_q != 0; it is kept only to demonstrate that mismatch.
    ``strict`` raises LeakageError if more than ``tol`` of the result falls
    outside the basis.
    """
    M, c = _coeffs(field)

    def op(c, M):
        out = np.zeros_like(c, dtype=complex)
        for q, a, b in potential.terms:
            # a sin - b cos = beta_p e^{iq alpha} + beta_m e^{-iq alpha}
            b = -cos_sign * b
            beta_p = -0.5 * (b + 1j * a)
            beta_m = -0.5 * (b - 1j * a)
            diff_p = _shift(c, q, q) - _shift(c, -q, q)    # harmonic raised by q
            diff_m = _shift(c, q, -q) - _shift(c, -q, -q)  # harmonic lowered by q
            out += beta_p * diff_p + beta_m * diff_m
        return out / hbar

    if strict:
        _check_leakage(op, c, M, max(1, potential.max_harmonic), tol, "potential")
    out = _masked(M, op(c, M))
    return AuxWignerField(M, out) if isinstance(field, AuxWignerField) else out


def apply_dissipator(field, g: GeneratorSpec, strict: bool = False, tol: float = 1e-8):
    """Momentum diffusion, friction and angular diffusion on W_nu.

    The W_nu term of the angular-diffusion line carries -2(nu^2 - d_alpha^2/4),
    which is what the operator form of the dissipator produces.
    """
    M, c = _coeffs(field)

    def op(c, M):
        out = np.zeros_like(c, dtype=complex)
        if g.mode == "unitary_only":
            return out
        nu, k = nu_k_grids(M)
        hbar = g.hbar
        # W_{nu+1} sits at n + 2, i.e. shift by dn = -2
        up = lambda a: _shift(a, -2, 0)    # noqa: E731
        down = lambda a: _shift(a, 2, 0)   # noqa: E731
        out += (g.D / hbar ** 2) * (up(c) + down(c) - 2.0 * c)
        if g.mode in ("full", "no_angular_diffusion"):
            nc = nu * c
            out += 0.5 * g.gamma * (up(nc) - down(nc))
        if g.mode == "full":
            T, inertia = g.bath.temperature, g.inertia
            wc = (nu ** 2 - k ** 2 / 4.0) * c
            line3 = up(wc) + down(wc) - (2.0 * nu ** 2 + k ** 2 / 2.0) * c
            out += (hbar ** 2 * g.gamma / (16.0 * T * inertia)) * line3
        return out

    if strict:
        _check_leakage(op, c, M, 1, tol, "dissipator")
    out = _masked(M, op(c, M))
    return AuxWignerField(M, out) if isinstance(field, AuxWignerField) else out


# ---------------------------------------------------------------- composition


def _matrix_coefficients(g: GeneratorSpec, M: int):
    """Elementwise factors: d rho = diag*rho + up*shift_up(rho) + down*shift_down(rho) + potential."""
    hbar, inertia = g.hbar, g.inertia
    p = hbar * basis_m(M).astype(float)
    e = p ** 2 / (2 * inertia)
    diag = (-1j / hbar) * (e[:, None] - e[None, :])
    n = 2 * M + 1
    up = np.zeros((n - 1, n - 1))     # factor on source rho[a, b] moving to [a+1, b+1]
    down = np.zeros((n - 1, n - 1))   # factor on source rho[a, b] moving to [a-1, b-1]
    if g.mode != "unitary_only":
        D = g.D
        diag = diag - 2.0 * D / hbar ** 2
        up += D / hbar ** 2
        down += D / hbar ** 2
        if g.mode in ("full", "no_angular_diffusion"):
            ps_up = p[:-1, None] + p[None, :-1]
            ps_dn = p[1:, None] + p[None, 1:]
            up -= g.gamma / (4 * hbar) * ps_up
            down += g.gamma / (4 * hbar) * ps_dn
        if g.mode == "full":
            c3 = D / (16.0 * g.bath.temperature ** 2 * inertia ** 2)
            up += c3 * p[:-1, None] * p[None, :-1]
            down += c3 * p[1:, None] * p[None, 1:]
            diag = diag - c3 * (p[:, None] ** 2 + p[None, :] ** 2)
    # complex coefficients avoid a float -> complex cast on every evaluation
    return diag.astype(complex), up.astype(complex), down.astype(complex)


def _aux_coefficients(g: GeneratorSpec, M: int):
    hbar, inertia = g.hbar, g.inertia
    nu, k = nu_k_grids(M)
    diag = (-1j * hbar / inertia) * nu * k * np.ones_like(nu * k)
    src = np.zeros_like(diag, dtype=float)    # source weight for nu -> nu +- 1, same for both directions
    fr = np.zeros_like(src)                   # friction source weight (sign differs per direction)
    if g.mode != "unitary_only":
        diag = diag - 2.0 * g.D / hbar ** 2
        src = src + g.D / hbar ** 2
        if g.mode in ("full", "no_angular_diffusion"):
            fr = fr + 0.5 * g.gamma * nu
        if g.mode == "full":
            c3 = hbar ** 2 * g.gamma / (16.0 * g.bath.temperature * inertia)
            src = src + c3 * (nu ** 2 - k ** 2 / 4.0)
            diag = diag - c3 * (2.0 * nu ** 2 + k ** 2 / 2.0)
    return diag, src, fr


def total_generator(g: GeneratorSpec, M: int | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Linear map state-array -> time derivative in the representation chosen by ``g``.

    Matrix representation works on (2M+1)^2 arrays, aux on (4M+1)^2 arrays.
    Coefficients are precomputed per truncation on first use.
    """
    cache = {}
    terms = [(k, 0.5 * (a - 1j * b)) for k, a, b in g.potential.terms]
    hbar = g.hbar
    dissipative = g.mode != "unitary_only"

    if g.representation == "matrix":
        def gen(x):
            n = x.shape[0]
            if n not in cache:
                cache[n] = _matrix_coefficients(g, (n - 1) // 2)
            diag, up, down = cache[n]
            out = diag * x
            if dissipative:
                out[1:, 1:] += up * x[:-1, :-1]
                out[:-1, :-1] += down * x[1:, 1:]
            for k, v in terms:
                if k >= n:
                    continue
                cv = np.conj(v)
                f, fc = -1j * v / hbar, -1j * cv / hbar
                out[k:] += f * x[:-k]
                out[:-k] += fc * x[k:]
                out[:, :-k] -= f * x[:, k:]
                out[:, k:] -= fc * x[:, :-k]
            return out
        return gen

    def gen(x):
        N = x.shape[0]
        if N not in cache:
            Mx = (N - 1) // 4
            diag, src, fr = _aux_coefficients(g, Mx)
            cache[N] = (diag.astype(complex), (src + fr).astype(complex),
                        (src - fr).astype(complex), valid_mask(Mx))
        diag, w_up, w_dn, mask = cache[N]
        out = diag * x
        if dissipative:
            out[:-2] += (w_up * x)[2:]     # source W_{nu+1} feeds nu
            out[2:] += (w_dn * x)[:-2]     # source W_{nu-1} feeds nu
        for q, a, b in g.potential.terms:
            if q >= N:
                continue
            bp = -0.5 * (b + 1j * a) / hbar
            bm = -0.5 * (b - 1j * a) / hbar
            # target (n, k) <- (n - q, k - q), (n + q, k - q), (n - q, k + q), (n + q, k + q)
            out[q:, q:] += bp * x[:-q, :-q]
            out[:-q, q:] -= bp * x[q:, :-q]
            out[q:, :-q] += bm * x[:-q, q:]
            out[:-q, :-q] -= bm * x[q:, q:]
        out *= mask
        return out
    return gen


def spectral_bound(g: GeneratorSpec, M: int) -> float:
    """Gershgorin-type upper bound on |eigenvalue| of the generator."""
    hbar, inertia = g.hbar, g.inertia
    bound = hbar * M ** 2 / (2 * inertia)
    bound += 2 * g.potential.sup_norm() / hbar
    if g.mode != "unitary_only":
        bound += 4 * g.D / hbar ** 2
    if g.mode in ("full", "no_angular_diffusion"):
        bound += 2 * g.gamma * (M + 1)
    if g.mode == "full":
        bound += hbar ** 2 * g.gamma / (16 * g.bath.temperature * inertia) * 6 * (M + 1) ** 2
    return bound


def coupling_offsets(g: GeneratorSpec) -> set:
    """Index offsets (di, dj) through which the matrix-form generator couples rho entries."""
    offs = {(0, 0)}
    if g.mode != "unitary_only":
        offs |= {(1, 1), (-1, -1)}
    for q, _, _ in g.potential.terms:
        offs |= {(q, 0), (-q, 0), (0, q), (0, -q)}
    return offs


def sparse_superoperator(g: GeneratorSpec, M: int):
    """The matrix-form generator as a sparse (2M+1)^2 x (2M+1)^2 matrix acting on rho.ravel().

    Built by probing the generator with comb states whose entries are spaced
    far enough apart that their images do not overlap.
    """
    import scipy.sparse as sp

    gen = total_generator(g.with_representation("matrix"))
    n = 2 * M + 1
    offs = coupling_offsets(g)
    stride = 2 * max(max(abs(a), abs(b)) for a, b in offs) + 1
    rows, cols, vals = [], [], []
    for ci in range(min(stride, n)):
        for cj in range(min(stride, n)):
            probe = np.zeros((n, n), dtype=complex)
            probe[ci::stride, cj::stride] = 1.0
            image = gen(probe)
            I, J = np.meshgrid(np.arange(ci, n, stride), np.arange(cj, n, stride), indexing="ij")
            for a, b in offs:
                ti, tj = I + a, J + b
                ok = (ti >= 0) & (ti < n) & (tj >= 0) & (tj < n)
                rows.append(ti[ok] * n + tj[ok])
                cols.append(I[ok] * n + J[ok])
                vals.append(image[ti[ok], tj[ok]])
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n * n, n * n))
