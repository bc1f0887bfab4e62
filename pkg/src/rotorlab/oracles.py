"""Closed-form solutions and analytic diagnostics used to check the integrator.

* free shearing of the auxiliary Wigner functions (V = 0, no bath),
* the frictionless-diffusion solution, a shear combined with a convolution
  over winding number l with Bessel-function kernels,
* the binomial free-rotor equilibrium and the exact detailed-balance state,
* the Gibbs-state residual of the dissipator and its small parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, gammasgn

from .liouvillian import GeneratorSpec, total_generator
from .metrics import trace_norm
from .special import bessel_i_scaled_all, sinc
from .state import BathParams, DensityMatrix, PotentialSpec, basis_m, gibbs_state
from .wigner import AuxWignerField, nu_k_grids, valid_mask

KERNEL_TAIL = 1e-12


class CutoffError(ValueError):
    """The requested winding cutoff drops more weight than allowed."""


def free_shear(field: AuxWignerField, t: float, hbar: float = 1.0, inertia: float = 1.0) -> AuxWignerField:
    """W_nu(alpha, t) = W_nu(alpha - nu hbar t / I, 0), i.e. c[nu, k] *= exp(-i k nu hbar t / I)."""
    nu, k = nu_k_grids(field.M)
    phase = np.exp(-1j * k * nu * hbar * t / inertia)
    return AuxWignerField(field.M, field.coeffs * phase)


# ---------------------------------------------------------------- diffusion


def _bessel_args(t: float, D: float, hbar: float, inertia: float, k):
    z0 = 2.0 * D * t / hbar ** 2
    zk = z0 * sinc(np.asarray(k, dtype=float) * hbar * t / (2.0 * inertia))
    return z0, zk


def kernel_weights(ell_max: int, t: float, D: float, k, hbar: float = 1.0, inertia: float = 1.0,
                   prefactor_hbar_power: int = 2, phase_sign: int = 1) -> np.ndarray:
    """2 pi times the k-th Fourier coefficient of K_l, for l = -ell_max..ell_max.

    Returns shape (2 ell_max + 1, len(k)).  The weights are

        exp(-2Dt/hbar^2) I_l(z_k) exp(+i k hbar t l / 2I),   z_k = (2Dt/hbar^2) sinc(k hbar t / 2I).

    ``prefactor_hbar_power=1`` (prefactor exp(-2Dt/hbar)) and ``phase_sign=-1``
    give the alternative form; the first fails the normalization for hbar != 1,
    the second disagrees with direct integration of the master equation.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    _, zk = _bessel_args(t, D, hbar, inertia, k)
    scaled = bessel_i_scaled_all(ell_max, zk)          # (ell_max + 1, len(k)), e^{-|z|} I_l(z)
    amp = scaled * np.exp(np.abs(zk) - 2.0 * D * t / hbar ** prefactor_hbar_power)
    ells = np.arange(-ell_max, ell_max + 1)
    bessel = amp[np.abs(ells)]                          # I_{-l} = I_l
    phase = np.exp(phase_sign * 1j * np.outer(ells, k) * hbar * t / (2.0 * inertia))
    return bessel * phase


def winding_cutoff(t: float, D: float, hbar: float = 1.0, tail: float = KERNEL_TAIL, cap: int | None = None) -> int:
    """Smallest L with exp(-z) I_L(z) < tail, z = 2Dt/hbar^2."""
    z0 = 2.0 * D * t / hbar ** 2
    if z0 == 0:
        return 0
    n = int(np.ceil(z0 + 10 * np.sqrt(z0) + 40))
    vals = bessel_i_scaled_all(n, z0)
    below = np.nonzero(vals < tail)[0]
    L = int(below[0]) if below.size else n
    return min(L, cap) if cap is not None else L


@dataclass(frozen=True)
class KernelTable:
    """K_l(alpha', t) on a uniform alpha' grid for l = -L..L."""

    alpha: np.ndarray
    ells: np.ndarray
    values: np.ndarray  # (2L+1, len(alpha))
    t: float

    @property
    def L(self) -> int:
        return int(self.ells[-1])

    def normalization(self) -> float:
        """sum_l integral K_l d alpha' (trapezoid on the periodic grid, exact for the band limit)."""
        d_alpha = 2 * np.pi / self.alpha.size
        return float(self.values.sum() * d_alpha)


def diffusion_kernel(ell, t: float, D: float, alpha, harmonics: int, hbar: float = 1.0,
                     inertia: float = 1.0, **form) -> np.ndarray:
    """Row K_l(alpha', t) on the given grid, harmonic sum truncated at |k| <= harmonics.

    Keyword arguments in ``form`` select the alternative forms of :func:`kernel_weights`.
    """
    ell = int(ell)
    k = np.arange(-harmonics, harmonics + 1)
    w = kernel_weights(abs(ell), t, D, k, hbar, inertia, **form)[ell + abs(ell)]
    alpha = np.asarray(alpha, dtype=float)
    vals = (np.exp(1j * np.outer(alpha, k)) @ w) / (2 * np.pi)
    if np.abs(vals.imag).max(initial=0.0) > 1e-10 * max(1.0, np.abs(vals.real).max(initial=0.0)):
        raise ArithmeticError("diffusion kernel is not real; harmonic range must be symmetric")
    return vals.real


def kernel_table(t: float, D: float, harmonics: int, n_alpha: int | None = None, L: int | None = None,
                 hbar: float = 1.0, inertia: float = 1.0, **form) -> KernelTable:
    n_alpha = n_alpha or 2 * harmonics + 2
    if n_alpha <= 2 * harmonics:
        raise ValueError("kernel grid too coarse for the harmonic cutoff")
    L = winding_cutoff(t, D, hbar) if L is None else L
    alpha = -np.pi + 2 * np.pi * np.arange(n_alpha) / n_alpha
    k = np.arange(-harmonics, harmonics + 1)
    w = kernel_weights(L, t, D, k, hbar, inertia, **form)
    values = (w @ np.exp(1j * np.outer(k, alpha))).real / (2 * np.pi)
    return KernelTable(alpha, np.arange(-L, L + 1), values, t)


def apply_diffusion_solution(field: AuxWignerField, t: float, D: float, hbar: float = 1.0,
                             inertia: float = 1.0, L: int | None = None, **form) -> AuxWignerField:
    """Exact frictionless-diffusion evolution (V = 0, Gamma = 0) of an aux field.

    c[nu, k](t) = exp(-i k nu hbar t / I) sum_l w_l(k) c[nu - l, k](0), the
    convolution in alpha done as a product of Fourier coefficients.  Rows
    pushed past |nu| <= M are dropped, matching the absorbing truncation.
    """
    M = field.M
    if t < 0 or D < 0:
        raise ValueError("need t >= 0 and D >= 0")
    if L is None:
        L = winding_cutoff(t, D, hbar, cap=2 * M)
    else:
        z0 = 2.0 * D * t / hbar ** 2
        tail = bessel_i_scaled_all(L + 1, z0)[L + 1] if z0 > 0 else 0.0
        if tail > 1e-10 and L < 2 * M:
            raise CutoffError(f"winding cutoff L={L} drops kernel weight {tail:.2e} at 2Dt/hbar^2={z0:.3g}")
    N = 4 * M + 1
    k = np.arange(-2 * M, 2 * M + 1)
    w = kernel_weights(L, t, D, k, hbar, inertia, **form)   # (2L+1, N)
    c = field.coeffs
    out = np.zeros_like(c)
    for i, ell in enumerate(range(-L, L + 1)):
        s = 2 * ell                                           # row shift in n = 2 nu
        if abs(s) >= N:
            continue
        if s >= 0:
            out[s:] += w[i] * c[:N - s]
        else:
            out[:s] += w[i] * c[-s:]
    out = free_shear(AuxWignerField(M, out * valid_mask(M)), t, hbar, inertia)
    return out


# ---------------------------------------------------------------- equilibria


def _log_binomial(x: float, y):
    """log|C(x, y)| and its sign for real x and array y, via the Gamma function."""
    y = np.asarray(y, dtype=float)
    a, b, c = x + 1.0, y + 1.0, x - y + 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = gammaln(a) - gammaln(b) - gammaln(c)
        sign = gammasgn(a) * gammasgn(b) * gammasgn(c)
    # 1/Gamma vanishes at non-positive integers
    zero = ((b <= 0) & (b == np.round(b))) | ((c <= 0) & (c == np.round(c)))
    logv = np.where(zero, -np.inf, logv)
    sign = np.where(zero, 0.0, sign)
    return logv, sign


@dataclass(frozen=True)
class BinomialProfile:
    """Populations C(4n, 2n + m) 8^(-n) with n = T I / hbar^2, before and after renormalization."""

    n: float
    raw_sum: float
    negative_weight: float
    state: DensityMatrix

    @property
    def identity_sum(self) -> float:
        """Value of the raw sum implied by sum_m C(4n, 2n + m) = 16^n on the unbounded lattice."""
        return 2.0 ** self.n


def binomial_profile(T: float, hbar: float, inertia: float, M: int) -> BinomialProfile:
    n = T * inertia / hbar ** 2
    if n <= 0:
        raise ValueError("T I / hbar^2 must be positive")
    m = basis_m(M)
    logv, sign = _log_binomial(4 * n, 2 * n + m)
    raw = sign * np.exp(logv - n * np.log(8.0))
    neg = float(-raw[raw < 0].sum())
    pops = np.clip(raw, 0.0, None)
    return BinomialProfile(n, float(raw.sum()), neg, DensityMatrix(np.diag(pops / pops.sum())))


def free_equilibrium(T: float, hbar: float = 1.0, inertia: float = 1.0, M: int = 48) -> DensityMatrix:
    """Approximate free-rotor equilibrium: populations proportional to C(4n, 2n + m), n = T I / hbar^2.

    The generalized binomial is negative for some |m| > 2n when 4n is not an
    integer; those entries are set to zero before renormalizing.
    """
    return binomial_profile(T, hbar, inertia, M).state


def detailed_balance_equilibrium(T: float, hbar: float = 1.0, inertia: float = 1.0, M: int = 48) -> DensityMatrix:
    """Exact steady state of the free-rotor dissipator, populations proportional to C(8n, 4n + m)^2.

    With V = 0 the dissipator only couples neighbouring populations, and the
    ratio of the rates m -> m+1 and m+1 -> m is (4n - m)^2 / (4n + m + 1)^2.
    """
    n = T * inertia / hbar ** 2
    m = basis_m(M)
    logv, _ = _log_binomial(8 * n, 4 * n + m)
    pops = np.exp(2 * (logv - logv.max()))   # exact zeros where 1/Gamma vanishes
    return DensityMatrix(np.diag(pops / pops.sum()))


# ---------------------------------------------------------------- Gibbs residual


@dataclass(frozen=True)
class GibbsResidual:
    residual: float        # || D rho_G ||_tr, dissipator only
    epsilon1: float
    epsilon2: float
    predicted: float       # || (hbar^2 Gamma / T^2 I) V''(alpha) rho_G ||_tr
    gamma: float
    state: DensityMatrix

    @property
    def scaled(self) -> float:
        return self.residual / self.gamma


def second_derivative_potential(V: PotentialSpec) -> PotentialSpec:
    return PotentialSpec(tuple((k, -k * k * a, -k * k * b) for k, a, b in V.terms), V0=V.V0)


def gibbs_residual(V: PotentialSpec, bath: BathParams, M: int, tol: float = 1e-10) -> GibbsResidual:
    """Apply the dissipator to the Gibbs state and compare with the small parameters."""
    rho = gibbs_state(V, bath, M, tol=tol)
    g = GeneratorSpec(bath, V, "full")
    diss = total_generator(g.with_mode("full"))
    unitary = total_generator(g.with_mode("unitary_only"))
    d = diss(rho.data) - unitary(rho.data)
    Vpp = second_derivative_potential(V).matrix(M)
    pref = bath.hbar ** 2 * bath.gamma / (bath.temperature ** 2 * bath.inertia)
    predicted = trace_norm(pref * (Vpp @ rho.data)) if not V.is_zero else 0.0
    return GibbsResidual(trace_norm(d), bath.epsilon1, bath.epsilon2(V), predicted, bath.gamma, rho)


def dissipator_on_gibbs(V: PotentialSpec, bath: BathParams, M: int, tol: float = 1e-10) -> np.ndarray:
    """Dissipator (generator minus its unitary part) applied to the Gibbs state of H = p^2/2I + V."""
    rho = gibbs_state(V, bath, M, tol=tol)
    g = GeneratorSpec(bath, V, "full")
    return total_generator(g)(rho.data) - total_generator(g.with_mode("unitary_only"))(rho.data)


def potential_residual_part(V: PotentialSpec, bath: BathParams, M: int, tol: float = 1e-10) -> float:
    """|| D rho_G(V) - D rho_G(0) ||_tr: the part of the Gibbs residual caused by the potential.

    The free part is O(epsilon1) and cancels in the difference, leaving the
    O(epsilon2) contribution of V'' to the departure from stationarity.
    """
    free = PotentialSpec.free(V.V0)
    return trace_norm(dissipator_on_gibbs(V, bath, M, tol) - dissipator_on_gibbs(free, bath, M, tol))
