"""Auxiliary Wigner functions W_nu(alpha) and the periodic Wigner function.

A state is stored as Fourier coefficients c[nu, k] of

    W_nu(alpha) = sum_k c[nu, k] exp(i k alpha),   c[nu, k] = rho[nu + k/2, nu - k/2] / 2pi,

on a dense (4M+1) x (4M+1) array indexed by n = 2 nu and k (offset by 2M).
Entries with n and k of different parity, or with nu +- k/2 outside
[-M, M], are structurally zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .special import sinc
from .state import DensityMatrix

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, order=True)
class HalfIndex:
    """nu = twice_nu / 2; odd twice_nu is a half-integer index."""

    twice_nu: int

    @classmethod
    def of(cls, nu: float) -> "HalfIndex":
        n = 2 * nu
        if n != int(n):
            raise ValueError(f"{nu!r} is not an integer or half-integer")
        return cls(int(n))

    @property
    def nu(self) -> float:
        return self.twice_nu / 2

    @property
    def is_half(self) -> bool:
        return self.twice_nu % 2 != 0


@lru_cache(maxsize=32)
def _index_maps(M: int):
    m = np.arange(-M, M + 1)
    m1, m2 = np.meshgrid(m, m, indexing="ij")
    n_idx = (m1 + m2 + 2 * M).ravel()
    k_idx = (m1 - m2 + 2 * M).ravel()
    mask = np.zeros((4 * M + 1, 4 * M + 1), dtype=bool)
    mask[n_idx, k_idx] = True
    mask.setflags(write=False)
    return n_idx, k_idx, mask


def valid_mask(M: int) -> np.ndarray:
    return _index_maps(M)[2]


@lru_cache(maxsize=32)
def nu_k_grids(M: int):
    """nu and k values broadcast over the coefficient array."""
    n = np.arange(-2 * M, 2 * M + 1)
    nu = (n / 2.0)[:, None]
    k = n.astype(float)[None, :]
    return nu, k


@dataclass(frozen=True)
class AuxWignerField:
    M: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        size = 4 * self.M + 1
        if c.shape != (size, size):
            raise ValueError(f"expected coefficient array of shape {(size, size)}, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def row(self, nu) -> tuple[np.ndarray, np.ndarray]:
        """(harmonics k, coefficients) of W_nu, restricted to stored entries."""
        h = nu if isinstance(nu, HalfIndex) else HalfIndex.of(nu)
        if abs(h.twice_nu) > 2 * self.M:
            raise IndexError(f"nu={h.nu} outside truncation M={self.M}")
        i = h.twice_nu + 2 * self.M
        sel = valid_mask(self.M)[i]
        ks = np.arange(-2 * self.M, 2 * self.M + 1)[sel]
        return ks, self.coeffs[i, sel]

    def evaluate(self, alpha) -> np.ndarray:
        """All W_nu(alpha); shape (4M+1, len(alpha)), first axis n = 2nu + 2M."""
        alpha = np.asarray(alpha, dtype=float)
        ks = np.arange(-2 * self.M, 2 * self.M + 1)
        basis = np.exp(1j * np.outer(ks, alpha))
        return (self.coeffs @ basis).real

    def norm(self) -> float:
        """Sum over integer m of 2pi c[m, 0]."""
        M = self.M
        k0 = self.coeffs[:, 2 * M]
        return float(TWO_PI * k0[::2].real.sum())

    def __add__(self, other: "AuxWignerField") -> "AuxWignerField":
        return AuxWignerField(self.M, self.coeffs + other.coeffs)

    def scaled(self, factor: complex) -> "AuxWignerField":
        return AuxWignerField(self.M, factor * self.coeffs)


def rho_to_coeffs(rho: np.ndarray) -> np.ndarray:
    M = (rho.shape[0] - 1) // 2
    n_idx, k_idx, _ = _index_maps(M)
    out = np.zeros((4 * M + 1, 4 * M + 1), dtype=complex)
    out[n_idx, k_idx] = rho.ravel() / TWO_PI
    return out


def coeffs_to_rho(coeffs: np.ndarray) -> np.ndarray:
    M = (coeffs.shape[0] - 1) // 4
    n_idx, k_idx, _ = _index_maps(M)
    n = 2 * M + 1
    return (TWO_PI * coeffs[n_idx, k_idx]).reshape(n, n)


def to_aux(rho) -> AuxWignerField:
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    M = (data.shape[0] - 1) // 2
    return AuxWignerField(M, rho_to_coeffs(data))


def from_aux(field: AuxWignerField) -> DensityMatrix:
    return DensityMatrix(coeffs_to_rho(field.coeffs))


def angle_grid(n_alpha: int) -> np.ndarray:
    """Uniform grid on [-pi, pi) with n_alpha points."""
    return -np.pi + TWO_PI * np.arange(n_alpha) / n_alpha


@dataclass(frozen=True)
class FullWigner:
    """W(alpha_i, m) on a uniform angle grid and integer momenta."""

    alpha: np.ndarray
    m: np.ndarray
    values: np.ndarray  # shape (len(m), len(alpha))

    @property
    def d_alpha(self) -> float:
        return TWO_PI / len(self.alpha)

    def momentum_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.d_alpha

    def angle_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0)

    def total(self) -> float:
        return float(self.values.sum() * self.d_alpha)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


class AliasingError(ValueError):
    pass


@lru_cache(maxsize=16)
def _sinc_matrix(M: int, m_window: int) -> np.ndarray:
    """sinc[(m - nu) pi] for integer m in the window and half-integer nu."""
    m = np.arange(-m_window, m_window + 1)[:, None]
    nu_half = (np.arange(-2 * M + 1, 2 * M, 2) / 2.0)[None, :]
    out = sinc((m - nu_half) * np.pi)
    out.setflags(write=False)
    return out


def split_contributions(field: AuxWignerField, n_alpha: int, m_window: int | None = None):
    """Integer-row part W_m(alpha) and half-integer sinc-sum part of W(alpha, m).

    Returns (alpha, m, integer_part, half_part), each part of shape (len(m), n_alpha).
    """
    M = field.M
    if n_alpha < 4 * M + 2:
        raise AliasingError(f"n_alpha={n_alpha} cannot resolve harmonics up to 2M={2 * M}; need >= {4 * M + 2}")
    m_window = M if m_window is None else m_window
    if m_window < M:
        raise ValueError("m_window must cover the basis")
    alpha = angle_grid(n_alpha)
    rows = field.evaluate(alpha)
    integer_rows = rows[0::2]     # nu = -M .. M
    half_rows = rows[1::2]        # nu = -M + 1/2 .. M - 1/2
    m = np.arange(-m_window, m_window + 1)
    integer_part = np.zeros((m.size, n_alpha))
    integer_part[m_window - M:m_window + M + 1] = integer_rows
    half_part = _sinc_matrix(M, m_window) @ half_rows
    return alpha, m, integer_part, half_part


def full_wigner(rho, n_alpha: int | None = None, m_window: int | None = None) -> FullWigner:
    """Periodic Wigner function on integer momenta via the sinc resummation."""
    field = rho if isinstance(rho, AuxWignerField) else to_aux(rho)
    n_alpha = 4 * field.M + 2 if n_alpha is None else n_alpha
    alpha, m, ip, hp = split_contributions(field, n_alpha, m_window)
    return FullWigner(alpha, m, ip + hp)


def marginals(field: AuxWignerField, n_alpha: int | None = None):
    """(momentum distribution over m = -M..M, angle grid, angle density)."""
    M = field.M
    n_alpha = 4 * M + 2 if n_alpha is None else n_alpha
    momentum = (TWO_PI * field.coeffs[0::2, 2 * M]).real
    alpha = angle_grid(n_alpha)
    ks = np.arange(-2 * M, 2 * M + 1)
    # sum over every nu of W_nu(alpha)
    density = (field.coeffs.sum(axis=0) @ np.exp(1j * np.outer(ks, alpha))).real
    return momentum, alpha, density
