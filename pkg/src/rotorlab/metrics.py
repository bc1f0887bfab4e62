"""Distances and coherence measures between rotor states."""

from __future__ import annotations

import numpy as np

from .state import DensityMatrix


def _arr(x) -> np.ndarray:
    return x.data if isinstance(x, DensityMatrix) else np.asarray(x)


def trace_norm(a) -> float:
    """Sum of singular values; Hermitian inputs use the eigenvalue route."""
    a = _arr(a)
    if np.allclose(a, a.conj().T, atol=1e-14, rtol=0):
        return float(np.abs(np.linalg.eigvalsh(0.5 * (a + a.conj().T))).sum())
    return float(np.linalg.svd(a, compute_uv=False).sum())


def trace_distance(rho1, rho2) -> float:
    """d1 = (1/2) tr|rho1 - rho2|."""
    a, b = _arr(rho1), _arr(rho2)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def fidelity(rho1, rho2) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2."""
    a, b = _arr(rho1), _arr(rho2)
    for x, y in ((a, b), (b, a)):
        w, v = np.linalg.eigh(0.5 * (x + x.conj().T))
        # sqrt of round-off eigenvalues dominates the error for pure states
        if w[-1] > 1 - 1e-12 and abs(w[:-1]).sum() < 1e-12:
            psi = v[:, -1]
            return float(np.vdot(psi, y @ psi).real * w[-1])
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    sa = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    inner = sa @ b @ sa
    ev = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(ev, 0, None))) ** 2)


def angle_kernel(rho, alpha) -> np.ndarray:
    """rho(alpha, alpha') = <alpha|rho|alpha'> on a grid."""
    a = _arr(rho)
    M = (a.shape[0] - 1) // 2
    m = np.arange(-M, M + 1)
    u = np.exp(1j * np.outer(alpha, m)) / np.sqrt(2 * np.pi)
    return u @ a @ u.conj().T


def cross_coherence(rho, center_a: float = np.pi / 2, center_b: float = -np.pi / 2,
                    halfwidth: float = np.pi / 4, n_grid: int = 256) -> float:
    """L2 norm of <alpha|rho|alpha'> with alpha near center_a and alpha' near center_b.

    Measures coherence between two angular regions, e.g. the two branches of
    a superposition of wave packets.
    """
    alpha = -np.pi + 2 * np.pi * np.arange(n_grid) / n_grid
    da = 2 * np.pi / n_grid

    def near(c):
        d = np.angle(np.exp(1j * (alpha - c)))
        return np.abs(d) <= halfwidth

    K = angle_kernel(rho, alpha)
    block = K[np.ix_(near(center_a), near(center_b))]
    return float(np.sqrt(np.sum(np.abs(block) ** 2)) * da)
