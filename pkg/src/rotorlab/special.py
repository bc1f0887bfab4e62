"""Special functions: exponentially scaled modified Bessel functions and sinc."""

from __future__ import annotations

import math

import numpy as np

_BIG = 1e250


def _miller_start(nmax: int, xmax: float) -> int:
    # I_N / I_n must be negligible at the start order for every requested n
    return int(nmax + 30 + math.sqrt(120.0 * (xmax + 1.0)) + xmax ** 0.5 * 4)


def bessel_i_scaled_all(nmax: int, x) -> np.ndarray:
    """Return ``exp(-|x|) * I_n(x)`` for n = 0..nmax.

    Uses downward Miller recurrence normalised by the identity
    ``I_0(x) + 2 * sum_{n>=1} I_n(x) = exp(x)``. Negative arguments are
    handled through ``I_n(-x) = (-1)^n I_n(x)``.

    The result has shape ``(nmax + 1,) + np.shape(x)``.
    """
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    x = np.asarray(x, dtype=float)
    shape = x.shape
    ax = np.abs(x).ravel()
    sign = np.sign(x).ravel()
    out = np.zeros((nmax + 1, ax.size))
    zero = ax == 0.0
    out[0, zero] = 1.0
    live = ~zero
    if np.any(live):
        xs = ax[live]
        start = _miller_start(nmax, float(xs.max()))
        two_over_x = 2.0 / xs
        upper = np.zeros_like(xs)          # I_{n+1}
        cur = np.full_like(xs, 1e-300)      # I_n, arbitrary seed
        total = np.zeros_like(xs)
        stored = np.zeros((nmax + 1, xs.size))
        for n in range(start, 0, -1):
            lower = n * two_over_x * cur + upper
            total += 2.0 * cur
            if n <= nmax:
                stored[n] = cur
            upper, cur = cur, lower
            big = np.abs(cur) > _BIG
            if np.any(big):
                scale = np.where(big, 1.0 / _BIG, 1.0)
                cur = cur * scale
                upper = upper * scale
                total = total * scale
                stored = stored * scale
        stored[0] = cur
        total += cur
        out[:, live] = stored / total
    if np.any(sign < 0):
        odd = (np.arange(nmax + 1) % 2 == 1)[:, None]
        out = np.where(odd & (sign < 0)[None, :], -out, out)
    return out.reshape((nmax + 1,) + shape)


def bessel_i_scaled(order: int, x):
    """``exp(-|x|) * I_order(x)`` for integer order (negative orders allowed)."""
    order = abs(int(order))
    vals = bessel_i_scaled_all(order, x)[order]
    return float(vals) if np.ndim(vals) == 0 else vals


def sinc(x):
    """Unnormalised sinc, sin(x)/x."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)
