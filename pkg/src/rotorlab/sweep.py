"""Steady-state versus Gibbs-state distance across a temperature grid."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .liouvillian import GeneratorSpec
from .metrics import trace_distance
from .propagator import steady_state_escalating
from .state import PotentialSpec, auto_truncation, gibbs_state
from .units import ReducedUnits, thermal_truncation

log = logging.getLogger(__name__)

WORKERS_ENV = "ROTORLAB_WORKERS"


def worker_count(requested: int | None = None) -> int:
    """Pool size: explicit request, else $ROTORLAB_WORKERS, else the usable cores."""
    if requested:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass(frozen=True)
class SweepSettings:
    hbar: float = 1.0
    gamma: float = 1.0
    terms: tuple = ((1, 1.0, 0.0), (2, -1.0, 0.0))   # Fourier amplitudes in units of V0
    tol: float = 1e-9
    boundary_tol: float = 1e-8
    M_max: int = 160
    method: str = "auto"


@dataclass
class SweepPoint:
    temperature: float
    d1: float = float("nan")
    epsilon1: float = float("nan")
    epsilon2: float = float("nan")
    M: int = 0
    boundary: float = float("nan")
    min_eigenvalue: float = float("nan")
    leak_rate: float = float("nan")
    residual: float = float("nan")
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def sweep_point(temperature: float, settings: SweepSettings) -> SweepPoint:
    """Steady state seeded with the Gibbs state, basis raised until the boundary is empty."""
    u = ReducedUnits(temperature, settings.hbar, settings.gamma)
    bath = u.bath()
    V = u.potential(settings.terms)
    point = SweepPoint(temperature, epsilon1=bath.epsilon1, epsilon2=bath.epsilon2(V))
    try:
        g = GeneratorSpec(bath, V, "full")
        M0 = auto_truncation(V, bath, thermal_truncation(u.thermal_ratio), tol=1e-12, M_max=settings.M_max)
        ss = steady_state_escalating(g, lambda M: gibbs_state(V, bath, M, tol=1.0), M0,
                                     tol=settings.tol, boundary_tol=settings.boundary_tol,
                                     M_max=settings.M_max, method=settings.method)
        point.M = ss.M
        point.d1 = trace_distance(ss.state, gibbs_state(V, bath, ss.M, tol=1.0))
        point.boundary = ss.state.boundary_population()
        point.min_eigenvalue = ss.state.min_eigenvalue()
        point.leak_rate = ss.leak_rate
        point.residual = ss.residual
    except Exception as exc:  # recorded per point; the sweep carries on
        log.warning("sweep point T~=%g failed: %s", temperature, exc)
        point.error = f"{type(exc).__name__}: {exc}"
    return point


def _run_point(args):
    return sweep_point(*args)


def temperature_sweep(temperatures, settings: SweepSettings, workers: int | None = None) -> list[SweepPoint]:
    """Solve each point independently; results come back in input order."""
    temps = [float(t) for t in temperatures]
    n = min(worker_count(workers), len(temps))
    jobs = [(t, settings) for t in temps]
    if n <= 1:
        return [_run_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_run_point, jobs))


def local_slopes(temperatures, values) -> np.ndarray:
    """d log(value) / d log(T) by finite differences on the (possibly uneven) grid."""
    t = np.log(np.asarray(temperatures, dtype=float))
    v = np.log(np.asarray(values, dtype=float))
    if len(t) < 2:
        return np.full(len(t), np.nan)
    return np.gradient(v, t)


def fit_slope(temperatures, values, lo: float, hi: float) -> float:
    """Least-squares log-log slope over the points with lo <= T <= hi."""
    t = np.asarray(temperatures, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12)) & np.isfinite(v) & (v > 0)
    if sel.sum() < 2:
        raise ValueError(f"need at least two valid points in [{lo}, {hi}] for a slope fit")
    return float(np.polyfit(np.log(t[sel]), np.log(v[sel]), 1)[0])


def point_dict(p: SweepPoint) -> dict:
    return asdict(p)
