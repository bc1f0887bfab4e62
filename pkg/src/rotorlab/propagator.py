"""Time integration (RK4, fixed or step-doubling adaptive), observables, steady states."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .liouvillian import GeneratorSpec, spectral_bound, total_generator
from .metrics import trace_distance, trace_norm
from .state import DensityMatrix, hamiltonian
from .wigner import AuxWignerField, coeffs_to_rho, full_wigner, rho_to_coeffs

log = logging.getLogger(__name__)

RK4_STABILITY = 2.5  # conservative radius inside the RK4 stability region


class NumericalAbort(RuntimeError):
    """Positivity or leakage violated during evolution."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg, history):
        super().__init__(msg)
        self.history = history


@dataclass
class EvolutionConfig:
    t_final: float
    dt: float | None = None
    snapshot_times: tuple = ()
    integrator: str = "rk4_fixed"
    tolerance: float = 1e-8
    record_interval: float | None = None
    n_alpha: int | None = None
    track_wigner_min: bool = False
    positivity_abort: float = -1e-6
    leakage_abort: float = 1e-8
    check_leakage: bool = True

    def __post_init__(self):
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.integrator not in ("rk4_fixed", "rk4_adaptive"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if not 1e-14 < self.tolerance < 1e-3:
            raise ValueError("adaptive tolerance must lie in (1e-14, 1e-3)")
        snaps = tuple(sorted(float(t) for t in self.snapshot_times))
        if snaps and (snaps[0] < 0 or snaps[-1] > self.t_final * (1 + 1e-12)):
            raise ValueError("snapshot times must lie in [0, t_final]")
        self.snapshot_times = snaps


@dataclass
class ObservableSeries:
    hbar: float = 1.0
    t: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    p_mean: list = field(default_factory=list)
    p2_mean: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    purity: list = field(default_factory=list)
    min_eigenvalue: list = field(default_factory=list)
    wigner_min: list = field(default_factory=list)
    leakage: list = field(default_factory=list)
    distance: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)   # name -> values from user observers

    COLUMNS = ("t", "trace", "p_mean", "p2_mean", "energy", "purity", "min_eigenvalue",
               "wigner_min", "leakage", "distance")

    def columns(self) -> tuple:
        return self.COLUMNS + tuple(self.extra)

    def as_arrays(self) -> dict:
        out = {c: np.asarray(getattr(self, c), dtype=float) for c in self.COLUMNS}
        out.update({k: np.asarray(v, dtype=float) for k, v in self.extra.items()})
        return out

    def rows(self):
        cols = self.as_arrays()
        names = self.columns()
        for i in range(len(self.t)):
            yield tuple(cols[c][i] for c in names)


@dataclass
class Trajectory:
    final: DensityMatrix
    series: ObservableSeries
    snapshots: dict  # time -> DensityMatrix
    steps: int = 0
    max_leakage: float = 0.0
    min_eigenvalue: float = 0.0


def suggest_dt(g: GeneratorSpec, M: int, safety: float = 0.8) -> float:
    return safety * RK4_STABILITY / spectral_bound(g, M)


def rk4_step(gen, y, h):
    """Classical fourth-order Runge-Kutta step for dy/dt = gen(y)."""
    k = gen(y)
    acc = k.copy()
    k = gen(y + (0.5 * h) * k)
    acc += 2.0 * k
    k = gen(y + (0.5 * h) * k)
    acc += 2.0 * k
    k = gen(y + h * k)
    acc += k
    acc *= h / 6.0
    acc += y
    return acc


def _to_array(state, representation: str):
    if isinstance(state, AuxWignerField):
        rho = coeffs_to_rho(state.coeffs)
    elif isinstance(state, DensityMatrix):
        rho = state.data
    else:
        rho = np.asarray(state, dtype=complex)
    rho = np.array(rho, dtype=complex)
    M = (rho.shape[0] - 1) // 2
    y = rho if representation == "matrix" else rho_to_coeffs(rho)
    return y, M


def _rho_of(y, representation):
    return y if representation == "matrix" else coeffs_to_rho(y)


class _Recorder:
    def __init__(self, g: GeneratorSpec, M: int, cfg: EvolutionConfig, reference, observers=None):
        self.g = g
        self.cfg = cfg
        self.series = ObservableSeries(hbar=g.hbar)
        self.observers = dict(observers or {})
        for name in self.observers:
            if name in ObservableSeries.COLUMNS:
                raise ValueError(f"observer name {name!r} clashes with a built-in column")
            self.series.extra[name] = []
        self.H = hamiltonian(g.potential, M, g.hbar, g.inertia)
        self.p = g.hbar * np.arange(-M, M + 1)
        self.reference = reference
        self.max_leak = 0.0
        self.min_eig = np.inf
        self.n_alpha = cfg.n_alpha or 4 * M + 2

    def check(self, rho, t):
        d = np.diag(rho).real
        leak = float(d[0] + d[-1])
        self.max_leak = max(self.max_leak, leak)
        lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        self.min_eig = min(self.min_eig, lam)
        if lam < self.cfg.positivity_abort:
            raise NumericalAbort(f"positivity violated at t={t:.6g}: min eigenvalue {lam:.3e}")
        if self.cfg.check_leakage and leak > self.cfg.leakage_abort:
            raise NumericalAbort(f"boundary population {leak:.3e} at t={t:.6g} exceeds "
                                 f"{self.cfg.leakage_abort:.0e}; increase M")
        return leak, lam

    def record(self, rho, t):
        leak, lam = self.check(rho, t)
        s = self.series
        d = np.diag(rho).real
        s.t.append(t)
        s.trace.append(float(d.sum()))
        s.p_mean.append(float(self.p @ d))
        s.p2_mean.append(float((self.p ** 2) @ d))
        s.energy.append(float(np.real(np.vdot(self.H.conj().T, rho))))
        s.purity.append(float(np.vdot(rho, rho).real))
        s.min_eigenvalue.append(lam)
        s.leakage.append(self.max_leak)
        if self.cfg.track_wigner_min:
            s.wigner_min.append(full_wigner(rho, self.n_alpha).min())
        else:
            s.wigner_min.append(np.nan)
        if self.reference is not None:
            s.distance.append(trace_distance(rho, self.reference))
        else:
            s.distance.append(np.nan)
        for name, fn in self.observers.items():
            s.extra[name].append(float(fn(rho)))


def _event_times(cfg: EvolutionConfig):
    events = set(cfg.snapshot_times)
    if cfg.record_interval:
        n = int(np.floor(cfg.t_final / cfg.record_interval + 1e-9))
        events.update(i * cfg.record_interval for i in range(n + 1))
    events.add(0.0)
    events.add(cfg.t_final)
    return sorted(events)


def evolve(state, g: GeneratorSpec, cfg: EvolutionConfig, reference=None, observers=None) -> Trajectory:
    """Integrate the master equation from ``state`` to ``cfg.t_final``.

    Observables are recorded at t = 0, every ``record_interval`` and at each
    snapshot time; steps are shortened to land on these times exactly.
    ``observers`` maps extra column names to functions of the density matrix.
    """
    rep = g.representation
    y, M = _to_array(state, rep)
    gen = total_generator(g)
    ref = reference.data if isinstance(reference, DensityMatrix) else reference
    rec = _Recorder(g, M, cfg, ref, observers)
    h_max = suggest_dt(g, M, safety=1.0)
    dt = cfg.dt if cfg.dt is not None else suggest_dt(g, M)
    if dt > h_max * 1.0001:
        raise ValueError(f"dt={dt:.3g} exceeds the RK4 stability limit {h_max:.3g} for M={M}")
    snapshots = {}
    snap_set = set(cfg.snapshot_times)
    t = 0.0
    steps = 0
    h = dt
    for target in _event_times(cfg):
        while target - t > 1e-12 * max(1.0, abs(target)):
            if cfg.integrator == "rk4_fixed":
                step = min(dt, target - t)
                # avoid a sliver step at the end
                if target - t - step < 1e-3 * dt:
                    step = target - t
                y = rk4_step(gen, y, step)
                t = target if step == target - t else t + step
                steps += 1
            else:
                step = min(h, target - t, h_max)
                y_full = rk4_step(gen, y, step)
                y_half = rk4_step(gen, rk4_step(gen, y, 0.5 * step), 0.5 * step)
                err = np.abs(y_half - y_full).max() / 15.0
                steps += 3
                if err <= cfg.tolerance or step < 1e-12:
                    y = y_half + (y_half - y_full) / 15.0
                    t = target if step == target - t else t + step
                factor = 0.9 * (cfg.tolerance / max(err, 1e-300)) ** 0.2
                h = step * min(2.0, max(0.2, factor))
        rho = _rho_of(y, rep)
        rec.record(rho, target)
        if target in snap_set:
            snapshots[target] = DensityMatrix(rho)
    final = DensityMatrix(_rho_of(y, rep))
    return Trajectory(final, rec.series, snapshots, steps, rec.max_leak, rec.min_eig)


@dataclass
class SteadyState:
    state: DensityMatrix
    time: float
    residual: float
    history: list
    leak_rate: float = 0.0   # -tr(L rho): trace lost through the truncation boundary per unit time

    @property
    def M(self) -> int:
        return self.state.M


def generator_residual(rho, g: GeneratorSpec) -> float:
    """Trace norm of the full generator (matrix form) applied to rho."""
    x = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    gen = total_generator(g.with_representation("matrix"))
    return trace_norm(gen(x))


def _conditional_residual(gen, y):
    """Residual of the trace-renormalised flow, L rho - tr(L rho) rho, and the leak rate."""
    d = gen(y)
    leak = -float(np.trace(d).real)
    return trace_norm(d + leak * y), leak


STEADY_METHODS = ("propagate", "direct", "auto")
PROPAGATION_BUDGET = 1e8   # steps x entries (about 20 s here) before "auto" switches to the direct solve


def find_steady_state(g: GeneratorSpec, seed, tol: float = 1e-8, max_time: float = 1e3,
                      check_interval: float | None = None, dt: float | None = None,
                      leakage_abort: float = 1e-8, method: str = "propagate") -> SteadyState:
    """Propagate ``seed`` until the generator residual drops below ``tol``.

    The absorbing truncation makes the slowest mode decay at the small rate
    -tr(L rho) instead of being exactly stationary.  The trace is restored
    after every chunk and convergence is judged on || L rho - tr(L rho) rho ||_tr,
    which vanishes for that quasi-stationary state; the leak rate is reported.

    ``method="direct"`` finds the same state by inverse iteration on the sparse
    generator; ``"auto"`` uses it when explicit propagation would be too stiff.
    """
    if method not in STEADY_METHODS:
        raise ValueError(f"unknown steady-state method {method!r}")
    if g.gamma <= 0:
        raise ValueError("steady-state search needs a dissipative generator (gamma > 0)")
    g = g.with_representation("matrix")
    y, M = _to_array(seed, "matrix")
    y = y / np.trace(y).real
    gen = total_generator(g)
    dt = dt or suggest_dt(g, M)
    if method == "auto":
        steps = 20.0 / (g.gamma * dt)
        method = "direct" if steps * y.size > PROPAGATION_BUDGET else "propagate"
    if method == "direct":
        return _steady_state_direct(g, y, gen, tol, leakage_abort)
    check_interval = check_interval or max(0.5 / g.gamma, 10 * dt)
    n_chunk = max(1, int(np.ceil(check_interval / dt)))
    h = check_interval / n_chunk
    t = 0.0
    history = []
    while True:
        res, leak = _conditional_residual(gen, y)
        history.append((t, res))
        d = np.diag(y).real
        if d[0] + d[-1] > leakage_abort:
            raise NumericalAbort(f"boundary population {d[0] + d[-1]:.3e} during steady-state search; increase M")
        if res < tol:
            return SteadyState(DensityMatrix(y), t, res, history, leak)
        if t >= max_time:
            raise ConvergenceError(f"no steady state after t={t:.4g}: residual {res:.3e} > {tol:.1e}", history)
        for _ in range(n_chunk):
            y = rk4_step(gen, y, h)
        y = y / np.trace(y).real
        t += check_interval
        log.debug("steady-state search t=%.4g residual=%.3e", t, res)


def _steady_state_direct(g, y, gen, tol, leakage_abort, max_iter: int = 8) -> SteadyState:
    """Inverse iteration x <- L^{-1} x for the generator eigenvector closest to zero."""
    from scipy.sparse.linalg import splu

    from .liouvillian import sparse_superoperator

    M = (y.shape[0] - 1) // 2
    lu = splu(sparse_superoperator(g, M).tocsc())
    history = []
    for it in range(max_iter):
        y = lu.solve(y.ravel()).reshape(y.shape)
        y = 0.5 * (y + y.conj().T)
        y = y / np.trace(y).real
        res, leak = _conditional_residual(gen, y)
        history.append((it, res))
        if res < tol:
            break
    else:
        raise ConvergenceError(f"inverse iteration stalled at residual {res:.3e} > {tol:.1e}", history)
    d = np.diag(y).real
    if d[0] + d[-1] > leakage_abort:
        raise NumericalAbort(f"boundary population {d[0] + d[-1]:.3e} in steady state; increase M")
    return SteadyState(DensityMatrix(y), np.inf, res, history, leak)


def pad_state(rho, M_new: int) -> np.ndarray:
    """Embed a state of truncation M into a larger basis M_new (zeros outside)."""
    x = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    M = (x.shape[0] - 1) // 2
    if M_new < M:
        raise ValueError("cannot pad to a smaller basis")
    out = np.zeros((2 * M_new + 1, 2 * M_new + 1), dtype=complex)
    o = M_new - M
    out[o:o + x.shape[0], o:o + x.shape[0]] = x
    return out


def steady_state_escalating(g: GeneratorSpec, seed_fn, M_start: int, tol: float = 1e-8,
                            boundary_tol: float = 1e-8, M_max: int = 160, max_time: float = 1e3,
                            method: str = "auto") -> SteadyState:
    """Steady state with the basis raised until its boundary population is below ``boundary_tol``.

    ``seed_fn(M)`` builds the seed for a given truncation; after the first
    solve the previous steady state, padded, seeds the next one.  The next M
    comes from a power-law fit of boundary population against M.
    """
    M = M_start
    prev = None
    points = []
    while True:
        seed = seed_fn(M) if prev is None else pad_state(prev.state, M)
        ss = find_steady_state(g, seed, tol=tol, max_time=max_time, leakage_abort=1.0, method=method)
        edge = ss.state.boundary_population()
        points.append((M, edge))
        log.info("steady state at M=%d: boundary population %.3e", M, edge)
        if edge <= boundary_tol:
            return ss
        if M >= M_max:
            raise NumericalAbort(f"boundary population {edge:.3e} > {boundary_tol:.0e} at the largest basis M={M}")
        if len(points) >= 2 and points[-2][1] > edge > 0:
            (m1, e1), (m2, e2) = points[-2], points[-1]
            power = np.clip(np.log(e1 / e2) / np.log(m2 / m1), 1.0, 40.0)
            target = m2 * (e2 / (0.3 * boundary_tol)) ** (1.0 / power)
        else:
            target = 1.5 * M
        M = int(min(M_max, max(M + 2, np.ceil(target))))
        prev = ss


def wigner_min_tracker(snapshots, n_alpha: int | None = None) -> list:
    """Minimum of the full Wigner function per snapshot (dict or sequence)."""
    items = snapshots.items() if isinstance(snapshots, dict) else enumerate(snapshots)
    out = []
    for key, s in items:
        fw = full_wigner(s, n_alpha)
        out.append((key, fw.min()))
    return out
