"""Turn a ScenarioConfig into states and generators, run it, and write its artifacts."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, to_dict
from .export import SCHEMAS, wigner_rows, write_csv, write_manifest
from .liouvillian import GeneratorSpec
from .metrics import cross_coherence, trace_distance
from .propagator import (EvolutionConfig, evolve, find_steady_state, steady_state_escalating,
                         suggest_dt)
from .state import (BathParams, DensityMatrix, PotentialSpec, TruncationError, auto_truncation,
                    build_wavepacket, gibbs_state, superpose, wavepacket_amplitudes)
from .sweep import SweepSettings, fit_slope, local_slopes, temperature_sweep
from .units import ReducedUnits, revival_time, thermal_truncation
from .wigner import full_wigner, marginals, to_aux

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Resolved:
    """Internal-unit objects derived from a config."""

    units: ReducedUnits
    bath: BathParams
    potential: PotentialSpec
    generator: GeneratorSpec
    M: int


def _units(cfg: ScenarioConfig) -> ReducedUnits:
    u = cfg.units
    return ReducedUnits(u.temperature, u.hbar, u.gamma, u.V0)


def _initial_min_M(cfg: ScenarioConfig, M_start: int, M_max: int = 400) -> int:
    ini = cfg.initial
    if ini.kind == "momentum":
        return max(M_start, abs(ini.m) + 4)
    if ini.kind in ("wavepacket", "superposition"):
        M = M_start
        while M <= M_max:
            try:
                wavepacket_amplitudes(ini.sigma, 0.0, M)
                return M
            except TruncationError:
                M += 4
        raise TruncationError(f"wave packet sigma={ini.sigma} needs M > {M_max}")
    return M_start


def resolve(cfg: ScenarioConfig) -> Resolved:
    units = _units(cfg)
    bath = units.bath()
    V = units.potential(cfg.potential)
    g = GeneratorSpec(bath, V, cfg.evolution.mode, cfg.evolution.representation)
    M = cfg.evolution.M
    if M == "auto":
        M = thermal_truncation(units.thermal_ratio)
        if cfg.initial.kind == "gibbs":
            T0 = (cfg.initial.temperature or cfg.units.temperature) * units.V0
            M = auto_truncation(V, BathParams(T0, bath.gamma, 1.0, bath.hbar), M, tol=1e-12)
        if cfg.evolution.mode != "unitary_only":
            M = auto_truncation(V, bath, M, tol=1e-12)
        M = _initial_min_M(cfg, M)
    return Resolved(units, bath, V, g, int(M))


def initial_state(cfg: ScenarioConfig, r: Resolved) -> DensityMatrix:
    ini, M = cfg.initial, r.M
    if ini.kind == "wavepacket":
        return build_wavepacket(ini.sigma, ini.alpha0, M)
    if ini.kind == "superposition":
        weights = ini.weights or (1.0,) * len(ini.centers)
        return superpose([wavepacket_amplitudes(ini.sigma, c, M) for c in ini.centers], weights)
    if ini.kind == "gibbs":
        T0 = (ini.temperature or cfg.units.temperature) * r.units.V0
        return gibbs_state(r.potential, BathParams(T0, r.bath.gamma, 1.0, r.bath.hbar), M, tol=1e-8)
    return DensityMatrix.momentum_eigenstate(ini.m, M)


def snapshot_times(cfg: ScenarioConfig, r: Resolved) -> list[float]:
    """Reduced snapshot times: explicit ones plus fractions of the revival time."""
    t_rev = r.units.reduced_time(revival_time(r.bath.hbar, r.bath.inertia))
    times = set(float(t) for t in cfg.outputs.snapshot_times)
    times.update(float(f) * t_rev for f in cfg.outputs.revival_fractions)
    out = sorted(times)
    if out and out[-1] > cfg.evolution.t_final * (1 + 1e-12):
        raise ValueError(f"snapshot at t~={out[-1]:.6g} lies beyond t_final={cfg.evolution.t_final}")
    return [min(t, cfg.evolution.t_final) for t in out]


# per-observable conversion from internal units to units of V0 and sqrt(V0 I)
def _scale(name: str, V0: float) -> float:
    return {"p_mean": 1 / np.sqrt(V0), "p2_mean": 1 / V0, "energy": 1 / V0}.get(name, 1.0)


@dataclass
class RunResult:
    directory: Path
    manifest: dict
    files: list


def run_evolve(cfg: ScenarioConfig, outdir=None) -> RunResult:
    t_wall = time.perf_counter()
    r = resolve(cfg)
    u = r.units
    rho0 = initial_state(cfg, r)
    snaps_red = snapshot_times(cfg, r)
    internal = {u.internal_time(t): t for t in snaps_red}
    obs = cfg.outputs.observables
    n_alpha = cfg.outputs.n_alpha or 4 * r.M + 2
    ecfg = EvolutionConfig(
        t_final=u.internal_time(cfg.evolution.t_final),
        dt=u.internal_time(cfg.evolution.dt) if cfg.evolution.dt else None,
        snapshot_times=tuple(internal),
        integrator=cfg.evolution.integrator,
        tolerance=cfg.evolution.tolerance,
        record_interval=u.internal_time(cfg.outputs.record_interval) if cfg.outputs.record_interval else None,
        n_alpha=n_alpha,
        track_wigner_min="wigner_min" in obs,
    )
    reference = gibbs_state(r.potential, r.bath, r.M, tol=1.0) if "distance_gibbs" in obs else None
    observers = {"coherence": cross_coherence} if "coherence" in obs else None
    traj = evolve(rho0, r.generator, ecfg, reference=reference, observers=observers)

    out = Path(outdir or cfg.output_directory)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    arrays = traj.series.as_arrays()
    arrays["distance_gibbs"] = arrays["distance"]
    cols = [c for c in obs]
    t_red = arrays["t"] / u.time_scale
    rows = ((t_red[i], *(arrays[c][i] * _scale(c, u.V0) for c in cols)) for i in range(len(t_red)))
    files.append(write_csv(out / "observables.csv", ["t", *cols], rows))

    states = {0.0: rho0, cfg.evolution.t_final: traj.final}
    for ti, tr in internal.items():
        states[tr] = traj.snapshots[ti]
    if snaps_red:
        def wig():
            for t in snaps_red:
                fw = full_wigner(states[t], n_alpha)
                yield from wigner_rows(t, fw.alpha, fw.m, fw.values)
        files.append(write_csv(out / "wigner_snapshots.csv", ["t", "alpha", "m", "W"], wig()))
    mom, ang = [], []
    for t in sorted(states):
        p, alpha, dens = marginals(to_aux(states[t]), n_alpha)
        mom.extend((t, m, v) for m, v in zip(range(-r.M, r.M + 1), p))
        ang.extend((t, a, v) for a, v in zip(alpha, dens))
    files.append(write_csv(out / "marginals_momentum.csv", ["t", "m", "P"], mom))
    files.append(write_csv(out / "marginals_angle.csv", ["t", "alpha", "P"], ang))

    dt = ecfg.dt or suggest_dt(r.generator, r.M)
    manifest = {
        "kind": "evolve",
        "package_version": __version__,
        "config": to_dict(cfg),
        "resolved": _resolved_block(r, n_alpha) | {
            "dt_internal": dt, "dt_reduced": u.reduced_time(dt), "steps": traj.steps,
            "snapshot_times": snaps_red},
        "diagnostics": {"leakage_max": traj.max_leakage, "positivity_min": traj.min_eigenvalue,
                        "trace_final": traj.final.trace(),
                        "wall_time_s": round(time.perf_counter() - t_wall, 3)},
        "files": {f.name: SCHEMAS.get(f.name, "") for f in files},
    }
    write_manifest(out / "manifest.yaml", manifest)
    return RunResult(out, manifest, files)


def _resolved_block(r: Resolved, n_alpha: int | None) -> dict:
    b = r.bath
    return {"M": r.M, "N_alpha": n_alpha,
            "internal_units": {"hbar": b.hbar, "inertia": b.inertia, "V0": r.units.V0,
                               "temperature": b.temperature, "gamma": b.gamma, "diffusion": b.diffusion,
                               "time_per_reduced_time": r.units.time_scale},
            "potential_terms": [list(t) for t in r.potential.terms],
            "epsilon1": b.epsilon1, "epsilon2": b.epsilon2(r.potential)}


def run_steady(cfg: ScenarioConfig, outdir=None) -> RunResult:
    t_wall = time.perf_counter()
    r = resolve(cfg)
    st = cfg.steady
    V, bath, g = r.potential, r.bath, r.generator.with_mode("full")
    if cfg.evolution.M == "auto":
        ss = steady_state_escalating(g, lambda M: gibbs_state(V, bath, M, tol=1.0), r.M, tol=st.tol,
                                     boundary_tol=st.boundary_tol, M_max=st.M_max,
                                     max_time=st.max_time, method=st.method)
    else:
        ss = find_steady_state(g, gibbs_state(V, bath, r.M, tol=1.0), tol=st.tol, max_time=st.max_time,
                               leakage_abort=st.boundary_tol, method=st.method)
    M = ss.M
    rg = gibbs_state(V, bath, M, tol=1.0)
    d1 = trace_distance(ss.state, rg)
    n_alpha = cfg.outputs.n_alpha or 4 * M + 2
    out = Path(outdir or cfg.output_directory)
    out.mkdir(parents=True, exist_ok=True)
    summary = [("d1_gibbs", d1), ("M", M), ("residual", ss.residual), ("leak_rate", ss.leak_rate),
               ("boundary_population", ss.state.boundary_population()),
               ("min_eigenvalue", ss.state.min_eigenvalue()),
               ("epsilon1", bath.epsilon1), ("epsilon2", bath.epsilon2(V))]
    files = [write_csv(out / "steady_summary.csv", ["quantity", "value"], summary)]
    files.append(write_csv(out / "steady_populations.csv", ["m", "steady", "gibbs"],
                           zip(range(-M, M + 1), ss.state.populations(), rg.populations())))
    ws, wg = full_wigner(ss.state, n_alpha), full_wigner(rg, n_alpha)
    rows = ((a, int(m), ws.values[i, j], wg.values[i, j])
            for i, m in enumerate(ws.m) for j, a in enumerate(ws.alpha))
    files.append(write_csv(out / "wigner_steady.csv", ["alpha", "m", "W_steady", "W_gibbs"], rows))
    manifest = {
        "kind": "steady",
        "package_version": __version__,
        "config": to_dict(cfg),
        "resolved": _resolved_block(r, n_alpha) | {"M": M, "method": st.method},
        "diagnostics": {"d1_gibbs": d1, "residual": ss.residual, "leak_rate": ss.leak_rate,
                        "leakage_max": ss.state.boundary_population(),
                        "positivity_min": ss.state.min_eigenvalue(),
                        "propagation_time": ss.time,
                        "wall_time_s": round(time.perf_counter() - t_wall, 3)},
        "files": {f.name: SCHEMAS.get(f.name, "") for f in files},
    }
    write_manifest(out / "manifest.yaml", manifest)
    return RunResult(out, manifest, files)


def sweep_settings(cfg: ScenarioConfig) -> SweepSettings:
    st = cfg.steady
    return SweepSettings(hbar=cfg.units.hbar, gamma=cfg.units.gamma, terms=cfg.potential, tol=st.tol,
                         boundary_tol=st.boundary_tol, M_max=st.M_max, method=st.method)


def sweep_temperatures(cfg: ScenarioConfig) -> np.ndarray:
    s = cfg.sweep
    return np.geomspace(s.t_min, s.t_max, s.n_points)


def run_sweep(cfg: ScenarioConfig, outdir=None, workers: int | None = None) -> RunResult:
    t_wall = time.perf_counter()
    temps = sweep_temperatures(cfg)
    points = temperature_sweep(temps, sweep_settings(cfg), workers or cfg.sweep.workers)
    good = [p for p in points if p.ok]
    slopes = dict(zip((p.temperature for p in good),
                      local_slopes([p.temperature for p in good], [p.d1 for p in good])))
    rows = [(p.temperature, p.d1, p.epsilon1, p.epsilon2, slopes.get(p.temperature, float("nan")), p.M,
             p.boundary, p.min_eigenvalue, p.leak_rate, p.residual, p.error) for p in points]
    out = Path(outdir or cfg.output_directory)
    out.mkdir(parents=True, exist_ok=True)
    header = ["T", "d1", "epsilon1", "epsilon2", "local_slope", "M", "boundary", "min_eigenvalue",
              "leak_rate", "residual", "error"]
    files = [write_csv(out / "sweep.csv", header, rows)]
    fits = {}
    for name in ("intermediate_window", "high_window"):
        lo, hi = getattr(cfg.sweep, name)
        try:
            fits[name] = {"window": [lo, hi], "slope": fit_slope([p.temperature for p in good],
                                                                 [p.d1 for p in good], lo, hi)}
        except ValueError as exc:
            fits[name] = {"window": [lo, hi], "slope": None, "error": str(exc)}
    manifest = {
        "kind": "sweep",
        "package_version": __version__,
        "config": to_dict(cfg),
        "resolved": {"temperatures": list(temps), "M_per_point": [p.M for p in points]},
        "fits": fits,
        "diagnostics": {"failed_points": [p.temperature for p in points if not p.ok],
                        "leakage_max": max((p.boundary for p in good), default=None),
                        "positivity_min": min((p.min_eigenvalue for p in good), default=None),
                        "wall_time_s": round(time.perf_counter() - t_wall, 3)},
        "files": {f.name: SCHEMAS.get(f.name, "") for f in files},
    }
    write_manifest(out / "manifest.yaml", manifest)
    return RunResult(out, manifest, files)
