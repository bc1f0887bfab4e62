"""Acceptance suite: ten end-to-end checks with stated tolerances.

Each check returns a :class:`CheckResult` holding the measured values and the
bounds they were compared against.  Every trajectory and steady state that a
check produces is also logged in a :class:`Hygiene` record, which the last
check inspects together with a measured RK4 convergence order.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .classical import (FokkerPlanck, PhaseGrid, classical_gibbs, evolve_fp, half_integer_weight,
                        quantum_classical_compare, stationarity_residual)
from .config import load_preset
from .liouvillian import GeneratorSpec, total_generator
from .metrics import cross_coherence, fidelity, trace_distance
from .oracles import (apply_diffusion_solution, detailed_balance_equilibrium, free_equilibrium,
                      gibbs_residual, kernel_table, potential_residual_part)
from .propagator import (EvolutionConfig, evolve, find_steady_state, steady_state_escalating,
                         suggest_dt)
from .scenario import sweep_settings, sweep_temperatures
from .state import (BathParams, DensityMatrix, PotentialSpec, auto_truncation, basis_m,
                    build_wavepacket, gibbs_state, hamiltonian, random_state, superpose,
                    wavepacket_amplitudes)
from .sweep import fit_slope, temperature_sweep
from .units import ReducedUnits, revival_time, thermal_truncation
from .wigner import coeffs_to_rho, from_aux, full_wigner, rho_to_coeffs, to_aux


@dataclass
class Measurement:
    label: str
    value: float
    bound: object        # number, or (lo, hi) for "in"
    relation: str        # "<", "<=", ">", ">=", "in", "true"
    passed: bool = False

    def __post_init__(self):
        v, b = self.value, self.bound
        ok = {
            "<": lambda: v < b, "<=": lambda: v <= b, ">": lambda: v > b, ">=": lambda: v >= b,
            "in": lambda: b[0] <= v <= b[1], "true": lambda: bool(v),
        }[self.relation]()
        self.passed = bool(ok) and (self.relation == "true" or np.isfinite(v))

    def text(self) -> str:
        if self.relation == "true":
            return f"{self.label}={'yes' if self.value else 'no'}"
        if self.relation == "in":
            return f"{self.label}={self.value:.4g} in [{self.bound[0]:g}, {self.bound[1]:g}]"
        return f"{self.label}={self.value:.3g} {self.relation} {self.bound:g}"


@dataclass
class CheckResult:
    number: int
    name: str
    measurements: list = field(default_factory=list)
    runtime: float = 0.0
    budget: float = 0.0
    error: str = ""

    @property
    def passed(self) -> bool:
        return not self.error and bool(self.measurements) and all(m.passed for m in self.measurements)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        body = self.error or "; ".join(m.text() for m in self.measurements)
        return f"[{status}] {self.number:2d} {self.name}: {body} ({self.runtime:.1f} s)"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class Hygiene:
    """Worst-case numerical diagnostics over every run of the suite."""

    trace_drift: float = 0.0
    min_eigenvalue: float = np.inf
    leakage: float = 0.0
    runs: list = field(default_factory=list)

    def trajectory(self, label: str, traj, trace0: float = 1.0):
        tr = np.asarray(traj.series.trace)
        drift = float(np.abs(tr - trace0).max())
        self._add(label, drift, traj.min_eigenvalue, traj.max_leakage)

    def state(self, label: str, rho: DensityMatrix):
        self._add(label, abs(rho.trace() - 1.0), rho.min_eigenvalue(), rho.boundary_population())

    def _add(self, label, drift, lam, leak):
        self.trace_drift = max(self.trace_drift, drift)
        self.min_eigenvalue = min(self.min_eigenvalue, lam)
        self.leakage = max(self.leakage, leak)
        self.runs.append((label, drift, lam, leak))


# ------------------------------------------------------------------ checks


def check_representations(h: Hygiene) -> list:
    """Matrix and aux-Wigner generators on random states; one trajectory in both."""
    rng = np.random.default_rng(7)
    bath = BathParams(temperature=2.0, gamma=0.8, inertia=1.3, hbar=0.9)
    V = PotentialSpec(((1, 1.5, 0.3), (2, -1.5, 0.2), (3, 0.1, -0.4)))
    M = 12
    worst = 0.0
    for mode in ("full", "unitary_only", "no_angular_diffusion"):
        g = GeneratorSpec(bath, V, mode)
        gm, ga = total_generator(g), total_generator(g.with_representation("aux_wigner"))
        for _ in range(10):
            rho = random_state(M, rng).data
            ref = gm(rho)
            alt = coeffs_to_rho(ga(rho_to_coeffs(rho)))
            worst = max(worst, np.abs(ref - alt).max() / np.abs(ref).max())
    g = GeneratorSpec(BathParams(0.5, 0.5, 1.0, 1.0), PotentialSpec(((1, 1.0, 0.3), (2, -1.0, 0.2))), "full")
    rho0 = random_state(24, np.random.default_rng(3), margin=18)
    cfg = EvolutionConfig(t_final=0.5, record_interval=0.1)
    a = evolve(rho0, g, cfg)
    b = evolve(rho0, g.with_representation("aux_wigner"), cfg)
    h.trajectory("representations/matrix", a)
    h.trajectory("representations/aux", b)
    return [Measurement("generator_rel_diff", worst, 1e-12, "<"),
            Measurement("trajectory_d1", trace_distance(a.final, b.final), 1e-9, "<")]


def check_revival(h: Hygiene) -> list:
    """sigma = 0.1 wave packet under free evolution: revival and negativity."""
    M = 36
    bath = BathParams(1.0, 0.0, 1.0, 1.0)
    g = GeneratorSpec(bath, PotentialSpec.free(), "unitary_only")
    psi0 = build_wavepacket(0.1, 0.0, M)
    t_r = revival_time(bath.hbar, bath.inertia)
    traj = evolve(psi0, g, EvolutionConfig(t_final=t_r, dt=5e-5, snapshot_times=(t_r / 32, t_r),
                                           record_interval=t_r / 32))
    h.trajectory("revival", traj)
    w_min = full_wigner(traj.snapshots[t_r / 32]).min()
    return [Measurement("infidelity_at_t_r", 1.0 - fidelity(psi0, traj.snapshots[t_r]), 1e-6, "<="),
            Measurement("wigner_min_at_t_r/32", w_min, 0.0, "<")]


def check_moment_laws(h: Hygiene) -> list:
    """V = 0: decay rate of <p> and stationary <p^2> from a momentum-shifted thermal start."""
    bath = BathParams(temperature=1.0, gamma=1.0, inertia=100.0, hbar=1.0)   # T I / hbar^2 = 100
    g = GeneratorSpec(bath, PotentialSpec.free(), "full")
    M, shift = 80, 15
    m = basis_m(M)
    w = np.exp(-(bath.hbar * (m - shift)) ** 2 / (2 * bath.temperature * bath.inertia))
    rho0 = DensityMatrix(np.diag(w / w.sum()).astype(complex))
    traj = evolve(rho0, g, EvolutionConfig(t_final=12.0 / bath.gamma, record_interval=0.1 / bath.gamma))
    h.trajectory("moment-laws", traj)
    s = traj.series.as_arrays()
    t = s["t"]
    early = t <= 4.0 / bath.gamma
    rate = -np.polyfit(t[early], np.log(s["p_mean"][early]), 1)[0]
    target = bath.diffusion / bath.gamma
    (p2_inf, _, _), _ = curve_fit(lambda t, a, c, lam: a + c * np.exp(-lam * t), t, s["p2_mean"],
                                  p0=(target, s["p2_mean"][0] - target, 2 * bath.gamma))
    return [Measurement("rate_rel_err", abs(rate / bath.gamma - 1), 1e-3, "<"),
            Measurement("p2_inf_rel_err", abs(p2_inf / target - 1), 1e-3, "<")]


def check_diffusion_oracle(h: Hygiene) -> list:
    """Frictionless diffusion: integrator against the Bessel-kernel solution."""
    out = []
    D, M = 0.8, 24
    for hbar in (1.0, 0.7):
        rho0 = build_wavepacket(0.3, 0.4, M)
        g = GeneratorSpec(BathParams(1.0, 0.0, 1.0, hbar), PotentialSpec.free(), "diffusion_only", diffusion=D)
        for x in (0.5, 2.0):
            t = x * hbar ** 2 / D
            traj = evolve(rho0, g, EvolutionConfig(t_final=t, dt=0.25 * suggest_dt(g, M), record_interval=t / 4))
            h.trajectory(f"diffusion/hbar={hbar}/Dt={x}", traj)
            exact = from_aux(apply_diffusion_solution(to_aux(rho0), t, D, hbar))
            out.append(Measurement(f"d1[hbar={hbar},Dt/hbar^2={x}]", trace_distance(traj.final, exact), 1e-6, "<"))
            norm = kernel_table(t, D, 2 * M, hbar=hbar).normalization()
            out.append(Measurement(f"kernel_norm_err[hbar={hbar},Dt/hbar^2={x}]", abs(norm - 1), 1e-9, "<"))
    return out


def check_free_equilibrium(h: Hygiene) -> list:
    """V = 0, T I / hbar^2 = 5: steady state against the binomial profile."""
    n, M = 5.0, 30
    bath = BathParams(n, 1.0, 1.0, 1.0)
    g = GeneratorSpec(bath, PotentialSpec.free(), "full")
    ss = find_steady_state(g, gibbs_state(PotentialSpec.free(), bath, M), tol=1e-10, method="propagate")
    h.state("free-equilibrium", ss.state)
    return [Measurement("d1_binomial", trace_distance(ss.state, free_equilibrium(n, 1.0, 1.0, M)), 1e-2, "<="),
            Measurement("d1_detailed_balance", trace_distance(ss.state, detailed_balance_equilibrium(n, 1.0, 1.0, M)),
                        1e-8, "<")]


def check_gibbs_residual(h: Hygiene) -> list:
    """Dissipator on the Gibbs state: O(eps1) without potential, O(eps2) from the potential."""
    V = PotentialSpec.tilted_double_well(1.0)
    free = PotentialSpec.free()
    temps = np.geomspace(5.0, 80.0, 5)
    res_v, res_0, part = [], [], []
    for T in temps:
        bath = BathParams(T, 1.0, 1.0, 1.0)
        M = auto_truncation(V, bath, thermal_truncation(T), tol=1e-13)
        res_v.append(gibbs_residual(V, bath, M, tol=1e-13).scaled)
        res_0.append(gibbs_residual(free, bath, M, tol=1e-13).scaled)
        part.append(potential_residual_part(V, bath, M, tol=1e-13))
    lt = np.log(temps)
    return [Measurement("residual_decreasing", bool(np.all(np.diff(res_v) < 0)), True, "true"),
            Measurement("slope_V=0", np.polyfit(lt, np.log(res_0), 1)[0], (-1.15, -0.85), "in"),
            Measurement("slope_potential_part", np.polyfit(lt, np.log(part), 1)[0], (-2.3, -1.7), "in")]


def check_temperature_sweep(h: Hygiene, workers: int | None = None) -> list:
    """Steady-state distance from the Gibbs state across temperature, hbar~ = 1."""
    cfg = load_preset("fig4")
    temps = sweep_temperatures(cfg)
    points = temperature_sweep(temps, sweep_settings(cfg), workers)
    for p in points:
        if p.ok:
            h._add(f"sweep/T={p.temperature:.3g}", 0.0, p.min_eigenvalue, p.boundary)
    good = [p for p in points if p.ok]
    T = [p.temperature for p in good]
    d1 = [p.d1 for p in good]
    lo_w, hi_w = cfg.sweep.intermediate_window, cfg.sweep.high_window
    return [Measurement("failed_points", len(points) - len(good), 0, "<="),
            Measurement("decades", np.log10(max(T) / min(T)), 1.5, ">="),
            Measurement("slope_intermediate", fit_slope(T, d1, *lo_w), (-2.3, -1.7), "in"),
            Measurement("slope_high", fit_slope(T, d1, *hi_w), (-1.3, -0.7), "in"),
            Measurement("d1_lowest_T", d1[0], 0.5, ">")]


def _half_time(t, x, x_inf) -> float:
    d = np.abs(np.asarray(x) - x_inf)
    hit = np.nonzero(d <= 0.5 * d[0])[0]
    return float(t[hit[0]]) if hit.size else np.inf


def _time_to(t, dist, eps) -> float:
    hit = np.nonzero(np.asarray(dist) <= eps)[0]
    return float(t[hit[0]]) if hit.size else np.inf


def check_thermalization(h: Hygiene) -> list:
    """Wave-packet and superposition starts in V0 (cos a - cos 2a), hbar~ = 0.5, Gamma~ = 1."""
    out = []
    sup_centers = (np.pi / 2, -np.pi / 2)

    def superposition(M):
        return superpose([wavepacket_amplitudes(0.3, c, M) for c in sup_centers], [1.0, 1.0])

    # (a) high temperature, local-minimum start: distance to Gibbs at t~ = 5k
    u = ReducedUnits(6.0, 0.5, 1.0)
    bath, V = u.bath(), u.tilted_double_well()
    g = GeneratorSpec(bath, V, "full")
    M = auto_truncation(V, bath, thermal_truncation(u.thermal_ratio), tol=1e-12)
    rg = gibbs_state(V, bath, M)
    times = [u.internal_time(5.0 * k) for k in range(1, 5)]
    traj = evolve(build_wavepacket(0.4, 0.0, M), g,
                  EvolutionConfig(t_final=times[-1], snapshot_times=times, record_interval=u.internal_time(0.5)))
    h.trajectory("thermalization/a", traj)
    d = [trace_distance(traj.snapshots[t], rg) for t in times]
    out += [Measurement("a_d1_decreasing", bool(np.all(np.diff(d) < 0)), True, "true"),
            Measurement("a_d1_late", d[-1], 0.05, "<")]

    # (b) superposition at the same temperature: coherence against energy relaxation
    H = hamiltonian(V, M, bath.hbar, bath.inertia)
    traj = evolve(superposition(M), g,
                  EvolutionConfig(t_final=u.internal_time(3.0), record_interval=u.internal_time(0.01)),
                  observers={"coherence": cross_coherence})
    h.trajectory("thermalization/b", traj)
    s = traj.series.as_arrays()
    t_red = s["t"] / u.time_scale
    t_coh = _half_time(t_red, s["coherence"], cross_coherence(rg))
    t_en = _half_time(t_red, s["energy"], float(np.real(np.vdot(H.conj().T, rg.data))))
    out += [Measurement("b_coherence_half_life", t_coh, t_en, "<")]

    # (c) low temperature: time to approach the steady state from either start
    u = ReducedUnits(0.2, 0.5, 1.0)
    bath, V = u.bath(), u.tilted_double_well()
    g = GeneratorSpec(bath, V, "full")
    M0 = max(auto_truncation(V, bath, thermal_truncation(u.thermal_ratio), tol=1e-12), 20)
    ss = steady_state_escalating(g, lambda M: gibbs_state(V, bath, M, tol=1.0), M0, tol=1e-10,
                                 boundary_tol=1e-13, method="direct")
    h.state("thermalization/c/steady", ss.state)
    M = ss.M
    alpha = np.linspace(-np.pi, np.pi, 512, endpoint=False)
    dens = ss.state.angle_density(alpha)
    global_weight = float(dens[np.abs(alpha) >= np.pi / 2].sum() / dens.sum())
    eps, horizon = 0.25, 80.0
    cfg = EvolutionConfig(t_final=u.internal_time(horizon), record_interval=u.internal_time(0.5))
    hit = {}
    for name, rho0 in (("local", build_wavepacket(0.4, 0.0, M)), ("superposition", superposition(M))):
        traj = evolve(rho0, g, cfg, reference=ss.state)
        h.trajectory(f"thermalization/c/{name}", traj)
        hit[name] = _time_to(np.asarray(traj.series.t) / u.time_scale, traj.series.distance, eps)
    out += [Measurement("c_steady_weight_near_pi", global_weight, 0.5, ">"),
            Measurement("c_superposition_time_to_eps", hit["superposition"], horizon, "<"),
            Measurement("c_local_time_to_eps", hit["local"], hit["superposition"], ">")]
    return out


def check_classical_limit(h: Hygiene) -> list:
    """Fokker-Planck Gibbs stationarity and the quantum-classical distance as hbar~ shrinks."""
    V = PotentialSpec.tilted_double_well(1.0)
    out = []
    for T in (1.0, 3.0):
        fp = FokkerPlanck.thermal(V, 1.0, T)
        grid = PhaseGrid(64, 8192, 6.0 * np.sqrt(T))
        out.append(Measurement(f"fp_stationarity[T={T:g}]", stationarity_residual(classical_gibbs(grid, V, T), fp),
                               1e-6, "<"))
    T0, T, t_final = 0.5, 2.0, 2.0
    l1, hw = [], []
    for hbar in (1.0, 0.5, 0.25):
        # reduced units with V0 = I = 1, so hbar is hbar~ and times are t~
        b0, b = BathParams(T0, 1.0, 1.0, hbar), BathParams(T, 1.0, 1.0, hbar)
        M = max(auto_truncation(V, b, thermal_truncation(T / hbar ** 2), tol=1e-12),
                auto_truncation(V, b0, 8, tol=1e-12))
        rho0 = gibbs_state(V, b0, M)
        traj = evolve(rho0, GeneratorSpec(b, V, "full"),
                      EvolutionConfig(t_final=t_final, snapshot_times=(t_final,), record_interval=t_final / 4))
        h.trajectory(f"classical/hbar={hbar}", traj)
        grid = PhaseGrid.for_rotor(hbar, M, 4 * M + 2, sub=max(4, int(16 * hbar)))
        _, snaps = evolve_fp(classical_gibbs(grid, V, T0), FokkerPlanck.thermal(V, 1.0, T), t_final,
                             snapshot_times=(t_final,))
        cmp = quantum_classical_compare({t_final: traj.final}, snaps, hbar)
        l1.append(cmp.l1[0])
        hw.append(half_integer_weight(traj.final))
    out += [Measurement("l1_at_t2[hbar=1,0.5,0.25]_decreasing", bool(np.all(np.diff(l1) < 0)), True, "true"),
            Measurement("l1_ratio_hbar0.25_to_1", l1[-1] / l1[0], 1.0, "<"),
            Measurement("half_weight_decreasing", bool(np.all(np.diff(hw) < 0)), True, "true")]
    return out


def rk4_order() -> float:
    """Observed convergence order from three step sizes against a fine reference."""
    g = GeneratorSpec(BathParams(2.0, 1.0, 1.0, 1.0), PotentialSpec.tilted_double_well(1.0), "full")
    rho0 = random_state(20, np.random.default_rng(0), margin=6)
    t = 1.0

    def run(n):
        return evolve(rho0, g, EvolutionConfig(t_final=t, dt=t / n, check_leakage=False)).final.data

    ref = run(10240)
    errs = np.array([np.abs(run(n) - ref).max() for n in (160, 320, 640)])
    return float(np.log2(errs[:-1] / errs[1:]).min())


def check_hygiene(h: Hygiene) -> list:
    return [Measurement("runs_logged", len(h.runs), 1, ">="),
            Measurement("trace_drift", h.trace_drift, 1e-9, "<"),
            Measurement("min_eigenvalue", h.min_eigenvalue, -1e-8, ">"),
            Measurement("boundary_leakage", h.leakage, 1e-8, "<"),
            Measurement("rk4_order", rk4_order(), 3.7, ">=")]


CHECKS = [
    # number, name, function, runtime budget in seconds
    (1, "representation-equivalence", check_representations, 60),
    (2, "revival", check_revival, 60),
    (3, "moment-laws", check_moment_laws, 60),
    (4, "diffusion-oracle", check_diffusion_oracle, 120),
    (5, "free-equilibrium", check_free_equilibrium, 120),
    (6, "gibbs-residual", check_gibbs_residual, 300),
    (7, "temperature-sweep", check_temperature_sweep, 900),
    (8, "thermalization", check_thermalization, 600),
    (9, "classical-limit", check_classical_limit, 300),
    (10, "numerical-hygiene", check_hygiene, 120),
]


def run_check(number: int, hygiene: Hygiene) -> CheckResult:
    _, name, fn, budget = CHECKS[number - 1]
    res = CheckResult(number, name, budget=budget)
    t0 = time.perf_counter()
    try:
        res.measurements = fn(hygiene)
    except Exception as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    res.runtime = time.perf_counter() - t0
    return res


def run_suite(numbers=None, echo=None) -> list[CheckResult]:
    """Run the selected checks in order (hygiene last, so it sees every run)."""
    numbers = sorted(numbers or [c[0] for c in CHECKS])
    hygiene = Hygiene()
    results = []
    for n in numbers:
        r = run_check(n, hygiene)
        results.append(r)
        if echo:
            echo(r.line())
    return results


def report_json(results) -> str:
    return json.dumps({"passed": all(r.passed for r in results),
                       "checks": [r.as_dict() for r in results]}, indent=2, default=float)
