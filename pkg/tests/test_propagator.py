import numpy as np
import pytest

from rotorlab.liouvillian import GeneratorSpec, total_generator
from rotorlab.metrics import trace_distance
from rotorlab.oracles import detailed_balance_equilibrium, free_shear
from rotorlab.propagator import (ConvergenceError, EvolutionConfig, NumericalAbort, evolve, find_steady_state,
                                 generator_residual, pad_state, rk4_step, steady_state_escalating, suggest_dt,
                                 wigner_min_tracker)
from rotorlab.state import BathParams, DensityMatrix, PotentialSpec, build_wavepacket, random_state
from rotorlab.wigner import from_aux, to_aux


@pytest.fixture
def free_unitary():
    return GeneratorSpec(BathParams(temperature=1.0, gamma=0.0), PotentialSpec(), "unitary_only")


def test_config_validation():
    for bad in (dict(t_final=-1), dict(t_final=1, dt=0), dict(t_final=1, integrator="euler"),
                dict(t_final=1, tolerance=1.0), dict(t_final=1, snapshot_times=(2.0,))):
        with pytest.raises(ValueError):
            EvolutionConfig(**bad)
    assert EvolutionConfig(t_final=1, snapshot_times=(0.5, 0.1)).snapshot_times == (0.1, 0.5)


def test_rk4_is_fourth_order():
    gen = lambda y: 1j * y   # noqa: E731
    errs = []
    for n in (20, 40):
        y = np.array([1.0 + 0j])
        for _ in range(n):
            y = rk4_step(gen, y, 1.0 / n)
        errs.append(abs(y[0] - np.exp(1j)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.1)


@pytest.mark.parametrize("integrator", ["rk4_fixed", "rk4_adaptive"])
@pytest.mark.parametrize("rep", ["matrix", "aux_wigner"])
def test_free_rotor_matches_exact_shear(free_unitary, integrator, rep):
    rho0 = build_wavepacket(0.3, 0.2, 20)
    cfg = EvolutionConfig(t_final=0.5, dt=5e-4, integrator=integrator, tolerance=1e-11, snapshot_times=(0.25,))
    traj = evolve(rho0, free_unitary.with_representation(rep), cfg)
    exact = from_aux(free_shear(to_aux(rho0), 0.5))
    assert trace_distance(traj.final, exact) < 1e-8
    assert list(traj.snapshots) == [0.25]
    assert traj.series.t[0] == 0.0 and traj.series.t[-1] == 0.5


def test_record_interval_and_observers(bath, tilted):
    g = GeneratorSpec(bath, tilted, "full")
    rho0 = build_wavepacket(0.5, 0.0, 24)
    cfg = EvolutionConfig(t_final=0.2, record_interval=0.05)
    traj = evolve(rho0, g, cfg, reference=rho0, observers={"pop0": lambda r: r[24, 24].real})
    s = traj.series
    np.testing.assert_allclose(s.t, [0, 0.05, 0.1, 0.15, 0.2], atol=1e-12)
    assert s.distance[0] == 0.0 and s.distance[-1] > 0
    assert s.columns()[-1] == "pop0"
    assert len(list(s.rows())) == 5
    np.testing.assert_allclose(s.trace, 1.0, atol=1e-10)
    with pytest.raises(ValueError):
        evolve(rho0, g, cfg, observers={"trace": np.trace})


def test_dt_above_stability_is_rejected(bath, tilted):
    g = GeneratorSpec(bath, tilted, "full")
    with pytest.raises(ValueError, match="stability"):
        evolve(DensityMatrix.momentum_eigenstate(0, 10), g, EvolutionConfig(t_final=1, dt=10 * suggest_dt(g, 10)))


def test_leakage_and_positivity_aborts(bath):
    g = GeneratorSpec(bath, PotentialSpec(), "full")
    edge = DensityMatrix.momentum_eigenstate(9, 10)
    with pytest.raises(NumericalAbort, match="boundary"):
        evolve(edge, g, EvolutionConfig(t_final=0.5))
    bad = DensityMatrix(np.diag([0.0] * 10 + [1.1] + [-0.1] + [0.0] * 9))
    with pytest.raises(NumericalAbort, match="positivity"):
        evolve(bad, g, EvolutionConfig(t_final=0.1))


def test_wigner_min_tracking(free_unitary):
    M = 24
    a = build_wavepacket(0.3, 0.0, M)
    cfg = EvolutionConfig(t_final=0.1, dt=1e-3, track_wigner_min=True, snapshot_times=(0.0, 0.1))
    traj = evolve(a, free_unitary, cfg)
    assert all(np.isfinite(traj.series.wigner_min))
    mins = wigner_min_tracker(traj.snapshots)
    assert [t for t, _ in mins] == [0.0, 0.1]


@pytest.mark.parametrize("method", ["propagate", "direct"])
def test_steady_state_free_rotor(method):
    bath = BathParams(temperature=2.0, gamma=1.0)
    g = GeneratorSpec(bath, PotentialSpec(), "full")
    ss = find_steady_state(g, DensityMatrix.momentum_eigenstate(0, 24), tol=1e-10, method=method)
    assert ss.residual < 1e-10
    assert trace_distance(ss.state, detailed_balance_equilibrium(2.0, M=24)) < 1e-9
    assert generator_residual(ss.state, g) < 1e-8


def test_steady_state_methods_agree_with_potential(tilted):
    bath = BathParams(temperature=1.5, gamma=0.8)
    g = GeneratorSpec(bath, tilted, "full")
    seed = DensityMatrix.momentum_eigenstate(0, 24)
    a = find_steady_state(g, seed, tol=1e-10, method="propagate")
    b = find_steady_state(g, seed, tol=1e-10, method="direct")
    assert trace_distance(a.state, b.state) < 1e-8


def test_steady_state_errors(bath, free_unitary):
    g = GeneratorSpec(bath, PotentialSpec(), "full")
    with pytest.raises(ValueError):
        find_steady_state(free_unitary, DensityMatrix.momentum_eigenstate(0, 8))
    with pytest.raises(ValueError):
        find_steady_state(g, DensityMatrix.momentum_eigenstate(0, 8), method="magic")
    with pytest.raises(ConvergenceError) as info:
        find_steady_state(g, DensityMatrix.momentum_eigenstate(0, 16), tol=1e-14, max_time=1.0, leakage_abort=1.0)
    assert info.value.history


def test_escalating_basis_reaches_boundary_tolerance():
    bath = BathParams(temperature=6.0, gamma=1.0)
    g = GeneratorSpec(bath, PotentialSpec.tilted_double_well(), "full")
    ss = steady_state_escalating(g, lambda M: DensityMatrix.momentum_eigenstate(0, M), M_start=8,
                                 tol=1e-9, boundary_tol=1e-10, method="direct")
    assert ss.state.boundary_population() <= 1e-10
    assert ss.M > 8


def test_pad_state(rng):
    rho = random_state(3, rng)
    big = pad_state(rho, 5)
    assert big.shape == (11, 11)
    np.testing.assert_array_equal(big[2:9, 2:9], rho.data)
    with pytest.raises(ValueError):
        pad_state(rho, 2)


def test_aux_and_matrix_trajectories_agree(bath, tilted, rng):
    rho0 = random_state(12, rng, margin=6)
    g = GeneratorSpec(bath, tilted, "full")
    cfg = EvolutionConfig(t_final=0.2, check_leakage=False)
    a = evolve(rho0, g, cfg).final
    b = evolve(rho0, g.with_representation("aux_wigner"), cfg).final
    assert trace_distance(a, b) < 1e-12
