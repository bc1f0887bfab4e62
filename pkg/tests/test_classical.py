import numpy as np
import pytest

from rotorlab.classical import (CFLError, ClassicalField, FokkerPlanck, GridMismatch, PhaseGrid, _alpha_derivative,
                                cell_average, classical_gibbs, evolve_fp, fp_rhs, fp_step, half_integer_weight,
                                l1_distance, quantum_classical_compare, stationarity_residual)
from rotorlab.state import DensityMatrix, PotentialSpec, build_wavepacket, gibbs_state, BathParams

V = PotentialSpec.tilted_double_well()


def test_gibbs_density_is_nearly_stationary():
    grid = PhaseGrid(64, 160, 10.0)
    fp = FokkerPlanck.thermal(V, gamma=1.0, temperature=2.0)
    W = classical_gibbs(grid, V, 2.0)
    assert W.mass() == pytest.approx(1.0)
    assert stationarity_residual(W, fp) < 5e-3   # second order in dp = 0.125
    # a finer momentum grid shrinks the discretization residual
    fine = PhaseGrid(64, 640, 10.0)
    assert stationarity_residual(classical_gibbs(fine, V, 2.0), fp) < stationarity_residual(W, fp) / 10


def test_friction_acts_on_momentum():
    """With the drift -d_p(p W) the Gibbs density is stationary; -d_alpha(p W) is not."""
    grid = PhaseGrid(64, 320, 10.0)
    fp = FokkerPlanck.thermal(V, gamma=1.0, temperature=2.0)
    W = classical_gibbs(grid, V, 2.0)
    wrong = fp_rhs(ClassicalField(grid, W.values), FokkerPlanck(V, 0.0, 0.0)) \
        + fp.gamma * _alpha_derivative(grid.p[None, :] * W.values)
    rel = np.abs(wrong).sum() / np.abs(W.values).sum()
    assert rel > 100 * stationarity_residual(W, fp)


def test_mass_conserved_and_cfl():
    grid = PhaseGrid(32, 64, 8.0)
    fp = FokkerPlanck.thermal(V, gamma=0.5, temperature=1.0)
    alpha, p = grid.alpha[:, None], grid.p[None, :]
    W0 = ClassicalField(grid, np.exp(-(alpha - 0.5) ** 2 * 4 - (p - 1) ** 2))
    m0 = W0.mass()
    W1, snaps = evolve_fp(W0, fp, 0.5, snapshot_times=[0.1, 0.25])
    assert W1.mass() == pytest.approx(m0, rel=1e-12)
    assert sorted(snaps) == [0.1, 0.25, 0.5]
    with pytest.raises(CFLError):
        fp_step(W0, fp, 10 * fp.max_dt(grid))


def test_grid_validation():
    with pytest.raises(ValueError):
        PhaseGrid(2, 10, 1.0)
    with pytest.raises(GridMismatch):
        ClassicalField(PhaseGrid(8, 8, 1.0), np.zeros((8, 9)))
    with pytest.raises(GridMismatch):
        cell_average(ClassicalField(PhaseGrid(8, 8, 1.0), np.zeros((8, 8))), hbar=1.0, M=3)


def test_cell_average_preserves_mass():
    grid = PhaseGrid.for_rotor(0.5, 10, 32, sub=4)
    W = classical_gibbs(grid, V, 1.0)
    cells = cell_average(W, 0.5, 10)
    assert cells.shape == (21, 32)
    assert cells.sum() * grid.d_alpha == pytest.approx(1.0)


def test_quantum_classical_distance_shrinks_with_hbar():
    dists = []
    for hbar in (1.0, 0.5, 0.25):
        T = 2.0
        M = int(np.ceil(9 * np.sqrt(T) / hbar)) + 4
        bath = BathParams(temperature=T, gamma=1.0, hbar=hbar)
        rho = gibbs_state(V, bath, M)
        grid = PhaseGrid.for_rotor(hbar, M, 4 * M + 2)
        dists.append(l1_distance(rho, classical_gibbs(grid, V, T), hbar))
    assert dists[0] > dists[1] > dists[2]


def test_half_integer_weight():
    assert half_integer_weight(DensityMatrix.momentum_eigenstate(0, 5)) == 0.0
    assert half_integer_weight(build_wavepacket(0.3, 0.0, 20)) > 0


def test_compare_requires_common_times():
    grid = PhaseGrid.for_rotor(1.0, 4, 18)
    c = classical_gibbs(grid, V, 1.0)
    rho = DensityMatrix.momentum_eigenstate(0, 4)
    cmp = quantum_classical_compare({0.0: rho, 1.0: rho}, {1.0: c}, 1.0)
    assert cmp.times == [1.0] and len(cmp.l1) == 1
    with pytest.raises(GridMismatch):
        quantum_classical_compare({0.0: rho}, {1.0: c}, 1.0)
