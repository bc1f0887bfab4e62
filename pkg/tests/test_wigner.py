import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorlab.state import DensityMatrix, build_wavepacket, random_state, superpose, wavepacket_amplitudes
from rotorlab.wigner import (AliasingError, AuxWignerField, HalfIndex, from_aux, full_wigner, marginals,
                             split_contributions, to_aux, valid_mask)


@settings(max_examples=25, deadline=None)
@given(M=st.integers(1, 9), seed=st.integers(0, 2 ** 31 - 1))
def test_round_trip(M, seed):
    rho = random_state(M, np.random.default_rng(seed))
    field = to_aux(rho)
    np.testing.assert_allclose(from_aux(field).data, rho.data, rtol=0, atol=1e-15)
    # entries off the valid lattice stay zero
    assert np.all(field.coeffs[~valid_mask(M)] == 0)
    assert field.norm() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(M=st.integers(1, 7), seed=st.integers(0, 2 ** 31 - 1))
def test_marginals_match_density_matrix(M, seed):
    rho = random_state(M, np.random.default_rng(seed))
    mom, alpha, dens = marginals(to_aux(rho))
    np.testing.assert_allclose(mom, rho.populations(), atol=1e-12)
    np.testing.assert_allclose(dens, rho.angle_density(alpha), atol=1e-12)


def test_full_wigner_marginals_and_reality(rng):
    rho = random_state(6, rng)
    fw = full_wigner(rho, n_alpha=64, m_window=60)
    assert fw.total() == pytest.approx(1.0, abs=1e-3)   # sinc tails outside the window
    np.testing.assert_allclose(fw.momentum_marginal()[54:67], rho.populations(), atol=2e-3)
    fw0 = full_wigner(rho, n_alpha=64)
    # the integer rows alone carry the momentum marginal exactly
    _, _, ip, hp = split_contributions(to_aux(rho), 64)
    np.testing.assert_allclose(ip.sum(axis=1) * 2 * np.pi / 64, rho.populations(), atol=1e-12)
    assert fw0.values.shape == (13, 64)


def test_momentum_eigenstate_wigner_is_flat():
    fw = full_wigner(DensityMatrix.momentum_eigenstate(1, 3), n_alpha=32)
    row = fw.values[list(fw.m).index(1)]
    np.testing.assert_allclose(row, 1 / (2 * np.pi), atol=1e-14)
    assert np.abs(np.delete(fw.values, list(fw.m).index(1), axis=0)).max() < 1e-14


def test_cat_state_has_negative_wigner():
    M = 30
    a = wavepacket_amplitudes(0.3, np.pi / 2, M)
    b = wavepacket_amplitudes(0.3, -np.pi / 2, M)
    assert full_wigner(superpose([a, b], [1, 1]), 128).min() < -1e-3
    assert full_wigner(build_wavepacket(0.3, 0.0, M), 128).min() > -1e-3


def test_aliasing_guard():
    with pytest.raises(AliasingError):
        split_contributions(to_aux(DensityMatrix(np.eye(5) / 5)), 8)
    with pytest.raises(ValueError):
        split_contributions(to_aux(DensityMatrix(np.eye(5) / 5)), 16, m_window=1)


def test_half_index_and_rows():
    assert HalfIndex.of(1.5).is_half and not HalfIndex.of(-2).is_half
    with pytest.raises(ValueError):
        HalfIndex.of(0.25)
    field = to_aux(DensityMatrix.momentum_eigenstate(1, 2))
    ks, c = field.row(1)
    # nu = 1 pairs (m, m') = (0, 2), (1, 1), (2, 0)
    assert ks.tolist() == [-2, 0, 2] and c[1] == pytest.approx(1 / (2 * np.pi))
    with pytest.raises(IndexError):
        field.row(2.5)
    with pytest.raises(ValueError):
        AuxWignerField(2, np.zeros((8, 8)))
