import numpy as np
import pytest

from rotorlab.units import ReducedUnits, revival_time, thermal_truncation


def test_default_units_fix_hbar():
    u = ReducedUnits(temperature=0.2, hbar=0.5, gamma=1.0)
    assert u.V0 == pytest.approx(4.0)
    assert u.internal_hbar == pytest.approx(1.0)
    b = u.bath()
    assert b.hbar == pytest.approx(1.0)
    assert b.temperature == pytest.approx(0.8)
    assert b.gamma == pytest.approx(2.0)
    assert u.internal_time(1.0) == pytest.approx(0.5)
    assert u.reduced_time(u.internal_time(3.7)) == pytest.approx(3.7)


def test_explicit_energy_scale():
    u = ReducedUnits(temperature=0.2, hbar=0.5, gamma=1.0, energy_scale=9.0)
    b = u.bath()
    assert b.hbar == pytest.approx(1.5)
    assert b.temperature == pytest.approx(1.8)
    # dimensionless combinations do not depend on the energy unit
    d = ReducedUnits(0.2, 0.5, 1.0).bath()
    assert b.epsilon1 == pytest.approx(d.epsilon1)
    assert b.gamma * u.time_scale == pytest.approx(d.gamma * ReducedUnits(0.2, 0.5).time_scale)


def test_reduced_potential():
    u = ReducedUnits(1.0, 0.5)
    V = u.potential([[1, 1.0, 0.0], [2, -1.0, 0.0]])
    assert V == u.tilted_double_well()
    assert u.thermal_ratio == pytest.approx(4.0)


def test_validation_and_helpers():
    with pytest.raises(ValueError):
        ReducedUnits(0.0, 1.0)
    with pytest.raises(ValueError):
        ReducedUnits(1.0, 1.0, gamma=-1)
    with pytest.raises(ValueError):
        ReducedUnits(1.0, 1.0, energy_scale=0.0)
    assert revival_time() == pytest.approx(4 * np.pi)
    assert thermal_truncation(100.0) == 74
    assert thermal_truncation(0.01) == 8
