import numpy as np
import pytest

from rotorlab.export import fmt, read_csv, read_manifest, wigner_rows, write_csv, write_manifest
from rotorlab.sweep import (WORKERS_ENV, SweepSettings, fit_slope, local_slopes, sweep_point, temperature_sweep,
                            worker_count)


def test_worker_count(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv(WORKERS_ENV, "lots")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.delenv(WORKERS_ENV)
    assert worker_count() >= 1


def test_slopes_of_power_law():
    T = np.geomspace(0.5, 20, 9)
    v = 3.0 * T ** -2.0
    np.testing.assert_allclose(local_slopes(T, v), -2.0, atol=1e-12)
    assert fit_slope(T, v, 1.0, 10.0) == pytest.approx(-2.0)
    with pytest.raises(ValueError):
        fit_slope(T, v, 30.0, 40.0)
    assert np.isnan(local_slopes([1.0], [1.0])).all()


def test_failed_point_is_recorded_not_raised():
    p = sweep_point(0.05, SweepSettings(hbar=0.5, M_max=10))
    assert not p.ok and p.error
    assert np.isnan(p.d1)


def test_sweep_preserves_order():
    pts = temperature_sweep([4.0, 2.0], SweepSettings(hbar=0.5, method="direct"), workers=1)
    assert [p.temperature for p in pts] == [4.0, 2.0]
    assert all(p.ok for p in pts)
    assert pts[0].d1 < pts[1].d1


def test_csv_round_trip_is_exact(tmp_path):
    x = np.array([np.pi, 1 / 3, 1e-300, -2.5e17])
    path = write_csv(tmp_path / "x.csv", ["a", "b"], [(v, i) for i, v in enumerate(x)])
    header, rows = read_csv(path)
    assert header == ["a", "b"]
    np.testing.assert_array_equal([float(r[0]) for r in rows], x)
    assert fmt(np.int64(3)) == "3" and fmt(True) == "1" and fmt("s") == "s"


def test_wigner_rows_layout():
    W = np.arange(6.0).reshape(2, 3)
    rows = list(wigner_rows(0.5, np.array([0.0, 1.0, 2.0]), np.array([-1, 0]), W))
    assert rows[0] == (0.5, 0.0, -1, 0.0) and rows[4] == (0.5, 1.0, 0, 4.0)


def test_manifest_plain_types(tmp_path):
    write_manifest(tmp_path / "m.yaml", {"a": np.float64(1.5), "b": np.arange(3), "c": (1, 2)})
    assert read_manifest(tmp_path / "m.yaml") == {"a": 1.5, "b": [0, 1, 2], "c": [1, 2]}
