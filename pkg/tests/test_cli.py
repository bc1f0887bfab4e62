import json
import subprocess
import sys

import pytest

from rotorlab.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from rotorlab.config import load, load_preset
from rotorlab.export import read_csv, read_manifest

EVOLVE = """
name: small-evolve
task: evolve
units: {temperature: 1.0, hbar: 0.5, gamma: 1.0}
potential:
  terms: [[1, 1.0, 0.0], [2, -1.0, 0.0]]
initial: {kind: superposition, sigma: 0.4, centers: [1.5708, -1.5708]}
evolution: {t_final: 0.1, M: 20}
outputs:
  snapshot_times: [0.0, 0.05, 0.1]
  observables: [trace, p_mean, energy, purity, wigner_min, distance_gibbs, coherence]
  record_interval: 0.025
  n_alpha: 96
"""

STEADY = """
name: small-steady
task: steady
units: {temperature: 2.0, hbar: 0.5, gamma: 1.0}
potential:
  terms: [[1, 1.0, 0.0], [2, -1.0, 0.0]]
evolution: {M: auto}
steady: {tol: 1.0e-9, method: direct, boundary_tol: 1.0e-9}
"""

SWEEP = """
name: small-sweep
task: sweep
units: {temperature: 1.0, hbar: 0.5, gamma: 1.0}
potential:
  terms: [[1, 1.0, 0.0], [2, -1.0, 0.0]]
steady: {tol: 1.0e-9, method: direct}
sweep: {t_min: 1.0, t_max: 4.0, n_points: 3, intermediate_window: [1.0, 2.0], high_window: [2.0, 4.0], workers: 1}
"""


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_evolve_writes_reproducible_artifacts(tmp_path, capsys):
    cfg = write(tmp_path, EVOLVE)
    assert main(["evolve", cfg, "-o", str(tmp_path / "a")]) == EXIT_OK
    assert main(["evolve", cfg, "-o", str(tmp_path / "b")]) == EXIT_OK
    assert "wrote" in capsys.readouterr().out
    names = ["observables.csv", "wigner_snapshots.csv", "marginals_momentum.csv", "marginals_angle.csv"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes(), n
    header, rows = read_csv(tmp_path / "a" / "observables.csv")
    assert header == ["t", "trace", "p_mean", "energy", "purity", "wigner_min", "distance_gibbs", "coherence"]
    assert [float(r[0]) for r in rows] == pytest.approx([0, 0.025, 0.05, 0.075, 0.1])
    assert float(rows[0][5]) < 0         # the superposition starts with negative Wigner regions
    man = read_manifest(tmp_path / "a" / "manifest.yaml")
    assert man["resolved"]["M"] == 20 and man["resolved"]["N_alpha"] == 96
    assert set(man["files"]) == set(names)
    assert man["diagnostics"]["leakage_max"] < 1e-8


def test_emit_plots(tmp_path):
    out = tmp_path / "run"
    assert main(["evolve", write(tmp_path, EVOLVE), "-o", str(out)]) == EXIT_OK
    assert main(["emit-plots", str(out)]) == EXIT_OK
    for s in ("plot_wigner.py", "plot_marginals.py", "plot_observables.py"):
        assert (out / s).is_file()
    assert read_manifest(out / "plots_manifest.yaml")["run_kind"] == "evolve"
    pytest.importorskip("matplotlib")
    subprocess.run([sys.executable, str(out / "plot_wigner.py")], check=True, cwd=tmp_path)
    subprocess.run([sys.executable, str(out / "plot_marginals.py")], check=True, cwd=tmp_path)
    assert len(list(out.glob("wigner_*.png"))) == 3 and (out / "marginals.png").is_file()


def test_emit_plots_missing_artifacts(tmp_path, capsys):
    assert main(["emit-plots", str(tmp_path)]) == EXIT_CONFIG
    assert "manifest" in capsys.readouterr().err


def test_steady(tmp_path):
    out = tmp_path / "s"
    assert main(["steady", write(tmp_path, STEADY), "-o", str(out)]) == EXIT_OK
    man = read_manifest(out / "manifest.yaml")
    assert man["diagnostics"]["residual"] < 1e-9
    assert man["diagnostics"]["leakage_max"] <= 1e-9
    assert 0 < man["diagnostics"]["d1_gibbs"] < 0.5
    assert main(["emit-plots", str(out)]) == EXIT_OK
    assert (out / "plot_steady.py").is_file()


def test_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("ROTORLAB_WORKERS", "1")
    out = tmp_path / "w"
    assert main(["sweep-temperature", write(tmp_path, SWEEP), "-o", str(out)]) == EXIT_OK
    header, rows = read_csv(out / "sweep.csv")
    assert header[:2] == ["T", "d1"] and len(rows) == 3
    d1 = [float(r[1]) for r in rows]
    assert d1[0] > d1[1] > d1[2]
    man = read_manifest(out / "manifest.yaml")
    assert man["diagnostics"]["failed_points"] == []
    assert man["fits"]["high_window"]["slope"] < 0


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["evolve", str(tmp_path / "nope.yaml")]) == EXIT_CONFIG
    assert main(["evolve", write(tmp_path, "name: x\ntask: evolve\nunits: {hbar: 1}\n")]) == EXIT_CONFIG
    assert main(["steady", write(tmp_path, EVOLVE)]) == EXIT_CONFIG     # wrong task
    too_big = EVOLVE.replace("{t_final: 0.1, M: 20}", "{t_final: 0.1, M: 20, dt: 1.0}")
    assert main(["evolve", write(tmp_path, too_big)]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_numerical_abort_exit_3(tmp_path, capsys):
    text = EVOLVE.replace("{kind: superposition, sigma: 0.4, centers: [1.5708, -1.5708]}", "{kind: momentum, m: 19}")
    assert main(["evolve", write(tmp_path, text), "-o", str(tmp_path / "x")]) == EXIT_NUMERICAL
    assert "boundary population" in capsys.readouterr().err


def test_preset_prints_loadable_yaml(tmp_path, capsys):
    assert main(["preset", "fig3c"]) == EXIT_OK
    printed = load(write(tmp_path, capsys.readouterr().out))
    assert printed == load_preset("fig3c")
    assert printed.units.temperature == 0.2
    with pytest.raises(SystemExit):
        main(["preset", "nope"])


def test_oracle_checks_subset(tmp_path, capsys):
    report = tmp_path / "r.json"
    assert main(["oracle-checks", "--only", "6", "--json", "--report", str(report)]) == EXIT_OK
    captured = capsys.readouterr()
    data = json.loads(captured.out)
    assert [c["number"] for c in data["checks"]] == [6]
    assert "[PASS]" in captured.err
    assert json.loads(report.read_text()) == data


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "rotorlab.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "rotorlab" in res.stdout
