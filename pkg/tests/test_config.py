import pytest

from rotorlab.config import (PRESETS, ConfigError, dumps, from_dict, load, load_preset, loads, preset_text,
                             to_dict)

MINIMAL = """
name: tiny
task: evolve
units: {temperature: 1.0, hbar: 0.5}
"""


def test_minimal_config_defaults():
    cfg = loads(MINIMAL)
    assert cfg.units.gamma == 1.0 and cfg.evolution.M == 48
    assert cfg.output_directory == "runs/tiny"


@pytest.mark.parametrize("name", PRESETS)
def test_presets_round_trip(name):
    cfg = load_preset(name)
    assert cfg.name == name
    assert from_dict(to_dict(cfg)) == cfg
    assert loads(dumps(cfg)) == cfg


@pytest.mark.parametrize("text,match", [
    ("name: x\ntask: evolve\n", "units"),
    ("name: x\ntask: fly\nunits: {temperature: 1, hbar: 1}\n", "task"),
    ("name: x\ntask: evolve\nunits: {temperature: -1, hbar: 1}\n", "units/temperature"),
    ("name: x\ntask: evolve\nunits: {temperature: 1, hbar: 1}\nbogus: 1\n", "bogus"),
    ("name: x\ntask: evolve\nunits: {temperature: 1, hbar: 1}\nevolution: {M: many}\n", "evolution/M"),
    ("name: x\ntask: evolve\nunits: {temperature: 1, hbar: 1}\ninitial: {kind: superposition}\n", "centers"),
    ("name: x\ntask: evolve\nunits: {temperature: 1, hbar: 1}\nevolution: {t_final: 1}\n"
     "outputs: {snapshot_times: [2]}\n", "beyond"),
    ("name: x\ntask: sweep\nunits: {temperature: 1, hbar: 1}\nsweep: {t_min: 5, t_max: 1}\n", "t_min"),
    ("name: x\ntask: steady\nunits: {temperature: 1, hbar: 1, gamma: 0}\n", "friction"),
    ("[1, 2", "YAML"),
    ("- 1\n- 2\n", "mapping"),
])
def test_invalid_configs(text, match):
    with pytest.raises(ConfigError, match=match):
        loads(text)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load(tmp_path / "missing.yaml")
    with pytest.raises(ConfigError):
        preset_text("fig9")
    p = tmp_path / "c.yaml"
    p.write_text(MINIMAL)
    assert load(p).name == "tiny"


def test_duplicate_observables_collapse():
    cfg = loads(MINIMAL + "outputs: {observables: [trace, trace, purity]}\n")
    assert cfg.outputs.observables == ("trace", "purity")
