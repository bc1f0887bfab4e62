"""Scenario configuration: YAML file <-> validated dataclasses.

All times, temperatures and rates in a config are dimensionless
(t~ = t sqrt(V0/I), T~ = T/V0, hbar~, Gamma~ = Gamma sqrt(I/V0)); potential
amplitudes are in units of V0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

TASKS = ("evolve", "steady", "sweep")
INITIAL_KINDS = ("wavepacket", "superposition", "gibbs", "momentum")
OBSERVABLES = ("trace", "p_mean", "p2_mean", "energy", "purity", "min_eigenvalue",
               "wigner_min", "leakage", "distance_gibbs", "coherence")


class ConfigError(ValueError):
    """Malformed, inconsistent or unreadable scenario configuration."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_window = {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "task", "units"],
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "description": {"type": "string"},
        "task": {"enum": list(TASKS)},
        "units": {
            "type": "object", "additionalProperties": False,
            "required": ["temperature", "hbar"],
            "properties": {"temperature": _pos, "hbar": _pos, "gamma": _nonneg,
                           "V0": {"anyOf": [_pos, {"type": "null"}]}},
        },
        "potential": {
            "type": "object", "additionalProperties": False,
            "properties": {"terms": {"type": "array", "items": {
                "type": "array", "minItems": 3, "maxItems": 3,
                "prefixItems": [{"type": "integer", "minimum": 1}, _num, _num]}}},
        },
        "initial": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(INITIAL_KINDS)},
                "sigma": _pos, "alpha0": _num,
                "centers": {"type": "array", "items": _num},
                "weights": {"type": "array", "items": _num},
                "temperature": {"anyOf": [_pos, {"type": "null"}]},
                "m": {"type": "integer"},
            },
        },
        "evolution": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "t_final": _nonneg,
                "dt": {"anyOf": [_pos, {"type": "null"}]},
                "integrator": {"enum": ["rk4_fixed", "rk4_adaptive"]},
                "tolerance": _pos,
                "mode": {"enum": ["full", "unitary_only", "no_angular_diffusion"]},
                "representation": {"enum": ["matrix", "aux_wigner"]},
                "M": {"anyOf": [{"type": "integer", "minimum": 1}, {"const": "auto"}]},
            },
        },
        "steady": {
            "type": "object", "additionalProperties": False,
            "properties": {"tol": _pos, "method": {"enum": ["propagate", "direct", "auto"]},
                           "boundary_tol": _pos, "M_max": {"type": "integer", "minimum": 2},
                           "max_time": _pos},
        },
        "sweep": {
            "type": "object", "additionalProperties": False,
            "properties": {"t_min": _pos, "t_max": _pos, "n_points": {"type": "integer", "minimum": 2},
                           "intermediate_window": _window, "high_window": _window,
                           "workers": {"anyOf": [{"type": "integer", "minimum": 1}, {"type": "null"}]}},
        },
        "outputs": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "snapshot_times": {"type": "array", "items": _nonneg},
                "revival_fractions": {"type": "array", "items": _nonneg},
                "observables": {"type": "array", "items": {"enum": list(OBSERVABLES)}},
                "record_interval": {"anyOf": [_pos, {"type": "null"}]},
                "n_alpha": {"anyOf": [{"type": "integer", "minimum": 4}, {"type": "null"}]},
                "directory": {"type": "string"},
            },
        },
    },
}


@dataclass(frozen=True)
class UnitsConfig:
    temperature: float
    hbar: float
    gamma: float = 1.0
    V0: float | None = None


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "wavepacket"
    sigma: float = 0.4
    alpha0: float = 0.0
    centers: tuple = ()
    weights: tuple = ()
    temperature: float | None = None   # gibbs start; defaults to the bath temperature
    m: int = 0


@dataclass(frozen=True)
class EvolutionSettings:
    t_final: float = 5.0
    dt: float | None = None
    integrator: str = "rk4_fixed"
    tolerance: float = 1e-8
    mode: str = "full"
    representation: str = "matrix"
    M: int | str = 48


@dataclass(frozen=True)
class SteadySettings:
    tol: float = 1e-9
    method: str = "auto"
    boundary_tol: float = 1e-8
    M_max: int = 160
    max_time: float = 1e3


@dataclass(frozen=True)
class SweepRange:
    t_min: float = 0.1
    t_max: float = 20.0
    n_points: int = 10
    intermediate_window: tuple = (0.5, 2.0)
    high_window: tuple = (6.0, 20.0)
    workers: int | None = None


@dataclass(frozen=True)
class OutputSettings:
    snapshot_times: tuple = ()
    revival_fractions: tuple = ()
    observables: tuple = ("trace", "p_mean", "p2_mean", "energy", "purity", "min_eigenvalue", "leakage")
    record_interval: float | None = None
    n_alpha: int | None = None
    directory: str = ""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    task: str
    units: UnitsConfig
    description: str = ""
    potential: tuple = ()          # (k, a_k, b_k) in units of V0
    initial: InitialConfig = field(default_factory=InitialConfig)
    evolution: EvolutionSettings = field(default_factory=EvolutionSettings)
    steady: SteadySettings = field(default_factory=SteadySettings)
    sweep: SweepRange = field(default_factory=SweepRange)
    outputs: OutputSettings = field(default_factory=OutputSettings)

    @property
    def output_directory(self) -> str:
        return self.outputs.directory or f"runs/{self.name}"


_SECTIONS = {"units": UnitsConfig, "initial": InitialConfig, "evolution": EvolutionSettings,
             "steady": SteadySettings, "sweep": SweepRange, "outputs": OutputSettings}


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


def _listify(x):
    if isinstance(x, (list, tuple)):
        return [_listify(v) for v in x]
    return x


def _check_consistency(cfg: ScenarioConfig) -> None:
    ini = cfg.initial
    if ini.kind == "superposition":
        if not ini.centers:
            raise ConfigError("superposition start needs at least one entry in initial.centers")
        if ini.weights and len(ini.weights) != len(ini.centers):
            raise ConfigError("initial.weights must match initial.centers in length")
    if cfg.sweep.t_min >= cfg.sweep.t_max:
        raise ConfigError("sweep.t_min must be below sweep.t_max")
    for name in ("intermediate_window", "high_window"):
        lo, hi = getattr(cfg.sweep, name)
        if lo >= hi:
            raise ConfigError(f"sweep.{name} must be increasing")
    if cfg.evolution.mode != "unitary_only" and cfg.units.gamma == 0 and cfg.task != "evolve":
        raise ConfigError(f"task {cfg.task!r} needs a positive friction rate")
    if cfg.task == "steady" and cfg.units.gamma <= 0:
        raise ConfigError("steady-state search needs gamma > 0")
    for t in cfg.outputs.snapshot_times:
        if t > cfg.evolution.t_final * (1 + 1e-12):
            raise ConfigError(f"snapshot time {t} lies beyond t_final={cfg.evolution.t_final}")
    if cfg.outputs.record_interval and cfg.outputs.record_interval > max(cfg.evolution.t_final, 0) > 0:
        raise ConfigError("record_interval exceeds t_final")


def from_dict(data: dict) -> ScenarioConfig:
    """Validate against the schema and build the dataclasses (no compute)."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    kwargs = {"name": data["name"], "task": data["task"], "description": data.get("description", "")}
    for key, cls in _SECTIONS.items():
        section = {k: _tuplify(v) for k, v in (data.get(key) or {}).items()}
        if key == "outputs" and "observables" in section:
            section["observables"] = tuple(dict.fromkeys(section["observables"]))
        kwargs[key] = cls(**section)
    kwargs["potential"] = tuple((int(k), float(a), float(b))
                                for k, a, b in (data.get("potential") or {}).get("terms", []))
    cfg = ScenarioConfig(**kwargs)
    _check_consistency(cfg)
    return cfg


def to_dict(cfg: ScenarioConfig) -> dict:
    """Fully resolved mapping; from_dict(to_dict(c)) == c."""
    out = {"name": cfg.name, "task": cfg.task}
    if cfg.description:
        out["description"] = cfg.description
    out["units"] = _listify(asdict(cfg.units))
    out["potential"] = {"terms": _listify(cfg.potential)}
    for key in ("initial", "evolution", "steady", "sweep", "outputs"):
        section = getattr(cfg, key)
        out[key] = {f.name: _listify(getattr(section, f.name)) for f in fields(section)}
    return out


def loads(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from None
    return from_dict(data)


def dumps(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None)


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


PRESETS = ("fig2", "fig3a", "fig3b", "fig3c", "fig3d", "fig4")


def preset_text(name: str) -> str:
    """The pinned YAML of a named preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("rotorlab.presets").joinpath(f"{name}.yaml").read_text()


def load_preset(name: str) -> ScenarioConfig:
    return loads(preset_text(name))
