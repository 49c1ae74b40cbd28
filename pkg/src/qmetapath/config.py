"""Experiment configuration: YAML (or JSON) documents with defaults for every
absent field."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .engine import QMetaConfig
from .errors import ConfigError, QMetaPathError

METHODS = ("qmetapath", "random", "gradient", "ao")
SWEEP_AXES = ("csi_error", "n_elements")


@dataclass(frozen=True)
class SystemConfig:
    n_elements: int = 100
    n_antennas: int = 64
    n_users: int = 4
    carrier_freq_hz: float = 28e9
    tx_power_dbm: float = 10.0
    noise_power_dbm: float = -90.0
    spacing_wavelengths: float = 0.5
    # coupling decay constant d0, in multiples of the element spacing
    coupling_decay_spacings: float = 1.0
    rician_k_ue: float = 10.0
    rician_k_ap: float = 10.0
    # combined antenna/element gain applied to each hop's path-loss gain
    hop_gain_db: float = 40.0
    area_size_m: float = 100.0
    min_distance_m: float = 5.0
    ris_position: tuple = (0.0, 0.0)
    ap_position: tuple = (100.0, 0.0)


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    qmeta: QMetaConfig = field(default_factory=QMetaConfig)
    episodes: int = 150
    seeds: int = 10
    seed_offset: int = 0
    baselines: tuple = ("random", "gradient", "ao")
    csi_error: float = 0.0
    gradient_steps: int = 50
    gradient_lr: float = 0.5
    ao_sweeps: int = 1
    record_latency: bool = True
    out: str = "results"

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def with_system(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, system=dataclasses.replace(self.system, **kw))

    def with_qmeta(self, **kw) -> "ExperimentConfig":
        try:
            return dataclasses.replace(self, qmeta=dataclasses.replace(self.qmeta, **kw))
        except QMetaPathError as exc:
            raise ConfigError(str(exc), field="qmeta") from exc


_SHORT_NAMES = {
    "system.n_elements": "N",
    "system.n_antennas": "Q",
    "system.n_users": "K",
    "qmeta.layers": "L",
    "qmeta.paths": "P",
    "qmeta.k_top": "k",
}


def _fail(path, message):
    short = _SHORT_NAMES.get(path)
    label = f"{path} ({short})" if short else path
    raise ConfigError(f"{label}: {message}", field=path)


def _validate(cfg: ExperimentConfig) -> None:
    s = cfg.system
    for name in ("n_elements", "n_antennas", "n_users"):
        if getattr(s, name) < 1:
            _fail(f"system.{name}", "must be >= 1")
    for name in ("carrier_freq_hz", "spacing_wavelengths", "coupling_decay_spacings", "area_size_m"):
        if getattr(s, name) <= 0:
            _fail(f"system.{name}", "must be > 0")
    for name in ("rician_k_ue", "rician_k_ap", "min_distance_m"):
        if getattr(s, name) < 0:
            _fail(f"system.{name}", "must be >= 0")
    for name in ("ris_position", "ap_position"):
        if len(getattr(s, name)) != 2:
            _fail(f"system.{name}", "must be an [x, y] pair")
    for name in ("episodes", "seeds", "gradient_steps", "ao_sweeps"):
        if getattr(cfg, name) < 1:
            _fail(name, "must be >= 1")
    if cfg.gradient_lr <= 0:
        _fail("gradient_lr", "must be > 0")
    if cfg.csi_error < 0:
        _fail("csi_error", "must be >= 0")
    for b in cfg.baselines:
        if b not in METHODS[1:]:
            _fail("baselines", f"unknown baseline {b!r} (choose from {', '.join(METHODS[1:])})")


def _build(cls, data, prefix):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        _fail(prefix or "<root>", "expected a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in names:
            _fail(path, "unknown field")
        f = names[key]
        if cls is ExperimentConfig and key == "system":
            value = _build(SystemConfig, value, "system")
        elif cls is ExperimentConfig and key == "qmeta":
            value = _build(QMetaConfig, value, "qmeta")
        else:
            value = _coerce(value, f, path)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (QMetaPathError, TypeError, ValueError) as exc:
        field_name = None
        for key in names:
            if key in str(exc):
                field_name = f"{prefix}.{key}" if prefix else key
                break
        raise ConfigError(f"{field_name or prefix or 'config'}: {exc}", field=field_name or prefix) from exc


def _coerce(value, f, path):
    default = f.default if f.default is not dataclasses.MISSING else None
    if f.default_factory is not dataclasses.MISSING:  # type: ignore[misc]
        default = f.default_factory()  # type: ignore[misc]
    if value is None:
        if f.name == "quantize_bits":
            return None
        _fail(path, "must not be null")
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int) or f.name == "quantize_bits":
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, tuple):
            if isinstance(value, str):
                value = [v for v in value.split(",") if v]
            return tuple(float(v) for v in value) if f.name.endswith("position") else tuple(value)
        if isinstance(default, str):
            return str(value)
    except (TypeError, ValueError):
        _fail(path, f"invalid value {value!r}")
    return value


def config_from_dict(data: Optional[dict]) -> ExperimentConfig:
    cfg = _build(ExperimentConfig, data, "")
    _validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    """Parse and validate a config file; absent fields take their defaults."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"parse error in {path}{where}: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    def plain(v):
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        return v

    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if dataclasses.is_dataclass(v):
            out[f.name] = {g.name: plain(getattr(v, g.name)) for g in dataclasses.fields(v)}
        else:
            out[f.name] = plain(v)
    return out


def dump_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
