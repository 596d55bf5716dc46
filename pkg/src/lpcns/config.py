"""Run configuration: flat ``section.key = value`` text files.

Example::

    grid.dim = 2
    grid.n_per_axis = 64
    model.chi = 1.0
    model.grav = 0, -1
    integrator.dt = 1e-3
    integrator.t_end = 1.0
    monitor.C0 = 0.1
    monitor.cadence = 10
    initial.preset = near_homogeneous_bacteria
    output.dir = out

A key without a section prefix is accepted when its name is unique across
sections (``C0 = 0.1`` means ``monitor.C0``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .initial import PRESETS, InitialConditionSpec
from .model import ModelParams
from .monitor import MonitorConfig, MonitorRangeWarning
from .snapshot import read_manifest


class ConfigError(ValueError):
    """Invalid configuration (CLI exit status 2)."""


@dataclass(frozen=True)
class GridConfig:
    dim: int = 2
    n_per_axis: int = 32


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    t_end: float = 0.1
    cfl_warn: float = 0.5


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    checkpoint_every: int = 0
    keep_spectra: bool = False


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    model: ModelParams = field(default_factory=ModelParams)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    cadence: int = 1
    initial: InitialConditionSpec = field(default_factory=InitialConditionSpec)
    snapshot: str | None = None
    output: OutputConfig = field(default_factory=OutputConfig)

    def flat(self) -> dict[str, object]:
        """All settings as ``section.key -> value``."""
        out: dict[str, object] = {}
        for section, (attr, names) in _SECTIONS.items():
            obj = getattr(self, attr)
            for name in names:
                out[f"{section}.{name}"] = getattr(obj, name)
        out["model.grav"] = tuple(self.model.gravity(self.grid.dim))
        return out


# section -> (RunConfig attribute, accepted keys)
_SECTIONS = {
    "grid": ("grid", ("dim", "n_per_axis")),
    "model": ("model", ("chi", "grav", "dealias")),
    "integrator": ("integrator", ("dt", "t_end", "cfl_warn")),
    "monitor": ("monitor", ("C0", "r", "s", "eps", "c_exponent")),
    "initial": ("initial", ("preset", "amplitude", "seed", "n_mean", "c_mean", "decay", "kmax")),
    "output": ("output", ("dir", "checkpoint_every", "keep_spectra")),
}
_EXTRA = {"monitor.cadence": "cadence", "initial.snapshot": "snapshot"}


def _known_keys() -> list[str]:
    keys = [f"{s}.{k}" for s, (_, names) in _SECTIONS.items() for k in names]
    return keys + list(_EXTRA)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(kind, text: str):
    if kind is bool:
        return _parse_bool(text)
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    if kind == "vector":
        if text.strip().lower() in ("", "none", "default"):
            return None
        return tuple(float(p) for p in text.replace("(", "").replace(")", "").split(","))
    return text.strip()


def _kind(dc, name):
    for f in fields(dc):
        if f.name == name:
            t = str(f.type)
            if "tuple" in t:
                return "vector"
            for kind in (bool, int, float, str):
                if t.startswith(kind.__name__):
                    return kind
    return str


def resolve_key(key: str) -> str:
    key = key.strip()
    known = _known_keys()
    if key in known:
        return key
    if "." not in key:
        matches = [k for k in known if k.split(".", 1)[1] == key]
        if len(matches) == 1:
            return matches[0]
        if len(matches) > 1:
            raise ConfigError(f"ambiguous key {key!r}: {matches}")
    raise ConfigError(f"unknown key {key!r}")


def build_config(items: dict[str, str]) -> RunConfig:
    """Validated :class:`RunConfig` from raw key/value strings."""
    grouped: dict[str, dict[str, object]] = {s: {} for s in _SECTIONS}
    extra: dict[str, object] = {}
    for raw_key, text in items.items():
        key = resolve_key(raw_key)
        try:
            if key in _EXTRA:
                value = int(text) if key == "monitor.cadence" else (text.strip() or None)
                extra[_EXTRA[key]] = value
                continue
            section, name = key.split(".", 1)
            dc = type(getattr(RunConfig(), _SECTIONS[section][0]))
            grouped[section][name] = _convert(_kind(dc, name), text)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None

    base = RunConfig()
    try:
        grid = replace(base.grid, **grouped["grid"])
        model = replace(base.model, **grouped["model"])
        integ = replace(base.integrator, **grouped["integrator"])
        mon = replace(base.monitor, **grouped["monitor"])
        init = replace(base.initial, **grouped["initial"])
        out = replace(base.output, **grouped["output"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(grid, model, integ, mon, int(extra.get("cadence", base.cadence)), init,
                    extra.get("snapshot"), out)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    g = cfg.grid
    n = g.n_per_axis
    if g.dim not in (2, 3):
        raise ConfigError(f"grid.dim must be 2 or 3, got {g.dim}")
    if n < 8 or n & (n - 1):
        raise ConfigError(f"grid.n_per_axis must be a power of two >= 8, got {n}")
    if cfg.model.grav is not None and len(cfg.model.grav) != g.dim:
        raise ConfigError(f"model.grav needs {g.dim} components")
    if not cfg.integrator.dt > 0:
        raise ConfigError("integrator.dt must be positive")
    if not cfg.integrator.t_end >= 0:
        raise ConfigError("integrator.t_end must be non-negative")
    if cfg.cadence < 1:
        raise ConfigError("monitor.cadence must be >= 1")
    if cfg.output.checkpoint_every < 0:
        raise ConfigError("output.checkpoint_every must be >= 0")
    if cfg.initial.preset not in PRESETS:
        raise ConfigError(f"unknown preset {cfg.initial.preset!r}")
    for msg in cfg.monitor.range_warnings():
        warnings.warn(msg, MonitorRangeWarning, stacklevel=3)


def parse_config(path, overrides: dict[str, str] | None = None) -> RunConfig:
    """Read a config file and apply ``section.key -> value`` overrides."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        items = read_manifest(p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    items = {resolve_key(k): v for k, v in items.items()}
    for k, v in (overrides or {}).items():
        items[resolve_key(k)] = v
    return build_config(items)


def config_text(cfg: RunConfig) -> str:
    from .snapshot import format_value

    lines = [f"{k} = {format_value(v) if v is not None else 'none'}" for k, v in cfg.flat().items()]
    lines.append(f"monitor.cadence = {cfg.cadence}")
    lines.append(f"initial.snapshot = {cfg.snapshot or ''}")
    return "\n".join(lines) + "\n"
