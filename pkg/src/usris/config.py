"""
Run configuration.

Config files are YAML mappings with the sections below; every key is
optional and unknown keys are rejected. An empty file gives the defaults::

    seed: 0
    physics:
      frequency_hz: 2.5e9
      layer_spacing_m: 0.02
      penetration_loss: 0.8
      noise_power_w: 1.0e-6
      p_max_w: [0.001, ..., 1.0]      # 10 log-spaced points by default
      user_antennas: 2
      bs_antennas: 8
      user_position_m: [0, 0, 0]
      bs_position_m: [0, 10, 0]
      element_pitch_m: null           # null -> wavelength / 4
      antenna_spacing_m: null         # null -> wavelength / 2
    layout:
      scale: 0.125                    # area ratio, a power of 1/2
      n_active: 256                   # full-scale budget, scaled with the grids
      fold_angles: 3
      single_layer_grid: [16, 16]
      multilayer_grid: [8, 16]
      multilayer_layers: 2
      sparse_grid: [8, 16]
      sparse_layers: 3
      stage1_init: random             # or "dense"
    search:  {d, neighbors, tabu_capacity, stage1_max_iters, stage2_max_iters,
              stall_iters, outer_loops, aspiration}
    ao:      {tol, max_iters, search_tol, search_max_iters}
    metrics: {ear_threshold}
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from .errors import ConfigError
from .scenario import AOParams
from .search import SearchParams


def _default_powers():
    return tuple(float(p) for p in np.logspace(-3, 0, 10))


@dataclass(frozen=True)
class SystemConfig:
    frequency_hz: float = 2.5e9
    layer_spacing_m: float = 0.02
    penetration_loss: float = 0.8
    noise_power_w: float = 1e-6
    p_max_w: tuple = field(default_factory=_default_powers)
    user_antennas: int = 2
    bs_antennas: int = 8
    user_position_m: tuple = (0.0, 0.0, 0.0)
    bs_position_m: tuple = (0.0, 10.0, 0.0)
    element_pitch_m: float | None = None
    antenna_spacing_m: float | None = None

    scale: float = 0.125
    n_active: int = 256
    fold_angles: int = 3
    single_layer_grid: tuple = (16, 16)
    multilayer_grid: tuple = (8, 16)
    multilayer_layers: int = 2
    sparse_grid: tuple = (8, 16)
    sparse_layers: int = 3
    stage1_init: str = "random"

    search: SearchParams = SearchParams()
    ao: AOParams = AOParams()
    ear_threshold: float = 0.1
    seed: int = 0

    def __post_init__(self):
        validate(self)

    @property
    def wavelength(self) -> float:
        from .channel import wavelength

        return wavelength(self.frequency_hz)

    @property
    def pitch(self) -> float:
        return self.element_pitch_m if self.element_pitch_m is not None else self.wavelength / 4

    @property
    def antenna_spacing(self) -> float:
        return self.antenna_spacing_m if self.antenna_spacing_m is not None else self.wavelength / 2


_SECTIONS = {
    "physics": ("frequency_hz", "layer_spacing_m", "penetration_loss", "noise_power_w", "p_max_w",
                "user_antennas", "bs_antennas", "user_position_m", "bs_position_m",
                "element_pitch_m", "antenna_spacing_m"),
    "layout": ("scale", "n_active", "fold_angles", "single_layer_grid", "multilayer_grid",
               "multilayer_layers", "sparse_grid", "sparse_layers", "stage1_init"),
    "metrics": ("ear_threshold",),
}
_NESTED = {"search": SearchParams, "ao": AOParams}
_TUPLES = {"p_max_w", "user_position_m", "bs_position_m", "single_layer_grid", "multilayer_grid", "sparse_grid"}
_SECTION_OF = {k: s for s, keys in _SECTIONS.items() for k in keys}


def _positive(cfg, name):
    value = getattr(cfg, name)
    if not (isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0):
        raise ConfigError(f"must be positive, got {value!r}", _path(name))


def _path(name):
    section = _SECTION_OF.get(name)
    return f"{section}.{name}" if section else name


def _grid(cfg, name):
    grid = getattr(cfg, name)
    if len(grid) != 2 or any(int(v) != v or v < 1 for v in grid):
        raise ConfigError(f"must be [rows, cols] of positive integers, got {list(grid)!r}", _path(name))
    if grid[1] < 2:
        raise ConfigError("needs at least 2 columns", _path(name))


def validate(cfg: SystemConfig) -> None:
    for name in ("frequency_hz", "layer_spacing_m", "penetration_loss", "noise_power_w",
                 "user_antennas", "bs_antennas", "fold_angles", "multilayer_layers", "sparse_layers",
                 "scale", "ear_threshold"):
        _positive(cfg, name)
    for name in ("element_pitch_m", "antenna_spacing_m"):
        if getattr(cfg, name) is not None:
            _positive(cfg, name)
    for name in ("user_antennas", "bs_antennas", "fold_angles", "multilayer_layers", "sparse_layers"):
        if isinstance(getattr(cfg, name), bool) or not isinstance(getattr(cfg, name), int):
            raise ConfigError(f"must be an integer, got {getattr(cfg, name)!r}", _path(name))
    if cfg.penetration_loss > 1:
        raise ConfigError("must lie in (0, 1]", _path("penetration_loss"))
    if cfg.ear_threshold > 1:
        raise ConfigError("must lie in (0, 1]", _path("ear_threshold"))
    if not cfg.p_max_w or any(not (isinstance(p, (int, float)) and p > 0) for p in cfg.p_max_w):
        raise ConfigError("must be a nonempty list of positive powers", _path("p_max_w"))
    for name in ("user_position_m", "bs_position_m"):
        if len(getattr(cfg, name)) != 3:
            raise ConfigError("must be a 3-D point", _path(name))
    for name in ("single_layer_grid", "multilayer_grid", "sparse_grid"):
        _grid(cfg, name)
    if isinstance(cfg.n_active, bool) or not isinstance(cfg.n_active, int) or cfg.n_active < 0:
        raise ConfigError("must be a non-negative integer", _path("n_active"))
    if cfg.stage1_init not in ("random", "dense"):
        raise ConfigError(f"must be 'random' or 'dense', got {cfg.stage1_init!r}", _path("stage1_init"))
    halvings = -math.log2(cfg.scale)
    if cfg.scale > 1 or abs(halvings - round(halvings)) > 1e-12:
        raise ConfigError(f"must be a power of 1/2 no larger than 1, got {cfg.scale!r}", _path("scale"))
    s = cfg.search
    if s.d < 1 or s.neighbors < 1 or s.tabu_capacity < 0 or s.stage1_max_iters < 0 \
            or s.stage2_max_iters < 0 or s.stall_iters < 0 or s.outer_loops < 1:
        raise ConfigError("search parameters out of range", "search")
    a = cfg.ao
    if not (a.tol > 0 and a.search_tol > 0 and a.max_iters >= 1 and a.search_max_iters >= 1):
        raise ConfigError("AO tolerances must be positive and iteration caps >= 1", "ao")


def _number(value):
    # YAML 1.1 reads "1e-6" and "2.5e9" as strings
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def _build_nested(cls, section, raw):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError("must be a mapping", section)
    known = {f.name: f for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", f"{section}.{key}")
    kwargs = {}
    for key, value in raw.items():
        value = _number(value)
        default = getattr(cls(), key)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"expected a boolean, got {value!r}", f"{section}.{key}")
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"expected an integer, got {value!r}", f"{section}.{key}")
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"expected a number, got {value!r}", f"{section}.{key}")
            value = float(value)
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(tree) -> SystemConfig:
    if tree is None:
        tree = {}
    if not isinstance(tree, dict):
        raise ConfigError("top level must be a mapping")
    kwargs = {}
    for key, value in tree.items():
        if key == "seed":
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ConfigError(f"must be a non-negative integer, got {value!r}", "seed")
            kwargs["seed"] = value
        elif key in _NESTED:
            kwargs[key] = _build_nested(_NESTED[key], key, value)
        elif key in _SECTIONS:
            if value is None:
                continue
            if not isinstance(value, dict):
                raise ConfigError("must be a mapping", key)
            for sub, subval in value.items():
                if sub not in _SECTIONS[key]:
                    raise ConfigError(f"unknown key {sub!r}", f"{key}.{sub}")
                if sub in _TUPLES:
                    if not isinstance(subval, (list, tuple)):
                        raise ConfigError(f"expected a list, got {subval!r}", f"{key}.{sub}")
                    subval = tuple(_number(v) for v in subval)
                elif sub != "stage1_init":
                    subval = _number(subval)
                kwargs[sub] = subval
        else:
            raise ConfigError(f"unknown key {key!r}", key)
    try:
        return SystemConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> SystemConfig:
    try:
        with open(path) as fh:
            tree = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    return config_from_dict(tree)


def config_to_dict(cfg: SystemConfig) -> dict:
    tree = {"seed": cfg.seed}
    for section, keys in _SECTIONS.items():
        tree[section] = {}
        for key in keys:
            value = getattr(cfg, key)
            if isinstance(value, tuple):
                value = [float(v) if isinstance(v, float) else v for v in value]
            tree[section][key] = value
    for section in _NESTED:
        tree[section] = asdict(getattr(cfg, section))
    return tree


def dump_config(cfg: SystemConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)


def override(cfg: SystemConfig, **changes) -> SystemConfig:
    """Copy with top-level fields replaced; ``None`` values are ignored."""
    changes = {k: v for k, v in changes.items() if v is not None}
    try:
        return replace(cfg, **changes)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
