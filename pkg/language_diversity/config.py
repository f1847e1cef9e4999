"""Configuration utilities for simulation runs and sweeps."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Mapping, Optional, Tuple

try:  # pragma: no cover - optional dependency
    import yaml  # type: ignore
except ImportError:  # pragma: no cover - optional dependency
    yaml = None

from .evolution import ModelParams, Strategy
from .experiments import DEFAULT_N_VALUES, DEFAULT_R_GRID, AnalysisOptions

OUTPUT_FORMATS = ("csv", "jsonl")


class ConfigError(ValueError):
    """Raised when a configuration document is malformed or violates a constraint."""

    def __init__(self, key: str, reason: str) -> None:
        super().__init__(f"config key '{key}': {reason}")
        self.key = key
        self.reason = reason


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration for every subcommand."""

    n: int = 100
    m: int = 8
    s: int = 15
    q: int = 4
    strategy: Strategy = Strategy.MODEL_A
    r: float = 0.1
    generations: int = 500
    include_parent: bool = True
    fitness_includes_self: bool = True
    seed: int = 0
    models: Tuple[Strategy, ...] = tuple(Strategy)
    n_values: Tuple[int, ...] = DEFAULT_N_VALUES
    r_grid: Tuple[float, ...] = DEFAULT_R_GRID
    realizations: int = 100
    k_min: int = 1
    k_max: int = 10
    restarts: int = 10
    max_passes: int = 100
    exclude_self_in_assignment: bool = True
    r_cutoff: float = 0.03
    steady_window: int = 50
    steady_tol: float = 0.02
    workers: int = 1
    out_dir: Path = Path("results")
    formats: Tuple[str, ...] = OUTPUT_FORMATS

    def model_params(self) -> ModelParams:
        return ModelParams(
            n=self.n,
            m=self.m,
            s=self.s,
            q=self.q,
            strategy=self.strategy,
            r_rel=self.r,
            generations=self.generations,
            include_parent=self.include_parent,
            fitness_includes_self=self.fitness_includes_self,
            seed=self.seed,
        )

    def analysis_options(self) -> AnalysisOptions:
        return AnalysisOptions(
            k_min=self.k_min,
            k_max=self.k_max,
            restarts=self.restarts,
            max_passes=self.max_passes,
            exclude_self_in_assignment=self.exclude_self_in_assignment,
            steady_window=self.steady_window,
            steady_tol=self.steady_tol,
        )


def _integer(key: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if not math.isfinite(value) or int(value) != value:
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return int(value)


def _real(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    return float(value)


def _boolean(key: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(key, f"expected true or false, got {value!r}")
    return value


def _strategy(key: str, value: Any) -> Strategy:
    try:
        return Strategy(str(value).strip().upper())
    except ValueError:
        choices = ", ".join(strategy.value for strategy in Strategy)
        raise ConfigError(key, f"unknown strategy {value!r}; expected one of {choices}") from None


def _path(key: str, value: Any) -> Path:
    if not isinstance(value, str) or not value.strip():
        raise ConfigError(key, f"expected a path string, got {value!r}")
    return Path(value)


def _items(key: str, value: Any) -> Iterable[Any]:
    if isinstance(value, str):
        parts = [part.strip() for part in value.split(",") if part.strip()]
        return [_scalar(part) for part in parts]
    if isinstance(value, (list, tuple)):
        for item in value:
            if isinstance(item, (list, tuple, dict)):
                raise ConfigError(key, "nested values are not allowed")
        return value
    return [value]


def _scalar(text: str) -> Any:
    if yaml is not None:
        return yaml.safe_load(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _listing(item: Callable[[str, Any], Any]) -> Callable[[str, Any], Tuple[Any, ...]]:
    def coerce(key: str, value: Any) -> Tuple[Any, ...]:
        values = tuple(item(key, element) for element in _items(key, value))
        if not values:
            raise ConfigError(key, "expected at least one value")
        return values

    return coerce


def _formats(key: str, value: Any) -> Tuple[str, ...]:
    values = _listing(lambda _key, element: str(element).strip().lower())(key, value)
    unknown = sorted(set(values) - set(OUTPUT_FORMATS))
    if unknown:
        raise ConfigError(key, f"unsupported output formats {unknown}; expected {list(OUTPUT_FORMATS)}")
    return values


_COERCERS: Dict[str, Callable[[str, Any], Any]] = {
    "n": _integer,
    "m": _integer,
    "s": _integer,
    "q": _integer,
    "strategy": _strategy,
    "r": _real,
    "generations": _integer,
    "include_parent": _boolean,
    "fitness_includes_self": _boolean,
    "seed": _integer,
    "models": _listing(_strategy),
    "n_values": _listing(_integer),
    "r_grid": _listing(_real),
    "realizations": _integer,
    "k_min": _integer,
    "k_max": _integer,
    "restarts": _integer,
    "max_passes": _integer,
    "exclude_self_in_assignment": _boolean,
    "r_cutoff": _real,
    "steady_window": _integer,
    "steady_tol": _real,
    "workers": _integer,
    "out_dir": _path,
    "formats": _formats,
}
assert set(_COERCERS) == {item.name for item in fields(RunConfig)}


def _require(condition: bool, key: str, reason: str) -> None:
    if not condition:
        raise ConfigError(key, reason)


def validate(config: RunConfig) -> RunConfig:
    """Check cross-field constraints and return ``config`` unchanged."""

    for key in ("n", "m", "s", "q", "realizations", "restarts", "max_passes", "workers", "k_min"):
        _require(getattr(config, key) >= 1, key, f"must be at least 1, got {getattr(config, key)}")
    _require(config.generations >= 0, "generations", f"must be non-negative, got {config.generations}")
    _require(0 < config.r <= 1, "r", f"must lie in (0, 1], got {config.r}")
    _require(0 <= config.seed < 2**64, "seed", f"must be an unsigned 64-bit integer, got {config.seed}")
    _require(config.k_max >= config.k_min, "k_max", f"must be at least k_min={config.k_min}, got {config.k_max}")
    _require(0 <= config.r_cutoff < 1, "r_cutoff", f"must lie in [0, 1), got {config.r_cutoff}")
    _require(config.steady_window >= 2, "steady_window", f"must be at least 2, got {config.steady_window}")
    _require(config.steady_tol >= 0, "steady_tol", f"must be non-negative, got {config.steady_tol}")
    for value in config.n_values:
        _require(value >= 1, "n_values", f"population sizes must be at least 1, got {value}")
    for value in config.r_grid:
        _require(0 < value <= 1, "r_grid", f"relative sizes must lie in (0, 1], got {value}")
    try:
        config.model_params()
    except ValueError as error:
        raise ConfigError("include_parent", str(error)) from error
    return config


def from_mapping(data: Mapping[str, Any], base: Optional[RunConfig] = None) -> RunConfig:
    """Build a validated ``RunConfig`` from a flat mapping of scalars."""

    updates: Dict[str, Any] = {}
    for key, value in data.items():
        name = str(key)
        if name not in _COERCERS:
            raise ConfigError(name, "unknown configuration key")
        if isinstance(value, dict):
            raise ConfigError(name, "nested mappings are not allowed")
        if value is None:
            raise ConfigError(name, "a value is required")
        updates[name] = _COERCERS[name](name, value)
    return validate(replace(base or RunConfig(), **updates))


def parse_config(text: str) -> RunConfig:
    """Parse a flat YAML document (``key: value`` lines, ``#`` comments)."""

    if yaml is None:
        raise RuntimeError("PyYAML is required to parse YAML configuration documents. Install it or use JSON.")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as error:
        raise ConfigError("<document>", f"malformed YAML: {error}") from error
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<document>", "expected a mapping of keys to values")
    return from_mapping(data)


def load_config(path: Optional[Path] = None) -> RunConfig:
    """Load configuration from a YAML or JSON file; ``None`` means defaults."""

    if path is None:
        return RunConfig()
    if not path.exists():
        raise ConfigError("<document>", f"configuration file {path} does not exist")

    text = path.read_text(encoding="utf-8")
    if path.suffix in {".yml", ".yaml"}:
        return parse_config(text)
    if path.suffix == ".json":
        try:
            data = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as error:
            raise ConfigError("<document>", f"malformed JSON: {error}") from error
        if not isinstance(data, dict):
            raise ConfigError("<document>", "expected a mapping of keys to values")
        return from_mapping(data)
    raise ValueError(f"Unsupported config extension: {path.suffix}")


def parse_override(assignment: str) -> Tuple[str, Any]:
    """Split a ``key=value`` command-line override and parse the value as a YAML scalar."""

    key, separator, raw = assignment.partition("=")
    if not separator or not key.strip():
        raise ConfigError(assignment, "overrides must look like key=value")
    return key.strip(), _scalar(raw.strip()) if raw.strip() else raw


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    return from_mapping(overrides, base=config)


__all__ = [
    "ConfigError",
    "OUTPUT_FORMATS",
    "RunConfig",
    "apply_overrides",
    "from_mapping",
    "load_config",
    "parse_config",
    "parse_override",
    "validate",
]
