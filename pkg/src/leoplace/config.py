"""Experiment configuration loaded from YAML.

The loader is strict: unknown keys and malformed values raise ConfigError
with the offending key path, so a typo in a config file fails fast instead
of silently running with defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .constellation import WalkerConfig
from .scenario import ScenarioConfig
from .solver import BnbParams, ObjectiveWeights, SaParams


class ConfigError(ValueError):
    """A configuration file could not be parsed into an experiment."""


DEFAULT_WEIGHTS = (0.3, 0.5, 0.2)


@dataclass(frozen=True)
class MethodSpec:
    """One optimisation method to run: either the full three-stage pipeline
    ("hybrid") or the nearest-first constructor alone ("greedy")."""

    name: str
    kind: str = "hybrid"
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS

    def __post_init__(self) -> None:
        if self.kind not in ("hybrid", "greedy"):
            raise ConfigError(f"method {self.name!r}: unknown kind {self.kind!r}")
        ObjectiveWeights(*self.weights)  # validates


@dataclass(frozen=True)
class SolverSettings:
    """Annealing and search knobs shared by every hybrid method."""

    sa_t0: float = 1.0
    sa_t_end: float = 0.01
    sa_iterations: int = 50_000
    sa_restarts: int = 1
    sa_restrict_to_visibility: bool = False
    bnb_gap: float = 0.005
    bnb_node_budget: int | None = 25_000
    bnb_time_budget_ms: float | None = None
    risk_mode: str = "exact"

    def __post_init__(self) -> None:
        self.sa_params(0)  # validates
        self.bnb_params()
        if self.risk_mode not in ("exact", "coarse_lb"):
            raise ConfigError(f"unknown risk_mode {self.risk_mode!r}")

    def sa_params(self, seed: int) -> SaParams:
        return SaParams(
            t0=self.sa_t0,
            t_end=self.sa_t_end,
            iterations=self.sa_iterations,
            seed=seed,
            restarts=self.sa_restarts,
            restrict_to_visibility=self.sa_restrict_to_visibility,
        )

    def bnb_params(self) -> BnbParams:
        return BnbParams(
            gap=self.bnb_gap,
            node_budget=self.bnb_node_budget,
            time_budget_ms=self.bnb_time_budget_ms,
        )


def default_methods() -> tuple[MethodSpec, ...]:
    """The comparison set: full objective, CPU only, CPU plus migration,
    and the greedy constructor with no refinement."""
    return (
        MethodSpec(name="hybrid", kind="hybrid", weights=DEFAULT_WEIGHTS),
        MethodSpec(name="cpu_only", kind="hybrid", weights=(1.0, 0.0, 0.0)),
        MethodSpec(name="cpu_mig", kind="hybrid", weights=(0.5, 0.0, 0.5)),
        MethodSpec(name="greedy_only", kind="greedy"),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int = 42
    output_dir: str = "out"
    constellation: WalkerConfig = field(default_factory=WalkerConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    solver: SolverSettings = field(default_factory=SolverSettings)
    methods: tuple[MethodSpec, ...] = field(default_factory=default_methods)

    def __post_init__(self) -> None:
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate method names in {names}")
        if not self.methods:
            raise ConfigError("at least one method required")


def _require_mapping(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(value).__name__}")
    return value


def _take(raw: dict, known: dict, path: str) -> dict:
    """Pop known keys out of raw, coercing each; reject leftovers."""
    out = {}
    for key, coerce in known.items():
        if key in raw:
            out[key] = coerce(raw.pop(key), f"{path}.{key}")
    if raw:
        unknown = ", ".join(sorted(map(str, raw)))
        raise ConfigError(f"{path}: unknown keys: {unknown}")
    return out


def _as_int(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    return v


def _as_float(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    return float(v)


def _as_bool(v, path):
    if not isinstance(v, bool):
        raise ConfigError(f"{path}: expected a boolean, got {v!r}")
    return v


def _as_str(v, path):
    if not isinstance(v, str):
        raise ConfigError(f"{path}: expected a string, got {v!r}")
    return v


def _as_opt_int(v, path):
    return None if v is None else _as_int(v, path)


def _as_opt_float(v, path):
    return None if v is None else _as_float(v, path)


def _as_float_list(n):
    def conv(v, path):
        if not isinstance(v, (list, tuple)) or (n and len(v) != n):
            raise ConfigError(f"{path}: expected a list of {n} numbers, got {v!r}")
        return tuple(_as_float(x, path) for x in v)

    return conv


def _as_int_list(v, path):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{path}: expected a non-empty list of integers")
    return tuple(_as_int(x, path) for x in v)


def _as_anchors(v, path):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{path}: expected a non-empty list of anchors")
    out = []
    for i, item in enumerate(v):
        if isinstance(item, dict):
            missing = {"name", "lat", "lon"} - set(item)
            extra = set(item) - {"name", "lat", "lon"}
            if missing or extra:
                raise ConfigError(f"{path}[{i}]: need exactly name/lat/lon keys")
            out.append(
                (
                    _as_str(item["name"], f"{path}[{i}].name"),
                    _as_float(item["lat"], f"{path}[{i}].lat"),
                    _as_float(item["lon"], f"{path}[{i}].lon"),
                )
            )
        elif isinstance(item, (list, tuple)) and len(item) == 3:
            out.append(
                (
                    _as_str(item[0], f"{path}[{i}]"),
                    _as_float(item[1], f"{path}[{i}]"),
                    _as_float(item[2], f"{path}[{i}]"),
                )
            )
        else:
            raise ConfigError(f"{path}[{i}]: expected name/lat/lon")
    return tuple(out)


def _as_sensitivity(v, path):
    m = _require_mapping(v, path)
    return {
        _as_str(k, path): _as_float(val, f"{path}.{k}") for k, val in m.items()
    }


def _constellation_from(raw: dict, path: str) -> WalkerConfig:
    kw = _take(
        raw,
        {
            "num_planes": _as_int,
            "sats_per_plane": _as_int,
            "altitude_km": _as_float,
            "inclination_deg": _as_float,
            "raan_spread_deg": _as_float,
            "phasing_offset_deg": _as_float,
            "epoch_duration_s": _as_float,
            "num_epochs": _as_int,
            "min_elevation_deg": _as_float,
        },
        path,
    )
    try:
        return WalkerConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _scenario_from(raw: dict, path: str) -> ScenarioConfig:
    kw = _take(
        raw,
        {
            "num_slices": _as_int,
            "users_per_slice": _as_int,
            "anchors": _as_anchors,
            "user_spread_deg": _as_float,
            "chain_length_choices": _as_int_list,
            "delay_budget_range_ms": _as_float_list(2),
            "criticality_range": _as_float_list(2),
            "isolation_range": _as_float_list(2),
            "sensitivity": _as_sensitivity,
            "activation_cpu": _as_float,
            "per_user_cpu": _as_float,
            "proc_delay_ms": _as_float,
            "migration_disruption": _as_float,
            "cap_cpu": _as_float,
            "instances_per_type": _as_int,
            "isl_capacity_flows": _as_int,
            "risk_per_assignment": _as_bool,
        },
        path,
    )
    try:
        return ScenarioConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _solver_from(raw: dict, path: str) -> SolverSettings:
    sa = _require_mapping(raw.pop("sa", None), f"{path}.sa")
    bnb = _require_mapping(raw.pop("bnb", None), f"{path}.bnb")
    kw = _take(raw, {"risk_mode": _as_str}, path)
    kw.update(
        {
            f"sa_{k}": v
            for k, v in _take(
                sa,
                {
                    "t0": _as_float,
                    "t_end": _as_float,
                    "iterations": _as_int,
                    "restarts": _as_int,
                    "restrict_to_visibility": _as_bool,
                },
                f"{path}.sa",
            ).items()
        }
    )
    kw.update(
        {
            f"bnb_{k}": v
            for k, v in _take(
                bnb,
                {
                    "gap": _as_float,
                    "node_budget": _as_opt_int,
                    "time_budget_ms": _as_opt_float,
                },
                f"{path}.bnb",
            ).items()
        }
    )
    try:
        return SolverSettings(**kw)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _methods_from(raw, path: str) -> tuple[MethodSpec, ...]:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError(f"{path}: expected a non-empty list of methods")
    out = []
    for i, item in enumerate(raw):
        m = _require_mapping(item, f"{path}[{i}]")
        kw = _take(
            dict(m),
            {
                "name": _as_str,
                "kind": _as_str,
                "weights": _as_float_list(3),
            },
            f"{path}[{i}]",
        )
        if "name" not in kw:
            raise ConfigError(f"{path}[{i}]: method needs a name")
        try:
            out.append(MethodSpec(**kw))
        except ValueError as exc:
            raise ConfigError(f"{path}[{i}]: {exc}") from exc
    return tuple(out)


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(_require_mapping(raw, "config"))
    con = _require_mapping(raw.pop("constellation", None), "constellation")
    scen = _require_mapping(raw.pop("scenario", None), "scenario")
    solver = _require_mapping(raw.pop("solver", None), "solver")
    methods_raw = raw.pop("methods", None)
    kw = _take(
        raw,
        {"master_seed": _as_int, "output_dir": _as_str},
        "config",
    )
    kw["constellation"] = _constellation_from(dict(con), "constellation")
    kw["scenario"] = _scenario_from(dict(scen), "scenario")
    kw["solver"] = _solver_from(dict(solver), "solver")
    if methods_raw is not None:
        kw["methods"] = _methods_from(methods_raw, "methods")
    try:
        return ExperimentConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a YAML experiment file; raises ConfigError on any problem."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: invalid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    return config_from_dict(raw)
