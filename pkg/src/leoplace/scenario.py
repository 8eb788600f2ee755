"""Workload model: slices, users, chain demands and risk parameters.

A scenario is generated from a single seed through one PCG64 stream with a
fixed draw order (documented on ``generate_scenario``), so equal seeds give
byte-equal scenarios on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .constellation import GroundPoint

# Canonical VNF catalogue: name -> tamper sensitivity.  Order matters for
# reproducible chain draws.
DEFAULT_SENSITIVITY = {
    "FW": 0.6,
    "IDS": 0.8,
    "ENC": 0.9,
    "TM": 0.4,
    "SIEM": 0.6,
}

DEFAULT_ANCHORS = (
    ("London", 51.5, -0.13),
    ("NewYork", 40.7, -74.0),
    ("Tokyo", 35.7, 139.7),
    ("Sydney", -33.9, 151.2),
    ("Paris", 48.9, 2.35),
)


@dataclass(frozen=True)
class VnfType:
    """One function type in the catalogue with its per-instance costs."""

    name: str
    sensitivity: float
    activation_cpu: float = 1.0
    per_user_cpu: float = 0.1
    proc_delay_ms: float = 0.5
    migration_disruption: float = 1.0


@dataclass(frozen=True)
class Slice:
    """A tenant slice: anchored users sharing one chain of VNF types."""

    id: int
    name: str
    anchor: GroundPoint
    criticality: float
    users: tuple[GroundPoint, ...]
    chain: tuple[str, ...]
    delay_budgets_ms: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.users) != len(self.delay_budgets_ms):
            raise ValueError("one delay budget per user required")
        if not self.chain:
            raise ValueError("chain must be non-empty")


@dataclass(frozen=True)
class RiskParams:
    """Sensitivities, slice criticalities and the pairwise isolation matrix."""

    sensitivity: dict[str, float]
    criticality: np.ndarray
    isolation: np.ndarray

    def weight(self, n: int, m: int, vnf: str) -> float:
        """Co-location weight for slices n != m sharing an instance of vnf."""
        if n == m:
            raise ValueError("risk weight is defined for distinct slices only")
        return (
            self.sensitivity[vnf]
            * float(self.isolation[n, m])
            * float(self.criticality[n])
            * float(self.criticality[m])
        )


def risk_weight(n: int, m: int, vnf: str, params: RiskParams) -> float:
    return params.weight(n, m, vnf)


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs for scenario generation; defaults give the reference workload."""

    num_slices: int = 5
    users_per_slice: int = 10
    anchors: tuple[tuple[str, float, float], ...] = DEFAULT_ANCHORS
    user_spread_deg: float = 3.0
    chain_length_choices: tuple[int, ...] = (2, 3, 4)
    delay_budget_range_ms: tuple[float, float] = (75.0, 150.0)
    criticality_range: tuple[float, float] = (1.0, 3.0)
    isolation_range: tuple[float, float] = (0.0, 1.0)
    sensitivity: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_SENSITIVITY))
    activation_cpu: float = 1.0
    per_user_cpu: float = 0.1
    proc_delay_ms: float = 0.5
    migration_disruption: float = 1.0
    cap_cpu: float = 100.0
    instances_per_type: int = 2
    isl_capacity_flows: int = 50
    risk_per_assignment: bool = False

    def __post_init__(self) -> None:
        if self.num_slices < 1 or self.users_per_slice < 1:
            raise ValueError("need at least one slice and one user")
        if not self.anchors:
            raise ValueError("at least one anchor required")
        if min(self.chain_length_choices) < 1:
            raise ValueError("chain lengths must be positive")
        if self.instances_per_type < 1:
            raise ValueError("instances_per_type must be >= 1")
        if self.cap_cpu <= 0:
            raise ValueError("cap_cpu must be positive")


@dataclass(frozen=True)
class Scenario:
    """A fully materialised workload, ready for placement."""

    seed: int
    slices: tuple[Slice, ...]
    vnf_types: dict[str, VnfType]
    risk: RiskParams
    cap_cpu: float
    cap_overrides: dict[int, float]
    instances_per_type: int
    isl_capacity_flows: int
    risk_per_assignment: bool = False

    @property
    def num_slices(self) -> int:
        return len(self.slices)

    def capacity(self, sat: int) -> float:
        return self.cap_overrides.get(sat, self.cap_cpu)

    def vnf(self, name: str) -> VnfType:
        return self.vnf_types[name]

    def chain_type(self, n: int, pos: int) -> str:
        return self.slices[n].chain[pos]

    def entries(self) -> list[tuple[int, int, int]]:
        """All (slice, user, position) demands in canonical order."""
        out = []
        for sl in self.slices:
            for u in range(len(sl.users)):
                for pos in range(len(sl.chain)):
                    out.append((sl.id, u, pos))
        return out

    def users(self) -> list[tuple[int, int, GroundPoint]]:
        return [
            (sl.id, u, gp) for sl in self.slices for u, gp in enumerate(sl.users)
        ]


def _offset_point(anchor: GroundPoint, bearing_rad: float, dist_rad: float) -> GroundPoint:
    """Destination along a great circle from anchor."""
    lat1 = math.radians(anchor.lat_deg)
    lon1 = math.radians(anchor.lon_deg)
    lat2 = math.asin(
        math.sin(lat1) * math.cos(dist_rad)
        + math.cos(lat1) * math.sin(dist_rad) * math.cos(bearing_rad)
    )
    lon2 = lon1 + math.atan2(
        math.sin(bearing_rad) * math.sin(dist_rad) * math.cos(lat1),
        math.cos(dist_rad) - math.sin(lat1) * math.sin(lat2),
    )
    lon_deg = math.degrees(lon2)
    if lon_deg > 180.0:
        lon_deg -= 360.0
    elif lon_deg < -180.0:
        lon_deg += 360.0
    return GroundPoint(math.degrees(lat2), lon_deg)


def generate_scenario(seed: int, config: ScenarioConfig | None = None) -> Scenario:
    """Draw a scenario from one seeded stream.

    Draw order, per slice in id order: criticality, chain length, chain
    types, then per user (bearing, radial position, delay budget); finally
    the isolation upper triangle row by row.  Changing any count reshapes
    later draws; equal seed and config reproduce the scenario exactly.
    """
    cfg = config or ScenarioConfig()
    rng = np.random.default_rng(seed)
    type_names = tuple(cfg.sensitivity.keys())
    vnf_types = {
        name: VnfType(
            name=name,
            sensitivity=cfg.sensitivity[name],
            activation_cpu=cfg.activation_cpu,
            per_user_cpu=cfg.per_user_cpu,
            proc_delay_ms=cfg.proc_delay_ms,
            migration_disruption=cfg.migration_disruption,
        )
        for name in type_names
    }

    slices = []
    criticality = np.zeros(cfg.num_slices)
    spread_rad = math.radians(cfg.user_spread_deg)
    for n in range(cfg.num_slices):
        name, lat, lon = cfg.anchors[n % len(cfg.anchors)]
        anchor = GroundPoint(lat, lon)
        criticality[n] = rng.uniform(*cfg.criticality_range)
        length = int(rng.choice(np.asarray(cfg.chain_length_choices)))
        chain = tuple(type_names[int(rng.integers(len(type_names)))] for _ in range(length))
        users = []
        budgets = []
        for _ in range(cfg.users_per_slice):
            bearing = rng.uniform(0.0, 2.0 * math.pi)
            # Area-uniform draw inside the spherical cap around the anchor.
            cos_d = 1.0 - rng.uniform() * (1.0 - math.cos(spread_rad))
            users.append(_offset_point(anchor, bearing, math.acos(min(1.0, cos_d))))
            budgets.append(rng.uniform(*cfg.delay_budget_range_ms))
        slices.append(
            Slice(
                id=n,
                name=name,
                anchor=anchor,
                criticality=float(criticality[n]),
                users=tuple(users),
                chain=chain,
                delay_budgets_ms=tuple(budgets),
            )
        )

    isolation = np.zeros((cfg.num_slices, cfg.num_slices))
    for n in range(cfg.num_slices):
        for m in range(n + 1, cfg.num_slices):
            isolation[n, m] = isolation[m, n] = rng.uniform(*cfg.isolation_range)

    return Scenario(
        seed=seed,
        slices=tuple(slices),
        vnf_types=vnf_types,
        risk=RiskParams(
            sensitivity=dict(cfg.sensitivity),
            criticality=criticality,
            isolation=isolation,
        ),
        cap_cpu=cfg.cap_cpu,
        cap_overrides={},
        instances_per_type=cfg.instances_per_type,
        isl_capacity_flows=cfg.isl_capacity_flows,
        risk_per_assignment=cfg.risk_per_assignment,
    )


def scenario_to_yaml(sc: Scenario) -> str:
    """Human-readable dump for archival and diffing."""
    doc = {
        "seed": sc.seed,
        "cap_cpu": sc.cap_cpu,
        "instances_per_type": sc.instances_per_type,
        "isl_capacity_flows": sc.isl_capacity_flows,
        "vnf_types": {
            name: {
                "sensitivity": t.sensitivity,
                "activation_cpu": t.activation_cpu,
                "per_user_cpu": t.per_user_cpu,
                "proc_delay_ms": t.proc_delay_ms,
                "migration_disruption": t.migration_disruption,
            }
            for name, t in sc.vnf_types.items()
        },
        "isolation": [[round(float(x), 9) for x in row] for row in sc.risk.isolation],
        "slices": [
            {
                "id": sl.id,
                "name": sl.name,
                "anchor": {"lat": sl.anchor.lat_deg, "lon": sl.anchor.lon_deg},
                "criticality": round(sl.criticality, 9),
                "chain": list(sl.chain),
                "users": [
                    {
                        "lat": round(gp.lat_deg, 9),
                        "lon": round(gp.lon_deg, 9),
                        "delay_budget_ms": round(sl.delay_budgets_ms[u], 9),
                    }
                    for u, gp in enumerate(sl.users)
                ],
            }
            for sl in sc.slices
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)
