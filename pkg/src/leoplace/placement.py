"""Chain-to-satellite assignments and their feasibility rules.

A placement maps every (slice, user, position) demand to an (instance,
satellite) pair.  Instance activation, CPU loads, end-to-end delays and link
flows are all derived from that one mapping; the validator re-derives
everything from scratch so it can be used as an independent check on any
solver output.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from .constellation import ConstellationSnapshot
from .scenario import Scenario

Entry = tuple[int, int, int]          # (slice, user, position)
Hosting = tuple[int, int]             # (instance, satellite)

# Feasibility is non-strict at the boundary; this absorbs float drift from
# incremental load and delay accounting.
TOL = 1e-9


@dataclass
class Placement:
    """Assignment of every chain position to a hosted instance."""

    assignment: dict[Entry, Hosting] = field(default_factory=dict)

    def clone(self) -> "Placement":
        return Placement(dict(self.assignment))

    def activations(self, sc: Scenario) -> set[tuple[str, int, int]]:
        """Active (vnf, instance, satellite) triples implied by assignments."""
        out = set()
        for (n, _, pos), (inst, sat) in self.assignment.items():
            out.add((sc.chain_type(n, pos), inst, sat))
        return out

    def to_text(self) -> str:
        """One line per record: slice user position instance satellite."""
        buf = io.StringIO()
        buf.write("slice user position instance satellite\n")
        for (n, u, pos) in sorted(self.assignment):
            inst, sat = self.assignment[(n, u, pos)]
            buf.write(f"{n} {u} {pos} {inst} {sat}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "Placement":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].split() != ["slice", "user", "position", "instance", "satellite"]:
            raise ValueError("malformed placement header")
        assignment = {}
        for ln in lines[1:]:
            n, u, pos, inst, sat = (int(x) for x in ln.split())
            key = (n, u, pos)
            if key in assignment:
                raise ValueError(f"duplicate record for {key}")
            assignment[key] = (inst, sat)
        return cls(assignment)


def satellite_loads(p: Placement, sc: Scenario) -> dict[int, float]:
    """CPU load per satellite: one activation cost per active instance plus
    a per-assignment service cost."""
    loads: dict[int, float] = {}
    for (n, _, pos), (_, sat) in p.assignment.items():
        t = sc.vnf(sc.chain_type(n, pos))
        loads[sat] = loads.get(sat, 0.0) + t.per_user_cpu
    for (name, _, sat) in p.activations(sc):
        loads[sat] = loads.get(sat, 0.0) + sc.vnf(name).activation_cpu
    return loads


def cap_use(p: Placement, sc: Scenario) -> float:
    """Total CPU committed across the constellation."""
    return sum(satellite_loads(p, sc).values())


def check_capacity(p: Placement, sc: Scenario) -> list[tuple[int, float, float]]:
    """(satellite, load, cap) for every satellite over its CPU capacity."""
    return [
        (sat, load, sc.capacity(sat))
        for sat, load in sorted(satellite_loads(p, sc).items())
        if load > sc.capacity(sat) + TOL
    ]


def _chain_hosts(p: Placement, sc: Scenario, n: int, u: int) -> list[int]:
    length = len(sc.slices[n].chain)
    hosts = []
    for pos in range(length):
        hosting = p.assignment.get((n, u, pos))
        if hosting is None:
            raise KeyError(f"user ({n}, {u}) position {pos} unassigned")
        hosts.append(hosting[1])
    return hosts


def chain_delay_ms(
    p: Placement, sc: Scenario, snap: ConstellationSnapshot, n: int, u: int
) -> float:
    """End-to-end delay: uplink to the ingress satellite, processing at each
    position, and min-delay routing between consecutive hosts.  Returns inf
    when the ingress is invisible or a hop is unreachable."""
    hosts = _chain_hosts(p, sc, n, u)
    vis = {s: d for s, _, d in snap.visibility[(n, u)]}
    if hosts[0] not in vis:
        return float("inf")
    total = vis[hosts[0]]
    for pos, name in enumerate(sc.slices[n].chain):
        total += sc.vnf(name).proc_delay_ms
        if pos > 0:
            total += float(snap.delay_ms[hosts[pos - 1], hosts[pos]])
    return total


def e2e_delay_ms(
    p: Placement, sc: Scenario, snap: ConstellationSnapshot, n: int, u: int
) -> float:
    """Strict variant of chain_delay_ms: raises instead of returning inf."""
    d = chain_delay_ms(p, sc, snap, n, u)
    if d == float("inf"):
        raise ValueError(f"user ({n}, {u}) has no finite end-to-end path")
    return d


def check_delay(
    p: Placement, sc: Scenario, snap: ConstellationSnapshot
) -> list[tuple[int, int, float, float]]:
    """(slice, user, delay, budget) for every user over their delay budget."""
    out = []
    for sl in sc.slices:
        for u in range(len(sl.users)):
            d = chain_delay_ms(p, sc, snap, sl.id, u)
            if d > sl.delay_budgets_ms[u] + TOL:
                out.append((sl.id, u, d, sl.delay_budgets_ms[u]))
    return out


def edge_flows(
    p: Placement, sc: Scenario, snap: ConstellationSnapshot
) -> dict[tuple[int, int], int]:
    """Flow units per undirected link: each consecutive chain pair adds one
    unit to every link on its route, whichever direction it runs."""
    flows: dict[tuple[int, int], int] = {}
    for sl in sc.slices:
        for u in range(len(sl.users)):
            hosts = _chain_hosts(p, sc, sl.id, u)
            for a, b in zip(hosts, hosts[1:]):
                if a == b:
                    continue
                for key in snap.path_edges(a, b):
                    flows[key] = flows.get(key, 0) + 1
    return flows


def check_isl_capacity(
    p: Placement, sc: Scenario, snap: ConstellationSnapshot
) -> list[tuple[tuple[int, int], int, int]]:
    """(edge, flow, cap) for every oversubscribed link."""
    return [
        (key, flow, sc.isl_capacity_flows)
        for key, flow in sorted(edge_flows(p, sc, snap).items())
        if flow > sc.isl_capacity_flows
    ]


def check_visibility(
    p: Placement, sc: Scenario, snap: ConstellationSnapshot
) -> list[tuple[int, int, int]]:
    """(slice, user, satellite) for every ingress hosted out of sight.
    Positions past the ingress carry no visibility constraint."""
    out = []
    for sl in sc.slices:
        for u in range(len(sl.users)):
            hosting = p.assignment.get((sl.id, u, 0))
            if hosting is None:
                continue
            sat = hosting[1]
            if sat not in snap.visible_sats(sl.id, u):
                out.append((sl.id, u, sat))
    return out


@dataclass(frozen=True)
class FeasibilityReport:
    """Everything the validator found wrong, empty lists when clean."""

    structural: list[str]
    capacity: list[tuple[int, float, float]]
    delay: list[tuple[int, int, float, float]]
    isl: list[tuple[tuple[int, int], int, int]]
    visibility: list[tuple[int, int, int]]

    @property
    def feasible(self) -> bool:
        return not (
            self.structural or self.capacity or self.delay or self.isl or self.visibility
        )

    def summary(self) -> str:
        if self.feasible:
            return "feasible"
        parts = []
        for label, coll in (
            ("structural", self.structural),
            ("capacity", self.capacity),
            ("delay", self.delay),
            ("isl", self.isl),
            ("visibility", self.visibility),
        ):
            if coll:
                parts.append(f"{label}: {len(coll)}")
        return "infeasible (" + ", ".join(parts) + ")"


def validate(
    p: Placement, sc: Scenario, snap: ConstellationSnapshot
) -> FeasibilityReport:
    """Full independent re-check of a placement against one epoch."""
    structural = []
    expected = set(sc.entries())
    got = set(p.assignment)
    for key in sorted(expected - got):
        structural.append(f"missing assignment for {key}")
    for key in sorted(got - expected):
        structural.append(f"assignment for unknown demand {key}")
    for key in sorted(got & expected):
        inst, sat = p.assignment[key]
        if not 0 <= inst < sc.instances_per_type:
            structural.append(f"instance index {inst} out of range for {key}")
        if not 0 <= sat < snap.num_sats:
            structural.append(f"satellite index {sat} out of range for {key}")
    if structural:
        # Derived checks need a structurally complete assignment.
        return FeasibilityReport(structural, [], [], [], [])
    return FeasibilityReport(
        structural=[],
        capacity=check_capacity(p, sc),
        delay=check_delay(p, sc, snap),
        isl=check_isl_capacity(p, sc, snap),
        visibility=check_visibility(p, sc, snap),
    )


@dataclass(frozen=True)
class MigrationContext:
    """Previous placement plus per-entry retention feasibility.

    An entry can be retained when its previous satellite is still usable at
    the current epoch: ingress positions need the satellite visible again,
    and the previous loads must fit capacity under one joint re-check that
    assumes the whole previous placement is kept.  Entries that cannot be
    retained never count as avoidable migrations.
    """

    prev: Placement | None
    retention_feasible: dict[Entry, bool]

    @classmethod
    def initial(cls, sc: Scenario) -> "MigrationContext":
        return cls(prev=None, retention_feasible={e: False for e in sc.entries()})

    @classmethod
    def build(
        cls, prev: Placement | None, sc: Scenario, snap: ConstellationSnapshot
    ) -> "MigrationContext":
        if prev is None:
            return cls.initial(sc)
        flags: dict[Entry, bool] = {}
        loads = satellite_loads(prev, sc)
        overloaded = {s for s, load in loads.items() if load > sc.capacity(s) + TOL}
        for entry in sc.entries():
            hosting = prev.assignment.get(entry)
            if hosting is None:
                flags[entry] = False
                continue
            _, sat = hosting
            n, u, pos = entry
            ok = sat not in overloaded
            if pos == 0:
                ok = ok and sat in snap.visible_sats(n, u)
            flags[entry] = ok
        return cls(prev=prev, retention_feasible=flags)


def retained_flags(p: Placement, ctx: MigrationContext) -> dict[Entry, bool]:
    """True where the current hosting equals the previous one exactly."""
    if ctx.prev is None:
        return {e: False for e in p.assignment}
    return {
        e: ctx.prev.assignment.get(e) == hosting
        for e, hosting in p.assignment.items()
    }


def avoidable_flags(p: Placement, ctx: MigrationContext) -> dict[Entry, bool]:
    """True where an entry moved although it could have been retained."""
    kept = retained_flags(p, ctx)
    return {
        e: (not kept[e]) and ctx.retention_feasible.get(e, False)
        for e in p.assignment
    }


def migration_cost(p: Placement, ctx: MigrationContext, sc: Scenario) -> float:
    """Total disruption of avoidable migrations (forced moves are free)."""
    total = 0.0
    for (n, _, pos), avoidable in avoidable_flags(p, ctx).items():
        if avoidable:
            total += sc.vnf(sc.chain_type(n, pos)).migration_disruption
    return total


def avoidable_count(p: Placement, ctx: MigrationContext) -> int:
    return sum(1 for v in avoidable_flags(p, ctx).values() if v)
