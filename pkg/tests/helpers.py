"""Hand-built fixtures small enough to check against pencil-and-paper values.

The synthetic snapshot bypasses orbital geometry entirely: positions are
zeros, link delays are chosen, and visibility is dictated per user. Geometry
correctness is covered separately against closed-form constants.
"""

from __future__ import annotations

import numpy as np

from leoplace.constellation import (
    ConstellationSnapshot,
    GroundPoint,
    WalkerConfig,
    build_snapshot,
    build_walker_star,
    shortest_paths,
)
from leoplace.scenario import (
    RiskParams,
    Scenario,
    ScenarioConfig,
    Slice,
    VnfType,
    generate_scenario,
)

DUMMY_POINT = GroundPoint(0.0, 0.0, 0.0)


def make_scenario(
    slices_spec,
    iso,
    sensitivity=None,
    cap_cpu=100.0,
    instances_per_type=2,
    isl_capacity_flows=50,
    risk_per_assignment=False,
    activation_cpu=1.0,
    per_user_cpu=0.1,
    proc_delay_ms=0.5,
    migration_disruption=1.0,
):
    """Build a Scenario from (name, crit, chain, budgets_per_user) tuples.

    Every user sits at the dummy ground point; pair with a synthetic
    snapshot whose visibility ignores geometry.
    """
    sens = dict(sensitivity or {"ENC": 0.9, "IDS": 0.8, "TM": 0.4})
    vnf_types = {
        name: VnfType(
            name=name,
            sensitivity=s,
            activation_cpu=activation_cpu,
            per_user_cpu=per_user_cpu,
            proc_delay_ms=proc_delay_ms,
            migration_disruption=migration_disruption,
        )
        for name, s in sens.items()
    }
    slices = []
    crits = []
    for sid, (name, crit, chain, budgets) in enumerate(slices_spec):
        crits.append(crit)
        slices.append(
            Slice(
                id=sid,
                name=name,
                anchor=DUMMY_POINT,
                criticality=crit,
                users=tuple(DUMMY_POINT for _ in budgets),
                chain=tuple(chain),
                delay_budgets_ms=tuple(budgets),
            )
        )
    iso_arr = np.asarray(iso, dtype=float)
    risk = RiskParams(
        sensitivity=sens,
        criticality=np.asarray(crits, dtype=float),
        isolation=iso_arr,
    )
    return Scenario(
        seed=0,
        slices=tuple(slices),
        vnf_types=vnf_types,
        risk=risk,
        cap_cpu=cap_cpu,
        cap_overrides={},
        instances_per_type=instances_per_type,
        isl_capacity_flows=isl_capacity_flows,
        risk_per_assignment=risk_per_assignment,
    )


def line_snapshot(num_sats, edge_ms, visibility):
    """Snapshot over a path graph 0-1-...-(n-1) with equal link delays.

    visibility maps (slice, user) to a list of (sat, elevation, access_ms).
    """
    edges = [(i, i + 1, edge_ms) for i in range(num_sats - 1)]
    hops, delay, nxt = shortest_paths(num_sats, edges)
    return ConstellationSnapshot(
        epoch_index=0,
        positions=np.zeros((num_sats, 3)),
        isl_edges=edges,
        visibility=dict(visibility),
        hops=hops,
        delay_ms=delay,
        next_hop=nxt,
    )


TINY_WALKER = WalkerConfig(
    num_planes=2,
    sats_per_plane=3,
    altitude_km=8000.0,
    inclination_deg=60.0,
    raan_spread_deg=90.0,
    phasing_offset_deg=0.0,
    epoch_duration_s=60.0,
    num_epochs=3,
    min_elevation_deg=5.0,
)


def tiny_instance(seed):
    """Random oracle-scale instance: at most 3 users across 1-2 slices,
    6 high satellites, chains of 1-2 types, one instance per type."""
    rng = np.random.default_rng(seed)
    total_users = int(rng.integers(1, 4))
    num_slices = 1 if total_users == 1 else int(rng.integers(1, 3))
    split = [total_users] if num_slices == 1 else [1, total_users - 1]
    anchors = (("London", 51.5074, -0.1278), ("Paris", 48.8566, 2.3522))
    cfg = ScenarioConfig(
        num_slices=num_slices,
        users_per_slice=max(split),
        anchors=anchors[:num_slices],
        user_spread_deg=1.0,
        chain_length_choices=(1, 2),
        delay_budget_range_ms=(200.0, 300.0),
        instances_per_type=1,
    )
    sc = generate_scenario(int(rng.integers(0, 2**31)), cfg)
    if num_slices == 2 and split[0] < cfg.users_per_slice:
        first = sc.slices[0]
        trimmed = Slice(
            id=first.id,
            name=first.name,
            anchor=first.anchor,
            criticality=first.criticality,
            users=first.users[: split[0]],
            chain=first.chain,
            delay_budgets_ms=first.delay_budgets_ms[: split[0]],
        )
        sc = Scenario(
            seed=sc.seed,
            slices=(trimmed,) + sc.slices[1:],
            vnf_types=sc.vnf_types,
            risk=sc.risk,
            cap_cpu=sc.cap_cpu,
            cap_overrides=sc.cap_overrides,
            instances_per_type=sc.instances_per_type,
            isl_capacity_flows=sc.isl_capacity_flows,
            risk_per_assignment=sc.risk_per_assignment,
        )
    elements = build_walker_star(TINY_WALKER)
    snap = build_snapshot(elements, TINY_WALKER, 0, sc.users())
    return sc, snap
