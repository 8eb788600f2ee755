"""Co-location risk: exact pairwise exposure and its cheap bounds.

Two slices sharing one VNF instance expose every cross pair of their users
on it; each pair is weighted by the type's tamper sensitivity, the slices'
isolation requirement and both criticalities.  The lower bound charges each
shared instance once, the upper bound charges it as if both full user
populations met there, so lower <= exact <= upper always holds.
"""

from __future__ import annotations

from dataclasses import dataclass

from .placement import Placement
from .scenario import Scenario

InstanceKey = tuple[str, int, int]    # (vnf, instance, satellite)


def co_location_tally(
    p: Placement, sc: Scenario
) -> dict[InstanceKey, dict[int, int]]:
    """Per-instance, per-slice presence counts.

    By default a user counts once per instance regardless of how many chain
    positions they run there; with ``sc.risk_per_assignment`` every (user,
    position) occurrence counts separately.
    """
    users_on: dict[InstanceKey, dict[int, set[int] | int]] = {}
    tally: dict[InstanceKey, dict[int, int]] = {}
    if sc.risk_per_assignment:
        for (n, _, pos), (inst, sat) in p.assignment.items():
            key = (sc.chain_type(n, pos), inst, sat)
            per_slice = tally.setdefault(key, {})
            per_slice[n] = per_slice.get(n, 0) + 1
        return tally
    for (n, u, pos), (inst, sat) in p.assignment.items():
        key = (sc.chain_type(n, pos), inst, sat)
        users_on.setdefault(key, {}).setdefault(n, set()).add(u)
    for key, per_slice in users_on.items():
        tally[key] = {n: len(users) for n, users in per_slice.items()}
    return tally


def exact_risk(p: Placement, sc: Scenario) -> float:
    """Sum of weighted cross-slice pair counts over all shared instances."""
    total = 0.0
    for (vnf, _, _), per_slice in co_location_tally(p, sc).items():
        slices = sorted(per_slice)
        for i, n in enumerate(slices):
            for m in slices[i + 1 :]:
                total += sc.risk.weight(n, m, vnf) * per_slice[n] * per_slice[m]
    return total


def coarse_risk(p: Placement, sc: Scenario) -> tuple[float, float]:
    """(lower, upper) bounds from shared-instance indicators only."""
    lb = 0.0
    ub = 0.0
    for (vnf, _, _), per_slice in co_location_tally(p, sc).items():
        slices = sorted(per_slice)
        for i, n in enumerate(slices):
            for m in slices[i + 1 :]:
                w = sc.risk.weight(n, m, vnf)
                lb += w
                # Worst case meets the full populations on this instance; in
                # per-assignment mode every repeated chain position recounts.
                pop_n = len(sc.slices[n].users)
                pop_m = len(sc.slices[m].users)
                if sc.risk_per_assignment:
                    pop_n *= sc.slices[n].chain.count(vnf)
                    pop_m *= sc.slices[m].chain.count(vnf)
                ub += w * pop_n * pop_m
    return lb, ub


@dataclass(frozen=True)
class RiskTriple:
    lower: float
    exact: float
    upper: float


def risk_triple(p: Placement, sc: Scenario, tol: float = 1e-9) -> RiskTriple:
    """Exact risk sandwiched by its bounds; a violation is an internal bug
    and raises rather than returning a silently wrong triple."""
    ex = exact_risk(p, sc)
    lb, ub = coarse_risk(p, sc)
    if ex < lb - tol or ex > ub + tol:
        raise RuntimeError(
            f"risk sandwich violated: lower={lb!r} exact={ex!r} upper={ub!r}"
        )
    return RiskTriple(lower=lb, exact=ex, upper=ub)
