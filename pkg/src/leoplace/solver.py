"""Placement optimisation pipeline.

Four solvers share one incremental bookkeeping core (`_State`): a nearest-
first greedy constructor, simulated annealing over single-entry moves, a
depth-first branch-and-bound refinement with an admissible completion bound,
and plain exhaustive search for oracle-scale instances.  The hybrid driver
chains greedy -> annealing -> branch-and-bound, warm-starting the search
with the previous epoch's placement when it is still valid.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .constellation import ConstellationSnapshot, UNREACHABLE
from .placement import (
    Entry,
    Hosting,
    MigrationContext,
    Placement,
    migration_cost,
    validate,
)
from .risk import coarse_risk, exact_risk
from .scenario import Scenario

EPS = 1e-9


class InfeasibleUserError(RuntimeError):
    """A demand that no satellite can host under the current constraints."""

    def __init__(self, n: int, u: int, pos: int, reason: str):
        super().__init__(
            f"no feasible host for slice {n} user {u} position {pos}: {reason}"
        )
        self.entry: Entry = (n, u, pos)


class SearchSpaceError(RuntimeError):
    """Exhaustive search refused: the assignment space is too large."""


@dataclass(frozen=True)
class ObjectiveWeights:
    """Convex weights over the capacity, risk and migration terms."""

    cap: float
    risk: float
    mig: float

    def __post_init__(self) -> None:
        if min(self.cap, self.risk, self.mig) < 0:
            raise ValueError("weights must be non-negative")
        if abs(self.cap + self.risk + self.mig - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


@dataclass(frozen=True)
class NormalizationBounds:
    """Static worst-case totals used to scale each objective term to [0, 1].

    A zero bound marks a term as undefined for the scenario (for example no
    slice pair exists) and disables it rather than dividing by zero.
    """

    cap_bar: float
    risk_bar: float
    mig_bar: float

    def __post_init__(self) -> None:
        if min(self.cap_bar, self.risk_bar, self.mig_bar) < 0:
            raise ValueError("normalization bounds must be non-negative")


@dataclass(frozen=True)
class SaParams:
    """Annealing schedule: geometric cooling from t0 down to t_end."""

    t0: float = 1.0
    t_end: float = 0.01
    iterations: int = 50_000
    seed: int = 0
    restarts: int = 1
    restrict_to_visibility: bool = False

    def __post_init__(self) -> None:
        if self.t0 <= 0 or self.t_end <= 0 or self.t_end > self.t0:
            raise ValueError("need 0 < t_end <= t0")
        if self.iterations < 0 or self.restarts < 1:
            raise ValueError("bad iteration or restart count")


@dataclass(frozen=True)
class BnbParams:
    """Branch-and-bound termination: relative gap plus optional budgets."""

    gap: float = 0.005
    node_budget: int | None = 25_000
    time_budget_ms: float | None = None

    def __post_init__(self) -> None:
        if self.gap < 0:
            raise ValueError("gap must be non-negative")
        if self.node_budget is not None and self.node_budget < 0:
            raise ValueError("node budget must be non-negative")


@dataclass
class SolveResult:
    """A placement plus the metrics and accounting of how it was found."""

    placement: Placement
    objective: float
    cap_use: float
    risk_value: float
    mig_cost: float
    mig_count: int
    t_stage1_ms: float = 0.0
    t_stage2_ms: float = 0.0
    t_stage3_ms: float = 0.0
    nodes: int = 0
    achieved_gap: float = 0.0
    stop_reason: str = ""


def normalization_bounds(sc: Scenario, num_sats: int) -> NormalizationBounds:
    """Worst-case capacity, risk and migration totals for one epoch."""
    cap_bar = sum(sc.capacity(s) for s in range(num_sats))
    risk_bar = 0.0
    for i, sa in enumerate(sc.slices):
        for sb in sc.slices[i + 1 :]:
            for name in sc.vnf_types:
                occ_a = sa.chain.count(name)
                occ_b = sb.chain.count(name)
                if occ_a and occ_b:
                    risk_bar += (
                        sc.risk.weight(sa.id, sb.id, name)
                        * occ_a * len(sa.users)
                        * occ_b * len(sb.users)
                    )
    mig_bar = sum(
        sc.vnf(sc.chain_type(n, pos)).migration_disruption
        for (n, _, pos) in sc.entries()
    )
    return NormalizationBounds(cap_bar=cap_bar, risk_bar=risk_bar, mig_bar=mig_bar)


def temperature(k: int, params: SaParams) -> float:
    """Geometric cooling: t0 at k=0 shrinking toward t_end at k=iterations."""
    if params.iterations == 0:
        return params.t_end
    return params.t0 * (params.t_end / params.t0) ** (k / params.iterations)


def accept_move(delta: float, temp: float, draw: float) -> bool:
    """Metropolis rule: always keep improvements, keep a worsening of delta
    with probability exp(-delta / temp), decided by the supplied uniform
    draw."""
    if delta <= 0.0:
        return True
    if temp <= 0.0:
        return False
    return draw < math.exp(-delta / temp)


def objective_value(
    p: Placement,
    sc: Scenario,
    ctx: MigrationContext,
    weights: ObjectiveWeights,
    norms: NormalizationBounds,
    risk_mode: str = "exact",
) -> tuple[float, float, float, float]:
    """Full from-scratch evaluation.

    Returns:
        (objective, cap_use, risk_value, mig_cost); the objective recombines
        the three raw values through the weights and bounds, with zero-bound
        terms dropped.
    """
    from .placement import cap_use as _cap_use

    cap = _cap_use(p, sc)
    if risk_mode == "exact":
        riskv = exact_risk(p, sc)
    elif risk_mode == "coarse_lb":
        riskv = coarse_risk(p, sc)[0]
    else:
        raise ValueError(f"unknown risk mode {risk_mode!r}")
    mig = migration_cost(p, ctx, sc)
    obj = 0.0
    if norms.cap_bar > 0:
        obj += weights.cap * cap / norms.cap_bar
    if norms.risk_bar > 0:
        obj += weights.risk * riskv / norms.risk_bar
    if norms.mig_bar > 0:
        obj += weights.mig * mig / norms.mig_bar
    return obj, cap, riskv, mig


# ---------------------------------------------------------------------------
# Incremental bookkeeping shared by every solver.
# ---------------------------------------------------------------------------


class _State:
    """Mutable assignment state with O(1)-ish place/unplace updates.

    Tracks satellite loads, instance activations, per-instance slice/user
    tallies (for risk), per-user chain delays, link flows and the migration
    account, together with the running objective terms.  Entries are indexed
    by their canonical order; branch-and-bound assigns them as a prefix.
    """

    def __init__(
        self,
        sc: Scenario,
        snap: ConstellationSnapshot,
        ctx: MigrationContext,
        weights: ObjectiveWeights | None,
        norms: NormalizationBounds | None,
        risk_mode: str = "exact",
    ):
        self.sc = sc
        self.snap = snap
        self.ctx = ctx
        self.risk_exact_mode = risk_mode == "exact"
        if risk_mode not in ("exact", "coarse_lb"):
            raise ValueError(f"unknown risk mode {risk_mode!r}")
        self.per_assignment = sc.risk_per_assignment

        self.entries: list[Entry] = sc.entries()
        self.num_entries = len(self.entries)
        self.entry_index = {e: i for i, e in enumerate(self.entries)}
        self.num_sats = snap.num_sats
        self.caps = [sc.capacity(s) for s in range(self.num_sats)]

        type_names = list(sc.vnf_types)
        self.type_index = {f: i for i, f in enumerate(type_names)}
        nslices = sc.num_slices
        self.wtab = [
            [[0.0] * nslices for _ in range(nslices)] for _ in type_names
        ]
        for fi, f in enumerate(type_names):
            for n in range(nslices):
                for m in range(nslices):
                    if n != m:
                        self.wtab[fi][n][m] = sc.risk.weight(n, m, f)

        # Per-user tables.
        self.users: list[tuple[int, int]] = []
        self.user_index: dict[tuple[int, int], int] = {}
        self.user_budget: list[float] = []
        self.user_len: list[int] = []
        self.vis_delay: list[dict[int, float]] = []
        self.vis_sats: list[list[int]] = []
        for sl in sc.slices:
            for u in range(len(sl.users)):
                self.user_index[(sl.id, u)] = len(self.users)
                self.users.append((sl.id, u))
                self.user_budget.append(sl.delay_budgets_ms[u])
                self.user_len.append(len(sl.chain))
                vis = snap.visibility[(sl.id, u)]
                self.vis_delay.append({s: d for s, _, d in vis})
                self.vis_sats.append([s for s, _, _ in vis])

        # Per-entry tables.
        self.ent_slice: list[int] = []
        self.ent_user: list[int] = []
        self.ent_pos: list[int] = []
        self.ent_type: list[str] = []
        self.ent_tidx: list[int] = []
        self.ent_proc: list[float] = []
        self.ent_dis: list[float] = []
        self.ent_prev: list[Hosting | None] = []
        self.ent_retain: list[bool] = []
        prev = ctx.prev.assignment if ctx.prev is not None else {}
        for e in self.entries:
            n, u, pos = e
            f = sc.chain_type(n, pos)
            t = sc.vnf(f)
            self.ent_slice.append(n)
            self.ent_user.append(self.user_index[(n, u)])
            self.ent_pos.append(pos)
            self.ent_type.append(f)
            self.ent_tidx.append(self.type_index[f])
            self.ent_proc.append(t.proc_delay_ms)
            self.ent_dis.append(t.migration_disruption)
            self.ent_prev.append(prev.get(e))
            self.ent_retain.append(bool(ctx.retention_feasible.get(e, False)))

        # Instances referenced by any previous hosting are distinguishable
        # even while empty: landing on one changes the migration term.
        self.prev_named: dict[tuple[str, int], set[int]] = {}
        for ei, h in enumerate(self.ent_prev):
            if h is not None:
                key = (self.ent_type[ei], h[1])
                self.prev_named.setdefault(key, set()).add(h[0])

        # Cost model (homogeneous by default; override hooks per type).
        self.a_of = {f: sc.vnf(f).per_user_cpu for f in type_names}
        self.b_of = {f: sc.vnf(f).activation_cpu for f in type_names}

        # Bound helpers: minimum remaining per-assignment cost and, per type,
        # how many demands remain at or past each depth.
        self.suffix_a = [0.0] * (self.num_entries + 1)
        for i in range(self.num_entries - 1, -1, -1):
            self.suffix_a[i] = self.suffix_a[i + 1] + self.a_of[self.ent_type[i]]
        self.suffix_type = {f: [0] * (self.num_entries + 1) for f in type_names}
        for f in type_names:
            col = self.suffix_type[f]
            for i in range(self.num_entries - 1, -1, -1):
                col[i] = col[i + 1] + (1 if self.ent_type[i] == f else 0)

        # Normalised objective scale factors; zero bound disables a term.
        if weights is not None and norms is not None:
            self.kc = weights.cap / norms.cap_bar if norms.cap_bar > 0 else 0.0
            self.kr = weights.risk / norms.risk_bar if norms.risk_bar > 0 else 0.0
            self.km = weights.mig / norms.mig_bar if norms.mig_bar > 0 else 0.0
        else:
            self.kc = self.kr = self.km = 0.0

        # Mutable state.
        self.hosting: list[Hosting | None] = [None] * self.num_entries
        self.loads = [0.0] * self.num_sats
        self.inst_total: dict[tuple[str, int, int], int] = {}
        self.inst_counts: dict[tuple[str, int, int], dict[int, int]] = {}
        self.inst_users: dict[tuple[str, int, int], dict[int, dict[int, int]]] = {}
        self.type_active = {f: 0 for f in type_names}
        self.user_hosts: list[list[int | None]] = [
            [None] * l for l in self.user_len
        ]
        self.user_delay = [0.0] * len(self.users)
        self.flows: dict[tuple[int, int], int] = {}
        self.cap_use = 0.0
        self.risk_exact = 0.0
        self.risk_lb = 0.0
        self.mig_cost = 0.0
        self.mig_count = 0
        self.assigned = 0

    # -- derived values ----------------------------------------------------

    def objective(self) -> float:
        riskv = self.risk_exact if self.risk_exact_mode else self.risk_lb
        return self.kc * self.cap_use + self.kr * riskv + self.km * self.mig_cost

    def risk_value(self) -> float:
        return self.risk_exact if self.risk_exact_mode else self.risk_lb

    def placement(self) -> Placement:
        return Placement(
            {
                e: h
                for e, h in zip(self.entries, self.hosting)
                if h is not None
            }
        )

    def load_placement(self, p: Placement) -> None:
        for i, e in enumerate(self.entries):
            h = p.assignment.get(e)
            if h is not None:
                self.place(i, h[0], h[1])

    # -- mutators ----------------------------------------------------------

    def place(self, ei: int, inst: int, sat: int) -> None:
        f = self.ent_type[ei]
        n = self.ent_slice[ei]
        key = (f, inst, sat)

        tot = self.inst_total.get(key, 0)
        if tot == 0:
            b = self.b_of[f]
            self.loads[sat] += b
            self.cap_use += b
            self.type_active[f] += 1
        self.inst_total[key] = tot + 1
        a = self.a_of[f]
        self.loads[sat] += a
        self.cap_use += a

        counts = self.inst_counts.setdefault(key, {})
        if self.per_assignment:
            bump = True
        else:
            udict = self.inst_users.setdefault(key, {}).setdefault(n, {})
            u = self.ent_user[ei]
            mult = udict.get(u, 0)
            udict[u] = mult + 1
            bump = mult == 0
        if bump:
            wrow = self.wtab[self.ent_tidx[ei]][n]
            cnt_n = counts.get(n, 0)
            add = 0.0
            for m, cnt_m in counts.items():
                if m != n:
                    add += wrow[m] * cnt_m
            self.risk_exact += add
            if cnt_n == 0:
                self.risk_lb += sum(wrow[m] for m in counts if m != n)
            counts[n] = cnt_n + 1

        if self.ent_retain[ei] and (inst, sat) != self.ent_prev[ei]:
            self.mig_cost += self.ent_dis[ei]
            self.mig_count += 1

        ui = self.ent_user[ei]
        pos = self.ent_pos[ei]
        hosts = self.user_hosts[ui]
        hosts[pos] = sat
        d = self.ent_proc[ei]
        if pos == 0:
            d += self.vis_delay[ui].get(sat, math.inf)
        else:
            left = hosts[pos - 1]
            if left is not None:
                d += float(self.snap.delay_ms[left, sat])
                self._add_flows(left, sat, +1)
        if pos + 1 < len(hosts):
            right = hosts[pos + 1]
            if right is not None:
                d += float(self.snap.delay_ms[sat, right])
                self._add_flows(sat, right, +1)
        self.user_delay[ui] += d

        self.hosting[ei] = (inst, sat)
        self.assigned += 1

    def unplace(self, ei: int) -> None:
        inst, sat = self.hosting[ei]
        f = self.ent_type[ei]
        n = self.ent_slice[ei]
        key = (f, inst, sat)

        a = self.a_of[f]
        self.loads[sat] -= a
        self.cap_use -= a
        tot = self.inst_total[key] - 1
        if tot == 0:
            b = self.b_of[f]
            self.loads[sat] -= b
            self.cap_use -= b
            self.type_active[f] -= 1
            del self.inst_total[key]
        else:
            self.inst_total[key] = tot

        counts = self.inst_counts[key]
        if self.per_assignment:
            drop = True
        else:
            udict = self.inst_users[key][n]
            u = self.ent_user[ei]
            mult = udict[u] - 1
            if mult == 0:
                del udict[u]
                if not udict:
                    del self.inst_users[key][n]
                    if not self.inst_users[key]:
                        del self.inst_users[key]
            else:
                udict[u] = mult
            drop = mult == 0
        if drop:
            wrow = self.wtab[self.ent_tidx[ei]][n]
            cnt_n = counts[n] - 1
            if cnt_n == 0:
                del counts[n]
                if not counts:
                    del self.inst_counts[key]
            else:
                counts[n] = cnt_n
            sub = 0.0
            lb_sub = 0.0
            for m, cnt_m in counts.items():
                if m != n:
                    sub += wrow[m] * cnt_m
                    if cnt_n == 0:
                        lb_sub += wrow[m]
            self.risk_exact -= sub
            self.risk_lb -= lb_sub

        if self.ent_retain[ei] and (inst, sat) != self.ent_prev[ei]:
            self.mig_cost -= self.ent_dis[ei]
            self.mig_count -= 1

        ui = self.ent_user[ei]
        pos = self.ent_pos[ei]
        hosts = self.user_hosts[ui]
        d = self.ent_proc[ei]
        if pos == 0:
            d += self.vis_delay[ui].get(sat, math.inf)
        else:
            left = hosts[pos - 1]
            if left is not None:
                d += float(self.snap.delay_ms[left, sat])
                self._add_flows(left, sat, -1)
        if pos + 1 < len(hosts):
            right = hosts[pos + 1]
            if right is not None:
                d += float(self.snap.delay_ms[sat, right])
                self._add_flows(sat, right, -1)
        self.user_delay[ui] -= d
        hosts[pos] = None

        self.hosting[ei] = None
        self.assigned -= 1

    def _add_flows(self, a: int, b: int, sign: int) -> None:
        if a == b:
            return
        nxt = self.snap.next_hop
        if nxt[a, b] == UNREACHABLE:
            return
        flows = self.flows
        cur = a
        while cur != b:
            step = int(nxt[cur, b])
            edge = (cur, step) if cur < step else (step, cur)
            newv = flows.get(edge, 0) + sign
            if newv:
                flows[edge] = newv
            else:
                del flows[edge]
            cur = step

    # -- non-mutating candidate evaluation (prefix order only) -------------

    def inst_candidates(self, ei: int, sat: int) -> list[int]:
        """Instance choices at one satellite: every occupied instance of the
        entry's type (joining is allowed across slices), every instance some
        previous hosting names (retention must stay reachable), and the
        lowest anonymous empty one.  Empty unnamed instances are mutually
        interchangeable, so offering more than one would only re-explore
        relabelings of the same configuration."""
        f = self.ent_type[ei]
        named = self.prev_named.get((f, sat), ())
        out = []
        took_empty = False
        for i in range(self.sc.instances_per_type):
            if self.inst_total.get((f, i, sat), 0) > 0 or i in named:
                out.append(i)
            elif not took_empty:
                out.append(i)
                took_empty = True
        return out

    def peek_add(self, ei: int, inst: int, sat: int):
        """Feasibility and objective deltas of placing an unassigned entry,
        assuming all earlier chain positions of the user are already placed
        (greedy / branch-and-bound order).  Returns None when infeasible,
        else (dcap, drisk, dmig)."""
        f = self.ent_type[ei]
        a = self.a_of[f]
        key = (f, inst, sat)
        dcap = a
        if self.inst_total.get(key, 0) == 0:
            dcap += self.b_of[f]
        if self.loads[sat] + dcap > self.caps[sat] + EPS:
            return None

        ui = self.ent_user[ei]
        pos = self.ent_pos[ei]
        d = self.user_delay[ui] + self.ent_proc[ei]
        if pos == 0:
            acc = self.vis_delay[ui].get(sat)
            if acc is None:
                return None
            d += acc
            left = None
        else:
            left = self.user_hosts[ui][pos - 1]
            hop = float(self.snap.delay_ms[left, sat])
            if not math.isfinite(hop):
                return None
            d += hop
        if d > self.user_budget[ui] + EPS:
            return None

        if left is not None and left != sat:
            cap_isl = self.sc.isl_capacity_flows
            nxt = self.snap.next_hop
            flows = self.flows
            cur = left
            while cur != sat:
                step = int(nxt[cur, sat])
                edge = (cur, step) if cur < step else (step, cur)
                if flows.get(edge, 0) + 1 > cap_isl:
                    return None
                cur = step

        n = self.ent_slice[ei]
        drisk = 0.0
        counts = self.inst_counts.get(key)
        if counts:
            already = False
            if not self.per_assignment:
                u = self.ent_user[ei]
                already = (
                    self.inst_users.get(key, {}).get(n, {}).get(u, 0) > 0
                )
            if not already:
                wrow = self.wtab[self.ent_tidx[ei]][n]
                for m, cnt_m in counts.items():
                    if m != n:
                        drisk += wrow[m] * cnt_m

        dmig = 0.0
        if self.ent_retain[ei] and (inst, sat) != self.ent_prev[ei]:
            dmig = self.ent_dis[ei]
        return dcap, drisk, dmig


# ---------------------------------------------------------------------------
# Greedy construction.
# ---------------------------------------------------------------------------


def _join_first(st: _State, ei: int, sat: int) -> int | None:
    """First feasible instance at a satellite, preferring already-open ones.

    Joining an open instance costs only the per-user increment, so the
    cheapest construction packs users together and stays blind to risk.
    """
    f = st.ent_type[ei]
    cands = sorted(
        st.inst_candidates(ei, sat),
        key=lambda i: (0 if st.inst_total.get((f, i, sat), 0) > 0 else 1, i),
    )
    for inst in cands:
        if st.peek_add(ei, inst, sat) is not None:
            return inst
    return None


def _greedy_fill(st: _State) -> None:
    """Place every demand nearest-first, honouring all hard constraints."""
    sc = st.sc
    hop_mat = st.snap.hops
    for ui, (n, u) in enumerate(st.users):
        length = st.user_len[ui]
        base = st.entry_index[(n, u, 0)]
        vis = sorted(
            st.vis_delay[ui].items(), key=lambda item: (item[1], item[0])
        )
        ingress = None
        for sat, _ in vis:
            ei = base
            inst = _join_first(st, ei, sat)
            if inst is not None:
                st.place(ei, inst, sat)
                ingress = sat
                break
        if ingress is None:
            raise InfeasibleUserError(n, u, 0, "no visible satellite fits")
        for pos in range(1, length):
            ei = base + pos
            row = hop_mat[ingress]
            order = sorted(
                range(st.num_sats),
                key=lambda s: (int(row[s]) if row[s] != UNREACHABLE else 1 << 30, s),
            )
            placed = False
            for sat in order:
                if row[sat] == UNREACHABLE and sat != ingress:
                    break
                inst = _join_first(st, ei, sat)
                if inst is not None:
                    st.place(ei, inst, sat)
                    placed = True
                    break
            if not placed:
                raise InfeasibleUserError(n, u, pos, "no reachable satellite fits")


def greedy_place(
    sc: Scenario, snap: ConstellationSnapshot, ctx: MigrationContext
) -> Placement:
    """Nearest-visible ingress, then fewest-hops-from-ingress for the rest.

    Ties break to the lowest satellite index, then the lowest instance
    index.  Raises InfeasibleUserError rather than skipping a demand.
    """
    st = _State(sc, snap, ctx, None, None)
    _greedy_fill(st)
    return st.placement()


# ---------------------------------------------------------------------------
# Simulated annealing.
# ---------------------------------------------------------------------------


def sa_optimize(
    initial: Placement,
    sc: Scenario,
    snap: ConstellationSnapshot,
    ctx: MigrationContext,
    weights: ObjectiveWeights,
    norms: NormalizationBounds,
    params: SaParams,
    risk_mode: str = "exact",
    validate_deltas: bool = False,
    trace: dict | None = None,
) -> Placement:
    """Single-entry reassignment annealing under geometric cooling.

    Moves that break capacity, delay or link-flow limits are rejected before
    the Metropolis test.  Returns the best feasible placement seen, which is
    never worse than the initial one.
    """
    best_hosting: list[Hosting | None] | None = None
    best_obj = math.inf
    seeds = np.random.SeedSequence(params.seed).spawn(params.restarts)
    for restart in range(params.restarts):
        st = _State(sc, snap, ctx, weights, norms, risk_mode)
        st.load_placement(initial)
        obj = st.objective()
        run_best = obj
        run_best_hosting = list(st.hosting)
        rng = np.random.default_rng(seeds[restart])
        k_total = params.iterations
        ent_draw = rng.integers(0, st.num_entries, size=k_total)
        cand_draw = rng.random(k_total)
        inst_draw = rng.random(k_total)
        met_draw = rng.random(k_total)
        cur_full = None
        if validate_deltas:
            cur_full = objective_value(
                st.placement(), sc, ctx, weights, norms, risk_mode
            )[0]
        cool = params.t_end / params.t0
        inv_k = 1.0 / k_total if k_total else 0.0
        accepted = 0
        checked = 0
        for k in range(k_total):
            ei = int(ent_draw[k])
            if st.ent_pos[ei] == 0 or params.restrict_to_visibility:
                cands = st.vis_sats[st.ent_user[ei]]
                if not cands:
                    continue
                sat = cands[int(cand_draw[k] * len(cands))]
            else:
                sat = int(cand_draw[k] * st.num_sats)
            icands = st.inst_candidates(ei, sat)
            inst = icands[int(inst_draw[k] * len(icands))]
            old = st.hosting[ei]
            if (inst, sat) == old:
                continue
            # Reject unreachable pairings before mutating so the delay and
            # flow accounts never see an infinite link.
            ui = st.ent_user[ei]
            pos = st.ent_pos[ei]
            hosts = st.user_hosts[ui]
            nxt = st.snap.next_hop
            if pos > 0:
                left = hosts[pos - 1]
                if left != sat and nxt[left, sat] == UNREACHABLE:
                    continue
            if pos + 1 < len(hosts):
                right = hosts[pos + 1]
                if right != sat and nxt[sat, right] == UNREACHABLE:
                    continue
            st.unplace(ei)
            st.place(ei, inst, sat)
            ok = (
                st.loads[sat] <= st.caps[sat] + EPS
                and st.user_delay[ui] <= st.user_budget[ui] + EPS
            )
            if ok:
                ok = _move_flows_ok(st, ui, pos)
            if not ok:
                st.unplace(ei)
                st.place(ei, old[0], old[1])
                continue
            new_obj = st.objective()
            delta = new_obj - obj
            if validate_deltas:
                checked += 1
                full_after = objective_value(
                    st.placement(), sc, ctx, weights, norms, risk_mode
                )[0]
                if abs((full_after - cur_full) - delta) > 1e-9:
                    raise RuntimeError(
                        f"incremental delta {delta!r} disagrees with full "
                        f"recompute {full_after - cur_full!r} at step {k}"
                    )
            t_k = params.t0 * cool ** (k * inv_k)
            if accept_move(delta, t_k, float(met_draw[k])):
                obj = new_obj
                accepted += 1
                if validate_deltas:
                    cur_full = full_after
                if new_obj < run_best:
                    run_best = new_obj
                    run_best_hosting = list(st.hosting)
            else:
                st.unplace(ei)
                st.place(ei, old[0], old[1])
        if trace is not None:
            trace.setdefault("accepted", []).append(accepted)
            trace.setdefault("checked", []).append(checked)
            trace.setdefault("best", []).append(run_best)
        if run_best < best_obj:
            best_obj = run_best
            best_hosting = run_best_hosting
    return Placement(
        {
            e: h
            for e, h in zip(sc.entries(), best_hosting)
            if h is not None
        }
    )


def _move_flows_ok(st: _State, ui: int, pos: int) -> bool:
    """Post-move link check limited to the routes the move touched."""
    hosts = st.user_hosts[ui]
    cap_isl = st.sc.isl_capacity_flows
    nxt = st.snap.next_hop
    flows = st.flows
    for a, b in ((pos - 1, pos), (pos, pos + 1)):
        if a < 0 or b >= len(hosts):
            continue
        ha, hb = hosts[a], hosts[b]
        if ha is None or hb is None or ha == hb:
            continue
        cur = ha
        while cur != hb:
            step = int(nxt[cur, hb])
            edge = (cur, step) if cur < step else (step, cur)
            if flows.get(edge, 0) > cap_isl:
                return False
            cur = step
    return True


# ---------------------------------------------------------------------------
# Branch-and-bound refinement.
# ---------------------------------------------------------------------------


def branch_and_bound(
    incumbent: Placement,
    sc: Scenario,
    snap: ConstellationSnapshot,
    ctx: MigrationContext,
    weights: ObjectiveWeights,
    norms: NormalizationBounds,
    params: BnbParams = BnbParams(),
    risk_mode: str = "exact",
) -> SolveResult:
    """Depth-first search over per-entry satellite choices.

    Entries are fixed in canonical order; each node's bound adds the exact
    cost of the fixed prefix to an optimistic completion (minimum per-demand
    CPU, one activation for each still-unopened type that is still demanded,
    no further risk or migration).  Children are explored cheapest bound
    first; search stops at proof of the requested relative gap, on budget
    exhaustion, or when the tree is exhausted.
    """
    t_start = time.perf_counter()
    st = _State(sc, snap, ctx, weights, norms, risk_mode)
    inc_obj = objective_value(incumbent, sc, ctx, weights, norms, risk_mode)[0]
    best_obj = inc_obj
    best_assign = dict(incumbent.assignment)
    nodes = 0
    gap_target = 1.0 + params.gap

    def result(reason: str, frontier_lb: float | None) -> SolveResult:
        if frontier_lb is None or frontier_lb <= 0:
            gap = 0.0 if reason == "exhausted" else math.inf
        else:
            gap = max(0.0, best_obj / frontier_lb - 1.0)
        p = Placement(dict(best_assign))
        _, cap, riskv, mig = objective_value(p, sc, ctx, weights, norms, risk_mode)
        from .placement import avoidable_count

        return SolveResult(
            placement=p,
            objective=best_obj,
            cap_use=cap,
            risk_value=riskv,
            mig_cost=mig,
            mig_count=avoidable_count(p, ctx),
            nodes=nodes,
            achieved_gap=gap,
            stop_reason=reason,
        )

    if params.node_budget is not None and params.node_budget == 0:
        return result("node_budget", None)

    E = st.num_entries
    kc, kr, km = st.kc, st.kr, st.km
    b_of, a_of = st.b_of, st.a_of

    def gen_children(depth: int) -> list[tuple[float, float, int, int]]:
        ei = depth
        f = st.ent_type[ei]
        needed = 0.0
        for g, col in st.suffix_type.items():
            if g != f and col[depth + 1] > 0 and st.type_active[g] == 0:
                needed += b_of[g]
        const_cap = st.cap_use + st.suffix_a[depth + 1] + needed
        base_risk = st.risk_exact if st.risk_exact_mode else st.risk_lb
        if st.ent_pos[ei] == 0:
            cands = st.vis_sats[st.ent_user[ei]]
        else:
            cands = range(st.num_sats)
        out = []
        for sat in cands:
            for inst in st.inst_candidates(ei, sat):
                peek = st.peek_add(ei, inst, sat)
                if peek is None:
                    continue
                dcap, drisk, dmig = peek
                bound = (
                    kc * (const_cap + dcap)
                    + kr * (base_risk + drisk)
                    + km * (st.mig_cost + dmig)
                )
                if bound < best_obj:
                    # Secondary key spreads equal-bound choices onto the
                    # lightest satellite instead of stacking one hub.
                    out.append((bound, st.loads[sat] + dcap, sat, inst))
        out.sort()
        return out

    # Frame: [children, next_index, placed_entry_or_None]
    frames: list[list] = [[gen_children(0), 0, None]]
    reason = "exhausted"
    frontier_lb: float | None = None
    while frames:
        if params.node_budget is not None and nodes >= params.node_budget:
            reason = "node_budget"
            break
        if (
            params.time_budget_ms is not None
            and nodes % 64 == 0
            and (time.perf_counter() - t_start) * 1000.0 > params.time_budget_ms
        ):
            reason = "time_budget"
            break
        if nodes % 32 == 0:
            lb = math.inf
            for fr in frames:
                if fr[1] < len(fr[0]):
                    lb = min(lb, fr[0][fr[1]][0])
            if lb is not math.inf and lb * gap_target >= best_obj:
                frontier_lb = lb
                reason = "gap"
                break
        frame = frames[-1]
        children, idx = frame[0], frame[1]
        if idx >= len(children):
            frames.pop()
            if frame[2] is not None:
                st.unplace(frame[2])
            continue
        bound, _, sat, inst = children[idx]
        frame[1] = idx + 1
        if bound >= best_obj:
            frame[1] = len(children)
            continue
        depth = len(frames) - 1
        st.place(depth, inst, sat)
        nodes += 1
        if depth == E - 1:
            obj = st.objective()
            if obj < best_obj:
                best_obj = obj
                best_assign = {
                    e: h for e, h in zip(st.entries, st.hosting) if h is not None
                }
            st.unplace(depth)
        else:
            frames.append([gen_children(depth + 1), 0, depth])

    if reason in ("node_budget", "time_budget"):
        lb = math.inf
        for fr in frames:
            if fr[1] < len(fr[0]):
                lb = min(lb, fr[0][fr[1]][0])
        frontier_lb = None if lb is math.inf else lb
    return result(reason, frontier_lb)


# ---------------------------------------------------------------------------
# Exhaustive search (oracle scale).
# ---------------------------------------------------------------------------


def brute_force(
    sc: Scenario,
    snap: ConstellationSnapshot,
    ctx: MigrationContext,
    weights: ObjectiveWeights,
    norms: NormalizationBounds,
    risk_mode: str = "exact",
    leaf_cap: int = 10_000_000,
) -> SolveResult:
    """Enumerate every feasible assignment and keep the exact optimum.

    Explores all (instance, satellite) pairs per demand, so it is the
    independent reference the refinement search is tested against.  Raises
    SearchSpaceError when the assignment space exceeds ``leaf_cap`` leaves.
    """
    st = _State(sc, snap, ctx, weights, norms, risk_mode)
    cand_lists: list[list[tuple[int, int]]] = []
    space = 1.0
    for ei in range(st.num_entries):
        if st.ent_pos[ei] == 0:
            sats = st.vis_sats[st.ent_user[ei]]
        else:
            sats = range(st.num_sats)
        cands = [(i, s) for s in sats for i in range(sc.instances_per_type)]
        if not cands:
            n, u, pos = st.entries[ei]
            raise InfeasibleUserError(n, u, pos, "no candidate host at all")
        cand_lists.append(cands)
        space *= len(cands)
        if space > leaf_cap:
            raise SearchSpaceError(
                f"assignment space near {space:.3g} exceeds cap {leaf_cap}"
            )

    best_obj = math.inf
    best_assign: dict[Entry, Hosting] | None = None
    leaves = 0
    E = st.num_entries
    stack: list[list] = [[cand_lists[0], 0, None]]
    while stack:
        frame = stack[-1]
        cands, idx = frame[0], frame[1]
        if idx >= len(cands):
            stack.pop()
            if frame[2] is not None:
                st.unplace(frame[2])
            continue
        inst, sat = cands[idx]
        frame[1] = idx + 1
        depth = len(stack) - 1
        if st.peek_add(depth, inst, sat) is None:
            continue
        st.place(depth, inst, sat)
        if depth == E - 1:
            leaves += 1
            obj = st.objective()
            if obj < best_obj:
                best_obj = obj
                best_assign = {
                    e: h for e, h in zip(st.entries, st.hosting) if h is not None
                }
            st.unplace(depth)
        else:
            stack.append([cand_lists[depth + 1], 0, depth])

    if best_assign is None:
        raise InfeasibleUserError(-1, -1, -1, "no feasible complete assignment")
    p = Placement(best_assign)
    obj, cap, riskv, mig = objective_value(p, sc, ctx, weights, norms, risk_mode)
    from .placement import avoidable_count

    return SolveResult(
        placement=p,
        objective=obj,
        cap_use=cap,
        risk_value=riskv,
        mig_cost=mig,
        mig_count=avoidable_count(p, ctx),
        nodes=leaves,
        achieved_gap=0.0,
        stop_reason="exhausted",
    )


# ---------------------------------------------------------------------------
# Hybrid pipeline.
# ---------------------------------------------------------------------------


def hybrid_solve(
    sc: Scenario,
    snap: ConstellationSnapshot,
    prev: Placement | None,
    weights: ObjectiveWeights,
    sa_params: SaParams,
    bnb_params: BnbParams = BnbParams(),
    risk_mode: str = "exact",
) -> SolveResult:
    """Greedy construction, annealing, then warm-started branch-and-bound.

    Stage 1 derives retention flags and normalization bounds; stage 2 builds
    and anneals a placement; stage 3 refines the better of the annealed
    placement and the retained previous one (when that is still fully
    feasible, ties preferring retention).  Every stage output is re-checked
    by the independent validator.
    """
    t0 = time.perf_counter()
    ctx = MigrationContext.build(prev, sc, snap)
    norms = normalization_bounds(sc, snap.num_sats)
    t1 = time.perf_counter()

    seed_placement = greedy_place(sc, snap, ctx)
    _assert_valid(seed_placement, sc, snap, "greedy")
    annealed = sa_optimize(
        seed_placement, sc, snap, ctx, weights, norms, sa_params, risk_mode
    )
    _assert_valid(annealed, sc, snap, "annealing")
    t2 = time.perf_counter()

    incumbent = annealed
    if prev is not None and validate(prev, sc, snap).feasible:
        prev_obj = objective_value(prev, sc, ctx, weights, norms, risk_mode)[0]
        sa_obj = objective_value(annealed, sc, ctx, weights, norms, risk_mode)[0]
        # Strictly better only: a tie means the objective cannot tell the
        # placements apart, and then the freshly annealed one stands.
        if prev_obj < sa_obj:
            incumbent = prev
    result = branch_and_bound(
        incumbent, sc, snap, ctx, weights, norms, bnb_params, risk_mode
    )
    _assert_valid(result.placement, sc, snap, "branch-and-bound")
    t3 = time.perf_counter()

    result.t_stage1_ms = (t1 - t0) * 1000.0
    result.t_stage2_ms = (t2 - t1) * 1000.0
    result.t_stage3_ms = (t3 - t2) * 1000.0
    return result


def _assert_valid(p: Placement, sc: Scenario, snap: ConstellationSnapshot, stage: str) -> None:
    report = validate(p, sc, snap)
    if not report.feasible:
        raise RuntimeError(f"{stage} produced an infeasible placement: {report.summary()}")
