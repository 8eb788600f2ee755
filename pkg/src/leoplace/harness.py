"""Multi-epoch comparison driver.

Runs every configured method over the full epoch sequence, each method
carrying its own previous-placement chain so the migration account of one
method never leaks into another.  Emits a deterministic metrics CSV, a
wall-clock sidecar CSV, an archival scenario dump and the report figures.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, MethodSpec
from .constellation import build_snapshot, build_walker_star
from .placement import (
    MigrationContext,
    Placement,
    avoidable_count,
    migration_cost,
    satellite_loads,
    validate,
)
from .risk import risk_triple
from .scenario import Scenario, generate_scenario, scenario_to_yaml
from .solver import (
    InfeasibleUserError,
    ObjectiveWeights,
    greedy_place,
    hybrid_solve,
    normalization_bounds,
    objective_value,
)

METRICS_COLUMNS = (
    "epoch",
    "method",
    "risk_lb",
    "risk_ex",
    "risk_ub",
    "cap_use",
    "util_mean_pct",
    "util_peak_pct",
    "mig_avoidable",
    "mig_cost",
    "objective",
    "feasible",
)

RUNTIME_COLUMNS = (
    "epoch",
    "method",
    "t_stage1_ms",
    "t_stage2_ms",
    "t_stage3_ms",
    "bnb_nodes",
    "achieved_gap",
)


@dataclass
class EpochReport:
    """One method's results at one epoch."""

    epoch: int
    method: str
    feasible: bool
    risk_lb: float = float("nan")
    risk_ex: float = float("nan")
    risk_ub: float = float("nan")
    cap_use: float = float("nan")
    util_mean_pct: float = float("nan")
    util_peak_pct: float = float("nan")
    mig_avoidable: int = 0
    mig_cost: float = float("nan")
    objective: float = float("nan")
    t_stage1_ms: float = 0.0
    t_stage2_ms: float = 0.0
    t_stage3_ms: float = 0.0
    bnb_nodes: int = 0
    achieved_gap: float = 0.0
    placement: Placement | None = None


def method_seed(master_seed: int, method_name: str, epoch: int) -> int:
    """Independent annealing stream per (seed, method, epoch)."""
    ss = np.random.SeedSequence(
        entropy=[master_seed, zlib.crc32(method_name.encode()), epoch]
    )
    return int(ss.generate_state(1, np.uint64)[0])


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


def emit_metrics_csv(reports: list[EpochReport]) -> str:
    lines = [",".join(METRICS_COLUMNS)]
    for r in reports:
        lines.append(
            ",".join(
                [
                    str(r.epoch),
                    r.method,
                    _fmt(r.risk_lb),
                    _fmt(r.risk_ex),
                    _fmt(r.risk_ub),
                    _fmt(r.cap_use),
                    _fmt(r.util_mean_pct),
                    _fmt(r.util_peak_pct),
                    str(r.mig_avoidable),
                    _fmt(r.mig_cost),
                    _fmt(r.objective),
                    "1" if r.feasible else "0",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def emit_runtime_csv(reports: list[EpochReport]) -> str:
    lines = [",".join(RUNTIME_COLUMNS)]
    for r in reports:
        lines.append(
            ",".join(
                [
                    str(r.epoch),
                    r.method,
                    _fmt(r.t_stage1_ms),
                    _fmt(r.t_stage2_ms),
                    _fmt(r.t_stage3_ms),
                    str(r.bnb_nodes),
                    _fmt(r.achieved_gap),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _run_one(
    cfg: ExperimentConfig,
    sc: Scenario,
    snap,
    method: MethodSpec,
    prev: Placement | None,
) -> EpochReport:
    weights = ObjectiveWeights(*method.weights)
    norms = normalization_bounds(sc, snap.num_sats)
    epoch = snap.epoch_index
    try:
        if method.kind == "greedy":
            t0 = time.perf_counter()
            ctx = MigrationContext.build(prev, sc, snap)
            t1 = time.perf_counter()
            placement = greedy_place(sc, snap, ctx)
            t2 = time.perf_counter()
            stage_ms = ((t1 - t0) * 1000.0, (t2 - t1) * 1000.0, 0.0)
            nodes, gap = 0, 0.0
            obj = objective_value(
                placement, sc, ctx, weights, norms, cfg.solver.risk_mode
            )[0]
        else:
            seed = method_seed(cfg.master_seed, method.name, epoch)
            res = hybrid_solve(
                sc,
                snap,
                prev,
                weights,
                cfg.solver.sa_params(seed),
                cfg.solver.bnb_params(),
                cfg.solver.risk_mode,
            )
            placement = res.placement
            ctx = MigrationContext.build(prev, sc, snap)
            stage_ms = (res.t_stage1_ms, res.t_stage2_ms, res.t_stage3_ms)
            nodes, gap = res.nodes, res.achieved_gap
            obj = res.objective
    except InfeasibleUserError:
        return EpochReport(epoch=epoch, method=method.name, feasible=False)

    report = validate(placement, sc, snap)
    if not report.feasible:
        raise RuntimeError(
            f"method {method.name} epoch {epoch}: {report.summary()}"
        )
    triple = risk_triple(placement, sc)
    loads = satellite_loads(placement, sc)
    caps_total = sum(sc.capacity(s) for s in range(snap.num_sats))
    cap = sum(loads.values())
    peak = max(
        (load / sc.capacity(s) for s, load in loads.items()), default=0.0
    )
    return EpochReport(
        epoch=epoch,
        method=method.name,
        feasible=True,
        risk_lb=triple.lower,
        risk_ex=triple.exact,
        risk_ub=triple.upper,
        cap_use=cap,
        util_mean_pct=100.0 * cap / caps_total,
        util_peak_pct=100.0 * peak,
        mig_avoidable=avoidable_count(placement, ctx),
        mig_cost=migration_cost(placement, ctx, sc),
        objective=obj,
        t_stage1_ms=stage_ms[0],
        t_stage2_ms=stage_ms[1],
        t_stage3_ms=stage_ms[2],
        bnb_nodes=nodes,
        achieved_gap=gap,
        placement=placement,
    )


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    quiet: bool = True,
    write_outputs: bool = True,
) -> list[EpochReport]:
    """Run every method across every epoch and write the report bundle.

    Returns the reports in run order (epoch-major, then config method
    order).  An epoch where a method cannot place every demand yields a
    feasible=0 row and the method's previous placement carries forward.
    """
    elements = build_walker_star(cfg.constellation)
    sc = generate_scenario(cfg.master_seed, cfg.scenario)
    users = sc.users()
    prev: dict[str, Placement | None] = {m.name: None for m in cfg.methods}
    reports: list[EpochReport] = []
    for epoch in range(cfg.constellation.num_epochs):
        snap = build_snapshot(elements, cfg.constellation, epoch, users)
        for method in cfg.methods:
            r = _run_one(cfg, sc, snap, method, prev[method.name])
            reports.append(r)
            if r.feasible:
                prev[method.name] = r.placement
            if not quiet:
                print(
                    f"epoch {epoch:3d}  {method.name:<12s}  "
                    + (
                        f"objective={r.objective:.6f}  risk={r.risk_ex:.4f}  "
                        f"migrations={r.mig_avoidable}"
                        if r.feasible
                        else "infeasible"
                    )
                )
    if write_outputs:
        out = Path(out_dir if out_dir is not None else cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(emit_metrics_csv(reports))
        (out / "runtimes.csv").write_text(emit_runtime_csv(reports))
        (out / "scenario.yaml").write_text(scenario_to_yaml(sc))
        from .plots import render_all

        render_all(reports, out)
    return reports
