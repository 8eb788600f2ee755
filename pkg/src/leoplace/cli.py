"""Command line front end.

Subcommands:
    run       full multi-epoch experiment, writes the report bundle
    validate  config and coverage sanity checks, no outputs
    oracle    exhaustive search against the hybrid pipeline on one epoch
    snapshot  dump one epoch's satellite positions and links as CSV
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .constellation import build_snapshot, build_walker_star
from .harness import method_seed, run_experiment
from .scenario import generate_scenario
from .solver import (
    InfeasibleUserError,
    ObjectiveWeights,
    SearchSpaceError,
    brute_force,
    hybrid_solve,
    normalization_bounds,
)

ORACLE_GAP = 0.005


def _load(path: str, seed: int | None, out: str | None) -> ExperimentConfig:
    cfg = load_config(path)
    if seed is not None:
        cfg = replace(cfg, master_seed=seed)
    if out is not None:
        cfg = replace(cfg, output_dir=out)
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args.config, args.seed, args.out)
    reports = run_experiment(cfg, quiet=args.quiet)
    feasible = sum(r.feasible for r in reports)
    out = Path(cfg.output_dir)
    if not args.quiet:
        print(f"{feasible}/{len(reports)} epoch-method runs feasible")
        print(f"wrote {out / 'metrics.csv'}")
        print(f"wrote {out / 'runtimes.csv'}")
        print(f"wrote {out / 'scenario.yaml'} and figures in {out}/")
    return 0 if feasible == len(reports) else 1


def cmd_validate(args) -> int:
    cfg = _load(args.config, args.seed, None)
    elements = build_walker_star(cfg.constellation)
    sc = generate_scenario(cfg.master_seed, cfg.scenario)
    users = sc.users()
    problems = []
    for epoch in range(cfg.constellation.num_epochs):
        snap = build_snapshot(elements, cfg.constellation, epoch, users)
        uncovered = [
            (n, u) for (n, u), vis in snap.visibility.items() if not vis
        ]
        for n, u in sorted(uncovered):
            problems.append(f"epoch {epoch}: slice {n} user {u} sees no satellite")
        if not args.quiet:
            state = "ok" if not uncovered else f"{len(uncovered)} uncovered users"
            print(f"epoch {epoch:3d}: {len(snap.isl_edges)} links, {state}")
    if problems:
        for line in problems:
            print(line, file=sys.stderr)
        print(f"validation failed: {len(problems)} problems", file=sys.stderr)
        return 1
    if not args.quiet:
        print(
            f"config ok: {cfg.constellation.num_sats} satellites, "
            f"{len(users)} users covered at every epoch"
        )
    return 0


def cmd_oracle(args) -> int:
    cfg = _load(args.config, args.seed, None)
    elements = build_walker_star(cfg.constellation)
    sc = generate_scenario(cfg.master_seed, cfg.scenario)
    snap = build_snapshot(elements, cfg.constellation, args.epoch, sc.users())
    weights = ObjectiveWeights(*cfg.methods[0].weights)
    norms = normalization_bounds(sc, snap.num_sats)
    from .placement import MigrationContext

    ctx = MigrationContext.initial(sc)
    exact = brute_force(sc, snap, ctx, weights, norms, cfg.solver.risk_mode)
    seed = method_seed(cfg.master_seed, cfg.methods[0].name, args.epoch)
    hybrid = hybrid_solve(
        sc,
        snap,
        None,
        weights,
        cfg.solver.sa_params(seed),
        cfg.solver.bnb_params(),
        cfg.solver.risk_mode,
    )
    base = max(exact.objective, 1e-12)
    gap = (hybrid.objective - exact.objective) / base
    print(f"exhaustive optimum: {exact.objective:.9f} ({exact.nodes} leaves)")
    print(f"hybrid pipeline:    {hybrid.objective:.9f} ({hybrid.nodes} nodes)")
    print(f"relative gap:       {gap:.6%}")
    if hybrid.objective < exact.objective - 1e-9:
        print("error: pipeline beat the exhaustive optimum", file=sys.stderr)
        return 1
    if gap > ORACLE_GAP + 1e-9:
        print(f"error: gap exceeds {ORACLE_GAP:.1%}", file=sys.stderr)
        return 1
    return 0


def cmd_snapshot(args) -> int:
    cfg = _load(args.config, args.seed, args.out)
    elements = build_walker_star(cfg.constellation)
    sc = generate_scenario(cfg.master_seed, cfg.scenario)
    snap = build_snapshot(elements, cfg.constellation, args.epoch, sc.users())
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sats = out / f"sats_epoch{args.epoch}.csv"
    with sats.open("w") as fh:
        fh.write("sat,plane,slot,x_km,y_km,z_km\n")
        for s in range(snap.num_sats):
            x, y, z = snap.positions[s]
            fh.write(
                f"{s},{elements.plane[s]},{elements.slot[s]},"
                f"{x:.3f},{y:.3f},{z:.3f}\n"
            )
    links = out / f"isl_epoch{args.epoch}.csv"
    with links.open("w") as fh:
        fh.write("sat_a,sat_b,delay_ms\n")
        for a, b, d in snap.isl_edges:
            fh.write(f"{a},{b},{d:.6f}\n")
    if not args.quiet:
        print(f"wrote {sats}")
        print(f"wrote {links}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leoplace",
        description="Risk-aware service chain placement over a satellite "
        "constellation: simulate, optimise and report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="experiment YAML file")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_run = sub.add_parser("run", help="run the full experiment")
    common(p_run)
    p_run.add_argument("--out", default=None, help="override output directory")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="check config and user coverage")
    common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_or = sub.add_parser(
        "oracle", help="compare the pipeline against exhaustive search"
    )
    common(p_or)
    p_or.add_argument("--epoch", type=int, default=0, help="epoch to compare at")
    p_or.set_defaults(func=cmd_oracle)

    p_snap = sub.add_parser("snapshot", help="dump one epoch's geometry")
    common(p_snap)
    p_snap.add_argument("--epoch", type=int, default=0, help="epoch to dump")
    p_snap.add_argument("--out", default=None, help="override output directory")
    p_snap.set_defaults(func=cmd_snapshot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (InfeasibleUserError, SearchSpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
