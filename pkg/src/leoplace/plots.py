"""Report figures, rendered headlessly to SVG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

FIGURE_NAMES = (
    "risk_per_epoch.svg",
    "utilization.svg",
    "migrations_per_epoch.svg",
    "runtime_per_epoch.svg",
    "risk_bounds.svg",
)


def _series(reports):
    """Feasible rows grouped per method, preserving first-seen order."""
    methods: dict[str, list] = {}
    for r in reports:
        methods.setdefault(r.method, [])
        if r.feasible:
            methods[r.method].append(r)
    return methods


def _mean(values) -> float:
    vals = list(values)
    return sum(vals) / len(vals) if vals else 0.0


def render_all(reports, out_dir: str | Path) -> list[Path]:
    """Write all five figures; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = _series(reports)
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4))
    for name, rows in methods.items():
        ax.plot(
            [r.epoch for r in rows],
            [r.risk_ex for r in rows],
            marker="o",
            markersize=3,
            label=name,
        )
    ax.set_xlabel("epoch")
    ax.set_ylabel("co-location risk")
    ax.grid(True, alpha=0.3)
    ax.legend()
    paths.append(_save(fig, out / "risk_per_epoch.svg"))

    fig, ax = plt.subplots(figsize=(7, 4))
    names = list(methods)
    xs = range(len(names))
    mean_vals = [_mean(r.util_mean_pct for r in methods[n]) for n in names]
    peak_vals = [_mean(r.util_peak_pct for r in methods[n]) for n in names]
    width = 0.38
    ax.bar([x - width / 2 for x in xs], mean_vals, width, label="mean")
    ax.bar([x + width / 2 for x in xs], peak_vals, width, label="peak")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=15)
    ax.set_ylabel("CPU utilisation [%]")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    paths.append(_save(fig, out / "utilization.svg"))

    fig, ax = plt.subplots(figsize=(7, 4))
    for name, rows in methods.items():
        ax.plot(
            [r.epoch for r in rows],
            [r.mig_avoidable for r in rows],
            marker="o",
            markersize=3,
            label=name,
        )
    ax.set_xlabel("epoch")
    ax.set_ylabel("avoidable migrations")
    ax.grid(True, alpha=0.3)
    ax.legend()
    paths.append(_save(fig, out / "migrations_per_epoch.svg"))

    fig, ax = plt.subplots(figsize=(7, 4))
    for name, rows in methods.items():
        ax.plot(
            [r.epoch for r in rows],
            [r.t_stage1_ms + r.t_stage2_ms + r.t_stage3_ms for r in rows],
            marker="o",
            markersize=3,
            label=name,
        )
    ax.set_xlabel("epoch")
    ax.set_ylabel("solve time [ms]")
    ax.set_yscale("log")
    ax.grid(True, alpha=0.3, which="both")
    ax.legend()
    paths.append(_save(fig, out / "runtime_per_epoch.svg"))

    fig, ax = plt.subplots(figsize=(7, 4))
    lows = [_mean(r.risk_lb for r in methods[n]) for n in names]
    exs = [_mean(r.risk_ex for r in methods[n]) for n in names]
    ups = [_mean(r.risk_ub for r in methods[n]) for n in names]
    width = 0.26
    ax.bar([x - width for x in xs], lows, width, label="lower bound")
    ax.bar(list(xs), exs, width, label="exact")
    ax.bar([x + width for x in xs], ups, width, label="upper bound")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=15)
    ax.set_ylabel("co-location risk")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    paths.append(_save(fig, out / "risk_bounds.svg"))

    return paths


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
