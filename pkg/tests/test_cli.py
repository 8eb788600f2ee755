"""Command line behaviour through main(), no subprocesses."""

from __future__ import annotations

import csv

import pytest

from conftest import CONFIG_DIR
from leoplace.cli import build_parser, main

TINY = str(CONFIG_DIR / "tiny.yaml")
SMOKE = str(CONFIG_DIR / "smoke.yaml")


def test_parser_knows_all_subcommands():
    parser = build_parser()
    for line in (
        ["run", TINY],
        ["validate", TINY],
        ["oracle", TINY],
        ["snapshot", TINY],
    ):
        assert parser.parse_args(line) is not None


def test_run_writes_outputs(tmp_path):
    rc = main(["run", TINY, "--out", str(tmp_path), "--quiet"])
    assert rc == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"metrics.csv", "runtimes.csv", "scenario.yaml"} <= names
    with open(tmp_path / "metrics.csv") as f:
        rows = list(csv.DictReader(f))
    # 3 epochs x 2 methods.
    assert len(rows) == 6
    assert all(r["feasible"] == "1" for r in rows)


def test_run_seed_override_changes_workload(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", TINY, "--out", str(a), "--quiet"]) == 0
    assert main(["run", TINY, "--out", str(b), "--quiet", "--seed", "8"]) == 0
    sa = (a / "scenario.yaml").read_text()
    sb = (b / "scenario.yaml").read_text()
    assert sa != sb


def test_validate_ok():
    assert main(["validate", TINY]) == 0


def test_oracle_agrees(capsys):
    rc = main(["oracle", TINY, "--epoch", "0"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "relative gap" in out


def test_snapshot_emits_tables(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rc = main(["snapshot", TINY, "--epoch", "1"])
    assert rc == 0
    with open(tmp_path / "sats_epoch1.csv") as f:
        sats = list(csv.DictReader(f))
    assert len(sats) == 6
    assert {"sat", "plane", "slot", "x_km", "y_km", "z_km"} <= set(sats[0])
    with open(tmp_path / "isl_epoch1.csv") as f:
        links = list(csv.DictReader(f))
    assert len(links) == 12
    assert {"sat_a", "sat_b", "delay_ms"} <= set(links[0])


def test_missing_config_fails():
    assert main(["run", str(CONFIG_DIR / "nope.yaml")]) == 1


def test_bad_config_fails(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("master_seed: 1\nwarp_drive: true\n")
    assert main(["run", str(p)]) == 1
    assert "warp_drive" in capsys.readouterr().err
