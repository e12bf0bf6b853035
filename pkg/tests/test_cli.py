"""Subcommand round trips through main(argv): outputs, guards, exit codes,
and byte-level determinism of the report files."""
import csv
import json
import shutil

import numpy as np
import pytest

from fraclef.analysis import check_monotone_t, check_sandwich
from fraclef.cli import RunConfig, load_profile, main, write_profile
from fraclef.fracop import Grid
from fraclef.homogeneous import classify_regime
from fraclef.solver import Provenance, solve_bounded

P_FLAGS = ["--s", "0.5", "--alpha", "0", "--gamma", "2"]


def test_kbeta_sign_classes_and_guard(capsys):
    assert main(["kbeta", "--s", "0.5", "--beta", "0.5"]) == 0
    out = capsys.readouterr().out
    assert "sign class: zero" in out
    assert main(["kbeta", "--s", "0.5", "--gamma", "2", "--alpha", "0"]) == 0
    out = capsys.readouterr().out
    assert "sign class: positive" in out and "rel dev" in out
    assert main(["kbeta", "--s", "0.5", "--beta", "1.1"]) == 2
    assert "beta must lie" in capsys.readouterr().err
    assert main(["kbeta", "--s", "0.5"]) == 2


def test_solve_writes_profiles_and_inline_check(tmp_path, capsys):
    rc = main(["solve", *P_FLAGS, "--K", "0,1", "--b0", "8",
               "--n-cells", "256", "--grading-q", "3",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "max rel deviation from the homogeneous solution" in out
    for name in ("profile_K0.csv", "profile_K0.meta.json",
                 "profile_K1.csv", "profile_K1.meta.json"):
        assert (tmp_path / name).exists()
    with open(tmp_path / "profile_K1.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == ["t", "u", "Kts", "U0", "lower", "upper"]
    meta = json.loads((tmp_path / "profile_K1.meta.json").read_text())
    assert meta["version"]
    assert len(meta["config_sha256"]) == 64
    assert meta["profile"]["provenance"] == "BoundedUKb"


def test_profile_roundtrip_bit_exact(tmp_path):
    params = classify_regime(0.5, 0.0, 2.0)
    prof = solve_bounded(params, 1.0, Grid.make(8.0, 256, 3.0))
    path = str(tmp_path / "p.csv")
    write_profile(path, prof, RunConfig())
    back = load_profile(path)
    assert np.array_equal(back.values, prof.values)
    assert np.array_equal(back.grid.nodes, prof.grid.nodes)
    assert back.exterior == prof.exterior
    assert back.provenance is prof.provenance
    # checks on the reloaded profile reproduce the in-memory numbers exactly
    assert check_sandwich(back).measured == check_sandwich(prof).measured
    assert check_monotone_t(back).measured == check_monotone_t(prof).measured


def test_solve_continuation_provenance(tmp_path):
    rc = main(["solve", "--s", "0.75", "--alpha", "-1", "--gamma", "2",
               "--K", "1", "--b0", "2", "--doublings", "1",
               "--n-cells", "96", "--grading-q", "3",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    prof = load_profile(str(tmp_path / "profile_K1.csv"))
    assert prof.provenance is Provenance.EXTRAPOLATED_UK
    meta = json.loads((tmp_path / "profile_K1.meta.json").read_text())
    assert meta["continuation"]["levels"] == [2.0, 4.0]


def test_solve_refuses_nonexistence_without_probe(tmp_path, capsys):
    rc = main(["solve", "--s", "0.5", "--alpha", "2", "--gamma", "2",
               "--out-dir", str(tmp_path)])
    assert rc == 2
    assert "refusing" in capsys.readouterr().err
    rc = main(["solve", "--s", "0.5", "--alpha", "2", "--gamma", "2",
               "--probe", "--b0", "2", "--n-cells", "96",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "probe_profile.csv").exists()


def test_verify_battery_passes_and_is_deterministic(tmp_path):
    argv = ["verify", *P_FLAGS, "--K", "1", "--b0", "4",
            "--n-cells", "128"]
    d1, d2 = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out-dir", str(d1)]) == 0
    assert main(argv + ["--out-dir", str(d2)]) == 0
    assert (d1 / "report.json").read_bytes() == \
        (d2 / "report.json").read_bytes()
    assert (d1 / "report.csv").read_bytes() == \
        (d2 / "report.csv").read_bytes()
    rep = json.loads((d1 / "report.json").read_text())
    assert rep["all_passed"] is True
    names = [c["name"] for c in rep["checks"]]
    assert any(n.startswith("sandwich") for n in names)
    assert any(n.startswith("scaling") for n in names)


def test_verify_stored_profiles_flags_corruption(tmp_path, capsys):
    assert main(["solve", *P_FLAGS, "--K", "1", "--b0", "8",
                 "--n-cells", "256", "--grading-q", "3",
                 "--out-dir", str(tmp_path)]) == 0
    capsys.readouterr()
    good = tmp_path / "profile_K1.csv"
    rows = list(csv.reader(open(good, newline="")))
    rows[100][1], rows[101][1] = rows[101][1], rows[100][1]
    bad = tmp_path / "corrupt.csv"
    with open(bad, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    shutil.copy(tmp_path / "profile_K1.meta.json",
                tmp_path / "corrupt.meta.json")
    rc = main(["verify", *P_FLAGS, "--profile", str(good),
               "--profile", str(bad), "--only", "sandwich,monotone",
               "--out-dir", str(tmp_path)])
    assert rc == 1
    out = capsys.readouterr().out
    assert "FAIL  monotone_t@corrupt.csv" in out
    assert "PASS  monotone_t@profile_K1.csv" in out
    rep = json.loads((tmp_path / "report.json").read_text())
    assert "corrupt.csv" in rep["artifacts"]


def test_verify_guards(tmp_path, capsys):
    assert main(["verify", *P_FLAGS, "--only", "bogus",
                 "--out-dir", str(tmp_path)]) == 2
    assert "unknown checks" in capsys.readouterr().err
    assert main(["verify", "--s", "0.5", "--alpha", "2", "--gamma", "2",
                 "--out-dir", str(tmp_path)]) == 2
    cfg_bad = tmp_path / "bad.json"
    cfg_bad.write_text('{"mystery": 1}')
    assert main(["verify", "--config", str(cfg_bad),
                 "--out-dir", str(tmp_path)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_verify_minimality_gap_fails_honestly(tmp_path, capsys):
    rc = main(["verify", *P_FLAGS, "--K", "1", "--b0", "4",
               "--doublings", "1", "--n-cells", "128",
               "--only", "minimality", "--out-dir", str(tmp_path)])
    assert rc == 1
    out = capsys.readouterr().out
    assert "PASS  minimality_increasing" in out
    assert "FAIL  minimality_gap" in out
    assert "PASS  minimality_interval_scaling" in out


def test_verify_slope_homogeneous_clauses(tmp_path, capsys):
    rc = main(["verify", *P_FLAGS, "--K", "0", "--b0", "8",
               "--n-cells", "512", "--grading-q", "3", "--only", "slope",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS  slope_K[K=0]" in out
    assert "PASS  slope_c[K=0]" in out


def test_config_file_with_overrides(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"s": 0.5, "alpha": 0.0, "gamma": 2.0,
                               "K": [1.0], "b0": 4.0, "n_cells": 128}))
    rc = main(["verify", "--config", str(cfg), "--n-cells", "96",
               "--only", "sandwich", "--out-dir", str(tmp_path)])
    assert rc == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["params"]["config"]["n_cells"] == 96
    assert rep["params"]["config"]["b0"] == 4.0


def test_green_subchecks(tmp_path, capsys):
    assert main(["green", "--reduce", "--n", "2"]) == 0
    assert "reduction n=2" in capsys.readouterr().out
    assert main(["green", "--identity", "--s", "0.5", "--gamma", "2",
                 "--alpha", "0"]) == 0
    assert "representation moment" in capsys.readouterr().out
    assert main(["green"]) == 2
    assert main(["solve", *P_FLAGS, "--K", "0", "--b0", "8",
                 "--n-cells", "256", "--grading-q", "3",
                 "--out-dir", str(tmp_path)]) == 0
    capsys.readouterr()
    rc = main(["green", "--residual", str(tmp_path / "profile_K0.csv"),
               "--t", "1,2", "--out-dir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("PASS  representation at") == 2
    rep = json.loads((tmp_path / "green_report.json").read_text())
    assert all(r["passed"] for r in rep["results"])


def test_probe_alpha_high_table(tmp_path, capsys):
    rc = main(["probe", "--s", "0.5", "--alpha", "1.5", "--gamma", "2",
               "--doublings", "2", "--out-dir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "NoSolutionAlphaHigh" in out and "growth ratios" in out
    rep = json.loads((tmp_path / "probe_report.json").read_text())
    assert rep["all_passed"] is True
