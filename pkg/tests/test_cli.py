"""Command-line runner: subcommands, manifests, exit codes, configuration."""

import json
import subprocess
import sys

import numpy as np
import pytest

from relbrownian.cli import SCHEMA_VERSION, main, read_config_file, run
from relbrownian.fokker_planck import read_density_csv
from relbrownian.process import read_worldline_csv


def _run(tmp_path, *args):
    code, manifest = run([*args, "--out", str(tmp_path)])
    return code, manifest


def test_verify_integrals(tmp_path):
    code, m = _run(tmp_path, "verify-integrals")
    assert code == 0
    names = [c["name"] for c in m["checks"]]
    assert names == ["I1", "I2", "I3", "lambda_sq", "Dbreve_over_D"]
    assert all(c["passed"] and c["tolerance"] == 1e-10 for c in m["checks"])
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk["schema_version"] == SCHEMA_VERSION
    assert "wall_time_s" in json.loads((tmp_path / "timing.json").read_text())


def test_manifest_fields(tmp_path):
    code, m = _run(tmp_path, "moments", "--n", "20000", "--seed", "3")
    assert code == 0
    for key in ("schema_version", "config", "seed", "version", "checks", "passed"):
        assert key in m
    for check in m["checks"]:
        assert {"value", "expected", "stderr", "tolerance", "passed", "deviation"} <= set(check)
    assert m["config"]["family"] == "gaussian-4d"
    rows = (tmp_path / "moments.csv").read_text().splitlines()
    assert rows[0] == "label,mu,nu,value,stderr,expected" and len(rows) == 17


def test_moments_deterministic(tmp_path):
    args = ["moments", "--family", "gaussian-4d", "--lambda", "critical", "--n", "200000", "--seed", "7"]
    _run(tmp_path / "a", *args)
    _run(tmp_path / "b", *args)
    a = (tmp_path / "a" / "manifest.json").read_text().replace(str(tmp_path / "a"), "OUT")
    b = (tmp_path / "b" / "manifest.json").read_text().replace(str(tmp_path / "b"), "OUT")
    assert a == b


def test_boost_test(tmp_path):
    code, m = _run(tmp_path, "boost-test", "--family", "gaussian-4d", "--rapidity", "0.5", "--n", "200000")
    assert code == 0
    assert {c["name"] for c in m["checks"]} == {"boosted_covariance", "boosted_vs_exact", "boosted_isotropy"}


def test_simulate_and_ordered_schedule(tmp_path):
    code, m = _run(tmp_path, "simulate", "--family", "hyperbolic-3+1", "--n", "20000", "--steps", "5")
    assert code == 0 and len(m["info"]["checkpoints"]) == 5
    code, m = _run(tmp_path, "simulate", "--family", "hyperbolic-1+1", "--n", "20000", "--dtau", "0.01",
                   "--steps", "105", "--tau-J", "0.1")
    assert code == 0 and m["info"]["checkpoints"][-1]["jumps"] == 10


def test_worldline(tmp_path):
    code, m = _run(tmp_path, "worldline", "--steps", "50", "--seed", "4")
    assert code == 0
    taus, points, sectors, weights = read_worldline_csv(tmp_path / "worldline.csv", dim=2)
    assert len(taus) == 51 and sectors[0] == "start"
    assert m["info"]["segments"][0]["tau"][0] == 0.0
    code, m = _run(tmp_path, "worldline", "--dtau", "0.01", "--steps", "105", "--tau-J", "0.1")
    assert code == 0 and m["checks"][0]["value"] == 10


def test_fp_compare_small_fails_honestly(tmp_path):
    # too few walkers for the density tolerance: the check must fail, exit 1
    code, m = _run(tmp_path, "fp-compare", "--n", "3000", "--steps", "20", "--dtau", "0.05")
    assert code == 1
    density = [c for c in m["checks"] if c["name"] == "density_l1"][0]
    assert not density["passed"]
    values, coords = read_density_csv(tmp_path / "density.csv")
    assert values.shape == tuple(len(c) for c in coords)


def test_fp_compare_complex_weights_skips_density(tmp_path):
    code, m = _run(tmp_path, "fp-compare", "--family", "gaussian-4d", "--n", "20000", "--steps", "4", "--dtau", "0.05")
    assert code == 0
    assert "skipped" in m["info"]["density_check"]
    assert {c["name"] for c in m["checks"]} == {"moment_slope", "kg_mode_residual"}


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\nfamily = gaussian-2d\nlam = 0.5\nn = 5000\nseed = 11  # trailing comment\n")
    code, m = _run(tmp_path, "moments", "--config", str(cfg), "--n", "6000")
    assert code == 0
    assert m["config"]["family"] == "gaussian-2d"
    assert m["config"]["lam"] == 0.5 and m["config"]["seed"] == 11
    assert m["config"]["n"] == 6000
    assert read_config_file(cfg)["family"] == "gaussian-2d"


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        [],
        ["moments", "--nope"],
        ["moments", "--family", "gaussian-3d"],
        ["moments", "--lambda", "abc"],
        ["moments", "--n", "-5"],
        ["simulate", "--steps", "0"],
    ],
)
def test_usage_errors(tmp_path, argv, capsys):
    assert main([*argv, "--out", str(tmp_path)] if argv and argv[0] != "bogus" else argv) == 2


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("family gaussian-4d\n")
    assert main(["moments", "--config", str(bad)]) == 2
    bad.write_text("colour = blue\n")
    assert main(["moments", "--config", str(bad)]) == 2
    assert main(["moments", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "relbrownian.cli", "verify-integrals", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.count("PASS") == 5
