#!/usr/bin/env python3
"""
End-to-end tests: pipeline stages, run records, summaries and the command line
"""

import csv
import json

import pytest

from core.blaschke import BlaschkeProduct
from core.config_manager import RunConfig
from core.pipeline import STAGES, Pipeline, read_json

import modulus_approx


def small_config(tmp_path, zeros_file, **overrides) -> RunConfig:
    values = dict(
        input=str(zeros_file), epsilon=0.25, bign=1, mesh=0.1, dmax=8, walks=2_000,
        chunk_walks=1_000, seed=3, out=str(tmp_path / "out"), verify_depth=6,
        admissible_points=5, exterior_points=10, conclusion_samples=50,
    )
    values.update(overrides)
    return RunConfig(**values)


@pytest.fixture
def no_zeros(tmp_path):
    return BlaschkeProduct().save(tmp_path / "empty.json")


@pytest.fixture
def power_zeros(tmp_path):
    return BlaschkeProduct(origin_multiplicity=800).save(tmp_path / "power.json")


def test_run_without_zeros(tmp_path, no_zeros):
    config = small_config(tmp_path, no_zeros)
    record = Pipeline(config).run()
    assert [record.stages[s]["status"] for s in STAGES] == ["ok"] * len(STAGES)
    contour = record.stages["contour"]
    assert contour["components"] == 0
    # the contour is built for half the requested accuracy
    assert contour["epsilon"] == 0.125 and contour["delta"] == 0.03125
    assert contour["unresolved_squares"] == []
    verify = record.stages["verify"]
    assert verify["sup"]["sup_diff"] == 0.0
    assert verify["theorem_holds"]
    assert "sup_diff" not in record.degraded

    out = tmp_path / "out"
    for name in ("zeros.json", "contour.json", "measures.json", "discretization.json",
                 "i1.json", "record.json", "summary.csv"):
        assert (out / name).exists(), name
    saved = read_json(out / "record.json")
    assert saved["digest"] == record.digest()
    rows = dict(csv.reader(open(out / "summary.csv")))
    assert rows["digest"] == record.digest()
    assert rows["verify.theorem_holds"] == "True"


def test_digest_is_reproducible(tmp_path, no_zeros):
    config = small_config(tmp_path, no_zeros)
    first = Pipeline(config).run().digest()
    second = Pipeline(config).run().digest()
    assert first == second
    changed = Pipeline(small_config(tmp_path, no_zeros, seed=4)).run().digest()
    assert changed != first


def test_corrupt_input_skips_later_stages(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"zeros": [{"re": 2.0, "im": 0.0}]}))
    record = Pipeline(small_config(tmp_path, bad)).run()
    assert record.failed
    assert record.stages["input"]["status"] == "failed"
    assert "ZeroSetFormatError" in record.stages["input"]["error"]
    assert all(record.stages[s]["status"] == "skipped" for s in STAGES[1:])
    assert (tmp_path / "out" / "record.json").exists()


def test_missing_input_file_fails_cleanly(tmp_path):
    record = Pipeline(small_config(tmp_path, tmp_path / "absent.json")).run()
    assert record.stages["input"]["status"] == "failed"


def test_render_writes_figure(tmp_path, no_zeros):
    Pipeline(small_config(tmp_path, no_zeros, render=True)).run()
    svg = tmp_path / "out" / "figure.svg"
    assert svg.exists() and svg.read_text().lstrip().startswith("<?xml")
    assert (tmp_path / "out" / "figure.png").exists()


@pytest.mark.slow
def test_power_run(tmp_path, power_zeros):
    """z^800 with K = 2: one circular component at r = 7/8, every zero in B1"""
    config = small_config(tmp_path, power_zeros, epsilon=0.5, dmax=12)
    record = Pipeline(config).run()
    assert not record.failed, record.stages
    contour = record.stages["contour"]
    assert contour["components"] == 1 and not contour["has_holes"]
    assert contour["delta"] == 0.0625
    assert contour["audit"]["passed"]
    assert record.stages["split"]["b1_zeros"] == 800
    discretized = record.stages["discretize"]
    assert discretized["arc_count"] == 800
    assert discretized["max_mass_error"] < 1e-9
    again = Pipeline(config).run()
    assert again.digest() == record.digest()


@pytest.mark.slow
def test_cluster_run_with_interior_zeros(tmp_path):
    """Off-origin cluster: a real contour, B1 nonempty, every stage checked"""
    config = small_config(tmp_path, None, input=None, generator="cluster:1000,0.7,1.5", epsilon=0.98,
                          dmax=12, walks=10_000, seed=7, admissible_points=10, exterior_points=20)
    record = Pipeline(config).run()
    assert not record.failed, record.stages
    contour = record.stages["contour"]
    assert contour["components"] >= 1
    assert contour["audit"]["interior"]["violations"] == 0
    assert contour["audit"]["exterior"]["misses"] == 0
    b1_zeros = record.stages["split"]["b1_zeros"]
    assert b1_zeros > 0
    for entry in record.stages["measure"]["components"].values():
        assert entry["mean_value_points"] > 0
        assert entry["mean_value_violations"] == 0
    discretized = record.stages["discretize"]
    assert discretized["arc_count"] == b1_zeros
    assert discretized["max_mass_error"] < 1e-9
    assert discretized["max_moment_residual"] < 1e-6
    verify = record.stages["verify"]
    assert verify["telescoping"]["holds"]
    assert verify["far_field"]["far_holds"]


# ---------------------------------------------------------------------------
# Command line

def test_cli_run(tmp_path, no_zeros, capsys):
    run_file = tmp_path / "small.cfg"
    run_file.write_text("verify_depth = 6\nadmissible_points = 5\nconclusion_samples = 50\n")
    code = modulus_approx.main([
        "run", "--config", str(run_file), "--input", str(no_zeros), "--out", str(tmp_path / "cli"),
        "--epsilon", "0.25", "--bign", "1", "--walks", "1000", "--dmax", "8",
    ])
    assert code == 0
    printed = capsys.readouterr().out
    assert "Modulus Approximation" in printed
    assert "✅ Done" in printed
    assert (tmp_path / "cli" / "record.json").exists()


def test_cli_reports_bad_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[]")
    code = modulus_approx.main(["run", "--input", str(bad), "--out", str(tmp_path / "cli")])
    assert code == 1
    assert "failed" in capsys.readouterr().out


def test_cli_generate_then_contour(tmp_path):
    out = tmp_path / "gen"
    assert modulus_approx.main(["generate", "--generator", "radial:6,0.5", "--out", str(out)]) == 0
    assert BlaschkeProduct.load(out / "zeros.json").degree == 6
    assert modulus_approx.main(["contour", "--input", str(out / "zeros.json"), "--out", str(out),
                                "--bign", "1", "--dmax", "8"]) == 0
    assert (out / "contour.json").exists()
    assert (out / "contour_audit.json").exists()


def test_cli_rejects_bad_settings(tmp_path, capsys):
    code = modulus_approx.main(["run", "--generator", "radial:3", "--epsilon", "2", "--out", str(tmp_path)])
    assert code == 1
    assert "epsilon" in capsys.readouterr().out


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v", "-m", "slow or not slow"]))
