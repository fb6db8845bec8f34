"""End-to-end checks of the command-line interface via subprocesses."""

import json
import subprocess
import sys

import pytest

from softlev.harness import gaussian_instance


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "softlev.cli", *args],
        capture_output=True,
        text=True,
        timeout=300,
    )


def _spec_file(tmp_path, doc, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def _uniform_softmax_spec(tmp_path):
    doc = {"family": "softmax", "A": [[0.0], [0.0], [0.0]], "constraint": {"E": 1.0}}
    return _spec_file(tmp_path, doc)


# ---------------------------------------------------------------------------
# pmf
# ---------------------------------------------------------------------------


def test_pmf_uniform_softmax(tmp_path):
    res = run_cli("pmf", _uniform_softmax_spec(tmp_path), "--query", "0")
    assert res.returncode == 0
    assert res.stdout.splitlines() == ["0.33333333333333331"] * 3


def test_pmf_identity_leverage(tmp_path):
    doc = {"family": "leverage", "A": [[1.0, 0.0], [0.0, 1.0]], "constraint": {"c": 0.5, "C": 2.0}}
    res = run_cli("pmf", _spec_file(tmp_path, doc), "--query", "1,1")
    assert res.returncode == 0
    assert res.stdout.splitlines() == ["0.5", "0.5"]


def test_pmf_rejects_energy_violation(tmp_path):
    res = run_cli("pmf", _uniform_softmax_spec(tmp_path), "--query", "5")
    assert res.returncode == 2
    assert "energy" in res.stderr


def test_missing_spec_file_is_a_usage_error(tmp_path):
    res = run_cli("pmf", str(tmp_path / "absent.json"), "--query", "0")
    assert res.returncode == 2
    assert "cannot read" in res.stderr


def test_malformed_spec_reports_line_and_column(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{ bad", encoding="utf-8")
    res = run_cli("pmf", str(path), "--query", "0")
    assert res.returncode == 2
    assert ":1:3:" in res.stderr


# ---------------------------------------------------------------------------
# distance
# ---------------------------------------------------------------------------


def test_distance_identical_pair_is_exactly_zero(tmp_path):
    doc = {
        "family": "softmax",
        "A": [[0.5], [1.0]],
        "B": [[0.5], [1.0]],
        "constraint": {"E": 1.0},
    }
    res = run_cli("distance", _spec_file(tmp_path, doc), "--query", "1")
    assert res.returncode == 0
    assert res.stdout.splitlines() == ["tv=0", "h2=0"]


def test_distance_requires_a_query(tmp_path):
    res = run_cli("distance", _uniform_softmax_spec(tmp_path))
    assert res.returncode == 2
    assert "needs --query" in res.stderr


def test_distance_extremal_pair_attains_both_bounds():
    res = run_cli("distance", "--lemma-a1", "--eps", "0.1", "--n", "6", "--m", "2")
    assert res.returncode == 0
    vals = dict(line.split("=") for line in res.stdout.splitlines())
    assert abs(float(vals["tv"]) - float(vals["tv_bound"])) <= 1e-10
    assert abs(float(vals["h2"]) - float(vals["h2_bound"])) <= 1e-10


def test_distance_lemma_mode_requires_parameters():
    res = run_cli("distance", "--lemma-a1")
    assert res.returncode == 2
    assert "needs --eps" in res.stderr


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------


def test_optimize_prints_one_csv_line():
    res = run_cli("optimize", "demo-softmax", "--restarts", "4", "--max-iters", "200", "--seed", "0")
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert len(lines) == 1
    cells = lines[0].split(",")
    # value, iterations, restarts, converged, then the 3-dim argmax
    assert len(cells) == 4 + 3
    assert float(cells[0]) > 0.0
    assert int(cells[1]) >= 1
    assert cells[2] == "4"
    assert cells[3] in ("0", "1")


def test_optimize_variance_objective():
    res = run_cli("optimize", "demo-softmax", "--objective", "variance", "--restarts", "4", "--seed", "0")
    assert res.returncode == 0
    assert float(res.stdout.split(",")[0]) > 0.0


def test_repeat_invocations_are_byte_identical():
    args = ("optimize", "demo-leverage", "--restarts", "4", "--seed", "1")
    assert run_cli(*args).stdout == run_cli(*args).stdout


# ---------------------------------------------------------------------------
# test (likelihood-ratio experiment)
# ---------------------------------------------------------------------------


def _separated_pair_spec(tmp_path):
    doc = {
        "family": "softmax",
        "A": [[0.0], [0.0]],
        "B": [[2.0], [0.0]],
        "constraint": {"E": 1.0},
        "seed": 5,
    }
    return _spec_file(tmp_path, doc)


def test_lrt_success_and_require_gate(tmp_path):
    spec = _separated_pair_spec(tmp_path)
    base = ("test", spec, "--m", "40", "--trials", "50", "--seed", "5")
    res = run_cli(*base)
    assert res.returncode == 0
    assert res.stdout.startswith("success=")
    success = float(res.stdout.split("=")[1])
    assert success >= 0.9
    assert run_cli(*base).stdout == res.stdout  # seeded, hence repeatable
    above = run_cli(*base, "--require", str(success + 0.01))
    assert above.returncode == 1
    below = run_cli(*base, "--require", str(success - 0.01))
    assert below.returncode == 0


def test_lrt_identical_pair_exits_1(tmp_path):
    doc = {
        "family": "softmax",
        "A": [[0.0], [1.0]],
        "B": [[0.0], [1.0]],
        "constraint": {"E": 1.0},
    }
    res = run_cli("test", _spec_file(tmp_path, doc), "--m", "10", "--trials", "20")
    assert res.returncode == 1
    assert "indistinguishable" in res.stderr


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _sweep_spec_file(tmp_path):
    model = gaussian_instance("softmax", 4, 2, seed=1)
    doc = {
        "family": "softmax",
        "A": model.A.tolist(),
        "M": model.M.tolist(),
        "constraint": {"E": 1.0},
        "seed": 9,
    }
    return _spec_file(tmp_path, doc, "sweep-model.json")


def _run_sweep_cli(spec, out, threads):
    return run_cli(
        "sweep",
        spec,
        "--out",
        out,
        "--grid",
        "0.3,0.15",
        "--trials",
        "60",
        "--restarts",
        "8",
        "--threads",
        str(threads),
    )


def test_sweep_writes_csv_and_summary(tmp_path):
    spec = _sweep_spec_file(tmp_path)
    out = tmp_path / "sweep.csv"
    res = _run_sweep_cli(spec, str(out), threads=2)
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert lines[0] == f"wrote {out}"
    assert lines[1] == "rows=2"
    assert lines[2].startswith("slope=-")
    assert lines[3].startswith("nu=")
    content = out.read_text(encoding="utf-8").splitlines()
    assert content[0] == "eps,h2_at_opt,nu,m_star,success_at_m,seed"
    assert len(content) == 6


def test_sweep_output_does_not_depend_on_thread_count(tmp_path):
    spec = _sweep_spec_file(tmp_path)
    out1, out3 = tmp_path / "t1.csv", tmp_path / "t3.csv"
    res1 = _run_sweep_cli(spec, str(out1), threads=1)
    res3 = _run_sweep_cli(spec, str(out3), threads=3)
    assert res1.returncode == 0 and res3.returncode == 0
    assert out1.read_bytes() == out3.read_bytes()
    # summaries agree apart from the path they wrote
    assert res1.stdout.splitlines()[1:] == res3.stdout.splitlines()[1:]


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def test_verify_bounds_suite_passes():
    res = run_cli("verify", "--suite", "bounds", "--instances", "40")
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert "strict_violations=0" in lines[0]
    assert lines[-1] == "verdict: PASS"


def test_verify_detects_corrupted_bounds():
    res = run_cli("verify", "--suite", "bounds", "--instances", "40", "--bound-scale", "0.5")
    assert res.returncode == 1
    assert res.stdout.splitlines()[-1] == "verdict: FAIL"


def test_verify_invariances_suite_passes():
    res = run_cli("verify", "--suite", "invariances", "--instances", "25")
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert len([ln for ln in lines if ln.startswith("invariances: ")]) == 7
    assert all("ok=1" in ln for ln in lines if ln.startswith("invariances: "))
    assert lines[-1] == "verdict: PASS"


def test_verify_taylor_reports_flags_for_both_demos():
    res = run_cli("verify", "--suite", "taylor")
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    soft = next(ln for ln in lines if ln.startswith("taylor[softmax]"))
    lev = next(ln for ln in lines if ln.startswith("taylor[leverage]"))
    # the 1/2-normalized band is reported honestly (it does not hold) but the
    # exact-identity gates do
    assert "band_ok=0" in soft
    assert "converging_eighth=1" in soft and "zratio_ok=1" in soft
    assert "derivative_ok=1" in lev
    assert lines[-1] == "verdict: PASS"


def test_verify_writes_suite_csvs(tmp_path):
    out = tmp_path / "report.csv"
    res = run_cli("verify", "--suite", "invariances", "--instances", "10", "--out", str(out))
    assert res.returncode == 0
    assert out.read_text(encoding="utf-8").splitlines()[-1] == "# all_ok 1"


# ---------------------------------------------------------------------------
# usage plumbing
# ---------------------------------------------------------------------------


def test_unknown_flag_is_a_usage_error():
    res = run_cli("pmf", "demo-softmax", "--nope")
    assert res.returncode == 2


def test_help_exits_cleanly():
    res = run_cli("--help")
    assert res.returncode == 0
    assert "pmf" in res.stdout and "verify" in res.stdout
