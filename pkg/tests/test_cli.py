import csv
import json
import math

import numpy as np
import pytest

from policylimits import dataio, fit_logistic, limit_curve, split_dataset
from policylimits import synthdata as sd
from policylimits.cli import UsageError, main, parse_alphas, parse_policy
from policylimits.limits import LimitInputs, limit_values
from policylimits.sensitivity import odds_divergence


@pytest.fixture(autouse=True)
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def rerun_identical(path, *extra):
    first = [open(p, "rb").read() for p in (path, *extra)]
    argv = dataio.read_config(path)["argv"]
    assert main(argv) == 0
    assert [open(p, "rb").read() for p in (path, *extra)] == first


def test_curve_unit_weight_fixture():
    with open("d.csv", "w") as fh:
        fh.write("x1,x2,a,l\n0.1,0.2,0,1.5\n0.3,0.4,1,0.5\n0.9,0.9,0,2.5\n")
    assert main(["curve", "d.csv", "--policy", "sigmoid:c=1", "--nominal", "sigmoid:c=1",
                 "--gamma", "1", "--n0", "1", "--out", "c.csv"]) == 0
    ds = dataio.read_dataset("d.csv")
    split = split_dataset(ds, 1, 0)
    losses = ds.loss[split.d1_indices]
    inputs = LimitInputs.from_arrays(losses, np.ones(2), np.ones(2), np.ones(1))
    expect = limit_values(inputs, parse_alphas(None))
    got = [math.inf if r["is_infinite"] == "true" else float(r["ell"]) for r in rows("c.csv")]
    assert got == expect.tolist()
    rerun_identical("c.csv", "c.json")


def test_curve_missing_loss_column(capsys):
    with open("d.csv", "w") as fh:
        fh.write("x1,a\n0.1,0\n0.3,1\n")
    assert main(["curve", "d.csv", "--policy", "treat-all", "--nominal", "fit", "--out", "c.csv"]) == 2
    assert "'l'" in capsys.readouterr().err


def test_curve_gamma_monotone_and_json():
    assert main(["simulate", "--scenario", "unconfounded", "--n", "400", "--seed", "3", "--out", "d.csv"]) == 0
    assert main(["curve", "d.csv", "--policy", "threshold:tau=0.5", "--nominal", "fit",
                 "--gamma", "1", "2", "3", "--alphas", "0.05:0.95:0.05", "--out", "c.csv"]) == 0
    table = rows("c.csv")
    assert len(table) == 57
    ell = {}
    for r in table:
        ell.setdefault(float(r["gamma"]), []).append(math.inf if r["is_infinite"] == "true" else float(r["ell"]))
    for lo, hi in zip(ell[1.0], ell[2.0]):
        assert hi >= lo
    for lo, hi in zip(ell[2.0], ell[3.0]):
        assert hi >= lo
    meta = json.load(open("c.json"))
    assert [c["gamma"] for c in meta["curves"]] == [1.0, 2.0, 3.0]
    assert meta["config"]["version"] and 0 <= meta["curves"][0]["informativeness"] <= 1
    rerun_identical("c.csv", "c.json")


def test_curve_matches_library():
    main(["simulate", "--scenario", "unconfounded", "--n", "200", "--seed", "1", "--out", "d.csv"])
    main(["fit-propensity", "d.csv", "--out", "m.json"])
    assert main(["curve", "d.csv", "--policy", "treat-all", "--nominal", "logistic:m.json",
                 "--gamma", "1.5", "--seed", "4", "--n0", "50", "--out", "c.csv"]) == 0
    ds = dataio.read_dataset("d.csv")
    curve = limit_curve(ds, parse_policy("treat-all"), fit_logistic(ds.X, ds.a), 1.5,
                        split=split_dataset(ds, 50, 4))
    got = [math.inf if r["is_infinite"] == "true" else float(r["ell"]) for r in rows("c.csv")]
    assert got == curve.ells.tolist()


def test_simulate_round_trip_and_weight_range():
    assert main(["simulate", "--scenario", "unconfounded", "--c", "1", "--n", "3000", "--out", "d.csv"]) == 0
    ds = dataio.read_dataset("d.csv")
    again = sd.gen_unconfounded(sd.UnconfoundedConfig(1.0, 3000, 0))
    assert np.array_equal(ds.loss, again.dataset.loss) and np.array_equal(ds.X, again.dataset.X)
    P = sd.SigmoidPastPolicy(1.0).probs_of(ds.X, ds.a)
    assert (1 / P).max() <= 8.39
    rerun_identical("d.csv")


def test_simulate_confounded_truth():
    assert main(["simulate", "--scenario", "confounded", "--gamma0", "2", "--n", "500",
                 "--threshold-quantile", "0.35", "--out", "d.csv", "--truth", "t.csv"]) == 0
    truth = rows("t.csv")
    ds = dataio.read_dataset("d.csv")
    assert len(truth) == len(ds) and "u" not in open("d.csv").read().splitlines()[2]
    div = odds_divergence([float(r["propensity_true"]) for r in truth],
                          [float(r["propensity_nominal"]) for r in truth])
    assert np.all(div <= 2 + 1e-9)
    rerun_identical("d.csv", "t.csv")


def test_simulate_ihdp(tmp_path):
    assert main(["simulate", "--scenario", "ihdp-a", "--n", "120", "--d", "8", "--out", "d.csv"]) == 0
    ds = dataio.read_dataset("d.csv")
    assert ds.X.shape == (120, 8)
    cov = sd.ihdp_standin(120, 8, 0)
    dataio.write_text("cov.csv", dataio.dataset_lines(cov.X, cov.a))
    assert main(["simulate", "--scenario", "ihdp-a", "--covariates", "cov.csv", "--out", "e.csv"]) == 0
    assert dataio.read_dataset("e.csv").X.shape == (120, 8)


def test_coverage_report():
    argv = ["coverage", "--scenario", "unconfounded", "--runs", "8", "--draws", "50", "--n", "80",
            "--gammas", "1", "2", "--alphas", "0.1,0.5,0.9", "--seed", "5", "--out", "r.csv"]
    assert main(argv) == 0
    table = rows("r.csv")
    assert list(table[0]) == ["method", "gamma", "alpha", "coverage", "gap", "stderr"]
    assert [r["method"] for r in table].count("benchmark_ipw") == 3
    assert all(r["gamma"] == "" for r in table if r["method"] == "benchmark_ipw")
    for r in table:
        assert float(r["gap"]) == pytest.approx(float(r["alpha"]) - (1 - float(r["coverage"])))
    rerun_identical("r.csv", "r.json")
    assert main(argv[:-1] + ["r2.csv", "--workers", "2"]) == 0
    assert [r for r in rows("r2.csv")] == table


def test_coverage_confounded_invalid_at_gamma_one():
    assert main(["coverage", "--scenario", "confounded", "--c", "0.5", "--gamma0", "2", "--policy", "treat-all",
                 "--threshold-quantile", "0.35", "--runs", "40", "--draws", "200", "--gammas", "1",
                 "--method", "proposed", "--out", "r.csv"]) == 0
    assert min(float(r["gap"]) for r in rows("r.csv")) < 0


def test_fit_propensity(capsys):
    with open("bal.csv", "w") as fh:
        fh.write("a,l\n" + "".join(f"{i % 2},0\n" for i in range(10)))
    assert main(["fit-propensity", "bal.csv", "--out", "m.json"]) == 0
    model = json.load(open("m.json"))
    assert model["intercept"] == pytest.approx(0.0, abs=1e-9) and model["converged"]

    main(["simulate", "--scenario", "unconfounded", "--n", "300", "--out", "d.csv"])
    assert main(["fit-propensity", "d.csv", "--out", "m.json"]) == 0
    ds = dataio.read_dataset("d.csv")
    loaded = parse_policy("logistic:m.json")
    assert np.array_equal(loaded.predict_proba(ds.X), fit_logistic(ds.X, ds.a).predict_proba(ds.X))

    with open("sep.csv", "w") as fh:
        fh.write("x1,a,l\n-2,0,0\n-1,0,0\n1,1,0\n2,1,0\n")
    assert main(["fit-propensity", "sep.csv", "--ridge", "1e-3", "--out", "s.json"]) == 0
    assert all(math.isfinite(v) for v in json.load(open("s.json"))["coef"])

    with open("multi.csv", "w") as fh:
        fh.write("x1,a,l\n0,0,0\n1,2,0\n")
    assert main(["fit-propensity", "multi.csv", "--out", "x.json"]) == 2
    assert "binary" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["curve"],
    ["simulate", "--scenario", "nope", "--out", "x.csv"],
    ["coverage", "--scenario", "unconfounded", "--runs", "x", "--out", "x.csv"],
    ["bogus"],
])
def test_bad_flags(argv):
    assert main(argv) == 2


@pytest.mark.parametrize("spec", ["threshold:tau=2", "threshold:t=0.5", "sigmoid:c=9", "table:missing.csv",
                                  "nonsense", "treat-all:x", "threshold:tau=abc"])
def test_unresolvable_policy(spec):
    main(["simulate", "--scenario", "unconfounded", "--n", "20", "--out", "d.csv"])
    assert main(["curve", "d.csv", "--policy", spec, "--nominal", "fit", "--out", "c.csv"]) == 2


def test_fit_only_as_nominal():
    main(["simulate", "--scenario", "unconfounded", "--n", "20", "--out", "d.csv"])
    assert main(["curve", "d.csv", "--policy", "fit", "--nominal", "fit", "--out", "c.csv"]) == 2


@pytest.mark.parametrize("text", ["0.5,0.2", "0:1:0.5", "a,b", "0.1:0.9:0"])
def test_bad_alphas(text):
    with pytest.raises(UsageError):
        parse_alphas(text)


def test_table_policy_spec():
    with open("pol.csv", "w") as fh:
        fh.write("x1,x2,p0,p1\n0.1,0.2,0.5,0.5\n0.3,0.4,0,1\n")
    with open("d.csv", "w") as fh:
        fh.write("x1,x2,a,l\n0.1,0.2,0,1\n0.3,0.4,1,2\n")
    assert main(["curve", "d.csv", "--policy", "table:pol.csv", "--nominal", "table:pol.csv", "--n0", "1",
                 "--out", "c.csv"]) == 0
    with open("e.csv", "w") as fh:
        fh.write("x1,x2,a,l\n0.9,0.2,0,1\n0.3,0.4,1,2\n")
    assert main(["curve", "e.csv", "--policy", "table:pol.csv", "--nominal", "table:pol.csv", "--out", "c.csv"]) == 2
