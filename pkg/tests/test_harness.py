import math

import numpy as np
import pytest

from policylimits import CoverageConfig, ThresholdPolicy, compare_methods, run_coverage, treat_all
from policylimits import harness as h
from policylimits import synthdata as sd

ALPHAS = (0.1, 0.3, 0.5, 0.7, 0.9)


def small(method=h.PROPOSED, **kw):
    base = dict(runs=6, test_draws_per_run=50, alpha_grid=ALPHAS, gamma_grid=(1.0, 2.0), method=method,
                master_seed=3)
    base.update(kw)
    return CoverageConfig(**base)


def test_constant_loss_scenario():
    scenario = h.ConstantLossScenario()
    prop, bench = compare_methods(scenario, small())
    assert np.all(prop.coverage == 1.0) and np.all(bench.coverage == 1.0)
    assert np.allclose(prop.gap, np.array(ALPHAS)[None, :])
    assert np.all(prop.stderr == 0)


def test_report_shapes_and_rows():
    scenario = h.SyntheticScenario(ThresholdPolicy(0.5), n=60)
    prop, bench = compare_methods(scenario, small())
    assert prop.covered.shape == (2, 5) and bench.covered.shape == (1, 5)
    assert math.isnan(bench.gammas[0])
    rows = prop.rows()
    assert len(rows) == 10 and rows[0]["method"] == "proposed"
    assert prop.total == 300
    assert np.allclose(prop.gap, np.array(ALPHAS) - (1 - prop.coverage))
    # limits grow with gamma on identical draws
    assert np.all(prop.covered[1] >= prop.covered[0])


def test_methods_share_draws():
    scenario = h.SyntheticScenario(ThresholdPolicy(0.5), n=60)
    prop, bench = compare_methods(scenario, small())
    assert np.array_equal(run_coverage(scenario, small()).covered, prop.covered)
    assert np.array_equal(run_coverage(scenario, small(h.BENCHMARK)).covered, bench.covered)


def test_deterministic_across_workers():
    scenario = h.SyntheticScenario(treat_all(), "confounded", c=0.5, n=60,
                                   threshold=sd.ThresholdFunction(0.35))
    one = compare_methods(scenario, small(workers=1, keep_curves=True))
    two = compare_methods(scenario, small(workers=2, keep_curves=True))
    for a, b in zip(one, two):
        assert np.array_equal(a.covered, b.covered)
        assert np.array_equal(a.curves, b.curves)


def test_runs_independent_of_run_count():
    scenario = h.SyntheticScenario(ThresholdPolicy(0.5), n=60)
    cfg = small(keep_curves=True)
    few = run_coverage(scenario, cfg)
    more = run_coverage(scenario, small(runs=9, keep_curves=True))
    assert np.array_equal(few.curves, more.curves[:6])


def test_seed_changes_result():
    scenario = h.SyntheticScenario(ThresholdPolicy(0.5), n=60)
    a = run_coverage(scenario, small(keep_curves=True))
    b = run_coverage(scenario, small(master_seed=4, keep_curves=True))
    assert not np.array_equal(a.curves, b.curves)


def test_ihdp_scenario_runs():
    cov = sd.ihdp_standin(200, 10, seed=1)
    rep = run_coverage(h.IhdpScenario(cov, treat_all()), small(runs=3))
    assert rep.coverage.shape == (2, 5) and np.all((rep.coverage >= 0) & (rep.coverage <= 1))


@pytest.mark.parametrize("kw", [dict(runs=0), dict(method="x"), dict(alpha_grid=(0.5, 0.2)),
                                dict(alpha_grid=(0.0, 0.5)), dict(gamma_grid=(0.5,))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        small(**kw)


def test_unknown_kind():
    with pytest.raises(ValueError):
        h.SyntheticScenario(treat_all(), "other")
