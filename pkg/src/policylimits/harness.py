"""Monte Carlo coverage studies for limit curves and the IPW benchmark.

Each run draws a training set, computes a limit curve per ``gamma`` (or the
IPW quantile curve), then draws fresh samples from the target distribution
and counts how often the new loss stays at or below the limit. Counts are
pooled over runs and draws.

Seeding: run ``r`` uses ``derive_seed(master_seed, r, stream)`` with stream 0
for training data, 1 for target draws and 2 for the sample split, so runs are
independent of execution order and of how many other runs exist.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import synthdata as sd
from .core import (
    BinaryPolicy, Dataset, Policy, default_n0, derive_seed, make_rng, seed_to_int, split_dataset,
    treat_all,
)
from .estimators import ipw_quantile_curve
from .limits import INF, LimitCurve, informativeness, limit_curve
from .propensity import fit_logistic

PROPOSED = "proposed"
BENCHMARK = "benchmark_ipw"
METHODS = (PROPOSED, BENCHMARK)


def default_coverage_alphas() -> np.ndarray:
    return np.round(np.arange(1, 20) * 0.05, 2)


@dataclass(frozen=True)
class RunDraw:
    """One training draw: the observed data, a nominal model fitted or given
    for it, and a sampler of fresh target-policy losses."""

    dataset: Dataset
    nominal: Policy
    sample_target: Callable[[np.random.Generator, int], np.ndarray]
    n0: int | None = None


class Scenario(ABC):
    policy: Policy
    l_max: float = INF

    @abstractmethod
    def draw_run(self, rng: np.random.Generator) -> RunDraw:
        ...


@dataclass
class SyntheticScenario(Scenario):
    """The two-covariate designs with a chosen target policy.

    ``kind`` is ``"unconfounded"`` or ``"confounded"``. For the confounded
    design the threshold function is resolved once, at construction.
    """

    policy: Policy
    kind: str = "unconfounded"
    c: float = 1.0
    n: int = 250
    gamma0: float = 2.0
    loss_var: float = 0.1
    threshold: sd.ThresholdFunction | None = None
    design_seed: int = 0
    pilot_n: int = 100_000
    favour_treatment_below: bool = True
    n0: int | None = None

    def __post_init__(self):
        if self.kind not in ("unconfounded", "confounded"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        self.nominal = sd.SigmoidPastPolicy(self.c)
        if self.kind == "confounded" and self.threshold is None:
            self.threshold = sd.design_threshold(
                self.c, self.gamma0, self.pilot_n, self.design_seed,
                favour_treatment_below=self.favour_treatment_below)

    def draw_run(self, rng):
        if self.kind == "unconfounded":
            data = sd.gen_unconfounded(sd.UnconfoundedConfig(self.c, self.n, 0, self.loss_var), rng=rng)
        else:
            cfg = sd.ConfoundedConfig(self.gamma0, self.c, self.n, 0,
                                      favour_treatment_below=self.favour_treatment_below)
            data = sd.gen_confounded(cfg, t=self.threshold, rng=rng)
        confounded = self.kind == "confounded"

        def sample_target(rng_t, m):
            return sd.draw_target_losses(rng_t, m, self.policy, confounded, self.loss_var)
        return RunDraw(data.dataset, self.nominal, sample_target, self.n0)


@dataclass
class IhdpScenario(Scenario):
    """Response surface A on a fixed covariate/action table.

    Per run: draw ``phi`` and the outcome noise, hold out ``test_frac`` of the
    rows for evaluation, fit a logistic nominal model on the rest and use
    ``n0_frac`` of the full table for ``d0``. Target losses are drawn at
    held-out rows with actions from the target policy.
    """

    covariates: sd.IhdpCovariates
    policy: Policy
    surface: sd.IhdpSurfaceConfig = field(default_factory=sd.IhdpSurfaceConfig)
    n0_frac: float = 0.1
    test_frac: float = 0.1
    ridge: float = 1e-6

    def draw_run(self, rng):
        X, a = self.covariates.X, self.covariates.a
        n = X.shape[0]
        phi = sd.draw_phi(X.shape[1], self.surface, rng)
        perm = rng.permutation(n)
        n_test = max(1, int(round(self.test_frac * n)))
        test, train = perm[:n_test], np.sort(perm[n_test:])
        loss = sd.ihdp_surface_a(X[train], a[train], self.surface, phi=phi, rng=rng)
        dataset = Dataset(X[train], a[train], loss)
        nominal = fit_logistic(dataset.X, dataset.a, ridge=self.ridge)
        X_test = X[test]

        def sample_target(rng_t, m):
            rows = X_test[rng_t.integers(0, X_test.shape[0], size=m)]
            P = self.policy.action_probs(rows)
            acts = (rng_t.uniform(size=m) >= P[:, 0]).astype(np.int64)
            mean = sd.ihdp_mean(rows, acts, phi, self.surface.treatment_offset)
            return mean + self.surface.noise_sd * rng_t.standard_normal(m)
        n0 = min(max(1, int(round(self.n0_frac * n))), len(dataset) - 1)
        return RunDraw(dataset, nominal, sample_target, n0)


@dataclass
class ConstantLossScenario(Scenario):
    """Degenerate scenario with every loss equal to ``value``."""

    policy: Policy = field(default_factory=treat_all)
    n: int = 50
    value: float = 0.0

    def draw_run(self, rng):
        X = rng.uniform(size=(self.n, 2))
        a = (rng.uniform(size=self.n) < 0.5).astype(np.int64)
        nominal = BinaryPolicy(_half)
        return RunDraw(Dataset(X, a, np.full(self.n, self.value)), nominal,
                       lambda rng_t, m: np.full(m, self.value))


def _half(X):
    return np.full(X.shape[0], 0.5)


@dataclass(frozen=True)
class CoverageConfig:
    runs: int = 1000
    test_draws_per_run: int = 1000
    alpha_grid: tuple = tuple(default_coverage_alphas())
    gamma_grid: tuple = (1.0,)
    method: str = PROPOSED
    master_seed: int = 0
    n0: int | None = None
    l_max: float | None = None
    workers: int = 1
    keep_curves: bool = False

    def __post_init__(self):
        if self.runs < 1 or self.test_draws_per_run < 1:
            raise ValueError("runs and test_draws_per_run must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        alphas = np.asarray(self.alpha_grid, dtype=float)
        if np.any((alphas <= 0) | (alphas >= 1)) or np.any(np.diff(alphas) <= 0):
            raise ValueError("alpha_grid must be strictly increasing in (0, 1)")
        if any(g < 1 for g in self.gamma_grid):
            raise ValueError("gammas must be >= 1")


@dataclass(frozen=True, eq=False)
class CoverageReport:
    """Pooled coverage per ``(gamma, alpha)``.

    ``covered[g, j]`` counts target draws with ``L <= ell_alpha`` over all
    runs. The benchmark has a single row with ``gamma = nan``.
    """

    method: str
    gammas: np.ndarray
    alphas: np.ndarray
    covered: np.ndarray
    runs: int
    draws_per_run: int
    informativeness_mean: np.ndarray
    curves: np.ndarray | None = None

    @property
    def total(self) -> int:
        return self.runs * self.draws_per_run

    @property
    def coverage(self) -> np.ndarray:
        return self.covered / self.total

    @property
    def gap(self) -> np.ndarray:
        return self.alphas[None, :] - (1.0 - self.coverage)

    @property
    def stderr(self) -> np.ndarray:
        p = self.coverage
        return np.sqrt(p * (1 - p) / self.total)

    def rows(self) -> list[dict]:
        out = []
        cov, gap, se = self.coverage, self.gap, self.stderr
        for g, gamma in enumerate(self.gammas):
            for j, alpha in enumerate(self.alphas):
                out.append({"method": self.method, "gamma": float(gamma), "alpha": float(alpha),
                            "coverage": float(cov[g, j]), "gap": float(gap[g, j]),
                            "stderr": float(se[g, j])})
        return out


def _one_run(scenario: Scenario, config: CoverageConfig, methods: Sequence[str], run: int):
    alphas = np.asarray(config.alpha_grid, dtype=float)
    draw = scenario.draw_run(make_rng(derive_seed(config.master_seed, run, 0)))
    target = draw.sample_target(make_rng(derive_seed(config.master_seed, run, 1)),
                                config.test_draws_per_run)
    l_max = scenario.l_max if config.l_max is None else config.l_max
    results = {}
    for method in methods:
        if method == PROPOSED:
            n0 = config.n0 if config.n0 is not None else (draw.n0 or default_n0(len(draw.dataset)))
            split = split_dataset(draw.dataset, n0, seed_to_int(derive_seed(config.master_seed, run, 2)))
            ells = np.vstack([
                limit_curve(draw.dataset, scenario.policy, draw.nominal, g, alphas, split).ells
                for g in config.gamma_grid])
        else:
            ells = ipw_quantile_curve(draw.dataset, scenario.policy, draw.nominal, alphas)[None, :]
        covered = (target[:, None, None] <= ells[None, :, :]).sum(axis=0).astype(np.int64)
        info = np.array([informativeness(LimitCurve(alphas, e), l_max) for e in ells])
        results[method] = (covered, ells, info)
    return results


def _run_all(scenario: Scenario, config: CoverageConfig, methods: Sequence[str]) -> dict[str, CoverageReport]:
    runs = range(config.runs)
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            per_run = list(pool.map(_one_run, [scenario] * config.runs, [config] * config.runs,
                                    [tuple(methods)] * config.runs, runs, chunksize=8))
    else:
        per_run = [_one_run(scenario, config, methods, r) for r in runs]
    reports = {}
    alphas = np.asarray(config.alpha_grid, dtype=float)
    for method in methods:
        covered = sum(r[method][0] for r in per_run)
        info = np.mean([r[method][2] for r in per_run], axis=0)
        gammas = np.asarray(config.gamma_grid, dtype=float) if method == PROPOSED else np.array([math.nan])
        curves = np.stack([r[method][1] for r in per_run]) if config.keep_curves else None
        reports[method] = CoverageReport(method, gammas, alphas, covered, config.runs,
                                         config.test_draws_per_run, info, curves)
    return reports


def run_coverage(scenario: Scenario, config: CoverageConfig) -> CoverageReport:
    """Pooled Monte Carlo coverage of ``config.method`` on ``scenario``."""
    return _run_all(scenario, config, [config.method])[config.method]


def compare_methods(scenario: Scenario, config: CoverageConfig) -> tuple[CoverageReport, CoverageReport]:
    """Proposed limit and IPW benchmark evaluated on identical training and target draws."""
    reports = _run_all(scenario, config, METHODS)
    return reports[PROPOSED], reports[BENCHMARK]
