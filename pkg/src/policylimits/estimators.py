"""Benchmark point estimators of the target policy's mean loss and loss cdf.

Outcome models are plain vectorized callables supplied by the caller:

* mean model ``model(a, X) -> (n,)`` estimating ``E[L | A=a, X]``
* cdf model ``cmodel(ell, a, X) -> (n,)`` estimating ``P(L <= ell | A=a, X)``

where ``a`` is an integer array aligned with the rows of ``X``.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .core import Dataset, Policy
from .sensitivity import NOMINAL_EPS, clip_nominal

OutcomeMeanModel = Callable[[np.ndarray, np.ndarray], np.ndarray]
OutcomeCdfModel = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def nominal_weights(dataset: Dataset, policy: Policy, nominal: Policy, eps: float = NOMINAL_EPS) -> np.ndarray:
    """``p_target(A_i | X_i) / p_nominal(A_i | X_i)`` with clipped nominal."""
    p_target = policy.probs_of(dataset.X, dataset.a)
    p_nominal = clip_nominal(nominal.probs_of(dataset.X, dataset.a), eps)
    return p_target / p_nominal


def _policy_average(dataset: Dataset, policy: Policy, per_action: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    # sum_a p(a | X_i) * per_action(a)_i
    P = policy.action_probs(dataset.X)
    total = np.zeros(len(dataset))
    for a in range(P.shape[1]):
        total += P[:, a] * per_action(np.full(len(dataset), a, dtype=np.int64))
    return total


def ipw_mean(dataset: Dataset, policy: Policy, nominal: Policy, eps: float = NOMINAL_EPS) -> float:
    return float(np.mean(nominal_weights(dataset, policy, nominal, eps) * dataset.loss))


def rm_mean(dataset: Dataset, policy: Policy, model: OutcomeMeanModel) -> float:
    return float(np.mean(_policy_average(dataset, policy, lambda a: model(a, dataset.X))))


def dr_mean(dataset: Dataset, policy: Policy, nominal: Policy, model: OutcomeMeanModel,
            eps: float = NOMINAL_EPS) -> float:
    w = nominal_weights(dataset, policy, nominal, eps)
    residual = dataset.loss - np.asarray(model(dataset.a, dataset.X), dtype=float)
    direct = _policy_average(dataset, policy, lambda a: model(a, dataset.X))
    return float(np.mean(w * residual + direct))


class WeightedStepCdf:
    """``ell -> (1/n) * sum_i w_i [L_i <= ell]``; accepts scalars or arrays."""

    def __init__(self, losses: np.ndarray, weights: np.ndarray):
        order = np.argsort(losses, kind="stable")
        self.losses = np.asarray(losses, dtype=float)[order]
        self._cum = np.concatenate([[0.0], np.cumsum(np.asarray(weights, dtype=float)[order])])
        self.n = self.losses.size

    def __call__(self, ell):
        j = np.searchsorted(self.losses, ell, side="right")
        out = self._cum[j] / self.n
        return float(out) if np.ndim(out) == 0 else out


class ModelCdf:
    def __init__(self, fn: Callable[[float], float]):
        self._fn = fn

    def __call__(self, ell):
        if np.ndim(ell) == 0:
            return float(self._fn(float(ell)))
        return np.array([self._fn(float(v)) for v in np.asarray(ell).ravel()]).reshape(np.shape(ell))


def ipw_cdf(dataset: Dataset, policy: Policy, nominal: Policy, eps: float = NOMINAL_EPS) -> WeightedStepCdf:
    """Inverse propensity weighted cdf. Not normalized: may exceed 1 at the top."""
    return WeightedStepCdf(dataset.loss, nominal_weights(dataset, policy, nominal, eps))


def rm_cdf(dataset: Dataset, policy: Policy, cmodel: OutcomeCdfModel) -> ModelCdf:
    def F(ell):
        return np.mean(_policy_average(dataset, policy, lambda a: cmodel(ell, a, dataset.X)))
    return ModelCdf(F)


def dr_cdf(dataset: Dataset, policy: Policy, nominal: Policy, cmodel: OutcomeCdfModel,
           eps: float = NOMINAL_EPS) -> ModelCdf:
    """Doubly robust cdf. Left unclipped, so values outside ``[0, 1]`` are possible."""
    w = nominal_weights(dataset, policy, nominal, eps)

    def F(ell):
        residual = (dataset.loss <= ell) - np.asarray(cmodel(ell, dataset.a, dataset.X), dtype=float)
        direct = _policy_average(dataset, policy, lambda a: cmodel(ell, a, dataset.X))
        return np.mean(w * residual + direct)
    return ModelCdf(F)


def cdf_quantile(est: Callable, alpha: float, loss_grid) -> float:
    """Smallest grid loss where ``est`` reaches ``1 - alpha``; +inf if none does."""
    grid = np.asarray(loss_grid, dtype=float)
    if grid.size == 0:
        return math.inf
    values = np.asarray(est(grid), dtype=float).reshape(-1)
    hits = np.flatnonzero(values >= 1.0 - alpha)
    return float(grid[hits[0]]) if hits.size else math.inf


def ipw_quantile_curve(dataset: Dataset, policy: Policy, nominal: Policy, alphas,
                       eps: float = NOMINAL_EPS) -> np.ndarray:
    """Benchmark: quantiles of :func:`ipw_cdf` at each alpha, over the observed losses."""
    est = ipw_cdf(dataset, policy, nominal, eps)
    grid = np.unique(dataset.loss)
    values = est(grid)
    out = np.full(len(alphas), math.inf)
    for i, alpha in enumerate(np.asarray(alphas, dtype=float)):
        hits = np.flatnonzero(values >= 1.0 - alpha)
        if hits.size:
            out[i] = grid[hits[0]]
    return out
