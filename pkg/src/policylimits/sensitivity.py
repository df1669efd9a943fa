"""Marginal sensitivity model for the past policy.

The true odds of the observed action may differ from the nominal odds by at
most a factor ``gamma``. That constraint bounds the unknown ratio between
target and training densities at every sample by::

    lower = p_target * (1 + (1/p_nominal - 1) / gamma)
    upper = p_target * (1 + (1/p_nominal - 1) * gamma)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Policy

NOMINAL_EPS = 1e-6


@dataclass(frozen=True)
class WeightBounds:
    lower: float
    upper: float

    def __iter__(self):
        yield self.lower
        yield self.upper


def check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma >= 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return gamma


def clip_nominal(p_nominal, eps: float = NOMINAL_EPS):
    """Clip nominal probabilities into ``[eps, 1 - eps]``."""
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    return np.clip(p_nominal, eps, 1.0 - eps)


def weight_bound_arrays(p_target, p_nominal, gamma: float):
    """Vectorized lower/upper bounds on the density ratio.

    ``p_nominal`` must already lie strictly inside ``(0, 1)``; clip it first
    with :func:`clip_nominal` if it comes from a fitted model.
    """
    gamma = check_gamma(gamma)
    p_target = np.asarray(p_target, dtype=float)
    p_nominal = np.asarray(p_nominal, dtype=float)
    if np.any((p_target < 0) | (p_target > 1)):
        raise ValueError("target probabilities must lie in [0, 1]")
    if np.any((p_nominal <= 0) | (p_nominal >= 1)):
        raise ValueError("nominal probabilities must lie in (0, 1)")
    excess_odds = 1.0 / p_nominal - 1.0
    lower = p_target * (1.0 + excess_odds / gamma)
    upper = p_target * (1.0 + excess_odds * gamma)
    return lower, upper


def weight_bounds(p_target: float, p_nominal: float, gamma: float) -> WeightBounds:
    lower, upper = weight_bound_arrays(p_target, p_nominal, gamma)
    return WeightBounds(float(lower), float(upper))


def dataset_weight_arrays(
    dataset: Dataset,
    indices,
    policy: Policy,
    nominal: Policy,
    gamma: float,
    eps: float = NOMINAL_EPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Weight bounds at ``(X_i, A_i)`` for ``i`` in ``indices``, in index order."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        return np.empty(0), np.empty(0)
    X, a = dataset.X[idx], dataset.a[idx]
    p_target = policy.probs_of(X, a)
    p_nominal = clip_nominal(nominal.probs_of(X, a), eps)
    return weight_bound_arrays(p_target, p_nominal, gamma)


def dataset_weight_bounds(dataset, indices, policy, nominal, gamma, eps=NOMINAL_EPS) -> list[WeightBounds]:
    lower, upper = dataset_weight_arrays(dataset, indices, policy, nominal, gamma, eps)
    return [WeightBounds(float(lo), float(up)) for lo, up in zip(lower, upper)]


def odds_divergence(p_true, p_nominal):
    """Symmetric odds ratio ``max(r, 1/r)`` between true and nominal probabilities.

    Equals 1 iff the two probabilities agree. Works elementwise on arrays.
    """
    p_true = np.asarray(p_true, dtype=float)
    p_nominal = np.asarray(p_nominal, dtype=float)
    for p in (p_true, p_nominal):
        if np.any((p <= 0) | (p >= 1)):
            raise ValueError("probabilities must lie strictly inside (0, 1)")
    r = (p_true / (1 - p_true)) / (p_nominal / (1 - p_nominal))
    out = np.maximum(r, 1.0 / r)
    return float(out) if out.ndim == 0 else out
