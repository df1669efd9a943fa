"""Finite-sample limit curves on the out-of-sample loss of a target policy.

The data are split into ``d0`` and ``d1``. On ``d1`` the lower and upper weight
bounds define a self-normalized step function (the cdf proxy) that stands in
for the unknown target cdf; on ``d0`` an order statistic of the upper weights
bounds the unknown weight of a future sample with confidence ``1 - beta``.
The limit at miscoverage ``alpha`` is the smallest proxy quantile over all
``0 < beta < alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .core import Dataset, Policy, Split, split_dataset
from .sensitivity import NOMINAL_EPS, check_gamma, dataset_weight_arrays

INF = math.inf

# guards ceil() against products such as (n0 + 1) * (1 - beta_k) landing one ulp above k
_CEIL_GUARD = 1e-9
# cap on the size of the (loss, breakpoint) proxy block evaluated at once
_BLOCK_ELEMENTS = 1 << 22


def default_alphas(step: float = 0.01) -> np.ndarray:
    """The grid ``{step, 2*step, ..., 1 - step}``; 99 points by default."""
    m = int(round(1.0 / step))
    return np.arange(1, m) / m


@dataclass(frozen=True, eq=False)
class LimitInputs:
    """Everything the limit depends on: ``d1`` losses with weight bounds and the
    sorted upper weights over ``d0``."""

    d1_losses: np.ndarray
    d1_lower_weights: np.ndarray
    d1_upper_weights: np.ndarray
    d0_upper_weights_sorted: np.ndarray

    def __post_init__(self):
        losses = np.asarray(self.d1_losses, dtype=float).reshape(-1)
        lower = np.asarray(self.d1_lower_weights, dtype=float).reshape(-1)
        upper = np.asarray(self.d1_upper_weights, dtype=float).reshape(-1)
        d0 = np.asarray(self.d0_upper_weights_sorted, dtype=float).reshape(-1)
        if not (losses.size == lower.size == upper.size):
            raise ValueError("d1 arrays must have equal length")
        if losses.size == 0:
            raise ValueError("d1 must be nonempty")
        if not np.all(np.isfinite(losses)):
            raise ValueError("losses must be finite")
        if np.any(lower < 0) or np.any(upper < lower) or np.any(d0 < 0):
            raise ValueError("weights must satisfy 0 <= lower <= upper")
        if np.any(np.diff(d0) < 0):
            raise ValueError("d0 upper weights must be sorted ascending")
        for name, arr in (("d1_losses", losses), ("d1_lower_weights", lower),
                          ("d1_upper_weights", upper), ("d0_upper_weights_sorted", d0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_arrays(cls, d1_losses, d1_lower, d1_upper, d0_upper) -> "LimitInputs":
        """Like the constructor but sorts the ``d0`` weights."""
        return cls(d1_losses, d1_lower, d1_upper, np.sort(np.asarray(d0_upper, dtype=float)))

    @property
    def n0(self) -> int:
        return self.d0_upper_weights_sorted.size

    @cached_property
    def _steps(self):
        # distinct losses, lower mass at or below each, upper mass strictly above
        grid, inverse = np.unique(self.d1_losses, return_inverse=True)
        lower_by = np.bincount(inverse, weights=self.d1_lower_weights, minlength=grid.size)
        upper_by = np.bincount(inverse, weights=self.d1_upper_weights, minlength=grid.size)
        below = np.cumsum(lower_by)
        above = np.concatenate([np.cumsum(upper_by[::-1])[::-1][1:], [0.0]])
        return grid, below, above

    @property
    def loss_grid(self) -> np.ndarray:
        return self._steps[0]


def _check_w(w: float) -> None:
    if not (w > 0):
        raise ValueError(f"w must be positive or +inf, got {w}")


def cdf_proxy(inputs: LimitInputs, w: float, ell: float) -> float:
    """Weighted step function of ``ell`` standing in for the target cdf.

    ``sum(lower * [L <= ell]) / (sum(lower * [L <= ell]) + sum(upper * [L > ell]) + w)``
    over ``d1``; zero when ``w`` is infinite.
    """
    _check_w(w)
    if math.isinf(w):
        return 0.0
    grid, below, above = inputs._steps
    j = int(np.searchsorted(grid, ell, side="right")) - 1
    if j < 0:
        return 0.0
    return float(below[j] / (below[j] + above[j] + w))


def _order_index(n0: int, beta: float) -> int:
    return max(1, math.ceil((n0 + 1) * (1.0 - beta) - _CEIL_GUARD))


def weight_quantile_bound(d0_upper_weights_sorted, beta: float) -> float:
    """The ``ceil((n0 + 1)(1 - beta))``-th smallest ``d0`` upper weight, or +inf
    when that rank exceeds ``n0``."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    w = np.asarray(d0_upper_weights_sorted, dtype=float)
    k = _order_index(w.size, beta)
    return INF if k > w.size else float(w[k - 1])


def _first_hits(below, above, w: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Per column, first row whose proxy reaches the threshold (``-1`` if none)."""
    # zero total mass gives 0/0; nan never reaches a threshold, same as a zero proxy
    with np.errstate(invalid="ignore"):
        proxy = below[:, None] / (below[:, None] + above[:, None] + w[None, :])
    hits = proxy >= thresholds[None, :]
    first = hits.argmax(axis=0)
    first[~hits.any(axis=0)] = -1
    return first


def quantile_at(inputs: LimitInputs, alpha: float, beta: float) -> float:
    """Smallest ``d1`` loss at which the proxy, with ``w`` the ``beta``-level
    ``d0`` weight bound, reaches ``(1 - alpha) / (1 - beta)``."""
    if not 0.0 < beta < alpha < 1.0:
        raise ValueError(f"need 0 < beta < alpha < 1, got alpha={alpha}, beta={beta}")
    w = weight_quantile_bound(inputs.d0_upper_weights_sorted, beta)
    if math.isinf(w):
        return INF
    grid, below, above = inputs._steps
    first = _first_hits(below, above, np.array([w]), np.array([(1.0 - alpha) / (1.0 - beta)]))[0]
    return INF if first < 0 else float(grid[first])


def breakpoints(n0: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Ranks ``k`` and levels ``beta_k = 1 - k / (n0 + 1)`` with ``0 < beta_k < alpha``.

    The ``d0`` weight bound is constant on ``[beta_k, beta_{k-1})`` while the
    proxy threshold grows with ``beta``, so the left endpoints are the only
    candidates for the minimizing ``beta``.
    """
    k = np.arange(1, n0 + 1)
    beta = 1.0 - k / (n0 + 1)
    keep = (beta > 0) & (beta < alpha)
    return k[keep], beta[keep]


def limit(inputs: LimitInputs, alpha: float) -> float:
    """``min`` over ``0 < beta < alpha`` of :func:`quantile_at`, computed exactly."""
    return float(limit_values(inputs, [alpha])[0])


def limit_values(inputs: LimitInputs, alphas: Sequence[float]) -> np.ndarray:
    """Vectorized :func:`limit` over a sequence of miscoverage levels."""
    alphas = np.asarray(alphas, dtype=float).reshape(-1)
    if np.any((alphas <= 0) | (alphas >= 1)):
        raise ValueError("alpha must lie in (0, 1)")
    grid, below, above = inputs._steps
    d0 = inputs.d0_upper_weights_sorted
    out = np.full(alphas.size, INF)
    block = max(1, _BLOCK_ELEMENTS // grid.size)
    for i, alpha in enumerate(alphas):
        ks, betas = breakpoints(d0.size, alpha)
        best = grid.size
        for s in range(0, ks.size, block):
            kb, bb = ks[s:s + block], betas[s:s + block]
            first = _first_hits(below, above, d0[kb - 1], (1.0 - alpha) / (1.0 - bb))
            first = first[first >= 0]
            if first.size:
                best = min(best, int(first.min()))
        if best < grid.size:
            out[i] = grid[best]
    return out


@dataclass(frozen=True, eq=False)
class LimitCurve:
    """Pairs ``(alpha, ell)`` with provenance. ``ell`` may be +inf."""

    alphas: np.ndarray
    ells: np.ndarray
    gamma: float = 1.0
    n: int = 0
    n0: int = 0
    split_seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.alphas.tolist(), self.ells.tolist()))

    def __len__(self):
        return self.alphas.size


def limit_inputs(dataset: Dataset, policy: Policy, nominal: Policy, gamma: float,
                 split: Split, eps: float = NOMINAL_EPS) -> LimitInputs:
    lo1, up1 = dataset_weight_arrays(dataset, split.d1_indices, policy, nominal, gamma, eps)
    _, up0 = dataset_weight_arrays(dataset, split.d0_indices, policy, nominal, gamma, eps)
    return LimitInputs(dataset.loss[split.d1_indices], lo1, up1, np.sort(up0))


def limit_curve(dataset: Dataset, policy: Policy, nominal: Policy, gamma: float,
                alphas: Sequence[float] | None = None, split: Split | None = None,
                eps: float = NOMINAL_EPS) -> LimitCurve:
    """Limit curve of ``policy`` from observational ``dataset``.

    Parameters
    ----------
    dataset : Dataset
        Observational samples collected under the past policy.
    policy : Policy
        Target policy being certified.
    nominal : Policy
        Nominal model of the past policy.
    gamma : float
        Odds divergence bound (>= 1) between the true and nominal past policy.
    alphas : sequence of float, optional
        Strictly increasing miscoverage levels in (0, 1). Defaults to
        :func:`default_alphas`.
    split : Split, optional
        Sample split; defaults to an equal split with seed 0.
    eps : float
        Clipping applied to nominal probabilities.

    Returns
    -------
    LimitCurve
        ``ell`` is nonincreasing in ``alpha``; infinite entries are non-informative.
    """
    gamma = check_gamma(gamma)
    alphas = default_alphas() if alphas is None else np.asarray(alphas, dtype=float).reshape(-1)
    if np.any(np.diff(alphas) <= 0):
        raise ValueError("alphas must be strictly increasing")
    if split is None:
        split = split_dataset(dataset)
    if split.n != len(dataset):
        raise ValueError("split does not match dataset size")
    inputs = limit_inputs(dataset, policy, nominal, gamma, split, eps)
    ells = limit_values(inputs, alphas)
    alphas = alphas.copy()
    alphas.setflags(write=False)
    ells.setflags(write=False)
    return LimitCurve(alphas, ells, gamma, len(dataset), split.n0, split.seed)


def informativeness(curve: LimitCurve, l_max: float = INF) -> float:
    """``1 - alpha*`` with ``alpha*`` the smallest grid level whose limit is below
    ``l_max``; 0 when no level qualifies."""
    informative = np.asarray(curve.ells) < l_max
    if not informative.any():
        return 0.0
    return float(1.0 - np.asarray(curve.alphas)[informative].min())
