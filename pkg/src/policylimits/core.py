"""Samples, datasets, target policies and the random sample split.

All randomness in the package flows through :func:`make_rng`, which wraps
numpy's PCG64 bit generator. PCG64 output is stable across platforms and
numpy releases for a given seed, so every seeded result is reproducible.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

PROB_ATOL = 1e-9


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Return a PCG64 generator for ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(master_seed: int, *keys: int) -> np.random.SeedSequence:
    """Child seed for ``(master_seed, *keys)``.

    Uses ``SeedSequence(master_seed, spawn_key=keys)``. The result depends only
    on the arguments, never on call order, so adding runs or streams never
    perturbs existing ones.
    """
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))


def seed_to_int(seq: np.random.SeedSequence) -> int:
    """Collapse a seed sequence into a 64-bit integer seed."""
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class Sample:
    x: tuple[float, ...]
    a: int
    loss: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observational records ``(X_i, A_i, L_i)``.

    Stored column-wise as read-only numpy arrays: ``X`` has shape ``(n, d)``,
    ``a`` holds integer actions in ``[0, action_count)`` and ``loss`` holds
    finite reals.
    """

    X: np.ndarray
    a: np.ndarray
    loss: np.ndarray
    action_count: int = 2

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        if X.ndim == 1:
            X = X[:, None]
        a_raw = np.asarray(self.a)
        loss = np.array(self.loss, dtype=float, copy=True).reshape(-1)
        if X.ndim != 2:
            raise ValueError("covariates must be a 2-d array")
        n = X.shape[0]
        if n == 0:
            raise ValueError("dataset must be nonempty")
        if a_raw.shape != (n,) or loss.shape != (n,):
            raise ValueError(
                f"length mismatch: {n} covariate rows, {a_raw.size} actions, {loss.size} losses"
            )
        if not np.all(np.isfinite(X)):
            raise ValueError("covariates must be finite")
        if not np.all(np.isfinite(loss)):
            raise ValueError("losses must be finite")
        if self.action_count < 2:
            raise ValueError("action_count must be at least 2")
        if not np.all(np.equal(np.mod(a_raw, 1), 0)):
            raise ValueError("actions must be integers")
        a = a_raw.astype(np.int64)
        if a.min() < 0 or a.max() >= self.action_count:
            raise ValueError(f"actions must lie in [0, {self.action_count})")
        for arr in (X, a, loss):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "loss", loss)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], action_count: int = 2) -> "Dataset":
        if not samples:
            raise ValueError("dataset must be nonempty")
        dims = {len(s.x) for s in samples}
        if len(dims) != 1:
            raise ValueError("covariate dimension must be constant")
        X = np.array([s.x for s in samples], dtype=float)
        return cls(X, np.array([s.a for s in samples]), np.array([s.loss for s in samples]), action_count)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def covariate_dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> Sample:
        return Sample(tuple(self.X[i].tolist()), int(self.a[i]), float(self.loss[i]))

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[idx], self.a[idx], self.loss[idx], self.action_count)


# --- policies -----------------------------------------------------------------


class Policy(ABC):
    """A conditional action distribution ``p(a | x)`` over a discrete action set.

    Subclasses implement :meth:`action_probs`, returning an ``(n, action_count)``
    matrix whose rows sum to one. Used both for target policies and for nominal
    models of the past policy.
    """

    action_count: int = 2

    @abstractmethod
    def action_probs(self, X: np.ndarray) -> np.ndarray:
        ...

    def prob(self, a: int, x) -> float:
        """Probability of action ``a`` at the single covariate vector ``x``."""
        if not 0 <= a < self.action_count:
            raise ValueError(f"action {a} outside [0, {self.action_count})")
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return float(self.action_probs(x)[0, a])

    def probs_of(self, X: np.ndarray, a: np.ndarray) -> np.ndarray:
        """``p(a_i | x_i)`` for each row."""
        P = self.action_probs(np.atleast_2d(np.asarray(X, dtype=float)))
        return P[np.arange(P.shape[0]), np.asarray(a, dtype=np.int64)]


TargetPolicy = Policy


def policy_prob(policy: Policy, a: int, x) -> float:
    return policy.prob(a, x)


def check_normalized(P: np.ndarray, atol: float = PROB_ATOL) -> None:
    if np.any(P < -atol) or np.any(P > 1 + atol):
        raise ValueError("action probabilities must lie in [0, 1]")
    if not np.allclose(P.sum(axis=1), 1.0, rtol=0, atol=atol):
        raise ValueError("action probabilities must sum to 1")


@dataclass(frozen=True)
class ConstantActionPolicy(Policy):
    """Always take ``action``. ``action=0`` is 'treat none', ``action=1`` 'treat all'."""

    action: int
    action_count: int = 2

    def __post_init__(self):
        if not 0 <= self.action < self.action_count:
            raise ValueError("action outside the action set")

    def action_probs(self, X):
        P = np.zeros((np.shape(X)[0], self.action_count))
        P[:, self.action] = 1.0
        return P


def treat_all() -> ConstantActionPolicy:
    return ConstantActionPolicy(1)


def treat_none() -> ConstantActionPolicy:
    return ConstantActionPolicy(0)


@dataclass(frozen=True)
class ThresholdPolicy(Policy):
    """Binary policy that withholds treatment iff ``x1 * x2 >= tau``.

    ``tau = 0`` never treats (on nonnegative covariates) and ``tau = 1`` treats
    everyone with ``x1 * x2 < 1``.
    """

    tau: float
    action_count: int = field(default=2, init=False)

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")

    def action_probs(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        p0 = (X[:, 0] * X[:, 1] >= self.tau).astype(float)
        return np.column_stack([p0, 1.0 - p0])


class FunctionPolicy(Policy):
    """Policy backed by a vectorized callable ``X -> (n, action_count)``."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], action_count: int = 2, check: bool = True):
        self.fn = fn
        self.action_count = action_count
        self.check = check

    def action_probs(self, X):
        P = np.asarray(self.fn(np.atleast_2d(np.asarray(X, dtype=float))), dtype=float)
        if self.check:
            check_normalized(P)
        return P


class BinaryPolicy(Policy):
    """Binary policy from a vectorized callable returning ``p(a=1 | x)``."""

    action_count = 2

    def __init__(self, p1: Callable[[np.ndarray], np.ndarray]):
        self.p1 = p1

    def action_probs(self, X):
        p1 = np.asarray(self.p1(np.atleast_2d(np.asarray(X, dtype=float))), dtype=float).reshape(-1)
        return np.column_stack([1.0 - p1, p1])


class TablePolicy(Policy):
    """Lookup table from covariate rows to action probabilities.

    Rows are matched on exact covariate values; querying an unseen row raises
    ``KeyError``.
    """

    def __init__(self, table: Mapping[tuple, Sequence[float]], action_count: int | None = None):
        rows = {tuple(float(v) for v in k): np.asarray(p, dtype=float) for k, p in table.items()}
        if not rows:
            raise ValueError("empty policy table")
        widths = {p.size for p in rows.values()}
        if len(widths) != 1:
            raise ValueError("table rows must list the same number of actions")
        self.action_count = action_count or widths.pop()
        check_normalized(np.vstack(list(rows.values())))
        self._rows = rows

    @classmethod
    def from_arrays(cls, X: np.ndarray, P: np.ndarray) -> "TablePolicy":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        P = np.atleast_2d(np.asarray(P, dtype=float))
        return cls({tuple(x): p for x, p in zip(X.tolist(), P)}, P.shape[1])

    def action_probs(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        try:
            return np.vstack([self._rows[tuple(x)] for x in X.tolist()])
        except KeyError as exc:
            raise KeyError(f"covariate row {exc.args[0]} not in policy table") from None


# --- sample split -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Split:
    """Disjoint index sets ``d0`` (weight bound) and ``d1`` (cdf proxy)."""

    d0_indices: np.ndarray
    d1_indices: np.ndarray
    n0: int
    seed: int

    @property
    def n(self) -> int:
        return self.d0_indices.size + self.d1_indices.size


def default_n0(n: int) -> int:
    """Equal-size split, ``ceil(n / 2)`` capped so that ``d1`` is nonempty."""
    return min(max(math.ceil(n / 2), 1), n - 1)


def split_indices(n: int, n0: int, seed: int) -> Split:
    if n < 2:
        raise ValueError("need at least two samples to split")
    if not 1 <= n0 <= n - 1:
        raise ValueError(f"n0 must lie in [1, {n - 1}], got {n0}")
    perm = make_rng(seed).permutation(n)
    d0 = np.sort(perm[:n0])
    d1 = np.sort(perm[n0:])
    d0.setflags(write=False)
    d1.setflags(write=False)
    return Split(d0, d1, int(n0), int(seed))


def split_dataset(dataset: Dataset, n0: int | None = None, seed: int = 0) -> Split:
    """Uniformly random ``n0``-subset of indices for ``d0``; the rest form ``d1``.

    The split depends only on ``(len(dataset), n0, seed)``.
    """
    n = len(dataset)
    return split_indices(n, default_n0(n) if n0 is None else n0, seed)
