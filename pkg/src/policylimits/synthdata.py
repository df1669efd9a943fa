"""Synthetic data-generating processes.

Two covariates ``X ~ U(0, 1)^2`` and binary actions (0 = do not treat,
1 = treat). The nominal past policy is

    p(A=0 | X) = sigmoid(c * (x1 * x2 + 1)),    c in [1/2, 2].

Unconfounded design: losses ``N(1 - x1 x2, v)`` for A=0 and ``N(x1 x2, v)``
for A=1, where ``v`` is a *variance* (0.1 by default).

Confounded design: an unobserved ``U | X ~ N(0, 0.1 (x1 + x2))`` (variance
again) shifts the loss, ``L = 1 - x1 x2 + U`` or ``L = x1 x2 + U``, and the
true past policy moves the nominal odds of A=0 by exactly ``gamma0`` up or
down depending on which side of a threshold ``t(X)`` the confounder falls::

    p(A=0 | X, U) = 1 / (1 + gamma0      * (1/p_nominal - 1))    U <= t(X)
                    1 / (1 + gamma0 ** -1 * (1/p_nominal - 1))    U >  t(X)

so the true-to-nominal odds ratio is exactly ``gamma0 ** (+-1)``. By default
low-``U`` units (low loss) are pushed towards treatment, which flatters the
treated arm; ``favour_treatment_below=False`` swaps the two branches. ``t(X)``
is a conditional quantile of ``U | X`` whose level is chosen on a pilot
simulation to make the median observed loss of treated units smallest.

Also provides the semi-synthetic "response surface A" outcome model for
IHDP-style covariates together with a small synthetic stand-in for the
covariate table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from .core import Dataset, Policy, ThresholdPolicy, make_rng
from .sensitivity import check_gamma

QUANTILE_GRID = np.round(np.arange(1, 20) * 0.05, 2)


def threshold_target_policy(tau: float) -> ThresholdPolicy:
    return ThresholdPolicy(tau)


def nominal_p0(X: np.ndarray, c: float) -> np.ndarray:
    """Nominal probability of *not* treating, ``sigmoid(c (x1 x2 + 1))``."""
    X = np.atleast_2d(X)
    return expit(c * (X[:, 0] * X[:, 1] + 1.0))


class SigmoidPastPolicy(Policy):
    """The nominal past policy as a :class:`~policylimits.core.Policy`."""

    action_count = 2

    def __init__(self, c: float):
        _check_c(c)
        self.c = float(c)

    def action_probs(self, X):
        p0 = nominal_p0(np.atleast_2d(np.asarray(X, dtype=float)), self.c)
        return np.column_stack([p0, 1.0 - p0])

    def __repr__(self):
        return f"SigmoidPastPolicy(c={self.c})"


def _check_c(c: float) -> None:
    if not 0.5 <= c <= 2.0:
        raise ValueError(f"c must lie in [1/2, 2], got {c}")


def max_inverse_propensity(c: float) -> float:
    """Largest inverse propensity under the nominal past policy.

    ``p(A=0 | x)`` ranges over ``[sigmoid(c), sigmoid(2c)]`` on the unit
    square, so the smallest action probability is ``1 - sigmoid(2c)``.
    """
    return 1.0 / (1.0 - expit(2.0 * c))


def draw_covariates(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=(n, 2))


def u_scale(X: np.ndarray, u_var_coef: float = 0.1) -> np.ndarray:
    """Standard deviation of ``U | X``."""
    return np.sqrt(u_var_coef * (X[:, 0] + X[:, 1]))


def draw_u(rng: np.random.Generator, X: np.ndarray, u_var_coef: float = 0.1) -> np.ndarray:
    return u_scale(X, u_var_coef) * rng.standard_normal(X.shape[0])


def loss_mean(X: np.ndarray, a: np.ndarray) -> np.ndarray:
    prod = X[:, 0] * X[:, 1]
    return np.where(a == 0, 1.0 - prod, prod)


def shifted_p0(p0: np.ndarray, factor) -> np.ndarray:
    """Probability whose odds equal ``odds(p0) / factor``; exactly ``p0`` when ``factor == 1``."""
    return np.where(np.equal(factor, 1.0), p0, 1.0 / (1.0 + factor * (1.0 / p0 - 1.0)))


def confounded_p0(p_nominal0: np.ndarray, u: np.ndarray, t: np.ndarray, gamma0: float,
                  favour_treatment_below: bool = True) -> np.ndarray:
    """True ``p(A=0 | X, U)``.

    The odds of A=0 are divided by ``gamma0`` on one side of the threshold and
    multiplied by it on the other; with ``favour_treatment_below`` the division
    happens where ``U <= t(X)``.
    """
    below = u <= t
    if not favour_treatment_below:
        below = ~below
    return shifted_p0(p_nominal0, np.where(below, gamma0, 1.0 / gamma0))


@dataclass(frozen=True)
class UnconfoundedConfig:
    c: float = 1.0
    n: int = 1000
    seed: int = 0
    loss_var: float = 0.1

    def __post_init__(self):
        _check_c(self.c)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.loss_var < 0:
            raise ValueError("loss_var must be >= 0")


@dataclass(frozen=True)
class ThresholdFunction:
    """``t(x) = q``-quantile of ``U | X = x``."""

    q: float
    u_var_coef: float = 0.1
    scores: tuple = ()

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return u_scale(X, self.u_var_coef) * norm.ppf(self.q)


@dataclass(frozen=True)
class ConfoundedConfig:
    gamma0: float = 2.0
    c: float = 0.5
    n: int = 1000
    seed: int = 0
    threshold_quantile: float | None = None
    pilot_n: int = 100_000
    u_var_coef: float = 0.1
    design_objective: str = "min"
    favour_treatment_below: bool = True

    def __post_init__(self):
        check_gamma(self.gamma0)
        _check_c(self.c)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.threshold_quantile is not None and not 0 < self.threshold_quantile < 1:
            raise ValueError("threshold_quantile must lie in (0, 1)")
        if self.design_objective not in ("min", "max"):
            raise ValueError("design_objective must be 'min' or 'max'")


@dataclass(frozen=True, eq=False)
class SyntheticData:
    """Observed dataset plus the ground truth hidden from the analyst.

    ``true_p0`` is ``p(A=0 | X, U)`` and ``nominal_p0`` is ``p(A=0 | X)``
    under the nominal model. ``u`` is ``None`` for unconfounded data.
    """

    dataset: Dataset
    true_p0: np.ndarray
    nominal_p0: np.ndarray
    u: np.ndarray | None = None

    def true_propensity(self) -> np.ndarray:
        """True probability of the action actually taken."""
        return np.where(self.dataset.a == 0, self.true_p0, 1.0 - self.true_p0)

    def nominal_propensity(self) -> np.ndarray:
        return np.where(self.dataset.a == 0, self.nominal_p0, 1.0 - self.nominal_p0)


def _draw_actions(rng, p0):
    return (rng.uniform(size=p0.size) >= p0).astype(np.int64)


def gen_unconfounded(config: UnconfoundedConfig, rng: np.random.Generator | None = None) -> SyntheticData:
    rng = make_rng(config.seed) if rng is None else rng
    X = draw_covariates(rng, config.n)
    p0 = nominal_p0(X, config.c)
    a = _draw_actions(rng, p0)
    loss = loss_mean(X, a) + math.sqrt(config.loss_var) * rng.standard_normal(config.n)
    return SyntheticData(Dataset(X, a, loss), p0, p0.copy())


def _pilot_score(X, u, uniform, p_nom0, gamma0, q, u_var_coef, objective, below):
    t = ThresholdFunction(q, u_var_coef)(X)
    a = (uniform >= confounded_p0(p_nom0, u, t, gamma0, below)).astype(np.int64)
    treated = a == 1
    if not treated.any():
        return -math.inf
    median = float(np.median(loss_mean(X[treated], a[treated]) + u[treated]))
    return median if objective == "max" else -median


def design_threshold(c: float, gamma0: float, pilot_n: int = 100_000, seed: int = 0,
                     u_var_coef: float = 0.1, objective: str = "min",
                     favour_treatment_below: bool = True, grid=QUANTILE_GRID) -> ThresholdFunction:
    """Pick the quantile level ``q`` of ``t(X)`` by grid search on a pilot simulation.

    Every grid level is scored on the same pilot draws (common random numbers).
    ``objective="min"`` picks the threshold that makes the median observed
    loss of treated units smallest, i.e. the training data look most favourable
    to treatment; ``"max"`` does the opposite.
    """
    if pilot_n < 10_000:
        raise ValueError("pilot_n must be >= 10000")
    check_gamma(gamma0)
    rng = make_rng(seed)
    X = draw_covariates(rng, pilot_n)
    u = draw_u(rng, X, u_var_coef)
    uniform = rng.uniform(size=pilot_n)
    p_nom0 = nominal_p0(X, c)
    scores = [_pilot_score(X, u, uniform, p_nom0, gamma0, q, u_var_coef, objective,
                           favour_treatment_below) for q in grid]
    best = int(np.argmax(scores))
    return ThresholdFunction(float(grid[best]), u_var_coef, tuple(zip(map(float, grid), scores)))


def resolve_threshold(config: ConfoundedConfig) -> ThresholdFunction:
    if config.threshold_quantile is not None:
        return ThresholdFunction(config.threshold_quantile, config.u_var_coef)
    return design_threshold(config.c, config.gamma0, config.pilot_n, config.seed,
                            config.u_var_coef, config.design_objective, config.favour_treatment_below)


def gen_confounded(config: ConfoundedConfig, t: ThresholdFunction | None = None,
                   rng: np.random.Generator | None = None) -> SyntheticData:
    t = resolve_threshold(config) if t is None else t
    rng = make_rng(config.seed) if rng is None else rng
    X = draw_covariates(rng, config.n)
    u = draw_u(rng, X, config.u_var_coef)
    p_nom0 = nominal_p0(X, config.c)
    p0 = confounded_p0(p_nom0, u, t(X), config.gamma0, config.favour_treatment_below)
    a = _draw_actions(rng, p0)
    loss = loss_mean(X, a) + u
    return SyntheticData(Dataset(X, a, loss), p0, p_nom0, u)


def draw_target_losses(rng: np.random.Generator, m: int, policy: Policy, confounded: bool = False,
                       loss_var: float = 0.1, u_var_coef: float = 0.1) -> np.ndarray:
    """Fresh losses ``(X, U, A ~ policy(X), L)`` from the target distribution."""
    X = draw_covariates(rng, m)
    P = policy.action_probs(X)
    a = (rng.uniform(size=m) >= P[:, 0]).astype(np.int64)
    if confounded:
        return loss_mean(X, a) + draw_u(rng, X, u_var_coef)
    return loss_mean(X, a) + math.sqrt(loss_var) * rng.standard_normal(m)


# --- IHDP response surface A -------------------------------------------------


@dataclass(frozen=True)
class IhdpSurfaceConfig:
    seed: int = 0
    support: tuple = (0, 1, 2, 3, 4)
    probs: tuple = (0.5, 0.2, 0.15, 0.1, 0.05)
    treatment_offset: float = 4.0
    noise_sd: float = 1.0

    def __post_init__(self):
        if len(self.support) != len(self.probs):
            raise ValueError("support and probs differ in length")
        if abs(sum(self.probs) - 1.0) > 1e-12 or min(self.probs) < 0:
            raise ValueError("probs must be a probability vector")


def draw_phi(d: int, config: IhdpSurfaceConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    rng = make_rng(config.seed) if rng is None else rng
    return rng.choice(np.asarray(config.support, dtype=float), size=d, p=np.asarray(config.probs))


def ihdp_mean(covariates: np.ndarray, actions: np.ndarray, phi: np.ndarray, offset: float = 4.0) -> np.ndarray:
    """Mean underdevelopment score: ``-phi.x`` untreated, ``-(phi.x + offset)`` treated."""
    return -(covariates @ phi + offset * np.asarray(actions))


def ihdp_surface_a(covariates, actions, config: IhdpSurfaceConfig = IhdpSurfaceConfig(),
                   phi: np.ndarray | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Losses under response surface A.

    ``phi`` and the noise are drawn from ``config.seed`` unless given. The
    sign is flipped relative to the original development score, so lower is
    better and treatment lowers the loss by ``treatment_offset``.
    """
    X = np.atleast_2d(np.asarray(covariates, dtype=float))
    a = np.asarray(actions).reshape(-1)
    if a.size != X.shape[0]:
        raise ValueError("covariates and actions differ in length")
    rng = make_rng(config.seed) if rng is None else rng
    if phi is None:
        phi = draw_phi(X.shape[1], config, rng)
    elif np.size(phi) != X.shape[1]:
        raise ValueError(f"phi has {np.size(phi)} entries for {X.shape[1]} covariates")
    mean = ihdp_mean(X, a, np.asarray(phi, dtype=float), config.treatment_offset)
    return mean + config.noise_sd * rng.standard_normal(mean.size)


@dataclass(frozen=True, eq=False)
class IhdpCovariates:
    """Standardized covariates with a binary treatment assignment.

    ``propensity`` (probability of treatment) is known for the synthetic
    stand-in and ``None`` for real data read from disk.
    """

    X: np.ndarray
    a: np.ndarray
    propensity: np.ndarray | None = None


def standardize_columns(X: np.ndarray) -> np.ndarray:
    std = X.std(axis=0)
    return (X - X.mean(axis=0)) / np.where(std > 0, std, 1.0)


def ihdp_standin(n: int = 100, d: int = 25, seed: int = 0, n_continuous: int = 6,
                 treated_share: float = 0.19, misspecification: float = 0.0) -> IhdpCovariates:
    """Synthetic stand-in for the IHDP covariate table.

    ``n_continuous`` Gaussian columns followed by Bernoulli indicators, all
    standardized to zero mean and unit sd. Treatment follows a logistic model
    in the first few columns; ``misspecification`` adds a nonlinear term to
    the true log-odds that a linear logistic fit cannot capture.
    """
    if n < 2 or d < 2:
        raise ValueError("need n >= 2 and d >= 2")
    rng = make_rng(seed)
    n_continuous = min(n_continuous, d)
    cont = rng.standard_normal((n, n_continuous))
    rates = rng.uniform(0.2, 0.8, size=d - n_continuous)
    binary = (rng.uniform(size=(n, d - n_continuous)) < rates).astype(float)
    X = standardize_columns(np.column_stack([cont, binary]))
    k = min(4, d)
    beta = np.array([0.6, -0.5, 0.4, 0.3])[:k]
    logit = X[:, :k] @ beta + misspecification * np.tanh(X[:, 0] * X[:, 1])
    intercept = _solve_intercept(logit, treated_share)
    p = expit(intercept + logit)
    a = (rng.uniform(size=n) < p).astype(np.int64)
    return IhdpCovariates(X, a, p)


def _solve_intercept(logit: np.ndarray, share: float) -> float:
    from scipy.optimize import brentq

    return brentq(lambda b: expit(b + logit).mean() - share, -30.0, 30.0)
