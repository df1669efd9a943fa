"""Binary logistic propensity models fitted by ridge-penalized IRLS."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import Policy

logger = logging.getLogger(__name__)


class FitError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature centering and scaling.

    Features flagged ``raw`` (binary indicators by default) pass through
    unchanged. Constant features get std 1 and are listed in ``constant``.
    """

    mean: np.ndarray
    std: np.ndarray
    raw: np.ndarray
    constant: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @classmethod
    def fit(cls, X, raw=None) -> "Standardizer":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if raw is None:
            raw = np.all((X == 0) | (X == 1), axis=0)
        raw = np.asarray(raw, dtype=bool)
        mean = np.where(raw, 0.0, X.mean(axis=0))
        std = X.std(axis=0)
        constant = ~raw & (std == 0)
        if constant.any():
            logger.warning("constant features %s left unscaled", np.flatnonzero(constant).tolist())
        std = np.where(raw | constant, 1.0, std)
        return cls(mean, std, raw, constant)

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.mean.size:
            raise ValueError(f"expected {self.mean.size} features, got {X.shape[1]}")
        return (X - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "raw": self.raw.tolist(), "constant": self.constant.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(np.asarray(d["mean"], float), np.asarray(d["std"], float),
                   np.asarray(d["raw"], bool), np.asarray(d.get("constant", []), bool))


@dataclass(frozen=True, eq=False)
class LogisticModel(Policy):
    """``p(a=1 | x) = sigmoid(intercept + coef . standardize(x))``."""

    coef: np.ndarray
    intercept: float
    standardizer: Standardizer
    ridge: float = 0.0
    converged: bool = True
    n_iter: int = 0

    action_count = 2

    def decision_function(self, X) -> np.ndarray:
        return self.intercept + self.standardizer.transform(X) @ self.coef

    def predict_proba(self, X) -> np.ndarray:
        """Probability of action 1 at each row of ``X``."""
        return expit(self.decision_function(X))

    def action_probs(self, X):
        p1 = self.predict_proba(X)
        return np.column_stack([1.0 - p1, p1])

    def to_dict(self) -> dict:
        return {"coef": self.coef.tolist(), "intercept": float(self.intercept),
                "standardizer": self.standardizer.to_dict(), "ridge": self.ridge,
                "converged": self.converged, "n_iter": self.n_iter}

    @classmethod
    def from_dict(cls, d) -> "LogisticModel":
        return cls(np.asarray(d["coef"], float), float(d["intercept"]),
                   Standardizer.from_dict(d["standardizer"]), float(d.get("ridge", 0.0)),
                   bool(d.get("converged", True)), int(d.get("n_iter", 0)))


def predict_proba(model: LogisticModel, x) -> float | np.ndarray:
    p = model.predict_proba(x)
    return float(p[0]) if np.ndim(x) <= 1 else p


def penalized_loglik(theta: np.ndarray, Z: np.ndarray, y: np.ndarray, ridge: float) -> float:
    """Log-likelihood minus ``ridge/2 * |theta|^2``; ``theta[0]`` is the intercept
    and ``Z`` carries a leading column of ones."""
    eta = Z @ theta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)) - 0.5 * ridge * theta @ theta)


def fit_logistic(features, labels, ridge: float = 1e-6, max_iter: int = 100, tol: float = 1e-10,
                 raw=None) -> LogisticModel:
    """Maximize the ridge-penalized log-likelihood by Newton/IRLS.

    The penalty applies to every parameter, intercept included, so the fit
    stays finite under separation or a single observed label whenever
    ``ridge > 0``. Iteration stops once the largest parameter update is below
    ``tol``; hitting ``max_iter`` is logged and recorded in ``converged``.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(labels, dtype=float).reshape(-1)
    if X.shape[0] != y.size:
        raise ValueError("features and labels differ in length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary 0/1")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    if ridge == 0 and (y.min() == y.max()):
        raise FitError("both labels must be present when ridge = 0; use ridge > 0")

    standardizer = Standardizer.fit(X, raw)
    Z = np.column_stack([np.ones(y.size), standardizer.transform(X)])
    theta = np.zeros(Z.shape[1])
    penalty = ridge * np.eye(Z.shape[1])
    objective = penalized_loglik(theta, Z, y, ridge)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(Z @ theta)
        grad = Z.T @ (y - p) - ridge * theta
        hess = (Z * (p * (1 - p))[:, None]).T @ Z + penalty
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise FitError("singular weighted normal equations; refit with ridge > 0") from None
        if not np.all(np.isfinite(step)) or np.linalg.cond(hess) > 1e14:
            raise FitError("ill-conditioned weighted normal equations; refit with ridge > 0")
        # step halving keeps the penalized likelihood nondecreasing
        for _ in range(50):
            candidate = penalized_loglik(theta + step, Z, y, ridge)
            if candidate >= objective - 1e-12 * abs(objective):
                break
            step = step / 2
        theta = theta + step
        objective = penalized_loglik(theta, Z, y, ridge)
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    if not converged:
        logger.warning("IRLS stopped after %d iterations without converging", max_iter)
    return LogisticModel(theta[1:].copy(), float(theta[0]), standardizer, float(ridge), converged, it)
