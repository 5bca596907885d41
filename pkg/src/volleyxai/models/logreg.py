"""L2-regularized logistic regression fitted by damped Newton iterations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import WrongModelKind
from .base import Dataset, Model, Standardizer, register, sigmoid


def logreg_objective(w, b, X, y, l2):
    """Mean negative log-likelihood plus ``l2/2 * ||w||^2`` (bias unpenalized)."""
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))


def logreg_gradient(w, b, X, y, l2):
    """Analytic gradient of `logreg_objective`, returned as ``(grad_w, grad_b)``."""
    r = sigmoid(X @ w + b) - y
    n = X.shape[0]
    return X.T @ r / n + l2 * w, float(r.sum() / n)


@register
@dataclass
class LogRegModel(Model):
    weights: np.ndarray
    bias: float
    standardizer: Standardizer | None = None
    converged: bool = True
    n_iter: int = 0
    hyperparameters: dict = field(default_factory=dict)
    train_fingerprint: str = ""
    kind = "LogReg"

    def decision_function(self, Z):
        return Z @ self.weights + self.bias

    def _proba(self, Z):
        return sigmoid(self.decision_function(Z))

    def _params(self):
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "converged": self.converged,
            "n_iter": self.n_iter,
        }

    @classmethod
    def _from_params(cls, p, std, meta):
        return cls(np.array(p["weights"], float), float(p["bias"]), std, p["converged"], p["n_iter"])


def train_logreg(
    data: Dataset,
    l2: float = 1e-2,
    max_iter: int = 100,
    tol: float = 1e-8,
    standardize: bool = True,
) -> LogRegModel:
    """Fit weights and bias from a zero start.

    ``converged`` is False when ``max_iter`` Newton steps did not bring the
    gradient norm under ``tol``.
    """
    data.require_both_classes()
    if l2 < 0:
        raise ValueError("l2 must be >= 0")
    std = Standardizer.fit(data.features) if standardize else None
    X = std.transform(data.features) if std is not None else data.features
    y = data.labels.astype(float)
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    theta = np.zeros(d + 1)
    reg = np.r_[np.full(d, l2), 0.0]

    def f(t):
        return logreg_objective(t[:-1], t[-1], X, y, l2)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gw, gb = logreg_gradient(theta[:-1], theta[-1], X, y, l2)
        g = np.r_[gw, gb]
        if np.linalg.norm(g) <= tol:
            converged = True
            it -= 1
            break
        p = sigmoid(Xa @ theta)
        H = (Xa * (p * (1 - p))[:, None]).T @ Xa / n + np.diag(reg)
        step = np.linalg.lstsq(H, g, rcond=None)[0]
        f0 = f(theta)
        t = 1.0
        while t > 1e-10:
            cand = theta - t * step
            if f(cand) <= f0 - 1e-4 * t * (g @ step):
                break
            t *= 0.5
        theta = cand
    else:
        gw, gb = logreg_gradient(theta[:-1], theta[-1], X, y, l2)
        converged = bool(np.linalg.norm(np.r_[gw, gb]) <= tol)

    model = LogRegModel(
        weights=theta[:-1].copy(),
        bias=float(theta[-1]),
        standardizer=std,
        converged=converged,
        n_iter=it,
        hyperparameters={"l2": l2, "max_iter": max_iter, "tol": tol, "standardize": standardize},
        train_fingerprint=data.fingerprint(),
    )
    model.feature_names = tuple(data.feature_names)
    return model


def logreg_feature_importance(model, feature_names=None) -> list[tuple[str, float]]:
    """Features ranked by absolute weight, largest first; ties keep index order."""
    if not isinstance(model, LogRegModel):
        raise WrongModelKind(f"feature importance needs a LogReg model, got {getattr(model, 'kind', type(model).__name__)}")
    w = np.abs(model.weights)
    if feature_names is None:
        feature_names = getattr(model, "feature_names", None)
    if feature_names is None or len(feature_names) != len(w):
        feature_names = [f"x{i}" for i in range(len(w))]
    order = sorted(range(len(w)), key=lambda i: (-w[i], i))
    return [(feature_names[i], float(w[i])) for i in order]
