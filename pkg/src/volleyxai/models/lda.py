"""Two-class linear discriminant analysis with a small ridge."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SingularCovariance
from .base import Dataset, Model, Standardizer, register, sigmoid

RIDGE_FACTOR = 1e-6


@register
@dataclass
class LDAModel(Model):
    weights: np.ndarray
    bias: float
    standardizer: Standardizer | None = None
    hyperparameters: dict = field(default_factory=dict)
    train_fingerprint: str = ""
    kind = "LDA"

    def decision_function(self, Z):
        return Z @ self.weights + self.bias

    def _proba(self, Z):
        return sigmoid(self.decision_function(Z))

    def _params(self):
        return {"weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def _from_params(cls, p, std, meta):
        return cls(np.array(p["weights"], float), float(p["bias"]), std)


def train_lda(data: Dataset, standardize: bool = True) -> LDAModel:
    """Closed-form LDA; the posterior is ``sigmoid(w.x + b)``.

    The pooled within-class covariance gets ``1e-6 * trace / p`` added to
    its diagonal before solving for ``w``.
    """
    data.require_both_classes()
    std = Standardizer.fit(data.features) if standardize else None
    X = std.transform(data.features) if std is not None else data.features
    y = data.labels
    n, p = X.shape
    X0, X1 = X[y == 0], X[y == 1]
    mu0, mu1 = X0.mean(axis=0), X1.mean(axis=0)
    scatter = (X0 - mu0).T @ (X0 - mu0) + (X1 - mu1).T @ (X1 - mu1)
    dof = n - 2 if n > 2 else n
    cov = scatter / dof
    tr = float(np.trace(cov))
    if not np.isfinite(tr) or tr <= 0:
        raise SingularCovariance("pooled covariance is zero; need more than one sample per class")
    cov = cov + RIDGE_FACTOR * tr / p * np.eye(p)
    if np.linalg.cond(cov) > 1e12:
        raise SingularCovariance("pooled covariance is singular even after the ridge")
    w = np.linalg.solve(cov, mu1 - mu0)
    prior1 = len(X1) / n
    b = float(-0.5 * (mu1 + mu0) @ w + np.log(prior1 / (1 - prior1)))
    model = LDAModel(
        weights=w,
        bias=b,
        standardizer=std,
        hyperparameters={"ridge_factor": RIDGE_FACTOR},
        train_fingerprint=data.fingerprint(),
    )
    model.feature_names = tuple(data.feature_names)
    return model
