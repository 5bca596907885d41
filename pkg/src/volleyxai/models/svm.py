"""Linear SVM trained by mini-batch subgradient descent, with Platt scaling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import Dataset, Model, Standardizer, register, sigmoid


def hinge_objective(w, b, X, y_pm, lam):
    """``lam/2 * ||w||^2 + mean(max(0, 1 - y * (w.x + b)))`` with y in {-1, +1}."""
    margins = y_pm * (X @ w + b)
    return float(0.5 * lam * (w @ w) + np.mean(np.maximum(0.0, 1.0 - margins)))


def fit_platt(margins, labels, max_iter: int = 100):
    """Fit ``p = sigmoid(a * margin + b)`` by Newton's method.

    Targets are smoothed to ``(N+ + 1)/(N+ + 2)`` and ``1/(N- + 2)`` so the
    fit stays finite on separable training margins.
    """
    f = np.asarray(margins, float)
    y = np.asarray(labels, int)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    theta = np.array([0.0, np.log((n_pos + 1.0) / (n_neg + 1.0))])
    F = np.column_stack([f, np.ones_like(f)])

    def nll(th):
        z = F @ th
        return float(np.sum(np.logaddexp(0.0, z) - t * z))

    for _ in range(max_iter):
        p = sigmoid(F @ theta)
        g = F.T @ (p - t)
        if np.max(np.abs(g)) < 1e-10:
            break
        H = (F * (p * (1 - p))[:, None]).T @ F + 1e-12 * np.eye(2)
        step = np.linalg.solve(H, g)
        f0 = nll(theta)
        s = 1.0
        while s > 1e-10 and nll(theta - s * step) > f0 - 1e-4 * s * (g @ step):
            s *= 0.5
        theta = theta - s * step
    return float(theta[0]), float(theta[1])


@register
@dataclass
class LinearSVMModel(Model):
    weights: np.ndarray
    bias: float
    platt_a: float
    platt_b: float
    standardizer: Standardizer | None = None
    objective_history: list = field(default_factory=list)
    hyperparameters: dict = field(default_factory=dict)
    train_fingerprint: str = ""
    kind = "LinearSVM"

    def decision_function(self, Z):
        return Z @ self.weights + self.bias

    def margin(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        Z = self.standardizer.transform(X) if self.standardizer is not None else X
        return self.decision_function(Z)

    def _proba(self, Z):
        return sigmoid(self.platt_a * self.decision_function(Z) + self.platt_b)

    def _params(self):
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
            "objective_history": list(self.objective_history),
        }

    @classmethod
    def _from_params(cls, p, std, meta):
        return cls(
            np.array(p["weights"], float),
            float(p["bias"]),
            float(p["platt_a"]),
            float(p["platt_b"]),
            std,
            list(p.get("objective_history", [])),
        )


def train_svm(
    data: Dataset,
    c: float = 1.0,
    max_iter: int = 200,
    seed: int = 0,
    batch_size: int = 16,
    step0: float = 0.1,
    standardize: bool = True,
) -> LinearSVMModel:
    """Train for ``max_iter`` epochs of shuffled mini-batch subgradient steps.

    The regularization weight is ``1 / (c * n)``, the usual rescaling of
    ``1/2 ||w||^2 + c * sum(hinge)``. The step size decays as
    ``step0 / sqrt(epoch)``; an epoch that ends with a higher objective than
    the previous one is rolled back and the step size halved, so the
    recorded epoch-end objectives never increase.
    """
    data.require_both_classes()
    if c <= 0:
        raise ValueError("c must be > 0")
    std = Standardizer.fit(data.features) if standardize else None
    X = std.transform(data.features) if std is not None else data.features
    y_pm = np.where(data.labels == 1, 1.0, -1.0)
    n, d = X.shape
    lam = 1.0 / (c * n)
    rng = np.random.default_rng(seed)

    w = np.zeros(d)
    b = 0.0
    obj = hinge_objective(w, b, X, y_pm, lam)
    history = [obj]
    shrink = 1.0
    for epoch in range(1, max_iter + 1):
        eta = shrink * step0 / np.sqrt(epoch)
        w_new, b_new = w.copy(), b
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            Xb, yb = X[idx], y_pm[idx]
            active = yb * (Xb @ w_new + b_new) < 1.0
            gw = lam * w_new - (yb[active, None] * Xb[active]).sum(axis=0) / len(idx)
            gb = -yb[active].sum() / len(idx)
            w_new -= eta * gw
            b_new -= eta * gb
        new_obj = hinge_objective(w_new, b_new, X, y_pm, lam)
        if new_obj <= obj:
            w, b, obj = w_new, b_new, new_obj
        else:
            shrink *= 0.5
        history.append(obj)

    a_, b_ = fit_platt(X @ w + b, data.labels)
    model = LinearSVMModel(
        weights=w,
        bias=float(b),
        platt_a=a_,
        platt_b=b_,
        standardizer=std,
        objective_history=history,
        hyperparameters={
            "c": c,
            "max_iter": max_iter,
            "seed": seed,
            "batch_size": batch_size,
            "step0": step0,
        },
        train_fingerprint=data.fingerprint(),
    )
    model.feature_names = tuple(data.feature_names)
    return model
