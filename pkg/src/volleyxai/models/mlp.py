"""One-hidden-layer perceptron (tanh hidden units, sigmoid output)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import Dataset, Model, Standardizer, register, sigmoid


def unpack(theta, n_in: int, hidden: int):
    """Split a flat parameter vector into ``(W1, b1, w2, b2)``."""
    i = 0
    W1 = theta[i : i + hidden * n_in].reshape(hidden, n_in)
    i += hidden * n_in
    b1 = theta[i : i + hidden]
    i += hidden
    w2 = theta[i : i + hidden]
    i += hidden
    return W1, b1, w2, float(theta[i])


def n_params(n_in: int, hidden: int) -> int:
    return hidden * n_in + 2 * hidden + 1


def mlp_forward(theta, X, hidden):
    W1, b1, w2, b2 = unpack(theta, X.shape[1], hidden)
    H = np.tanh(X @ W1.T + b1)
    return H, H @ w2 + b2


def mlp_loss(theta, X, y, hidden) -> float:
    """Mean binary cross-entropy."""
    _, z = mlp_forward(theta, X, hidden)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def mlp_gradient(theta, X, y, hidden) -> np.ndarray:
    """Backpropagated gradient of `mlp_loss`, flattened like ``theta``."""
    W1, b1, w2, b2 = unpack(theta, X.shape[1], hidden)
    H, z = mlp_forward(theta, X, hidden)
    dz = (sigmoid(z) - y) / X.shape[0]
    g_w2 = H.T @ dz
    g_b2 = dz.sum()
    dA = np.outer(dz, w2) * (1.0 - H**2)
    g_W1 = dA.T @ X
    g_b1 = dA.sum(axis=0)
    return np.concatenate([g_W1.ravel(), g_b1, g_w2, [g_b2]])


@register
@dataclass
class MLPModel(Model):
    theta: np.ndarray
    n_in: int
    hidden: int
    standardizer: Standardizer | None = None
    loss_history: list = field(default_factory=list)
    hyperparameters: dict = field(default_factory=dict)
    train_fingerprint: str = ""
    kind = "MLP"

    def _proba(self, Z):
        _, z = mlp_forward(self.theta, Z, self.hidden)
        return sigmoid(z)

    def _params(self):
        return {"theta": self.theta.tolist(), "n_in": self.n_in, "hidden": self.hidden}

    @classmethod
    def _from_params(cls, p, std, meta):
        return cls(np.array(p["theta"], float), int(p["n_in"]), int(p["hidden"]), std)


def train_mlp(
    data: Dataset,
    hidden: int = 8,
    lr: float = 0.05,
    epochs: int = 500,
    seed: int = 0,
    standardize: bool = True,
) -> MLPModel:
    """Full-batch gradient descent from a seeded uniform(-0.1, 0.1) start.

    ``loss_history`` holds the training loss before the first step and
    after every epoch.
    """
    data.require_both_classes()
    if hidden < 1:
        raise ValueError("hidden must be >= 1")
    std = Standardizer.fit(data.features) if standardize else None
    X = std.transform(data.features) if std is not None else data.features
    y = data.labels.astype(float)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-0.1, 0.1, n_params(X.shape[1], hidden))
    history = [mlp_loss(theta, X, y, hidden)]
    for _ in range(epochs):
        theta -= lr * mlp_gradient(theta, X, y, hidden)
        history.append(mlp_loss(theta, X, y, hidden))
    model = MLPModel(
        theta=theta,
        n_in=X.shape[1],
        hidden=hidden,
        standardizer=std,
        loss_history=history,
        hyperparameters={"hidden": hidden, "lr": lr, "epochs": epochs, "seed": seed},
        train_fingerprint=data.fingerprint(),
    )
    model.feature_names = tuple(data.feature_names)
    return model
