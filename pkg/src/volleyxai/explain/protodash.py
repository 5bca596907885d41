"""Greedy prototype selection with non-negative weights (ProtoDash).

For a single target row the objective over prototype weights ``w >= 0`` is

    l(w) = w . mu - 1/2 w' K w

with ``mu_j = k(candidate_j, target)`` and ``K`` the kernel matrix among
the chosen prototypes, ``k(a, b) = exp(-gamma * ||a - b||^2)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import InvalidGamma, InvalidM, NonFiniteInput


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    # explicit differences keep k(a, a) == 1 exactly
    sq = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-gamma * sq)


def nonneg_quadratic_max(K, mu, w0=None, tol: float = 1e-8, max_iter: int = 10_000):
    """Maximize ``w.mu - 1/2 w'Kw`` over ``w >= 0`` by projected gradient ascent.

    The step is ``1/L`` with ``L`` the largest absolute row sum of ``K``,
    an upper bound on its top eigenvalue. Stops once the projected
    gradient norm is at most ``tol``.
    """
    K = np.atleast_2d(K)
    mu = np.asarray(mu, float)
    w = np.zeros_like(mu) if w0 is None else np.maximum(np.asarray(w0, float), 0.0)
    L = float(np.max(np.abs(K).sum(axis=1)))
    if L <= 0:
        return w, 0
    for it in range(1, max_iter + 1):
        g = mu - K @ w
        if np.linalg.norm(w - np.maximum(w + g, 0.0)) <= tol:
            return w, it - 1
        w = np.maximum(w + g / L, 0.0)
    return w, max_iter


def prototype_objective(w, K, mu) -> float:
    return float(w @ mu - 0.5 * w @ K @ w)


@dataclass
class Prototype:
    index: int
    match_id: str
    weight: float
    similarity: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)


@dataclass
class PrototypeResult:
    target_id: str
    prototypes: list[Prototype]
    objective_history: list[float]
    feature_names: tuple[str, ...] = ()
    target_metadata: dict = field(default_factory=dict)

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.prototypes])

    @property
    def normalized_weights(self) -> np.ndarray:
        w = self.weights
        total = w.sum()
        return w / total if total > 0 else w

    @property
    def dominant_first(self) -> bool:
        nw = self.normalized_weights
        return bool(len(nw) and nw[0] > 0.5)

    def to_dict(self) -> dict:
        names = self.feature_names
        nw = self.normalized_weights
        protos = []
        for p, share in zip(self.prototypes, nw):
            entry = {
                "match_id": p.match_id,
                "weight": float(p.weight),
                "normalized_weight": float(share),
                **p.metadata,
            }
            if p.similarity is not None:
                entry["similarity"] = {n: round(float(s), 6) for n, s in zip(names, p.similarity)}
            protos.append(entry)
        return {
            "match_id": self.target_id,
            **self.target_metadata,
            "dominant_first_prototype": self.dominant_first,
            "objective_history": [float(v) for v in self.objective_history],
            "prototypes": protos,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def protodash(
    target,
    candidates,
    m: int = 5,
    gamma: float | None = None,
    candidate_ids: Sequence[str] | None = None,
    target_id: str = "",
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> PrototypeResult:
    """Pick ``m`` weighted prototypes among ``candidates`` for ``target``.

    Rows should already be standardized with the training transform.
    ``gamma`` defaults to ``1 / n_features``. At each step the candidate
    with the largest objective gradient is added (lowest index on ties)
    and all weights are re-optimized, warm-started from the previous
    solution. Candidates identical to an already chosen row are skipped,
    since they cannot add anything; selection stops early if only such
    rows remain.
    """
    C = np.asarray(candidates, dtype=float)
    t = np.asarray(target, dtype=float).reshape(-1)
    C = C.reshape(-1, t.shape[0])
    if not (np.all(np.isfinite(C)) and np.all(np.isfinite(t))):
        raise NonFiniteInput("prototype inputs contain non-finite values")
    n = C.shape[0]
    if not isinstance(m, (int, np.integer)) or m < 1 or m > n:
        raise InvalidM(f"m must be an integer in 1..{n}, got {m!r}")
    if gamma is None:
        gamma = 1.0 / t.shape[0]
    if not np.isfinite(gamma) or gamma <= 0:
        raise InvalidGamma(f"gamma must be > 0, got {gamma}")
    ids = list(candidate_ids) if candidate_ids is not None else [str(i) for i in range(n)]

    mu = rbf_kernel(C, t[None, :], gamma).ravel()
    selected: list[int] = []
    available = np.ones(n, dtype=bool)
    w = np.zeros(0)
    K_sel_all = np.zeros((0, n))  # kernel rows of selected prototypes vs all candidates
    history: list[float] = []
    while len(selected) < m and available.any():
        grad = mu - (w @ K_sel_all if selected else 0.0)
        grad = np.where(available, grad, -np.inf)
        j = int(np.argmax(grad))
        selected.append(j)
        row = rbf_kernel(C[j][None, :], C, gamma)
        K_sel_all = np.vstack([K_sel_all, row])
        available[j] = False
        available &= ~np.all(C == C[j], axis=1)
        K = K_sel_all[:, selected]
        w, _ = nonneg_quadratic_max(K, mu[selected], np.append(w, 0.0), tol, max_iter)
        history.append(prototype_objective(w, K, mu[selected]))

    protos = [Prototype(idx, ids[idx], float(wi)) for idx, wi in zip(selected, w)]
    return PrototypeResult(target_id, protos, history)


def feature_similarity(prototype, target, scales) -> np.ndarray:
    """Per-feature similarity ``exp(-|p - t| / scale)`` in [0, 1].

    A zero scale marks a constant training column: similarity is 1 when the
    values match and 0 otherwise.
    """
    p = np.asarray(prototype, float)
    t = np.asarray(target, float)
    s = np.asarray(scales, float)
    diff = np.abs(p - t)
    with np.errstate(divide="ignore", invalid="ignore"):
        sim = np.exp(-diff / np.where(s > 0, s, 1.0))
    return np.where(s > 0, sim, (diff == 0).astype(float))


def attach_similarity(result: PrototypeResult, raw_target, raw_candidates, scales, feature_names=()):
    """Fill in per-feature similarity for each prototype from raw-scale rows."""
    raw_candidates = np.asarray(raw_candidates, float)
    for p in result.prototypes:
        p.similarity = feature_similarity(raw_candidates[p.index], raw_target, scales)
    if feature_names:
        result.feature_names = tuple(feature_names)
    return result
