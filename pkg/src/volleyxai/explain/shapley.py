"""Shapley attributions under replace-by-background (interventional) missingness.

A coalition ``S`` is a boolean mask over features. Its value is

    v(S) = mean_b f(x_S, b_{not S})

over the background rows ``b``. `exact_shapley` enumerates every
coalition and is the reference that `kernel_shap` is checked against.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import BudgetExceeded, DegenerateSystem, EmptyBackground, NonFiniteInput

DEFAULT_BUDGET = 2_000_000
_CHUNK_ROWS = 200_000


@dataclass
class Attribution:
    match_id: str
    base_value: float
    phi: np.ndarray
    predicted: float
    feature_names: tuple[str, ...] = ()
    method: str = "kernel_shap"
    n_coalitions: int = 0

    @property
    def additivity_gap(self) -> float:
        return abs(self.base_value + float(np.sum(self.phi)) - self.predicted)

    def to_dict(self) -> dict:
        names = self.feature_names or tuple(f"x{i}" for i in range(len(self.phi)))
        return {
            "match_id": self.match_id,
            "method": self.method,
            "base_value": round(float(self.base_value), 6),
            "predicted": round(float(self.predicted), 6),
            "phi": {n: round(float(v), 6) for n, v in zip(names, self.phi)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def as_predict_fn(model) -> Callable[[np.ndarray], np.ndarray]:
    if hasattr(model, "predict_proba"):
        return lambda X: np.asarray(model.predict_proba(np.atleast_2d(X)), dtype=float).reshape(-1)
    return lambda X: np.asarray(model(np.atleast_2d(X)), dtype=float).reshape(-1)


def _check_inputs(x, background):
    x = np.asarray(x, dtype=float).reshape(-1)
    B = np.asarray(background, dtype=float)
    if B.size == 0:
        raise EmptyBackground("background set is empty")
    B = B.reshape(-1, x.shape[0])
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(B))):
        raise NonFiniteInput("explained row or background contains non-finite values")
    return x, B


def coalition_values(fn, x: np.ndarray, background: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """``v(S)`` for each row of the boolean ``masks`` matrix."""
    masks = np.asarray(masks, dtype=bool)
    nb = background.shape[0]
    per_chunk = max(1, _CHUNK_ROWS // nb)
    out = np.empty(masks.shape[0])
    for start in range(0, masks.shape[0], per_chunk):
        mk = masks[start : start + per_chunk]
        rows = np.where(mk[:, None, :], x[None, None, :], background[None, :, :])
        vals = fn(rows.reshape(-1, x.shape[0]))
        out[start : start + len(mk)] = vals.reshape(len(mk), nb).mean(axis=1)
    return out


def _all_masks(n_players: int) -> np.ndarray:
    codes = np.arange(2**n_players)
    return ((codes[:, None] >> np.arange(n_players)) & 1).astype(bool)


def exact_shapley(
    model,
    x,
    background,
    match_id: str = "",
    players: Sequence[int] | None = None,
    budget: int = DEFAULT_BUDGET,
    feature_names: Sequence[str] = (),
) -> Attribution:
    """Shapley values by full coalition enumeration.

    ``players`` restricts the game to a subset of features; the others are
    held at their values in ``x`` and get zero attribution. ``budget`` caps
    ``2**n_players * n_background`` model evaluations.
    """
    x, B = _check_inputs(x, background)
    M = x.shape[0]
    players = list(range(M)) if players is None else sorted(set(int(p) for p in players))
    P = len(players)
    cost = (2**P) * B.shape[0]
    if cost > budget:
        raise BudgetExceeded(
            f"exact Shapley over {P} features needs {cost} evaluations (budget {budget})"
        )
    fn = as_predict_fn(model)
    sub = _all_masks(P)
    masks = np.ones((sub.shape[0], M), dtype=bool)
    masks[:, players] = sub
    v = coalition_values(fn, x, B, masks)

    sizes = sub.sum(axis=1)
    # |S|! (P - |S| - 1)! / P! for |S| = 0..P-1
    w = np.array([math.factorial(s) * math.factorial(P - s - 1) / math.factorial(P) for s in range(P)])
    codes = np.arange(2**P)
    phi = np.zeros(M)
    for k, feat in enumerate(players):
        without = codes[(codes >> k) & 1 == 0]
        phi[feat] = np.sum(w[sizes[without]] * (v[without | (1 << k)] - v[without]))
    return Attribution(
        match_id=match_id,
        base_value=float(v[0]),
        phi=phi,
        predicted=float(v[-1]),
        feature_names=tuple(feature_names),
        method="exact_shapley",
        n_coalitions=int(2**P),
    )


def shapley_kernel_weight(M: int, size) -> np.ndarray:
    """``(M-1) / (C(M, s) * s * (M - s))`` for coalition sizes strictly inside (0, M)."""
    size = np.asarray(size)
    comb = np.array([math.comb(M, int(s)) for s in size.reshape(-1)], dtype=float).reshape(size.shape)
    return (M - 1) / (comb * size * (M - size))


def _masks_of_size(M: int, size: int) -> np.ndarray:
    combos = list(itertools.combinations(range(M), size))
    out = np.zeros((len(combos), M), dtype=bool)
    for i, c in enumerate(combos):
        out[i, list(c)] = True
    return out


def _sample_masks(M: int, n: int, sizes, rng: np.random.Generator) -> np.ndarray:
    """Up to ``n`` distinct coalitions with sizes in ``sizes``, each drawn one
    followed by its complement.

    Sizes are drawn in proportion to their total kernel weight, members
    uniformly. Drawing stops at ``n`` distinct coalitions or after a fixed
    number of attempts, whichever comes first.
    """
    sizes = np.asarray(sorted(sizes))
    p = (M - 1) / (sizes * (M - sizes))
    p = p / p.sum()
    seen: dict[bytes, np.ndarray] = {}
    for _ in range(20 * n + 100):
        if len(seen) >= n:
            break
        z = np.zeros(M, dtype=bool)
        z[rng.choice(M, size=rng.choice(sizes, p=p), replace=False)] = True
        for mask in (z, ~z):
            if len(seen) < n:
                seen.setdefault(mask.tobytes(), mask)
    return np.array(list(seen.values()), dtype=bool).reshape(-1, M)


def _design(M: int, budget: int, whole_sizes: bool, rng) -> np.ndarray:
    """Proper coalitions for the regression, at most ``budget`` of them."""
    parts = []
    left = list(range(1, M))
    if whole_sizes:
        for s in range(1, M // 2 + 1):
            group = sorted({s, M - s})
            count = sum(math.comb(M, k) for k in group)
            if count > budget:
                break
            parts += [_masks_of_size(M, k) for k in group]
            budget -= count
            left = [k for k in left if k not in group]
    if budget > 0 and left:
        parts.append(_sample_masks(M, budget, left, rng))
    return np.vstack(parts) if parts else np.zeros((0, M), dtype=bool)


def _solve(masks, y, weights, delta):
    """Weighted least squares for phi subject to ``sum(phi) == delta``."""
    Z = masks.astype(float)
    M = Z.shape[1]
    A = Z[:, :-1] - Z[:, -1:]
    t = y - Z[:, -1] * delta
    sw = np.sqrt(weights)
    Aw = A * sw[:, None]
    if np.linalg.matrix_rank(Aw) < M - 1:
        return None
    head = np.linalg.lstsq(Aw, t * sw, rcond=None)[0]
    return np.append(head, delta - head.sum())


def kernel_shap(
    model,
    x,
    background,
    n_coalitions: int = 2048,
    seed: int = 0,
    match_id: str = "",
    feature_names: Sequence[str] = (),
    enumerate_if_possible: bool = True,
) -> Attribution:
    """Kernel SHAP estimate of the Shapley values of ``model`` at ``x``.

    ``n_coalitions`` caps the proper coalitions (neither empty nor full)
    in the regression. The empty and full coalitions are always evaluated
    and enter as the efficiency constraint. Coalition sizes are first taken
    whole, heaviest kernel weight first (sizes 1 and M-1, then 2 and M-2,
    and so on), while they fit in the budget; the rest of the budget goes
    to distinct coalitions sampled from the remaining sizes. A budget of
    ``2**M - 2`` therefore enumerates every coalition and is exact, and any
    budget of at least ``2*M`` covers all single-feature coalitions.
    ``enumerate_if_possible=False`` skips the whole-size step and samples
    everything. Each coalition is weighted by its exact Shapley kernel
    weight.
    """
    x, B = _check_inputs(x, background)
    M = x.shape[0]
    if n_coalitions < M:
        raise ValueError(f"n_coalitions must be >= M = {M}, got {n_coalitions}")
    fn = as_predict_fn(model)
    ends = np.vstack([np.zeros(M, bool), np.ones(M, bool)])
    v0, v1 = coalition_values(fn, x, B, ends)
    delta = v1 - v0
    names = tuple(feature_names)

    def result(phi, n_used):
        return Attribution(match_id, float(v0), phi, float(v1), names, "kernel_shap", n_used)

    if M == 1:
        return result(np.array([delta]), 2)

    rng = np.random.default_rng(seed)
    for _ in range(2):
        masks = _design(M, n_coalitions, enumerate_if_possible, rng)
        weights = shapley_kernel_weight(M, masks.sum(axis=1))
        y = coalition_values(fn, x, B, masks) - v0
        phi = _solve(masks, y, weights, delta)
        if phi is not None:
            return result(phi, len(masks) + 2)
    raise DegenerateSystem("sampled coalitions do not determine the attributions; raise n_coalitions")
