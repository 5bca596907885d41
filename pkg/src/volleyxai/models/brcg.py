"""Boolean DNF rule learner: greedy set cover with beam-searched clauses.

Each clause is a conjunction of threshold literals ``x[j] <= t`` or
``x[j] > t`` with ``t`` a midpoint between adjacent distinct training
values. Clauses are added one at a time; a clause is scored by

    uncovered positives it covers - negatives it covers - lambda * n_literals

Covered positives leave the residual problem after each clause; negatives
stay, so every clause pays for its own false positives. The loop stops
once the best clause no longer scores above zero.
Features are used on their raw scale so thresholds stay readable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..errors import SingleClassData
from ..features import FEATURE_LABELS
from .base import Dataset, Model, register

LE = "<="
GT = ">"


class Literal(NamedTuple):
    feature: int
    op: str
    threshold: float

    def holds(self, X: np.ndarray) -> np.ndarray:
        col = X[:, self.feature]
        return col <= self.threshold if self.op == LE else col > self.threshold

    def sort_key(self):
        return (self.feature, self.threshold, 0 if self.op == LE else 1)


Clause = tuple  # tuple[Literal, ...]

# one literal no finite value satisfies
UNSATISFIABLE: Clause = (Literal(0, LE, -math.inf),)


@dataclass(frozen=True)
class RuleSet:
    clauses: tuple[Clause, ...] = (UNSATISFIABLE,)
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.clauses:
            object.__setattr__(self, "clauses", (UNSATISFIABLE,))
        for clause in self.clauses:
            seen = set()
            for lit in clause:
                if (lit.feature, lit.op) in seen:
                    raise ValueError(f"clause repeats feature {lit.feature} with {lit.op}")
                seen.add((lit.feature, lit.op))

    @property
    def is_empty(self) -> bool:
        return self.clauses == (UNSATISFIABLE,)

    def clause_matrix(self, X) -> np.ndarray:
        """Boolean matrix (n_rows, n_clauses): clause k satisfied by row i."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.ones((X.shape[0], len(self.clauses)), dtype=bool)
        for k, clause in enumerate(self.clauses):
            for lit in clause:
                out[:, k] &= lit.holds(X)
        return out

    def predict(self, X) -> np.ndarray:
        return self.clause_matrix(X).any(axis=1).astype(int)

    def _name(self, j: int) -> str:
        if j < len(self.feature_names):
            name = self.feature_names[j]
            return FEATURE_LABELS.get(name, name)
        return f"x{j}"

    def describe(self) -> str:
        """Render as ``Predict Y=1 if [a > 1.00 AND b <= 2.00], else predict Y=0``."""
        if self.is_empty:
            return "Predict Y=0 for every match (no rule covers the positive class)"
        parts = []
        for clause in self.clauses:
            lits = " AND ".join(f"{self._name(l.feature)} {l.op} {l.threshold:.2f}" for l in clause)
            parts.append(f"[{lits}]")
        return f"Predict Y=1 if {' OR '.join(parts)}, else predict Y=0"

    def __str__(self):
        return self.describe()

    def to_list(self) -> list:
        if self.is_empty:
            return []
        return [[[l.feature, l.op, l.threshold] for l in c] for c in self.clauses]

    @classmethod
    def from_list(cls, data, feature_names=()):
        clauses = tuple(tuple(Literal(int(f), op, float(t)) for f, op, t in c) for c in data)
        return cls(clauses or (UNSATISFIABLE,), tuple(feature_names))


def ruleset_predict(rules: RuleSet, x) -> int:
    return int(rules.predict(np.atleast_2d(x))[0])


def candidate_literals(X: np.ndarray) -> list[Literal]:
    """All threshold literals, ordered by feature, threshold, then ``<=`` first."""
    lits = []
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for t in (vals[:-1] + vals[1:]) / 2.0:
            t = float(t)
            lits.append(Literal(j, LE, t))
            lits.append(Literal(j, GT, t))
    return lits


def _beam_search(masks, lits, pos, neg, beam_width, max_len, lam):
    """Best single clause for the current residual problem.

    ``masks`` is the (n_literals, n_rows) coverage matrix. Every extension
    of every beam entry is scored by the regularized objective and the best
    one seen is returned as ``(score, literal_indices)``, or ``None`` when
    no literal covers a remaining positive. The beam itself keeps the
    extensions with the highest ``TP/P - FP/N``: ranking the beam by the
    raw objective fills it with tiny pure literals that cannot be refined
    into the broad conjunctions worth finding.
    """
    feat = np.array([l.feature for l in lits])
    is_le = np.array([l.op == LE for l in lits])
    masks_f = masks.astype(np.float64)
    n_pos = max(int(pos.sum()), 1)
    n_neg = max(int(neg.sum()), 1)
    # lexicographic literal order is the index order, so clause keys are tuples of indices
    beam: list[tuple[tuple[int, ...], np.ndarray]] = [((), np.ones(masks.shape[1], dtype=bool))]
    best = None
    for depth in range(1, max_len + 1):
        pool: dict[tuple[int, ...], float] = {}
        for clause, cover in beam:
            tp = masks_f @ (cover & pos)
            fp = masks_f @ (cover & neg)
            allowed = tp > 0
            for i in clause:
                allowed &= ~((feat == feat[i]) & (is_le == is_le[i]))
            idx = np.flatnonzero(allowed)
            if idx.size == 0:
                continue
            score = tp[idx] - fp[idx] - lam * depth
            top = score.max()
            for i in idx[score == top]:
                key = tuple(sorted(clause + (int(i),)))
                if best is None or (-top, key) < (-best[0], best[1]):
                    best = (float(top), key)
            quality = tp[idx] / n_pos - fp[idx] / n_neg
            # stable sort keeps literal order among ties
            order = idx[np.argsort(-quality, kind="stable")]
            q_of = dict(zip(idx.tolist(), quality.tolist()))
            taken = 0
            for i in order:
                key = tuple(sorted(clause + (int(i),)))
                if key in pool:
                    continue
                pool[key] = q_of[int(i)]
                taken += 1
                if taken >= beam_width:
                    break
        if not pool or depth == max_len:
            break
        ranked = sorted(pool.items(), key=lambda kv: (-kv[1], kv[0]))[:beam_width]
        beam = [(key, np.logical_and.reduce(masks[list(key)], axis=0)) for key, _ in ranked]
    return best


@register
@dataclass
class BRCGModel(Model):
    rules: RuleSet
    clause_proba: tuple[float, ...] = ()
    default_proba: float = 0.5
    hyperparameters: dict = field(default_factory=dict)
    train_fingerprint: str = ""
    kind = "BRCG"
    standardizer = None

    def _proba(self, Z):
        sat = self.rules.clause_matrix(Z)
        out = np.full(Z.shape[0], self.default_proba)
        if self.rules.is_empty:
            return out
        any_sat = sat.any(axis=1)
        first = sat.argmax(axis=1)
        probs = np.asarray(self.clause_proba)
        out[any_sat] = probs[first[any_sat]]
        return out

    def _params(self):
        return {
            "clauses": self.rules.to_list(),
            "clause_proba": list(self.clause_proba),
            "default_proba": self.default_proba,
        }

    @classmethod
    def _from_params(cls, p, std, meta):
        rules = RuleSet.from_list(p["clauses"], meta.get("feature_names", ()))
        return cls(rules, tuple(p["clause_proba"]), float(p["default_proba"]))


def _laplace(pos: int, total: int) -> float:
    return (pos + 1.0) / (total + 2.0)


def train_brcg(
    data: Dataset,
    beam_width: int = 5,
    max_clause_len: int = 4,
    max_clauses: int = 3,
    lambda_complexity: float = 0.5,
) -> BRCGModel:
    """Learn a DNF rule set on raw-scale features.

    With no positive labels the result is the always-0 rule set; with no
    negative labels `SingleClassData` is raised.
    """
    X = data.features
    y = data.labels
    if data.n == 0 or not np.any(y == 0):
        raise SingleClassData("BRCG needs negative examples")
    names = tuple(data.feature_names)
    lits = candidate_literals(X)
    clauses: list[Clause] = []
    if np.any(y == 1) and lits:
        masks = np.array([l.holds(X) for l in lits])
        pos = y == 1
        neg = y == 0
        for _ in range(max_clauses):
            found = _beam_search(masks, lits, pos, neg, beam_width, max_clause_len, lambda_complexity)
            if found is None or found[0] <= 0:
                break
            _, key = found
            clause = tuple(sorted((lits[i] for i in key), key=Literal.sort_key))
            clauses.append(clause)
            cover = np.logical_and.reduce(masks[list(key)], axis=0)
            pos = pos & ~cover
            if not pos.any():
                break
    rules = RuleSet(tuple(clauses), names)

    sat = rules.clause_matrix(X)
    clause_proba = []
    taken = np.zeros(data.n, dtype=bool)
    if not rules.is_empty:
        for k in range(sat.shape[1]):
            first = sat[:, k] & ~taken
            clause_proba.append(_laplace(int(y[first].sum()), int(first.sum())))
            taken |= first
    default = _laplace(int(y[~taken].sum()), int((~taken).sum()))

    model = BRCGModel(
        rules=rules,
        clause_proba=tuple(clause_proba),
        default_proba=default,
        hyperparameters={
            "beam_width": beam_width,
            "max_clause_len": max_clause_len,
            "max_clauses": max_clauses,
            "lambda_complexity": lambda_complexity,
        },
        train_fingerprint=data.fingerprint(),
    )
    model.feature_names = names
    return model
