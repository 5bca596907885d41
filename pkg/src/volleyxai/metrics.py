"""Classification metrics and the faithfulness score for attributions."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyInput, LengthMismatch, NonFiniteInput, SingleClassLabels

WHITE_BOX = {"LogReg", "BRCG"}

DISPLAY_NAMES = {
    "LinearSVM": "SVM",
    "MLP": "Artificial Neural Network",
    "LDA": "LinearDiscriminantAnalysis",
    "LogReg": "Logistic Regression",
    "BRCG": "BRCG",
}


def _pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] == 0:
        raise EmptyInput("metric of an empty sequence")
    return a, b


def accuracy(preds, labels) -> float:
    p, y = _pair(preds, labels)
    return float(np.mean(p == y))


def f1(preds, labels, positive_class: int = 1) -> float:
    p, y = _pair(preds, labels)
    tp = np.sum((p == positive_class) & (y == positive_class))
    fp = np.sum((p == positive_class) & (y != positive_class))
    fn = np.sum((p != positive_class) & (y == positive_class))
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else float(2 * tp / denom)


def auc_roc(scores, labels) -> float:
    """Mann-Whitney AUC: P(score of a random positive > a random negative), ties count 1/2."""
    s, y = _pair(scores, labels)
    s = s.astype(float)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassLabels("AUC needs both classes")
    ranks = rankdata(s)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


class Faithfulness(NamedTuple):
    score: float
    degenerate: bool
    drops: np.ndarray


def faithfulness(model, x, attribution, baseline) -> Faithfulness:
    """Pearson correlation between attributions and single-feature ablation drops.

    ``drop_i = f(x) - f(x with feature i set to baseline_i)``. A constant
    attribution or drop vector gives score 0 with ``degenerate`` set.
    """
    phi = np.asarray(getattr(attribution, "phi", attribution), dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    base = np.asarray(baseline, dtype=float).reshape(-1)
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(x)) and np.all(np.isfinite(base))):
        raise NonFiniteInput("faithfulness inputs must be finite")
    if not (phi.shape == x.shape == base.shape):
        raise LengthMismatch("attribution, row and baseline lengths differ")
    M = x.shape[0]
    perturbed = np.repeat(x[None, :], M, axis=0)
    perturbed[np.arange(M), np.arange(M)] = base
    f = model.predict_proba if hasattr(model, "predict_proba") else model
    out = np.asarray(f(np.vstack([x[None, :], perturbed])), dtype=float).reshape(-1)
    drops = out[0] - out[1:]
    a = phi - phi.mean()
    b = drops - drops.mean()
    na, nb = np.sqrt(a @ a), np.sqrt(b @ b)
    scale = max(np.abs(phi).max(), np.abs(drops).max(), 1e-300)
    if na <= 1e-12 * scale * np.sqrt(M) or nb <= 1e-12 * scale * np.sqrt(M):
        return Faithfulness(0.0, True, drops)
    r = float(np.clip((a @ b) / (na * nb), -1.0, 1.0))
    return Faithfulness(r, False, drops)


@dataclass
class MetricsReport:
    model_kind: str
    accuracy: float
    f1: float
    auc_roc: float
    n_test: int

    @property
    def display_name(self) -> str:
        return DISPLAY_NAMES.get(self.model_kind, self.model_kind)

    @property
    def model_type(self) -> str:
        return "White-box" if self.model_kind in WHITE_BOX else "Black-box"


def evaluate_model(model, X, labels=None, threshold: float = 0.5) -> MetricsReport:
    """Accuracy and F1 on ``proba >= threshold``; AUC on raw probabilities.

    ``X`` may be a `Dataset` (labels taken from it) or a feature matrix.
    """
    if labels is None:
        X, labels = X.features, X.labels
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if X.shape[0] == 0:
        raise EmptyInput("empty test set")
    proba = np.asarray(model.predict_proba(X), dtype=float).reshape(-1)
    preds = (proba >= threshold).astype(int)
    return MetricsReport(
        model_kind=getattr(model, "kind", type(model).__name__),
        accuracy=accuracy(preds, labels),
        f1=f1(preds, labels),
        auc_roc=auc_roc(proba, labels),
        n_test=int(len(labels)),
    )


def sort_reports(reports: Sequence[MetricsReport]) -> list[MetricsReport]:
    """Black-box rows first, each group by descending accuracy."""
    return sorted(reports, key=lambda r: (r.model_type != "Black-box", -r.accuracy, r.model_kind))


TABLE_HEADER = ("Models", "Type of Model", "Accuracy", "F1-Score", "AUC-ROC")


def _rows(reports):
    return [
        (r.display_name, r.model_type, f"{r.accuracy:.4f}", f"{r.f1:.4f}", f"{r.auc_roc:.4f}")
        for r in sort_reports(reports)
    ]


def format_table(reports: Sequence[MetricsReport]) -> str:
    """Aligned plain-text table with one row per model."""
    rows = [TABLE_HEADER, *_rows(reports)]
    widths = [max(len(r[i]) for r in rows) for i in range(len(TABLE_HEADER))]
    lines = []
    for k, row in enumerate(rows):
        cells = [c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))]
        lines.append(" | ".join(cells).rstrip())
        if k == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def format_csv(reports: Sequence[MetricsReport]) -> str:
    lines = [",".join(TABLE_HEADER)]
    lines += [",".join(r) for r in _rows(reports)]
    return "\n".join(lines) + "\n"


def reports_to_json(reports: Sequence[MetricsReport]) -> str:
    return json.dumps([asdict(r) for r in sort_reports(reports)], indent=2)
