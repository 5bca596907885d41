import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volleyxai.errors import EmptyInput, LengthMismatch, SingleClassLabels
from volleyxai.explain import exact_shapley
from volleyxai.metrics import (
    MetricsReport,
    accuracy,
    auc_roc,
    evaluate_model,
    f1,
    faithfulness,
    format_csv,
    format_table,
    sort_reports,
)


def confusion_oracle(p, y):
    tp = fp = fn = tn = 0
    for a, b in zip(p, y):
        if a == 1 and b == 1:
            tp += 1
        elif a == 1:
            fp += 1
        elif b == 1:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def pair_auc_oracle(s, y):
    pos = [a for a, b in zip(s, y) if b == 1]
    neg = [a for a, b in zip(s, y) if b == 0]
    total = sum(1.0 if a > c else 0.5 if a == c else 0.0 for a in pos for c in neg)
    return total / (len(pos) * len(neg))


def test_accuracy_examples():
    assert accuracy([1, 0, 1], [1, 0, 1]) == 1.0
    assert accuracy([1, 0, 1, 1], [1, 0, 0, 1]) == 0.75
    with pytest.raises(EmptyInput):
        accuracy([], [])
    with pytest.raises(LengthMismatch):
        accuracy([1], [1, 0])


def test_f1_examples():
    assert f1([1, 0, 1], [1, 0, 1]) == 1.0
    assert f1([0, 0, 0], [1, 0, 1]) == 0.0
    # TP=2, FP=1, FN=1
    assert f1([1, 1, 1, 0], [1, 1, 0, 1]) == pytest.approx(2 / 3, abs=1e-15)


def test_auc_examples():
    assert auc_roc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc_roc([0.4] * 4, [0, 1, 0, 1]) == 0.5
    assert auc_roc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    with pytest.raises(SingleClassLabels):
        auc_roc([0.1, 0.2], [1, 1])


def test_metrics_agree_with_brute_force_oracles():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        p = rng.integers(0, 2, n)
        # coarse scores so ties actually happen
        s = np.round(rng.uniform(size=n), int(rng.integers(1, 4)))
        tp, fp, fn, tn = confusion_oracle(p, y)
        assert accuracy(p, y) == (tp + tn) / n
        assert f1(p, y) == (0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn))
        assert abs(auc_roc(s, y) - pair_auc_oracle(s, y)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.integers(0, 1)), min_size=2, max_size=50))
def test_auc_of_negated_scores_is_complement(pairs):
    s = np.array([a for a, _ in pairs])
    y = np.array([b for _, b in pairs])
    if y.min() == y.max():
        return
    assert auc_roc(-s, y) == pytest.approx(1 - auc_roc(s, y), abs=1e-12)
    assert 0 <= auc_roc(s, y) <= 1


def _linear(w, b=0.0):
    return lambda X: np.atleast_2d(X) @ w + b


def test_faithfulness_identity_for_linear_model():
    rng = np.random.default_rng(2)
    for _ in range(20):
        w, x, B = rng.normal(size=7), rng.normal(size=7), rng.normal(size=(30, 7))
        f = _linear(w, 0.4)
        a = exact_shapley(f, x, B)
        r = faithfulness(f, x, a, B.mean(axis=0))
        assert abs(r.score - 1.0) <= 1e-10
        neg = faithfulness(f, x, -a.phi, B.mean(axis=0))
        assert abs(neg.score + r.score) <= 1e-12


def test_faithfulness_degenerate_is_zero():
    x = np.ones(3)
    r = faithfulness(_linear(np.ones(3)), x, np.zeros(3), x)
    assert r.degenerate and r.score == 0.0


class Constant:
    kind = "Const"

    def predict_proba(self, X):
        return np.full(len(np.atleast_2d(X)), 0.5)


def test_constant_scorer_report():
    y = np.array([1, 1, 1, 0])
    r = evaluate_model(Constant(), np.zeros((4, 2)), y)
    assert r.accuracy == 0.75  # p >= 0.5 predicts the positive class everywhere
    assert r.auc_roc == 0.5
    assert evaluate_model(Constant(), np.zeros((4, 2)), y) == r


def test_table_layout():
    reports = [
        MetricsReport("LogReg", 0.75, 0.8, 0.81, 84),
        MetricsReport("BRCG", 0.70, 0.7, 0.71, 84),
        MetricsReport("LinearSVM", 0.779, 0.8, 0.85, 84),
        MetricsReport("MLP", 0.76, 0.79, 0.8, 84),
        MetricsReport("LDA", 0.77, 0.8, 0.83, 84),
    ]
    kinds = [r.model_kind for r in sort_reports(reports)]
    assert kinds == ["LinearSVM", "LDA", "MLP", "LogReg", "BRCG"]
    lines = format_table(reports).splitlines()
    assert len(lines) == 7
    assert [c.strip() for c in lines[0].split("|")] == ["Models", "Type of Model", "Accuracy", "F1-Score", "AUC-ROC"]
    assert [c.strip() for c in lines[2].split("|")] == ["SVM", "Black-box", "0.7790", "0.8000", "0.8500"]
    csv_lines = format_csv(reports).splitlines()
    assert csv_lines[-1] == "BRCG,White-box,0.7000,0.7000,0.7100"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=40), st.randoms())
def test_accuracy_and_f1_ignore_row_order(pairs, random):
    p = [a for a, _ in pairs]
    y = [b for _, b in pairs]
    order = list(range(len(pairs)))
    random.shuffle(order)
    pp, yy = [p[i] for i in order], [y[i] for i in order]
    assert accuracy(pp, yy) == accuracy(p, y)
    assert f1(pp, yy) == f1(p, y)
