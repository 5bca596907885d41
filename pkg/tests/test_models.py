import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from volleyxai.errors import NonFiniteInput, SingleClassData, SingularCovariance, WrongModelKind
from volleyxai.features import FEATURE_NAMES
from volleyxai.models import (
    Dataset,
    Literal,
    LogRegModel,
    RuleSet,
    dumps_model,
    load_model,
    logreg_feature_importance,
    model_from_dict,
    ruleset_predict,
    save_model,
    standardize,
    train_brcg,
    train_lda,
    train_logreg,
    train_mlp,
    train_svm,
)
from volleyxai.models.logreg import logreg_gradient, logreg_objective
from volleyxai.models.mlp import mlp_gradient, mlp_loss, n_params

TRAINERS = {
    "LogReg": lambda d: train_logreg(d),
    "BRCG": lambda d: train_brcg(d),
    "LinearSVM": lambda d: train_svm(d, max_iter=40),
    "MLP": lambda d: train_mlp(d, epochs=100),
    "LDA": lambda d: train_lda(d),
}


def separable(n=60, d=2, seed=0, gap=0.5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    s = X[:, 0] + 0.5 * X[:, 1 % d]
    keep = np.abs(s) > gap
    return Dataset(X[keep], (s[keep] > 0).astype(int))


def noisy(n=300, d=6, seed=1):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)) * rng.uniform(0.5, 20, d) + rng.uniform(-5, 5, d)
    w = rng.normal(size=d) / X.std(axis=0)
    z = (X - X.mean(axis=0)) @ w
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-z))).astype(int)
    return Dataset(X, y)


@pytest.fixture(scope="module")
def league_data(league_features):
    return Dataset.from_vectors(league_features)


# -- standardization -------------------------------------------------------


def test_constant_column_becomes_zero_and_is_flagged():
    X = np.column_stack([np.full(10, 5.0), np.arange(10.0)])
    z, tf = standardize(Dataset(X, np.arange(10) % 2))
    assert np.all(z.features[:, 0] == 0)
    assert tf.constant.tolist() == [True, False]
    assert tf.scale[0] == 1.0


def test_standardizing_standardized_data_is_identity():
    z, _ = standardize(noisy())
    zz, _ = standardize(z)
    np.testing.assert_allclose(zz.features, z.features, atol=1e-12)
    assert np.all(np.abs(z.features.mean(axis=0)) < 1e-10)


def test_dataset_rejects_non_finite():
    with pytest.raises(NonFiniteInput):
        Dataset(np.array([[1.0, np.nan]]), [1])


# -- logistic regression ---------------------------------------------------


def test_logreg_separable_toy():
    d = separable()
    m = train_logreg(d, l2=0.01)
    assert np.mean(m.predict(d.features) == d.labels) == 1.0


def test_logreg_flipped_labels_negate_weights():
    d = noisy()
    a = train_logreg(d)
    b = train_logreg(Dataset(d.features, 1 - d.labels))
    np.testing.assert_allclose(b.weights, -a.weights, atol=1e-8)
    assert b.bias == pytest.approx(-a.bias, abs=1e-8)


def _central_diff(f, theta, h=1e-5):
    g = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def test_logreg_gradient_at_optimum_matches_finite_differences():
    d = noisy()
    m = train_logreg(d, l2=0.01)
    X = m.standardizer.transform(d.features)
    theta = np.r_[m.weights, m.bias]
    f = lambda t: logreg_objective(t[:-1], t[-1], X, d.labels, 0.01)  # noqa: E731
    gw, gb = logreg_gradient(m.weights, m.bias, X, d.labels, 0.01)
    assert np.max(np.abs(np.r_[gw, gb] - _central_diff(f, theta))) <= 1e-4
    assert m.converged


def test_logreg_importance_examples():
    m = LogRegModel(np.array([0.5, -2.0, 1.0]), 0.0)
    assert [n for n, _ in logreg_feature_importance(m, ["f1", "f2", "f3"])] == ["f2", "f3", "f1"]
    z = LogRegModel(np.zeros(3), 0.0)
    assert [n for n, _ in logreg_feature_importance(z, ["f1", "f2", "f3"])] == ["f1", "f2", "f3"]
    with pytest.raises(WrongModelKind):
        logreg_feature_importance(train_lda(noisy()))


def test_logreg_planted_feature_ranks_first():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(400, 10))
    y = (X[:, 7] + 0.1 * rng.normal(size=400) > 0).astype(int)
    m = train_logreg(Dataset(X, y))
    assert logreg_feature_importance(m)[0][0] == "x7"


def test_zero_logreg_predicts_half():
    m = LogRegModel(np.zeros(19), 0.0)
    assert m.predict_proba(np.arange(19.0)) == 0.5


def test_logreg_standardization_does_not_change_predictions():
    d = noisy()
    a = train_logreg(d, l2=0.0, standardize=True)
    b = train_logreg(d, l2=0.0, standardize=False, max_iter=200)
    agree = np.mean(a.predict(d.features) == b.predict(d.features))
    assert agree >= 0.99
    np.testing.assert_allclose(a.predict_proba(d.features), b.predict_proba(d.features), atol=1e-6)


# -- rule learner ----------------------------------------------------------


def planted_rule_data(seed=0, n=500):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, 10))
    y = ((X[:, 3] > 0.5) & (X[:, 7] <= 0.2)).astype(int)
    return Dataset(X, y)


@pytest.mark.parametrize("seed", range(5))
def test_brcg_recovers_planted_rule(seed):
    d = planted_rule_data(seed)
    m = train_brcg(d)
    assert np.mean(m.rules.predict(d.features) == d.labels) == 1.0
    (clause,) = m.rules.clauses
    lits = {(l.feature, l.op): l.threshold for l in clause}
    assert set(lits) == {(3, ">"), (7, "<=")}
    # each threshold must fall in the gap around the planted one among the rows
    # where the other literal holds, the only rows whose label it decides
    X = d.features
    x3 = X[X[:, 7] <= 0.2, 3]
    x7 = X[X[:, 3] > 0.5, 7]
    assert x3[x3 <= 0.5].max() <= lits[(3, ">")] < x3[x3 > 0.5].min()
    assert x7[x7 <= 0.2].max() <= lits[(7, "<=")] < x7[x7 > 0.2].min()


def test_brcg_all_zero_labels_gives_empty_ruleset():
    d = Dataset(np.random.default_rng(0).normal(size=(50, 3)), np.zeros(50, int))
    m = train_brcg(d)
    assert m.rules.is_empty
    assert np.all(m.predict(d.features) == 0)


def test_brcg_all_one_labels_is_rejected():
    with pytest.raises(SingleClassData):
        train_brcg(Dataset(np.zeros((5, 2)), np.ones(5, int)))


def test_ruleset_predict_examples():
    assert ruleset_predict(RuleSet(()), np.array([1e9, -1e9])) == 0
    assert ruleset_predict(RuleSet(((Literal(1, ">", 0.0),),)), np.array([0.0, 1.0])) == 1


def test_four_literal_rule_prints_and_fires():
    idx = {n: i for i, n in enumerate(FEATURE_NAMES)}
    rule = RuleSet(
        (
            (
                Literal(idx["away_prev_season_position"], ">", 3.0),
                Literal(idx["head_to_head_form"], ">", -0.31),
                Literal(idx["home_prev_season_position"], "<=", 6.0),
                Literal(idx["home_win_percentage"], ">", 10.53),
            ),
        ),
        FEATURE_NAMES,
    )
    x = np.zeros(19)
    x[idx["away_prev_season_position"]] = 5
    x[idx["head_to_head_form"]] = 0
    x[idx["home_prev_season_position"]] = 4
    x[idx["home_win_percentage"]] = 50
    assert ruleset_predict(rule, x) == 1
    assert rule.describe() == (
        "Predict Y=1 if [Away team's position in previous season > 3.00 AND Head to head form > -0.31"
        " AND Home team's position in previous season <= 6.00 AND Home team's win percentage > 10.53],"
        " else predict Y=0"
    )


def test_ruleset_rejects_repeated_literal_pair():
    with pytest.raises(ValueError):
        RuleSet(((Literal(0, ">", 1.0), Literal(0, ">", 2.0)),))


# -- SVM -------------------------------------------------------------------


def test_svm_separable_toy():
    d = separable(gap=1.0)
    m = train_svm(d, c=100.0)
    y_pm = np.where(d.labels == 1, 1, -1)
    assert np.all(y_pm * m.margin(d.features) >= 0)
    assert np.mean(m.predict(d.features) == d.labels) == 1.0


def test_svm_objective_never_increases():
    m = train_svm(noisy(), max_iter=100)
    h = np.array(m.objective_history)
    assert len(h) == 101
    assert np.all(np.diff(h) <= 1e-6)
    assert h[-1] < h[0]


def test_platt_is_monotone_in_margin():
    d = noisy()
    m = train_svm(d, max_iter=50)
    assert m.platt_a > 0
    order = np.argsort(m.margin(d.features))
    p = m.predict_proba(d.features)[order]
    assert np.all(np.diff(p) >= 0)


def test_svm_is_deterministic_per_seed():
    d = noisy()
    a, b = train_svm(d, seed=3, max_iter=30), train_svm(d, seed=3, max_iter=30)
    assert np.array_equal(a.weights, b.weights)


# -- MLP -------------------------------------------------------------------


def test_mlp_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(3, 5))
    y = np.array([0.0, 1.0, 1.0])
    theta = rng.uniform(-1, 1, n_params(5, 4))
    g = mlp_gradient(theta, X, y, 4)
    fd = _central_diff(lambda t: mlp_loss(t, X, y, 4), theta)
    rel = np.abs(g - fd) / np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-8)
    assert rel.max() <= 1e-4


def test_mlp_single_hidden_unit_fits_separable_data():
    d = separable(gap=0.5)
    m = train_mlp(d, hidden=1)
    assert np.mean(m.predict(d.features) == d.labels) == 1.0


def test_mlp_is_deterministic_and_loss_falls():
    d = noisy()
    a, b = train_mlp(d, epochs=200, seed=4), train_mlp(d, epochs=200, seed=4)
    assert np.array_equal(a.theta, b.theta)
    assert len(a.loss_history) == 201 and a.loss_history[-1] < a.loss_history[0]


# -- LDA -------------------------------------------------------------------


def _axis_design(mu, s=1.0):
    d = len(mu)
    offsets = np.vstack([np.eye(d), -np.eye(d)]) * s
    return mu + offsets


def test_lda_normal_parallel_to_mean_difference():
    mu0 = np.array([0.0, 1.0, -2.0, 0.5])
    mu1 = np.array([2.0, -1.0, 0.0, 3.0])
    # class shapes with exactly isotropic within-class scatter
    X = np.vstack([_axis_design(mu0), _axis_design(mu1)])
    y = np.r_[np.zeros(8, int), np.ones(8, int)]
    m = train_lda(Dataset(X, y), standardize=False)
    diff = mu1 - mu0
    cos = m.weights @ diff / (np.linalg.norm(m.weights) * np.linalg.norm(diff))
    assert np.arccos(min(cos, 1.0)) <= 1e-6
    assert m.bias == pytest.approx(-0.5 * (mu0 + mu1) @ m.weights, abs=1e-9)


def test_lda_duplicate_column_matches_reduced_model():
    d = noisy(d=4)
    dup = Dataset(np.column_stack([d.features, d.features[:, 2]]), d.labels)
    full, reduced = train_lda(dup), train_lda(d)
    np.testing.assert_allclose(full.predict_proba(dup.features), reduced.predict_proba(d.features), atol=1e-6)


def test_lda_one_sample_per_class_does_not_crash():
    d = Dataset(np.array([[0.0, 1.0], [1.0, 0.0]]), [0, 1])
    try:
        m = train_lda(d)
    except SingularCovariance:
        return
    assert np.all(np.isfinite(m.predict_proba(d.features)))


# -- shared interface ------------------------------------------------------


@pytest.mark.parametrize("kind", sorted(TRAINERS))
def test_models_reject_single_class(kind):
    with pytest.raises(SingleClassData):
        TRAINERS[kind](Dataset(np.random.default_rng(0).normal(size=(20, 3)), np.ones(20, int)))


@pytest.mark.parametrize("kind", sorted(TRAINERS))
def test_json_round_trip_preserves_predictions(kind, league_data, tmp_path):
    m = TRAINERS[kind](league_data)
    path = tmp_path / f"{kind}.json"
    save_model(m, path)
    back = load_model(path)
    assert back.kind == kind
    np.testing.assert_array_equal(back.predict_proba(league_data.features), m.predict_proba(league_data.features))
    assert dumps_model(back) == dumps_model(m)
    assert json.loads(dumps_model(m))["train_fingerprint"] == league_data.fingerprint()


@pytest.mark.parametrize("kind", sorted(TRAINERS))
def test_every_model_beats_chance_on_league(kind, league_data):
    m = TRAINERS[kind](league_data)
    assert np.mean(m.predict(league_data.features) == league_data.labels) > 0.6


@pytest.fixture(scope="module")
def trained(league_data):
    return {k: f(league_data) for k, f in TRAINERS.items()}


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 19), elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_predict_proba_in_unit_interval(trained, X):
    for m in trained.values():
        p = m.predict_proba(X)
        assert np.all((p >= 0) & (p <= 1))


def test_predict_proba_rejects_non_finite(trained):
    x = np.zeros(19)
    x[3] = np.inf
    for m in trained.values():
        with pytest.raises(NonFiniteInput):
            m.predict_proba(x)


def test_unknown_format_version_rejected(trained):
    d = trained["LDA"].to_dict()
    d["format_version"] = 99
    with pytest.raises(ValueError):
        model_from_dict(d)
