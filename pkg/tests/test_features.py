import dataclasses
import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from replay import replay_features
from volleyxai.data import LeagueConfig, RawMatch, Stage, generate_synthetic_league
from volleyxai.errors import InvalidAlpha, MalformedRow, NegativeInterval
from volleyxai.features import (
    FEATURE_CSV_COLUMNS,
    FEATURE_NAMES,
    HeadToHeadState,
    build_features,
    compute_form,
    ema_update,
    feature_matrix,
    match_importance,
    read_features_csv,
    rest_days,
    write_features_csv,
)


def test_ema_examples():
    assert ema_update(None, 90, 0.3) == 90
    assert ema_update(80, 80, 0.3) == pytest.approx(80, abs=1e-12)
    assert ema_update(80, 90, 0.3) == pytest.approx(83, abs=1e-12)
    with pytest.raises(InvalidAlpha):
        ema_update(1, 2, 0.0)
    with pytest.raises(InvalidAlpha):
        ema_update(1, 2, 1.5)


def test_form_examples():
    assert compute_form([], 0.2) == 0
    assert compute_form([2, 2, 2, 2, 2], 0.2) == pytest.approx(2, abs=1e-12)
    # the fold oracle: 3 first, then 0.5 * (-3) + 0.5 * 3
    assert compute_form([3, -3], 0.5) == ema_update(ema_update(None, 3, 0.5), -3, 0.5) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-3, 3), max_size=5), st.floats(0.01, 1.0))
def test_form_stays_in_set_diff_range(diffs, alpha):
    v = compute_form(diffs, alpha)
    assert -3 - 1e-12 <= v <= 3 + 1e-12


def test_rest_examples():
    d = dt.date(2015, 1, 20)
    assert rest_days(None, d) == 7
    assert rest_days(d - dt.timedelta(days=10), d) == 7
    assert rest_days(d - dt.timedelta(days=3), d) == 3
    with pytest.raises(NegativeInterval):
        rest_days(d + dt.timedelta(days=1), d)


def test_importance_examples():
    assert match_importance(Stage.LEAGUE) == 0
    assert match_importance(Stage.QUARTER_FINAL) == 1
    assert match_importance(Stage.SEMI_FINAL) == 2
    assert match_importance("Final") == 3


def _m(i, day, home, away, hs, as_, hp=75, ap=60, season="2014-15", stage=Stage.LEAGUE):
    return RawMatch(f"m{i:02d}", dt.date(2014, 10, 1) + dt.timedelta(days=day), season, home, away, hs, as_, hp, ap, stage)


def test_cold_start_defaults():
    fv = build_features([_m(0, 0, "A", "B", 3, 1)])[0]
    for side in ("home", "away"):
        assert fv[f"{side}_win_percentage"] == 0
        assert fv[f"{side}_form"] == 0
        assert fv[f"{side}_prev_season_position"] == 3  # two teams, sentinel n + 1
        assert fv[f"{side}_avg_points"] == 0
    assert fv["head_to_head_form"] == 0
    assert fv["home_rest_time"] == 7
    assert fv.label == 1


def test_all_wins_gives_100_percent():
    ms = [
        _m(0, 0, "A", "B", 3, 0),
        _m(1, 7, "C", "A", 1, 3),
        _m(2, 14, "A", "D", 3, 2),
        _m(3, 21, "B", "A", 0, 3),
        _m(4, 28, "A", "C", 3, 1),
    ]
    fv = build_features(ms)[-1]
    assert fv["home_win_percentage"] == 100
    assert fv["home_current_position"] == 1
    assert fv["home_rest_time"] == 7
    assert fv["head_to_head_form"] == 2  # A beat C 3-1 once before


def test_previous_season_rank_carries_over():
    ms = [
        _m(0, 0, "A", "B", 3, 0, season="2014-15"),
        _m(1, 7, "B", "A", 0, 3, season="2014-15"),
        _m(2, 400, "B", "A", 3, 0, season="2015-16"),
    ]
    fv = build_features(ms)[-1]
    assert fv["home_prev_season_position"] == 2
    assert fv["away_prev_season_position"] == 1
    assert fv["home_win_percentage"] == 0  # season record resets
    assert fv["home_prev_game_performance"] == -3  # last game carries over


def test_leakage_prefix_replay_matches_independent_oracle(league_matches):
    n_teams = len({t for m in league_matches for t in (m.home_team, m.away_team)})
    vectors = build_features(league_matches, alpha=0.2)
    assert len(vectors) == len(league_matches)
    for k, (m, fv) in enumerate(zip(league_matches, vectors)):
        expected = replay_features(league_matches[:k], m, 0.2, n_teams)
        np.testing.assert_allclose(fv.values, expected, rtol=0, atol=1e-12, err_msg=m.match_id)


def test_leakage_prefix_truncation_is_identical(league_matches):
    n_teams = len({t for m in league_matches for t in (m.home_team, m.away_team)})
    full = build_features(league_matches)
    for k in range(0, len(league_matches), 17):
        assert build_features(league_matches[: k + 1], n_teams=n_teams)[-1] == full[k]


def test_future_results_do_not_change_past_features(league_matches):
    full = build_features(league_matches)
    k = len(league_matches) // 2
    flipped = list(league_matches[:k]) + [
        dataclasses.replace(m, home_sets=m.away_sets, away_sets=m.home_sets) for m in league_matches[k:]
    ]
    assert build_features(flipped)[:k] == full[:k]


def test_head_to_head_antisymmetry():
    rng = np.random.default_rng(0)
    h = HeadToHeadState(0.3)
    teams = ["A", "B", "C", "D"]
    for _ in range(200):
        a, b = rng.choice(teams, 2, replace=False)
        h.update(a, b, int(rng.integers(-3, 4)))
        for x in teams:
            for y in teams:
                if x != y:
                    assert h.get(x, y) == -h.get(y, x)


def test_features_finite_and_in_range(league_features):
    X, y = feature_matrix(league_features)
    assert np.all(np.isfinite(X))
    col = {n: X[:, i] for i, n in enumerate(FEATURE_NAMES)}
    assert set(np.unique(col["match_importance"])) <= {0, 1, 2, 3}
    assert col["home_rest_time"].min() >= 0 and col["home_rest_time"].max() <= 7
    for side in ("home", "away"):
        assert col[f"{side}_win_percentage"].min() >= 0 and col[f"{side}_win_percentage"].max() <= 100
        assert np.abs(col[f"{side}_form"]).max() <= 3 + 1e-12
    assert set(np.unique(y)) == {0, 1}


def test_point_shift_moves_only_the_ema_point_features(league_matches):
    shifted = [dataclasses.replace(m, home_points=m.home_points + 7, away_points=m.away_points + 7) for m in league_matches]
    a, _ = feature_matrix(build_features(league_matches))
    b, _ = feature_matrix(build_features(shifted))
    moved = {"home_avg_points", "home_avg_points_conceded", "away_avg_points", "away_avg_points_conceded"}
    for i, name in enumerate(FEATURE_NAMES):
        if name in moved:
            continue
        np.testing.assert_array_equal(a[:, i], b[:, i], err_msg=name)


def test_csv_round_trip(tmp_path, league_features):
    path = tmp_path / "f.csv"
    write_features_csv(league_features, path)
    header = path.read_text().splitlines()[0].split(",")
    assert tuple(header) == FEATURE_CSV_COLUMNS
    assert read_features_csv(path) == league_features


def test_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("match_id,label\n")
    with pytest.raises(MalformedRow):
        read_features_csv(path)


@pytest.mark.parametrize("seed", [0, 5])
def test_replay_on_league_with_playoffs_and_seasons(seed):
    ms = generate_synthetic_league(LeagueConfig(n_teams=6, n_seasons=3, seed=seed))
    vectors = build_features(ms, alpha=0.35)
    for k in range(len(ms)):
        expected = replay_features(ms[:k], ms[k], 0.35, 6)
        assert all(math.isclose(u, v, abs_tol=1e-12) for u, v in zip(vectors[k].values, expected))
