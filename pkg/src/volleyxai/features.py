"""Leakage-free feature engineering.

`build_features` walks the chronologically sorted matches once. For each
match it reads the per-team state accumulated from earlier matches, emits
the feature vector, and only then folds the match result into the state.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .data import RawMatch, Stage
from .errors import DataError, InvalidAlpha, MalformedRow, NegativeInterval

DEFAULT_ALPHA = 0.2
FORM_WINDOW = 5
MAX_REST_DAYS = 7

# Fixed column order, identical to the row order of the prototype table.
FEATURE_NAMES = (
    "away_current_position",
    "away_prev_season_position",
    "away_prev_game_performance",
    "away_avg_points",
    "away_avg_points_conceded",
    "away_away_form",
    "away_form",
    "away_win_percentage",
    "head_to_head_form",
    "home_current_position",
    "home_prev_season_position",
    "home_prev_game_performance",
    "home_avg_points",
    "home_avg_points_conceded",
    "home_form",
    "home_home_form",
    "home_rest_time",
    "home_win_percentage",
    "match_importance",
)

FEATURE_LABELS = {
    "away_current_position": "Away team's current position",
    "away_prev_season_position": "Away team's position in previous season",
    "away_prev_game_performance": "Away team's previous game performance",
    "away_avg_points": "Away team's average points",
    "away_avg_points_conceded": "Away team's average points conceded",
    "away_away_form": "Away team's away form",
    "away_form": "Away team's form",
    "away_win_percentage": "Away team's win percentage",
    "head_to_head_form": "Head to head form",
    "home_current_position": "Home team's current position",
    "home_prev_season_position": "Home team's position in previous season",
    "home_prev_game_performance": "Home team's previous game performance",
    "home_avg_points": "Home team's average points",
    "home_avg_points_conceded": "Home team's average points conceded",
    "home_form": "Home team's form",
    "home_home_form": "Home team's home form",
    "home_rest_time": "Home team's rest time",
    "home_win_percentage": "Home team's win percentage",
    "match_importance": "Match importance",
}

N_FEATURES = len(FEATURE_NAMES)
FEATURE_CSV_COLUMNS = ("match_id", "date", *FEATURE_NAMES, "label")

_IMPORTANCE = {
    Stage.LEAGUE: 0,
    Stage.QUARTER_FINAL: 1,
    Stage.SEMI_FINAL: 2,
    Stage.FINAL: 3,
}


def ema_update(previous: float | None, observation: float, alpha: float) -> float:
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha must be in (0, 1], got {alpha}")
    if previous is None:
        return float(observation)
    return alpha * observation + (1.0 - alpha) * previous


def compute_form(set_diffs: Iterable[float], alpha: float) -> float:
    """Exponential average of set differentials, folded oldest to newest."""
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha must be in (0, 1], got {alpha}")
    value = None
    for d in set_diffs:
        value = ema_update(value, d, alpha)
    return 0.0 if value is None else value


def rest_days(last_date: dt.date | None, match_date: dt.date) -> float:
    if last_date is None:
        return float(MAX_REST_DAYS)
    days = (match_date - last_date).days
    if days < 0:
        raise NegativeInterval(f"match on {match_date} precedes previous match on {last_date}")
    return float(min(days, MAX_REST_DAYS))


def match_importance(stage: Stage | str) -> int:
    return _IMPORTANCE[Stage(stage)]


@dataclass
class TeamState:
    matches_played: int = 0
    wins: int = 0
    ema_points_scored: float | None = None
    ema_points_conceded: float | None = None
    recent_set_diffs: deque = field(default_factory=lambda: deque(maxlen=FORM_WINDOW))
    home_set_diffs: deque = field(default_factory=lambda: deque(maxlen=FORM_WINDOW))
    away_set_diffs: deque = field(default_factory=lambda: deque(maxlen=FORM_WINDOW))
    current_rank: int = 1
    prev_season_rank: int = 1
    last_match_date: dt.date | None = None
    last_game_performance: float = 0.0
    # league-stage record for the current season's table
    league_wins: int = 0
    league_set_diff: int = 0

    def start_season(self, prev_rank: int) -> None:
        self.prev_season_rank = prev_rank
        self.matches_played = 0
        self.wins = 0
        self.league_wins = 0
        self.league_set_diff = 0
        self.recent_set_diffs.clear()
        self.home_set_diffs.clear()
        self.away_set_diffs.clear()
        self.last_match_date = None

    @property
    def win_percentage(self) -> float:
        if self.matches_played == 0:
            return 0.0
        return 100.0 * self.wins / self.matches_played


class HeadToHeadState:
    """EMA of set differential per unordered team pair.

    The stored value is oriented from the lexicographically smaller team's
    point of view, so ``get(a, b) == -get(b, a)`` always.
    """

    def __init__(self, alpha: float):
        self.alpha = alpha
        self._values: dict[tuple[str, str], float] = {}

    def get(self, team: str, opponent: str) -> float:
        key = (team, opponent) if team < opponent else (opponent, team)
        v = self._values.get(key, 0.0)
        return v if key[0] == team else -v

    def update(self, team: str, opponent: str, set_diff: float) -> None:
        key = (team, opponent) if team < opponent else (opponent, team)
        oriented = set_diff if key[0] == team else -set_diff
        prev = self._values.get(key)
        self._values[key] = ema_update(prev, oriented, self.alpha)


@dataclass(frozen=True)
class FeatureVector:
    match_id: str
    date: dt.date
    values: tuple[float, ...]
    label: int

    def __post_init__(self):
        if len(self.values) != N_FEATURES:
            raise DataError(f"expected {N_FEATURES} features, got {len(self.values)}")

    def __getitem__(self, name: str) -> float:
        return self.values[FEATURE_NAMES.index(name)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.values))


class _LeagueTable:
    def __init__(self):
        self.members: list[str] = []

    def add(self, team: str) -> None:
        if team not in self.members:
            self.members.append(team)

    def ranks(self, states: dict[str, TeamState]) -> dict[str, int]:
        order = sorted(
            self.members,
            key=lambda t: (-states[t].league_wins, -states[t].league_set_diff, t),
        )
        return {t: i + 1 for i, t in enumerate(order)}


def build_features(
    matches: Sequence[RawMatch],
    alpha: float = DEFAULT_ALPHA,
    n_teams: int | None = None,
) -> list[FeatureVector]:
    """Turn a chronological match list into one feature vector per match.

    ``n_teams`` sets the sentinel used for a team without a previous-season
    rank (``n_teams + 1``). It defaults to the number of distinct teams in
    ``matches``; pass it explicitly when featurizing a prefix so the
    sentinel agrees with the full run.
    """
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha must be in (0, 1], got {alpha}")
    for a, b in zip(matches, matches[1:]):
        if a.date > b.date:
            raise DataError(f"matches not sorted by date at {b.match_id!r}")
    if n_teams is None:
        n_teams = len({t for m in matches for t in (m.home_team, m.away_team)})
    sentinel = n_teams + 1

    states: dict[str, TeamState] = {}
    h2h = HeadToHeadState(alpha)
    table = _LeagueTable()
    final_ranks: dict[str, int] = {}
    season = None
    out: list[FeatureVector] = []

    for m in matches:
        if m.season != season:
            if season is not None:
                final_ranks = table.ranks(states)
            season = m.season
            table = _LeagueTable()
            for team, st in states.items():
                st.start_season(final_ranks.get(team, sentinel))
        for team in (m.home_team, m.away_team):
            if team not in states:
                st = TeamState()
                st.start_season(final_ranks.get(team, sentinel))
                states[team] = st
            table.add(team)

        ranks = table.ranks(states)
        home, away = states[m.home_team], states[m.away_team]
        values = (
            float(ranks[m.away_team]),
            float(away.prev_season_rank),
            float(away.last_game_performance),
            _ema_or_zero(away.ema_points_scored),
            _ema_or_zero(away.ema_points_conceded),
            compute_form(away.away_set_diffs, alpha),
            compute_form(away.recent_set_diffs, alpha),
            away.win_percentage,
            h2h.get(m.home_team, m.away_team),
            float(ranks[m.home_team]),
            float(home.prev_season_rank),
            float(home.last_game_performance),
            _ema_or_zero(home.ema_points_scored),
            _ema_or_zero(home.ema_points_conceded),
            compute_form(home.recent_set_diffs, alpha),
            compute_form(home.home_set_diffs, alpha),
            rest_days(home.last_match_date, m.date),
            home.win_percentage,
            float(match_importance(m.stage)),
        )
        out.append(FeatureVector(m.match_id, m.date, values, int(m.home_won)))

        # fold the result in only after the vector is emitted
        diff = m.home_sets - m.away_sets
        _record(home, m, diff, m.home_points, m.away_points, alpha, at_home=True)
        _record(away, m, -diff, m.away_points, m.home_points, alpha, at_home=False)
        h2h.update(m.home_team, m.away_team, diff)
        if m.stage == Stage.LEAGUE:
            home.league_set_diff += diff
            away.league_set_diff -= diff
            if m.home_won:
                home.league_wins += 1
            else:
                away.league_wins += 1
        for team, r in table.ranks(states).items():
            states[team].current_rank = r
    return out


def _ema_or_zero(v: float | None) -> float:
    return 0.0 if v is None else float(v)


def _record(st: TeamState, m: RawMatch, diff, scored, conceded, alpha, at_home: bool) -> None:
    st.matches_played += 1
    if diff > 0:
        st.wins += 1
    st.ema_points_scored = ema_update(st.ema_points_scored, scored, alpha)
    st.ema_points_conceded = ema_update(st.ema_points_conceded, conceded, alpha)
    st.recent_set_diffs.append(diff)
    (st.home_set_diffs if at_home else st.away_set_diffs).append(diff)
    st.last_match_date = m.date
    st.last_game_performance = float(diff)


def feature_matrix(vectors: Sequence[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([v.values for v in vectors], dtype=float).reshape(len(vectors), N_FEATURES)
    y = np.array([v.label for v in vectors], dtype=int)
    return X, y


def write_features_csv(vectors: Iterable[FeatureVector], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_CSV_COLUMNS)
        for v in vectors:
            w.writerow([v.match_id, v.date.isoformat(), *(repr(float(x)) for x in v.values), v.label])


def read_features_csv(path) -> list[FeatureVector]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FEATURE_CSV_COLUMNS:
            raise MalformedRow(1, "feature CSV header does not match the fixed column order")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(FEATURE_CSV_COLUMNS):
                raise MalformedRow(lineno, "wrong number of fields")
            try:
                values = tuple(float(x) for x in row[2:-1])
                label = int(row[-1])
                date = dt.date.fromisoformat(row[1])
            except ValueError as exc:
                raise MalformedRow(lineno, str(exc)) from None
            if not all(math.isfinite(x) for x in values) or label not in (0, 1):
                raise MalformedRow(lineno, "non-finite feature or label outside {0,1}")
            out.append(FeatureVector(row[0], date, values, label))
    return out
