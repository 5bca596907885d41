"""Match records: CSV ingestion, a synthetic league generator and the
chronological train/test split."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TypeVar

import numpy as np

from .errors import DegenerateSplit, InvalidConfig, InvariantViolation, MalformedRow

CSV_COLUMNS = (
    "match_id",
    "date",
    "season",
    "home_team",
    "away_team",
    "home_sets",
    "away_sets",
    "home_points",
    "away_points",
    "stage",
)


class Stage(str, enum.Enum):
    LEAGUE = "League"
    QUARTER_FINAL = "QuarterFinal"
    SEMI_FINAL = "SemiFinal"
    FINAL = "Final"


@dataclass(frozen=True)
class RawMatch:
    match_id: str
    date: dt.date
    season: str
    home_team: str
    away_team: str
    home_sets: int
    away_sets: int
    home_points: int
    away_points: int
    stage: Stage = Stage.LEAGUE

    def __post_init__(self):
        problem = _invariant_problem(self)
        if problem:
            raise InvariantViolation(f"match {self.match_id!r}: {problem}")

    @property
    def home_won(self) -> bool:
        return self.home_sets == 3

    def as_row(self) -> list[str]:
        return [
            self.match_id,
            self.date.isoformat(),
            self.season,
            self.home_team,
            self.away_team,
            str(self.home_sets),
            str(self.away_sets),
            str(self.home_points),
            str(self.away_points),
            self.stage.value,
        ]


def _invariant_problem(m: RawMatch) -> str | None:
    for name in ("home_sets", "away_sets"):
        v = getattr(m, name)
        if not 0 <= v <= 3:
            return f"{name}={v} outside 0..3"
    if (m.home_sets == 3) == (m.away_sets == 3):
        return f"impossible set score {m.home_sets}-{m.away_sets}: exactly one side must win 3 sets"
    if m.home_team == m.away_team:
        return f"team {m.home_team!r} plays itself"
    if m.home_points <= 0 or m.away_points <= 0:
        return "point totals must be positive"
    return None


def sort_matches(matches: Iterable[RawMatch]) -> list[RawMatch]:
    return sorted(matches, key=lambda m: (m.date, m.match_id))


def parse_matches_csv(path) -> list[RawMatch]:
    """Read matches from a CSV file and return them in chronological order.

    Raises `MalformedRow` for schema problems and `InvariantViolation` for
    rows that parse but describe an impossible match.
    """
    out: list[RawMatch] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "missing header") from None
        header = [h.strip() for h in header]
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise MalformedRow(1, f"header lacks columns {missing}")
        idx = {c: header.index(c) for c in CSV_COLUMNS}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise MalformedRow(lineno, f"expected {len(header)} fields, got {len(row)}")
            get = lambda c: row[idx[c]].strip()  # noqa: E731
            try:
                date = dt.date.fromisoformat(get("date"))
            except ValueError:
                raise MalformedRow(lineno, f"bad date {get('date')!r}") from None
            ints = {}
            for c in ("home_sets", "away_sets", "home_points", "away_points"):
                try:
                    ints[c] = int(get(c))
                except ValueError:
                    raise MalformedRow(lineno, f"{c} is not an integer: {get(c)!r}") from None
            try:
                stage = Stage(get("stage"))
            except ValueError:
                raise MalformedRow(lineno, f"unknown stage {get('stage')!r}") from None
            match_id = get("match_id")
            if not match_id:
                raise MalformedRow(lineno, "empty match_id")
            if match_id in seen:
                raise InvariantViolation(f"line {lineno}: duplicate match_id {match_id!r}")
            seen.add(match_id)
            try:
                m = RawMatch(
                    match_id=match_id,
                    date=date,
                    season=get("season"),
                    home_team=get("home_team"),
                    away_team=get("away_team"),
                    stage=stage,
                    **ints,
                )
            except InvariantViolation as exc:
                raise InvariantViolation(f"line {lineno}: {exc}") from None
            out.append(m)
    return sort_matches(out)


def write_matches_csv(matches: Iterable[RawMatch], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for m in matches:
            writer.writerow(m.as_row())


# ---------------------------------------------------------------------------
# Synthetic league
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeagueConfig:
    n_teams: int = 12
    n_seasons: int = 3
    home_advantage: float = 0.3
    strength_spread: float = 1.0
    drift: float = 0.3
    seed: int = 0
    first_year: int = 2010

    def validate(self) -> None:
        if self.n_teams < 4:
            raise InvalidConfig(f"n_teams must be >= 4, got {self.n_teams}")
        if self.n_seasons < 1:
            raise InvalidConfig(f"n_seasons must be >= 1, got {self.n_seasons}")
        for name in ("home_advantage", "strength_spread", "drift"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidConfig(f"{name} must be finite")
        if self.strength_spread <= 0:
            raise InvalidConfig("strength_spread must be > 0")
        if self.drift < 0:
            raise InvalidConfig("drift must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")


def season_tag(year: int) -> str:
    return f"{year}-{(year + 1) % 100:02d}"


def round_robin_rounds(n: int) -> list[list[tuple[int, int]]]:
    """Circle-method schedule: a list of rounds of (home, away) index pairs.

    Every team meets every other team once at home and once away. With an
    odd team count one team sits out each round.
    """
    teams: list[int | None] = list(range(n))
    if n % 2:
        teams.append(None)
    k = len(teams)
    first_half = []
    for r in range(k - 1):
        pairs = []
        for i in range(k // 2):
            a, b = teams[i], teams[k - 1 - i]
            if a is None or b is None:
                continue
            # alternate the pivot's venue so home games are spread evenly
            if (i == 0 and r % 2) or (i > 0 and i % 2):
                a, b = b, a
            pairs.append((a, b))
        first_half.append(pairs)
        teams = [teams[0], teams[-1], *teams[1:-1]]
    second_half = [[(b, a) for a, b in rnd] for rnd in first_half]
    return first_half + second_half


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _play(rng: np.random.Generator, home_edge: float) -> tuple[int, int, int, int]:
    """Sample (home_sets, away_sets, home_points, away_points)."""
    home_wins = rng.random() < _sigmoid(home_edge)
    gap = home_edge if home_wins else -home_edge
    # larger winner edge -> more lopsided scorelines
    logits = 0.5 * gap * np.array([1.0, 0.0, -1.0])
    probs = np.exp(logits - logits.max())
    probs /= probs.sum()
    loser_sets = int(rng.choice(3, p=probs))
    n_sets = 3 + loser_sets
    loser_set_idx = set(rng.choice(n_sets - 1, size=loser_sets, replace=False).tolist())
    w_pts = l_pts = 0
    for s in range(n_sets):
        deciding = s == 4
        win_pts = 15 if deciding else 25
        lose_pts = int(rng.integers(5, 14)) if deciding else int(rng.integers(15, 24))
        if s in loser_set_idx:
            w_pts += lose_pts
            l_pts += win_pts
        else:
            w_pts += win_pts
            l_pts += lose_pts
    if home_wins:
        return 3, loser_sets, w_pts, l_pts
    return loser_sets, 3, l_pts, w_pts


def _standings(names, results) -> list[int]:
    """Team indices ordered by wins, then set differential, then name."""
    wins = {i: 0 for i in range(len(names))}
    sdiff = {i: 0 for i in range(len(names))}
    for h, a, hs, as_ in results:
        if hs == 3:
            wins[h] += 1
        else:
            wins[a] += 1
        sdiff[h] += hs - as_
        sdiff[a] += as_ - hs
    return sorted(range(len(names)), key=lambda i: (-wins[i], -sdiff[i], names[i]))


def simulate_league(config: LeagueConfig) -> tuple[list[RawMatch], np.ndarray]:
    """Generate a league and return it with the latent strengths.

    The strength array has shape (n_seasons, n_teams).
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.n_teams
    names = [f"Team {i + 1:02d}" for i in range(n)]
    strengths = np.empty((config.n_seasons, n))
    strengths[0] = rng.normal(0.0, config.strength_spread, n)
    for s in range(1, config.n_seasons):
        strengths[s] = strengths[s - 1] + rng.normal(0.0, config.drift, n)

    rounds = round_robin_rounds(n)
    matches: list[RawMatch] = []

    def play(tag, mid, date, stage, h, a, season_idx):
        edge = strengths[season_idx, h] + config.home_advantage - strengths[season_idx, a]
        hs, as_, hp, ap = _play(rng, edge)
        matches.append(
            RawMatch(mid, date, tag, names[h], names[a], hs, as_, hp, ap, stage)
        )
        return h, a, hs, as_

    for s in range(config.n_seasons):
        year = config.first_year + s
        tag = season_tag(year)
        start = dt.date(year, 10, 1)
        results = []
        for r, pairs in enumerate(rounds):
            date = start + dt.timedelta(weeks=r)
            for k, (h, a) in enumerate(pairs):
                results.append(play(tag, f"{tag}-L{r + 1:02d}-{k + 1:02d}", date, Stage.LEAGUE, h, a, s))
        table = _standings(names, results)
        date = start + dt.timedelta(weeks=len(rounds) - 1)

        size = 8 if n >= 8 else 4
        seeds = table[:size]
        stages = [Stage.QUARTER_FINAL, Stage.SEMI_FINAL, Stage.FINAL]
        if size == 4:
            stages = stages[1:]
        labels = {Stage.QUARTER_FINAL: "QF", Stage.SEMI_FINAL: "SF", Stage.FINAL: "F"}
        for stage in stages:
            date = date + dt.timedelta(days=3)
            nxt = []
            half = len(seeds) // 2
            for k in range(half):
                # better seed hosts
                h, a = seeds[k], seeds[len(seeds) - 1 - k]
                hh, aa, hs, _ = play(tag, f"{tag}-{labels[stage]}-{k + 1}", date, stage, h, a, s)
                nxt.append(hh if hs == 3 else aa)
            seeds = nxt
    return sort_matches(matches), strengths


def generate_synthetic_league(config: LeagueConfig) -> list[RawMatch]:
    """Deterministic synthetic league for a given config (see `simulate_league`)."""
    return simulate_league(config)[0]


# ---------------------------------------------------------------------------
# Split
# ---------------------------------------------------------------------------

T = TypeVar("T")


def chronological_split(items: Sequence[T], test_fraction: float = 0.2) -> tuple[list[T], list[T]]:
    """Hold out the last ``ceil(n * test_fraction)`` items as the test set."""
    if not 0 < test_fraction < 1:
        raise DegenerateSplit(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = len(items)
    # guard against 0.2 * 100 = 20.000000000000004
    n_test = math.ceil(round(n * test_fraction, 9))
    if n_test < 1 or n_test >= n:
        raise DegenerateSplit(f"{n} items with test_fraction={test_fraction} leaves an empty side")
    dates = [getattr(x, "date", None) for x in items]
    if all(d is not None for d in dates) and any(a > b for a, b in zip(dates, dates[1:])):
        raise DegenerateSplit("items are not in chronological order")
    items = list(items)
    return items[: n - n_test], items[n - n_test :]
