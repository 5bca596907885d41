import numpy as np
import pytest

from volleyxai.data import LeagueConfig, generate_synthetic_league
from volleyxai.features import build_features
from volleyxai.pipeline import RunConfig, run_pipeline


@pytest.fixture(scope="session")
def league_matches():
    return generate_synthetic_league(LeagueConfig(n_teams=8, n_seasons=3, seed=11))


@pytest.fixture(scope="session")
def league_features(league_matches):
    return build_features(league_matches)


@pytest.fixture(scope="session")
def finished_run(tmp_path_factory):
    """A complete pipeline run on a small league, shared by CLI tests."""
    out = tmp_path_factory.mktemp("run")
    cfg = RunConfig(teams=8, seasons=3, seed=3, svm_epochs=60, mlp_epochs=200, n_coalitions=512)
    result = run_pipeline(cfg, out, echo=lambda *_: None)
    return out, result


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}  {title}  {detail}".rstrip())
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
