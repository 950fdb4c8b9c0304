import os
from pathlib import Path

import pytest

from llmconfound import Condition, ScoreStore, fetch_scores, synthetic_cohort
from llmconfound.llm_features import MockProvider

ROOT = Path(__file__).resolve().parent.parent

TWO_ROW_CSV = (
    "Age,BMI,Glucose,Insulin,HOMA,Leptin,Adiponectin,Resistin,MCP.1,Classification\n"
    "48,23.5,70,2.707,0.467409,8.8071,9.7024,7.99585,417.114,1\n"
    "83,20.69049454,92,3.115,0.706897333,8.8438,5.429285,4.06405,468.786,2\n"
)


def coimbra_path():
    """Location of the public UCI Coimbra CSV, if one has been supplied."""
    candidates = [os.environ.get("COIMBRA_CSV"), ROOT / "data" / "dataR2.csv", ROOT / "tests" / "data" / "dataR2.csv"]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None


@pytest.fixture
def two_row_csv(tmp_path):
    path = tmp_path / "two.csv"
    path.write_text(TWO_ROW_CSV)
    return path


@pytest.fixture(scope="session")
def cohort():
    return synthetic_cohort(seed=0)


@pytest.fixture(scope="session")
def mock_store(cohort):
    store = ScoreStore()
    fetch_scores(cohort, list(Condition), MockProvider(), store)
    return store


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" in getattr(rep, "nodeid", "") and rep.when == "call":
                lines.append((rep.nodeid.split("::")[-1], outcome))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(lines):
            terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
