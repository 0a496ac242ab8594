import json
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from tcr_journal import Journal, JournalConfig, Ledger
from tcr_journal.journal import CuratorOrigin

ROOT = Path(__file__).resolve().parent.parent
REFERENCE_SCENARIO = ROOT / "scenarios" / "reference.json"

_CRITERIA: dict[int, str] = {}


@contextmanager
def _criterion(number: int, name: str):
    info: dict = {}
    start = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        reason = str(exc).splitlines()[0] if str(exc) else ""
        _CRITERIA[number] = f"FAIL  {number:>2}. {name}  ({type(exc).__name__}: {reason})"
        raise
    took = info.get("note") or f"{time.perf_counter() - start:.2f}s"
    _CRITERIA[number] = f"PASS  {number:>2}. {name}  ({took})"


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion's pass/fail line."""
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])


@pytest.fixture
def ledger():
    return Ledger()


@pytest.fixture
def make_journal():
    """Build a journal plus ``n_curators`` granted curators and one funded author."""

    def build(n_curators=3, author_funds=300, **config):
        journal = Journal(JournalConfig(**config))
        curators = []
        for _ in range(n_curators):
            acct = journal.ledger.open_account()
            journal.grant_curatorship(acct, CuratorOrigin.GRANTED_EXPERT, now=0)
            curators.append(acct)
        author = journal.ledger.open_account()
        if author_funds:
            journal.ledger.purchase_tokens(author, author_funds, 1)
        return journal, curators, author

    return build


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        out[key] = _merge(out[key], value) if isinstance(value, dict) and isinstance(out.get(key), dict) else value
    return out


@pytest.fixture
def make_scenario():
    """Reference scenario document with nested overrides merged in."""

    def build(**overrides):
        return _merge(json.loads(REFERENCE_SCENARIO.read_text()), overrides)

    return build
