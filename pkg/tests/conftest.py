import json
from pathlib import Path

import pytest

from concept_activation import load_graph

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def mini_graph():
    return load_graph(FIXTURES / "mini_kg.jsonl")


@pytest.fixture(scope="session")
def synthetic_graph():
    return load_graph(FIXTURES / "synthetic_kg.jsonl")


@pytest.fixture
def write_kg(tmp_path):
    """Write a list of records (or raw lines) to a JSONL file and return its path."""

    def _write(records, name="kg.jsonl"):
        path = tmp_path / name
        lines = [r if isinstance(r, str) else json.dumps(r) for r in records]
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        return path

    return _write


def concept(cid, name, **extra):
    rec = {"layer": "concept", "id": cid, "name": name}
    rec.update(extra)
    return rec


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(RESULTS):
        terminalreporter.write_line(line)
