from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from tieqviet.oracle import Lexicon
from tieqviet.text import read_lines

DATA = Path(str(resources.files("tieqviet") / "data"))


@pytest.fixture(scope="session")
def corpus() -> list[str]:
    return read_lines(DATA / "corpus_vi.txt")


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return Lexicon.from_file(DATA / "lexicon_vi.tsv")


# One line per acceptance criterion, reported in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
