"""Shared fixtures: the La Liga table and its four constraints.

The expected clean table below is the frozen oracle for the built-in
repairer on that fixture: rule C1 rewrites t5[City] "Capital" to the
Real Madrid city mode "Madrid", then rule C2 rewrites t5[Country]
"España" to the Madrid country mode "Spain". Nothing else moves.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from repairlens import parse_constraints, parse_table

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "laliga"

LALIGA_CLEAN_CSV = """\
Team,City,Country,League,Year,Place
Barcelona,Barcelona,Spain,La Liga,2019,1
Atletico Madrid,Madrid,Spain,La Liga,2019,3
Real Madrid,Madrid,Spain,La Liga,2019,2
Liverpool,Liverpool,England,Premier League,2019,1
Real Madrid,Madrid,Spain,La Liga,2018,1
Real Madrid,Madrid,Spain,La Liga,2017,1
"""


@pytest.fixture(scope="session")
def laliga_csv() -> str:
    return (FIXTURE_DIR / "dirty.csv").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def laliga_dc_text() -> str:
    return (FIXTURE_DIR / "constraints.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def laliga_table(laliga_csv):
    return parse_table(laliga_csv)


@pytest.fixture(scope="session")
def laliga_dcs(laliga_dc_text):
    return tuple(parse_constraints(laliga_dc_text))


@pytest.fixture(scope="session")
def laliga_clean():
    return parse_table(LALIGA_CLEAN_CSV)
