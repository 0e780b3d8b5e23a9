from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance_results: dict[str, tuple[str, str]] = {}


@pytest.fixture
def corpus_path() -> Path:
    return FIXTURES / "corpus.xml"


@pytest.fixture
def resolver_path() -> Path:
    return FIXTURES / "resolver.jsonl"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0] if marker.args else item.name
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        prev = _acceptance_results.get(item.nodeid)
        status = "PASS" if rep.passed else "FAIL"
        if prev is None or prev[1] == "PASS":
            _acceptance_results[item.nodeid] = (label, status)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    per_label: dict[str, str] = {}
    for label, status in _acceptance_results.values():
        if per_label.get(label) != "FAIL":
            per_label[label] = status
    for label in sorted(per_label):
        terminalreporter.write_line(f"{per_label[label]}  {label}")
