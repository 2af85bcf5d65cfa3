from __future__ import annotations

from importlib import resources

import pytest

from iosa.compose import compose_many
from iosa.parse import ModelFile, parse_model
from iosa.wellformed import canonicalize


def model_text(name: str) -> str:
    return resources.files("iosa").joinpath("models", name).read_text(encoding="utf-8")


def load(name: str) -> ModelFile:
    return parse_model(model_text(name + ".iosa"))


def components(name: str):
    return [canonicalize(a) for a in load(name).system_automata()]


def system(name: str):
    return compose_many(components(name))


BUNDLED = ["fig2", "fig4", "fig6", "expo", "race", "nonconfluent", "circuit"]


@pytest.fixture
def fig2():
    return load("fig2")


@pytest.fixture
def fig3():
    return system("fig2")


@pytest.fixture
def fig4():
    return system("fig4")


# acceptance reporting: one PASS/FAIL line per criterion in the summary

_CRITERIA: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        _CRITERIA.append((marker.args[0], "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for title, verdict in _CRITERIA:
        terminalreporter.write_line(f"{verdict}  {title}")
