"""Shared fixtures: the IEEE-30 units, one cached run per preset and trace corruption."""

import pytest

from integrate.runner import run
from tools.presets import get_preset, ieee30_units


@pytest.fixture
def units():
    return ieee30_units()


@pytest.fixture(scope="session")
def preset_run():
    """Run a preset once per session; returns (scenario, trace)."""
    cache = {}

    def _run(name):
        if name not in cache:
            scenario = get_preset(name)
            cache[name] = (scenario, run(scenario))
        return cache[name]

    return _run


@pytest.fixture
def lower_weight():
    """Rewrite one data row of a trace CSV so a weight column drops below the previous row."""

    def _lower(path, column="a_1-2", row=2):
        with open(path, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        start = next(k for k, line in enumerate(lines) if not line.startswith("#"))
        columns = lines[start].split(",")
        k = columns.index(column)
        previous = lines[start + row - 1].split(",")
        target = lines[start + row].split(",")
        target[k] = format(float(previous[k]) - 1.0, ".12g")
        lines[start + row] = ",".join(target)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")

    return _lower
