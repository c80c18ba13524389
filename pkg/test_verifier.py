from dataclasses import replace

import numpy as np
import pytest

from dynamics.state import ProtocolSpec, ProtocolVariant
from integrate.config import IntegratorConfig
from integrate.runner import run
from models.errors import MismatchError
from models.generator import GeneratorParams
from services.verifier import verify
from tools.scenario_loader import Scenario, TopologyConfig
from tools.trace_writer import read_trace, write_trace


def _scenario(c=0.5):
    return Scenario(
        name="two_agent_u",
        generators=[GeneratorParams(b=1.0, c=c, p_min=0.0, p_max=20.0)] * 2,
        protocol=ProtocolSpec(variant=ProtocolVariant.U),
        topology=TopologyConfig(topologies=[[(0, 1)]]),
        initial_powers=[0.0, 2.0],
        integrator=IntegratorConfig(h=1e-2, t_max=20.0, stop_tol=1e-8, record_every=10),
    )


@pytest.fixture
def written(tmp_path):
    scenario = _scenario()
    path = str(tmp_path / "trace.csv")
    write_trace(run(scenario), path)
    return scenario, path


def _check(report, name):
    return next(check for check in report.checks if check.name == name)


def test_clean_trace_passes(written):
    scenario, path = written
    report = verify(scenario, read_trace(path))
    assert report.passed, report.render()
    assert _check(report, "fingerprint").detail == "trace matches the scenario"


def test_corrupted_weight_column_is_a_monotonicity_failure(written, lower_weight):
    scenario, path = written
    lower_weight(path)
    report = verify(scenario, read_trace(path))
    check = _check(report, "weight_monotonicity")
    assert not check.passed
    assert check.detail.startswith("1 decrease(s)")
    assert [failure.split(":")[0] for failure in report.failures] == ["weight_monotonicity"]
    with pytest.raises(MismatchError, match="weight_monotonicity"):
        report.raise_for_failures()


def test_trace_from_another_scenario_fails_the_fingerprint_check(written):
    _, path = written
    report = verify(_scenario(c=0.25), read_trace(path))
    assert not _check(report, "fingerprint").passed


def test_integrator_and_name_changes_keep_the_fingerprint_check_passing(written):
    scenario, path = written
    trace = read_trace(path)
    integrator = scenario.integrator.model_copy(update={"h": 5e-3})
    renamed = scenario.model_copy(update={"name": "renamed", "integrator": integrator})
    check = _check(verify(renamed, trace), "fingerprint")
    assert check.passed
    assert "integrator settings differ" in check.detail


def test_trace_without_fingerprint_is_only_a_diagnostic(written):
    scenario, path = written
    trace = read_trace(path)
    trace.fingerprint = ""
    trace.system_fingerprint = ""
    report = verify(scenario, trace)
    assert "fingerprint" not in {check.name for check in report.checks}
    assert "trace carries no scenario fingerprint" in report.diagnostics


def test_weight_increase_alone_is_not_a_failure(written):
    scenario, path = written
    trace = read_trace(path)
    trace.records[1:] = [replace(record, weights=record.weights + 1.0) for record in trace.records[1:]]
    assert _check(verify(scenario, trace), "weight_monotonicity").passed
    assert np.all(np.diff(trace.column("weights"), axis=0) >= 0)
