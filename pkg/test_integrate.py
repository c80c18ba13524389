import io
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
import hypothesis.strategies as st

from dynamics.state import Event, ProtocolSpec, ProtocolVariant
from integrate.config import IntegratorConfig
from integrate.rk4 import rk4, step
from integrate.runner import run
from models.errors import DomainError, SingularityError
from models.generator import BarrierConfig, GeneratorParams
from network.topology import SwitchMode
from services.verifier import verify
from tools.scenario_loader import DummyConfig, Scenario, TopologyConfig
from tools.trace_writer import write_trace


def _unit(b=1.0, c=0.5, lo=0.0, hi=20.0):
    return GeneratorParams(b=b, c=c, p_min=lo, p_max=hi)


def _u_scenario(p0, edges, units=None, **integrator):
    values = dict(h=1e-2, t_max=20.0, stop_tol=1e-8, record_every=10)
    values.update(integrator)
    return Scenario(
        name="small_u",
        generators=units or [_unit() for _ in p0],
        protocol=ProtocolSpec(variant=ProtocolVariant.U),
        topology=TopologyConfig(topologies=[edges]),
        initial_powers=list(p0),
        integrator=IntegratorConfig(**values),
    )


def _d_scenario(**integrator):
    values = dict(h=1e-2, t_max=3.0, stop_tol=1e-3, record_every=10)
    values.update(integrator)
    return Scenario(
        name="small_d",
        generators=[_unit(c=0.1), _unit(c=0.1)],
        protocol=ProtocolSpec(variant=ProtocolVariant.D, barrier=BarrierConfig(delta=0.1)),
        topology=TopologyConfig(topologies=[[(0, 1)]]),
        initial_powers=[8.0, 12.0],
        local_demands=[10.0, 14.0],
        dummy=DummyConfig(b=0.0, c=0.1),
        events=[Event(at=1.0, total=4.0)],
        integrator=IntegratorConfig(**values),
    )


def test_rk4_decay_accuracy():
    y = rk4(lambda t, y: -y, 0.0, np.array([1.0]), 0.1)
    assert abs(y[0] - math.exp(-0.1)) < 1e-7


def test_rk4_zero_rhs_keeps_state():
    y0 = np.array([1.5, -2.0, 3.0])
    y, rejected = step(0.0, y0, lambda t, y: np.zeros_like(y), 0.5)
    np.testing.assert_array_equal(y, y0)
    assert rejected == 0


def test_rejected_step_is_covered_by_two_half_steps():
    calls = []

    def validate(y):
        calls.append(y)
        if len(calls) == 1:
            raise DomainError("first attempt rejected")

    rhs = lambda t, y: -y
    y0 = np.array([2.0])
    y, rejected = step(0.0, y0, rhs, 0.2, validate)
    expected = rk4(rhs, 0.1, rk4(rhs, 0.0, y0, 0.1), 0.1)
    assert rejected == 1
    np.testing.assert_allclose(y, expected, rtol=1e-15)


def test_step_gives_up_after_max_halvings():
    def validate(y):
        raise DomainError("always outside")

    with pytest.raises(SingularityError):
        step(0.0, np.array([1.0]), lambda t, y: -y, 0.1, validate, max_halvings=2)


def test_two_agent_unconstrained_run_conserves_mean_cost():
    trace = run(_u_scenario([0.0, 2.0], [(0, 1)]))
    w = trace.column("w")
    np.testing.assert_allclose(w.mean(axis=1), 2.0, atol=1e-10)
    assert trace.summary.converged
    np.testing.assert_allclose(trace.final.p, [1.0, 1.0], atol=1e-6)


def test_run_that_starts_at_consensus_stops_immediately():
    trace = run(_u_scenario([1.0, 1.0, 1.0], [(0, 1), (1, 2)]))
    assert len(trace.records) == 1
    assert trace.summary.converged
    assert trace.summary.final_time == 0.0


def test_isolated_agent_keeps_its_cost():
    trace = run(_u_scenario([0.0, 2.0, 7.0], [(0, 1)], t_max=5.0))
    np.testing.assert_allclose(trace.column("w")[:, 2], 8.0)


def test_switch_records_land_on_dwell_boundaries():
    scenario = Scenario(
        name="small_switching",
        generators=[_unit() for _ in range(3)],
        protocol=ProtocolSpec(variant=ProtocolVariant.U),
        topology=TopologyConfig(mode=SwitchMode.CYCLIC, dwell=0.25, topologies=[[(0, 1), (1, 2)], [(0, 2), (1, 2)]]),
        initial_powers=[0.0, 1.0, 2.0],
        integrator=IntegratorConfig(h=0.01, t_max=2.0, stop_tol=1e-12, record_every=1000),
    )
    trace = run(scenario)
    assert trace.summary.switches >= 4
    boundaries = {k * 0.25 for k in range(1, 9)}
    changes = [b for a, b in zip(trace.records, trace.records[1:]) if a.topology_index != b.topology_index]
    assert changes
    for record in changes:
        assert record.t in boundaries
        assert record.topology_index == int(round(record.t / 0.25)) % 2


def test_event_records_state_before_and_after_injection():
    trace = run(_d_scenario())
    times = trace.column("t")
    assert np.all(np.diff(times) >= 0)
    pre, post = [r for r in trace.records if r.t == 1.0]
    assert post.sum_p - pre.sum_p == pytest.approx(4.0, abs=1e-9)
    np.testing.assert_array_equal(pre.weights, post.weights)
    np.testing.assert_array_equal(pre.p[:2], post.p[:2])
    np.testing.assert_allclose(post.p[2:] - pre.p[2:], [2.0, 2.0])

    before, after = trace.segments()
    np.testing.assert_allclose([r.sum_p for r in before], 24.0, atol=1e-9)
    np.testing.assert_allclose([r.sum_p for r in after], 28.0, atol=1e-9)
    assert trace.summary.demand == pytest.approx(28.0)


def test_stop_rule_waits_for_pending_events():
    trace = run(_d_scenario(stop_tol=1e3))
    assert trace.summary.converged
    assert trace.summary.final_time == 1.0
    assert len(trace.segments()) == 2


def test_identical_runs_give_identical_csv():
    texts = []
    for _ in range(2):
        buffer = io.StringIO()
        trace = run(_d_scenario(t_max=1.5))
        write_trace(trace, buffer)
        texts.append(buffer.getvalue())
    assert texts[0] == texts[1]


@st.composite
def unconstrained_instances(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    order = draw(st.permutations(range(n)))
    edges = {tuple(sorted((order[k], order[k + 1]))) for k in range(n - 1)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=4))
    edges |= {tuple(sorted(pair)) for pair in extra if pair[0] != pair[1]}
    units = [
        _unit(b=draw(st.floats(1.0, 2.0)), c=draw(st.floats(0.001, 0.01)), hi=200.0)
        for _ in range(n)
    ]
    p0 = draw(st.lists(st.floats(10.0, 100.0), min_size=n, max_size=n))
    return _u_scenario(p0, sorted(edges), units=units, t_max=5.0, record_every=20)


@given(unconstrained_instances())
@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_random_unconstrained_runs(scenario):
    trace = run(scenario)
    weights = trace.column("weights")
    assert np.all(np.diff(weights, axis=0) >= -1e-12)
    w = trace.column("w")
    assert np.allclose(w.mean(axis=1), w[0].mean(), atol=1e-9)
    assert trace.final.disagreement <= trace.records[0].disagreement + 1e-12


INVARIANT_CHECKS = {"limits", "power_balance", "weight_monotonicity", "lyapunov_nonincrease"}


def _barrier_scenario(variant, units, p0, edges, local_demands=None, events=(), t_max=4.0):
    return Scenario(
        name=f"random_{variant.value.lower()}",
        generators=units,
        protocol=ProtocolSpec(variant=variant, beta=100.0, barrier=BarrierConfig(delta=10.0)),
        topology=TopologyConfig(topologies=[edges]),
        initial_powers=list(p0),
        demand=sum(p0) if variant == ProtocolVariant.C else None,
        local_demands=local_demands,
        dummy=DummyConfig(b=0.0, c=0.1),
        events=list(events),
        integrator=IntegratorConfig(h=2e-3, t_max=t_max, stop_tol=1e-6, record_every=25),
    )


def _assert_invariants(scenario, trace):
    report = verify(scenario, trace)
    checks = {check.name: check for check in report.checks}
    assert INVARIANT_CHECKS <= set(checks)
    for name in INVARIANT_CHECKS:
        assert checks[name].passed, report.render()
    for check in report.checks:
        if check.name == "event_jump":
            assert check.passed, report.render()


@st.composite
def barrier_instances(draw, variant):
    n = draw(st.integers(min_value=2, max_value=8))
    order = draw(st.permutations(range(n)))
    edges = {tuple(sorted((order[k], order[k + 1]))) for k in range(n - 1)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=6))
    edges |= {tuple(sorted(pair)) for pair in extra if pair[0] != pair[1]}
    units, p0 = [], []
    for _ in range(n):
        lo = draw(st.floats(5.0, 50.0))
        hi = lo + draw(st.floats(50.0, 200.0))
        units.append(_unit(b=draw(st.floats(1.5, 3.5)), c=draw(st.floats(0.01, 0.05)), lo=lo, hi=hi))
        p0.append(lo + draw(st.floats(0.2, 0.8)) * (hi - lo))
    if variant == ProtocolVariant.C:
        return _barrier_scenario(variant, units, p0, sorted(edges))
    local = [p + draw(st.floats(10.0, 60.0)) for p in p0]
    events = [Event(at=1.0, total=draw(st.floats(1.0, 20.0)))] if draw(st.booleans()) else []
    return _barrier_scenario(variant, units, p0, sorted(edges), local_demands=local, events=events)


@given(barrier_instances(ProtocolVariant.C))
@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_random_constrained_runs_keep_the_invariants(scenario):
    trace = run(scenario)
    _assert_invariants(scenario, trace)
    w = trace.column("w")
    assert np.all(np.diff(w.max(axis=1) - w.min(axis=1)) <= 1e-8)


@given(barrier_instances(ProtocolVariant.D))
@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_random_dummy_runs_keep_the_invariants(scenario):
    trace = run(scenario)
    _assert_invariants(scenario, trace)
    for segment in trace.segments():
        w = np.array([record.w for record in segment])
        assert np.all(np.diff(w.max(axis=1) - w.min(axis=1)) <= 1e-8)


def test_stiff_constrained_instance_runs_at_the_preset_gains():
    units = [
        _unit(b=3.3, c=0.0346, lo=9.2, hi=127.61),
        _unit(b=2.86, c=0.0492, lo=47.62, hi=219.2),
        _unit(b=1.86, c=0.0172, lo=16.42, hi=123.17),
    ]
    scenario = _barrier_scenario(ProtocolVariant.C, units, [94.4, 182.85, 76.67], [(0, 1), (0, 2), (1, 2)], t_max=10.0)
    trace = run(scenario)
    _assert_invariants(scenario, trace)
    w = trace.column("w")
    assert np.all(np.diff(w.max(axis=1) - w.min(axis=1)) <= 1e-8)


def _pair_consensus(gain):
    return lambda t, y: gain * np.array([y[1] - y[0], y[0] - y[1]])


def _no_widening(y_old, y_new):
    if np.ptp(y_new) > np.ptp(y_old):
        raise DomainError("spread widened")


def test_guard_rejects_an_overshooting_step():
    # h * 2 * gain = 3 lies outside the RK4 stability interval, 1.5 inside
    rhs = _pair_consensus(15.0)
    y0 = np.array([0.0, 1.0])
    assert np.ptp(rk4(rhs, 0.0, y0, 0.1)) > 1.0
    y, rejected = step(0.0, y0, rhs, 0.1, guard=_no_widening)
    assert rejected == 1
    np.testing.assert_allclose(y, rk4(rhs, 0.05, rk4(rhs, 0.0, y0, 0.05), 0.05), rtol=1e-15)
    assert np.ptp(y) < 1.0


def test_guard_passes_stable_steps_untouched():
    rhs = _pair_consensus(1.0)
    y0 = np.array([0.0, 1.0])
    y, rejected = step(0.0, y0, rhs, 0.1, guard=_no_widening)
    assert rejected == 0
    np.testing.assert_array_equal(y, rk4(rhs, 0.0, y0, 0.1))


def test_spread_guard_can_be_switched_off():
    # a = 10 on one edge gives h * 2a = 4 at h = 0.2, past the RK4 stability interval
    scenario = _u_scenario([0.0, 2.0], [(0, 1)], h=0.2, t_max=1.0, spread_guard=False)
    protocol = ProtocolSpec(variant=ProtocolVariant.U, beta=1e-6, initial_weight=10.0)
    unguarded = scenario.model_copy(update={"protocol": protocol})
    trace = run(unguarded)
    assert trace.summary.rejected_steps == 0
    assert trace.final.disagreement > trace.records[0].disagreement

    integrator = unguarded.integrator.model_copy(update={"spread_guard": True})
    trace = run(unguarded.model_copy(update={"integrator": integrator}))
    assert trace.summary.rejected_steps > 0
    assert trace.final.disagreement < trace.records[0].disagreement
