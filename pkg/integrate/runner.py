"""
Simulation Runner
Drives one scenario from t = 0 to convergence or the horizon.

Flow:
1. Build the flat-vector protocol system and the initial state (a_ij(0) on every edge)
2. Step with RK4, splitting steps so switch boundaries and event times are hit exactly
3. Apply demand events at their timestamps, recording the state before and after
4. Stop once control_norm < stop_tol (not before t_min or the last event) or at t_max
5. Fill in the Lyapunov monitor over the finished trace
"""

import logging
import time
from collections import deque
from dataclasses import replace
from typing import Optional

import numpy as np

from dynamics.diagnostics import disagreement_of, lyapunov_values
from dynamics.events import apply_event
from dynamics.protocols import ConsensusSystem
from dynamics.state import ProtocolVariant, SystemState
from integrate.rk4 import step
from integrate.trace import Trace, TraceRecord
from network.topology import is_connected, isolated_nodes
from tools.scenario_loader import Scenario, fingerprint, system_fingerprint

logger = logging.getLogger(__name__)


def build_system(scenario: Scenario) -> ConsensusSystem:
    return ConsensusSystem(scenario.units(), scenario.protocol, scenario.schedule())


def initial_state(scenario: Scenario, system: ConsensusSystem) -> SystemState:
    p0 = np.asarray(scenario.all_initial_powers(), dtype=float)
    weights = np.full(system.m, scenario.protocol.initial_weight)
    w0 = system.units.b + 2.0 * system.units.c * p0 if system.variant == ProtocolVariant.U else system.units.ic(p0)
    return SystemState(t=0.0, p=p0, w=w0, weights=weights, edges=tuple(system.edges))


def _snapshot(system: ConsensusSystem, t: float, y: np.ndarray, dy: np.ndarray, topo_index: int) -> TraceRecord:
    p = system.powers(y)
    w = np.array(system.incremental_costs(y), dtype=float, copy=True)
    u = dy[: system.n]
    return TraceRecord(
        t=t,
        p=p,
        w=w,
        weights=y[system.n:].copy(),
        sum_p=float(np.sum(p)),
        disagreement=disagreement_of(w),
        control_norm=float(np.max(np.abs(u))) if u.size else 0.0,
        topology_index=topo_index,
    )


def _fill_lyapunov(trace: Trace, system: ConsensusSystem) -> None:
    if not trace.records:
        return
    values = lyapunov_values(
        system.variant,
        system.units,
        system.beta,
        trace.column("p"),
        trace.column("w"),
        trace.column("weights"),
    )
    trace.records = [replace(record, lyapunov=float(v)) for record, v in zip(trace.records, values)]


def run(scenario: Scenario, system: Optional[ConsensusSystem] = None) -> Trace:
    """Integrate a validated scenario and return its trace."""
    started = time.perf_counter()
    cfg = scenario.integrator
    system = system or build_system(scenario)
    schedule = system.schedule

    state = initial_state(scenario, system)
    y = system.pack(state)
    system.validate(y)

    events = deque(sorted((e for e in scenario.events if e.at <= cfg.t_max), key=lambda e: e.at))
    hold_until = max([cfg.t_min] + [e.at for e in events])

    trace = Trace(
        fingerprint=fingerprint(scenario),
        system_fingerprint=system_fingerprint(scenario),
        n=system.n,
        edges=tuple(system.edges),
        scenario_name=scenario.name,
    )
    summary = trace.summary
    logger.info(
        f"Running '{scenario.name}': protocol {system.variant.value}, {system.n} agents, "
        f"{system.m} edges, h={cfg.h}, t_max={cfg.t_max}"
    )

    guard = system.check_spread if cfg.spread_guard else None
    t = 0.0
    segment_start = 0.0
    segment_steps = 0
    topo_index = schedule.active_index(t)
    if not is_connected(schedule.topologies[topo_index]):
        logger.warning(f"Initial topology is disconnected; isolated agents {isolated_nodes(schedule.topologies[topo_index])}")
    dy = system.derivative(y, topo_index)
    since_record = 0
    recorded_now = False

    def record() -> None:
        nonlocal since_record, recorded_now
        trace.records.append(_snapshot(system, t, y, dy, topo_index))
        since_record = 0
        recorded_now = True

    record()

    while True:
        # Demand events due at the current time
        while events and events[0].at <= t:
            event = events.popleft()
            if not recorded_now:
                record()
            post = apply_event(system.unpack(t, y), event, system.units.dummy_idx)
            y = np.concatenate([post.p, y[system.n:]])
            system.validate(y)
            dy = system.derivative(y, topo_index)
            record()

        norm = float(np.max(np.abs(dy[: system.n]))) if system.n else 0.0
        if t >= hold_until and norm < cfg.stop_tol:
            summary.converged = True
            summary.reason = "converged"
            break
        if t >= cfg.t_max:
            summary.reason = "t_max"
            break

        boundary = cfg.t_max
        switch_at = schedule.next_switch_time(t)
        if switch_at is not None:
            boundary = min(boundary, switch_at)
        if events:
            boundary = min(boundary, events[0].at)

        t_next = segment_start + (segment_steps + 1) * cfg.h
        if t_next >= boundary - 1e-9 * cfg.h:
            t_next = boundary
        y, rejected = step(t, y, system.rhs(topo_index), t_next - t, system.validate, cfg.max_halvings, dy, guard)
        summary.rejected_steps += rejected
        summary.steps += 1
        t = t_next
        recorded_now = False
        since_record += 1
        if t == boundary:
            segment_start, segment_steps = t, 0
        else:
            segment_steps += 1

        new_index = schedule.active_index(t)
        switched = new_index != topo_index
        topo_index = new_index
        dy = system.derivative(y, topo_index)
        if switched:
            summary.switches += 1
            topo = schedule.topologies[topo_index]
            logger.info(f"Switched to topology {topo_index} at t={t:.6g}")
            if not is_connected(topo):
                logger.warning(f"Topology {topo_index} is disconnected; isolated agents {isolated_nodes(topo)} freeze")
            record()
        elif since_record >= cfg.record_every:
            record()

    if not recorded_now:
        record()
    _fill_lyapunov(trace, system)

    final = trace.records[-1]
    summary.final_time = t
    summary.final_disagreement = final.disagreement
    summary.final_sum_p = final.sum_p
    summary.final_control_norm = final.control_norm
    summary.demand = scenario.effective_demand(t)
    summary.demand_mismatch = final.sum_p - summary.demand
    summary.wall_clock = time.perf_counter() - started

    if summary.converged:
        logger.info(f"Converged at t={t:.6g} after {summary.steps} steps ({summary.wall_clock:.2f}s)")
    else:
        logger.warning(
            f"Reached t_max={cfg.t_max} with control norm {final.control_norm:.3e} >= {cfg.stop_tol:.1e}"
        )
    return trace
