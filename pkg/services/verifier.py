"""
Trace Verification Service
Checks a finished trace against its scenario and the matching oracle.

Checks:
1. Consensus      - final IC spread and disagreement
2. Oracle         - per-unit power error (mean-IC prediction for U, barrier KKT for C/D)
3. Balance        - sum p equals the demand in force on every segment (C/D),
                    event jumps equal the injected allocation
4. Limits         - every sample strictly inside the barrier domain (C/D)
5. Weights        - adaptive weights never decrease
6. Lyapunov       - monitor never increases within a segment
7. Termination    - final control norm under the stop tolerance
8. Provenance     - the trace fingerprint matches the scenario

Protocol U does not enforce supply-demand balance; its realized mismatch is
reported as a diagnostic line, not a check.
"""

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field

from dynamics.state import ProtocolVariant
from integrate.trace import Trace, TraceRecord
from models.errors import InfeasibleError, MismatchError
from models.generator import UnitArrays
from services.dispatch_oracle import DispatchSolution, oracle_for, predict_consensus_u, solve_constrained
from tools.scenario_loader import Scenario, fingerprint, system_fingerprint

logger = logging.getLogger(__name__)


class Tolerances(BaseModel):
    ic_spread: float = Field(default=1e-6, description="max_i w_i - min_i w_i at the end")
    disagreement: float = Field(default=1e-6, description="sum_i (w_i - mean w)^2 at the end")
    power: float = Field(default=1e-3, description="Per-unit |p - p_oracle| (MW)")
    balance: float = Field(default=1e-6, description="|sum p - demand| on every record (MW)")
    mean_ic: float = Field(default=1e-6, description="Protocol U: |mean w(T) - mean w(0)|")
    lyapunov: float = Field(default=1e-6, description="Allowed relative rise of the monitor between records")
    event_jump: float = Field(default=1e-6, description="Per-dummy error of an event jump (MW)")


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class VerificationReport(BaseModel):
    scenario_name: str
    protocol: ProtocolVariant
    records: int
    final_time: float = float("nan")
    checks: List[CheckResult] = Field(default_factory=list)
    diagnostics: List[str] = Field(default_factory=list)
    oracle: Optional[DispatchSolution] = None
    reference: Optional[DispatchSolution] = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[str]:
        return [f"{check.name}: {check.detail}" for check in self.checks if not check.passed]

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CheckResult(name=name, passed=bool(passed), detail=detail))

    def raise_for_failures(self) -> None:
        if not self.passed:
            raise MismatchError(self.failures)

    def render(self) -> str:
        lines = ["", "=" * 60, f"VERIFICATION: {self.scenario_name}", "=" * 60]
        lines.append(f"\nProtocol: {self.protocol.value}")
        lines.append(f"Records: {self.records}")
        lines.append(f"Final time: {self.final_time:.6g} s")

        if self.oracle is not None:
            lines += ["", "-" * 40, f"ORACLE ({self.oracle.method.upper()})", "-" * 40]
            lines.append(f"  lambda*: {self.oracle.lambda_star:.9g}")
            for k, p in enumerate(self.oracle.p_star, 1):
                lines.append(f"  p_{k}: {p:.9g} MW")
        if self.reference is not None:
            lines.append(f"  exact {self.reference.method} lambda*: {self.reference.lambda_star:.9g}")

        lines += ["", "-" * 40, "CHECKS", "-" * 40]
        for check in self.checks:
            marker = "[PASS]" if check.passed else "[FAIL]"
            lines.append(f"  {marker} {check.name}: {check.detail}")

        lines += ["", "-" * 40, "DIAGNOSTICS", "-" * 40]
        if self.diagnostics:
            lines += [f"  [i] {line}" for line in self.diagnostics]
        else:
            lines.append("  None")

        lines += ["", "=" * 60]
        lines.append("RESULT: PASS" if self.passed else f"RESULT: FAIL ({len(self.failures)} check(s))")
        lines.append("=" * 60)
        return "\n".join(lines)


def _segment_demands(scenario: Scenario, segments: List[List[TraceRecord]]) -> List[float]:
    events = sorted(scenario.events, key=lambda e: e.at)
    demand = scenario.base_demand()
    demands = [demand]
    for k in range(1, len(segments)):
        if k - 1 < len(events):
            demand += events[k - 1].total
        demands.append(demand)
    return demands


def _check_balance(report, scenario, segments, tol) -> None:
    demands = _segment_demands(scenario, segments)
    worst = 0.0
    for segment, demand in zip(segments, demands):
        for record in segment:
            worst = max(worst, abs(record.sum_p - demand))
    report.add("power_balance", worst <= tol.balance, f"max |sum p - demand| = {worst:.3e} MW over {len(segments)} segment(s)")


def _check_events(report, scenario, segments, tol) -> None:
    events = sorted(scenario.events, key=lambda e: e.at)
    dummies = scenario.dummy_indices()
    n_real = scenario.n_real
    for k in range(1, len(segments)):
        if k - 1 >= len(events):
            report.add("event_jump", False, f"unexpected repeated timestamp t={segments[k][0].t:.6g}")
            continue
        event = events[k - 1]
        pre, post = segments[k - 1][-1], segments[k][0]
        expected = event.total * event.shares(len(dummies))
        jump = post.p[dummies] - pre.p[dummies]
        real_drift = float(np.max(np.abs(post.p[:n_real] - pre.p[:n_real]))) if n_real else 0.0
        err = float(np.max(np.abs(jump - expected)))
        report.add(
            "event_jump",
            err <= tol.event_jump and real_drift <= tol.event_jump and pre.t == event.at,
            f"t={event.at:.6g}: injected {float(jump.sum()):.6f} MW (expected {event.total:.6f}), per-dummy error {err:.2e}",
        )


def _check_limits(report, units: UnitArrays, powers: np.ndarray) -> None:
    inside = (powers > units.lo) & (powers < units.hi)
    bad = np.argwhere(~inside)
    if bad.size:
        row, unit = bad[0]
        report.add("limits", False, f"{len(bad)} violation(s); first at record {row}, unit {unit + 1} p={powers[row, unit]:.6g}")
    else:
        report.add("limits", True, "every sample strictly inside the unit limits")


def _check_weights(report, weights: np.ndarray) -> None:
    if len(weights) < 2 or weights.shape[1] == 0:
        report.add("weight_monotonicity", True, "nothing to compare")
        return
    drops = np.diff(weights, axis=0)
    slack = 1e-12 * np.maximum(1.0, np.abs(weights[1:]))
    violations = int(np.sum(drops < -slack))
    report.add("weight_monotonicity", violations == 0, f"{violations} decrease(s); final a_ij in [{weights[-1].min():.4g}, {weights[-1].max():.4g}]")


def _check_lyapunov(report, segments, tol) -> None:
    worst = 0.0
    for segment in segments:
        values = np.array([record.lyapunov for record in segment])
        if len(values) < 2 or not np.all(np.isfinite(values)):
            continue
        rise = np.diff(values) / (1.0 + np.abs(values[:-1]))
        worst = max(worst, float(rise.max()))
    report.add("lyapunov_nonincrease", worst <= tol.lyapunov, f"largest relative rise {worst:.2e}")


def _check_fingerprint(report: VerificationReport, scenario: Scenario, trace: Trace) -> None:
    if not trace.fingerprint:
        report.diagnostics.append("trace carries no scenario fingerprint")
        return
    if trace.system_fingerprint and trace.system_fingerprint != system_fingerprint(scenario):
        report.add("fingerprint", False, "trace was produced by a different scenario")
    elif trace.fingerprint != fingerprint(scenario):
        report.add("fingerprint", True, "same system, integrator settings differ from the scenario")
    else:
        report.add("fingerprint", True, "trace matches the scenario")


def verify(scenario: Scenario, trace: Trace, tolerances: Optional[Tolerances] = None) -> VerificationReport:
    """Run every check that applies to the scenario's protocol."""
    tol = tolerances or Tolerances()
    variant = scenario.protocol.variant
    report = VerificationReport(scenario_name=scenario.name, protocol=variant, records=len(trace.records))
    if not trace.records:
        report.add("records", False, "trace has no records")
        return report

    final = trace.records[-1]
    report.final_time = final.t
    units = UnitArrays(scenario.units(), scenario.protocol.barrier, barrier=scenario.protocol.uses_barrier)
    if trace.n != units.n:
        report.add("shape", False, f"trace has {trace.n} agents, scenario has {units.n}")
        return report

    _check_fingerprint(report, scenario, trace)
    segments = trace.segments()
    spread = float(final.w.max() - final.w.min())
    report.add("ic_spread", spread <= tol.ic_spread, f"max w - min w = {spread:.3e}")
    report.add("disagreement", final.disagreement < tol.disagreement, f"final disagreement {final.disagreement:.3e}")
    stop_tol = scenario.integrator.stop_tol
    report.add("terminated", final.control_norm < stop_tol, f"final control norm {final.control_norm:.3e} (stop_tol {stop_tol:.1e})")

    if variant == ProtocolVariant.U:
        predicted = predict_consensus_u(scenario.generators, scenario.initial_powers)
        mean_ic = float(np.mean(final.w))
        report.add("mean_ic_conservation", abs(mean_ic - predicted) <= tol.mean_ic, f"mean w = {mean_ic:.12g}, predicted {predicted:.12g}")
        p_oracle = units.powers_from_ic(np.full(units.n, predicted))
        err = float(np.max(np.abs(final.p - p_oracle)))
        report.add("oracle_power", err <= tol.power, f"max |p - p_oracle| = {err:.3e} MW at common IC {predicted:.9g}")
        demand = scenario.base_demand()
        report.diagnostics.append(
            f"demand mismatch: sum p(T_end) - P_D = {final.sum_p - demand:+.6f} MW (sum p = {final.sum_p:.6f}, P_D = {demand:.6f}); "
            "Protocol U conserves the mean IC, not the total power"
        )
        report.diagnostics.append(f"initial powers sum to {sum(scenario.initial_powers):.6f} MW")
        report.oracle = oracle_for(scenario)
        report.diagnostics.append(
            f"closed-form dispatch at P_D: lambda* = {report.oracle.lambda_star:.9g} vs consensus {predicted:.9g}"
        )
    else:
        try:
            oracle = oracle_for(scenario, at=final.t)
        except InfeasibleError as e:
            report.add("oracle_power", False, str(e))
        else:
            report.oracle = oracle
            err = np.abs(final.p - np.asarray(oracle.p_star))
            worst = int(np.argmax(err))
            report.add("oracle_power", float(err[worst]) <= tol.power, f"max |p - p_oracle| = {err[worst]:.3e} MW (unit {worst + 1})")
            ic_err = float(np.max(np.abs(final.w - oracle.lambda_star)))
            report.diagnostics.append(f"final IC vs barrier lambda*: max deviation {ic_err:.3e}")

        _check_balance(report, scenario, segments, tol)
        if variant == ProtocolVariant.D:
            _check_events(report, scenario, segments, tol)
        _check_limits(report, units, trace.column("p"))

        if variant == ProtocolVariant.C:
            try:
                exact = solve_constrained(scenario.generators, scenario.effective_demand(final.t))
            except InfeasibleError as e:
                report.diagnostics.append(f"exact dispatch unavailable: {e}")
            else:
                report.reference = exact
                if report.oracle is not None:
                    gap = np.abs(np.asarray(report.oracle.p_star) - np.asarray(exact.p_star))
                    report.diagnostics.append(
                        f"barrier vs exact dispatch: max |dp| = {gap.max():.4f} MW, "
                        f"cost {report.oracle.total_cost:.4f} vs {exact.total_cost:.4f}"
                    )

    _check_weights(report, trace.column("weights"))
    _check_lyapunov(report, segments, tol)

    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"Verification of '{scenario.name}': {len(report.checks) - len(report.failures)}/{len(report.checks)} checks passed")
    return report
