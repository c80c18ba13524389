"""
Consensus Dispatch CLI
Command-line interface for the adaptive-consensus economic dispatch simulator.

Usage:
    python main.py run ieee30_constrained --out t.csv     # Simulate, write the trace
    python main.py oracle ieee30_unconstrained            # Centralized reference dispatch
    python main.py verify ieee30_constrained t.csv        # Check a trace
    python main.py presets                                # List built-in scenarios
    python main.py presets --dump ieee30_dummy            # Print a preset as JSON
    python main.py graph ieee30_switching                 # Topology diagnostics
    python main.py sweep manifest.json --out-dir runs     # Parallel batch of scenarios

Exit status: 0 ok, 1 usage error or unknown scenario name, 2 invalid
scenario, trace file or output path, 3 verification failure, 4 numerical
failure.
"""

import argparse
import asyncio
import logging
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

from dynamics.state import ProtocolVariant
from integrate.config import IntegratorConfig
from integrate.runner import run
from models.errors import (
    DomainError,
    EventError,
    InfeasibleError,
    MismatchError,
    ParseError,
    ScenarioValidationError,
    SingularityError,
    UnknownScenarioError,
)
from network.topology import algebraic_connectivity, is_connected, isolated_nodes
from services.dispatch_oracle import oracle_for, predict_consensus_u, solve_constrained
from services.sweep import format_summary, read_manifest, run_sweep
from services.verifier import verify
from settings import settings
from tools.presets import get_preset, list_presets, load_scenario
from tools.scenario_loader import Scenario, serialize_scenario
from tools.trace_writer import read_trace, write_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_VERIFY = 3
EXIT_NUMERICAL = 4


class CLIParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _with_overrides(scenario: Scenario, args) -> Scenario:
    overrides = {
        key: value
        for key, value in (("h", args.h), ("t_max", args.t_max), ("record_every", args.record_every))
        if value is not None
    }
    if not overrides:
        return scenario
    try:
        integrator = IntegratorConfig(**{**scenario.integrator.model_dump(), **overrides})
    except ValidationError as e:
        problems = [f"{err['loc'][0]}: {err['msg']}" for err in e.errors()]
        raise ScenarioValidationError("invalid integrator override: " + "; ".join(problems), problems) from e
    return scenario.model_copy(update={"integrator": integrator})


def cmd_run(args) -> int:
    scenario = _with_overrides(load_scenario(args.scenario), args)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    if not os.path.isdir(out_dir):
        print(f"Error: trace directory {out_dir} does not exist", file=sys.stderr)
        return EXIT_INVALID
    trace = run(scenario)
    write_trace(trace, args.out)

    summary = trace.summary
    print(f"\n{'='*60}")
    print(f"RUN: {scenario.name}")
    print(f"{'='*60}")
    print(f"Protocol: {scenario.protocol.variant.value}")
    print(f"Stopped: {summary.reason} at t={summary.final_time:.6g} s after {summary.steps} steps")
    print(f"Final disagreement: {summary.final_disagreement:.3e}")
    print(f"Final sum p: {summary.final_sum_p:.9g} MW (demand {summary.demand:.9g}, mismatch {summary.demand_mismatch:+.3e})")
    print(f"Switches: {summary.switches}  Rejected steps: {summary.rejected_steps}")
    print(f"Wall clock: {summary.wall_clock:.2f} s")
    print(f"Trace: {args.out} ({len(trace.records)} records)")
    if summary.non_convergence:
        print("\n[!] Non-convergence: t_max reached before the stop tolerance")
    return EXIT_OK


def cmd_oracle(args) -> int:
    scenario = load_scenario(args.scenario)
    solution = oracle_for(scenario)

    print(f"\n{'='*60}")
    print(f"ORACLE: {scenario.name} ({solution.method})")
    print(f"{'='*60}")
    print(f"Demand: {solution.demand:.9g} MW")
    print(f"lambda*: {solution.lambda_star:.9g}")
    print("\n" + "-"*40)
    print("DISPATCH")
    print("-"*40)
    for k, (p, state) in enumerate(zip(solution.p_star, solution.binding), 1):
        print(f"  p_{k}: {p:12.6f} MW  [{state.value}]")
    print(f"\nTotal cost: {solution.total_cost:.6f}")
    if solution.barrier_objective is not None:
        print(f"Barrier objective: {solution.barrier_objective:.6f}")

    if scenario.protocol.variant == ProtocolVariant.U:
        predicted = predict_consensus_u(scenario.generators, scenario.initial_powers)
        print(f"Protocol U consensus (mean initial IC): {predicted:.9g}")
    else:
        try:
            exact = solve_constrained(scenario.generators, sum(solution.p_star[: scenario.n_real]))
        except InfeasibleError as e:
            print(f"Exact dispatch unavailable: {e}")
        else:
            print(f"Exact dispatch lambda*: {exact.lambda_star:.9g}  p: {', '.join(f'{p:.4f}' for p in exact.p_star)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario = load_scenario(args.scenario)
    trace = read_trace(args.trace)
    report = verify(scenario, trace)
    print(report.render())
    report.raise_for_failures()
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.dump:
        try:
            scenario = get_preset(args.dump)
        except KeyError as e:
            print(f"Error: {e.args[0]}", file=sys.stderr)
            return EXIT_USAGE
        print(serialize_scenario(scenario))
        return EXIT_OK
    for name in list_presets():
        print(f"  {name:24s} {get_preset(name).description}")
    return EXIT_OK


def cmd_graph(args) -> int:
    scenario = load_scenario(args.scenario)
    schedule = scenario.schedule()
    print(f"\n{'='*60}")
    print(f"GRAPH: {scenario.name}")
    print(f"{'='*60}")
    print(f"Mode: {schedule.mode.value}  Dwell: {schedule.dwell:g} s  Agents: {schedule.n}")
    for k, topo in enumerate(schedule.topologies):
        connected = is_connected(topo)
        print("\n" + "-"*40)
        print(f"TOPOLOGY {k}")
        print("-"*40)
        print(f"  Edges ({len(topo.edges)}): {', '.join(f'{i + 1}-{j + 1}' for i, j in topo.sorted_edges())}")
        print(f"  Connected: {connected}")
        if topo.n > 1:
            print(f"  Algebraic connectivity: {algebraic_connectivity(topo):.6f}")
        isolated = isolated_nodes(topo)
        if isolated:
            print(f"  [!] Isolated agents: {', '.join(str(i + 1) for i in isolated)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    refs = read_manifest(args.manifest)
    results = asyncio.run(run_sweep(refs, args.out_dir, args.workers))
    print(format_summary(results))
    return EXIT_OK if all(result["success"] for result in results) else EXIT_VERIFY


def build_parser() -> CLIParser:
    parser = CLIParser(
        description="Adaptive-consensus economic load dispatch simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Scenarios are preset names (see `presets`) or paths to JSON scenario files.

Data Flow:
    1. Load and validate the scenario
    2. Integrate the consensus protocol with fixed-step RK4
    3. Write the trace as CSV
    4. Verify the trace against the centralized oracle
        """,
    )
    parser.add_argument("--quiet", "-q", action="store_true", help="Only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CLIParser)

    p_run = sub.add_parser("run", help="Simulate a scenario and write its trace")
    p_run.add_argument("scenario", help="Preset name or scenario JSON file")
    p_run.add_argument("--out", "-o", required=True, help="Trace CSV destination")
    p_run.add_argument("--h", type=float, help="Override the RK4 step size (s)")
    p_run.add_argument("--t-max", type=float, dest="t_max", help="Override the horizon (s)")
    p_run.add_argument("--record-every", type=int, dest="record_every", help="Override steps per trace record")
    p_run.set_defaults(handler=cmd_run)

    p_oracle = sub.add_parser("oracle", help="Print the centralized reference dispatch")
    p_oracle.add_argument("scenario")
    p_oracle.set_defaults(handler=cmd_oracle)

    p_verify = sub.add_parser("verify", help="Verify a trace CSV against its scenario")
    p_verify.add_argument("scenario")
    p_verify.add_argument("trace", help="Trace CSV written by `run`")
    p_verify.set_defaults(handler=cmd_verify)

    p_presets = sub.add_parser("presets", help="List built-in scenarios")
    p_presets.add_argument("--dump", metavar="NAME", help="Print one preset as scenario JSON")
    p_presets.set_defaults(handler=cmd_presets)

    p_graph = sub.add_parser("graph", help="Print topology diagnostics")
    p_graph.add_argument("scenario")
    p_graph.set_defaults(handler=cmd_graph)

    p_sweep = sub.add_parser("sweep", help="Run every scenario of a manifest in parallel")
    p_sweep.add_argument("manifest", help="JSON manifest: {\"scenarios\": [...]}")
    p_sweep.add_argument("--out-dir", required=True, dest="out_dir", help="Directory for the trace CSVs")
    p_sweep.add_argument("--workers", type=int, help=f"Worker processes. Default: {settings.sweep_workers}")
    p_sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=settings.log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    if args.quiet:
        logging.getLogger().setLevel(logging.WARNING)
    logger.debug(f"Command: {args.command}")

    try:
        return args.handler(args)
    except UnknownScenarioError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ScenarioValidationError) as e:
        print(f"Error: {e}", file=sys.stderr)
        if isinstance(e, ScenarioValidationError):
            for problem in e.problems:
                print(f"  - {problem}", file=sys.stderr)
        return EXIT_INVALID
    except MismatchError as e:
        print(f"\n[FAILED] {e}", file=sys.stderr)
        return EXIT_VERIFY
    except (SingularityError, InfeasibleError, EventError, DomainError) as e:
        print(f"\n[FAILED] Numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
