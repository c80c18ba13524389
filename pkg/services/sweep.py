"""
Scenario Sweep Service
Runs every scenario of a manifest in its own worker process.

Manifest format (JSON):
    {"scenarios": ["ieee30_constrained", "cases/ring8.json", ...]}

Entries are preset names or scenario files (relative paths resolve against
the manifest's directory). Each run writes <out_dir>/<name>.csv and is
verified; a failing scenario is reported in its result dict and does not stop
the others.
"""

import asyncio
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional

from integrate.runner import run
from models.errors import DispatchError, ParseError
from services.verifier import verify
from settings import settings
from tools.presets import load_scenario
from tools.trace_writer import write_trace

logger = logging.getLogger(__name__)


def read_manifest(path: str) -> List[str]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as e:
        raise ParseError(f"cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid manifest JSON at line {e.lineno} column {e.colno}: {e.msg}") from e

    entries = data.get("scenarios") if isinstance(data, dict) else data
    if not isinstance(entries, list) or not all(isinstance(entry, str) for entry in entries):
        raise ParseError(f"manifest {path} must hold a list of scenario references under 'scenarios'")

    base = os.path.dirname(os.path.abspath(path))
    refs = []
    for entry in entries:
        candidate = os.path.join(base, entry)
        refs.append(candidate if not os.path.isabs(entry) and os.path.isfile(candidate) else entry)
    return refs


def run_one(ref: str, out_dir: str) -> Dict[str, Any]:
    """Load, run, write and verify one scenario. Never raises for simulator errors."""
    result: Dict[str, Any] = {"ref": ref, "name": ref, "success": False, "error": None}
    try:
        scenario = load_scenario(ref)
        result["name"] = scenario.name
        trace = run(scenario)
        csv_path = os.path.join(out_dir, f"{scenario.name}.csv")
        write_trace(trace, csv_path)
        report = verify(scenario, trace)
        result.update(
            {
                "success": report.passed,
                "csv": csv_path,
                "converged": trace.summary.converged,
                "final_time": trace.summary.final_time,
                "final_disagreement": trace.summary.final_disagreement,
                "wall_clock": trace.summary.wall_clock,
                "failures": report.failures,
            }
        )
        if not report.passed:
            result["error"] = "; ".join(report.failures)
    except (DispatchError, OSError) as e:
        logger.error(f"Scenario {ref} failed: {e}")
        result["error"] = f"{type(e).__name__}: {e}"
    return result


async def run_sweep(refs: List[str], out_dir: str, workers: Optional[int] = None) -> List[Dict[str, Any]]:
    """Run all scenarios in parallel; results come back in manifest order."""
    os.makedirs(out_dir, exist_ok=True)
    workers = workers or settings.sweep_workers
    logger.info(f"Sweeping {len(refs)} scenario(s) with {workers} worker(s) into {out_dir}")

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        tasks = [loop.run_in_executor(pool, run_one, ref, out_dir) for ref in refs]
        return list(await asyncio.gather(*tasks))


def format_summary(results: List[Dict[str, Any]]) -> str:
    lines = ["", "=" * 60, "SWEEP SUMMARY", "=" * 60]
    for result in results:
        marker = "[PASS]" if result["success"] else "[FAIL]"
        if result.get("final_time") is not None:
            detail = f"t={result['final_time']:.4g}s converged={result['converged']}"
        else:
            detail = result.get("error") or ""
        lines.append(f"  {marker} {result['name']}: {detail}")
        if result["success"] is False and result.get("final_time") is not None and result.get("error"):
            lines.append(f"         {result['error']}")
    passed = sum(1 for result in results if result["success"])
    lines += ["=" * 60, f"{passed}/{len(results)} scenario(s) passed", "=" * 60]
    return "\n".join(lines)
