"""
Trace CSV writer and reader.

Column order: t, p_1..p_n, w_1..w_n, one a_i-j per edge (1-based, sorted
pairs), sum_p, disagreement, control_norm, lyapunov. Numbers are written with
12 significant digits so identical runs give byte-identical files. A leading
"# fingerprint=... system=..." line ties the file to the scenario it came from.
"""

import csv
import logging
import re
from typing import Dict, List, Sequence, TextIO, Union

import numpy as np

from integrate.trace import Trace, TraceRecord
from models.errors import ParseError
from network.topology import Edge

logger = logging.getLogger(__name__)

TAIL_COLUMNS = ["sum_p", "disagreement", "control_norm", "lyapunov"]
_WEIGHT_COLUMN = re.compile(r"^a_(\d+)-(\d+)$")
_COMMENT = "#"


def header(n: int, edges: Sequence[Edge]) -> List[str]:
    columns = ["t"]
    columns += [f"p_{i + 1}" for i in range(n)]
    columns += [f"w_{i + 1}" for i in range(n)]
    columns += [f"a_{i + 1}-{j + 1}" for i, j in edges]
    return columns + TAIL_COLUMNS


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def _row(record: TraceRecord) -> List[str]:
    values = [record.t, *record.p, *record.w, *record.weights]
    values += [record.sum_p, record.disagreement, record.control_norm, record.lyapunov]
    return [_fmt(v) for v in values]


def write_trace(trace: Trace, destination: Union[str, TextIO]) -> None:
    """Write the trace as CSV to a path or an open text stream."""
    if isinstance(destination, str):
        with open(destination, "w", newline="", encoding="utf-8") as handle:
            _write(trace, handle)
        logger.info(f"Wrote {len(trace.records)} records to {destination}")
    else:
        _write(trace, destination)


def _write(trace: Trace, handle: TextIO) -> None:
    if trace.fingerprint:
        handle.write(f"{_COMMENT} fingerprint={trace.fingerprint} system={trace.system_fingerprint}\n")
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header(trace.n, trace.edges))
    for record in trace.records:
        writer.writerow(_row(record))


def read_trace(path: str) -> Trace:
    """Rebuild a Trace from a CSV written by write_trace (columns located by header)."""
    try:
        with open(path, "r", newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as e:
        raise ParseError(f"cannot read trace file {path}: {e}") from e
    stamp: Dict[str, str] = {}
    skipped = 0
    while skipped < len(rows) and rows[skipped] and rows[skipped][0].startswith(_COMMENT):
        for token in ",".join(rows[skipped]).lstrip(_COMMENT).split():
            key, _, value = token.partition("=")
            stamp[key] = value
        skipped += 1
    if skipped == len(rows):
        raise ParseError(f"trace file {path} is empty")

    columns = rows[skipped]
    index = {name: k for k, name in enumerate(columns)}
    missing = [name for name in ["t", *TAIL_COLUMNS] if name not in index]
    if missing:
        raise ParseError(f"trace file {path} lacks columns {missing}")

    p_cols = [index[c] for c in columns if c.startswith("p_")]
    w_cols = [index[c] for c in columns if c.startswith("w_")]
    if len(p_cols) != len(w_cols):
        raise ParseError(f"trace file {path} has {len(p_cols)} power columns but {len(w_cols)} cost columns")
    edges: List[Edge] = []
    a_cols: List[int] = []
    for name in columns:
        match = _WEIGHT_COLUMN.match(name)
        if match:
            edges.append((int(match.group(1)) - 1, int(match.group(2)) - 1))
            a_cols.append(index[name])

    trace = Trace(
        fingerprint=stamp.get("fingerprint", ""),
        system_fingerprint=stamp.get("system", ""),
        n=len(p_cols),
        edges=tuple(edges),
    )
    for line, row in enumerate(rows[skipped + 1 :], start=skipped + 2):
        if len(row) != len(columns):
            raise ParseError(f"{path}:{line}: expected {len(columns)} fields, got {len(row)}")
        try:
            values = np.array([float(v) for v in row])
        except ValueError as e:
            raise ParseError(f"{path}:{line}: {e}") from e
        trace.records.append(
            TraceRecord(
                t=float(values[index["t"]]),
                p=values[p_cols],
                w=values[w_cols],
                weights=values[a_cols],
                sum_p=float(values[index["sum_p"]]),
                disagreement=float(values[index["disagreement"]]),
                control_norm=float(values[index["control_norm"]]),
                lyapunov=float(values[index["lyapunov"]]),
            )
        )
    if trace.records:
        final = trace.records[-1]
        trace.summary.final_time = final.t
        trace.summary.final_sum_p = final.sum_p
        trace.summary.final_disagreement = final.disagreement
        trace.summary.final_control_norm = final.control_norm
    return trace
