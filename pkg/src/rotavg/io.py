"""Plain-text file formats for graphs, solutions, traces and reports.

Graph file::

    RAG 1 <n> <m>
    <i> <j> <r11> <r12> <r13> <r21> ... <r33>     (m lines, 0-based, row-major)

Solution file::

    RAS 1 <n>
    <r11> ... <r33>                               (n lines)

Lines starting with ``#`` and blank lines are ignored. Numbers are written
with 17 significant digits so doubles survive a round trip exactly.
"""
import json
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .constants import FILE_TOL
from .errors import ParseError
from .graph import RAGraph
from .so3 import is_rotation
from .solvers import ConvergenceTrace


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _row(values) -> str:
    return " ".join(fmt(v) for v in np.ravel(values))


def _content_lines(path) -> Iterator[Tuple[int, List[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            yield lineno, s.split()


def _floats(tokens, lineno, path) -> np.ndarray:
    try:
        vals = np.array([float(t) for t in tokens])
    except ValueError:
        raise ParseError(f"non-numeric value in {' '.join(tokens)!r}", lineno, path) from None
    if not np.all(np.isfinite(vals)):
        raise ParseError("non-finite value", lineno, path)
    return vals


def _int(token, lineno, path, what) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {token!r}", lineno, path) from None


def _rotation(tokens, lineno, path) -> np.ndarray:
    m = _floats(tokens, lineno, path).reshape(3, 3)
    if not is_rotation(m, FILE_TOL, FILE_TOL):
        raise ParseError("block is not a rotation matrix", lineno, path)
    return m


def write_graph(path, g: RAGraph):
    lines = [f"RAG 1 {g.n} {g.num_edges}"]
    for i, j, r in g.edges():
        lines.append(f"{i} {j} {_row(r)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_graph(path) -> RAGraph:
    """Parse a graph file.

    Raises:
        ParseError: on a malformed header, wrong line count, invalid indices,
            duplicate pairs, non-rotation blocks or a disconnected graph.
    """
    lines = _content_lines(path)
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise ParseError("empty file", None, path) from None
    if len(head) != 4 or head[0] != "RAG" or head[1] != "1":
        raise ParseError("expected header 'RAG 1 <n> <m>'", lineno, path)
    n = _int(head[2], lineno, path, "n")
    m = _int(head[3], lineno, path, "m")
    if n < 1 or m < 0:
        raise ParseError("header counts out of range", lineno, path)

    heads, tails, rel = [], [], []
    seen = {}
    last = lineno
    for lineno, tok in lines:
        last = lineno
        if len(heads) == m:
            raise ParseError(f"more than the declared {m} edges", lineno, path)
        if len(tok) != 11:
            raise ParseError(f"expected 11 fields, got {len(tok)}", lineno, path)
        i = _int(tok[0], lineno, path, "vertex index")
        j = _int(tok[1], lineno, path, "vertex index")
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"vertex index out of range [0, {n})", lineno, path)
        if i == j:
            raise ParseError(f"self-loop on vertex {i}", lineno, path)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(f"duplicate measurement for pair {key} (first on line {seen[key]})", lineno, path)
        seen[key] = lineno
        heads.append(i)
        tails.append(j)
        rel.append(_rotation(tok[2:], lineno, path))
    if len(heads) != m:
        raise ParseError(f"declared {m} edges, found {len(heads)}", last, path)
    try:
        return RAGraph(n, np.array(heads, dtype=np.int64), np.array(tails, dtype=np.int64),
                       np.array(rel).reshape(-1, 3, 3), rotation_tol=FILE_TOL)
    except ValueError as exc:
        raise ParseError(str(exc), None, path) from exc


def write_solution(path, rotations: np.ndarray):
    rotations = np.asarray(rotations, dtype=float).reshape(-1, 3, 3)
    lines = [f"RAS 1 {len(rotations)}"] + [_row(r) for r in rotations]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_solution(path) -> np.ndarray:
    """Parse a solution file into an ``(n, 3, 3)`` array.

    Raises:
        ParseError: on a malformed header, truncated data or non-rotation rows.
    """
    lines = _content_lines(path)
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise ParseError("empty file", None, path) from None
    if len(head) != 3 or head[0] != "RAS" or head[1] != "1":
        raise ParseError("expected header 'RAS 1 <n>'", lineno, path)
    n = _int(head[2], lineno, path, "n")
    if n < 0:
        raise ParseError("negative rotation count", lineno, path)
    out = []
    last = lineno
    for lineno, tok in lines:
        last = lineno
        if len(out) == n:
            raise ParseError(f"more than the declared {n} rotations", lineno, path)
        if len(tok) != 9:
            raise ParseError(f"expected 9 fields, got {len(tok)}", lineno, path)
        out.append(_rotation(tok, lineno, path))
    if len(out) != n:
        raise ParseError(f"declared {n} rotations, found {len(out)}", last, path)
    return np.array(out).reshape(n, 3, 3)


def write_trace(path, trace: ConvergenceTrace):
    lines = ["iter,objective,residual,time_s"]
    for k, (obj, res, ts) in enumerate(zip(trace.objective, trace.residual, trace.time_s), start=1):
        lines.append(f"{k},{fmt(obj)},{fmt(res)},{fmt(ts)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path) -> Dict[str, np.ndarray]:
    """Read a trace CSV back into column arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = np.zeros((0, 4))
    return {
        "iter": data[:, 0].astype(np.int64),
        "objective": data[:, 1],
        "residual": data[:, 2],
        "time_s": data[:, 3],
    }


REPORT_FIELDS = (
    "n", "num_edges", "algorithm", "avg_error", "objective", "iterations", "converged",
    "time_s", "mu", "min_eig", "asymmetry", "seed", "config",
)


def make_report(
    g: RAGraph,
    algorithm: str,
    objective: float,
    trace: ConvergenceTrace,
    cert=None,
    seed: Optional[int] = None,
    config: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """Assemble a solve report; ``avg_error`` is the objective per edge."""
    return {
        "n": g.n,
        "num_edges": g.num_edges,
        "algorithm": algorithm,
        "avg_error": objective / g.num_edges if g.num_edges else 0.0,
        "objective": objective,
        "iterations": trace.iterations,
        "converged": trace.converged,
        "time_s": trace.time_s[-1] if trace.time_s else 0.0,
        "mu": trace.mu,
        "min_eig": cert.min_eig if cert is not None else None,
        "asymmetry": cert.asymmetry if cert is not None else None,
        "seed": seed,
        "config": config or {},
    }


def write_report(path, report: Dict[str, Any]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, allow_nan=True)
        fh.write("\n")


def read_report(path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
