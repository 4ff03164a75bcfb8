"""Command-line front end and report serialization.

Subcommands::

    ctp-akkt solve --problem tracking [--nodes 200] [--out run.json] [--format json|csv]
    ctp-akkt sequence --problem example2 --k-max 20
    ctp-akkt residual --problem tracking --x x.txt --mult mult.txt

Exit codes: 0 converged to a KKT point (or a reporting command succeeded),
1 usage or input error, 2 AKKT without KKT progress or penalty cap,
3 iteration cap, 4 unbounded below suspected.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .alm import AlmConfig, AlmStatus, SolverTrace, solve
from .core import CtpProblem, MultiplierPath, TimeGrid, Trajectory, make_uniform_grid
from .cq import CqThresholds, diagnose
from .problems import BuiltinProblemId, build, paper_sequence, reference_pair
from .residuals import ResidualReport, akkt_sequence_report, kkt_residual, min_kkt_stationarity, pw_akkt_check

__all__ = [
    "EXIT_CODES",
    "InputError",
    "RunReport",
    "main",
    "read_node_table",
    "write_node_table",
]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_KKT = 2
EXIT_ITER_CAP = 3
EXIT_UNBOUNDED = 4

EXIT_CODES = {
    AlmStatus.CONVERGED_KKT: EXIT_OK,
    AlmStatus.AKKT_NO_KKT_PROGRESS: EXIT_NO_KKT,
    AlmStatus.PENALTY_CAP_REACHED: EXIT_NO_KKT,
    AlmStatus.ITERATION_CAP_REACHED: EXIT_ITER_CAP,
    AlmStatus.UNBOUNDED_BELOW_SUSPECTED: EXIT_UNBOUNDED,
}

GRID_TOL = 1e-12
_NONFINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


class InputError(ValueError):
    """Bad user input: malformed file, mismatched grid, unsupported option."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is reserved for solver outcomes
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------- serialization


def _encode(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isfinite(f):
            return f
        return "nan" if math.isnan(f) else ("inf" if f > 0 else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_encode(v) for v in obj]
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _decode(obj: Any) -> Any:
    if isinstance(obj, str) and obj in _NONFINITE:
        return _NONFINITE[obj]
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def _csv_cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_parse_cell(s: str) -> Any:
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    if s in _NONFINITE:
        return _NONFINITE[s]
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


@dataclass
class RunReport:
    """Everything one CLI run produced, in a single self-contained document.

    ``table`` holds one row per outer iteration (``solve``) or per sequence
    member (``sequence``); ``columns`` fixes its column order.
    ``wall_time_seconds`` is only stored when timing was requested, so
    identical invocations give identical files.
    """

    problem: str
    grid: dict
    command: list[str]
    columns: list[str]
    table: list[dict]
    cq: dict
    status: str | None
    wall_time_seconds: float | None = None
    notes: list[str] = field(default_factory=list)

    _META = ("problem", "grid", "command", "status", "wall_time_seconds", "notes", "cq")

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "grid": self.grid,
            "command": list(self.command),
            "status": self.status,
            "wall_time_seconds": self.wall_time_seconds,
            "notes": list(self.notes),
            "columns": list(self.columns),
            "table": [{c: row[c] for c in self.columns} for row in self.table],
            "cq": self.cq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(
            problem=d["problem"],
            grid=d["grid"],
            command=list(d["command"]),
            columns=list(d["columns"]),
            table=[dict(r) for r in d["table"]],
            cq=d["cq"],
            status=d["status"],
            wall_time_seconds=d.get("wall_time_seconds"),
            notes=list(d.get("notes", [])),
        )

    def to_json(self) -> str:
        return json.dumps(_encode(self.to_dict()), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(_decode(json.loads(text)))

    def to_csv(self) -> str:
        """``# key: <json>`` header lines for the metadata, then the table as CSV."""
        out = io.StringIO()
        for key in self._META:
            out.write(f"# {key}: {json.dumps(_encode(getattr(self, key)), allow_nan=False)}\n")
        out.write(",".join(self.columns) + "\n")
        for row in self.table:
            out.write(",".join(_csv_cell(_decode(_encode(row[c]))) for c in self.columns) + "\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RunReport":
        meta: dict = {}
        lines = text.splitlines()
        i = 0
        while i < len(lines) and lines[i].startswith("# "):
            key, _, payload = lines[i][2:].partition(": ")
            meta[key] = _decode(json.loads(payload))
            i += 1
        if i >= len(lines):
            raise InputError("CSV report has no table header")
        columns = lines[i].split(",")
        table = []
        for line in lines[i + 1 :]:
            cells = line.split(",")
            if len(cells) != len(columns):
                raise InputError(f"CSV row has {len(cells)} cells, expected {len(columns)}")
            table.append({c: _csv_parse_cell(s) for c, s in zip(columns, cells)})
        meta["columns"] = columns
        meta["table"] = table
        return cls.from_dict(meta)

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


# ---------------------------------------------------------------- node tables


def write_node_table(path, grid: TimeGrid, values) -> None:
    """One line per node: the node time, then the values, in shortest round-trip decimals."""
    values = np.asarray(values, dtype=float).reshape(grid.n_nodes, -1)
    with open(path, "w") as fh:
        for t, row in zip(grid.nodes, values):
            fh.write(" ".join(repr(float(a)) for a in (t, *row)) + "\n")


def read_node_table(path, grid: TimeGrid | None, n_cols: int, T: float = 1.0):
    """Parse a node table with ``n_cols`` value columns after the time column.

    Blank lines and ``#`` comments are skipped. When ``grid`` is None the
    midpoint grid on ``[0, T]`` with one node per row is used.

    Raises
    ------
    InputError
        Naming the offending row (0-based, data rows only) for a
        non-numeric entry, a wrong column count or a time off the grid.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            rows.append(s.split())
    if not rows:
        raise InputError(f"{path}: no data rows")
    if grid is None:
        grid = make_uniform_grid(T, len(rows))
    if len(rows) != grid.n_nodes:
        raise InputError(f"{path}: {len(rows)} rows, grid has {grid.n_nodes} nodes")
    out = np.empty((grid.n_nodes, n_cols))
    for i, cells in enumerate(rows):
        if len(cells) != n_cols + 1:
            raise InputError(f"{path}: row {i} has {len(cells) - 1} value columns, expected {n_cols}")
        try:
            nums = [float(c) for c in cells]
        except ValueError:
            raise InputError(f"{path}: row {i} is not numeric") from None
        if not all(math.isfinite(a) for a in nums):
            raise InputError(f"{path}: row {i} has a non-finite entry")
        if abs(nums[0] - grid.nodes[i]) > GRID_TOL:
            raise InputError(f"{path}: row {i} time {nums[0]!r} != grid node {grid.nodes[i]!r}")
        out[i] = nums[1:]
    return grid, out


# ---------------------------------------------------------------- commands


def _residual_row(report: ResidualReport) -> dict:
    return report.scalars()


def _grid_dict(grid: TimeGrid) -> dict:
    return {"T": grid.T, "n_nodes": grid.n_nodes, "rule": "midpoint"}


def _check_nodes(problem_id: str, n_nodes: int) -> None:
    if n_nodes < 1:
        raise InputError("--nodes must be positive")
    if problem_id == BuiltinProblemId.EXAMPLE2.value and n_nodes % 2:
        raise InputError("example2 needs an even --nodes: an odd midpoint grid contains t = 1/2")


def _check_writable(path: str | None) -> None:
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK) or os.path.isdir(path):
        raise InputError(f"cannot write report to {path!r}")


def _emit(report: RunReport, args) -> None:
    text = report.render(args.format)
    if args.out is None:
        sys.stdout.write(text)
        return
    try:
        with open(args.out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write report to {args.out!r}: {exc}") from None


def _solve_table(trace: SolverTrace) -> tuple[list[str], list[dict]]:
    rows = []
    for k, rec in enumerate(trace.iterates, start=1):
        row = {"k": k, "rho": rec.rho}
        row.update(_residual_row(rec.report))
        row.update(
            mult_sup=rec.mult.sup_norm(),
            mult_sup_unprojected=rec.mult_sup_unprojected,
            progress=rec.progress,
            inner_iterations=rec.inner_iterations,
            projection_active=rec.projection_active,
        )
        rows.append(row)
    columns = list(rows[0]) if rows else ["k"]
    return columns, rows


def cmd_solve(args, argv: Sequence[str]) -> int:
    _check_nodes(args.problem, args.nodes)
    _check_writable(args.out)
    problem = build(args.problem, args.nodes)
    config = AlmConfig(n_nodes=args.nodes, stop_tol=args.tol, outer_max=args.max_outer)
    if args.rho0 is not None:
        config.rho0 = args.rho0
    if args.rho_growth is not None:
        config.rho_growth = args.rho_growth
    if args.safeguard is not None:
        config.u_safeguard = config.v_safeguard = args.safeguard
    try:
        config.validate()
    except ValueError as exc:
        raise InputError(str(exc)) from None

    start = time.perf_counter()
    trace = solve(problem, config)
    notes = list(trace.notes)
    cq_dict: dict = {}
    if trace.iterates:
        cq = diagnose(problem, trace, CqThresholds(growth_factor=config.rho_growth))
        cq_dict = cq.to_dict()
        notes.extend(cq.notes)
    elapsed = time.perf_counter() - start
    columns, rows = _solve_table(trace)
    report = RunReport(
        problem=problem.name,
        grid=_grid_dict(problem.grid(args.nodes)),
        command=list(argv),
        columns=columns,
        table=rows,
        cq=cq_dict,
        status=trace.status.value,
        wall_time_seconds=elapsed if args.timing else None,
        notes=notes,
    )
    _emit(report, args)
    if args.out is not None:
        print(f"{problem.name}: {trace.status.value} after {len(trace)} outer iterations ({elapsed:.2f} s)")
    return EXIT_CODES[trace.status]


def cmd_sequence(args, argv: Sequence[str]) -> int:
    if args.problem not in (BuiltinProblemId.EXAMPLE1.value, BuiltinProblemId.EXAMPLE2.value):
        raise InputError(f"no explicit AKKT sequence for {args.problem!r}")
    if args.k_max < 1:
        raise InputError("--k-max must be at least 1")
    _check_nodes(args.problem, args.nodes)
    _check_writable(args.out)
    problem = build(args.problem, args.nodes)
    grid = problem.grid(args.nodes)
    start = time.perf_counter()
    pairs = [paper_sequence(args.problem, k, grid) for k in range(1, args.k_max + 1)]
    reports = akkt_sequence_report(problem, pairs)
    limit, _ = reference_pair(args.problem, grid)
    cq = diagnose(problem, pairs, limit=limit)
    verdict = pw_akkt_check(problem, pairs, reference=limit, reports=reports)
    fit = min_kkt_stationarity(problem, limit)
    elapsed = time.perf_counter() - start

    rows = []
    for k, ((_, mult), rep) in enumerate(zip(pairs, reports), start=1):
        row = {"k": k}
        row.update(_residual_row(rep))
        row["mult_sup"] = mult.sup_norm()
        rows.append(row)
    notes = [
        f"pw-AKKT trend toward the reference point: {'certified' if verdict.certified else 'not certified'}",
        f"min_kkt_stationarity at the reference point: {fit.value!r}",
    ]
    notes.extend(verdict.notes)
    if args.problem == BuiltinProblemId.EXAMPLE2.value:
        notes.append(
            "multipliers blow up like 1/(t-1/2)^2 and are not essentially bounded; "
            f"largest sampled value {max(r['mult_sup'] for r in rows)!r} on this grid"
        )
    notes.extend(cq.notes)
    report = RunReport(
        problem=problem.name,
        grid=_grid_dict(grid),
        command=list(argv),
        columns=list(rows[0]),
        table=rows,
        cq=cq.to_dict(),
        status="certified" if verdict.certified else "not_certified",
        wall_time_seconds=elapsed if args.timing else None,
        notes=notes,
    )
    _emit(report, args)
    return EXIT_OK


def cmd_residual(args, argv: Sequence[str]) -> int:
    problem = build(args.problem)
    try:
        grid, xv = read_node_table(args.x, None if args.nodes is None else problem.grid(args.nodes), problem.n, problem.T)
        _, mv = read_node_table(args.mult, grid, problem.p + problem.m, problem.T)
    except OSError as exc:
        raise InputError(str(exc)) from None
    x = Trajectory(grid, xv)
    mult = MultiplierPath(grid, mv[:, : problem.p], mv[:, problem.p :])
    report = kkt_residual(problem, x, mult)
    fit = min_kkt_stationarity(problem, x)
    doc = {
        "problem": problem.name,
        "grid": _grid_dict(grid),
        "residuals": report.scalars(),
        "is_kkt": report.is_kkt(args.tol),
        "min_kkt_stationarity": fit.value,
        "primal_feasible": fit.feasible,
    }
    sys.stdout.write(json.dumps(_encode(doc), indent=2, allow_nan=False) + "\n")
    return EXIT_OK


def _build_parser() -> _Parser:
    ids = [p.value for p in BuiltinProblemId]
    parser = _Parser(prog="ctp-akkt", description="AKKT diagnostics for continuous-time programs")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, with_out=True):
        p.add_argument("--problem", required=True, choices=ids)
        p.add_argument("--nodes", type=int, default=200)
        if with_out:
            p.add_argument("--out", default=None, help="report path (default: stdout)")
            p.add_argument("--format", choices=("json", "csv"), default="json")
            p.add_argument("--timing", action="store_true", help="store wall time in the report")

    p = sub.add_parser("solve", help="run the safeguarded augmented Lagrangian method")
    common(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-outer", type=int, default=50)
    p.add_argument("--rho0", type=float, default=None)
    p.add_argument("--rho-growth", type=float, default=None)
    p.add_argument("--safeguard", type=float, default=None, help="multiplier box half-width")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sequence", help="evaluate the explicit AKKT sequence of an example")
    common(p)
    p.add_argument("--k-max", type=int, default=20)
    p.set_defaults(func=cmd_sequence)

    p = sub.add_parser("residual", help="evaluate residuals of node-table files")
    p.add_argument("--problem", required=True, choices=ids)
    p.add_argument("--x", required=True)
    p.add_argument("--mult", required=True)
    p.add_argument("--nodes", type=int, default=None, help="expected node count (default: row count)")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_residual)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"ctp-akkt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
