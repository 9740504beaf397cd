"""Timed solves and the benchmark table."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

from .backend import Builtin
from .config import ParamTree, build_runtime_solver
from .poisson import generate_poisson
from .sparse import CSRMatrix

__all__ = ["BenchRow", "SolveReport", "bench", "format_table", "timed_solve"]

TIMER_RESOLUTION = time.get_clock_info("perf_counter").resolution


@dataclass
class SolveReport:
    setup_seconds: float
    solve_seconds: float
    total_seconds: float
    iterations: int
    relative_residual: float
    converged: bool
    levels: int
    rows: list
    nnz: list
    operator_complexity: float
    grid_complexity: float
    breakdown: str | None = None
    config: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            ("converged", str(self.converged).lower()),
            ("iterations", str(self.iterations)),
            ("relative_residual", f"{self.relative_residual:.6e}"),
            ("setup_seconds", f"{self.setup_seconds:.6f}"),
            ("solve_seconds", f"{self.solve_seconds:.6f}"),
            ("total_seconds", f"{self.total_seconds:.6f}"),
            ("levels", str(self.levels)),
            ("level_rows", ",".join(map(str, self.rows))),
            ("level_nnz", ",".join(map(str, self.nnz))),
            ("operator_complexity", f"{self.operator_complexity:.6f}"),
            ("grid_complexity", f"{self.grid_complexity:.6f}"),
        ]
        if self.breakdown:
            lines.append(("breakdown", self.breakdown))
        lines += [(f"config.{k}", str(v)) for k, v in sorted(self.config.items())]
        return "".join(f"{k}\t{v}\n" for k, v in lines)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def timed_solve(A: CSRMatrix, f, tree: ParamTree, workers: int = 1):
    """Build a solver from ``tree`` and solve once, timing both phases.

    Returns ``(u, SolveReport)``.
    """
    backend = Builtin(workers)
    try:
        backend.warm_up()
        t0 = time.perf_counter()
        solver = build_runtime_solver(A, tree, backend)
        t1 = time.perf_counter()
        u, result = solver(f)
        t2 = time.perf_counter()
    finally:
        backend.close()
    h = solver.precond.report()
    report = SolveReport(
        setup_seconds=t1 - t0, solve_seconds=t2 - t1, total_seconds=t2 - t0,
        iterations=result.iterations, relative_residual=result.relative_residual,
        converged=result.converged, levels=len(h.rows), rows=list(h.rows),
        nnz=list(h.nnz), operator_complexity=h.operator_complexity,
        grid_complexity=h.grid_complexity, breakdown=result.breakdown,
        config=dict(tree.items()))
    return u, report


@dataclass
class BenchRow:
    n: int
    unknowns: int
    nnz: int
    setup_s: float
    solve_s: float
    total_s: float
    iterations: int
    residual: float
    converged: bool
    # iteration counts differed between repeats
    nondeterministic: bool = False

    @property
    def ok(self) -> bool:
        return self.converged and not self.nondeterministic


COLUMNS = ("n", "unknowns", "nnz", "setup_s", "solve_s", "total_s", "iterations",
           "residual", "status")


def bench(sizes, tree: ParamTree | None = None, repeats: int = 1,
          workers: int = 1) -> list[BenchRow]:
    """Poisson benchmark over grid sizes ``n`` (``n^3`` unknowns).

    Timings are those of the repeat with the smallest total time. Iteration
    counts must agree across repeats; rows where they do not are flagged.
    """
    if not sizes:
        raise ValueError("need at least one size")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    tree = tree or ParamTree()
    rows = []
    for n in sizes:
        problem = generate_poisson(n)
        runs = [timed_solve(problem.A, problem.rhs, tree, workers)[1]
                for _ in range(repeats)]
        best = min(runs, key=lambda r: r.total_seconds)
        rows.append(BenchRow(
            n=n, unknowns=problem.A.nrows, nnz=problem.A.nnz,
            setup_s=best.setup_seconds, solve_s=best.solve_seconds,
            total_s=best.total_seconds, iterations=best.iterations,
            residual=best.relative_residual,
            converged=all(r.converged for r in runs),
            nondeterministic=len({r.iterations for r in runs}) > 1))
    return rows


def _status(row: BenchRow) -> str:
    if row.nondeterministic:
        return "nondeterministic"
    return "converged" if row.converged else "not_converged"


def format_table(rows, fmt: str = "tsv") -> str:
    """Header line plus one tab-separated line per size, or JSON."""
    if fmt == "json":
        return json.dumps([dict(asdict(r), status=_status(r)) for r in rows], indent=2)
    out = ["\t".join(COLUMNS)]
    for r in rows:
        out.append("\t".join([
            str(r.n), str(r.unknowns), str(r.nnz), f"{r.setup_s:.6f}",
            f"{r.solve_s:.6f}", f"{r.total_s:.6f}", str(r.iterations),
            f"{r.residual:.6e}", _status(r)]))
    return "\n".join(out) + "\n"


def read_table(text: str) -> list[dict]:
    """Parse the tab-separated table back into dictionaries."""
    lines = [l for l in text.splitlines() if l.strip()]
    header = lines[0].split("\t")
    casts = dict(n=int, unknowns=int, nnz=int, setup_s=float, solve_s=float,
                 total_s=float, iterations=int, residual=float, status=str)
    return [{k: casts[k](v) for k, v in zip(header, line.split("\t"))}
            for line in lines[1:]]
