"""Command line front end.

    amgsolve solve --poisson 32
    amgsolve solve --matrix A.mtx --rhs b.mtx --config solver.cfg --output x.mtx
    amgsolve bench --sizes 16 32 64 --repeats 3
    amgsolve poisson-dump 32 --output A.mtx --rhs-output b.mtx
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import ConfigError, ParamTree, parse_assignment, parse_config, registered_keys
from .mmio import read_matrix_market, read_rhs, write_matrix_market, write_vector
from .poisson import generate_poisson
from .report import bench, format_table, timed_solve

log = logging.getLogger("amgsolve")


def _tree(args) -> ParamTree:
    tree = ParamTree()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            tree = parse_config(fh.read())
    for item in args.set or []:
        tree.put(*parse_assignment(item))
    return tree


def _common(p):
    p.add_argument("--config", metavar="PATH", help="parameter file (path = value lines)")
    p.add_argument("--set", metavar="PATH=VALUE", action="append",
                   help="override one parameter; repeatable")
    p.add_argument("--threads", type=int, default=1, metavar="K",
                   help="backend worker threads (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amgsolve", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one system and print a report")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", metavar="PATH", help="MatrixMarket matrix")
    src.add_argument("--poisson", type=int, metavar="N", help="3D Poisson on an N^3 grid")
    p.add_argument("--rhs", metavar="PATH", help="MatrixMarket right-hand side (default: ones)")
    p.add_argument("--output", metavar="PATH", help="write the solution vector here")
    p.add_argument("--format", choices=("text", "json"), default="text")
    _common(p)

    p = sub.add_parser("bench", help="Poisson benchmark table")
    p.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64], metavar="N")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--output", metavar="PATH", help="write the table here as well")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    _common(p)

    p = sub.add_parser("poisson-dump", help="write the Poisson problem as MatrixMarket")
    p.add_argument("n", type=int)
    p.add_argument("--output", metavar="PATH", required=True, help="matrix file")
    p.add_argument("--rhs-output", metavar="PATH", help="right-hand side file")

    sub.add_parser("keys", help="list recognised parameters")
    return parser


def cmd_solve(args) -> int:
    if args.matrix:
        A = read_matrix_market(args.matrix)
        f = read_rhs(args.rhs) if args.rhs else np.ones(A.nrows)
    else:
        problem = generate_poisson(args.poisson)
        A = problem.A
        f = read_rhs(args.rhs) if args.rhs else problem.rhs
    if f.shape[0] != A.nrows:
        raise ValueError(f"rhs has {f.shape[0]} entries, matrix has {A.nrows} rows")
    u, report = timed_solve(A, f, _tree(args), args.threads)
    print(report.to_json() if args.format == "json" else report.to_text(), end="")
    if args.output:
        write_vector(args.output, u)
    return 0 if report.converged else 2


def cmd_bench(args) -> int:
    rows = bench(args.sizes, _tree(args), args.repeats, args.threads)
    table = format_table(rows, "json" if args.format == "json" else "tsv")
    sys.stdout.write(table)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(table)
    return 0 if all(r.ok for r in rows) else 2


def cmd_poisson_dump(args) -> int:
    problem = generate_poisson(args.n)
    write_matrix_market(args.output, problem.A)
    if args.rhs_output:
        write_vector(args.rhs_output, problem.rhs)
    return 0


def cmd_keys(args) -> int:
    for key in registered_keys():
        choices = f" [{'|'.join(key.choices)}]" if key.choices else ""
        print(f"{key.path}\t{key.type.__name__}\t{key.default}\t{key.help}{choices}")
    return 0


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "poisson-dump": cmd_poisson_dump,
            "keys": cmd_keys}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, ConfigError, RuntimeError) as exc:
        print(f"amgsolve: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
