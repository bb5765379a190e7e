"""Command-line front end.

Exit codes: 0 success, 2 parse or usage error, 3 precondition violation,
4 semantic error (inconsistent input).  Stats go to stdout as one JSON
line; data goes to ``--out`` (or stdout when omitted).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .bench import RNG_NAME, format_dataset, gen_er_abox, write_table
from .chase import certain_answers
from .dl import format_abox, h_complete, normalize, parse_abox, parse_cq, parse_tbox
from .errors import InconsistentInput, ParseError, PreconditionError
from .evaluate import EvalStats, LinearSearch, all_answers, eval_circuit, eval_seminaive
from .ndl import format_program, parse_program, validate
from .pipeline import ABOX_MODES, METHODS, rewrite
from .rewrite_td import parse_decomposition


def _read(path: str) -> str:
    return Path(path).read_text()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _answers_csv(header: Sequence[str], rows: Sequence[tuple[str, ...]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if not header:
        writer.writerow(["answer"])
        if rows:
            writer.writerow(["true"])
    else:
        writer.writerow(header)
        writer.writerows(rows)
    return buf.getvalue()


def cmd_rewrite(args: argparse.Namespace) -> int:
    tbox = normalize(parse_tbox(_read(args.tbox)))
    cq = parse_cq(_read(args.query))
    td = parse_decomposition(_read(args.td), cq) if args.td else None
    program = rewrite(
        args.method, tbox, cq, abox_mode=args.abox_mode, root=args.root, td=td, skinny=args.skinny
    )
    _emit(format_program(program, eq=args.eq), args.out)
    report = validate(program)
    stats = {
        "clauses": len(program),
        "depth": report.depth,
        "width": report.width,
        "linear": report.linear,
        "skinny": report.skinny,
        "predicates": len(program.idb),
    }
    print(json.dumps(stats))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    program = parse_program(_read(args.program))
    abox = parse_abox(_read(args.abox))
    goal = args.goal or program.goal
    arity = program.arities.get(goal, program.goal_arity)
    header = program.param_names(goal) if program.params and goal in program.params else ()
    if len(header) != arity:
        header = tuple(f"x{i + 1}" for i in range(arity))
    stats = EvalStats()
    if args.engine == "seminaive":
        rows = eval_seminaive(program, abox, goal)
    elif args.candidate is not None:
        candidate = tuple(c for c in args.candidate.split(",") if c) if args.candidate else ()
        if args.engine == "linear":
            found = LinearSearch(program, abox).decide(candidate, goal, stats)
        else:
            found = eval_circuit(program, abox, candidate, goal, stats)
        rows = [candidate] if found else []
    else:
        if goal != program.goal:
            raise PreconditionError("a candidate sweep evaluates the program goal; pass --candidate for other goals")
        rows = all_answers(program, abox, args.engine, stats)
    _emit(_answers_csv(header, rows), args.out)
    if args.stats:
        print(json.dumps(stats.as_dict()))
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    tbox = normalize(parse_tbox(_read(args.tbox)))
    cq = parse_cq(_read(args.query))
    abox = parse_abox(_read(args.abox))
    rows = sorted(certain_answers(tbox, cq, abox))
    _emit(_answers_csv(cq.answer_vars, rows), args.out)
    return 0


def cmd_hcomplete(args: argparse.Namespace) -> int:
    tbox = normalize(parse_tbox(_read(args.tbox)))
    abox = parse_abox(_read(args.abox))
    _emit(format_abox(h_complete(tbox, abox)), args.out)
    return 0


def cmd_bench_gen(args: argparse.Namespace) -> int:
    abox = gen_er_abox(args.V, args.p, args.q, args.seed)
    _emit(format_dataset(abox, args.V, args.p, args.q, args.seed), args.out)
    print(json.dumps({"roles": len(abox.role_facts), "concepts": len(abox.concept_facts)}))
    return 0


def cmd_bench_table(args: argparse.Namespace) -> int:
    methods = [m for part in args.method for m in part.split(",") if m]
    png = write_table(args.out, methods, args.sequence, args.nmax)
    print(json.dumps({"csv": str(args.out), "chart": str(png)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omqrewrite", description="Rewrite ontology-mediated queries into nonrecursive datalog.")
    parser.add_argument("--version", action="version", version=f"omqrewrite {__version__} (rng: {RNG_NAME})")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rewrite", help="rewrite an OMQ into an NDL program")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--tbox", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--out")
    p.add_argument("--abox-mode", choices=ABOX_MODES, default="hcomplete")
    p.add_argument("--root", help="root variable for the slice rewriting")
    p.add_argument("--td", help="tree decomposition file for the td rewriting")
    p.add_argument("--eq", choices=("inline", "explicit"), default="inline")
    p.add_argument("--skinny", action="store_true", help="binarise clause bodies")
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("eval", help="evaluate an NDL program over an ABox")
    p.add_argument("--program", required=True)
    p.add_argument("--abox", required=True)
    p.add_argument("--engine", choices=("seminaive", "linear", "circuit"), default="seminaive")
    p.add_argument("--candidate", help="comma-separated tuple; without it linear/circuit sweep all tuples")
    p.add_argument("--goal")
    p.add_argument("--out")
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="certain answers via the chase")
    p.add_argument("--tbox", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--abox", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("hcomplete", help="close an ABox under the TBox hierarchy")
    p.add_argument("--tbox", required=True)
    p.add_argument("--abox", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hcomplete)

    bench = sub.add_parser("bench", help="benchmark datasets and tables")
    bsub = bench.add_subparsers(dest="bench_command", required=True)
    p = bsub.add_parser("gen", help="random Erdos-Renyi ABox")
    p.add_argument("--V", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench_gen)
    p = bsub.add_parser("table", help="clause counts per query length (CSV plus PNG chart)")
    p.add_argument("--method", action="append", required=True, help="td, slice or tw; repeat or comma-separate")
    p.add_argument("--sequence", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--nmax", type=int, default=15)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench_table)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParseError as e:
        print(f"ParseError: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except PreconditionError as e:
        print(str(e), file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"PreconditionViolation: {e}", file=sys.stderr)
        return 3
    except InconsistentInput as e:
        print(str(e), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
