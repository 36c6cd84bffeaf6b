"""f2lab command line.

Exit codes: 0 success, 1 a mathematically negative answer (no subspace,
UNSAT, failed certificate), 2 a search budget ran out, 64 bad usage or a
malformed input file.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import io
from .extremal import f_exact, fk_check, niveau_experiment
from .gf2_core import GroupSpec, full_space
from .increment import DichotomyError, DichotomyParams, run_dichotomy, trace_csv_rows
from .ramsey import (
    PipelineError,
    bound_table,
    multicolor_pipeline,
    ramsey_value,
    union_bound_lower,
)
from .setops import cover_bound, dyadic_sumfree_cover, is_solution_free, is_sum_free
from .spectral import conv_counts
from .subspace_search import BudgetExhausted, SearchBudget, Status, find_subspace_avoiding, sharpness_witness

EXIT_OK, EXIT_NEGATIVE, EXIT_EXHAUSTED, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        raise UsageError(f"{self.prog}: {message}")


@dataclass(frozen=True)
class RunConfig:
    seed: int
    workers: int
    node_limit: int
    time_limit: float

    def budget(self, randomized_first: bool = True) -> SearchBudget:
        return SearchBudget(self.node_limit, self.time_limit, randomized_first, self.seed)


def _config(args) -> RunConfig:
    workers = args.workers
    if workers is None:
        env = os.environ.get("F2LAB_WORKERS", "1")
        try:
            workers = int(env)
        except ValueError:
            raise UsageError(f"F2LAB_WORKERS={env!r} is not an integer") from None
    if workers < 1:
        raise UsageError("--workers must be positive")
    return RunConfig(args.seed, workers, args.node_limit, args.time_limit)


def _rational(text: str) -> Fraction:
    try:
        return io.parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated list of integers") from None


def _emit(args, payload) -> None:
    text = io.dumps(payload)
    if getattr(args, "out", None):
        io.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _csv_text(rows: list[list]) -> str:
    buf = _stdio.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def cmd_set(args, cfg: RunConfig) -> int:
    if args.action == "sharpness":
        if args.n is None or args.d is None:
            raise UsageError("set sharpness needs --n and --d")
        S = sharpness_witness(args.n, args.d, verify=False)
        text = io.dumps(io.set_to_json(S, args.encoding))
        io.write_atomic(args.out, text) if args.out else sys.stdout.write(text)
        return EXIT_OK
    if not args.set:
        raise UsageError(f"set {args.action} needs --set")
    S = io.read_set(args.set)
    if args.action == "convert":
        text = io.dumps(io.set_to_json(S, args.encoding))
        io.write_atomic(args.out, text) if args.out else sys.stdout.write(text)
        return EXIT_OK
    g = S.ambient
    sf = is_sum_free(S)
    _emit(
        args,
        {
            "schema": io.SCHEMA,
            "p": g.p,
            "n": g.n,
            "card": S.card,
            "density": S.density,
            "contains_zero": 0 in S,
            "sum_free": sf.ok,
            "sum_witness": sf.witness,
            "solution_free_pair": is_solution_free(S),
        },
    )
    return EXIT_OK


def cmd_conv(args, cfg: RunConfig) -> int:
    A = io.read_set(args.a)
    B = io.read_set(args.b) if args.b else A
    cc = conv_counts(A, B, method=args.method)
    support = [[int(x), int(c)] for x, c in enumerate(cc.counts) if c]
    _emit(
        args,
        {
            "schema": io.SCHEMA,
            "p": A.ambient.p,
            "n": A.ambient.n,
            "card_a": cc.card_a,
            "card_b": cc.card_b,
            "mu_conv_at_zero": cc.mu_conv(0) if cc.card_a and cc.card_b else None,
            "counts": support,
        },
    )
    return EXIT_OK


def cmd_avoid(args, cfg: RunConfig) -> int:
    S = io.read_set(args.set)
    V = io.read_subspace(args.space) if args.space else full_space(S.ambient)
    out = find_subspace_avoiding(S, V, args.dim, cfg.budget(not args.no_random))
    _emit(args, {"schema": io.SCHEMA, "status": out.status, "reason": out.reason, "nodes": out.nodes, "space": out.space})
    return {Status.FOUND: EXIT_OK, Status.NONE: EXIT_NEGATIVE, Status.EXHAUSTED: EXIT_EXHAUSTED}[out.status]


def _report_payload(rep) -> dict:
    return {
        "schema": io.SCHEMA,
        "ambient": rep.ambient,
        "params": rep.params,
        "final_space": rep.final_space,
        "achieved_codim": rep.achieved_codim,
        "codim_budget_bound": rep.codim_budget_bound,
        "steps_per_index_cap": rep.params.steps_per_index,
        "step_counts": rep.step_counts,
        "halted_within": rep.halted_within,
        "certified": rep.certified,
        "statuses": [{**io.jsonable(s), "label": s.label} for s in rep.statuses],
        "trace": rep.trace,
    }


def cmd_dichotomy(args, cfg: RunConfig) -> int:
    paths = [p for p in args.sets.split(",") if p]
    As = [io.read_set(p) for p in paths]
    p = As[0].ambient.p
    try:
        params = DichotomyParams(args.alpha, args.gamma, Fraction(1, args.factor), args.max_step_codim, p)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    code = EXIT_OK
    try:
        rep = run_dichotomy(As, params)
    except DichotomyError as exc:
        rep, code = exc.report, EXIT_EXHAUSTED
        sys.stderr.write(f"dichotomy stopped: {exc}\n")
    payload = _report_payload(rep)
    payload["error"] = None if code == EXIT_OK else "increment search failed; trace is partial"
    _emit(args, payload)
    if args.csv:
        io.write_atomic(args.csv, _csv_text(trace_csv_rows(rep)))
    return code


def _coloring_payload(col, dims, n) -> dict:
    return {
        "schema": io.SCHEMA,
        "kind": "coloring",
        "p": col.ambient.p,
        "n": n,
        "dims": list(dims),
        "colors": {str(k): v for k, v in col.line_colors().items()},
    }


def cmd_ramsey(args, cfg: RunConfig) -> int:
    dims = args.dims
    if not dims or min(dims) < 1:
        raise UsageError("--dims needs positive integers")
    res = ramsey_value(dims, args.nmax, cfg.budget(False), args.p)
    if args.emit_certificates:
        d = Path(args.emit_certificates)
        tag = "-".join(map(str, dims))
        for n, col in sorted(res.witnesses.items()):
            io.write_atomic(d / f"witness_{tag}_n{n}.json", io.dumps(_coloring_payload(col, dims, n)))
        for n, nodes in sorted(res.unsat_nodes.items()):
            log = (
                f"dims={tag} p={args.p} n={n}\n"
                f"result=UNSAT\nnodes={nodes}\n"
                "method=ordered DFS with forward checking, value precedence and GL lex-leader pruning\n"
            )
            io.write_atomic(d / f"unsat_{tag}_n{n}.log", log)
    _emit(
        args,
        {
            "schema": io.SCHEMA,
            "dims": list(dims),
            "p": args.p,
            "value": res.exact,
            "lower": res.lo,
            "upper": res.hi,
            "exhausted_levels": res.exhausted,
            "derived": "exhaustive search by this tool",
        },
    )
    if res.exact is not None:
        return EXIT_OK
    return EXIT_EXHAUSTED if res.exhausted else EXIT_OK


def _pairs(text: str | None) -> list[tuple[int, int]] | None:
    if not text:
        return None
    try:
        return [tuple(int(v) for v in item.split(":")) for item in text.split(",")]  # type: ignore[misc]
    except ValueError:
        raise UsageError(f"--pairs expects a:b,a:b,..., got {text!r}") from None


def cmd_pipeline(args, cfg: RunConfig) -> int:
    As = [io.read_set(p) for p in args.sets.split(",") if p]
    try:
        rep = multicolor_pipeline(As, args.d, args.p, cfg.budget(), _pairs(args.pairs))
        code, failure = EXIT_OK, None
    except PipelineError as exc:
        rep, code, failure = exc.report, EXIT_NEGATIVE, exc.clause
    except DichotomyError as exc:
        sys.stderr.write(f"dichotomy stopped: {exc}\n")
        return EXIT_EXHAUSTED
    _emit(
        args,
        {
            "schema": io.SCHEMA,
            "d": rep.d,
            "p": rep.p,
            "pairs": rep.pairs,
            "alpha": rep.alpha,
            "dichotomy_space": rep.dichotomy.final_space if rep.dichotomy else None,
            "choices": rep.choices,
            "mu_S": rep.mu_S,
            "zero_free": rep.zero_free,
            "result": rep.result,
            "disjoint": rep.disjoint,
            "failed_clause": failure,
        },
    )
    return code


def cmd_ftable(args, cfg: RunConfig) -> int:
    mode = "sampled" if args.sampled else "exact"
    rows = [["n", "alpha", "mode", "value", "witness_points"]]
    for a in args.alphas.split(","):
        alpha = _rational(a)
        e = f_exact(args.n, alpha, mode, args.trials, cfg.seed, args.force)
        rows.append([e.n, str(e.alpha), e.mode, e.value, " ".join(map(str, e.extremal_witness.points().tolist()))])
    text = _csv_text(rows)
    io.write_atomic(args.out, text) if args.out else sys.stdout.write(text)
    return EXIT_OK


def cmd_fk(args, cfg: RunConfig) -> int:
    A = io.read_set(args.set)
    V = io.read_subspace(args.space)
    try:
        res = fk_check(A, V, args.k, cfg.node_limit)
    except BudgetExhausted as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_EXHAUSTED
    _emit(args, {"schema": io.SCHEMA, "k": args.k, **io.jsonable(res)})
    return EXIT_OK if res.holds else EXIT_NEGATIVE


def cmd_niveau(args, cfg: RunConfig) -> int:
    _emit(args, {"schema": io.SCHEMA, **io.jsonable(niveau_experiment(args.n, args.alpha))})
    return EXIT_OK


def cmd_bounds(args, cfg: RunConfig) -> int:
    rows = [["d", "union_bound_lower", *bound_table(2, 1)]]
    for d in args.d:
        tab = bound_table(d, args.c, args.C)
        rows.append([d, union_bound_lower(d) if d >= 2 else "", *tab.values()])
    text = _csv_text(rows)
    io.write_atomic(args.out, text) if args.out else sys.stdout.write(text)
    return EXIT_OK


def cmd_cover(args, cfg: RunConfig) -> int:
    classes = dyadic_sumfree_cover(args.p, args.n)
    _emit(
        args,
        {
            "schema": io.SCHEMA,
            "p": args.p,
            "n": args.n,
            "classes": len(classes),
            "bound": cover_bound(args.p, args.n),
            "sizes": [c.card for c in classes],
        },
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="f2lab", description="Exact tools for subspaces, sumsets and geometric Ramsey numbers over F_p.")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None, help="parallelism cap (default: $F2LAB_WORKERS or 1)")
    ap.add_argument("--node-limit", type=int, default=5_000_000)
    ap.add_argument("--time-limit", type=float, default=120.0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("set", help="inspect, convert or generate set files")
    s.add_argument("action", choices=["verify", "convert", "sharpness"])
    s.add_argument("--set")
    s.add_argument("--encoding", choices=["hexmask", "points"], default="hexmask")
    s.add_argument("--n", type=int)
    s.add_argument("--d", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_set)

    s = sub.add_parser("conv", help="difference convolution counts")
    s.add_argument("--a", required=True)
    s.add_argument("--b")
    s.add_argument("--method", choices=["auto", "transform", "direct"], default="auto")
    s.add_argument("--out")
    s.set_defaults(func=cmd_conv)

    s = sub.add_parser("avoid", help="find a subspace disjoint from a set")
    s.add_argument("--set", required=True)
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--space")
    s.add_argument("--no-random", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_avoid)

    s = sub.add_parser("dichotomy", help="run the sparsity/expansion dichotomy")
    s.add_argument("--sets", required=True)
    s.add_argument("--alpha", type=_rational, required=True)
    s.add_argument("--gamma", type=_rational, required=True)
    s.add_argument("--factor", type=int, choices=[128, 16], default=128)
    s.add_argument("--max-step-codim", type=int, default=6)
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_dichotomy)

    s = sub.add_parser("ramsey", help="exact geometric Ramsey numbers by search")
    s.add_argument("--dims", type=_int_list, required=True)
    s.add_argument("--nmax", type=int, default=4)
    s.add_argument("--p", type=int, default=2)
    s.add_argument("--emit-certificates")
    s.add_argument("--out")
    s.set_defaults(func=cmd_ramsey)

    s = sub.add_parser("pipeline", help="subspace avoiding r solution-free sets")
    s.add_argument("--sets", required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--p", type=int)
    s.add_argument("--pairs")
    s.add_argument("--out")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("ftable", help="table of f(n, alpha)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--alphas", required=True)
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--sampled", action="store_true")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--force", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_ftable)

    s = sub.add_parser("fk", help="parallelepiped condition for A over V")
    s.add_argument("--set", required=True)
    s.add_argument("--space", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fk)

    s = sub.add_parser("niveau", help="largest subspace in A + A for a niveau set")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--alpha", type=_rational, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_niveau)

    s = sub.add_parser("bounds", help="lower and upper bound shapes for R(2, d)")
    s.add_argument("--d", type=_int_list, required=True)
    s.add_argument("--c", type=_rational, default=Fraction(1))
    s.add_argument("--C", type=_rational, default=Fraction(1))
    s.add_argument("--out")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("cover", help="dyadic sum-free cover of F_p^n minus 0")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_cover)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        cfg = _config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except io.FormatError as exc:
        sys.stderr.write(f"malformed input: {exc}\n")
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
