"""Command-line interface.

Subcommands: generate (factorize a graph file), verify, count, bound,
nibble-stats, random-regular, bench. All reports are JSON on stdout with
``"schema": 1``; timing lives under ``"perf"`` so golden comparisons can
strip it. Exit codes: 0 success, 1 verification failure or internal error,
2 parse error, 3 precondition violation, 4 retry budgets exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import formats, oracle
from .errors import (
    DomainError,
    FormatError,
    OneFactorError,
    PreconditionViolatedError,
    ResampleGoodGraphError,
    RetryBudgetExhaustedError,
    TooLargeError,
)
from .graph import Factorization, Graph, random_regular, verify_factorization
from .nibble import NibbleParams, check_equitability, run_nibble, stage_log_csv
from .pipeline import RunConfig, desk_defaults, lower_bound_log, run

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_BUDGET = 4


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def _read_graph(path: str) -> Graph:
    return formats.parse_edge_list(Path(path).read_text(encoding="ascii"))


def _config_from_args(args, n: int, d: int) -> RunConfig:
    cfg = desk_defaults(n, d, seed=args.seed)
    overrides = {}
    for name in ("epsilon", "p", "K", "tau_partition", "tau_nibble"):
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            overrides[name] = value
    if args.budget is not None:
        overrides.update(
            good_budget=args.budget,
            partition_budget=args.budget,
            completion_budget=args.budget,
        )
    if args.degenerate:
        overrides["degenerate_mode"] = True
        overrides["K"] = 1
    elif overrides.get("K", cfg.K) > 1:
        overrides.setdefault("degenerate_mode", False)
    return replace(cfg, **overrides)


def cmd_generate(args) -> int:
    g = _read_graph(args.graph)
    cfg = _config_from_args(args, g.n, g.regular_degree() or 0)
    report = run(g, cfg)
    text = formats.write_factorization(report.factorization)
    if args.output:
        Path(args.output).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    doc = report.to_json_dict(include_perf=not args.no_perf)
    if args.output:
        doc["output"] = args.output
    _emit(doc)
    return EXIT_OK if report.valid else EXIT_FAIL


def cmd_verify(args) -> int:
    g = _read_graph(args.graph)
    matchings = formats.parse_factorization(
        Path(args.factorization).read_text(encoding="ascii"), host=g
    )
    report = verify_factorization(g, matchings, require_perfect=not args.allow_partial)
    _emit(
        {
            "schema": 1,
            "valid": report.ok,
            "failure": report.failure,
            "detail": report.detail,
        }
    )
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_count(args) -> int:
    g = _read_graph(args.graph)
    doc: dict = {"schema": 1, "n": g.n, "m": g.num_edges()}
    t0 = time.perf_counter()
    if args.mode in ("pm", "all"):
        doc["pm"] = oracle.count_perfect_matchings(g, cap=args.cap or 24)
    if args.mode in ("unordered", "all"):
        doc["fact_unordered"] = oracle.count_one_factorizations(
            g, "unordered", cap=args.cap or 12
        )
    if args.mode == "ordered":
        doc["fact_ordered"] = oracle.count_one_factorizations(
            g, "ordered", cap=args.cap or 12
        )
    doc["perf"] = {"seconds": round(time.perf_counter() - t0, 6)}
    _emit(doc)
    return EXIT_OK


def cmd_bound(args) -> int:
    c = None if args.simplified else args.C
    value = lower_bound_log(args.n, args.d, c)
    _emit({"schema": 1, "n": args.n, "d": args.d, "C": c, "log_bound": value})
    return EXIT_OK


def cmd_nibble_stats(args) -> int:
    g = _read_graph(args.graph)
    params = NibbleParams(tau=args.tau, delta=args.delta)
    outcome = run_nibble(g, params, args.seed)
    csv_text = stage_log_csv(outcome)
    if args.csv:
        Path(args.csv).write_text(csv_text, encoding="ascii")
    eq = check_equitability(outcome, args.tau, g.max_degree(), slack=args.slack)
    _emit(
        {
            "schema": 1,
            "n": g.n,
            "stages": len(outcome.stage_log),
            "colored": sum(m.size() for m in outcome.matchings),
            "leftover": len(outcome.leftover),
            "equitable": eq.ok,
            "csv": args.csv,
        }
    )
    return EXIT_OK


def cmd_random_regular(args) -> int:
    g = random_regular(args.n, args.d, args.seed)
    text = formats.write_edge_list(g)
    if args.output:
        Path(args.output).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    _emit({"schema": 1, "n": args.n, "d": args.d, "seed": args.seed,
           "output": args.output})
    return EXIT_OK


def cmd_bench(args) -> int:
    suites = {
        "small": [(6, 5), (8, 7), (12, 8)],
        "default": [(6, 5), (8, 7), (20, 12), (40, 24), (60, 36)],
    }
    rows = []
    for n, d in suites[args.suite]:
        g = random_regular(n, d, seed=args.seed) if d < n - 1 else None
        if g is None:
            from .graph import complete_graph

            g = complete_graph(n)
        cfg = desk_defaults(n, d, seed=args.seed)
        t0 = time.perf_counter()
        try:
            report = run(g, cfg)
            ok = report.valid
        except OneFactorError:
            ok = False
        rows.append(
            {"n": n, "d": d, "valid": ok,
             "seconds": round(time.perf_counter() - t0, 4)}
        )
    _emit({"schema": 1, "suite": args.suite, "perf": {"rows": rows}})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="onefactor",
        description="Construct, verify, and count 1-factorizations of dense regular graphs.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="factorize a graph from an edge-list file")
    p.add_argument("graph")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--tau-partition", dest="tau_partition", type=float, default=None)
    p.add_argument("--tau-nibble", dest="tau_nibble", type=float, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--degenerate", action="store_true")
    p.add_argument("--no-perf", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="check a factorization file against a graph")
    p.add_argument("graph")
    p.add_argument("factorization")
    p.add_argument("--allow-partial", action="store_true",
                   help="do not require perfect matchings")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("count", help="exact counts via the enumeration oracle")
    p.add_argument("graph")
    p.add_argument("--mode", choices=["pm", "unordered", "ordered", "all"],
                   default="all")
    p.add_argument("--cap", type=int, default=None)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("bound", help="log of the factorization-count lower bound")
    p.add_argument("n", type=int)
    p.add_argument("d", type=int)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--simplified", action="store_true")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("nibble-stats", help="run the nibble coloring, export stage CSV")
    p.add_argument("graph")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--slack", type=float, default=5.0)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_nibble_stats)

    p = sub.add_parser("random-regular", help="emit a random regular graph")
    p.add_argument("n", type=int)
    p.add_argument("d", type=int)
    p.add_argument("seed", type=int)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_random_regular)

    p = sub.add_parser("bench", help="timing table over a fixed suite")
    p.add_argument("--suite", choices=["small", "default"], default="small")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        _emit({"schema": 1, "error": "parse", "detail": str(exc), "line": exc.line})
        return EXIT_PARSE
    except (PreconditionViolatedError, DomainError, TooLargeError) as exc:
        _emit({"schema": 1, "error": "precondition", "detail": str(exc)})
        return EXIT_PRECONDITION
    except (RetryBudgetExhaustedError, ResampleGoodGraphError) as exc:
        _emit({"schema": 1, "error": "budget", "detail": str(exc)})
        return EXIT_BUDGET
    except OneFactorError as exc:
        _emit({"schema": 1, "error": "internal", "detail": str(exc)})
        return EXIT_FAIL
    except OSError as exc:
        _emit({"schema": 1, "error": "io", "detail": str(exc)})
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
