"""Command-line interface: ``rotavg generate | solve | certify | bench``.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime or numerical errors.
"""
import argparse
import logging
import sys
import time
from typing import List, Optional

import numpy as np

from . import io
from .certificate import certify
from .errors import RotavgError
from .graph import objective
from .solvers import INIT_CHOICES, SOLVERS, SolverConfig, solve
from .synth import SynthSpec, generate

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _algorithms(text: str) -> List[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in SOLVERS]
    if bad or not algos:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s) {bad}; choose from {sorted(SOLVERS)}")
    return algos


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rotavg", description="Chordal rotation averaging on SO(3).")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a synthetic graph and its ground truth")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--phi", type=float, required=True, help="noise angle std-dev [rad]")
    gen.add_argument("--p", type=float, default=0.0, help="fraction of edges dropped")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="graph file; ground truth goes to <out>.truth")
    gen.add_argument("--phi-is-variance", action="store_true", help="treat --phi as the angle variance")

    sol = sub.add_parser("solve", help="solve a graph file")
    sol.add_argument("--graph", required=True)
    sol.add_argument("--algorithm", choices=sorted(SOLVERS), default="sum")
    sol.add_argument("--eps", type=float, default=1e-6)
    sol.add_argument("--max-iter", type=int, default=10000)
    sol.add_argument("--init", choices=INIT_CHOICES, default="spanning-tree")
    sol.add_argument("--seed", type=int, default=0, help="seed for --init random")
    sol.add_argument("--out", required=True, help="solution file")
    sol.add_argument("--trace", help="optional convergence CSV")
    sol.add_argument("--report", help="optional JSON report")
    sol.add_argument("--serial", action="store_true", help="disable the SUM thread pool")

    cert = sub.add_parser("certify", help="check the global-optimality certificate")
    cert.add_argument("--graph", required=True)
    cert.add_argument("--solution", required=True)
    cert.add_argument("--tol", type=float, default=None, help="default 1e-6 * n")
    cert.add_argument("--report", help="optional JSON report")

    bench = sub.add_parser("bench", help="aggregate synthetic runs into a results table")
    bench.add_argument("--n-list", type=_int_list, required=True)
    bench.add_argument("--phi-list", type=_float_list, required=True)
    bench.add_argument("--p-list", type=_float_list, default=[0.0])
    bench.add_argument("--runs", type=int, default=100)
    bench.add_argument("--algorithms", type=_algorithms, default=["bcd", "sum"])
    bench.add_argument("--seed", type=int, default=0, help="run k uses seed + k")
    bench.add_argument("--eps", type=float, default=1e-6)
    bench.add_argument("--max-iter", type=int, default=10000)
    bench.add_argument("--init", choices=INIT_CHOICES, default="spanning-tree")
    bench.add_argument("--phi-is-variance", action="store_true")
    bench.add_argument("--serial", action="store_true")
    bench.add_argument("--report", help="JSON output; printed to stdout if omitted")
    return parser


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(epsilon=args.eps, max_iter=args.max_iter, init=args.init,
                            seed=args.seed, parallel=not args.serial)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _config_echo(args, algorithm: str) -> dict:
    return {"algorithm": algorithm, "eps": args.eps, "max_iter": args.max_iter, "init": args.init,
            "parallel": not args.serial}


def solve_and_report(g, algorithm: str, cfg: SolverConfig, seed=None, config=None):
    """Run one solver, certify the result and build the report dict."""
    rot, trace = solve(g, algorithm, cfg)
    cert = certify(g, rot)
    report = io.make_report(g, algorithm, objective(g, rot), trace, cert, seed=seed, config=config)
    return rot, trace, report


def cmd_generate(args) -> int:
    try:
        spec = SynthSpec(args.n, args.phi, args.p, args.seed, args.phi_is_variance)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    g, truth = generate(spec)
    io.write_graph(args.out, g)
    io.write_solution(f"{args.out}.truth", truth)
    print(f"wrote {args.out}: n={g.n} edges={g.num_edges}")
    return 0


def cmd_solve(args) -> int:
    cfg = _config(args)
    g = io.read_graph(args.graph)
    rot, trace, report = solve_and_report(g, args.algorithm, cfg, seed=args.seed,
                                          config=_config_echo(args, args.algorithm))
    io.write_solution(args.out, rot)
    if args.trace:
        io.write_trace(args.trace, trace)
    if args.report:
        io.write_report(args.report, report)
    print(f"{args.algorithm}: objective={report['objective']:.10g} avg_error={report['avg_error']:.6g} "
          f"iterations={report['iterations']} converged={report['converged']} min_eig={report['min_eig']:.3g}")
    return 0


def cmd_certify(args) -> int:
    g = io.read_graph(args.graph)
    rot = io.read_solution(args.solution)
    if rot.shape[0] != g.n:
        raise RotavgError(f"solution has {rot.shape[0]} rotations but graph has {g.n} vertices")
    if args.tol is not None and not args.tol > 0:
        raise UsageError("--tol must be positive")
    cert = certify(g, rot, tol=args.tol)
    obj = objective(g, rot)
    report = {
        "n": g.n,
        "num_edges": g.num_edges,
        "objective": obj,
        "avg_error": obj / g.num_edges if g.num_edges else 0.0,
        "min_eig": cert.min_eig,
        "asymmetry": cert.asymmetry,
        "optimal": cert.optimal,
        "tol": cert.tol,
    }
    if args.report:
        io.write_report(args.report, report)
    print(f"min_eig={cert.min_eig:.3e} asymmetry={cert.asymmetry:.3e} optimal={cert.optimal}")
    return 0


def run_bench(n_list, phi_list, p_list, runs, algorithms, seed=0, cfg_kwargs=None, phi_is_variance=False):
    """Table-style aggregation over ``runs`` seeded instances per cell.

    Returns one record per ``(n, phi, p, algorithm)`` with the mean
    ``avg_error``, the minimum ``min_eig`` over runs and mean timings.
    """
    cfg_kwargs = dict(cfg_kwargs or {})
    cells = []
    for n in n_list:
        for phi in phi_list:
            for p in p_list:
                per_algo = {a: [] for a in algorithms}
                truth_err = []
                for k in range(runs):
                    spec = SynthSpec(n, phi, p, seed + k, phi_is_variance)
                    g, truth = generate(spec)
                    truth_err.append(objective(g, truth) / g.num_edges)
                    for a in algorithms:
                        cfg = SolverConfig(**cfg_kwargs)
                        _, _, rep = solve_and_report(g, a, cfg, seed=seed + k)
                        per_algo[a].append(rep)
                for a in algorithms:
                    reps = per_algo[a]
                    cells.append({
                        "n": n,
                        "phi": phi,
                        "p": p,
                        "algorithm": a,
                        "runs": runs,
                        "avg_error": float(np.mean([r["avg_error"] for r in reps])),
                        "min_eig": float(np.min([r["min_eig"] for r in reps])),
                        "time_s": float(np.mean([r["time_s"] for r in reps])),
                        "iterations": float(np.mean([r["iterations"] for r in reps])),
                        "converged": int(sum(r["converged"] for r in reps)),
                        "num_edges": float(np.mean([r["num_edges"] for r in reps])),
                        "truth_avg_error": float(np.mean(truth_err)),
                    })
    return cells


def cmd_bench(args) -> int:
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    try:
        for n in args.n_list:
            for phi in args.phi_list:
                for p in args.p_list:
                    SynthSpec(n, phi, p)
        cfg_kwargs = dict(epsilon=args.eps, max_iter=args.max_iter, init=args.init,
                          seed=args.seed, parallel=not args.serial)
        SolverConfig(**cfg_kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    start = time.perf_counter()
    cells = run_bench(args.n_list, args.phi_list, args.p_list, args.runs, args.algorithms,
                      seed=args.seed, cfg_kwargs=cfg_kwargs, phi_is_variance=args.phi_is_variance)
    doc = {"cells": cells, "seed": args.seed, "runs": args.runs,
           "config": {"eps": args.eps, "max_iter": args.max_iter, "init": args.init,
                      "parallel": not args.serial, "phi_is_variance": args.phi_is_variance}}
    if args.report:
        io.write_report(args.report, doc)
    print(f"{'n':>6} {'phi':>6} {'p':>5} {'algo':>5} {'avg.error':>10} {'min(lam_min)':>13} {'time[s]':>9}")
    for c in cells:
        print(f"{c['n']:>6} {c['phi']:>6g} {c['p']:>5g} {c['algorithm']:>5} {c['avg_error']:>10.4f} "
              f"{c['min_eig']:>13.3e} {c['time_s']:>9.4f}")
    logger.info("bench finished in %.1fs", time.perf_counter() - start)
    return 0


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "certify": cmd_certify, "bench": cmd_bench}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"rotavg {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RotavgError, ValueError, ArithmeticError, OSError) as exc:
        print(f"rotavg {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
