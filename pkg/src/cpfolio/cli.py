"""Command-line entry point: ``cpfolio {solve,train,score,simulate}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ExecConfig, load_config, parse_presolve
from .executor import run_portfolio
from .executor.protocol import COMPLETE, UNSATISFIABLE, format_solution
from .features import extract_features
from .kb import KBError, build_kb, objective_direction, load_kb, neighbors, read_features_csv, read_runs_csv, save_kb, solver_stats
from .problem import ProblemError, parse_problem
from .scheduler import parallelize, presolve_prefix, sunny_schedule, uniform_schedule
from .scoring import (
    ScoringError,
    borda_score,
    format_table,
    read_results_csv,
    write_results_csv,
    write_scores_csv,
)

logger = logging.getLogger("cpfolio")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- solve -------------------------------------------------------------------


def _exec_config(args) -> ExecConfig:
    path = args.config or os.environ.get("PORTFOLIO_CONFIG")
    if not path:
        raise UsageError("no portfolio config: pass --config or set PORTFOLIO_CONFIG")
    cfg = load_config(path)
    overrides = {
        "timeout": args.timeout,
        "cores": args.cores,
        "k": args.knn,
        "restart_threshold": args.restart_threshold,
        "restart_policy": args.restart_policy,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if args.kb:
        cfg.kb = args.kb
    if args.presolve:
        cfg.presolve = parse_presolve(args.presolve)
    cfg.virtual_clock = cfg.virtual_clock or args.virtual_clock
    cfg.no_selection = cfg.no_selection or args.no_selection
    cfg.validate()
    return cfg


def _schedule(problem, cfg: ExecConfig):
    portfolio = sorted(cfg.solvers)
    if cfg.no_selection:
        sigma = uniform_schedule(portfolio, cfg.timeout)
    else:
        if not cfg.kb:
            raise UsageError("algorithm selection needs a knowledge base (--kb or kb= in config)")
        kb = load_kb(cfg.kb)
        query = extract_features(problem)
        if kb.schema != query.schema or kb.dimension != len(query):
            raise UsageError(f"knowledge base schema {kb.schema!r} does not match extractor {query.schema!r}")
        k = cfg.k
        if k > len(kb):
            logger.warning("k=%d exceeds knowledge base size %d; using %d", k, len(kb), len(kb))
            k = len(kb)
        hood = neighbors(kb, query, k)
        sigma = sunny_schedule(solver_stats(kb, hood, portfolio), portfolio, cfg.timeout, k)
    if cfg.presolve is not None:
        ids, t_pre = cfg.presolve
        sigma = presolve_prefix(list(ids), t_pre, sigma)
    logger.info("schedule %s", sigma)
    return sigma


def render_answer(problem, answer) -> list[str]:
    lines = []
    if answer.status in ("OPTIMAL", "SAT"):
        if answer.objective is not None:
            lines.append(f"% objective={answer.objective}")
        lines += format_solution(dict(answer.assignment), [v.id for v in problem.variables])
        if answer.status == "OPTIMAL" or not problem.objective.is_optimization:
            lines.append(COMPLETE)
    elif answer.status == "UNSAT":
        lines.append(UNSATISFIABLE)
    elif answer.status == "ERROR":
        lines.append("=====ERROR=====")
    else:
        lines.append("=====UNKNOWN=====")
    return lines


def cmd_solve(args) -> int:
    try:
        problem = parse_problem(Path(args.problem).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read problem: {exc}") from None
    cfg = _exec_config(args)
    sigma = _schedule(problem, cfg)
    cores = parallelize(sigma, cfg.cores, cfg.timeout)
    logger.info("core assignment\n%s", cores)
    answer, log = run_portfolio(problem, cores, cfg.solvers, cfg, args.workdir)
    if args.log:
        log.write(args.log)
    print("\n".join(render_answer(problem, answer)))
    logger.info("answer %s in %.1fs", answer.status, answer.time)
    return EXIT_ERROR if answer.status == "ERROR" else EXIT_OK


# -- train -------------------------------------------------------------------


def cmd_train(args) -> int:
    instances = read_features_csv(args.features, args.schema)
    runs = read_runs_csv(args.runs)
    solvers = [s for s in args.solvers.split(",") if s] if args.solvers else None
    kb = build_kb(instances, runs, args.timeout, args.schema, solvers, str(args.runs))
    save_kb(kb, args.out)
    print(f"instances={len(kb.instances)} solvers={len(kb.solvers)} runs={len(kb.runs)}")
    return EXIT_OK


# -- score -------------------------------------------------------------------


def cmd_score(args) -> int:
    results = read_results_csv(args.results)
    table = borda_score(results, args.timeout)
    print("complete ranking")
    print(format_table(table, "complete"))
    print()
    print("incomplete ranking")
    print(format_table(table, "incomplete"))
    if args.out:
        write_scores_csv(table, args.out)
    if args.figure:
        from .plotting import plot_scores

        plot_scores(table, args.figure)
    return EXIT_OK


# -- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    from .simulation import (
        TestInstance,
        complete_runs,
        count_solved,
        evaluate_selector,
        leave_one_out,
        load_recorded,
        single_solver_results,
        virtual_best_results,
    )

    kb = load_kb(args.kb)
    T = args.timeout if args.timeout is not None else kb.timeout
    name = "sunny" if not args.no_selection else "all-solvers"
    if args.test_features:
        if not args.test_runs:
            raise UsageError("--test-features needs --test-runs")
        feats = read_features_csv(args.test_features, kb.schema)
        recorded = load_recorded(args.test_runs, args.test_trails)
        test_set = []
        for inst in sorted(feats):
            runs = complete_runs(recorded.get(inst, {}), kb.solvers, T)
            obj = any(r.objective is not None or r.status == "OPTIMAL" for r in runs.values())
            direction = objective_direction(feats[inst]) if obj else None
            test_set.append(TestInstance(inst, feats[inst], runs, direction))
        summary = evaluate_selector(kb, test_set, min(args.knn, len(kb)), T, args.cores,
                                    name=name, no_selection=args.no_selection)
    else:
        recorded = load_recorded(Path(args.kb) / "runs.csv", args.trails)
        k = min(args.knn, len(kb) - 1)
        if k < 1:
            raise UsageError("leave-one-out needs at least two knowledge-base instances")
        summary = leave_one_out(kb, recorded, k, T, args.cores, name, args.no_selection)
        test_set = [
            TestInstance(i, kb.instances[i], complete_runs(recorded.get(i, {}), kb.solvers, kb.timeout),
                         kb.direction(i))
            for i in sorted(kb.instances)
        ]

    results = list(summary.results)
    solved = {name: summary.solved}
    for s in kb.solvers:
        rows = single_solver_results(test_set, s, T)
        results += rows
        solved[s] = count_solved(rows)
    vbs = virtual_best_results(test_set, kb.solvers, T)
    results += vbs
    solved["vbs"] = count_solved(vbs)

    print(f"instances={len(test_set)} k={args.knn} cores={args.cores} T={T:g}")
    print(f"{name}: solved={summary.solved} avg_time={summary.avg_time:.2f}")
    for s in [*kb.solvers, "vbs"]:
        print(f"{s}: solved={solved[s]}")
    if args.out:
        write_results_csv(results, args.out)
    if args.figure:
        from .plotting import plot_solved

        plot_solved(solved, len(test_set), args.figure)
    return EXIT_OK


# -- wiring ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpfolio", description="portfolio constraint solver")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an MPD problem with the portfolio")
    p.add_argument("problem")
    p.add_argument("--config", help="portfolio config (default: $PORTFOLIO_CONFIG)")
    p.add_argument("-T", "--timeout", type=float)
    p.add_argument("-c", "--cores", type=int)
    p.add_argument("-k", "--knn", type=int)
    p.add_argument("--restart-threshold", type=float)
    p.add_argument("--restart-policy", choices=("all", "any"))
    p.add_argument("--no-selection", action="store_true", help="run every solver, skip k-NN selection")
    p.add_argument("--presolve", metavar="IDS:SECONDS")
    p.add_argument("--virtual-clock", action="store_true")
    p.add_argument("--log", default="events.log", help="event log path (default: %(default)s)")
    p.add_argument("--kb")
    p.add_argument("--workdir", help="keep generated problem files here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("train", help="validate CSVs and write a knowledge base")
    p.add_argument("features")
    p.add_argument("runs")
    p.add_argument("out")
    p.add_argument("--timeout", type=float, default=1200.0, help="training timeout (default: %(default)s)")
    p.add_argument("--schema", default="cpfolio-static16/v1")
    p.add_argument("--solvers", help="comma-separated solver ids (default: those in runs)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="Borda-score a results table")
    p.add_argument("results")
    p.add_argument("-T", "--timeout", type=float, default=1200.0)
    p.add_argument("--out", default="scores.csv", help="CSV mirror of the ranking (default: %(default)s)")
    p.add_argument("--figure", help="write a bar chart of the scores")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("simulate", help="replay the selector against recorded runs")
    p.add_argument("--kb", required=True)
    p.add_argument("--trails", help="trails.csv for the knowledge-base instances")
    p.add_argument("--test-features")
    p.add_argument("--test-runs")
    p.add_argument("--test-trails")
    p.add_argument("-T", "--timeout", type=float)
    p.add_argument("-c", "--cores", type=int, default=8)
    p.add_argument("-k", "--knn", type=int, default=70)
    p.add_argument("--no-selection", action="store_true")
    p.add_argument("--out", default="results.csv")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (UsageError, ConfigError, ProblemError, KBError, ScoringError, OSError, ValueError) as exc:
        print(f"cpfolio {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
