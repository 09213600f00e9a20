"""Offline replay of schedules against recorded solver runs.

Replay has no notion of restarts: a recorded trail says nothing about what
a solver would have done with a tighter bound. It measures selection
quality only.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .features import FeatureVector
from .kb import KBError, KnowledgeBase, RunRecord, neighbors, read_runs_csv, solver_stats
from .scheduler import CoreAssignment, Schedule, parallelize, sunny_schedule, to_ms, uniform_schedule
from .scoring import InstanceResult

TRAIL_HEADER = ("instance", "solver", "time", "objective")


@dataclass(frozen=True)
class RecordedRun:
    """What one solver did on one instance when run alone from time zero."""

    status: str
    time: float
    objective: int | None = None
    solutions: tuple[tuple[float, int], ...] = ()


@dataclass(frozen=True)
class ReplayOutcome:
    kind: str
    time: float
    objective: int | None = None
    trail: tuple[tuple[float, int], ...] = ()


@dataclass(frozen=True)
class TestInstance:
    __test__ = False

    id: str
    features: FeatureVector
    runs: Mapping[str, RecordedRun]
    direction: str | None = None


@dataclass
class SelectorSummary:
    solved: int
    avg_time: float
    results: list[InstanceResult]
    schedules: dict[str, Schedule]


def _better(direction: str | None, a: int, b: int) -> bool:
    return a < b if direction == "min" else a > b


def _goodness(direction: str | None, obj: int) -> int:
    return -obj if direction == "min" else obj


def replay_schedule(
    assignment: CoreAssignment,
    runs: Mapping[str, RecordedRun],
    T: float,
    direction: str | None = None,
) -> ReplayOutcome:
    """Replay each core's timeline; the result is the best across cores at each instant."""
    total = to_ms(T)
    solutions: list[tuple[int, int]] = []
    completions: list[tuple[int, str, int | None]] = []
    for core in assignment.cores:
        for solver, start, end in core:
            if solver not in runs:
                raise ValueError(f"no recorded run for solver {solver!r}")
            run = runs[solver]
            span = end - start
            for rt, obj in run.solutions:
                if to_ms(rt) <= span:
                    solutions.append((start + to_ms(rt), obj))
            proves = run.status in ("OPTIMAL", "UNSAT") or (run.status == "SAT" and direction is None)
            if proves and to_ms(run.time) <= span:
                completions.append((start + to_ms(run.time), run.status, run.objective))

    trail: list[tuple[int, int]] = []
    if direction is not None:
        for at, obj in sorted(solutions, key=lambda e: (e[0], -_goodness(direction, e[1]))):
            if not trail or _better(direction, obj, trail[-1][1]):
                trail.append((at, obj))

    if completions:
        at, status, obj = min(completions, key=lambda c: (c[0], c[1]))
        at = min(at, total)
        if status == "OPTIMAL" and direction is not None:
            if obj is None:
                obj = trail[-1][1] if trail else None
            trail = [e for e in trail if e[0] <= at]
            if obj is not None and (not trail or _better(direction, obj, trail[-1][1])):
                trail.append((at, obj))
            return ReplayOutcome("OPTIMAL", at / 1000, obj, _secs(trail))
        if status == "SAT":
            return ReplayOutcome("SAT", at / 1000)
        return ReplayOutcome(status, at / 1000)
    if trail:
        at, obj = trail[-1]
        return ReplayOutcome("SAT", at / 1000, obj, _secs(trail))
    return ReplayOutcome("UNKNOWN", total / 1000)


def _secs(trail) -> tuple[tuple[float, int], ...]:
    return tuple((at / 1000, obj) for at, obj in trail)


def outcome_result(instance: str, solver: str, outcome: ReplayOutcome, direction: str | None) -> InstanceResult:
    objective = outcome.objective if direction is not None else None
    return InstanceResult(instance, solver, outcome.kind, outcome.time, objective, direction)


def is_solved(outcome: ReplayOutcome, direction: str | None) -> bool:
    if outcome.kind in ("OPTIMAL", "UNSAT"):
        return True
    return outcome.kind == "SAT" and direction is None


def evaluate_selector(
    kb: KnowledgeBase,
    test_set: Sequence[TestInstance],
    k: int,
    T: float,
    c: int,
    portfolio: Sequence[str] | None = None,
    name: str = "sunny",
    no_selection: bool = False,
) -> SelectorSummary:
    """neighbors -> stats -> schedule -> cores -> replay, for every test instance."""
    overlap = sorted({t.id for t in test_set} & set(kb.instances))
    if overlap:
        raise ValueError(f"test instances also in the knowledge base: {overlap}")
    portfolio = list(kb.solvers if portfolio is None else portfolio)
    results, schedules, times = [], {}, []
    solved = 0
    for inst in test_set:
        if no_selection:
            sigma = uniform_schedule(portfolio, T)
        else:
            hood = neighbors(kb, inst.features, k)
            stats = solver_stats(kb, hood, portfolio)
            sigma = sunny_schedule(stats, portfolio, T, k)
        schedules[inst.id] = sigma
        outcome = replay_schedule(parallelize(sigma, c, T), inst.runs, T, inst.direction)
        results.append(outcome_result(inst.id, name, outcome, inst.direction))
        if is_solved(outcome, inst.direction):
            solved += 1
            times.append(outcome.time)
    avg = math.fsum(times) / len(times) if times else float(T)
    return SelectorSummary(solved, avg, results, schedules)


def single_solver_results(test_set: Sequence[TestInstance], solver: str, T: float) -> list[InstanceResult]:
    total = to_ms(T)
    core = CoreAssignment((((solver, 0, total),),), total)
    return [
        outcome_result(t.id, solver, replay_schedule(core, t.runs, T, t.direction), t.direction)
        for t in test_set
    ]


def virtual_best_results(
    test_set: Sequence[TestInstance], portfolio: Sequence[str], T: float, name: str = "vbs"
) -> list[InstanceResult]:
    total = to_ms(T)
    cores = CoreAssignment(tuple(((s, 0, total),) for s in sorted(portfolio)), total)
    return [
        outcome_result(t.id, name, replay_schedule(cores, t.runs, T, t.direction), t.direction)
        for t in test_set
    ]


def count_solved(results: Sequence[InstanceResult]) -> int:
    return sum(r.kind in ("OPTIMAL", "UNSAT") or (r.kind == "SAT" and r.direction is None) for r in results)


# -- io ----------------------------------------------------------------------


def read_trails_csv(path: str | Path) -> dict[tuple[str, str], list[tuple[float, int]]]:
    path = Path(path)
    trails: dict[tuple[str, str], list[tuple[float, int]]] = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(h.strip() for h in next(reader, []))
        if header != TRAIL_HEADER:
            raise KBError(f"{path}: expected header {','.join(TRAIL_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            row = [c.strip() for c in row]
            if not any(row):
                continue
            if len(row) != 4:
                raise KBError(f"{path}:{lineno}: expected 4 columns")
            try:
                trails[(row[0], row[1])].append((float(row[2]), int(row[3])))
            except ValueError as exc:
                raise KBError(f"{path}:{lineno}: {exc}") from None
    return dict(trails)


def recorded_runs(
    runs: Sequence[RunRecord], trails: Mapping[tuple[str, str], Sequence[tuple[float, int]]]
) -> dict[str, dict[str, RecordedRun]]:
    """Join run outcomes with their improving-solution trails, per instance and solver."""
    out: dict[str, dict[str, RecordedRun]] = defaultdict(dict)
    for rec in runs:
        sols = sorted(trails.get((rec.instance, rec.solver), ()))
        if not sols and rec.objective is not None:
            sols = [(rec.time, rec.objective)]
        out[rec.instance][rec.solver] = RecordedRun(rec.status, rec.time, rec.objective, tuple(sols))
    return dict(out)


def load_recorded(runs_path: str | Path, trails_path: str | Path | None) -> dict[str, dict[str, RecordedRun]]:
    runs = [r for _, r in read_runs_csv(runs_path)]
    trails = read_trails_csv(trails_path) if trails_path else {}
    return recorded_runs(runs, trails)


def complete_runs(
    recorded: Mapping[str, RecordedRun], solvers: Sequence[str], timeout: float
) -> dict[str, RecordedRun]:
    """Fill in UNKNOWN runs for solvers with no record."""
    return {s: recorded.get(s, RecordedRun("UNKNOWN", timeout)) for s in solvers}


def leave_one_out(
    kb: KnowledgeBase,
    recorded: Mapping[str, Mapping[str, RecordedRun]],
    k: int,
    T: float,
    c: int,
    name: str = "sunny",
    no_selection: bool = False,
) -> SelectorSummary:
    """Evaluate the selector on each KB instance against the rest of the KB."""
    results, schedules, times = [], {}, []
    solved = 0
    for inst in sorted(kb.instances):
        test = TestInstance(
            inst,
            kb.instances[inst],
            complete_runs(recorded.get(inst, {}), kb.solvers, kb.timeout),
            kb.direction(inst),
        )
        summary = evaluate_selector(kb.without([inst]), [test], k, T, c, kb.solvers, name, no_selection)
        results += summary.results
        schedules.update(summary.schedules)
        if summary.solved:
            solved += 1
            times.append(summary.avg_time)
    avg = math.fsum(times) / len(times) if times else float(T)
    return SelectorSummary(solved, avg, results, schedules)
