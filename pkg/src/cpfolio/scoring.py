"""MiniZinc-Challenge style Borda scoring.

Every solver meets every other solver on every instance. The better answer
takes the point; indistinguishable answers split it by solving time. Scores
are kept as exact fractions so that pair sums are exactly one.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

KIND_TOKENS = {"opt": "OPTIMAL", "sat": "SAT", "unsat": "UNSAT", "unk": "UNKNOWN", "wrong": "WRONG"}
KIND_CODES = {v: k for k, v in KIND_TOKENS.items()}
DIRECTIONS = ("min", "max", None)
RESULT_HEADER = ("instance", "solver", "kind", "time", "objective", "direction")

MODES = ("complete", "incomplete")


class ScoringError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceResult:
    instance: str
    solver: str
    kind: str
    time: float
    objective: int | None = None
    direction: str | None = None

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ScoringError(f"unknown answer kind {self.kind!r}")
        if self.direction not in DIRECTIONS:
            raise ScoringError(f"unknown direction {self.direction!r}")
        if self.time < 0:
            raise ScoringError("negative time")
        if self.kind in ("OPTIMAL", "SAT") and self.direction is not None and self.objective is None:
            raise ScoringError(f"{self.kind} on an optimization instance needs an objective")
        if self.objective is not None and (self.direction is None or self.kind not in ("OPTIMAL", "SAT")):
            raise ScoringError("objective only allowed for SAT/OPTIMAL on optimization instances")


def _tier(r: InstanceResult, mode: str) -> int:
    """0 wrong, 1 no answer, 2 unproved solution, 3 complete answer."""
    if r.kind == "WRONG":
        return 0
    if r.kind == "UNKNOWN":
        return 1
    if mode == "incomplete":
        return 1 if r.kind == "UNSAT" else 2
    if r.kind == "SAT" and r.direction is not None:
        return 2
    return 3


def compare(a: InstanceResult, b: InstanceResult, mode: str = "complete") -> int:
    """Sign of (quality of ``a``) - (quality of ``b``)."""
    ta, tb = _tier(a, mode), _tier(b, mode)
    if ta != tb:
        return 1 if ta > tb else -1
    if a.objective is not None and b.objective is not None and a.objective != b.objective:
        a_better = a.objective < b.objective if a.direction == "min" else a.objective > b.objective
        return 1 if a_better else -1
    return 0


def pairwise_score(
    a: InstanceResult, b: InstanceResult, mode: str = "complete", T: float | None = None
) -> tuple[Fraction, Fraction]:
    if a.instance != b.instance:
        raise ScoringError(f"different instances: {a.instance!r} vs {b.instance!r}")
    if mode not in MODES:
        raise ScoringError(f"unknown mode {mode!r}")
    if a.kind == "WRONG" and b.kind == "WRONG":
        return Fraction(0), Fraction(0)
    if a.kind == "WRONG" or b.kind == "WRONG":
        if T is None:
            raise ScoringError("a time limit is needed to score a WRONG answer")
        if a.kind == "WRONG":
            return Fraction(0), pairwise_score(replace(a, kind="UNKNOWN", time=T), b, mode, T)[1]
        return pairwise_score(a, replace(b, kind="UNKNOWN", time=T), mode, T)[0], Fraction(0)

    sign = compare(a, b, mode)
    if sign > 0:
        return Fraction(1), Fraction(0)
    if sign < 0:
        return Fraction(0), Fraction(1)
    if _tier(a, mode) == 1:
        return Fraction(1, 2), Fraction(1, 2)
    ta, tb = Fraction(a.time), Fraction(b.time)
    if ta + tb == 0:
        return Fraction(1, 2), Fraction(1, 2)
    share_a = tb / (ta + tb)
    return share_a, 1 - share_a


@dataclass(frozen=True)
class ScoreTable:
    complete: dict[str, Fraction]
    incomplete: dict[str, Fraction]

    def ranking(self, mode: str = "complete") -> list[tuple[str, Fraction]]:
        scores = self.complete if mode == "complete" else self.incomplete
        return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))

    @property
    def solvers(self) -> list[str]:
        return [s for s, _ in self.ranking()]


def borda_score(
    results: Iterable[InstanceResult],
    T: float,
    solvers: Sequence[str] | None = None,
) -> ScoreTable:
    table: dict[str, dict[str, InstanceResult]] = defaultdict(dict)
    direction: dict[str, str | None] = {}
    for r in results:
        if r.time > T:
            raise ScoringError(f"{r.instance}/{r.solver}: time {r.time} exceeds T={T}")
        if r.solver in table[r.instance]:
            raise ScoringError(f"duplicate result for ({r.instance}, {r.solver})")
        if r.direction is not None:
            direction[r.instance] = r.direction
        table[r.instance][r.solver] = r
    names = sorted(set(solvers) if solvers is not None else {s for row in table.values() for s in row})
    complete = dict.fromkeys(names, Fraction(0))
    incomplete = dict.fromkeys(names, Fraction(0))
    for inst, row in table.items():
        full = {
            s: row.get(s) or InstanceResult(inst, s, "UNKNOWN", T, None, direction.get(inst))
            for s in names
        }
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                for mode, totals in (("complete", complete), ("incomplete", incomplete)):
                    pa, pb = pairwise_score(full[a], full[b], mode, T)
                    totals[a] += pa
                    totals[b] += pb
    return ScoreTable(complete, incomplete)


# -- io ----------------------------------------------------------------------


def read_results_csv(path: str | Path) -> list[InstanceResult]:
    path = Path(path)
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if tuple(header) != RESULT_HEADER:
            raise ScoringError(f"{path}: expected header {','.join(RESULT_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            row = [c.strip() for c in row]
            if not any(row):
                continue
            if len(row) != len(RESULT_HEADER):
                raise ScoringError(f"{path}:{lineno}: expected {len(RESULT_HEADER)} columns")
            inst, solver, kind, time_s, obj_s, dir_s = row
            if kind not in KIND_TOKENS:
                raise ScoringError(f"{path}:{lineno}: unknown kind {kind!r}")
            if dir_s not in ("min", "max", "none", ""):
                raise ScoringError(f"{path}:{lineno}: unknown direction {dir_s!r}")
            try:
                out.append(InstanceResult(
                    inst, solver, KIND_TOKENS[kind], float(time_s),
                    int(obj_s) if obj_s else None,
                    dir_s if dir_s in ("min", "max") else None,
                ))
            except ValueError as exc:
                raise ScoringError(f"{path}:{lineno}: {exc}") from None
    return out


def write_results_csv(results: Iterable[InstanceResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_HEADER)
        for r in results:
            writer.writerow([
                r.instance, r.solver, KIND_CODES[r.kind], repr(float(r.time)),
                "" if r.objective is None else r.objective, r.direction or "none",
            ])


def write_scores_csv(table: ScoreTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "solver", "complete", "incomplete"])
        for rank, (solver, score) in enumerate(table.ranking(), start=1):
            writer.writerow([rank, solver, f"{float(score):.6f}", f"{float(table.incomplete[solver]):.6f}"])


def format_table(table: ScoreTable, mode: str = "complete") -> str:
    width = max([6] + [len(s) for s in table.complete])
    lines = [f"{'rank':>4}  {'solver':<{width}}  {mode:>10}"]
    for rank, (solver, score) in enumerate(table.ranking(mode), start=1):
        lines.append(f"{rank:>4}  {solver:<{width}}  {float(score):>10.2f}")
    return "\n".join(lines)
