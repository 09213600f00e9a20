"""Bound sharing: the best-bound register, solution recording and the restart rule."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from ..problem import CheckResult, Problem, check_solution, evaluate_objective


@dataclass(frozen=True)
class Incumbent:
    value: int | None
    assignment: Mapping[str, int]
    solver: str
    time_ms: int


class BestBoundRegister:
    """Best objective seen so far; only ever moves in the improving direction.

    For satisfaction problems the first recorded solution is kept and the
    value stays ``None``.
    """

    def __init__(self, sense: str):
        self.sense = sense
        self.history: list[Incumbent] = []

    @property
    def best(self) -> Incumbent | None:
        return self.history[-1] if self.history else None

    @property
    def value(self) -> int | None:
        return self.history[-1].value if self.history else None

    @property
    def owner(self) -> str | None:
        return self.history[-1].solver if self.history else None

    def improves(self, value: int | None) -> bool:
        if not self.history:
            return True
        if self.sense == "sat" or value is None:
            return False
        current = self.value
        return value < current if self.sense == "min" else value > current

    def better_than(self, value: int | None) -> bool:
        """True if the register strictly improves on ``value`` (``None`` = no solution)."""
        if not self.history:
            return False
        if value is None:
            return True
        if self.sense == "min":
            return self.value < value
        return self.value > value

    def update(self, value: int | None, assignment: Mapping[str, int], solver: str, time_ms: int = 0) -> bool:
        if not self.improves(value):
            return False
        self.history.append(Incumbent(value, dict(assignment), solver, time_ms))
        return True


class Outcome(enum.Enum):
    ACCEPTED = "accepted"
    REJECTED_NOT_IMPROVING = "not_improving"
    REJECTED_INVALID = "invalid"


@dataclass(frozen=True)
class RecordResult:
    outcome: Outcome
    objective: int | None = None
    check: CheckResult | None = field(default=None, compare=False)
    reason: str = ""

    @property
    def accepted(self) -> bool:
        return self.outcome is Outcome.ACCEPTED


def record_solution(
    register: BestBoundRegister,
    solver: str,
    assignment: Mapping[str, int],
    problem: Problem,
    check: bool = True,
    time_ms: int = 0,
) -> RecordResult:
    """Offer a solver's solution to the register.

    When ``check`` is set the assignment must pass :func:`check_solution`.
    The objective is always recomputed from the assignment.
    """
    verdict = None
    if check:
        verdict = check_solution(problem, assignment)
        if not verdict.ok:
            return RecordResult(Outcome.REJECTED_INVALID, check=verdict, reason=str(verdict))
    objective = None
    if problem.objective.is_optimization:
        try:
            objective = evaluate_objective(problem, assignment)
        except ValueError as exc:
            return RecordResult(Outcome.REJECTED_INVALID, check=verdict, reason=str(exc))
    if register.update(objective, assignment, solver, time_ms):
        return RecordResult(Outcome.ACCEPTED, objective, verdict)
    return RecordResult(Outcome.REJECTED_NOT_IMPROVING, objective, verdict)


@dataclass
class WorkerState:
    core: int
    solver: str
    start_ms: int
    last_solution_ms: int
    best: int | None = None
    restarts: int = 0

    def __post_init__(self):
        if self.last_solution_ms < self.start_ms:
            raise ValueError("last solution precedes run start")


def restart_decision(
    worker: WorkerState,
    register: BestBoundRegister,
    T_r: float,
    now_ms: int,
    policy: str = "all",
) -> int | None:
    """Bound to restart ``worker`` with, or ``None`` to let it continue.

    ``policy="all"`` requires both a silent period of at least ``T_r``
    seconds and a worker bound that the register strictly beats;
    ``policy="any"`` accepts either condition.
    """
    if register.value is None:
        return None
    silent = now_ms - worker.last_solution_ms >= round(T_r * 1000)
    obsolete = register.better_than(worker.best)
    if policy == "all":
        fire = silent and obsolete
    elif policy == "any":
        fire = silent or obsolete
    else:
        raise ValueError(f"unknown restart policy {policy!r}")
    return register.value if fire else None
