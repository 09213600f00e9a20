"""SUNNY schedules: subset selection, proportional slot allocation, core mapping.

All durations are held in integer milliseconds so that slot sums are exact;
the remainder left by integer division always goes to the first slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .kb import NeighborhoodStats


def to_ms(seconds: float) -> int:
    return int(round(seconds * 1000))


@dataclass(frozen=True)
class Schedule:
    slots: tuple[tuple[str, int], ...]
    total_ms: int

    def __post_init__(self):
        ids = [s for s, _ in self.slots]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate solver in schedule: {ids}")
        if any(ms <= 0 for _, ms in self.slots):
            raise ValueError("every slot must be positive")
        if sum(ms for _, ms in self.slots) != self.total_ms:
            raise ValueError("slots must sum to the total budget")

    @property
    def solvers(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.slots)

    @property
    def total(self) -> float:
        return self.total_ms / 1000

    def __len__(self) -> int:
        return len(self.slots)

    def __str__(self) -> str:
        return "[" + ", ".join(f"({s}, {ms / 1000:g})" for s, ms in self.slots) + "]"


@dataclass(frozen=True)
class CoreAssignment:
    """Per-core timelines of ``(solver, start_ms, end_ms)``; core ``i`` is ``cores[i]``."""

    cores: tuple[tuple[tuple[str, int, int], ...], ...]
    total_ms: int

    @property
    def solvers(self) -> list[str]:
        return [s for core in self.cores for s, _, _ in core]

    def __str__(self) -> str:
        rows = []
        for i, core in enumerate(self.cores, start=1):
            spans = ", ".join(f"{s}[{a / 1000:g},{b / 1000:g}]" for s, a, b in core)
            rows.append(f"core {i}: {spans or '-'}")
        return "\n".join(rows)


def _split(total: int, weights: Sequence[int]) -> list[int]:
    denom = sum(weights)
    parts = [total * w // denom for w in weights]
    first = next(i for i, w in enumerate(weights) if w > 0)
    parts[first] += total - sum(parts)
    return parts


def select_solvers(stats: NeighborhoodStats, portfolio: Sequence[str]) -> tuple[str, ...]:
    """Smallest subset covering the most neighborhood instances.

    Ties are broken by the smaller total average time, then by the
    lexicographically smaller (sorted) tuple of solver ids.
    """
    members = sorted(set(portfolio))
    solved = {s: stats[s].solved_instances for s in members}
    target = len(frozenset().union(*solved.values()))
    for size in range(len(members) + 1):
        best = None
        for combo in combinations(members, size):
            covered = frozenset().union(*(solved[s] for s in combo))
            if len(covered) != target:
                continue
            key = (math.fsum(stats[s].avg_time for s in combo), combo)
            if best is None or key < best:
                best = key
        if best is not None:
            return best[1]
    raise AssertionError("the full portfolio always reaches the target coverage")


def backup_solver(stats: NeighborhoodStats, portfolio: Sequence[str]) -> str:
    return min(portfolio, key=lambda s: (-stats.kb_solved.get(s, 0), s))


def sunny_schedule(
    stats: NeighborhoodStats, portfolio: Sequence[str], T: float, k: int
) -> Schedule:
    if not portfolio:
        raise ValueError("empty portfolio")
    if T <= 0:
        raise ValueError("timeout must be positive")
    missing = [s for s in portfolio if s not in stats]
    if missing:
        raise ValueError(f"no statistics for solvers {missing}")

    chosen = select_solvers(stats, portfolio)
    covered = frozenset().union(*(stats[s].solved_instances for s in chosen))
    if len(covered) > k:
        raise ValueError(f"neighborhood size {k} smaller than covered instances {len(covered)}")

    weights = {s: stats[s].solved for s in chosen}
    unsolved = k - len(covered)
    if unsolved:
        backup = backup_solver(stats, portfolio)
        weights[backup] = weights.get(backup, 0) + unsolved

    order = sorted(weights, key=lambda s: (stats[s].avg_time, s))
    total = to_ms(T)
    parts = _split(total, [weights[s] for s in order])
    return Schedule(tuple((s, ms) for s, ms in zip(order, parts) if ms > 0), total)


def uniform_schedule(portfolio: Sequence[str], T: float) -> Schedule:
    """Equal slots for every solver, in id order; used when selection is off."""
    order = sorted(set(portfolio))
    if not order:
        raise ValueError("empty portfolio")
    total = to_ms(T)
    parts = _split(total, [1] * len(order))
    return Schedule(tuple((s, ms) for s, ms in zip(order, parts) if ms > 0), total)


def parallelize(sigma: Schedule, c: int, T: float | None = None) -> CoreAssignment:
    """Spread ``sigma`` over ``c`` cores.

    With at most ``c`` solvers each gets a core for the whole window.
    Otherwise the first ``c - 1`` solvers run alone on their own cores and
    the rest share the last core, their slots stretched to fill ``[0, T]``.
    """
    if c < 1:
        raise ValueError("need at least one core")
    total = sigma.total_ms if T is None else to_ms(T)
    slots = list(sigma.slots)
    if len(slots) <= c:
        cores = [((s, 0, total),) for s, _ in slots]
    else:
        cores = [((s, 0, total),) for s, _ in slots[: c - 1]]
        tail = slots[c - 1 :]
        widened = _split(total, [ms for _, ms in tail])
        last, start = [], 0
        for (s, _), ms in zip(tail, widened):
            if ms > 0:
                last.append((s, start, start + ms))
            start += ms
        cores.append(tuple(last))
    cores += [()] * (c - len(cores))
    return CoreAssignment(tuple(cores), total)


def presolve_prefix(static: Sequence[str], t_pre: float, main: Schedule, T: float | None = None) -> Schedule:
    """Run ``static`` solvers for ``t_pre`` seconds in total, then ``main`` compressed.

    The result spans ``T`` (default: the main schedule's own budget); the
    main slots are rescaled to fill ``T - t_pre``. A static solver that also
    appears in ``main`` keeps one merged slot at its first position.
    """
    if not static:
        raise ValueError("static solver list is empty")
    if len(set(static)) != len(static):
        raise ValueError("static solver list has duplicates")
    total = main.total_ms if T is None else to_ms(T)
    pre = to_ms(t_pre)
    if pre < len(static):
        raise ValueError("presolve time too short to give every static solver a slot")
    if pre >= total:
        raise ValueError("presolve time must be shorter than the total budget")

    merged: dict[str, int] = {}
    for s, ms in zip(static, _split(pre, [1] * len(static))):
        merged[s] = ms
    for (s, _), ms in zip(main.slots, _split(total - pre, [ms for _, ms in main.slots])):
        merged[s] = merged.get(s, 0) + ms
    return Schedule(tuple((s, ms) for s, ms in merged.items() if ms > 0), total)
