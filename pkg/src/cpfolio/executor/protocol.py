"""Solver stdout protocol (FlatZinc output conventions).

A solution is a block of ``<id> = <int>`` lines closed by ``----------``.
``==========`` reports that search finished, ``=====UNSATISFIABLE=====``
that no solution exists. ``%`` lines are comments.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

logger = logging.getLogger(__name__)

SEPARATOR = "----------"
COMPLETE = "=========="
UNSATISFIABLE = "=====UNSATISFIABLE====="

_ASSIGN = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(-?\d+)\s*;?\Z")
_STATUS = re.compile(r"=====[A-Z]+=====\Z")


@dataclass(frozen=True)
class SolutionEvent:
    assignment: dict[str, int] = field(hash=False)


@dataclass(frozen=True)
class CompleteEvent:
    pass


@dataclass(frozen=True)
class UnsatEvent:
    pass


@dataclass(frozen=True)
class ProtocolError:
    reason: str


Event = Union[SolutionEvent, CompleteEvent, UnsatEvent, ProtocolError]


class OutputParser:
    """Incremental parser: feed lines, get events back."""

    def __init__(self, name: str = "solver"):
        self.name = name
        self._block: dict[str, int] = {}
        self._error: str | None = None

    def _reset(self) -> None:
        self._block = {}
        self._error = None

    def feed(self, line: str) -> list[Event]:
        text = line.strip()
        if not text or text.startswith("%"):
            return []
        if text == SEPARATOR:
            if self._error is not None:
                event: Event = ProtocolError(self._error)
            else:
                event = SolutionEvent(self._block)
            self._reset()
            return [event]
        if text == COMPLETE:
            self._reset()
            return [CompleteEvent()]
        if text == UNSATISFIABLE:
            self._reset()
            return [UnsatEvent()]
        if _STATUS.match(text):
            self._reset()
            return []
        match = _ASSIGN.match(text)
        if match:
            var, value = match.group(1), int(match.group(2))
            if var in self._block and self._error is None:
                self._error = f"variable {var!r} assigned twice"
            self._block[var] = value
        elif "=" in text:
            if self._error is None:
                self._error = f"malformed assignment {text!r}"
        else:
            logger.warning("%s: ignoring unparseable line %r", self.name, text)
        return []


def parse_solver_output(stream: Iterable[str]) -> Iterator[Event]:
    parser = OutputParser()
    for line in stream:
        yield from parser.feed(line)


def format_solution(assignment: dict[str, int], order: Iterable[str] | None = None) -> list[str]:
    keys = list(order) if order is not None else sorted(assignment)
    return [f"{k} = {assignment[k]}" for k in keys] + [SEPARATOR]
