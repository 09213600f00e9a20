"""Scripted stand-in for a constituent solver.

Usage: ``python -m cpfolio.mock_solver SCRIPT PROBLEM [--bound N]``

Script lines::

    AT <seconds> SOLUTION x=3,y=4
    AT <seconds> COMPLETE
    AT <seconds> UNSAT
    AT <seconds> RAW <text>          # print <text> verbatim
    AT <seconds> EXIT <code>         # exit with <code>
    IFBOUND < 10 AT 1 SOLUTION x=8   # only when --bound satisfies "< 10"

Lines run in time order. COMPLETE, UNSAT and EXIT end the run; otherwise
the solver stalls until killed after its last line. With
``CPFOLIO_VIRTUAL_CLOCK`` set it does not sleep but prints ``% t=`` markers.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass

_RELS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    at: float
    action: str
    arg: str = ""
    guard: tuple[str, int] | None = None

    def enabled(self, bound: int | None) -> bool:
        if self.guard is None:
            return True
        if bound is None:
            return False
        rel, value = self.guard
        return _RELS[rel](bound, value)


def parse_script(text: str) -> list[Step]:
    steps = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        guard = None
        if line.startswith("IFBOUND"):
            parts = line.split(None, 3)
            if len(parts) < 4 or parts[1] not in _RELS:
                raise ScriptError(f"line {lineno}: bad IFBOUND guard")
            try:
                guard = (parts[1], int(parts[2]))
            except ValueError:
                raise ScriptError(f"line {lineno}: bad IFBOUND value") from None
            line = parts[3]
        tokens = line.split(None, 3)
        if len(tokens) < 3 or tokens[0] != "AT":
            raise ScriptError(f"line {lineno}: expected 'AT <seconds> <action>'")
        try:
            at = float(tokens[1])
        except ValueError:
            raise ScriptError(f"line {lineno}: bad time {tokens[1]!r}") from None
        action = tokens[2]
        arg = tokens[3] if len(tokens) > 3 else ""
        if action not in ("SOLUTION", "COMPLETE", "UNSAT", "RAW", "EXIT"):
            raise ScriptError(f"line {lineno}: unknown action {action!r}")
        steps.append(Step(at, action, arg, guard))
    return steps


def render(step: Step) -> list[str]:
    if step.action == "SOLUTION":
        out = []
        for pair in step.arg.replace(" ", "").split(","):
            var, _, value = pair.partition("=")
            out.append(f"{var} = {value}")
        return out + ["----------"]
    if step.action == "COMPLETE":
        return ["=========="]
    if step.action == "UNSAT":
        return ["=====UNSATISFIABLE====="]
    if step.action == "RAW":
        return [step.arg]
    return []


def run(steps: list[Step], bound: int | None, virtual: bool, out=sys.stdout) -> int:
    start = time.monotonic()
    for step in sorted((s for s in steps if s.enabled(bound)), key=lambda s: s.at):
        if virtual:
            print(f"% t={step.at:g}", file=out)
        else:
            delay = start + step.at - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        for line in render(step):
            print(line, file=out)
        out.flush()
        if step.action in ("COMPLETE", "UNSAT"):
            return 0
        if step.action == "EXIT":
            return int(step.arg or 1)
    if virtual:
        print("% stall", file=out)
        out.flush()
        return 0
    while True:
        time.sleep(3600)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="cpfolio-mock", description="scripted mock solver")
    ap.add_argument("script")
    ap.add_argument("problem")
    ap.add_argument("--bound", type=int)
    args = ap.parse_args(argv)
    if not os.path.isfile(args.problem):
        print(f"cpfolio-mock: no such problem file {args.problem}", file=sys.stderr)
        return 2
    try:
        with open(args.script) as fh:
            steps = parse_script(fh.read())
    except (OSError, ScriptError) as exc:
        print(f"cpfolio-mock: {exc}", file=sys.stderr)
        return 2
    return run(steps, args.bound, bool(os.environ.get("CPFOLIO_VIRTUAL_CLOCK")))


if __name__ == "__main__":
    sys.exit(main())
