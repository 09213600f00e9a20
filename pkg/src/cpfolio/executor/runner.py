"""The portfolio supervisor.

One worker per core walks through its slice of the core assignment. Every
poll tick the supervisor drains solver output, records solutions in the
shared register, advances slot boundaries and applies the restart rule.
Workers never see the register; they only receive bounds at launch.
"""

from __future__ import annotations

import logging
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..config import ExecConfig, SolverSpec
from ..problem import Problem, check_solution, evaluate_objective, serialize_problem, tighten_bound
from ..problem import tightened_limit
from ..scheduler import CoreAssignment, to_ms
from .policy import BestBoundRegister, Outcome, WorkerState, record_solution, restart_decision
from .processes import RealClock, RealProcess, VirtualClock, VirtualProcess
from .protocol import CompleteEvent, OutputParser, ProtocolError, SolutionEvent, UnsatEvent

logger = logging.getLogger(__name__)

EVENT_KINDS = ("LAUNCH", "SOLUTION", "BOUND", "RESTART", "KILL", "COMPLETE", "UNSAT", "CHECK_FAIL", "ERROR")


@dataclass(frozen=True)
class LogEvent:
    t_ms: int
    core: int
    solver: str
    kind: str
    detail: str = ""

    def format(self) -> str:
        line = f"t={self.t_ms} core={self.core} solver={self.solver} event={self.kind}"
        return f"{line} {self.detail}" if self.detail else line

    @classmethod
    def parse(cls, line: str) -> "LogEvent":
        parts = line.split(" ", 4)
        fields = dict(p.split("=", 1) for p in parts[:4])
        return cls(int(fields["t"]), int(fields["core"]), fields["solver"], fields["event"],
                   parts[4] if len(parts) > 4 else "")

    def param(self, key: str) -> str | None:
        for tok in self.detail.split():
            k, sep, v = tok.partition("=")
            if sep and k == key:
                return v
        return None


@dataclass
class EventLog:
    events: list[LogEvent] = field(default_factory=list)
    wrong: set[str] = field(default_factory=set)

    def add(self, t_ms: int, core: int, solver: str, kind: str, detail: str = "") -> None:
        assert kind in EVENT_KINDS, kind
        event = LogEvent(t_ms, core, solver, kind, detail)
        logger.debug(event.format())
        self.events.append(event)

    def of_kind(self, kind: str, solver: str | None = None) -> list[LogEvent]:
        return [e for e in self.events if e.kind == kind and (solver is None or e.solver == solver)]

    def text(self) -> str:
        return "".join(e.format() + "\n" for e in self.events)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.text())

    @classmethod
    def parse(cls, text: str) -> "EventLog":
        return cls([LogEvent.parse(line) for line in text.splitlines() if line.strip()])


@dataclass(frozen=True)
class SolverAnswer:
    status: str
    assignment: Mapping[str, int] | None = None
    objective: int | None = None
    time: float = 0.0
    trail: tuple[tuple[float, int], ...] = ()
    solver: str | None = None


@dataclass
class _Worker:
    core: int
    timeline: tuple[tuple[str, int, int], ...]
    slot: int = -1
    solver: str | None = None
    proc: object = None
    parser: OutputParser | None = None
    state: WorkerState | None = None
    launch_bound: int | None = None
    run_best: int | None = None
    status: str = "idle"


class _Supervisor:
    def __init__(
        self,
        problem: Problem,
        assignment: CoreAssignment,
        specs: Mapping[str, SolverSpec],
        config: ExecConfig,
        workdir: Path,
    ):
        missing = sorted({s for s in assignment.solvers if s not in specs})
        if missing:
            raise ValueError(f"no solver spec for {missing}")
        if config.timeout <= 0:
            raise ValueError("timeout must be positive")
        self.problem = problem
        self.specs = specs
        self.config = config
        self.workdir = workdir
        self.sense = problem.objective.sense
        self.optimization = problem.objective.is_optimization
        self.total_ms = to_ms(config.timeout)
        self.register = BestBoundRegister(self.sense)
        self.log = EventLog()
        self.workers = [_Worker(i, core) for i, core in enumerate(assignment.cores, start=1)]
        self.distrusted: set[str] = set()
        self.pending: list[tuple[int, str, int | None]] = []
        self.final: tuple[str, int] | None = None
        self.launches = 0
        self.failed_launches = 0
        self._files = 0
        self._problem_files: dict[int | None, str] = {}

    # -- helpers -------------------------------------------------------------

    def _problem_path(self, bound: int | None) -> str:
        if bound not in self._problem_files:
            self._files += 1
            target = self.problem if bound is None else tighten_bound(self.problem, bound)
            path = self.workdir / f"{self.problem.name}.{self._files}.mpd"
            path.write_text(serialize_problem(target))
            self._problem_files[bound] = str(path)
        return self._problem_files[bound]

    def _better(self, a: int, b: int | None) -> bool:
        return b is None or (a < b if self.sense == "min" else a > b)

    def _alive(self, w: _Worker) -> bool:
        return w.proc is not None and w.status == "running"

    def _kill(self, w: _Worker, t: int, reason: str) -> None:
        if self._alive(w):
            w.proc.kill(self.config.kill_grace)
            self.log.add(t, w.core, w.solver, "KILL", f"reason={reason}")
        w.proc = None

    # -- launching -----------------------------------------------------------

    def _launch(self, w: _Worker, t: int, solver: str, restarts: int = 0) -> None:
        spec = self.specs[solver]
        bound = self.register.value if self.optimization else None
        path = self._problem_path(bound)
        argv = spec.argv(path, None if bound is None else tightened_limit(self.sense, bound))
        w.solver = solver
        w.parser = OutputParser(solver)
        w.state = WorkerState(w.core, solver, t, t, best=bound, restarts=restarts)
        w.launch_bound = bound
        w.run_best = None
        self.launches += 1
        self.log.add(t, w.core, solver, "LAUNCH", "" if bound is None else f"bound={bound}")
        try:
            if self.config.virtual_clock:
                w.proc = VirtualProcess(argv, t, cwd=spec.cwd)
            else:
                w.proc = RealProcess(argv, t, cwd=spec.cwd)
        except OSError as exc:
            self.failed_launches += 1
            self.log.add(t, w.core, solver, "ERROR", f"spawn failed: {exc.strerror or exc}")
            w.proc = None
            w.status = "error"
            return
        w.status = "running"

    def _advance_slots(self, w: _Worker, t: int) -> None:
        while True:
            if 0 <= w.slot < len(w.timeline):
                if w.timeline[w.slot][2] > t:
                    return
                self._kill(w, t, "slot_end")
            nxt = w.slot + 1
            if nxt >= len(w.timeline):
                w.slot = len(w.timeline)
                w.status = "done"
                return
            w.slot = nxt
            self._launch(w, t, w.timeline[nxt][0])

    def _maybe_restart(self, w: _Worker, t: int) -> None:
        if w.status not in ("running", "idle") or w.state is None:
            return
        bound = restart_decision(
            w.state, self.register, self.config.restart_threshold, t, self.config.restart_policy
        )
        if bound is None:
            return
        self.log.add(t, w.core, w.solver, "RESTART", f"bound={bound}")
        self._kill(w, t, "restart")
        self._launch(w, t, w.solver, restarts=w.state.restarts + 1)

    # -- output handling -----------------------------------------------------

    def _drain(self, w: _Worker, t: int) -> None:
        if not self._alive(w):
            return
        for line in w.proc.read(t):
            for event in w.parser.feed(line):
                self._handle(w, event, t)
                if self.final is not None:
                    return
        if w.proc.finished(t):
            rc = w.proc.returncode
            w.proc = None
            if rc not in (0, None):
                self.failed_launches += 1
                self.log.add(t, w.core, w.solver, "ERROR", f"exit={rc}")
                w.status = "error"
            else:
                w.status = "idle"

    def _handle(self, w: _Worker, event, t: int) -> None:
        solver = w.solver
        spec = self.specs[solver]
        if isinstance(event, SolutionEvent):
            self._solution(w, spec, event.assignment, t)
        elif isinstance(event, ProtocolError):
            self.log.add(t, w.core, solver, "CHECK_FAIL", f"protocol: {event.reason}")
            if spec.check:
                self.distrusted.add(solver)
        elif isinstance(event, CompleteEvent):
            self.log.add(t, w.core, solver, "COMPLETE")
            self._claim(w, spec, t, unsat=False)
        elif isinstance(event, UnsatEvent):
            self.log.add(t, w.core, solver, "UNSAT")
            self._claim(w, spec, t, unsat=True)

    def _solution(self, w: _Worker, spec: SolverSpec, assignment, t: int) -> None:
        w.state.last_solution_ms = t
        # satisfaction answers end the run, so they are always checked
        check = spec.check or not self.optimization
        result = record_solution(self.register, w.solver, assignment, self.problem, check, t)
        if self.optimization:
            shown = result.objective
            if shown is None:
                try:
                    shown = evaluate_objective(self.problem, assignment)
                except ValueError:
                    shown = "?"
            self.log.add(t, w.core, w.solver, "SOLUTION", f"obj={shown}")
        else:
            self.log.add(t, w.core, w.solver, "SOLUTION")

        if result.outcome is Outcome.REJECTED_INVALID:
            self.log.add(t, w.core, w.solver, "CHECK_FAIL", result.reason.replace(" ", "_"))
            if spec.check or self.optimization:
                self.distrusted.add(w.solver)
            return
        if self.optimization:
            obj = result.objective
            if self._better(obj, w.state.best):
                w.state.best = obj
            if self._better(obj, w.run_best):
                w.run_best = obj
        if result.accepted:
            if self.optimization:
                self.log.add(t, w.core, w.solver, "BOUND", f"bound={result.objective}")
            self._contradict_pending(result.objective, t)
            if not self.optimization:
                self.final = ("sat", t)

    def _claim(self, w: _Worker, spec: SolverSpec, t: int, unsat: bool) -> None:
        """Handle a completion claim: search over the launched problem is exhausted."""
        solver = w.solver
        if unsat and w.run_best is not None:
            self._wrong(w.core, solver, t, "unsat_after_solution")
            return
        # None: claims no solution exists at all
        proven = w.run_best if w.run_best is not None else w.launch_bound
        if solver in self.distrusted:
            self._wrong(w.core, solver, t, "distrusted_completion")
            return
        if self._contradicted(proven):
            self._wrong(w.core, solver, t, "contradicted_completion")
            return
        if not spec.trusted_completion:
            self.pending.append((w.core, solver, proven))
            return
        self.final = ("unsat" if proven is None else "optimal", t)

    def _contradicted(self, proven: int | None) -> bool:
        if proven is None:
            return self.register.best is not None
        return self.register.better_than(proven)

    def _contradict_pending(self, value: int | None, t: int) -> None:
        keep = []
        for core, solver, proven in self.pending:
            if proven is None or (value is not None and self._better(value, proven)):
                self._wrong(core, solver, t, "contradicted_completion")
            else:
                keep.append((core, solver, proven))
        self.pending = keep

    def _wrong(self, core: int, solver: str, t: int, reason: str) -> None:
        # one wrong claim is enough to stop trusting the solver's later ones
        self.log.add(t, core, solver, "CHECK_FAIL", reason)
        self.log.wrong.add(solver)
        self.distrusted.add(solver)

    # -- main loop -----------------------------------------------------------

    def _quiescent(self, t: int) -> bool:
        for w in self.workers:
            if self._alive(w):
                return False
            if w.slot + 1 < len(w.timeline):
                return False
            if self.optimization and w.status == "idle" and self.register.value is not None:
                if self.config.restart_policy == "any" or self.register.better_than(w.state.best):
                    return False
        return True

    def run(self) -> tuple[SolverAnswer, EventLog]:
        tick = self.config.tick_ms
        clock = VirtualClock(tick) if self.config.virtual_clock else RealClock(tick)
        t = 0
        for w in self.workers:
            self._advance_slots(w, t)
        while True:
            for w in self.workers:
                self._drain(w, t)
                if self.final is not None:
                    break
            if self.final is not None or t >= self.total_ms:
                break
            for w in self.workers:
                self._advance_slots(w, t)
            if self.optimization:
                for w in self.workers:
                    self._maybe_restart(w, t)
            if self._quiescent(t):
                break
            t = clock.advance()
        return self._finish(t), self.log

    def _finish(self, t: int) -> SolverAnswer:
        reason = "done" if self.final is not None else "timeout"
        for w in self.workers:
            self._kill(w, t, reason)
        kind, t_end = self.final if self.final is not None else ("timeout", min(t, self.total_ms))
        seconds = t_end / 1000

        if kind == "unsat":
            return SolverAnswer("UNSAT", time=seconds)

        chosen = None
        valid = []
        for inc in self.register.history:
            if check_solution(self.problem, inc.assignment).ok:
                valid.append(inc)
        for inc in reversed(self.register.history):
            verdict = check_solution(self.problem, inc.assignment)
            if verdict.ok:
                chosen = inc
                break
            self._wrong(0, inc.solver, t_end, f"final_recheck_{verdict}")

        if chosen is None:
            failed = self.launches > 0 and self.failed_launches >= self.launches
            status = "ERROR" if failed or self.launches == 0 else "UNKNOWN"
            return SolverAnswer(status, time=seconds)

        if not self.optimization:
            status = "SAT"
        elif kind == "optimal" and chosen is self.register.best:
            status = "OPTIMAL"
        else:
            status = "SAT"
        trail = tuple((inc.time_ms / 1000, inc.value) for inc in valid if inc.value is not None)
        return SolverAnswer(status, dict(chosen.assignment), chosen.value, seconds, trail, chosen.solver)


def run_portfolio(
    problem: Problem,
    assignment: CoreAssignment,
    specs: Mapping[str, SolverSpec],
    config: ExecConfig,
    workdir: str | Path | None = None,
) -> tuple[SolverAnswer, EventLog]:
    """Run the scheduled solvers on ``problem`` and return the portfolio answer and event log."""
    if workdir is not None:
        Path(workdir).mkdir(parents=True, exist_ok=True)
        return _Supervisor(problem, assignment, specs, config, Path(workdir)).run()
    with tempfile.TemporaryDirectory(prefix="cpfolio-") as tmp:
        return _Supervisor(problem, assignment, specs, config, Path(tmp)).run()
