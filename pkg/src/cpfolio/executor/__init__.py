from .policy import (
    BestBoundRegister,
    Outcome,
    RecordResult,
    WorkerState,
    record_solution,
    restart_decision,
)
from .protocol import (
    CompleteEvent,
    OutputParser,
    ProtocolError,
    SolutionEvent,
    UnsatEvent,
    parse_solver_output,
)
from .runner import EventLog, LogEvent, SolverAnswer, run_portfolio

__all__ = [
    "BestBoundRegister",
    "CompleteEvent",
    "EventLog",
    "LogEvent",
    "Outcome",
    "OutputParser",
    "ProtocolError",
    "RecordResult",
    "SolutionEvent",
    "SolverAnswer",
    "UnsatEvent",
    "WorkerState",
    "parse_solver_output",
    "record_solution",
    "restart_decision",
    "run_portfolio",
]
