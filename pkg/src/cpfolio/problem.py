"""Neutral problem descriptors (MPD v1): parsing, checking, bound tightening.

An MPD file is line oriented::

    PROBLEM knapsack
    VAR x INT 0 5
    VAR y INT 0 5
    CON LIN 2*x + 3*y <= 12
    CON ALLDIFF x y
    OBJ MAX 1*x + 1*y

``#`` starts a comment. Exactly one ``OBJ`` line is required.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

__all__ = [
    "AllDifferent",
    "CheckResult",
    "LinearConstraint",
    "Objective",
    "Problem",
    "ProblemError",
    "Variable",
    "Verdict",
    "check_solution",
    "evaluate_objective",
    "parse_problem",
    "serialize_problem",
    "tighten_bound",
]

RELATIONS = ("<=", ">=", "=", "!=")
SENSES = ("sat", "min", "max")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_TERM = re.compile(r"\s*([+-]?)\s*(-?\d+)\s*\*\s*([A-Za-z_][A-Za-z0-9_]*)\s*")
_RELATION = re.compile(r"(<=|>=|!=|=)")


class ProblemError(ValueError):
    """Malformed or inconsistent problem descriptor."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Variable:
    id: str
    lb: int
    ub: int

    @property
    def size(self) -> int:
        return self.ub - self.lb + 1


Terms = tuple[tuple[int, str], ...]


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * var) <rel> rhs``."""

    terms: Terms
    relation: str
    rhs: int

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for _, v in self.terms)

    def holds(self, assignment: Mapping[str, int]) -> bool:
        lhs = sum(c * assignment[v] for c, v in self.terms)
        return _compare(lhs, self.relation, self.rhs)


@dataclass(frozen=True)
class AllDifferent:
    vars: tuple[str, ...]

    @property
    def variables(self) -> tuple[str, ...]:
        return self.vars

    def holds(self, assignment: Mapping[str, int]) -> bool:
        values = [assignment[v] for v in self.vars]
        return len(set(values)) == len(values)


Constraint = Union[LinearConstraint, AllDifferent]


@dataclass(frozen=True)
class Objective:
    sense: str = "sat"
    terms: Terms = ()

    @property
    def is_optimization(self) -> bool:
        return self.sense != "sat"

    def better(self, a: int, b: int | None) -> bool:
        """True if objective value ``a`` strictly improves on ``b``."""
        if b is None:
            return True
        return a < b if self.sense == "min" else a > b


@dataclass(frozen=True)
class Problem:
    name: str
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...] = ()
    objective: Objective = field(default_factory=Objective)

    def __post_init__(self):
        if not _IDENT.match(self.name):
            raise ProblemError(f"invalid problem name {self.name!r}")
        if not self.variables:
            raise ProblemError("empty problem: no variables declared")
        seen = set()
        for var in self.variables:
            if not _IDENT.match(var.id):
                raise ProblemError(f"invalid variable id {var.id!r}")
            if var.id in seen:
                raise ProblemError(f"duplicate variable id {var.id!r}")
            if var.lb > var.ub:
                raise ProblemError(f"variable {var.id!r} has empty domain [{var.lb}, {var.ub}]")
            seen.add(var.id)
        for i, con in enumerate(self.constraints):
            _validate_refs(con.variables, seen, f"constraint {i}")
            if isinstance(con, LinearConstraint):
                if not con.terms:
                    raise ProblemError(f"constraint {i}: empty linear expression")
                if con.relation not in RELATIONS:
                    raise ProblemError(f"constraint {i}: unknown relation {con.relation!r}")
                _validate_distinct(con.variables, f"constraint {i}")
            else:
                if len(con.vars) < 2:
                    raise ProblemError(f"constraint {i}: ALLDIFF needs at least two variables")
                _validate_distinct(con.vars, f"constraint {i}")
        if self.objective.sense not in SENSES:
            raise ProblemError(f"unknown objective sense {self.objective.sense!r}")
        if self.objective.is_optimization:
            if not self.objective.terms:
                raise ProblemError("objective expression is empty")
            _validate_refs([v for _, v in self.objective.terms], seen, "objective")
            _validate_distinct([v for _, v in self.objective.terms], "objective")
        elif self.objective.terms:
            raise ProblemError("satisfaction objective cannot carry an expression")

    def variable(self, var_id: str) -> Variable:
        for var in self.variables:
            if var.id == var_id:
                return var
        raise KeyError(var_id)


def _validate_refs(names: Sequence[str], declared: set, where: str) -> None:
    for name in names:
        if name not in declared:
            raise ProblemError(f"{where} references undeclared variable {name!r}")


def _validate_distinct(names: Sequence[str], where: str) -> None:
    if len(set(names)) != len(names):
        raise ProblemError(f"{where} repeats a variable")


def _compare(lhs: int, relation: str, rhs: int) -> bool:
    if relation == "<=":
        return lhs <= rhs
    if relation == ">=":
        return lhs >= rhs
    if relation == "=":
        return lhs == rhs
    return lhs != rhs


# -- parsing -----------------------------------------------------------------


def _parse_expr(text: str, lineno: int) -> Terms:
    terms = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        match = _TERM.match(text, pos)
        if match is None or match.end() == pos:
            raise ProblemError(f"malformed linear expression {text!r}", lineno)
        op, coef, var = match.groups()
        if terms and not op:
            raise ProblemError(f"missing '+' or '-' between terms in {text!r}", lineno)
        value = int(coef)
        if op == "-":
            value = -value
        terms.append((value, var))
        pos = match.end()
    if not terms:
        raise ProblemError("empty linear expression", lineno)
    return tuple(terms)


def _parse_int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ProblemError(f"expected an integer, got {token!r}", lineno) from None


def parse_problem(text: str) -> Problem:
    """Parse MPD v1 text into a validated :class:`Problem`."""
    name = None
    variables: list[Variable] = []
    constraints: list[Constraint] = []
    objective = None
    seen: dict[str, int] = {}
    refs: list[tuple[int, Sequence[str]]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "PROBLEM":
            if name is not None:
                raise ProblemError("PROBLEM declared twice", lineno)
            if not _IDENT.match(rest):
                raise ProblemError(f"invalid problem name {rest!r}", lineno)
            name = rest
        elif head == "VAR":
            parts = rest.split()
            if len(parts) != 4 or parts[1] != "INT":
                raise ProblemError("expected 'VAR <id> INT <lb> <ub>'", lineno)
            var_id = parts[0]
            if not _IDENT.match(var_id):
                raise ProblemError(f"invalid variable id {var_id!r}", lineno)
            if var_id in seen:
                raise ProblemError(
                    f"duplicate variable id {var_id!r} (first declared on line {seen[var_id]})", lineno
                )
            lb, ub = _parse_int(parts[2], lineno), _parse_int(parts[3], lineno)
            if lb > ub:
                raise ProblemError(f"empty domain [{lb}, {ub}] for {var_id!r}", lineno)
            seen[var_id] = lineno
            variables.append(Variable(var_id, lb, ub))
        elif head == "CON":
            kind, _, body = rest.partition(" ")
            if kind == "LIN":
                pieces = _RELATION.split(body)
                if len(pieces) != 3:
                    raise ProblemError("expected exactly one relation in linear constraint", lineno)
                terms = _parse_expr(pieces[0], lineno)
                rhs = _parse_int(pieces[2].strip(), lineno)
                constraints.append(LinearConstraint(terms, pieces[1], rhs))
            elif kind == "ALLDIFF":
                ids = tuple(body.split())
                if len(ids) < 2:
                    raise ProblemError("ALLDIFF needs at least two variables", lineno)
                if len(set(ids)) != len(ids):
                    raise ProblemError("ALLDIFF repeats a variable", lineno)
                constraints.append(AllDifferent(ids))
            else:
                raise ProblemError(f"unknown constraint kind {kind!r}", lineno)
            refs.append((lineno, constraints[-1].variables))
        elif head == "OBJ":
            if objective is not None:
                raise ProblemError("OBJ declared twice", lineno)
            sense, _, expr = rest.partition(" ")
            if sense == "SAT" and not expr.strip():
                objective = Objective()
            elif sense in ("MIN", "MAX"):
                objective = Objective(sense.lower(), _parse_expr(expr, lineno))
                refs.append((lineno, [v for _, v in objective.terms]))
            else:
                raise ProblemError(f"expected 'OBJ SAT|MIN <expr>|MAX <expr>', got {line!r}", lineno)
        else:
            raise ProblemError(f"unknown directive {head!r}", lineno)

    if name is None:
        raise ProblemError("missing PROBLEM line")
    if not variables:
        raise ProblemError("empty problem: no variables declared")
    if objective is None:
        raise ProblemError("missing OBJ line")
    for lineno, names in refs:
        for ref in names:
            if ref not in seen:
                raise ProblemError(f"reference to undeclared variable {ref!r}", lineno)
        if len(set(names)) != len(names):
            raise ProblemError("expression repeats a variable", lineno)
    return Problem(name, tuple(variables), tuple(constraints), objective)


def _format_expr(terms: Terms) -> str:
    out = []
    for i, (coef, var) in enumerate(terms):
        if i == 0:
            out.append(f"{coef}*{var}")
        elif coef < 0:
            out.append(f"- {-coef}*{var}")
        else:
            out.append(f"+ {coef}*{var}")
    return " ".join(out)


def serialize_problem(problem: Problem) -> str:
    lines = [f"PROBLEM {problem.name}"]
    lines += [f"VAR {v.id} INT {v.lb} {v.ub}" for v in problem.variables]
    for con in problem.constraints:
        if isinstance(con, LinearConstraint):
            lines.append(f"CON LIN {_format_expr(con.terms)} {con.relation} {con.rhs}")
        else:
            lines.append("CON ALLDIFF " + " ".join(con.vars))
    obj = problem.objective
    if obj.is_optimization:
        lines.append(f"OBJ {obj.sense.upper()} {_format_expr(obj.terms)}")
    else:
        lines.append("OBJ SAT")
    return "\n".join(lines) + "\n"


# -- checking ----------------------------------------------------------------


class Verdict(enum.Enum):
    VALID = "valid"
    VIOLATES = "violates"
    OUT_OF_DOMAIN = "out_of_domain"
    INCOMPLETE = "incomplete"


@dataclass(frozen=True)
class CheckResult:
    verdict: Verdict
    constraint: int | None = None
    variable: str | None = None

    @property
    def ok(self) -> bool:
        return self.verdict is Verdict.VALID

    def __str__(self) -> str:
        if self.verdict is Verdict.VIOLATES:
            return f"violates({self.constraint})"
        if self.verdict is Verdict.VALID:
            return "valid"
        return f"{self.verdict.value}({self.variable})"


def check_solution(problem: Problem, assignment: Mapping[str, int]) -> CheckResult:
    """Check ``assignment`` against every variable domain and constraint.

    Variables are examined first, in declaration order, then constraints;
    the first failure found is reported. Extra keys in ``assignment`` are
    ignored.
    """
    for var in problem.variables:
        if var.id not in assignment:
            return CheckResult(Verdict.INCOMPLETE, variable=var.id)
        if not var.lb <= assignment[var.id] <= var.ub:
            return CheckResult(Verdict.OUT_OF_DOMAIN, variable=var.id)
    for i, con in enumerate(problem.constraints):
        if not con.holds(assignment):
            return CheckResult(Verdict.VIOLATES, constraint=i)
    return CheckResult(Verdict.VALID)


def evaluate_objective(problem: Problem, assignment: Mapping[str, int]) -> int:
    obj = problem.objective
    if not obj.is_optimization:
        raise ValueError(f"problem {problem.name!r} has no objective to evaluate")
    missing = [v.id for v in problem.variables if v.id not in assignment]
    if missing:
        raise ValueError(f"incomplete assignment: missing {', '.join(missing)}")
    return sum(c * assignment[v] for c, v in obj.terms)


def tighten_bound(problem: Problem, bound: int) -> Problem:
    """Copy of ``problem`` that only admits objective values strictly better than ``bound``."""
    obj = problem.objective
    if obj.sense == "min":
        extra = LinearConstraint(obj.terms, "<=", bound - 1)
    elif obj.sense == "max":
        extra = LinearConstraint(obj.terms, ">=", bound + 1)
    else:
        raise ValueError(f"cannot tighten satisfaction problem {problem.name!r}")
    return Problem(problem.name, problem.variables, problem.constraints + (extra,), obj)


def tightened_limit(sense: str, bound: int) -> int:
    """The right-hand side :func:`tighten_bound` uses for ``bound``."""
    return bound - 1 if sense == "min" else bound + 1
