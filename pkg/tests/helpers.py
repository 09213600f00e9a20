"""Independent oracles and random generators shared by the test modules.

Everything here is written without calling into the code under test
beyond constructing its data types.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from pathlib import Path

from hypothesis import strategies as st

from cpfolio.features import FeatureVector
from cpfolio.kb import KnowledgeBase, RunRecord
from cpfolio.problem import AllDifferent, LinearConstraint, Objective, Problem, Variable

FIXTURES = Path(__file__).parent / "fixtures"
RELS = ("<=", ">=", "=", "!=")


# -- problems ----------------------------------------------------------------


@st.composite
def problems(draw, max_vars: int = 5, max_dom: int = 4, max_cons: int = 4, sense=None):
    n = draw(st.integers(1, max_vars))
    names = [f"v{i}" for i in range(n)]
    variables = []
    for name in names:
        lb = draw(st.integers(-3, 3))
        variables.append(Variable(name, lb, lb + draw(st.integers(0, max_dom - 1))))
    cons = []
    for _ in range(draw(st.integers(0, max_cons))):
        if n >= 2 and draw(st.booleans()) and draw(st.booleans()):
            vs = draw(st.lists(st.sampled_from(names), min_size=2, max_size=n, unique=True))
            cons.append(AllDifferent(tuple(vs)))
        else:
            vs = draw(st.lists(st.sampled_from(names), min_size=1, max_size=n, unique=True))
            terms = tuple((draw(st.integers(-4, 4).filter(bool)), v) for v in vs)
            cons.append(LinearConstraint(terms, draw(st.sampled_from(RELS)), draw(st.integers(-8, 8))))
    sense = sense or draw(st.sampled_from(("sat", "min", "max")))
    terms = ()
    if sense != "sat":
        vs = draw(st.lists(st.sampled_from(names), min_size=1, max_size=n, unique=True))
        terms = tuple((draw(st.integers(-5, 5).filter(bool)), v) for v in vs)
    return Problem("p", tuple(variables), tuple(cons), Objective(sense, terms))


def assignments(problem: Problem, slack: int = 0):
    """Every assignment over the declared domains widened by ``slack``."""
    names = [v.id for v in problem.variables]
    ranges = [range(v.lb - slack, v.ub + slack + 1) for v in problem.variables]
    for values in itertools.product(*ranges):
        yield dict(zip(names, values))


def naive_linear(terms, assignment) -> int:
    total = 0
    for coef, var in terms:
        total = total + coef * assignment[var]
    return total


def naive_valid(problem: Problem, assignment) -> bool:
    for var in problem.variables:
        if var.id not in assignment:
            return False
        if assignment[var.id] < var.lb or assignment[var.id] > var.ub:
            return False
    for con in problem.constraints:
        if isinstance(con, AllDifferent):
            seen = []
            for v in con.vars:
                if assignment[v] in seen:
                    return False
                seen.append(assignment[v])
        else:
            lhs = naive_linear(con.terms, assignment)
            ok = {
                "<=": lhs <= con.rhs,
                ">=": lhs >= con.rhs,
                "=": lhs == con.rhs,
                "!=": lhs != con.rhs,
            }[con.relation]
            if not ok:
                return False
    return True


def naive_features(problem: Problem) -> list[float]:
    """Feature counter written loop by loop, straight from the feature list."""
    nv = 0
    sizes = []
    for v in problem.variables:
        nv += 1
        sizes.append(v.ub - v.lb + 1)
    nc = 0
    n_lin = 0
    n_all = 0
    n_eq = 0
    arity_total = 0
    degree = {v.id: 0 for v in problem.variables}
    for c in problem.constraints:
        nc += 1
        if isinstance(c, LinearConstraint):
            n_lin += 1
            if c.relation == "=":
                n_eq += 1
            names = [v for _, v in c.terms]
        else:
            n_all += 1
            names = list(c.vars)
        arity_total += len(names)
        for name in names:
            degree[name] += 1
    log_prod = 0.0
    for s in sizes:
        log_prod += math.log2(s)
    obj = problem.objective
    flag = 0 if obj.sense == "sat" else (1 if obj.sense == "min" else 2)
    coef_sum = 0
    for c, _ in obj.terms:
        coef_sum += abs(c)
    return [
        nv,
        nc,
        nc / nv,
        min(sizes),
        max(sizes),
        sum(sizes) / nv,
        min(log_prod, 1e6),
        n_lin,
        n_all,
        n_eq / n_lin if n_lin else 0,
        arity_total / nc if nc else 0,
        max(degree.values()),
        sum(degree.values()) / nv,
        flag,
        len(obj.terms),
        coef_sum,
    ]


# -- knowledge bases ---------------------------------------------------------


def random_kb(
    rng: random.Random,
    n_instances: int,
    n_solvers: int,
    dim: int = 4,
    timeout: float = 100.0,
    grid: int | None = None,
    optimization: float = 0.0,
) -> KnowledgeBase:
    """KB with random features and statuses; ``grid`` forces feature ties."""
    instances = {}
    for i in range(n_instances):
        if grid:
            values = [rng.randrange(grid) for _ in range(dim)]
        else:
            values = [rng.uniform(-10, 10) for _ in range(dim)]
        instances[f"i{i:03d}"] = FeatureVector(values, "test/v1")
    solvers = [chr(ord("A") + j) for j in range(n_solvers)]
    runs = {}
    for inst in instances:
        is_opt = rng.random() < optimization
        for s in solvers:
            roll = rng.random()
            if roll < 0.1:
                continue
            t = round(rng.uniform(0, timeout), 3)
            if is_opt:
                status = rng.choice(["OPTIMAL", "SAT", "UNKNOWN"])
                obj = rng.randint(0, 20) if status != "UNKNOWN" else None
            else:
                status = rng.choice(["SAT", "UNSAT", "UNKNOWN", "ERROR", "SAT"])
                obj = None
            if status in ("UNKNOWN", "ERROR"):
                t = timeout
            runs[(inst, s)] = RunRecord(inst, s, status, t, obj)
    return KnowledgeBase("test/v1", timeout, instances, runs, tuple(solvers))


def brute_neighbors(kb: KnowledgeBase, query: FeatureVector, k: int) -> list[str]:
    """Full sort on (exact squared distance, id), normalizing with bounds recomputed here."""
    cols = list(zip(*(v.values for v in kb.instances.values())))
    lows = [min(c) for c in cols]
    highs = [max(c) for c in cols]

    def norm(values):
        out = []
        for x, lo, hi in zip(values, lows, highs):
            if lo == hi:
                out.append(0.0)
            else:
                out.append(max(-1.0, min(1.0, 2 * (x - lo) / (hi - lo) - 1)))
        return out

    q = norm(query.values)
    scored = []
    for inst, fv in kb.instances.items():
        p = norm(fv.values)
        scored.append((sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(p, q)), inst))
    scored.sort()
    return [inst for _, inst in scored[:k]]


def solved_oracle(kb: KnowledgeBase, inst: str, solver: str) -> bool:
    opt = any(
        r.objective is not None or r.status == "OPTIMAL"
        for (i, _), r in kb.runs.items() if i == inst
    )
    rec = kb.runs.get((inst, solver))
    if rec is None:
        return False
    if opt:
        return rec.status == "OPTIMAL"
    return rec.status in ("SAT", "UNSAT")


def schedule_oracle(kb: KnowledgeBase, hood: list[str], portfolio: list[str], T_ms: int, k: int):
    """Exhaustive 2^n bitmask enumeration of the SUNNY selection and slot allocation."""
    n = len(portfolio)
    solved = {s: {i for i in hood if solved_oracle(kb, i, s)} for s in portfolio}
    avg = {}
    for s in portfolio:
        times = [kb.runs[(i, s)].time for i in solved[s]]
        avg[s] = math.fsum(times) / len(times) if times else kb.timeout

    best_key, best_set = None, None
    for mask in range(1 << n):
        members = tuple(sorted(portfolio[j] for j in range(n) if mask >> j & 1))
        covered = set()
        for s in members:
            covered |= solved[s]
        key = (-len(covered), len(members), math.fsum(avg[s] for s in members), members)
        if best_key is None or key < best_key:
            best_key, best_set = key, members
    covered = set()
    for s in best_set:
        covered |= solved[s]

    kb_counts = {s: sum(solved_oracle(kb, i, s) for i in kb.instances) for s in portfolio}
    backup = sorted(portfolio, key=lambda s: (-kb_counts[s], s))[0]
    weights = {s: len(solved[s]) for s in best_set}
    if k - len(covered) > 0:
        weights[backup] = weights.get(backup, 0) + k - len(covered)
    order = sorted(weights, key=lambda s: (avg[s], s))
    denom = sum(weights[s] for s in order)
    slots = [[s, T_ms * weights[s] // denom] for s in order]
    slots[0][1] += T_ms - sum(ms for _, ms in slots)
    return [(s, ms) for s, ms in slots]


# -- scoring -----------------------------------------------------------------


def read_expected_scores(path: Path) -> dict[str, tuple[Fraction, Fraction]]:
    rows = path.read_text().split("\n")[1:]
    out = {}
    for row in filter(None, rows):
        solver, complete, incomplete = row.split(",")
        out[solver] = (Fraction(complete), Fraction(incomplete))
    return out


# -- mock solvers ------------------------------------------------------------


def mock_spec(tmp_path: Path, name: str, script: str, check: bool = False, trusted: bool = True):
    from cpfolio.config import make_spec

    path = tmp_path / f"{name}.mock"
    path.write_text(script)
    cmd = ["{python}", "-m", "cpfolio.mock_solver", str(path), "{problem}", "--bound", "{bound}"]
    return make_spec(name, cmd, check=check, trusted_completion=trusted)


def exec_config(specs, timeout=20.0, cores=None, virtual=True, **kwargs):
    from cpfolio.config import ExecConfig

    kwargs.setdefault("restart_threshold", min(5.0, timeout / 2))
    cfg = ExecConfig(timeout=timeout, cores=cores or len(specs), virtual_clock=virtual, **kwargs)
    cfg.solvers = {s.id: s for s in specs}
    cfg.validate()
    return cfg


def all_on_own_cores(ids, timeout):
    from cpfolio.scheduler import CoreAssignment

    total = round(timeout * 1000)
    return CoreAssignment(tuple(((s, 0, total),) for s in ids), total)
