"""Knowledge base of training instances: storage, k-NN queries, neighborhood statistics.

On disk a knowledge base is a directory holding three files::

    features.csv   instance,f1,...,fd
    runs.csv       instance,solver,status,time,objective
    kb.meta        schema=<id> / timeout=<seconds> / solvers=<id>,<id>,...
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .features import (
    SCHEMA_ID,
    FeatureVector,
    NormalizationBounds,
    distance,
    fit_normalization,
    normalize,
)

STATUS_TOKENS = {"sat": "SAT", "opt": "OPTIMAL", "unsat": "UNSAT", "unk": "UNKNOWN", "err": "ERROR"}
STATUS_CODES = {v: k for k, v in STATUS_TOKENS.items()}

# index of the objective-flag feature in the built-in schema (0 sat, 1 min, 2 max)
_OBJ_FLAG = 13


def objective_direction(features: FeatureVector) -> str:
    """Optimization direction of an instance known to have an objective.

    Only the built-in schema encodes it; other schemas are taken as minimization.
    """
    if features.schema == SCHEMA_ID and features.values[_OBJ_FLAG] == 2:
        return "max"
    return "min"


class KBError(ValueError):
    """Invalid knowledge-base contents."""


@dataclass(frozen=True)
class RunRecord:
    instance: str
    solver: str
    status: str
    time: float
    objective: int | None = None

    def __post_init__(self):
        if self.status not in STATUS_CODES:
            raise KBError(f"unknown status {self.status!r}")
        if self.time < 0 or not math.isfinite(self.time):
            raise KBError(f"invalid run time {self.time!r}")
        if self.objective is not None and self.status not in ("SAT", "OPTIMAL"):
            raise KBError(f"objective given for a {self.status} run")


@dataclass
class KnowledgeBase:
    schema: str
    timeout: float
    instances: dict[str, FeatureVector]
    runs: dict[tuple[str, str], RunRecord]
    solvers: tuple[str, ...]
    bounds: NormalizationBounds = field(init=False)
    _normalized: dict[str, FeatureVector] = field(init=False, repr=False)
    _optimization: frozenset[str] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.instances:
            raise KBError("knowledge base has no instances")
        if self.timeout <= 0:
            raise KBError("timeout must be positive")
        dims = {len(v) for v in self.instances.values()}
        if len(dims) != 1:
            raise KBError(f"feature vectors have mixed dimensions {sorted(dims)}")
        known = set(self.solvers)
        for (inst, solver), run in self.runs.items():
            if inst not in self.instances:
                raise KBError(f"run references unknown instance {inst!r}")
            if solver not in known:
                raise KBError(f"run references unknown solver {solver!r}")
            if run.time > self.timeout:
                raise KBError(f"run {inst}/{solver} exceeds the timeout ({run.time} > {self.timeout})")
        self.bounds = fit_normalization(list(self.instances.values()))
        self._normalized = {k: normalize(v, self.bounds) for k, v in self.instances.items()}
        self._optimization = frozenset(
            inst for (inst, _), rec in self.runs.items()
            if rec.objective is not None or rec.status == "OPTIMAL"
        )

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def __len__(self) -> int:
        return len(self.instances)

    def run(self, instance: str, solver: str) -> RunRecord:
        """Recorded run, or an UNKNOWN run at the timeout when none exists."""
        rec = self.runs.get((instance, solver))
        if rec is None:
            return RunRecord(instance, solver, "UNKNOWN", self.timeout)
        return rec

    def is_optimization(self, instance: str) -> bool:
        return instance in self._optimization

    def direction(self, instance: str) -> str | None:
        if not self.is_optimization(instance):
            return None
        return objective_direction(self.instances[instance])

    def solved(self, instance: str, solver: str) -> bool:
        status = self.run(instance, solver).status
        if self.is_optimization(instance):
            return status == "OPTIMAL"
        return status in ("SAT", "UNSAT")

    def without(self, instances: Iterable[str]) -> "KnowledgeBase":
        drop = set(instances)
        return KnowledgeBase(
            self.schema,
            self.timeout,
            {k: v for k, v in self.instances.items() if k not in drop},
            {key: r for key, r in self.runs.items() if key[0] not in drop},
            self.solvers,
        )


@dataclass(frozen=True)
class SolverStats:
    solved: int
    avg_time: float
    quality: float
    solved_instances: frozenset[str] = frozenset()


@dataclass(frozen=True)
class NeighborhoodStats:
    """Per-solver performance over a neighborhood.

    ``kb_solved`` holds each solver's solved count over the whole knowledge
    base; the scheduler uses it to pick the backup solver.
    """

    neighborhood: tuple[str, ...]
    per_solver: Mapping[str, SolverStats]
    kb_solved: Mapping[str, int]
    timeout: float

    def __getitem__(self, solver: str) -> SolverStats:
        return self.per_solver[solver]

    def __contains__(self, solver: str) -> bool:
        return solver in self.per_solver


# -- io ----------------------------------------------------------------------


def _read_rows(path: Path, header: Sequence[str] | None = None):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise KBError(f"{path}: empty file") from None
        head = [h.strip() for h in head]
        if header is not None and head != list(header):
            raise KBError(f"{path}: expected header {','.join(header)}, got {','.join(head)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, head, [c.strip() for c in row]


def read_features_csv(path: str | Path, schema: str = SCHEMA_ID) -> dict[str, FeatureVector]:
    path = Path(path)
    instances: dict[str, FeatureVector] = {}
    dim = None
    for lineno, head, row in _read_rows(path):
        if dim is None:
            if len(head) < 2 or head[0] != "instance":
                raise KBError(f"{path}: header must be instance,f1,...,fd")
            dim = len(head) - 1
        if len(row) != dim + 1:
            raise KBError(f"{path}:{lineno}: expected {dim} features, got {len(row) - 1}")
        inst = row[0]
        if not inst:
            raise KBError(f"{path}:{lineno}: empty instance id")
        if inst in instances:
            raise KBError(f"{path}:{lineno}: duplicate instance {inst!r}")
        try:
            instances[inst] = FeatureVector(tuple(float(x) for x in row[1:]), schema)
        except ValueError as exc:
            raise KBError(f"{path}:{lineno}: {exc}") from None
    if dim is None:
        raise KBError(f"{path}: empty file")
    return instances


RUN_HEADER = ("instance", "solver", "status", "time", "objective")


def read_runs_csv(path: str | Path) -> list[tuple[int, RunRecord]]:
    path = Path(path)
    out = []
    for lineno, _, row in _read_rows(path, RUN_HEADER):
        if len(row) != 5:
            raise KBError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
        inst, solver, token, time_s, obj_s = row
        if token not in STATUS_TOKENS:
            raise KBError(f"{path}:{lineno}: unknown status {token!r}")
        try:
            rec = RunRecord(inst, solver, STATUS_TOKENS[token], float(time_s), int(obj_s) if obj_s else None)
        except (ValueError, KBError) as exc:
            raise KBError(f"{path}:{lineno}: {exc}") from None
        out.append((lineno, rec))
    return out


def build_kb(
    instances: dict[str, FeatureVector],
    runs: Sequence[tuple[int, RunRecord]],
    timeout: float,
    schema: str = SCHEMA_ID,
    solvers: Sequence[str] | None = None,
    source: str = "runs.csv",
) -> KnowledgeBase:
    """Validate rows and assemble a knowledge base, naming offending rows."""
    declared = set(solvers) if solvers is not None else None
    table: dict[tuple[str, str], RunRecord] = {}
    first_seen: dict[tuple[str, str], int] = {}
    for lineno, rec in runs:
        key = (rec.instance, rec.solver)
        if key in table:
            raise KBError(
                f"{source}:{lineno}: duplicate run for ({rec.instance}, {rec.solver}), "
                f"first on row {first_seen[key]}"
            )
        if rec.instance not in instances:
            raise KBError(f"{source}:{lineno}: unknown instance {rec.instance!r}")
        if declared is not None and rec.solver not in declared:
            raise KBError(f"{source}:{lineno}: unknown solver {rec.solver!r}")
        if rec.time > timeout:
            raise KBError(f"{source}:{lineno}: time {rec.time} exceeds timeout {timeout}")
        table[key] = rec
        first_seen[key] = lineno
    if solvers is None:
        solvers = sorted({r.solver for _, r in runs})
    return KnowledgeBase(schema, float(timeout), dict(instances), table, tuple(sorted(solvers)))


def read_meta(path: str | Path) -> dict[str, str]:
    meta = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise KBError(f"{path}:{lineno}: expected key=value")
        meta[key.strip()] = value.strip()
    return meta


def load_kb(path: str | Path) -> KnowledgeBase:
    root = Path(path)
    for name in ("kb.meta", "features.csv", "runs.csv"):
        if not (root / name).is_file():
            raise KBError(f"{root}: missing {name}")
    meta = read_meta(root / "kb.meta")
    if "schema" not in meta or "timeout" not in meta:
        raise KBError(f"{root / 'kb.meta'}: schema and timeout are required")
    try:
        timeout = float(meta["timeout"])
    except ValueError:
        raise KBError(f"{root / 'kb.meta'}: bad timeout {meta['timeout']!r}") from None
    solvers = [s for s in meta.get("solvers", "").split(",") if s] or None
    instances = read_features_csv(root / "features.csv", meta["schema"])
    runs = read_runs_csv(root / "runs.csv")
    return build_kb(instances, runs, timeout, meta["schema"], solvers, str(root / "runs.csv"))


def save_kb(kb: KnowledgeBase, path: str | Path) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / "kb.meta").write_text(
        f"schema={kb.schema}\ntimeout={kb.timeout!r}\nsolvers={','.join(kb.solvers)}\n"
    )
    with open(root / "features.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance"] + [f"f{i}" for i in range(1, kb.dimension + 1)])
        for inst in sorted(kb.instances):
            writer.writerow([inst] + [repr(x) for x in kb.instances[inst].values])
    with open(root / "runs.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUN_HEADER)
        for key in sorted(kb.runs):
            rec = kb.runs[key]
            obj = "" if rec.objective is None else str(rec.objective)
            writer.writerow([rec.instance, rec.solver, STATUS_CODES[rec.status], repr(rec.time), obj])


# -- queries -----------------------------------------------------------------


def neighbors(kb: KnowledgeBase, query: FeatureVector, k: int) -> list[str]:
    """The ``k`` instances nearest to ``query``; ties go to the smaller instance id."""
    if k < 1:
        raise ValueError("k must be positive")
    if k > len(kb):
        raise ValueError(f"k={k} exceeds knowledge-base size {len(kb)}")
    if len(query) != kb.dimension:
        raise ValueError(f"query has dimension {len(query)}, knowledge base {kb.dimension}")
    q = normalize(query, kb.bounds)
    scored = ((distance(q, vec), inst) for inst, vec in kb._normalized.items())
    return [inst for _, inst in heapq.nsmallest(k, scored)]


def _quality(kb: KnowledgeBase, instance: str, solvers: Sequence[str]) -> dict[str, float]:
    values = {}
    for s in kb.solvers:
        rec = kb.run(instance, s)
        if rec.objective is not None:
            values[s] = rec.objective
    out = dict.fromkeys(solvers, 0.0)
    if not values:
        return out
    maximize = kb.direction(instance) == "max"
    best = max(values.values()) if maximize else min(values.values())
    worst = min(values.values()) if maximize else max(values.values())
    for s in solvers:
        if s in values:
            out[s] = 1.0 if best == worst else (worst - values[s]) / (worst - best)
    return out


def solver_stats(
    kb: KnowledgeBase, neighborhood: Sequence[str], portfolio: Sequence[str] | None = None
) -> NeighborhoodStats:
    solvers = list(kb.solvers if portfolio is None else portfolio)
    for inst in neighborhood:
        if inst not in kb.instances:
            raise KeyError(f"unknown instance {inst!r}")
    qualities = [_quality(kb, inst, solvers) for inst in neighborhood]
    per_solver = {}
    for s in solvers:
        solved = frozenset(i for i in neighborhood if kb.solved(i, s))
        times = [kb.run(i, s).time for i in solved]
        avg = math.fsum(times) / len(times) if times else kb.timeout
        quality = math.fsum(q[s] for q in qualities) / len(neighborhood) if neighborhood else 0.0
        per_solver[s] = SolverStats(len(solved), avg, quality, solved)
    kb_solved = {s: sum(kb.solved(i, s) for i in kb.instances) for s in solvers}
    return NeighborhoodStats(tuple(neighborhood), per_solver, kb_solved, kb.timeout)
