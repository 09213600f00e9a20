"""Static instance features and the normalized Euclidean distance used by k-NN."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .problem import AllDifferent, LinearConstraint, Problem

SCHEMA_ID = "cpfolio-static16/v1"
DIMENSION = 16

FEATURE_NAMES = (
    "n_vars",
    "n_cons",
    "cons_per_var",
    "dom_min",
    "dom_max",
    "dom_mean",
    "log2_dom_product",
    "n_linear",
    "n_alldiff",
    "eq_fraction",
    "arity_mean",
    "degree_max",
    "degree_mean",
    "obj_flag",
    "obj_arity",
    "obj_coef_sum",
)

LOG_PRODUCT_CAP = 1e6


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    schema: str = SCHEMA_ID

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        if not all(math.isfinite(x) for x in self.values):
            raise ValueError("feature values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class NormalizationBounds:
    lows: tuple[float, ...]
    highs: tuple[float, ...]

    def __post_init__(self):
        if len(self.lows) != len(self.highs):
            raise ValueError("bounds must have equal length")
        if any(lo > hi for lo, hi in zip(self.lows, self.highs)):
            raise ValueError("min must not exceed max")

    def __len__(self) -> int:
        return len(self.lows)


def extract_features(problem: Problem) -> FeatureVector:
    n_vars = len(problem.variables)
    sizes = [v.size for v in problem.variables]
    cons = problem.constraints
    linear = [c for c in cons if isinstance(c, LinearConstraint)]
    alldiff = [c for c in cons if isinstance(c, AllDifferent)]

    degree = dict.fromkeys((v.id for v in problem.variables), 0)
    for con in cons:
        for var in con.variables:
            degree[var] += 1

    obj = problem.objective
    flag = {"sat": 0, "min": 1, "max": 2}[obj.sense]

    values = (
        n_vars,
        len(cons),
        len(cons) / n_vars if n_vars else 0.0,
        min(sizes, default=0),
        max(sizes, default=0),
        sum(sizes) / n_vars if n_vars else 0.0,
        min(math.fsum(math.log2(s) for s in sizes), LOG_PRODUCT_CAP),
        len(linear),
        len(alldiff),
        sum(c.relation == "=" for c in linear) / len(linear) if linear else 0.0,
        sum(len(c.variables) for c in cons) / len(cons) if cons else 0.0,
        max(degree.values(), default=0),
        sum(degree.values()) / n_vars if n_vars else 0.0,
        flag,
        len(obj.terms),
        sum(abs(c) for c, _ in obj.terms),
    )
    return FeatureVector(values)


def fit_normalization(vectors: Sequence[FeatureVector]) -> NormalizationBounds:
    if not vectors:
        raise ValueError("cannot fit normalization on an empty list")
    dim = len(vectors[0])
    if any(len(v) != dim for v in vectors):
        raise ValueError("feature vectors have mixed dimensions")
    columns = list(zip(*(v.values for v in vectors)))
    return NormalizationBounds(tuple(min(c) for c in columns), tuple(max(c) for c in columns))


def normalize(v: FeatureVector, bounds: NormalizationBounds) -> FeatureVector:
    """Map each feature into [-1, 1]; constant features become 0, outliers clamp."""
    if len(v) != len(bounds):
        raise ValueError(f"dimension mismatch: vector {len(v)}, bounds {len(bounds)}")
    out = []
    for x, lo, hi in zip(v.values, bounds.lows, bounds.highs):
        if hi == lo:
            out.append(0.0)
        else:
            y = 2.0 * (x - lo) / (hi - lo) - 1.0
            out.append(min(1.0, max(-1.0, y)))
    return FeatureVector(tuple(out), v.schema)


def distance(a: FeatureVector, b: FeatureVector) -> float:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return math.dist(a.values, b.values)
