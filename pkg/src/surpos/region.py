"""Algebra of success criteria over treatment effects.

A success region is a boolean expression whose leaves are elementary events
{beta_1j > delta} or {beta_1j < delta}.  Regions are normalized to a union of
intersections (disjunctive normal form), evaluated against posterior draws by
Monte Carlo, and combined into the family-wise-error-controlling adjusted POS
via inclusion-exclusion with each intersection's POS floored at 1 - gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import chain, combinations
from typing import Mapping, Union

import numpy as np

MAX_CLAUSES = 20


class EmptyRegionError(ValueError):
    """Every clause of the region is contradictory."""


@dataclass(frozen=True)
class Event:
    """Elementary event {beta_1j > delta} or {beta_1j < delta}; endpoint is 1-based.

    Strict inequalities only; +/- infinity thresholds express degenerate
    always/never events.
    """

    endpoint: int
    op: str
    delta: float

    def __post_init__(self):
        if self.endpoint < 1:
            raise ValueError("endpoint indices are 1-based")
        if self.op not in (">", "<"):
            raise ValueError("op must be '>' or '<'")
        object.__setattr__(self, "delta", float(self.delta))

    def holds(self, effects: np.ndarray) -> np.ndarray:
        col = effects[:, self.endpoint - 1]
        return col > self.delta if self.op == ">" else col < self.delta


@dataclass(frozen=True)
class AllOf:
    children: tuple["SuccessRegion", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("AllOf needs at least one child")


@dataclass(frozen=True)
class AnyOf:
    children: tuple["SuccessRegion", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("AnyOf needs at least one child")


SuccessRegion = Union[Event, AllOf, AnyOf]

Clause = tuple[Event, ...]


@dataclass(frozen=True)
class DnfRegion:
    """Union of clauses, each clause an intersection of elementary events."""

    clauses: tuple[Clause, ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        if not self.clauses:
            raise EmptyRegionError("region has no satisfiable clause")

    @property
    def n_clauses(self) -> int:
        return len(self.clauses)

    def endpoints(self) -> tuple[int, ...]:
        return tuple(sorted({e.endpoint for c in self.clauses for e in c}))


def _merge_clause(events) -> Clause | None:
    """Canonicalize an intersection: tightest threshold per (endpoint, op).

    Returns None when the clause is contradictory (empty intersection).
    """
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}
    for e in events:
        if e.op == ">":
            lower[e.endpoint] = max(lower.get(e.endpoint, -math.inf), e.delta)
        else:
            upper[e.endpoint] = min(upper.get(e.endpoint, math.inf), e.delta)
    merged = []
    for j in sorted(set(lower) | set(upper)):
        lo, hi = lower.get(j), upper.get(j)
        if lo is not None and hi is not None and hi <= lo:
            return None
        # degenerate sentinels: {x < -inf} and {x > +inf} are never satisfied
        if (hi is not None and hi == -math.inf) or (lo is not None and lo == math.inf):
            return None
        if lo is not None and lo > -math.inf:
            merged.append(Event(j, ">", lo))
        if hi is not None and hi < math.inf:
            merged.append(Event(j, "<", hi))
    # a clause whose constraints are all vacuous is the full space
    return tuple(merged)


def _clause_implies(a: Clause, b: Clause) -> bool:
    """True when region(b) is contained in region(a) (a is the looser clause)."""
    bounds = {(e.endpoint, e.op): e.delta for e in b}
    for e in a:
        d = bounds.get((e.endpoint, e.op))
        if d is None:
            return False
        if e.op == ">" and d < e.delta:
            return False
        if e.op == "<" and d > e.delta:
            return False
    return True


def to_dnf(region: SuccessRegion) -> DnfRegion:
    """Distribute intersections over unions; deduplicate and drop subsumed clauses."""

    def expand(node) -> list[list[Event]]:
        if isinstance(node, Event):
            return [[node]]
        if isinstance(node, AnyOf):
            return [c for child in node.children for c in expand(child)]
        if isinstance(node, AllOf):
            product: list[list[Event]] = [[]]
            for child in node.children:
                product = [acc + c for acc in product for c in expand(child)]
            return product
        raise TypeError(f"not a success region node: {node!r}")

    merged = []
    for raw in expand(region):
        clause = _merge_clause(raw)
        if clause is not None:
            merged.append(clause)
    if not merged:
        raise EmptyRegionError("all clauses are contradictory")
    # dedupe, keeping first occurrence
    unique: list[Clause] = []
    seen = set()
    for c in merged:
        key = frozenset(c)
        if key not in seen:
            seen.add(key)
            unique.append(c)
    kept = [
        c
        for i, c in enumerate(unique)
        if not any(i != k and _clause_implies(other, c) for k, other in enumerate(unique))
    ]
    # mutual implication (identical regions spelt differently) keeps neither; fall back
    if not kept:
        kept = [unique[0]]
    return DnfRegion(clauses=tuple(kept))


def clause_satisfied(clause: Clause, effects: np.ndarray) -> np.ndarray:
    out = np.ones(effects.shape[0], dtype=bool)
    for e in clause:
        out &= e.holds(effects)
    return out


def dnf_satisfied(region: DnfRegion, effects: np.ndarray) -> np.ndarray:
    out = np.zeros(effects.shape[0], dtype=bool)
    for clause in region.clauses:
        out |= clause_satisfied(clause, effects)
    return out


def tree_satisfied(region: SuccessRegion, effects: np.ndarray) -> np.ndarray:
    """Evaluate the original expression tree directly (oracle for the DNF)."""
    if isinstance(region, Event):
        return region.holds(effects)
    if isinstance(region, AllOf):
        out = np.ones(effects.shape[0], dtype=bool)
        for child in region.children:
            out &= tree_satisfied(child, effects)
        return out
    out = np.zeros(effects.shape[0], dtype=bool)
    for child in region.children:
        out |= tree_satisfied(child, effects)
    return out


def region_probability(effects: np.ndarray, region: DnfRegion) -> float:
    """Fraction of draws whose treatment-effect vector satisfies the region.

    ``effects`` is a (draws, J) matrix of treatment-effect draws.
    """
    effects = np.atleast_2d(np.asarray(effects, dtype=float))
    if effects.shape[0] == 0:
        raise ValueError("need at least one draw")
    return float(dnf_satisfied(region, effects).mean())


def clause_subsets(region: DnfRegion) -> dict[frozenset[int], Clause | None]:
    """Merged intersection for every nonempty subset of clauses.

    Keys are frozensets of 0-based clause indices; a value of None marks a
    contradictory (empty) intersection.
    """
    K = region.n_clauses
    if K > MAX_CLAUSES:
        raise ValueError(f"intersection enumeration too large: {K} clauses > {MAX_CLAUSES}")
    out: dict[frozenset[int], Clause | None] = {}
    for size in range(1, K + 1):
        for idx in combinations(range(K), size):
            events = list(chain.from_iterable(region.clauses[i] for i in idx))
            out[frozenset(idx)] = _merge_clause(events)
    return out


def adjusted_pos(clause_pos: Mapping[frozenset[int], float], gamma: float) -> float:
    """Inclusion-exclusion over clause-subset POS values floored at 1 - gamma.

    ``clause_pos`` maps every nonempty subset of {0, ..., K-1} to the POS of
    the corresponding clause intersection.  The result is clamped to [0, 1].
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    indices = frozenset().union(*clause_pos.keys()) if clause_pos else frozenset()
    K = len(indices)
    if K > MAX_CLAUSES:
        raise ValueError(f"intersection enumeration too large: {K} clauses > {MAX_CLAUSES}")
    if indices != frozenset(range(K)):
        raise ValueError("clause indices must be 0..K-1")
    floor = 1.0 - gamma
    total = 0.0
    for size in range(1, K + 1):
        sign = 1.0 if size % 2 == 1 else -1.0
        for idx in combinations(range(K), size):
            key = frozenset(idx)
            if key not in clause_pos:
                raise KeyError(f"missing POS value for clause subset {sorted(idx)}")
            value = clause_pos[key]
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"POS value {value} for subset {sorted(idx)} outside [0, 1]")
            total += sign * max(floor, value)
    return min(1.0, max(0.0, total))


def region_from_dict(obj) -> SuccessRegion:
    """Parse the nested config syntax: {"all": [...]}, {"any": [...]}, or a leaf
    {"endpoint": j, "op": ">"|"<", "delta": number}."""
    if not isinstance(obj, dict):
        raise ValueError(f"region node must be an object, got {type(obj).__name__}")
    if "all" in obj:
        return AllOf(tuple(region_from_dict(c) for c in obj["all"]))
    if "any" in obj:
        return AnyOf(tuple(region_from_dict(c) for c in obj["any"]))
    if {"endpoint", "op", "delta"} <= obj.keys():
        return Event(endpoint=int(obj["endpoint"]), op=obj["op"], delta=float(obj["delta"]))
    raise ValueError(f"unrecognized region node: {obj!r}")


def region_to_dict(region: SuccessRegion):
    if isinstance(region, Event):
        return {"endpoint": region.endpoint, "op": region.op, "delta": region.delta}
    key = "all" if isinstance(region, AllOf) else "any"
    return {key: [region_to_dict(c) for c in region.children]}
