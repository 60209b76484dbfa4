"""Atomic do-interventions, their natural partial order, and distribution posets."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Mapping

from percept.errors import DuplicateTarget, NonFiniteValue, PerceptError, UnknownTarget
from percept.gaussian import GaussianDist, implied_distribution
from percept.scm import CausalGraph, LinearScm


@dataclass(frozen=True, order=True)
class InterventionSpec:
    """``do(X=x, ...)``; the empty spec is the null intervention."""

    assignments: tuple[tuple[str, float], ...] = ()

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.assignments)

    def as_dict(self) -> dict[str, float]:
        return dict(self.assignments)

    @property
    def is_null(self) -> bool:
        return not self.assignments

    def sort_key(self):
        return (len(self.assignments), self.targets, tuple(v for _, v in self.assignments))

    def __str__(self):
        if self.is_null:
            return "∅"
        return "do(" + ", ".join(f"{t}={v!r}" for t, v in self.assignments) + ")"


NULL = InterventionSpec()


def make_intervention(assignments: Mapping[str, float] | Iterable[tuple[str, float]] = ()) -> InterventionSpec:
    items = list(assignments.items()) if isinstance(assignments, Mapping) else list(assignments)
    seen = set()
    for target, value in items:
        if target in seen:
            raise DuplicateTarget(f"target {target!r} assigned more than once")
        seen.add(target)
        if not math.isfinite(float(value)):
            raise NonFiniteValue(f"non-finite value for {target!r}")
    return InterventionSpec(tuple(sorted((str(t), float(v)) for t, v in items)))


def leq(i: InterventionSpec, j: InterventionSpec) -> bool:
    """``i <= j`` iff j intervenes on a superset of i's targets with equal values there."""
    jd = j.as_dict()
    return all(t in jd and jd[t] == v for t, v in i.assignments)


@dataclass(frozen=True)
class InterventionSet:
    specs: tuple[InterventionSpec, ...]

    def __post_init__(self):
        specs, seen = [NULL], {NULL}
        for s in self.specs:
            if s not in seen:
                seen.add(s)
                specs.append(s)
        object.__setattr__(self, "specs", tuple(specs))

    def __iter__(self):
        return iter(self.specs)

    def __len__(self):
        return len(self.specs)

    def __contains__(self, spec):
        return spec in self.specs


def enumerate_interventions(grid: Mapping[str, Iterable[float]], max_order: int) -> InterventionSet:
    """The null intervention plus every assignment of grid values to at most ``max_order`` targets.

    Order: by number of targets, then target names, then values.
    """
    if max_order < 0:
        raise PerceptError("max_order must be >= 0")
    values = {}
    for var in sorted(grid):
        vals = [float(v) for v in grid[var]]
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteValue(f"non-finite grid value for {var!r}")
        values[var] = sorted(set(vals))
    specs = []
    for k in range(1, min(max_order, len(values)) + 1):
        for targets in combinations(sorted(values), k):
            for combo in product(*(values[t] for t in targets)):
                specs.append(InterventionSpec(tuple(zip(targets, combo))))
    return InterventionSet(tuple(specs))


def apply_do(scm: LinearScm, spec: InterventionSpec) -> LinearScm:
    """Mutilate ``scm``: cut edges into each target and pin it to its value with zero variance."""
    if spec.is_null:
        return scm
    unknown = [t for t in spec.targets if t not in scm.nodes]
    if unknown:
        raise UnknownTarget(f"intervention targets {unknown} are not variables of the model")
    values = spec.as_dict()
    edges = frozenset(e for e in scm.graph.edges if e[1] not in values)
    graph = CausalGraph(scm.graph.nodes, edges)
    coefs = {e: a for e, a in scm.coefficients.items() if e in edges}
    mean = {n: values.get(n, m) for n, m in scm.noise_mean.items()}
    var = {n: 0.0 if n in values else v for n, v in scm.noise_var.items()}
    return LinearScm(graph, coefs, mean, var)


@dataclass(frozen=True)
class DistributionPoset:
    entries: tuple[tuple[InterventionSpec, GaussianDist], ...]

    @property
    def specs(self) -> tuple[InterventionSpec, ...]:
        return tuple(s for s, _ in self.entries)

    def get(self, spec: InterventionSpec) -> GaussianDist:
        for s, d in self.entries:
            if s == spec:
                return d
        raise KeyError(str(spec))

    def order(self) -> list[tuple[int, int]]:
        """Index pairs ``(a, b)`` with ``a != b`` and entry a <= entry b."""
        specs = self.specs
        return [
            (a, b)
            for a in range(len(specs))
            for b in range(len(specs))
            if a != b and leq(specs[a], specs[b])
        ]


def implied_poset(scm: LinearScm, iset: InterventionSet, workers: int = 1) -> DistributionPoset:
    specs = list(iset)
    for s in specs:
        unknown = [t for t in s.targets if t not in scm.nodes]
        if unknown:
            raise UnknownTarget(f"intervention targets {unknown} are not variables of the model")

    def one(spec):
        return implied_distribution(apply_do(scm, spec))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            dists = list(ex.map(one, specs))
    else:
        dists = [one(s) for s in specs]
    return DistributionPoset(tuple(zip(specs, dists)))
