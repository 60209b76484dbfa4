"""Perception between receivers, its kind, deviation from a reference receiver,
and the conjunction-rule check."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from percept.errors import EmptyMatchedSet, NoSharedVariables, OutOfRangeProbability, PerceptError
from percept.gaussian import distance, marginal
from percept.interventions import NULL, InterventionSet, InterventionSpec, implied_poset, leq
from percept.profiles import ReceiverProfile, assemble_high_level
from percept.scm import LinearScm

KINDS = ("none", "unfaithful", "inconsistent", "noise-divergent")
AGGREGATIONS = ("max", "mean")
DEFAULT_TOL_COEF = 1e-9
DEFAULT_TOL_NOISE = 1e-9


@dataclass(frozen=True)
class InterventionDistance:
    intervention: InterventionSpec
    distance: float
    below: tuple[int, ...]  # indices of matched interventions strictly below this one


@dataclass(frozen=True)
class PerceptionReport:
    receivers: tuple[str, str]
    shared_variables: tuple[str, ...]
    metric: str
    aggregation: str
    epsilon: float
    interventions: tuple[InterventionDistance, ...]
    aggregate_distance: float
    perception: bool
    kind: str


def shared_variables(a: ReceiverProfile, b: ReceiverProfile) -> tuple[str, ...]:
    shared = tuple(v for v in a.variables if v in b.variables)
    if not shared:
        raise NoSharedVariables(f"receivers {a.id!r} and {b.id!r} share no variables")
    return shared


def aggregate(distances, agg: str) -> float:
    if agg == "max":
        return max(distances)
    if agg == "mean":
        return math.fsum(distances) / len(distances)
    raise PerceptError(f"unknown aggregation {agg!r}; expected one of {AGGREGATIONS}")


def classify_kind(
    a: ReceiverProfile,
    b: ReceiverProfile,
    tol_coef: float = DEFAULT_TOL_COEF,
    tol_noise: float = DEFAULT_TOL_NOISE,
) -> str:
    """Kind of disagreement between two receivers' variable-level models.

    Different labeled edge sets make it ``unfaithful``; otherwise differing
    coefficients make it ``inconsistent``; otherwise differing noise on the
    shared variables makes it ``noise-divergent``; otherwise ``none``.
    """
    if tol_coef <= 0 or tol_noise <= 0:
        raise PerceptError("tolerances must be positive")
    ma, mb = assemble_high_level(a), assemble_high_level(b)
    return _kind(ma, mb, tol_coef, tol_noise)


def _kind(ma: LinearScm, mb: LinearScm, tol_coef: float, tol_noise: float) -> str:
    if ma.graph.edges != mb.graph.edges:
        return "unfaithful"
    if any(abs(ma.coefficients[e] - mb.coefficients[e]) > tol_coef for e in ma.graph.edges):
        return "inconsistent"
    for v in ma.nodes:
        if v in mb.noise_var:
            if abs(ma.noise_mean[v] - mb.noise_mean[v]) > tol_noise:
                return "noise-divergent"
            if abs(ma.noise_var[v] - mb.noise_var[v]) > tol_noise:
                return "noise-divergent"
    return "none"


def causal_perception(
    a: ReceiverProfile,
    b: ReceiverProfile,
    iset: InterventionSet,
    metric: str = "w2",
    agg: str = "max",
    epsilon: float | None = None,
    ridge: float | None = None,
    tol_coef: float = DEFAULT_TOL_COEF,
    tol_noise: float = DEFAULT_TOL_NOISE,
    workers: int = 1,
) -> PerceptionReport:
    """Aggregated distance between the two receivers' intervention posets.

    Posets are matched on identical interventions; each matched pair is
    compared on the shared-variable marginals and the distances are
    aggregated with ``max`` or ``mean``. Perception holds when the aggregate
    exceeds ``epsilon``.
    """
    if epsilon is None or not epsilon > 0:
        raise PerceptError("epsilon must be given and positive")
    if agg not in AGGREGATIONS:
        raise PerceptError(f"unknown aggregation {agg!r}; expected one of {AGGREGATIONS}")
    shared = shared_variables(a, b)
    for spec in iset:
        outside = [t for t in spec.targets if t not in shared]
        if outside:
            raise PerceptError(f"{spec} targets variables not shared by both receivers: {outside}")
    ma, mb = assemble_high_level(a), assemble_high_level(b)
    pa = implied_poset(ma, iset, workers)
    pb = implied_poset(mb, iset, workers)
    matched = [s for s in pa.specs if s in set(pb.specs)]
    if not matched:
        raise EmptyMatchedSet("no intervention is shared by both posets")

    def one(spec):
        return distance(marginal(pa.get(spec), shared), marginal(pb.get(spec), shared), metric, ridge)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            dists = list(ex.map(one, matched))
    else:
        dists = [one(s) for s in matched]
    rows = tuple(
        InterventionDistance(
            s, d, tuple(k for k, t in enumerate(matched) if t != s and leq(t, s))
        )
        for s, d in zip(matched, dists)
    )
    agg_d = aggregate(dists, agg)
    return PerceptionReport(
        receivers=(a.id, b.id),
        shared_variables=shared,
        metric=metric,
        aggregation=agg,
        epsilon=float(epsilon),
        interventions=rows,
        aggregate_distance=agg_d,
        perception=agg_d > epsilon,
        kind=_kind(ma, mb, tol_coef, tol_noise),
    )


def observational_perception(
    a: ReceiverProfile,
    b: ReceiverProfile,
    metric: str = "w2",
    epsilon: float | None = None,
    ridge: float | None = None,
    **kwargs,
) -> PerceptionReport:
    """Perception on the observational distributions alone."""
    return causal_perception(a, b, InterventionSet((NULL,)), metric, "max", epsilon, ridge, **kwargs)


@dataclass(frozen=True)
class PibRow:
    id: str
    aggregate_distance: float
    kind: str
    perception: bool


def pib_report(
    reference: ReceiverProfile,
    others,
    iset: InterventionSet,
    metric: str = "w2",
    agg: str = "max",
    epsilon: float | None = None,
    ridge: float | None = None,
    workers: int = 1,
) -> list[PibRow]:
    """Rank receivers by how far their posets sit from the reference receiver's."""
    others = list(others)
    if not others:
        raise PerceptError("need at least one receiver to compare with the reference")
    rows = []
    for other in others:
        rep = causal_perception(reference, other, iset, metric, agg, epsilon, ridge, workers=workers)
        rows.append(PibRow(other.id, rep.aggregate_distance, rep.kind, rep.perception))
    rows.sort(key=lambda r: (-r.aggregate_distance, r.id))
    return rows


@dataclass(frozen=True)
class FallacyVerdict:
    p_joint: float
    p_a: float
    p_b: float
    violated: bool
    margin: float


def check_conjunction(p_joint: float, p_a: float, p_b: float) -> FallacyVerdict:
    """A conjunction judged more probable than either of its parts violates the extension rule."""
    for name, p in (("p_joint", p_joint), ("p_a", p_a), ("p_b", p_b)):
        if not (isinstance(p, (int, float)) and 0.0 <= p <= 1.0):
            raise OutOfRangeProbability(f"{name}={p!r} is not a probability in [0, 1]")
    lower = min(p_a, p_b)
    return FallacyVerdict(float(p_joint), float(p_a), float(p_b), p_joint > lower, float(p_joint - lower))
