"""Checking that a descriptor-level model abstracts exactly to a variable-level one.

Each variable is read as the sum of its descriptors. A variable-level
intervention is mapped down to descriptors by an omega rule, the
descriptor-level model is intervened on and summed up, and the result is
compared with the intervened variable-level model.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from percept.errors import MissingDescriptors, PerceptError, VariableMismatch
from percept.gaussian import GaussianDist, distance, implied_distribution, marginal
from percept.interventions import InterventionSet, InterventionSpec, apply_do, leq
from percept.profiles import (
    ReceiverProfile,
    assemble_high_level,
    assemble_low_level,
    descriptor_node,
    descriptor_nodes,
)


@dataclass(frozen=True)
class OmegaMapping:
    """Rule mapping variable-level interventions to descriptor-level ones.

    ``equal-split`` sends ``do(X=x)`` to ``x/n`` on each of X's ``n``
    descriptors. ``single-descriptor`` puts the whole value on the descriptor
    at ``index`` and pins the other descriptors to zero.
    """

    rule: str = "equal-split"
    index: int = 0

    def __post_init__(self):
        if self.rule not in ("equal-split", "single-descriptor"):
            raise PerceptError(f"unknown omega rule {self.rule!r}")

    def __call__(self, spec: InterventionSpec, profile: ReceiverProfile) -> InterventionSpec:
        if self.rule == "equal-split":
            return omega_equal_split(spec, profile)
        return omega_single_descriptor(spec, profile, self.index)

    @classmethod
    def parse(cls, text: str) -> "OmegaMapping":
        if text == "equal-split":
            return cls()
        if text.startswith("single:"):
            return cls("single-descriptor", int(text.split(":", 1)[1]))
        raise PerceptError(f"unknown omega rule {text!r}; use equal-split or single:<index>")

    def label(self) -> str:
        return self.rule if self.rule == "equal-split" else f"single:{self.index}"


def _descriptors_of(profile: ReceiverProfile, var: str):
    if var not in profile.descriptors:
        raise PerceptError(f"unknown variable {var!r}")
    names = profile.descriptors[var]
    if not names:
        raise MissingDescriptors(f"variable {var!r} has no descriptors to intervene on")
    return names


def omega_equal_split(spec: InterventionSpec, profile: ReceiverProfile) -> InterventionSpec:
    out = []
    for var, value in spec.assignments:
        names = _descriptors_of(profile, var)
        out.extend((descriptor_node(var, d), value / len(names)) for d in names)
    return InterventionSpec(tuple(sorted(out)))


def omega_single_descriptor(spec: InterventionSpec, profile: ReceiverProfile, index: int) -> InterventionSpec:
    out = []
    for var, value in spec.assignments:
        names = _descriptors_of(profile, var)
        if not 0 <= index < len(names):
            raise PerceptError(f"descriptor index {index} out of range for {var!r}")
        out.extend((descriptor_node(var, d), value if k == index else 0.0) for k, d in enumerate(names))
    return InterventionSpec(tuple(sorted(out)))


def omega_preserves_order(omega, specs, profile: ReceiverProfile) -> bool:
    mapped = {s: omega(s, profile) for s in specs}
    return all(leq(mapped[i], mapped[j]) for i in specs for j in specs if leq(i, j))


def aggregation_matrix(profile: ReceiverProfile) -> tuple[list[str], np.ndarray]:
    """Variables with descriptors, and the 0/1 matrix summing descriptors into them."""
    low = descriptor_nodes(profile)
    high = [v for v in profile.variables if profile.descriptors[v]]
    t = np.zeros((len(high), len(low)))
    for r, v in enumerate(high):
        for d in profile.descriptors[v]:
            t[r, low.index(descriptor_node(v, d))] = 1.0
    return high, t


def tau_pushforward(low: GaussianDist, profile: ReceiverProfile) -> GaussianDist:
    expected = descriptor_nodes(profile)
    if sorted(low.variables) != sorted(expected):
        raise VariableMismatch("distribution must range over exactly the profile's descriptors")
    low = marginal(low, expected)
    high, t = aggregation_matrix(profile)
    cov = t @ low.cov @ t.T
    return GaussianDist(tuple(high), t @ low.mean, 0.5 * (cov + cov.T))


@dataclass(frozen=True)
class ConsistencyRow:
    intervention: InterventionSpec
    low_intervention: InterventionSpec
    distance: float
    passed: bool
    pushforward_mean: tuple[float, ...]
    high_mean: tuple[float, ...]


@dataclass(frozen=True)
class ConsistencyReport:
    receiver: str
    tau: str
    omega: str
    metric: str
    tol: float
    variables: tuple[str, ...]
    rows: tuple[ConsistencyRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def check_exact_transformation(
    profile: ReceiverProfile,
    iset_high: InterventionSet,
    metric: str = "w2",
    tol: float = 1e-9,
    tau: str | None = None,
    omega: OmegaMapping | None = None,
    ridge: float | None = None,
    workers: int = 1,
) -> ConsistencyReport:
    """Compare summed-up descriptor distributions with the variable-level model.

    The variable-level noise of each variable equals the sum of its
    descriptors' noise, which holds by construction since descriptors split
    their variable's noise equally. Only variables with descriptors are
    compared, and every variable-level edge must come from a weight matrix.
    """
    tau = profile.tau if tau is None else tau
    omega = OmegaMapping() if omega is None else omega
    high_scm = assemble_high_level(profile, tau)
    low_scm = assemble_low_level(profile)
    matrix_pairs = {(s.cause, s.effect) for s in profile.significations if s.kind == "matrix"}
    extra = sorted(set(high_scm.graph.edges) - matrix_pairs)
    if extra:
        raise PerceptError(f"edges {extra} have no descriptor-level counterpart")
    variables = tuple(v for v in profile.variables if profile.descriptors[v])

    def row(spec: InterventionSpec) -> ConsistencyRow:
        low_spec = omega(spec, profile)
        pushed = tau_pushforward(implied_distribution(apply_do(low_scm, low_spec)), profile)
        high = marginal(implied_distribution(apply_do(high_scm, spec)), variables)
        d = distance(pushed, high, metric, ridge)
        return ConsistencyRow(spec, low_spec, d, d <= tol, tuple(pushed.mean.tolist()), tuple(high.mean.tolist()))

    specs = sorted(iset_high, key=InterventionSpec.sort_key)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(row, specs))
    else:
        rows = [row(s) for s in specs]
    return ConsistencyReport(profile.id, tau, omega.label(), metric, tol, variables, tuple(rows))
