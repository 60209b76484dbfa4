"""Receiver profiles: categorization, signification, and SCM assembly.

A profile lists the variables a receiver reasons about, the descriptors it
attaches to each of them, and its causal statements between pairs of
variables. Statements are either a bare orientation (optionally weighted), a
descriptor-level weight matrix, or an explicit empty statement. Assumed edges
are imposed from outside the receiver and survive empty descriptor sets.

Profile JSON layout::

    {
      "id": "r1",
      "variables": ["Z", "X1", "X2", "Y"],
      "descriptors": {"X1": ["tutoring", "expensive"], ...},
      "assumed_edges": [{"from": "X1", "to": "Y", "weight": 0.5}],
      "significations": [
        {"pair": ["Z", "X1"], "kind": "orientation", "weight": 0.8},
        {"pair": ["Z", "X2"], "kind": "matrix", "phi_bar": [[0.1, 0.2]]},
        {"pair": ["Z", "Y"], "kind": "empty"}
      ],
      "noise": {"Z": {"mean": 0.0, "var": 1.0}},
      "tau": "mean",
      "interventions": {"Z": [0.0, 1.0], "max_order": 1}
    }

Variables missing from ``noise`` get a standard normal noise term.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import jsonschema

from percept.errors import (
    MissingDescriptors,
    NonFiniteValue,
    PerceptError,
    ProfileValidationError,
    SchemaError,
)
from percept.interventions import InterventionSet, enumerate_interventions
from percept.scm import CausalGraph, LinearScm

TAU_CHOICES = ("sum", "mean")

_NUMBER = {"type": "number"}
_NAME = {"type": "string", "minLength": 1}

PROFILE_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["id", "variables"],
    "properties": {
        "id": _NAME,
        "variables": {"type": "array", "items": _NAME, "minItems": 1},
        "descriptors": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": _NAME},
        },
        "assumed_edges": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["from", "to"],
                "properties": {"from": _NAME, "to": _NAME, "weight": _NUMBER},
            },
        },
        "significations": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["pair", "kind"],
                "properties": {
                    "pair": {"type": "array", "items": _NAME, "minItems": 2, "maxItems": 2},
                    "kind": {"enum": ["orientation", "matrix", "empty"]},
                    "weight": _NUMBER,
                    "phi_bar": {"type": "array", "items": {"type": "array", "items": _NUMBER}},
                },
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "required": ["mean", "var"],
                "properties": {"mean": _NUMBER, "var": {"type": "number", "minimum": 0}},
            },
        },
        "tau": {"enum": list(TAU_CHOICES)},
        "interventions": {
            "type": "object",
            "properties": {"max_order": {"type": "integer", "minimum": 0}},
            "additionalProperties": {"type": "array", "items": _NUMBER},
        },
    },
}

GRID_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["grids"],
    "properties": {
        "grids": {"type": "object", "additionalProperties": {"type": "array", "items": _NUMBER}},
        "max_order": {"type": "integer", "minimum": 0},
    },
}


@dataclass(frozen=True)
class AssumedEdge:
    cause: str
    effect: str
    weight: float | None = None


@dataclass(frozen=True)
class Signification:
    cause: str
    effect: str
    kind: str
    weight: float | None = None
    phi_bar: tuple[tuple[float, ...], ...] | None = None


@dataclass(frozen=True)
class InterventionGrid:
    values: tuple[tuple[str, tuple[float, ...]], ...]
    max_order: int = 1

    def as_dict(self) -> dict[str, list[float]]:
        return {k: list(v) for k, v in self.values}

    def enumerate(self) -> InterventionSet:
        return enumerate_interventions(self.as_dict(), self.max_order)


@dataclass(frozen=True)
class ReceiverProfile:
    id: str
    variables: tuple[str, ...]
    descriptors: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    assumed_edges: tuple[AssumedEdge, ...] = ()
    significations: tuple[Signification, ...] = ()
    noise: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    tau: str = "mean"
    interventions: InterventionGrid | None = None

    def __post_init__(self):
        variables = tuple(self.variables)
        if len(set(variables)) != len(variables):
            raise ProfileValidationError(f"profile {self.id!r}: duplicate variables")
        declared = set(variables)
        descriptors = {}
        for var in variables:
            names = tuple(self.descriptors.get(var, ()))
            if len(set(names)) != len(names):
                raise ProfileValidationError(f"descriptors of {var!r} are not unique")
            descriptors[var] = names
        for var in self.descriptors:
            if var not in declared:
                raise ProfileValidationError(f"descriptors given for undeclared variable {var!r}")
        noise = {}
        for var in variables:
            mean, var_ = self.noise.get(var, (0.0, 1.0))
            mean, var_ = float(mean), float(var_)
            if not (math.isfinite(mean) and math.isfinite(var_)):
                raise NonFiniteValue(f"non-finite noise for {var!r}")
            if var_ < 0:
                raise ProfileValidationError(f"noise variance of {var!r} is negative")
            noise[var] = (mean, var_)
        for var in self.noise:
            if var not in declared:
                raise ProfileValidationError(f"noise given for undeclared variable {var!r}")
        if self.tau not in TAU_CHOICES:
            raise ProfileValidationError(f"tau must be one of {TAU_CHOICES}")

        pairs = set()

        def claim(a, b, what):
            for end in (a, b):
                if end not in declared:
                    raise ProfileValidationError(f"{what} {a}->{b} references undeclared variable {end!r}")
            if a == b:
                raise ProfileValidationError(f"{what} {a}->{b} relates a variable to itself")
            key = frozenset((a, b))
            if key in pairs:
                raise ProfileValidationError(f"more than one statement for the pair {{{a}, {b}}}")
            pairs.add(key)

        for s in self.significations:
            claim(s.cause, s.effect, "signification")
            if s.kind == "matrix":
                if s.phi_bar is None:
                    raise ProfileValidationError(f"matrix signification {s.cause}->{s.effect} needs phi_bar")
                if s.weight is not None:
                    raise ProfileValidationError("matrix significations take phi_bar, not weight")
                n, m = len(descriptors[s.cause]), len(descriptors[s.effect])
                if n == 0 or m == 0:
                    raise MissingDescriptors(
                        f"matrix signification {s.cause}->{s.effect} needs descriptors on both sides"
                    )
                shape = (len(s.phi_bar), *{len(r) for r in s.phi_bar})
                if shape != (n, m):
                    raise ProfileValidationError(
                        f"phi_bar for {s.cause}->{s.effect} must be {n}x{m} "
                        f"(descriptors of cause x effect), got {len(s.phi_bar)} rows "
                        f"of lengths {sorted({len(r) for r in s.phi_bar})}"
                    )
                if not all(math.isfinite(x) for r in s.phi_bar for x in r):
                    raise NonFiniteValue(f"non-finite phi_bar entry for {s.cause}->{s.effect}")
            elif s.kind == "orientation":
                if s.phi_bar is not None:
                    raise ProfileValidationError("orientation significations take weight, not phi_bar")
            elif s.kind == "empty":
                if s.phi_bar is not None or s.weight is not None:
                    raise ProfileValidationError("empty significations carry no weight or phi_bar")
            else:
                raise ProfileValidationError(f"unknown signification kind {s.kind!r}")
            if s.weight is not None and not math.isfinite(s.weight):
                raise NonFiniteValue("non-finite signification weight")
        for e in self.assumed_edges:
            claim(e.cause, e.effect, "assumed edge")
            if e.weight is not None and not math.isfinite(e.weight):
                raise NonFiniteValue("non-finite assumed-edge weight")
        if self.interventions is not None:
            for var, _ in self.interventions.values:
                if var not in declared:
                    raise ProfileValidationError(f"intervention grid names undeclared variable {var!r}")

        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "descriptors", descriptors)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "assumed_edges", tuple(self.assumed_edges))
        object.__setattr__(self, "significations", tuple(self.significations))
        # raises CycleError when the stated orientations loop
        CausalGraph(variables, frozenset(_edge_weights(self, self.tau)))

    def replace(self, **changes) -> "ReceiverProfile":
        from dataclasses import replace

        return replace(self, **changes)


def tau_aggregate(phi_bar, tau: str) -> float:
    """Aggregate a descriptor weight matrix into one variable-level coefficient.

    ``sum`` adds every entry; ``mean`` divides that sum by the number of cause
    descriptors (rows).
    """
    total = math.fsum(x for row in phi_bar for x in row)
    if tau == "sum":
        return total
    if tau == "mean":
        return total / len(phi_bar)
    raise PerceptError(f"unknown tau {tau!r}")


def _edge_weights(profile: ReceiverProfile, tau: str) -> dict[tuple[str, str], float]:
    out = {}
    for s in profile.significations:
        if s.kind == "orientation":
            out[(s.cause, s.effect)] = 1.0 if s.weight is None else float(s.weight)
        elif s.kind == "matrix":
            out[(s.cause, s.effect)] = tau_aggregate(s.phi_bar, tau)
    for e in profile.assumed_edges:
        out[(e.cause, e.effect)] = 1.0 if e.weight is None else float(e.weight)
    return out


def assemble_high_level(profile: ReceiverProfile, tau: str | None = None) -> LinearScm:
    """Variable-level SCM; ``tau`` overrides the profile's aggregation choice."""
    tau = profile.tau if tau is None else tau
    coefs = _edge_weights(profile, tau)
    graph = CausalGraph(profile.variables, frozenset(coefs))
    return LinearScm(
        graph,
        coefs,
        {v: m for v, (m, _) in profile.noise.items()},
        {v: s for v, (_, s) in profile.noise.items()},
    )


def descriptor_node(variable: str, descriptor: str) -> str:
    return f"{variable}.{descriptor}"


def descriptor_nodes(profile: ReceiverProfile) -> list[str]:
    return [descriptor_node(v, d) for v in profile.variables for d in profile.descriptors[v]]


def assemble_low_level(profile: ReceiverProfile) -> LinearScm:
    """Descriptor-level SCM.

    Every descriptor becomes a node named ``variable.descriptor``. A matrix
    signification contributes one edge per (cause descriptor, effect
    descriptor) with the matrix entry as coefficient. Descriptors of the same
    variable are independent; each carries an equal share of its variable's
    noise mean and variance.
    """
    nodes = descriptor_nodes(profile)
    coefs = {}
    for s in profile.significations:
        if s.kind != "matrix":
            continue
        for i, dc in enumerate(profile.descriptors[s.cause]):
            for j, de in enumerate(profile.descriptors[s.effect]):
                coefs[(descriptor_node(s.cause, dc), descriptor_node(s.effect, de))] = float(s.phi_bar[i][j])
    mean, var = {}, {}
    for v in profile.variables:
        n = len(profile.descriptors[v])
        for d in profile.descriptors[v]:
            mean[descriptor_node(v, d)] = profile.noise[v][0] / n
            var[descriptor_node(v, d)] = profile.noise[v][1] / n
    return LinearScm(CausalGraph(tuple(nodes), frozenset(coefs)), coefs, mean, var)


def _reject_constant(token):
    raise NonFiniteValue(f"non-finite number {token} in document")


def load_json(document: bytes | str) -> Any:
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError("$", f"not UTF-8: {exc}") from None
    try:
        return json.loads(document, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from None


def _validate(doc, schema):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise SchemaError(path, err.message)


def profile_from_dict(doc: Mapping[str, Any]) -> ReceiverProfile:
    _validate(doc, PROFILE_SCHEMA)
    sigs = []
    for s in doc.get("significations", []):
        phi = s.get("phi_bar")
        sigs.append(
            Signification(
                s["pair"][0],
                s["pair"][1],
                s["kind"],
                None if s.get("weight") is None else float(s["weight"]),
                None if phi is None else tuple(tuple(float(x) for x in row) for row in phi),
            )
        )
    edges = [
        AssumedEdge(e["from"], e["to"], None if e.get("weight") is None else float(e["weight"]))
        for e in doc.get("assumed_edges", [])
    ]
    grid = None
    if "interventions" in doc:
        raw = dict(doc["interventions"])
        max_order = raw.pop("max_order", 1)
        grid = InterventionGrid(tuple((k, tuple(float(x) for x in v)) for k, v in raw.items()), max_order)
    return ReceiverProfile(
        id=doc["id"],
        variables=tuple(doc["variables"]),
        descriptors={k: tuple(v) for k, v in doc.get("descriptors", {}).items()},
        assumed_edges=tuple(edges),
        significations=tuple(sigs),
        noise={k: (float(v["mean"]), float(v["var"])) for k, v in doc.get("noise", {}).items()},
        tau=doc.get("tau", "mean"),
        interventions=grid,
    )


def parse_profile(document: bytes | str) -> ReceiverProfile:
    return profile_from_dict(load_json(document))


def profile_to_dict(profile: ReceiverProfile) -> dict[str, Any]:
    sigs = []
    for s in profile.significations:
        item: dict[str, Any] = {"pair": [s.cause, s.effect], "kind": s.kind}
        if s.weight is not None:
            item["weight"] = s.weight
        if s.phi_bar is not None:
            item["phi_bar"] = [list(r) for r in s.phi_bar]
        sigs.append(item)
    edges = []
    for e in profile.assumed_edges:
        item = {"from": e.cause, "to": e.effect}
        if e.weight is not None:
            item["weight"] = e.weight
        edges.append(item)
    doc: dict[str, Any] = {
        "id": profile.id,
        "variables": list(profile.variables),
        "descriptors": {v: list(profile.descriptors[v]) for v in profile.variables},
        "assumed_edges": edges,
        "significations": sigs,
        "noise": {v: {"mean": m, "var": s} for v, (m, s) in profile.noise.items()},
        "tau": profile.tau,
    }
    if profile.interventions is not None:
        grid: dict[str, Any] = profile.interventions.as_dict()
        grid["max_order"] = profile.interventions.max_order
        doc["interventions"] = grid
    return doc


def serialize_profile(profile: ReceiverProfile) -> bytes:
    return (json.dumps(profile_to_dict(profile), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def parse_grid(document: bytes | str) -> InterventionSet:
    """Parse an intervention grid file: ``{"grids": {var: [values]}, "max_order": k}``."""
    doc = load_json(document)
    _validate(doc, GRID_SCHEMA)
    return enumerate_interventions(doc["grids"], doc.get("max_order", 1))
