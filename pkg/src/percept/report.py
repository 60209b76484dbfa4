"""JSON and text rendering for every report type.

JSON output keeps a fixed key order and writes floats as their shortest
round-trip decimal, so identical reports always render to identical bytes.
"""

from __future__ import annotations

import json
from typing import Any

from percept.abstraction import ConsistencyReport
from percept.gaussian import GaussianDist
from percept.interventions import InterventionSpec
from percept.perception import FallacyVerdict, PerceptionReport, PibRow
from percept.scm import LinearScm, factorize

SCHEMA = "percept/1"


def spec_to_json(spec: InterventionSpec) -> dict[str, float]:
    return {t: v for t, v in spec.assignments}


def perception_to_dict(r: PerceptionReport) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "receivers": list(r.receivers),
        "shared_variables": list(r.shared_variables),
        "metric": r.metric,
        "aggregation": r.aggregation,
        "epsilon": r.epsilon,
        "interventions": [
            {"do": spec_to_json(row.intervention), "distance": row.distance, "below": list(row.below)}
            for row in r.interventions
        ],
        "aggregate_distance": r.aggregate_distance,
        "perception": r.perception,
        "kind": r.kind,
    }


def consistency_to_dict(r: ConsistencyReport) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "receiver": r.receiver,
        "tau": r.tau,
        "omega": r.omega,
        "metric": r.metric,
        "tol": r.tol,
        "variables": list(r.variables),
        "rows": [
            {
                "do": spec_to_json(row.intervention),
                "low_level_do": spec_to_json(row.low_intervention),
                "distance": row.distance,
                "pass": row.passed,
                "pushforward_mean": list(row.pushforward_mean),
                "high_level_mean": list(row.high_mean),
            }
            for row in r.rows
        ],
        "pass": r.passed,
    }


def fallacy_to_dict(v: FallacyVerdict) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "p_joint": v.p_joint,
        "p_a": v.p_a,
        "p_b": v.p_b,
        "violated": v.violated,
        "margin": v.margin,
    }


def pib_to_dict(reference: str, rows: list[PibRow], metric: str, agg: str, epsilon: float) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "reference": reference,
        "metric": metric,
        "aggregation": agg,
        "epsilon": epsilon,
        "ranking": [
            {"id": r.id, "aggregate_distance": r.aggregate_distance, "kind": r.kind, "perception": r.perception}
            for r in rows
        ],
    }


def scm_to_dict(scm: LinearScm, receiver: str, level: str) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "receiver": receiver,
        "level": level,
        "variables": list(scm.nodes),
        "edges": [{"from": a, "to": b, "coefficient": scm.coefficient(a, b)} for a, b in scm.graph.sorted_edges()],
        "noise": {n: {"mean": scm.noise_mean[n], "var": scm.noise_var[n]} for n in scm.nodes},
        "factorization": factorize(scm.graph).render(),
    }


def distribution_to_dict(dist: GaussianDist, receiver: str, spec: InterventionSpec) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "receiver": receiver,
        "do": spec_to_json(spec),
        "variables": list(dist.variables),
        "mean": dist.mean.tolist(),
        "cov": dist.cov.tolist(),
    }


def to_json(doc: dict[str, Any]) -> bytes:
    return (json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n").encode("utf-8")


def _table(rows: list[list[str]]) -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]


def _text_perception(r: PerceptionReport) -> list[str]:
    lines = [
        f"receivers: {r.receivers[0]} vs {r.receivers[1]}",
        f"shared variables: {', '.join(r.shared_variables)}",
        f"metric: {r.metric}  aggregation: {r.aggregation}  epsilon: {r.epsilon!r}",
    ]
    lines += _table([["intervention", "distance"]] + [[str(x.intervention), repr(x.distance)] for x in r.interventions])
    lines += [
        f"aggregate distance: {r.aggregate_distance!r}",
        f"perception: {'yes' if r.perception else 'no'}",
        f"kind: {r.kind}",
    ]
    return lines


def _text_consistency(r: ConsistencyReport) -> list[str]:
    lines = [f"receiver: {r.receiver}  tau: {r.tau}  omega: {r.omega}  metric: {r.metric}  tol: {r.tol!r}"]
    lines += _table(
        [["intervention", "distance", "result"]]
        + [[str(x.intervention), repr(x.distance), "pass" if x.passed else "FAIL"] for x in r.rows]
    )
    lines.append(f"exact transformation: {'PASS' if r.passed else 'FAIL'}")
    return lines


def _text_fallacy(v: FallacyVerdict) -> list[str]:
    verdict = "VIOLATED" if v.violated else "satisfied"
    return [
        f"P(A and B) = {v.p_joint!r}, P(A) = {v.p_a!r}, P(B) = {v.p_b!r}",
        f"conjunction rule {verdict} (margin {v.margin!r})",
    ]


def render_report(report, fmt: str = "json") -> bytes:
    """Render a perception, consistency, or fallacy report as ``json`` or ``text``."""
    if isinstance(report, PerceptionReport):
        doc, text = perception_to_dict, _text_perception
    elif isinstance(report, ConsistencyReport):
        doc, text = consistency_to_dict, _text_consistency
    elif isinstance(report, FallacyVerdict):
        doc, text = fallacy_to_dict, _text_fallacy
    else:
        raise TypeError(f"cannot render {type(report).__name__}")
    if fmt == "json":
        return to_json(doc(report))
    if fmt == "text":
        return ("\n".join(text(report)) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")
