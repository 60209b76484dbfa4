"""Analytic checks of the local Markov condition and of faithfulness."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from percept.errors import PerceptError, SingularCovariance
from percept.gaussian import implied_distribution
from percept.scm import LinearScm, d_separated


@dataclass(frozen=True)
class CIResult:
    x: str
    y: str
    given: tuple[str, ...]
    partial_corr: float
    passed: bool

    def statement(self) -> str:
        given = ",".join(self.given) or "∅"
        return f"{self.x} ⟂ {self.y} | {given}"


def partial_correlation(cov: np.ndarray, i: int, j: int, given) -> float:
    ix = [i, j, *given]
    prec = np.linalg.inv(cov[np.ix_(ix, ix)])
    return float(-prec[0, 1] / np.sqrt(prec[0, 0] * prec[1, 1]))


def _require_nondegenerate(scm: LinearScm):
    zero = [n for n in scm.nodes if scm.noise_var[n] == 0]
    if zero:
        raise SingularCovariance(f"zero noise variance for {zero}; partial correlations are undefined")


def verify_markov(scm: LinearScm, tol: float) -> list[CIResult]:
    """Check ``X_i ⟂ X_j | pa(i)`` for every non-descendant ``j`` outside ``pa(i)``."""
    if tol <= 0:
        raise PerceptError("tol must be positive")
    _require_nondegenerate(scm)
    cov = implied_distribution(scm).cov
    g = scm.graph
    idx = {n: k for k, n in enumerate(g.nodes)}
    out = []
    for node in g.nodes:
        pa = g.parents(node)
        excluded = g.descendants(node) | set(pa) | {node}
        for other in g.nodes:
            if other in excluded:
                continue
            r = partial_correlation(cov, idx[node], idx[other], [idx[p] for p in pa])
            out.append(CIResult(node, other, pa, abs(r), abs(r) <= tol))
    return out


def verify_faithfulness(scm: LinearScm, tol: float) -> list[CIResult]:
    """Vanishing partial correlations that the graph does not entail.

    Every pair of nodes is tested against every conditioning set drawn from
    the remaining nodes, so the cost grows as ``p^2 2^(p-2)``.
    """
    if tol <= 0:
        raise PerceptError("tol must be positive")
    _require_nondegenerate(scm)
    cov = implied_distribution(scm).cov
    g = scm.graph
    nodes = g.nodes
    out = []
    for i, j in combinations(range(len(nodes)), 2):
        rest = [k for k in range(len(nodes)) if k not in (i, j)]
        for size in range(len(rest) + 1):
            for given in combinations(rest, size):
                r = abs(partial_correlation(cov, i, j, list(given)))
                if r > tol:
                    continue
                names = tuple(nodes[k] for k in given)
                if not d_separated(g, {nodes[i]}, {nodes[j]}, names):
                    out.append(CIResult(nodes[i], nodes[j], names, r, False))
    return out
