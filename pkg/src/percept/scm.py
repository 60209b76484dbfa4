"""Causal graphs and linear-Gaussian structural causal models."""

from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from percept.errors import (
    CycleError,
    DuplicateNode,
    NonFiniteValue,
    OverlappingSets,
    PerceptError,
    UnknownEndpoint,
    UnknownNode,
)

Edge = tuple[str, str]


@dataclass(frozen=True)
class CausalGraph:
    """A node-labeled DAG.

    ``nodes`` keeps declaration order, which is used to break ties wherever an
    ordering is needed. Two graphs compare equal when they have the same node
    order and the same labeled edge set.
    """

    nodes: tuple[str, ...]
    edges: frozenset[Edge]
    _parents: dict = field(init=False, repr=False, compare=False)
    _children: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", frozenset((str(a), str(b)) for a, b in self.edges))
        seen = set()
        for n in self.nodes:
            if not isinstance(n, str) or not n:
                raise PerceptError(f"node names must be non-empty strings, got {n!r}")
            if n in seen:
                raise DuplicateNode(f"duplicate node {n!r}")
            seen.add(n)
        index = {n: i for i, n in enumerate(self.nodes)}
        parents = {n: [] for n in self.nodes}
        children = {n: [] for n in self.nodes}
        for a, b in sorted(self.edges):
            for end in (a, b):
                if end not in index:
                    raise UnknownEndpoint(f"edge {a}->{b} references undeclared node {end!r}")
            if a == b:
                raise CycleError([a, a])
            parents[b].append(a)
            children[a].append(b)
        for d in (parents, children):
            for n in d:
                d[n] = tuple(sorted(d[n], key=index.__getitem__))
        object.__setattr__(self, "_parents", parents)
        object.__setattr__(self, "_children", children)
        cycle = _find_cycle(self.nodes, children)
        if cycle:
            raise CycleError(cycle)

    def parents(self, node: str) -> tuple[str, ...]:
        """Parents of ``node`` in declaration order."""
        return self._parents[node]

    def children(self, node: str) -> tuple[str, ...]:
        return self._children[node]

    def index(self, node: str) -> int:
        return self.nodes.index(node)

    def descendants(self, node: str) -> set[str]:
        out, stack = set(), list(self._children[node])
        while stack:
            n = stack.pop()
            if n not in out:
                out.add(n)
                stack.extend(self._children[n])
        return out

    def ancestors(self, nodes: Iterable[str]) -> set[str]:
        out, stack = set(), list(nodes)
        while stack:
            n = stack.pop()
            if n not in out:
                out.add(n)
                stack.extend(self._parents[n])
        return out

    def sorted_edges(self) -> list[Edge]:
        """Edges ordered by (parent, child) declaration index."""
        idx = {n: i for i, n in enumerate(self.nodes)}
        return sorted(self.edges, key=lambda e: (idx[e[0]], idx[e[1]]))


def _find_cycle(nodes, children):
    color = {n: 0 for n in nodes}
    for root in nodes:
        if color[root]:
            continue
        stack = [(root, iter(children[root]))]
        path = [root]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                path.pop()
            elif color[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            elif color[nxt] == 0:
                color[nxt] = 1
                stack.append((nxt, iter(children[nxt])))
                path.append(nxt)
    return None


def build_graph(nodes: Iterable[str], edges: Iterable[Edge]) -> CausalGraph:
    return CausalGraph(tuple(nodes), frozenset(tuple(e) for e in edges))


def topological_order(graph: CausalGraph) -> list[str]:
    """Kahn's algorithm; among ready nodes the earliest-declared goes first."""
    indeg = {n: len(graph.parents(n)) for n in graph.nodes}
    idx = {n: i for i, n in enumerate(graph.nodes)}
    ready = [idx[n] for n in graph.nodes if indeg[n] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = graph.nodes[heapq.heappop(ready)]
        order.append(n)
        for c in graph.children(n):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, idx[c])
    return order


@dataclass(frozen=True)
class LinearScm:
    """Linear SCM with additive Gaussian noise.

    Each variable follows ``X_j = sum(alpha[(i, j)] * X_i for i in pa(j)) + U_j``
    with ``U_j ~ N(noise_mean[j], noise_var[j])``.
    """

    graph: CausalGraph
    coefficients: Mapping[Edge, float]
    noise_mean: Mapping[str, float]
    noise_var: Mapping[str, float]

    def __post_init__(self):
        coefs = {tuple(k): float(v) for k, v in dict(self.coefficients).items()}
        if set(coefs) != set(self.graph.edges):
            missing = sorted(set(self.graph.edges) - set(coefs))
            extra = sorted(set(coefs) - set(self.graph.edges))
            raise PerceptError(f"coefficient keys must equal the edge set (missing {missing}, extra {extra})")
        mean = {n: float(v) for n, v in dict(self.noise_mean).items()}
        var = {n: float(v) for n, v in dict(self.noise_var).items()}
        for name, d in (("noise_mean", mean), ("noise_var", var)):
            if set(d) != set(self.graph.nodes):
                raise PerceptError(f"{name} must cover exactly the graph nodes")
        for v in [*coefs.values(), *mean.values(), *var.values()]:
            if not math.isfinite(v):
                raise NonFiniteValue(f"non-finite SCM parameter {v!r}")
        for n, v in var.items():
            if v < 0:
                raise PerceptError(f"noise variance of {n!r} is negative ({v})")
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "noise_mean", mean)
        object.__setattr__(self, "noise_var", var)

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.graph.nodes

    def coefficient(self, parent: str, child: str) -> float:
        return self.coefficients[(parent, child)]


@dataclass(frozen=True)
class FactorizationTerms:
    """Markov factorization: one ``(child, parents)`` term per node.

    Terms are stored in reverse topological order.
    """

    terms: tuple[tuple[str, tuple[str, ...]], ...]
    declared: tuple[str, ...]

    def render(self, sep: str = "·", subscripts: bool = False) -> str:
        """Render as a product of conditionals.

        Non-root terms come first in descending name order, followed by the
        roots in declaration order; parents are listed in ascending name
        order. ``subscripts=True`` writes a trailing index as ``X_1`` and
        separates parents with ``", "``.
        """
        fmt = _subscript if subscripts else (lambda s: s)
        psep = ", " if subscripts else ","
        inner = [t for t in self.terms if t[1]]
        roots = [t for t in self.terms if not t[1]]
        inner.sort(key=lambda t: t[0], reverse=True)
        roots.sort(key=lambda t: self.declared.index(t[0]))
        parts = []
        for child, parents in inner + roots:
            if parents:
                given = psep.join(fmt(p) for p in sorted(parents))
                parts.append(f"P({fmt(child)}|{given})")
            else:
                parts.append(f"P({fmt(child)})")
        return sep.join(parts)

    def __str__(self):
        return self.render()


def _subscript(name: str) -> str:
    m = re.fullmatch(r"(.*?[^\d_])(\d+)", name)
    return f"{m.group(1)}_{m.group(2)}" if m else name


def factorize(graph: CausalGraph) -> FactorizationTerms:
    order = topological_order(graph)
    terms = tuple((n, tuple(sorted(graph.parents(n)))) for n in reversed(order))
    return FactorizationTerms(terms, graph.nodes)


def d_separated(graph: CausalGraph, a: Iterable[str], b: Iterable[str], c: Iterable[str] = ()) -> bool:
    """True iff every path between ``a`` and ``b`` is blocked given ``c``.

    Uses the reachable-set (Bayes ball) traversal over (node, direction)
    states.
    """
    a, b, c = set(a), set(b), set(c)
    for s in (a, b, c):
        for n in s:
            if n not in graph.nodes:
                raise UnknownNode(f"unknown node {n!r}")
    if a & b or a & c or b & c:
        raise OverlappingSets("node sets must be pairwise disjoint")
    if not a or not b:
        return True
    anc_c = graph.ancestors(c)
    # "up" = arrived from a child, "down" = arrived from a parent
    visited = set()
    stack = [(n, "up") for n in a]
    while stack:
        node, direction = stack.pop()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in c and node in b:
            return False
        if direction == "up" and node not in c:
            stack.extend((p, "up") for p in graph.parents(node))
            stack.extend((ch, "down") for ch in graph.children(node))
        elif direction == "down":
            if node not in c:
                stack.extend((ch, "down") for ch in graph.children(node))
            if node in anc_c:
                stack.extend((p, "up") for p in graph.parents(node))
    return True
