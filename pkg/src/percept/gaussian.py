"""Exact implied distributions of linear-Gaussian SCMs and distances between them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from percept.errors import (
    DimensionMismatch,
    PerceptError,
    SingularCovariance,
    UnknownVariable,
    VariableMismatch,
)
from percept.scm import LinearScm, topological_order

PSD_CLAMP = 1e-10
SYMMETRY_TOL = 1e-12
DEFAULT_KL_RIDGE = 1e-9
METRICS = ("w2", "kl")


@dataclass(frozen=True, eq=False)
class GaussianDist:
    variables: tuple[str, ...]
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        variables = tuple(self.variables)
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float).reshape(len(mean), len(mean))
        if len(variables) != len(mean) or len(set(variables)) != len(variables):
            raise DimensionMismatch("variables must be unique and match the mean length")
        scale = max(1.0, float(np.max(np.abs(cov)))) if cov.size else 1.0
        if cov.size and np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise PerceptError("covariance is not symmetric")
        if cov.size and np.linalg.eigvalsh(cov)[0] < -PSD_CLAMP * scale:
            raise PerceptError("covariance is not positive semidefinite")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return len(self.variables)

    def __eq__(self, other):
        if not isinstance(other, GaussianDist):
            return NotImplemented
        return (
            self.variables == other.variables
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.cov, other.cov)
        )

    def __repr__(self):
        return f"GaussianDist(variables={self.variables}, mean={self.mean.tolist()}, cov={self.cov.tolist()})"


def total_effects(scm: LinearScm) -> np.ndarray:
    """The matrix ``(I - A)^{-1}`` with ``A[child, parent] = alpha``.

    Row ``j`` holds the total effect of every noise term on ``X_j``; rows are
    filled by forward substitution in topological order.
    """
    nodes = scm.nodes
    idx = {n: i for i, n in enumerate(nodes)}
    p = len(nodes)
    b = np.zeros((p, p))
    for n in topological_order(scm.graph):
        j = idx[n]
        b[j, j] = 1.0
        for par in scm.graph.parents(n):
            b[j] += scm.coefficient(par, n) * b[idx[par]]
    return b


def implied_distribution(scm: LinearScm) -> GaussianDist:
    nodes = scm.nodes
    idx = {n: i for i, n in enumerate(nodes)}
    mean = np.zeros(len(nodes))
    # same accumulation order as the sampler so deterministic systems agree bit for bit
    for n in topological_order(scm.graph):
        acc = scm.noise_mean[n]
        for par in scm.graph.parents(n):
            acc = acc + scm.coefficient(par, n) * mean[idx[par]]
        mean[idx[n]] = acc
    b = total_effects(scm)
    var = np.array([scm.noise_var[n] for n in nodes])
    cov = (b * var) @ b.T
    cov = 0.5 * (cov + cov.T)
    return GaussianDist(nodes, mean, cov)


def marginal(dist: GaussianDist, variables: Sequence[str]) -> GaussianDist:
    variables = list(variables)
    missing = [v for v in variables if v not in dist.variables]
    if missing:
        raise UnknownVariable(f"unknown variables {missing}")
    ix = [dist.variables.index(v) for v in variables]
    return GaussianDist(tuple(variables), dist.mean[ix], dist.cov[np.ix_(ix, ix)])


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Symmetric square root with eigenvalues at round-off level set to zero."""
    if mat.size == 0:
        return mat.copy()
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    cutoff = max(float(np.max(np.abs(w))), 1.0) * mat.shape[0] * np.finfo(float).eps
    w = np.where(w > cutoff, w, 0.0)
    return (v * np.sqrt(w)) @ v.T


def _check_same_variables(p: GaussianDist, q: GaussianDist):
    if p.variables != q.variables:
        raise VariableMismatch(f"variable lists differ: {list(p.variables)} vs {list(q.variables)}")


def bures_distance(cov_p: np.ndarray, cov_q: np.ndarray) -> float:
    """Bures distance between PSD matrices.

    Evaluated as ``min_U ||S_p - S_q U||_F`` over orthogonal ``U`` (``S`` the
    symmetric square roots), with the optimal ``U`` taken from the polar
    decomposition of ``S_q S_p``. This equals
    ``sqrt(tr P + tr Q - 2 tr (Q^1/2 P Q^1/2)^1/2)`` but does not lose
    precision when the two matrices nearly coincide.
    """
    if np.array_equal(cov_p, cov_q):
        return 0.0
    # coordinates that are exactly deterministic in both contribute nothing
    keep = ~(np.all(cov_p == 0, axis=0) & np.all(cov_q == 0, axis=0))
    if not np.any(keep):
        return 0.0
    sp = psd_sqrt(cov_p[np.ix_(keep, keep)])
    sq = psd_sqrt(cov_q[np.ix_(keep, keep)])
    u, _, vt = np.linalg.svd(sq @ sp)
    rot = u @ vt
    return float(np.linalg.norm(sp - sq @ rot))


def wasserstein2(p: GaussianDist, q: GaussianDist) -> float:
    _check_same_variables(p, q)
    mean_term = float(np.sum((p.mean - q.mean) ** 2))
    return math.sqrt(mean_term + bures_distance(p.cov, q.cov) ** 2)


def _chol(cov: np.ndarray, which: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise SingularCovariance(f"covariance of {which} is singular; use a positive ridge") from None


def kl_divergence(p: GaussianDist, q: GaussianDist, ridge: float = 0.0) -> float:
    """KL(p || q) with ``ridge * I`` added to both covariances."""
    _check_same_variables(p, q)
    if ridge < 0:
        raise PerceptError("ridge must be non-negative")
    k = p.dim
    if p == q and ridge > 0:
        return 0.0
    eye = np.eye(k)
    sp = p.cov + ridge * eye
    sq = q.cov + ridge * eye
    lp = _chol(sp, "p")
    lq = _chol(sq, "q")
    a = np.linalg.solve(lq, lp)
    diff = np.linalg.solve(lq, q.mean - p.mean)
    logdet_p = 2.0 * float(np.sum(np.log(np.diag(lp))))
    logdet_q = 2.0 * float(np.sum(np.log(np.diag(lq))))
    val = 0.5 * (float(np.sum(a * a)) + float(diff @ diff) - k + logdet_q - logdet_p)
    return max(val, 0.0)


def density(dist: GaussianDist, x) -> float:
    """Normal density at ``x``; used as the representativeness score of ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != dist.dim:
        raise DimensionMismatch(f"point has {x.shape[0]} coordinates, distribution has {dist.dim}")
    chol = _chol(dist.cov, "distribution")
    z = np.linalg.solve(chol, x - dist.mean)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return math.exp(-0.5 * float(z @ z) - 0.5 * logdet - 0.5 * dist.dim * math.log(2 * math.pi))


def distance(p: GaussianDist, q: GaussianDist, metric: str = "w2", ridge: float | None = None) -> float:
    """Dispatch to the named metric; ``kl`` defaults to a ridge of 1e-9."""
    if metric == "w2":
        return wasserstein2(p, q)
    if metric == "kl":
        return kl_divergence(p, q, DEFAULT_KL_RIDGE if ridge is None else ridge)
    raise PerceptError(f"unknown metric {metric!r}; expected one of {METRICS}")
