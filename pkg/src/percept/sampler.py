"""Seeded ancestral sampling, used as an independent check on the analytic results.

Random numbers come from PCG64. Each variable gets its own substream for
each block of ``BLOCK_ROWS`` rows, derived as
``SeedSequence(seed, spawn_key=(variable_index, block_index))``. Uniforms are
turned into standard normals with the polar Box-Muller transform (see
:func:`standard_normals`). Sharding rows across workers never changes
which substream produces a given row, so the output is bit-identical for any
worker count.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from percept.errors import NoSharedVariables, PerceptError, TooFewRows
from percept.gaussian import GaussianDist, distance
from percept.interventions import InterventionSpec, apply_do
from percept.scm import LinearScm, topological_order

BLOCK_ROWS = 1 << 16


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    variables: tuple[str, ...]
    rows: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.variables.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.variables)
        for row in self.rows.tolist():
            w.writerow([repr(v) for v in row])
        return buf.getvalue()


def standard_normals(seed: int, stream: int, block: int, size: int) -> np.ndarray:
    """``size`` N(0, 1) draws from the substream ``(stream, block)`` of ``seed``.

    Marsaglia's polar form of Box-Muller: uniform pairs in the square are kept
    when they fall strictly inside the unit disc, and each kept pair yields two
    normals. The rejection loop draws in fixed-size batches from the one
    substream, so the result depends only on the arguments.
    """
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, block))))
    pairs = (size + 1) // 2
    batch = pairs + pairs // 3 + 64
    kept, have = [], 0
    while have < pairs:
        uv = gen.random((2, batch))
        uv *= 2.0
        uv -= 1.0
        s = uv[0] * uv[0]
        s += uv[1] * uv[1]
        ok = s < 1.0
        ok &= s > 0.0
        uv = uv[:, ok]
        s = s[ok]
        factor = np.log(s)
        factor *= -2.0
        factor /= s
        np.sqrt(factor, out=factor)
        uv *= factor
        kept.append(uv)
        have += int(s.size)
    uv = kept[0] if len(kept) == 1 else np.concatenate(kept, axis=1)
    z = uv[:, :pairs].ravel()
    return z[:size]


def _sample_block(scm: LinearScm, order, seed: int, block: int, size: int) -> np.ndarray:
    nodes = scm.nodes
    idx = {n: i for i, n in enumerate(nodes)}
    out = np.empty((size, len(nodes)), order="F")
    for n in order:
        j = idx[n]
        if scm.noise_var[n] == 0:
            col = np.full(size, scm.noise_mean[n])
        else:
            col = scm.noise_mean[n] + np.sqrt(scm.noise_var[n]) * standard_normals(seed, j, block, size)
        for par in scm.graph.parents(n):
            col = col + scm.coefficient(par, n) * out[:, idx[par]]
        out[:, j] = col
    return out


def sample(scm: LinearScm, n: int, seed: int, workers: int = 1) -> SampleMatrix:
    if n < 1:
        raise PerceptError("n must be >= 1")
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    order = topological_order(scm.graph)
    blocks = [(b, min(BLOCK_ROWS, n - b * BLOCK_ROWS)) for b in range((n + BLOCK_ROWS - 1) // BLOCK_ROWS)]

    def run(item):
        return _sample_block(scm, order, seed, *item)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return SampleMatrix(scm.nodes, np.vstack(parts), seed)


def empirical_moments(samples: SampleMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Column means and the unbiased covariance."""
    if samples.n < 2:
        raise TooFewRows("need at least two rows")
    mean = samples.rows.mean(axis=0)
    centered = samples.rows - mean
    cov = centered.T @ centered / (samples.n - 1)
    return mean, 0.5 * (cov + cov.T)


def empirical_gaussian(samples: SampleMatrix, variables=None) -> GaussianDist:
    variables = list(samples.variables if variables is None else variables)
    ix = [samples.variables.index(v) for v in variables]
    mean, cov = empirical_moments(samples)
    return GaussianDist(tuple(variables), mean[ix], cov[np.ix_(ix, ix)])


def mc_distance(
    scm_a: LinearScm,
    scm_b: LinearScm,
    spec: InterventionSpec,
    n: int,
    seed: int,
    metric: str = "w2",
    ridge: float | None = None,
    workers: int = 1,
) -> float:
    """Monte Carlo estimate of the per-intervention distance on shared variables.

    The two models are sampled with ``seed`` and ``seed + 1``.
    """
    shared = [v for v in scm_a.nodes if v in scm_b.nodes]
    if not shared:
        raise NoSharedVariables("models share no variables")
    sa = sample(apply_do(scm_a, spec), n, seed, workers)
    sb = sample(apply_do(scm_b, spec), n, seed + 1, workers)
    return distance(empirical_gaussian(sa, shared), empirical_gaussian(sb, shared), metric, ridge)
