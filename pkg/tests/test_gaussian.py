import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from percept import (
    GaussianDist,
    apply_do,
    build_graph,
    density,
    implied_distribution,
    kl_divergence,
    make_intervention,
    marginal,
    wasserstein2,
)
from percept.errors import DimensionMismatch, SingularCovariance, UnknownVariable, VariableMismatch
from percept.sampler import empirical_moments, sample
from percept.scm import LinearScm

from _helpers import g_r1_scm, random_cov, random_scm, trace_w2


def uni(mu, var):
    return GaussianDist(("x",), [mu], [[var]])


def test_single_node_identity():
    m = LinearScm(build_graph(["A"], []), {}, {"A": 0.0}, {"A": 1.0})
    d = implied_distribution(m)
    assert d.mean.tolist() == [0.0] and d.cov.tolist() == [[1.0]]


def test_two_node_chain_against_sampler():
    m = LinearScm(build_graph("AB", [("A", "B")]), {("A", "B"): 0.5}, {"A": 0, "B": 0}, {"A": 1, "B": 1})
    d = implied_distribution(m)
    np.testing.assert_allclose(d.mean, [0, 0], atol=0)
    np.testing.assert_allclose(d.cov, [[1.0, 0.5], [0.5, 1.25]], atol=1e-15)
    n = 10**6
    mean, cov = empirical_moments(sample(m, n, 2024))
    se_mean = np.sqrt(np.diag(d.cov) / n)
    assert np.all(np.abs(mean - d.mean) <= 3 * se_mean)
    se_cov = np.sqrt((np.outer(np.diag(d.cov), np.diag(d.cov)) + d.cov**2) / (n - 1))
    assert np.all(np.abs(cov - d.cov) <= 3 * se_cov)


def test_g_r1_do_z():
    d = implied_distribution(apply_do(g_r1_scm(), make_intervention({"Z": 1.0})))
    assert abs(marginal(d, ["X1"]).mean[0] - 0.95) < 1e-12


def test_marginal():
    d = implied_distribution(g_r1_scm())
    assert marginal(d, d.variables) == d
    ind = GaussianDist(("a", "b"), [1.0, 2.0], [[3.0, 0.0], [0.0, 4.0]])
    m = marginal(ind, ["b"])
    assert m.mean.tolist() == [2.0] and m.cov.tolist() == [[4.0]]
    assert marginal(ind, ["b", "a"]).mean.tolist() == [2.0, 1.0]
    with pytest.raises(UnknownVariable):
        marginal(ind, ["c"])


def test_w2_closed_forms():
    assert wasserstein2(uni(0, 1), uni(0, 1)) == 0.0
    assert abs(wasserstein2(uni(0, 1), uni(1, 1)) - 1.0) < 1e-12
    assert abs(wasserstein2(uni(0, 0), uni(0, 1)) - 1.0) < 1e-12
    assert abs(wasserstein2(uni(2, 4), uni(-1, 9)) - math.hypot(3, 1)) < 1e-12
    with pytest.raises(VariableMismatch):
        wasserstein2(uni(0, 1), GaussianDist(("y",), [0], [[1]]))


def test_w2_matches_trace_formula():
    rng = np.random.default_rng(1)
    for _ in range(200):
        k = int(rng.integers(1, 6))
        cp, cq = random_cov(rng, k) + 0.1 * np.eye(k), random_cov(rng, k) + 0.1 * np.eye(k)
        mp, mq = rng.normal(size=k), rng.normal(size=k)
        names = tuple(f"v{i}" for i in range(k))
        got = wasserstein2(GaussianDist(names, mp, cp), GaussianDist(names, mq, cq))
        assert got == pytest.approx(trace_w2(mp, cp, mq, cq), rel=1e-7, abs=1e-7)


def test_w2_nearly_equal_covariances_stay_accurate():
    rng = np.random.default_rng(4)
    c = random_cov(rng, 4)
    names = tuple("abcd")
    p = GaussianDist(names, np.zeros(4), c)
    q = GaussianDist(names, np.zeros(4), (c + 1e-14 * np.eye(4) + (c + 1e-14 * np.eye(4)).T) / 2)
    assert wasserstein2(p, q) < 1e-12


def test_w2_degenerate_does_not_error():
    rng = np.random.default_rng(5)
    for _ in range(100):
        k = int(rng.integers(1, 6))
        names = tuple(f"v{i}" for i in range(k))
        p = GaussianDist(names, rng.normal(size=k), random_cov(rng, k, rank=int(rng.integers(0, k + 1))))
        q = GaussianDist(names, rng.normal(size=k), random_cov(rng, k, rank=int(rng.integers(0, k + 1))))
        d = wasserstein2(p, q)
        assert math.isfinite(d) and d >= 0
        assert d == pytest.approx(trace_w2(p.mean, p.cov, q.mean, q.cov), abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_w2_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    names = tuple(f"v{i}" for i in range(k))
    p, q, r = (
        GaussianDist(names, rng.normal(size=k), random_cov(rng, k, rank=int(rng.integers(0, k + 1))))
        for _ in range(3)
    )
    assert abs(wasserstein2(p, q) - wasserstein2(q, p)) <= 1e-8
    assert wasserstein2(p, r) <= wasserstein2(p, q) + wasserstein2(q, r) + 1e-8


def test_kl_closed_forms():
    assert kl_divergence(uni(0, 1), uni(0, 1)) == 0.0
    assert abs(kl_divergence(uni(0, 1), uni(1, 1)) - 0.5) < 1e-12
    # 0.5 * (s1/s2 + (m2-m1)^2/s2 - 1 + ln(s2/s1))
    assert kl_divergence(uni(1, 2), uni(0, 3)) == pytest.approx(0.5 * (2 / 3 + 1 / 3 - 1 + math.log(1.5)), abs=1e-12)
    with pytest.raises(SingularCovariance):
        kl_divergence(uni(0, 0), uni(0, 1), ridge=0.0)
    assert math.isfinite(kl_divergence(uni(0, 0), uni(0, 1), ridge=1e-9))


def test_kl_matches_direct_formula():
    rng = np.random.default_rng(9)
    for _ in range(100):
        k = int(rng.integers(1, 5))
        names = tuple(f"v{i}" for i in range(k))
        cp, cq = random_cov(rng, k) + 0.2 * np.eye(k), random_cov(rng, k) + 0.2 * np.eye(k)
        mp, mq = rng.normal(size=k), rng.normal(size=k)
        qi = np.linalg.inv(cq)
        diff = mq - mp
        expect = 0.5 * (np.trace(qi @ cp) + diff @ qi @ diff - k + np.log(np.linalg.det(cq) / np.linalg.det(cp)))
        got = kl_divergence(GaussianDist(names, mp, cp), GaussianDist(names, mq, cq))
        assert got == pytest.approx(expect, rel=1e-9, abs=1e-9)
        assert got > 0
        assert kl_divergence(GaussianDist(names, mp, cp), GaussianDist(names, mp, cp)) <= 1e-9


def test_density():
    assert density(uni(0, 1), [0.0]) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)
    rng = np.random.default_rng(6)
    c = random_cov(rng, 3) + np.eye(3)
    mu = rng.normal(size=3)
    d = GaussianDist(("a", "b", "c"), mu, c)
    peak = density(d, mu)
    for _ in range(50):
        x = mu + rng.normal(size=3)
        val = density(d, x)
        assert val == pytest.approx(multivariate_normal(mu, c).pdf(x), rel=1e-10)
        assert val <= peak
        assert abs(density(d, x + 1e-9) - val) < 1e-8
    with pytest.raises(DimensionMismatch):
        density(d, [0.0])
    with pytest.raises(SingularCovariance):
        density(uni(0, 0), [0.0])


def test_noise_scaling():
    rng = np.random.default_rng(8)
    for _ in range(20):
        m = random_scm(rng)
        c = float(rng.uniform(0.1, 5))
        scaled = LinearScm(m.graph, m.coefficients, m.noise_mean, {k: c * v for k, v in m.noise_var.items()})
        a, b = implied_distribution(m), implied_distribution(scaled)
        np.testing.assert_allclose(b.cov, c * a.cov, rtol=1e-12, atol=1e-12)
        np.testing.assert_array_equal(b.mean, a.mean)


def test_gaussian_dist_invariants():
    with pytest.raises(Exception):
        GaussianDist(("a", "b"), [0, 0], [[1, 0.5], [0.4, 1]])
    with pytest.raises(Exception):
        GaussianDist(("a",), [0], [[-1.0]])
    GaussianDist(("a",), [0], [[-1e-12]])
