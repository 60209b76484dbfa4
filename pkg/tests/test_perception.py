import itertools

import numpy as np
import pytest

from percept import (
    NULL,
    InterventionSet,
    apply_do,
    assemble_high_level,
    causal_perception,
    check_conjunction,
    classify_kind,
    enumerate_interventions,
    implied_distribution,
    load_fixture,
    make_intervention,
    marginal,
    mc_distance,
    observational_perception,
    pib_report,
)
from percept.errors import NoSharedVariables, OutOfRangeProbability, PerceptError
from percept.profiles import ReceiverProfile


@pytest.fixture(scope="module")
def r1():
    return load_fixture("r1_admissions")


@pytest.fixture(scope="module")
def r2():
    return load_fixture("r2_admissions")


@pytest.fixture(scope="module")
def grid():
    return enumerate_interventions({"Z": [0.0, 1.0]}, 1)


def test_observational_identical(r1):
    rep = observational_perception(r1, r1, "w2", 0.01)
    assert rep.aggregate_distance == 0.0 and not rep.perception and rep.kind == "none"


def test_observational_r1_r2(r1, r2):
    rep = observational_perception(r1, r2, "w2", 0.01)
    assert rep.aggregate_distance > 0.1 and rep.perception
    ca = implied_distribution(assemble_high_level(r1)).cov
    cb = implied_distribution(assemble_high_level(r2)).cov
    assert ca[0, 1] == pytest.approx(0.95) and cb[0, 1] == pytest.approx(0.15)
    mc = mc_distance(assemble_high_level(r1), assemble_high_level(r2), NULL, 10**6, 3)
    assert mc == pytest.approx(rep.aggregate_distance, rel=0.05)
    big = observational_perception(r1, r2, "w2", 100.0)
    assert not big.perception and big.interventions == rep.interventions


def test_causal_reduces_to_observational(r1, r2):
    a = causal_perception(r1, r2, InterventionSet(()), "w2", "max", 0.01)
    b = observational_perception(r1, r2, "w2", 0.01)
    assert a == b


def test_causal_unfaithful(r1, r2, grid):
    rep = causal_perception(r1, r2, grid, "w2", "max", 0.01)
    assert rep.kind == "unfaithful"
    null_d = rep.interventions[0].distance
    assert rep.aggregate_distance >= null_d
    spec = make_intervention({"Z": 1.0})
    x1a = marginal(implied_distribution(apply_do(assemble_high_level(r1), spec)), ["X1"]).mean[0]
    x1b = marginal(implied_distribution(apply_do(assemble_high_level(r2), spec)), ["X1"]).mean[0]
    assert abs(x1a - 0.95) < 1e-9 and abs(x1b - 0.15) < 1e-9
    mc = mc_distance(assemble_high_level(r1), assemble_high_level(r2), spec, 10**6, 17)
    assert mc == pytest.approx(rep.interventions[2].distance, rel=0.05)


def test_causal_inconsistent():
    a, b = load_fixture("r1_tutoring"), load_fixture("r2_online")
    iset = enumerate_interventions({"Z": [0.0, 1.0]}, 1)
    rep = causal_perception(a, b, iset, "w2", "max", 0.01)
    assert rep.kind == "inconsistent" and rep.aggregate_distance > 0


def test_agg_and_monotonicity(r1, r2):
    small = enumerate_interventions({"Z": [0.0]}, 1)
    large = enumerate_interventions({"Z": [0.0, 1.0, 2.0], "X2": [1.0]}, 2)
    mx = causal_perception(r1, r2, large, "w2", "max", 0.01)
    mean = causal_perception(r1, r2, large, "w2", "mean", 0.01)
    assert mx.aggregate_distance >= mean.aggregate_distance
    assert mean.aggregate_distance == pytest.approx(np.mean([x.distance for x in mean.interventions]))
    assert causal_perception(r1, r2, small, "w2", "max", 0.01).aggregate_distance <= mx.aggregate_distance
    flags = [causal_perception(r1, r2, large, "w2", "max", e).perception for e in (1e-6, 0.1, 1.0, 10.0)]
    assert flags == sorted(flags, reverse=True)


def test_identical_profiles_zero_everywhere(r1):
    iset = enumerate_interventions({"Z": [0.0, 1.0], "X1": [2.0], "X2": [-1.0]}, 3)
    rep = causal_perception(r1, r1, iset, "kl", "max", 0.01)
    assert all(x.distance == 0.0 for x in rep.interventions)
    rep = causal_perception(r1, r1, iset, "w2", "max", 0.01)
    assert all(x.distance == 0.0 for x in rep.interventions)


def test_classify_kind(r1, r2):
    assert classify_kind(r1, r2) == "unfaithful" == classify_kind(r2, r1)
    a, b = load_fixture("r1_tutoring"), load_fixture("r2_online")
    assert classify_kind(a, b) == "inconsistent" == classify_kind(b, a)
    assert classify_kind(r1, r1) == "none"
    noisy = r1.replace(id="noisy", noise={**r1.noise, "Y": (0.0, 2.0)})
    assert classify_kind(r1, noisy) == "noise-divergent"
    with pytest.raises(PerceptError):
        classify_kind(r1, r2, 0.0, 1.0)


def test_kind_independent_of_metric_and_epsilon(r1, r2, grid):
    kinds = {
        causal_perception(r1, r2, grid, m, agg, e).kind
        for m in ("w2", "kl")
        for agg in ("max", "mean")
        for e in (1e-6, 0.1, 5.0)
    }
    assert kinds == {"unfaithful"}


def test_errors(r1, grid):
    other = ReceiverProfile("other", ("Q",))
    with pytest.raises(NoSharedVariables):
        causal_perception(r1, other, grid, "w2", "max", 0.01)
    with pytest.raises(PerceptError):
        causal_perception(r1, r1, grid, "w2", "max", 0.0)
    with pytest.raises(PerceptError):
        causal_perception(r1, r1, grid, "w2", "median", 0.01)


def test_pib(r1, r2, grid):
    rows = pib_report(r1, [r1], grid, "w2", "max", 0.01)
    assert [(r.id, r.aggregate_distance, r.kind) for r in rows] == [("r1_admissions", 0.0, "none")]
    clone = r1.replace(id="clone")
    rows = pib_report(r1, [r2, clone], grid, "w2", "max", 0.01)
    assert [r.id for r in rows] == ["r2_admissions", "clone"]
    assert rows[1].aggregate_distance == 0.0
    assert pib_report(r1, [clone, r2], grid, "w2", "max", 0.01) == rows


def test_conjunction_examples():
    v = check_conjunction(0.10, 0.05, 0.90)
    assert v.violated and v.margin == pytest.approx(0.05)
    v = check_conjunction(0.05, 0.05, 0.90)
    assert not v.violated and v.margin == 0.0
    assert not check_conjunction(0.04, 0.05, 0.90).violated
    for bad in ((1.1, 0.5, 0.5), (0.5, -0.1, 0.5), (0.5, 0.5, float("nan"))):
        with pytest.raises(OutOfRangeProbability):
            check_conjunction(*bad)
