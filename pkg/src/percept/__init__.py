"""Causal perception analysis for linear-Gaussian receiver models."""

from importlib import resources

from percept.abstraction import (
    ConsistencyReport,
    OmegaMapping,
    check_exact_transformation,
    omega_equal_split,
    tau_pushforward,
)
from percept.errors import PerceptError
from percept.gaussian import (
    GaussianDist,
    density,
    distance,
    implied_distribution,
    kl_divergence,
    marginal,
    wasserstein2,
)
from percept.interventions import (
    NULL,
    DistributionPoset,
    InterventionSet,
    InterventionSpec,
    apply_do,
    enumerate_interventions,
    implied_poset,
    leq,
    make_intervention,
)
from percept.markov import verify_faithfulness, verify_markov
from percept.perception import (
    FallacyVerdict,
    PerceptionReport,
    causal_perception,
    check_conjunction,
    classify_kind,
    observational_perception,
    pib_report,
)
from percept.profiles import (
    ReceiverProfile,
    assemble_high_level,
    assemble_low_level,
    parse_grid,
    parse_profile,
    serialize_profile,
)
from percept.report import render_report
from percept.sampler import SampleMatrix, empirical_moments, mc_distance, sample
from percept.scm import (
    CausalGraph,
    FactorizationTerms,
    LinearScm,
    build_graph,
    d_separated,
    factorize,
    topological_order,
)


def fixture_bytes(name: str) -> bytes:
    """Raw bytes of a bundled example file, e.g. ``fixture_bytes("r1_admissions")``."""
    if not name.endswith(".json"):
        name += ".json"
    return resources.files("percept.fixtures").joinpath(name).read_bytes()


def load_fixture(name: str) -> ReceiverProfile:
    return parse_profile(fixture_bytes(name))
