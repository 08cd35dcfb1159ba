"""Distance covariance on metric and beta-pseudometric spaces for dependent data."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CenteredMatrix,
    CostCapExceeded,
    DcovEstimate,
    DeltaMatrix,
    DiscreteJointDistribution,
    DistanceMatrix,
    PairedSample,
    brute_force_dcov,
    dcov,
    delta_matrix,
    distance_matrix,
    double_center,
    hoeffding_component,
    vstat,
)
from .estimators import DistanceCovariance, IndependenceTest, SpectralNull  # noqa: E402
from .inference import (  # noqa: E402
    TestResult,
    block_bootstrap_test,
    permutation_test,
    spectral_test,
)
from .metric import (  # noqa: E402
    Space,
    check_weak_triangle,
    discrete,
    discrete_embedding,
    distance,
    euclidean,
    hilbert_l2,
    user_defined,
    with_beta,
)
from .processes import (  # noqa: E402
    AR1Latent,
    GaussianCopula,
    IIDDiscrete,
    IndependentProduct,
    MarkovPair,
    markov_beta_mixing,
    population_dcov,
    simulate,
)
from .spectrum import (  # noqa: E402
    empirical_spectrum,
    long_run_covariance,
    simulate_null,
    trace_identity_check,
)

__all__ = [
    "AR1Latent", "CenteredMatrix", "CostCapExceeded", "DcovEstimate", "DeltaMatrix",
    "DiscreteJointDistribution", "DistanceCovariance", "DistanceMatrix", "GaussianCopula",
    "IIDDiscrete", "IndependenceTest", "IndependentProduct", "MarkovPair", "PairedSample",
    "Space", "SpectralNull", "TestResult", "block_bootstrap_test", "brute_force_dcov",
    "check_weak_triangle", "dcov", "delta_matrix", "discrete", "discrete_embedding",
    "distance", "distance_matrix", "double_center", "empirical_spectrum", "euclidean",
    "hilbert_l2", "hoeffding_component", "long_run_covariance", "markov_beta_mixing",
    "permutation_test", "population_dcov", "simulate", "simulate_null", "spectral_test",
    "trace_identity_check", "user_defined", "vstat", "with_beta",
]
