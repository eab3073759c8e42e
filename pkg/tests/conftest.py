import numpy as np
import pytest
from scipy.stats import norm

from stormrisk import CovariateNhpp, NhppParams, RandomEffectsModel
from stormrisk.covariate import CovariateDensity
from stormrisk.simulate import SimDesign, simulate_replicate


@pytest.fixture(scope="session")
def normal_density():
    """Standard-normal covariate density on a wide fine grid."""
    return CovariateDensity.from_function(norm.pdf, -8.0, 8.0, 1024)


@pytest.fixture(scope="session")
def study_neg():
    """Simulation-study design, bounded-tail case: mu(s) = 2.5 s, sigma
    1.5, xi -0.2, threshold set for ~3 events per block."""
    return CovariateNhpp(mu0=0.0, mu1=2.5, sig0=float(np.log(1.5)), sig1=0.0, xi0=-0.2, xi1=0.0)


@pytest.fixture(scope="session")
def study_pos():
    return CovariateNhpp(mu0=0.0, mu1=2.5, sig0=float(np.log(1.5)), sig1=0.0, xi0=0.2, xi1=0.0)


@pytest.fixture(scope="session")
def study_threshold(study_neg):
    from stormrisk.simulate import calibrate_threshold

    return calibrate_threshold(study_neg, 3.0)


@pytest.fixture(scope="session")
def study_data(study_neg, study_threshold):
    """One 30-block replicate of the bounded-tail study design."""
    return simulate_replicate(
        SimDesign(model=study_neg, n_blocks=30, threshold=study_threshold, seed=2024), 0
    )


@pytest.fixture(scope="session")
def re_mu_model():
    """Latent-covariate version of the study design (location effect only)."""
    return RandomEffectsModel(
        mu0=0.0, mu1=2.5, sig0=float(np.log(1.5)), sig1=0.0, xi0=-0.2, xi1=0.0,
        effect_dims=("mu",),
    )


@pytest.fixture(scope="session")
def re_bivariate_model():
    """Location and scale effects with the case-study correlation 0.62."""
    return RandomEffectsModel(
        mu0=10.0, mu1=2.0, sig0=float(np.log(1.5)), sig1=0.3, xi0=-0.1, xi1=0.0,
        effect_dims=("mu", "sigma"),
        correlation=np.array([[1.0, 0.62], [0.62, 1.0]]),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
