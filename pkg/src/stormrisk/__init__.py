"""Threshold extreme-value models with local non-stationarity and a
short-term reoccurrence risk measure."""

from . import errors
from .covariate import (
    CovariateDensity,
    CovariateNhpp,
    covariate_nll_per_block,
    covariate_nll_per_obs,
    fit_covariate,
    kde,
    return_level_covariate,
)
from .decluster import EventSet, TimeSeries, decluster, interarrival_pp, quantile_threshold
from .evt import (
    FitResult,
    NhppParams,
    ThresholdedData,
    fit_stationary,
    gev_cdf,
    gev_pdf,
    gev_quantile,
    integrated_intensity,
    nhpp_intensity,
    return_level_stationary,
    return_period_all_exceedances,
    stationary_nll,
)
from .random_effects import (
    McmcConfig,
    PosteriorSamples,
    Priors,
    RandomEffectsModel,
    RegionalModel,
    SiteData,
    block_return_level,
    fit_bayes,
    marginal_return_level,
    re_log_likelihood,
    regional_log_likelihood,
)
from .risk import (
    RiskCurve,
    RiskQuery,
    conditional_exceed_prob_cov,
    conditional_exceed_prob_re,
    risk_measure_cov,
    risk_measure_re,
    unconditional_exceed_prob_cov,
    unconditional_exceed_prob_re,
)
from .simulate import SimDesign, mc_risk_oracle, simulate_block, simulate_design

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
