"""Short-term reoccurrence risk after an extreme event.

Given that a season's maximum so far, at time t, equals the T-year level,
the risk measure is the ratio of the conditional to the unconditional
probability of exceeding the T*-year level in the remaining (t, 1] of the
season.  Observing a large maximum tilts the distribution of the latent
covariate / random effect towards values that make further extremes more
likely, so the ratio exceeds one exactly when the season-to-season
heterogeneity is real; with no heterogeneity it is identically one.

The conditioning event has probability zero, so the tilt is the density
ratio of the observed pre-t maximum: conditional weight
``g(z_T | state) * prior(state) / g(z_T)`` where ``g`` is the density of
the maximum of the first t-fraction of the season.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariate import CovariateDensity, CovariateNhpp, return_level_covariate
from .errors import BracketFailure, UnsupportedConditioningValue
from .evt import exceedance_rate, log_event_intensity
from .random_effects import (
    PosteriorSamples,
    RandomEffectsModel,
    effect_quadrature,
    marginal_return_level,
)


def default_t_star_grid(lo: float = 1.5, hi: float = 1000.0, n: int = 50) -> np.ndarray:
    return np.geomspace(lo, hi, n)


@dataclass
class RiskQuery:
    """Inputs of one risk-curve evaluation.

    Exactly one model family must be supplied: a covariate model with its
    covariate density (plus optionally the coefficient covariance for
    asymptotic bands), or a random-effects model (plus optionally posterior
    samples for credible bands).
    """

    t: float
    T: float
    t_star_grid: np.ndarray = field(default_factory=default_t_star_grid)
    covariate_model: CovariateNhpp | None = None
    covariate_density: CovariateDensity | None = None
    coef_cov: np.ndarray | None = None
    re_model: RandomEffectsModel | None = None
    posterior: PosteriorSamples | None = None
    site: int = 0
    band_draws: int = 500
    band_level: float = 0.95
    gh_nodes: int = 32
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise ValueError("event time t must lie strictly inside (0, 1)")
        if not self.T > 1.0:
            raise ValueError("conditioning return period must exceed 1")
        self.t_star_grid = np.asarray(self.t_star_grid, dtype=float)
        if np.any(np.diff(self.t_star_grid) <= 0):
            raise ValueError("T* grid must be sorted ascending")
        if np.any(self.t_star_grid <= 1.0):
            raise ValueError("T* values must exceed 1")


@dataclass
class RiskCurve:
    """Risk measure over a T* grid, with the raw probabilities kept so the
    ratio is reproducible, and an explicit flag for 0/0 grid points."""

    t: float
    T: float
    t_star: np.ndarray
    ratio: np.ndarray
    numerator: np.ndarray
    denominator: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    undefined: np.ndarray | None = None

    def __post_init__(self):
        if self.undefined is None:
            self.undefined = ~np.isfinite(self.ratio)


# ---------------------------------------------------------------------------
# Observed-covariate form


def unconditional_exceed_prob_cov(
    z: float, t: float, model: CovariateNhpp, density: CovariateDensity
) -> float:
    """P(maximum over (t, 1] exceeds z), covariate integrated out."""
    g = density.grid
    rate = exceedance_rate(z, model.mu(g), model.sigma(g), model.xi(g))
    return 1.0 - density.expectation(np.exp(-(1.0 - t) * rate))


def _conditional_weights_cov(z_T, t, model: CovariateNhpp, density: CovariateDensity):
    g = density.grid
    mu, sigma, xi = model.mu(g), model.sigma(g), model.xi(g)
    rate = exceedance_rate(z_T, mu, sigma, xi)
    with np.errstate(over="ignore", invalid="ignore"):
        dens = t * np.exp(log_event_intensity(z_T, mu, sigma, xi) - t * rate)
    dens = np.where(np.isfinite(dens), dens, 0.0)
    w = dens * density.quad_weights
    total = w.sum()
    if not total > 0.0:
        raise UnsupportedConditioningValue(
            f"conditioning level {z_T!r} has zero density under every covariate value"
        )
    return w / total


def conditional_exceed_prob_cov(
    z_star: float, z_T: float, t: float, model: CovariateNhpp, density: CovariateDensity
) -> float:
    """P(maximum over (t, 1] exceeds z_star | maximum up to t equals z_T)."""
    w = _conditional_weights_cov(z_T, t, model, density)
    g = density.grid
    rate = exceedance_rate(z_star, model.mu(g), model.sigma(g), model.xi(g))
    return float(w @ (1.0 - np.exp(-(1.0 - t) * rate)))


def _curve_cov(q: RiskQuery, model: CovariateNhpp, density: CovariateDensity):
    z_T = return_level_covariate(q.T, model, density)
    num = np.empty(q.t_star_grid.size)
    den = np.empty(q.t_star_grid.size)
    for i, t_star in enumerate(q.t_star_grid):
        z_star = return_level_covariate(t_star, model, density)
        num[i] = conditional_exceed_prob_cov(z_star, z_T, q.t, model, density)
        den[i] = unconditional_exceed_prob_cov(z_star, q.t, model, density)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), np.nan)
    return ratio, num, den


def risk_measure_cov(q: RiskQuery) -> RiskCurve:
    """Risk curve under the observed-covariate model, with pointwise bands
    from resampling the fitted coefficients (when a covariance is given)."""
    if q.covariate_model is None or q.covariate_density is None:
        raise ValueError("query lacks a covariate model/density")
    model, density = q.covariate_model, q.covariate_density
    ratio, num, den = _curve_cov(q, model, density)

    lower = upper = None
    if q.coef_cov is not None and q.band_draws > 0:
        rng = np.random.Generator(np.random.Philox(key=q.seed))
        draws = rng.multivariate_normal(model.coefficients(), q.coef_cov, size=q.band_draws)
        curves = np.full((q.band_draws, q.t_star_grid.size), np.nan)
        for b in range(q.band_draws):
            try:
                curves[b] = _curve_cov(q, CovariateNhpp.from_coefficients(draws[b]), density)[0]
            except (BracketFailure, UnsupportedConditioningValue):
                continue
        lower, upper = _band_percentiles(curves, q.band_level)
    return RiskCurve(
        t=q.t, T=q.T, t_star=q.t_star_grid, ratio=ratio, numerator=num, denominator=den,
        lower=lower, upper=upper,
    )


# ---------------------------------------------------------------------------
# Random-effects form


def unconditional_exceed_prob_re(
    z: float, t: float, model: RandomEffectsModel, n_nodes: int = 32
) -> float:
    """P(maximum over (t, 1] exceeds z), block effects integrated out."""
    nodes, weights = effect_quadrature(model, n_nodes)
    mu, sigma, xi = model.param_arrays(nodes)
    rate = exceedance_rate(z, mu, sigma, xi)
    return 1.0 - float(weights @ np.exp(-(1.0 - t) * rate))


def _conditional_weights_re(z_T, t, model: RandomEffectsModel, n_nodes: int):
    nodes, weights = effect_quadrature(model, n_nodes)
    mu, sigma, xi = model.param_arrays(nodes)
    rate = exceedance_rate(z_T, mu, sigma, xi)
    with np.errstate(over="ignore", invalid="ignore"):
        dens = t * np.exp(log_event_intensity(z_T, mu, sigma, xi) - t * rate)
    dens = np.where(np.isfinite(dens), dens, 0.0)
    w = dens * weights
    total = w.sum()
    if not total > 0.0:
        raise UnsupportedConditioningValue(
            f"conditioning level {z_T!r} has zero density under every effect value"
        )
    return nodes, w / total


def conditional_exceed_prob_re(
    z_star: float, z_T: float, t: float, model: RandomEffectsModel, n_nodes: int = 32
) -> float:
    """P(maximum over (t, 1] exceeds z_star | maximum up to t equals z_T),
    with the effect distribution reweighted by the conditioning density."""
    nodes, w = _conditional_weights_re(z_T, t, model, n_nodes)
    mu, sigma, xi = model.param_arrays(nodes)
    rate = exceedance_rate(z_star, mu, sigma, xi)
    return float(w @ (1.0 - np.exp(-(1.0 - t) * rate)))


def _curve_re(q: RiskQuery, model: RandomEffectsModel):
    z_T = marginal_return_level(q.T, model, q.gh_nodes)
    num = np.empty(q.t_star_grid.size)
    den = np.empty(q.t_star_grid.size)
    for i, t_star in enumerate(q.t_star_grid):
        z_star = marginal_return_level(t_star, model, q.gh_nodes)
        num[i] = conditional_exceed_prob_re(z_star, z_T, q.t, model, q.gh_nodes)
        den[i] = unconditional_exceed_prob_re(z_star, q.t, model, q.gh_nodes)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), np.nan)
    return ratio, num, den


def risk_measure_re(q: RiskQuery) -> RiskCurve:
    """Risk curve under the random-effects model; bands evaluate the curve
    per posterior draw and take percentiles (when samples are given)."""
    if q.re_model is None and q.posterior is None:
        raise ValueError("query lacks a random-effects model or posterior")
    model = q.re_model
    if model is None:
        model = q.posterior.mean_model()[0].site_model(q.site)
    ratio, num, den = _curve_re(q, model)

    lower = upper = None
    if q.posterior is not None and q.band_draws > 0:
        idx = np.unique(np.linspace(0, q.posterior.n_draws - 1, q.band_draws).astype(int))
        curves = np.full((idx.size, q.t_star_grid.size), np.nan)
        for b, i in enumerate(idx):
            try:
                curves[b] = _curve_re(q, q.posterior.site_model_at(i, q.site))[0]
            except (BracketFailure, UnsupportedConditioningValue):
                continue
        lower, upper = _band_percentiles(curves, q.band_level)
    return RiskCurve(
        t=q.t, T=q.T, t_star=q.t_star_grid, ratio=ratio, numerator=num, denominator=den,
        lower=lower, upper=upper,
    )


def _band_percentiles(curves: np.ndarray, level: float):
    ok = np.isfinite(curves).any(axis=0)
    a = 100.0 * (1.0 - level) / 2.0
    lower = np.full(curves.shape[1], np.nan)
    upper = np.full(curves.shape[1], np.nan)
    with np.errstate(invalid="ignore"):
        lower[ok] = np.nanpercentile(curves[:, ok], a, axis=0)
        upper[ok] = np.nanpercentile(curves[:, ok], 100.0 - a, axis=0)
    return lower, upper
