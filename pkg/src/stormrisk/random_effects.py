"""Latent block effects in the threshold process, fitted by adaptive MCMC.

Block-constant effects with zero mean and unit variance enter the
parameters linearly (log-linearly for the scale):
``mu_i = mu0 + mu1*r_mu_i``, ``log sigma_i = sig0 + sig1*r_sig_i``,
``xi_i = xi0 + xi1*r_xi_i``; the included effects are jointly multivariate
normal with a free correlation matrix.  A regional variant shares slopes,
effects and correlation across sites while keeping site-specific
intercepts and thresholds.

Inference is component-wise Gaussian random-walk Metropolis-Hastings.
Each scalar proposal scale is tuned during burn-in by Robbins-Monro steps
towards a 0.44 acceptance rate (the scalar-update optimum); correlations
are proposed on the atanh scale with positive-definiteness rejection;
adaptation freezes after burn-in so the recorded chain is Markov.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .decluster import EventSet
from .errors import ChainStuck, PriorMismatch
from .evt import (
    NhppParams,
    exceedance_rate,
    log_event_intensity,
    return_level_stationary,
)
from .optimize import find_increasing_root

EFFECT_ORDER = ("mu", "sigma", "xi")


def _as_correlation(corr, k: int) -> np.ndarray:
    if corr is None:
        return np.eye(k)
    corr = np.asarray(corr, dtype=float)
    if corr.shape != (k, k):
        raise ValueError(f"correlation must be {k}x{k}")
    if not np.allclose(corr, corr.T) or not np.allclose(np.diag(corr), 1.0):
        raise ValueError("correlation must be symmetric with unit diagonal")
    np.linalg.cholesky(corr)  # raises if not positive definite
    return corr


def _check_dims(effect_dims) -> tuple[str, ...]:
    dims = tuple(effect_dims)
    if not dims or any(d not in EFFECT_ORDER for d in dims):
        raise ValueError(f"effect_dims must be a non-empty subset of {EFFECT_ORDER}")
    return tuple(d for d in EFFECT_ORDER if d in dims)


@dataclass(frozen=True)
class RandomEffectsModel:
    """Single-site coefficients plus the law of the block effects.

    Slopes for dimensions outside ``effect_dims`` must be zero.
    """

    mu0: float
    mu1: float
    sig0: float
    sig1: float
    xi0: float
    xi1: float
    effect_dims: tuple[str, ...] = ("mu", "sigma")
    correlation: np.ndarray | None = None

    def __post_init__(self):
        dims = _check_dims(self.effect_dims)
        object.__setattr__(self, "effect_dims", dims)
        object.__setattr__(self, "correlation", _as_correlation(self.correlation, len(dims)))
        for name, slope in (("mu", self.mu1), ("sigma", self.sig1), ("xi", self.xi1)):
            if name not in dims and slope != 0.0:
                raise ValueError(f"slope for excluded dimension {name!r} must be 0")

    @property
    def k(self) -> int:
        return len(self.effect_dims)

    def _expand(self, effects: np.ndarray) -> dict:
        effects = np.atleast_2d(np.asarray(effects, dtype=float))
        full = {d: np.zeros(effects.shape[0]) for d in EFFECT_ORDER}
        for j, d in enumerate(self.effect_dims):
            full[d] = effects[:, j]
        return full

    def param_arrays(self, effects: np.ndarray):
        """(mu, sigma, xi) per row of ``effects`` (shape (n, k))."""
        r = self._expand(effects)
        mu = self.mu0 + self.mu1 * r["mu"]
        sigma = np.exp(self.sig0 + self.sig1 * r["sigma"])
        xi = self.xi0 + self.xi1 * r["xi"]
        return mu, sigma, xi

    def params_at(self, effects) -> NhppParams:
        mu, sigma, xi = self.param_arrays(np.atleast_2d(effects))
        return NhppParams(mu=float(mu[0]), sigma=float(sigma[0]), xi=float(xi[0]))


@dataclass(frozen=True)
class RegionalModel:
    """Shared slopes, effects and correlation; site-specific intercepts.

    ``intercepts`` has one (mu0, sig0, xi0) row per site; ``thresholds``
    one threshold per site.
    """

    intercepts: np.ndarray
    mu1: float
    sig1: float
    xi1: float
    thresholds: np.ndarray
    effect_dims: tuple[str, ...] = ("mu", "sigma")
    correlation: np.ndarray | None = None

    def __post_init__(self):
        dims = _check_dims(self.effect_dims)
        object.__setattr__(self, "effect_dims", dims)
        object.__setattr__(self, "intercepts", np.atleast_2d(np.asarray(self.intercepts, float)))
        object.__setattr__(self, "thresholds", np.atleast_1d(np.asarray(self.thresholds, float)))
        if self.intercepts.shape != (self.n_sites, 3):
            raise ValueError("intercepts must have shape (n_sites, 3)")
        object.__setattr__(self, "correlation", _as_correlation(self.correlation, len(dims)))
        for name, slope in (("mu", self.mu1), ("sigma", self.sig1), ("xi", self.xi1)):
            if name not in dims and slope != 0.0:
                raise ValueError(f"slope for excluded dimension {name!r} must be 0")

    @property
    def n_sites(self) -> int:
        return len(self.thresholds)

    @property
    def k(self) -> int:
        return len(self.effect_dims)

    def site_model(self, d: int) -> RandomEffectsModel:
        mu0, sig0, xi0 = self.intercepts[d]
        return RandomEffectsModel(
            mu0=float(mu0),
            mu1=self.mu1,
            sig0=float(sig0),
            sig1=self.sig1,
            xi0=float(xi0),
            xi1=self.xi1,
            effect_dims=self.effect_dims,
            correlation=self.correlation,
        )

    @classmethod
    def from_single(cls, model: RandomEffectsModel, threshold: float) -> "RegionalModel":
        return cls(
            intercepts=np.array([[model.mu0, model.sig0, model.xi0]]),
            mu1=model.mu1,
            sig1=model.sig1,
            xi1=model.xi1,
            thresholds=np.array([threshold]),
            effect_dims=model.effect_dims,
            correlation=model.correlation,
        )


@dataclass
class SiteData:
    """Exceedances of one site, indexed by block."""

    magnitudes: np.ndarray
    block_index: np.ndarray
    n_blocks: int
    threshold: float
    recorded: np.ndarray | None = None

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=float)
        self.block_index = np.asarray(self.block_index, dtype=int)
        if self.recorded is None:
            self.recorded = np.ones(self.n_blocks, dtype=bool)
        else:
            self.recorded = np.asarray(self.recorded, dtype=bool)
        if self.magnitudes.size and not np.all(self.magnitudes > self.threshold):
            raise ValueError("exceedances must lie above the site threshold")
        if self.magnitudes.size and (
            self.block_index.min() < 0 or self.block_index.max() >= self.n_blocks
        ):
            raise ValueError("block_index out of range")

    @classmethod
    def from_event_set(cls, es: EventSet) -> "SiteData":
        return cls(
            magnitudes=es.magnitudes,
            block_index=es.block_index,
            n_blocks=es.n_blocks,
            threshold=es.threshold,
        )


def as_site_data(data) -> SiteData:
    if isinstance(data, SiteData):
        return data
    if isinstance(data, EventSet):
        return SiteData.from_event_set(data)
    raise TypeError(f"cannot interpret {type(data).__name__} as site data")


def _mvn_row_logpdf(effects: np.ndarray, correlation: np.ndarray) -> np.ndarray:
    """Log standard-MVN density with the given correlation, per row."""
    k = correlation.shape[0]
    chol = np.linalg.cholesky(correlation)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    sol = np.linalg.solve(chol, effects.T)
    quad = np.sum(sol**2, axis=0)
    return -0.5 * (k * np.log(2.0 * np.pi) + logdet + quad)


def _site_block_terms(site: SiteData, mu_b, sig_b, xi_b) -> np.ndarray:
    """Per-block data log likelihood: -Lambda(u) plus event intensity terms.

    Blocks where the site was not recording contribute nothing.  Rows are
    -inf wherever an observed event falls outside the support.
    """
    rate_u = exceedance_rate(site.threshold, mu_b, sig_b, xi_b)
    exponent = np.where(site.recorded, rate_u, 0.0)
    bi = site.block_index
    ev = log_event_intensity(site.magnitudes, mu_b[bi], sig_b[bi], xi_b[bi])
    ev_sum = np.bincount(bi, weights=ev, minlength=site.n_blocks)
    with np.errstate(invalid="ignore"):
        return -exponent + ev_sum


def re_log_likelihood(data, model: RandomEffectsModel, effects: np.ndarray) -> float:
    """Log likelihood of a single site including the effect density factor.

    ``effects`` has one row per block (columns follow ``model.effect_dims``).
    Returns -inf on any support violation.
    """
    site = as_site_data(data)
    effects = np.asarray(effects, dtype=float).reshape(site.n_blocks, model.k)
    mu_b, sig_b, xi_b = model.param_arrays(effects)
    terms = _site_block_terms(site, mu_b, sig_b, xi_b)
    total = terms.sum() + _mvn_row_logpdf(effects, model.correlation).sum()
    return float(total) if np.isfinite(total) else -np.inf


def regional_log_likelihood(sites, model: RegionalModel, effects: np.ndarray) -> float:
    """Log likelihood over sites sharing one effect vector per block.

    Data terms add over sites; the effect density enters once per block.
    """
    sites = [as_site_data(s) for s in sites]
    if len(sites) != model.n_sites:
        raise ValueError("number of site datasets must match the model")
    n_blocks = sites[0].n_blocks
    if any(s.n_blocks != n_blocks for s in sites):
        raise ValueError("all sites must share the same block structure")
    effects = np.asarray(effects, dtype=float).reshape(n_blocks, model.k)
    total = _mvn_row_logpdf(effects, model.correlation).sum()
    for d, site in enumerate(sites):
        sm = model.site_model(d)
        mu_b, sig_b, xi_b = sm.param_arrays(effects)
        total += _site_block_terms(site, mu_b, sig_b, xi_b).sum()
    return float(total) if np.isfinite(total) else -np.inf


def effect_quadrature(model: RandomEffectsModel, n_nodes: int = 32):
    """Gauss-Hermite nodes in effect space and weights against phi(r; Sigma).

    Tensor-product rule after Cholesky whitening, so
    ``integral f(r) phi(r; Sigma) dr ~= weights @ f(nodes)``.
    """
    x, w = np.polynomial.hermite.hermgauss(n_nodes)
    x = x * np.sqrt(2.0)
    w = w / np.sqrt(np.pi)
    k = model.k
    if k == 1:
        nodes = x[:, None]
        weights = w
    else:
        mesh = np.meshgrid(*([x] * k), indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=1)
        wmesh = np.meshgrid(*([w] * k), indexing="ij")
        weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
    chol = np.linalg.cholesky(model.correlation)
    return nodes @ chol.T, weights


def block_return_level(T: float, model: RandomEffectsModel, effect) -> float:
    """Return level of one block given its effect estimate (closed form)."""
    return return_level_stationary(T, model.params_at(np.asarray(effect, float)))


def marginal_annual_max_cdf(z: float, model: RandomEffectsModel, n_nodes: int = 32) -> float:
    """P(block maximum <= z) with the effects integrated out."""
    nodes, weights = effect_quadrature(model, n_nodes)
    mu, sigma, xi = model.param_arrays(nodes)
    rate = exceedance_rate(z, mu, sigma, xi)
    return float(weights @ np.exp(-rate))


def marginal_return_level(T: float, model: RandomEffectsModel, n_nodes: int = 32) -> float:
    """Cross-block return level: root of the effect-integrated CDF at 1 - 1/T."""
    if not T > 1:
        raise ValueError("return period must exceed 1 block")
    target = 1.0 - 1.0 / T
    centre = model.params_at(np.zeros(model.k))
    z0 = return_level_stationary(T, centre)
    return find_increasing_root(
        lambda z: marginal_annual_max_cdf(z, model, n_nodes) - target, z0, centre.sigma
    )


# ---------------------------------------------------------------------------
# Bayesian fit


@dataclass
class Priors:
    """Weakly informative priors for the coefficient blocks.

    Location coefficients get Normal(0, (loc_sd)^2) with ``loc_sd``
    defaulting to 100x the pooled exceedance standard deviation; log-scale
    coefficients Normal(0, 10^2); shape intercepts Normal(0, 0.25^2)
    truncated to ``shape_bounds`` (slopes untruncated); correlations are
    uniform over the positive-definite region.
    """

    loc_sd: float | None = None
    log_scale_sd: float = 10.0
    shape_sd: float = 0.25
    shape_bounds: tuple[float, float] = (-0.5, 0.5)

    def resolved_loc_sd(self, data_scale: float) -> float:
        return self.loc_sd if self.loc_sd is not None else 100.0 * max(data_scale, 1e-12)


@dataclass
class McmcConfig:
    iterations: int = 200_000
    burn_in: int = 50_000
    thinning: int = 10
    seed: int = 0
    target_accept: float = 0.44
    initial_scale: float = 0.1
    adapt_cap: float = 0.25
    adapt_power: float = 0.6

    def __post_init__(self):
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")


PAIR_NAMES = {("mu", "sigma"): "rho_mu_sigma", ("mu", "xi"): "rho_mu_xi", ("sigma", "xi"): "rho_sigma_xi"}


@dataclass
class PosteriorSamples:
    """Thinned post-burn-in draws of coefficients, correlations and effects."""

    param_names: list[str]
    params: np.ndarray
    effects: np.ndarray
    effect_dims: tuple[str, ...]
    log_posterior: np.ndarray
    acceptance: dict[str, float]
    burn_in: int
    thinning: int
    seed: int
    skeleton: RegionalModel

    @property
    def n_draws(self) -> int:
        return self.params.shape[0]

    @property
    def n_sites(self) -> int:
        return self.skeleton.n_sites

    def column(self, name: str) -> np.ndarray:
        return self.params[:, self.param_names.index(name)]

    def credible_interval(self, name: str, level: float = 0.95) -> tuple[float, float]:
        a = 100.0 * (1.0 - level) / 2.0
        col = self.column(name)
        return float(np.percentile(col, a)), float(np.percentile(col, 100.0 - a))

    def _correlation_at(self, i: int) -> np.ndarray:
        k = len(self.effect_dims)
        corr = np.eye(k)
        for a in range(k):
            for b in range(a + 1, k):
                name = PAIR_NAMES[(self.effect_dims[a], self.effect_dims[b])]
                corr[a, b] = corr[b, a] = self.params[i, self.param_names.index(name)]
        return corr

    def model_at(self, i: int) -> RegionalModel:
        """Regional model rebuilt from draw ``i``."""
        idx = {n: j for j, n in enumerate(self.param_names)}
        row = self.params[i]
        n_sites = self.n_sites
        intercepts = np.empty((n_sites, 3))
        for d in range(n_sites):
            suffix = "" if n_sites == 1 else f"_{d}"
            intercepts[d] = [row[idx["mu0" + suffix]], row[idx["sig0" + suffix]], row[idx["xi0" + suffix]]]
        slopes = {dim: 0.0 for dim in EFFECT_ORDER}
        for dim, name in (("mu", "mu1"), ("sigma", "sig1"), ("xi", "xi1")):
            if dim in self.effect_dims:
                slopes[dim] = row[idx[name]]
        return RegionalModel(
            intercepts=intercepts,
            mu1=slopes["mu"],
            sig1=slopes["sigma"],
            xi1=slopes["xi"],
            thresholds=self.skeleton.thresholds,
            effect_dims=self.effect_dims,
            correlation=self._correlation_at(i),
        )

    def site_model_at(self, i: int, d: int = 0) -> RandomEffectsModel:
        return self.model_at(i).site_model(d)

    def mean_model(self) -> tuple[RegionalModel, np.ndarray]:
        """Posterior-mean coefficients (correlations averaged on the atanh
        scale) and posterior-mean effects per block."""
        idx = {n: j for j, n in enumerate(self.param_names)}
        mean = self.params.mean(axis=0)
        for name in self.param_names:
            if name.startswith("rho_"):
                mean[idx[name]] = np.tanh(np.mean(np.arctanh(self.params[:, idx[name]])))
        snap = PosteriorSamples(
            param_names=self.param_names,
            params=mean[None, :],
            effects=self.effects.mean(axis=0, keepdims=True),
            effect_dims=self.effect_dims,
            log_posterior=self.log_posterior[:1],
            acceptance=self.acceptance,
            burn_in=self.burn_in,
            thinning=self.thinning,
            seed=self.seed,
            skeleton=self.skeleton,
        )
        return snap.model_at(0), self.effects.mean(axis=0)

    def sign_aligned(self) -> "PosteriorSamples":
        """Resolve the joint sign symmetry (slopes, effects) -> (-slopes,
        -effects) by one global flip making the first slope's mean positive."""
        slope_cols = [self.param_names.index(n) for n in ("mu1", "sig1", "xi1") if n in self.param_names]
        if not slope_cols or self.params[:, slope_cols[0]].mean() >= 0:
            return self
        params = self.params.copy()
        params[:, slope_cols] = -params[:, slope_cols]
        return PosteriorSamples(
            param_names=self.param_names,
            params=params,
            effects=-self.effects,
            effect_dims=self.effect_dims,
            log_posterior=self.log_posterior,
            acceptance=self.acceptance,
            burn_in=self.burn_in,
            thinning=self.thinning,
            seed=self.seed,
            skeleton=self.skeleton,
        )


class _ChainState:
    """Mutable sampler state with cached per-site data terms."""

    def __init__(self, sites, model: RegionalModel, priors: Priors, config: McmcConfig):
        self.sites = sites
        self.dims = model.effect_dims
        self.k = model.k
        self.n_sites = model.n_sites
        self.n_blocks = sites[0].n_blocks
        self.intercepts = model.intercepts.copy()
        self.slopes = np.array([model.mu1, model.sig1, model.xi1])
        self.dim_index = [EFFECT_ORDER.index(d) for d in self.dims]
        self.pairs = [(a, b) for a in range(self.k) for b in range(a + 1, self.k)]
        corr = model.correlation
        self.psi = np.array([np.arctanh(corr[a, b]) for a, b in self.pairs])
        self.effects = np.zeros((self.n_blocks, self.k))
        self.config = config

        pooled = np.concatenate([s.magnitudes for s in sites])
        self.data_scale = float(np.std(pooled)) if pooled.size > 1 else 1.0
        self.loc_sd = priors.resolved_loc_sd(self.data_scale)
        self.priors = priors

        self.site_terms = [np.zeros(self.n_blocks) for _ in sites]
        self.mvn_rows = np.zeros(self.n_blocks)
        self.refresh_site_terms()
        self.refresh_mvn_rows()

    # -- model pieces -------------------------------------------------
    def correlation(self, psi=None) -> np.ndarray:
        psi = self.psi if psi is None else psi
        corr = np.eye(self.k)
        for p, (a, b) in zip(psi, self.pairs):
            corr[a, b] = corr[b, a] = np.tanh(p)
        return corr

    def site_param_arrays(self, d: int):
        mu0, sig0, xi0 = self.intercepts[d]
        r = {dim: self.effects[:, j] for j, dim in enumerate(self.dims)}
        zero = np.zeros(self.n_blocks)
        mu = mu0 + self.slopes[0] * r.get("mu", zero)
        sigma = np.exp(sig0 + self.slopes[1] * r.get("sigma", zero))
        xi = xi0 + self.slopes[2] * r.get("xi", zero)
        return mu, sigma, xi

    def compute_site_terms(self, d: int) -> np.ndarray:
        mu, sigma, xi = self.site_param_arrays(d)
        return _site_block_terms(self.sites[d], mu, sigma, xi)

    def refresh_site_terms(self):
        for d in range(self.n_sites):
            self.site_terms[d] = self.compute_site_terms(d)

    def refresh_mvn_rows(self, psi=None) -> np.ndarray:
        rows = _mvn_row_logpdf(self.effects, self.correlation(psi))
        if psi is None:
            self.mvn_rows = rows
        return rows

    # -- priors --------------------------------------------------------
    def log_prior_intercept(self, j: int, value: float) -> float:
        if j == 0:
            return -0.5 * (value / self.loc_sd) ** 2
        if j == 1:
            return -0.5 * (value / self.priors.log_scale_sd) ** 2
        lo, hi = self.priors.shape_bounds
        if not lo < value < hi:
            return -np.inf
        return -0.5 * (value / self.priors.shape_sd) ** 2

    def log_prior_slope(self, j: int, value: float) -> float:
        sd = (self.loc_sd, self.priors.log_scale_sd, self.priors.shape_sd)[j]
        return -0.5 * (value / sd) ** 2

    def log_prior_psi(self, psi) -> float:
        # Flat prior on the correlations; the atanh transform contributes
        # a log(1 - rho^2) Jacobian per pair.
        rho = np.tanh(psi)
        return float(np.sum(np.log1p(-(rho**2))))

    def total_data_ll(self) -> float:
        return float(sum(t.sum() for t in self.site_terms))

    def log_posterior(self) -> float:
        lp = self.total_data_ll() + self.mvn_rows.sum() + self.log_prior_psi(self.psi)
        for d in range(self.n_sites):
            for j in range(3):
                lp += self.log_prior_intercept(j, self.intercepts[d, j])
        for j, dim in enumerate(EFFECT_ORDER):
            if dim in self.dims:
                lp += self.log_prior_slope(j, self.slopes[j])
        return lp


def _metropolis_accept(rng, delta: float) -> tuple[bool, float]:
    if np.isnan(delta):
        return False, 0.0
    alpha = 1.0 if delta >= 0 else float(np.exp(max(delta, -745.0)))
    return (rng.uniform() < alpha), alpha


def fit_bayes(
    data,
    skeleton,
    priors: Priors | None = None,
    config: McmcConfig | None = None,
) -> PosteriorSamples:
    """Posterior sampling for the random-effects model (single site or
    regional) by adaptive component-wise random-walk Metropolis-Hastings.

    ``data`` is a SiteData/EventSet or a list of them (regional);
    ``skeleton`` supplies starting coefficients, the included effect
    dimensions and the correlation starting value.  Draws are reproducible
    given ``config.seed``.  Emits a `ChainStuck` warning (samples still
    returned) if any component accepts under 1% after burn-in.
    """
    priors = priors or Priors()
    config = config or McmcConfig()

    if isinstance(skeleton, RandomEffectsModel):
        sites = [as_site_data(data)]
        model = RegionalModel.from_single(skeleton, sites[0].threshold)
    else:
        model = skeleton
        seq = data if isinstance(data, (list, tuple)) else [data]
        sites = [as_site_data(s) for s in seq]
        if len(sites) != model.n_sites:
            raise ValueError("number of site datasets must match the skeleton")
        for site, u in zip(sites, model.thresholds):
            if abs(site.threshold - u) > 1e-9:
                raise ValueError("site thresholds must match the skeleton")

    lo, hi = priors.shape_bounds
    if np.any((model.intercepts[:, 2] <= lo) | (model.intercepts[:, 2] >= hi)):
        raise PriorMismatch(f"shape intercept init outside prior support ({lo}, {hi})")

    state = _ChainState(sites, model, priors, config)
    if not np.isfinite(state.total_data_ll()):
        raise PriorMismatch("initial coefficients give zero likelihood for the data")

    rng = np.random.Generator(np.random.Philox(key=config.seed))
    names: list[str] = []
    for d in range(state.n_sites):
        suffix = "" if state.n_sites == 1 else f"_{d}"
        names += [f"mu0{suffix}", f"sig0{suffix}", f"xi0{suffix}"]
    slope_names = [("mu1", 0), ("sig1", 1), ("xi1", 2)]
    active_slopes = [(n, j) for n, j in slope_names if EFFECT_ORDER[j] in state.dims]
    names += [n for n, _ in active_slopes]
    pair_labels = [PAIR_NAMES[(state.dims[a], state.dims[b])] for a, b in state.pairs]
    names += pair_labels

    # Adaptive proposal scales, one per scalar component.
    sc_int = config.initial_scale * (1.0 + np.abs(state.intercepts))
    sc_slope = config.initial_scale * (1.0 + np.abs(state.slopes))
    sc_psi = np.full(len(state.pairs), config.initial_scale)
    sc_eff = np.full((state.n_blocks, state.k), 0.5)

    acc_int = np.zeros_like(sc_int)
    acc_slope = np.zeros(3)
    acc_psi = np.zeros(len(state.pairs))
    acc_eff = np.zeros_like(sc_eff)

    n_keep = (config.iterations - config.burn_in + config.thinning - 1) // config.thinning
    params_out = np.empty((n_keep, len(names)))
    effects_out = np.empty((n_keep, state.n_blocks, state.k))
    logpost_out = np.empty(n_keep)
    kept = 0
    post_iters = config.iterations - config.burn_in

    log_bound = np.log(1e6)

    def adapt(scale_arr, index, alpha, gamma):
        if gamma > 0.0:
            val = np.log(scale_arr[index]) + gamma * (alpha - config.target_accept)
            scale_arr[index] = np.exp(np.clip(val, -log_bound, log_bound))

    for b in range(1, config.iterations + 1):
        adapting = b <= config.burn_in
        gamma = min(config.adapt_cap, b ** (-config.adapt_power)) if adapting else 0.0
        counting = not adapting

        # Site intercepts.
        for d in range(state.n_sites):
            for j in range(3):
                cur = state.intercepts[d, j]
                prop = cur + sc_int[d, j] * rng.standard_normal()
                lp_cur = state.log_prior_intercept(j, cur)
                lp_prop = state.log_prior_intercept(j, prop)
                if np.isfinite(lp_prop):
                    state.intercepts[d, j] = prop
                    new_terms = state.compute_site_terms(d)
                    delta = new_terms.sum() - state.site_terms[d].sum() + lp_prop - lp_cur
                    ok, alpha = _metropolis_accept(rng, delta)
                    if ok:
                        state.site_terms[d] = new_terms
                    else:
                        state.intercepts[d, j] = cur
                else:
                    ok, alpha = False, 0.0
                adapt(sc_int, (d, j), alpha, gamma)
                if counting and ok:
                    acc_int[d, j] += 1

        # Shared slopes.
        for _, j in active_slopes:
            cur = state.slopes[j]
            prop = cur + sc_slope[j] * rng.standard_normal()
            state.slopes[j] = prop
            new_terms = [state.compute_site_terms(d) for d in range(state.n_sites)]
            delta = (
                sum(t.sum() for t in new_terms)
                - state.total_data_ll()
                + state.log_prior_slope(j, prop)
                - state.log_prior_slope(j, cur)
            )
            ok, alpha = _metropolis_accept(rng, delta)
            if ok:
                state.site_terms = new_terms
            else:
                state.slopes[j] = cur
            adapt(sc_slope, j, alpha, gamma)
            if counting and ok:
                acc_slope[j] += 1

        # Correlations (atanh scale, PD rejection).
        for p in range(len(state.pairs)):
            cur = state.psi[p]
            prop_psi = state.psi.copy()
            prop_psi[p] = cur + sc_psi[p] * rng.standard_normal()
            try:
                new_rows = state.refresh_mvn_rows(prop_psi)
            except np.linalg.LinAlgError:
                ok, alpha = False, 0.0
            else:
                delta = (
                    new_rows.sum()
                    - state.mvn_rows.sum()
                    + state.log_prior_psi(prop_psi)
                    - state.log_prior_psi(state.psi)
                )
                ok, alpha = _metropolis_accept(rng, delta)
                if ok:
                    state.psi = prop_psi
                    state.mvn_rows = new_rows
            adapt(sc_psi, p, alpha, gamma)
            if counting and ok:
                acc_psi[p] += 1

        # Block effects, one dimension at a time, all blocks at once
        # (blocks are conditionally independent given the coefficients).
        for j in range(state.k):
            cur_col = state.effects[:, j].copy()
            prop_col = cur_col + sc_eff[:, j] * rng.standard_normal(state.n_blocks)
            state.effects[:, j] = prop_col
            new_site_terms = [state.compute_site_terms(d) for d in range(state.n_sites)]
            new_rows = _mvn_row_logpdf(state.effects, state.correlation())
            delta_rows = new_rows - state.mvn_rows
            for d in range(state.n_sites):
                delta_rows = delta_rows + (new_site_terms[d] - state.site_terms[d])
            with np.errstate(over="ignore", invalid="ignore"):
                alpha_vec = np.where(delta_rows >= 0, 1.0, np.exp(np.maximum(delta_rows, -745.0)))
            alpha_vec = np.where(np.isnan(alpha_vec), 0.0, alpha_vec)
            accept = rng.uniform(size=state.n_blocks) < alpha_vec
            # Every per-block quantity depends only on that block's effect
            # row, so mixing accepted and rejected rows is exact.
            state.effects[:, j] = np.where(accept, prop_col, cur_col)
            for d in range(state.n_sites):
                state.site_terms[d] = np.where(accept, new_site_terms[d], state.site_terms[d])
            state.mvn_rows = np.where(accept, new_rows, state.mvn_rows)
            if gamma > 0.0:
                vals = np.log(sc_eff[:, j]) + gamma * (alpha_vec - config.target_accept)
                sc_eff[:, j] = np.exp(np.clip(vals, -log_bound, log_bound))
            if counting:
                acc_eff[:, j] += accept

        if not adapting and (b - config.burn_in - 1) % config.thinning == 0:
            row = list(state.intercepts.reshape(-1))
            row += [state.slopes[j] for _, j in active_slopes]
            row += list(np.tanh(state.psi))
            params_out[kept] = row
            effects_out[kept] = state.effects
            logpost_out[kept] = state.log_posterior()
            kept += 1

    acceptance: dict[str, float] = {}
    for d in range(state.n_sites):
        suffix = "" if state.n_sites == 1 else f"_{d}"
        for j, nm in enumerate(("mu0", "sig0", "xi0")):
            acceptance[nm + suffix] = acc_int[d, j] / post_iters
    for n, j in active_slopes:
        acceptance[n] = acc_slope[j] / post_iters
    for lbl, p in zip(pair_labels, range(len(state.pairs))):
        acceptance[lbl] = acc_psi[p] / post_iters
    for j, dim in enumerate(state.dims):
        for blk in range(state.n_blocks):
            acceptance[f"r_{dim}[{blk}]"] = acc_eff[blk, j] / post_iters

    stuck = [n for n, a in acceptance.items() if a < 0.01]
    if stuck:
        warnings.warn(
            f"{len(stuck)} component(s) accepted <1% of proposals after burn-in: "
            + ", ".join(stuck[:5]),
            ChainStuck,
        )

    final_model = RegionalModel(
        intercepts=state.intercepts,
        mu1=state.slopes[0],
        sig1=state.slopes[1],
        xi1=state.slopes[2],
        thresholds=model.thresholds,
        effect_dims=state.dims,
        correlation=state.correlation(),
    )
    return PosteriorSamples(
        param_names=names,
        params=params_out[:kept],
        effects=effects_out[:kept],
        effect_dims=state.dims,
        log_posterior=logpost_out[:kept],
        acceptance=acceptance,
        burn_in=config.burn_in,
        thinning=config.thinning,
        seed=config.seed,
        skeleton=final_model,
    )
