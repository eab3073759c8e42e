"""Synthetic data generators for all model classes, plus the season-level
Monte Carlo machinery used as a brute-force cross-check of the analytic
risk measure.

Replicates use substreams of a counter-based Philox generator, so replicate
``r`` of a design is reproducible in isolation and designs are bit-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariate import CovariateDensity, CovariateNhpp
from .decluster import EventSet
from .evt import NhppParams, exceedance_rate, gev_cdf, rate_inverse
from .optimize import find_increasing_root
from .random_effects import RandomEffectsModel, RegionalModel, effect_quadrature


def replicate_rng(seed: int, replicate: int = 0) -> np.random.Generator:
    """Independent substream for one replicate of a seeded design."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(replicate))


def simulate_block(
    params: NhppParams,
    u: float,
    t_window: tuple[float, float] = (0.0, 1.0),
    rng: np.random.Generator | None = None,
):
    """Events of one block: Poisson count, uniform times, exceedance sizes.

    Sizes come from inverting the conditional law P(Z > z | Z > u), i.e.
    exceedance_rate(z) = exceedance_rate(u) * c with c uniform, which is
    exact up to and including finite upper endpoints.
    """
    rng = rng or np.random.default_rng()
    t1, t2 = t_window
    rate_u = exceedance_rate(u, params.mu, params.sigma, params.xi)
    if not np.isfinite(rate_u):
        raise ValueError("threshold lies below the lower endpoint of the support")
    n = rng.poisson((t2 - t1) * rate_u)
    if n == 0:
        return np.empty(0), np.empty(0)
    times = np.sort(rng.uniform(t1, t2, size=n))
    c = np.minimum(1.0 - rng.uniform(size=n), 1.0 - 1e-16)
    mags = rate_inverse(rate_u * c, params.mu, params.sigma, params.xi)
    return times, np.atleast_1d(mags)


def _below_threshold_maximum(params: NhppParams, u: float, rng) -> float:
    """Block maximum conditioned on no exceedance of u (inverse-CDF draw)."""
    gu = float(gev_cdf(u, params))
    v = max(rng.uniform() * gu, 1e-300)
    return float(rate_inverse(-np.log(v), params.mu, params.sigma, params.xi))


@dataclass
class SimDesign:
    """One simulation experiment: a model, a block count and a threshold.

    ``model`` may be NhppParams, CovariateNhpp, RandomEffectsModel or
    RegionalModel.  Give either ``threshold`` directly or an expected
    ``events_per_block`` to calibrate it against the model.
    """

    model: object
    n_blocks: int
    threshold: float | None = None
    events_per_block: float | None = None
    n_replicates: int = 1
    seed: int = 0

    def __post_init__(self):
        if (self.threshold is None) == (self.events_per_block is None):
            if not isinstance(self.model, RegionalModel) or self.threshold is not None:
                raise ValueError("give exactly one of threshold / events_per_block")
        if self.events_per_block is not None and not self.events_per_block > 0:
            raise ValueError("events_per_block must be positive")
        if self.n_blocks < 1 or self.n_replicates < 1:
            raise ValueError("n_blocks and n_replicates must be >= 1")


@dataclass
class SimulatedData:
    """One replicate: events plus the latent per-block state and the exact
    block maxima (below-threshold blocks filled in by conditional draws)."""

    events: EventSet
    covariates: np.ndarray | None
    effects: np.ndarray | None
    block_maxima: np.ndarray
    truth: object
    replicate: int
    seed: int
    n_latent_redraws: int = 0


@dataclass
class SimulatedRegional:
    sites: list
    effects: np.ndarray
    truth: RegionalModel
    replicate: int
    seed: int
    n_latent_redraws: int = 0


# When xi > 0 and the latent state is unbounded, states far enough out put
# the threshold below their lower endpoint, where the asymptotic intensity
# diverges.  Calibration averages over the feasible region only, and the
# infeasible probability mass must stay below this share.
INFEASIBLE_MASS_TOL = 5e-3


def _latent_nodes(model, n_nodes: int = 64):
    if isinstance(model, CovariateNhpp):
        x, w = np.polynomial.hermite.hermgauss(n_nodes)
        s = x * np.sqrt(2.0)
        return (model.mu(s), model.sigma(s), model.xi(s)), w / np.sqrt(np.pi)
    nodes, w = effect_quadrature(model, min(n_nodes, 32))
    return model.param_arrays(nodes), w


def _mean_rate_fn(model, u_arr):
    """Expected exceedances per block at each u, latent state integrated
    out over its feasible region."""
    if isinstance(model, NhppParams):
        return exceedance_rate(u_arr, model.mu, model.sigma, model.xi)
    (mu, sigma, xi), w = _latent_nodes(model)
    rates = exceedance_rate(np.asarray(u_arr)[..., None], mu, sigma, xi)
    finite = np.isfinite(rates)
    bad_mass = np.where(finite, 0.0, w).sum(axis=-1)
    if np.any(bad_mass > INFEASIBLE_MASS_TOL):
        raise ValueError(
            "threshold infeasible for more than "
            f"{INFEASIBLE_MASS_TOL:.1%} of latent states; raise the threshold"
        )
    return np.where(finite, rates, 0.0) @ w


def calibrate_threshold(model, events_per_block: float) -> float:
    """Threshold whose expected exceedance count per block is the target.

    With a positive shape anywhere in an unbounded latent range the
    expected count diverges (the rate blows up polynomially fast as the
    latent state approaches the feasibility boundary), so such models must
    be given an explicit threshold instead.
    """
    if isinstance(model, NhppParams):
        return float(rate_inverse(events_per_block, model.mu, model.sigma, model.xi))
    (mu, sigma, xi), _ = _latent_nodes(model)
    if np.max(xi) > 0.0:
        raise ValueError(
            "expected-count calibration diverges for positive shape with "
            "unbounded latent states; pass an explicit threshold"
        )
    centre = model.params_at(0.0) if isinstance(model, CovariateNhpp) else model.params_at(
        np.zeros(model.k)
    )
    u0 = float(rate_inverse(events_per_block, centre.mu, centre.sigma, centre.xi))

    def gap(u):
        try:
            return events_per_block - float(_mean_rate_fn(model, u))
        except ValueError:
            return -1e300  # too low: finite sentinel keeps brentq happy

    return find_increasing_root(gap, u0, centre.sigma)


MAX_LATENT_REDRAWS = 1000


def _feasible(u, mu, sigma, xi) -> np.ndarray:
    return np.isfinite(exceedance_rate(u, mu, sigma, xi))


def _block_params(model, rng, n_blocks: int, thresholds):
    """Per-block parameter arrays plus whatever latent state was drawn.

    Latent states that put any threshold below that block's lower endpoint
    (possible for xi > 0) are redrawn: the asymptotic model has no finite
    process there.  The redraw count is returned so the (tiny) truncation
    of the latent law stays visible.
    """
    thresholds = np.atleast_1d(thresholds)
    if isinstance(model, NhppParams):
        ones = np.ones(n_blocks)
        return model.mu * ones, model.sigma * ones, model.xi * ones, None, None, 0

    def draw(n):
        if isinstance(model, CovariateNhpp):
            s = rng.standard_normal(n)
            return s, (model.mu(s), model.sigma(s), model.xi(s))
        chol = np.linalg.cholesky(model.correlation)
        r = rng.standard_normal((n, model.k)) @ chol.T
        return r, model.param_arrays(r)

    latent, (mu, sigma, xi) = draw(n_blocks)
    redraws = 0
    for _ in range(MAX_LATENT_REDRAWS):
        ok = np.ones(n_blocks, dtype=bool)
        for u in thresholds:
            ok &= _feasible(u, mu, sigma, xi)
        if ok.all():
            break
        redraws += int((~ok).sum())
        fresh, (m2, s2, x2) = draw(int((~ok).sum()))
        latent[~ok] = fresh
        mu[~ok], sigma[~ok], xi[~ok] = m2, s2, x2
    else:
        raise ValueError("could not draw feasible latent states; raise the threshold")
    if isinstance(model, CovariateNhpp):
        return mu, sigma, xi, latent, None, redraws
    return mu, sigma, xi, None, latent, redraws


def _simulate_site(mu_b, sig_b, xi_b, u: float, rng) -> tuple[EventSet, np.ndarray]:
    n_blocks = mu_b.size
    block_index, times, mags = [], [], []
    maxima = np.empty(n_blocks)
    for i in range(n_blocks):
        p = NhppParams(mu=float(mu_b[i]), sigma=float(sig_b[i]), xi=float(xi_b[i]))
        t_i, z_i = simulate_block(p, u, rng=rng)
        if z_i.size:
            block_index += [i] * z_i.size
            times += list(np.clip(t_i, 1e-12, 1.0 - 1e-12))
            mags += list(z_i)
            maxima[i] = z_i.max()
        else:
            maxima[i] = _below_threshold_maximum(p, u, rng)
    es = EventSet(
        block_labels=list(range(n_blocks)),
        block_index=np.array(block_index, dtype=int),
        times=np.array(times),
        magnitudes=np.array(mags),
        threshold=u,
    )
    return es, maxima


def simulate_replicate(design: SimDesign, replicate: int = 0):
    """One replicate of the design (deterministic in (seed, replicate))."""
    rng = replicate_rng(design.seed, replicate)
    model = design.model
    if isinstance(model, RegionalModel):
        sites = []
        # Feasibility must hold jointly across sites, so draw effects once
        # against the per-site intercepts.
        redraws = 0
        chol = np.linalg.cholesky(model.correlation)
        r = rng.standard_normal((design.n_blocks, model.k)) @ chol.T
        for _ in range(MAX_LATENT_REDRAWS):
            ok = np.ones(design.n_blocks, dtype=bool)
            for d in range(model.n_sites):
                mu, sigma, xi = model.site_model(d).param_arrays(r)
                ok &= _feasible(float(model.thresholds[d]), mu, sigma, xi)
            if ok.all():
                break
            redraws += int((~ok).sum())
            r[~ok] = rng.standard_normal((int((~ok).sum()), model.k)) @ chol.T
        else:
            raise ValueError("could not draw feasible latent states; raise the thresholds")
        for d in range(model.n_sites):
            mu, sigma, xi = model.site_model(d).param_arrays(r)
            es, _ = _simulate_site(mu, sigma, xi, float(model.thresholds[d]), rng)
            sites.append(es)
        return SimulatedRegional(
            sites=sites, effects=r, truth=model, replicate=replicate, seed=design.seed,
            n_latent_redraws=redraws,
        )

    u = design.threshold
    if u is None:
        u = calibrate_threshold(model, design.events_per_block)
    mu_b, sig_b, xi_b, covs, effs, redraws = _block_params(model, rng, design.n_blocks, u)
    es, maxima = _simulate_site(mu_b, sig_b, xi_b, float(u), rng)
    return SimulatedData(
        events=es,
        covariates=covs,
        effects=effs,
        block_maxima=maxima,
        truth=model,
        replicate=replicate,
        seed=design.seed,
        n_latent_redraws=redraws,
    )


def simulate_design(design: SimDesign) -> list:
    """All replicates of the design."""
    return [simulate_replicate(design, r) for r in range(design.n_replicates)]


# ---------------------------------------------------------------------------
# Season-level draws for the risk-measure oracle


def _split_maxima(mu, sigma, xi, t: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """(max up to t, max after t) per season, given per-season parameters.

    The two pieces are independent given the parameters, with CDFs G^t and
    G^(1-t); both are drawn by inverting the exceedance rate.
    """
    u1 = np.maximum(rng.uniform(size=np.shape(mu)), 1e-300)
    u2 = np.maximum(rng.uniform(size=np.shape(mu)), 1e-300)
    before = rate_inverse(-np.log(u1) / t, mu, sigma, xi)
    after = rate_inverse(-np.log(u2) / (1.0 - t), mu, sigma, xi)
    return before, after


def _draw_thetas(model, density, n: int, rng):
    if isinstance(model, CovariateNhpp):
        s = density.draw(n, rng)
        return model.mu(s), model.sigma(s), model.xi(s)
    if isinstance(model, RandomEffectsModel):
        chol = np.linalg.cholesky(model.correlation)
        r = rng.standard_normal((n, model.k)) @ chol.T
        return model.param_arrays(r)
    if isinstance(model, NhppParams):
        ones = np.ones(n)
        return model.mu * ones, model.sigma * ones, model.xi * ones
    raise TypeError(f"unsupported model class {type(model).__name__}")


@dataclass
class OracleEstimate:
    """Conditional-simulation estimate of the risk measure and its parts."""

    numerator: float
    numerator_se: float
    denominator: float
    denominator_se: float
    ratio: float
    ratio_se: float
    n_retained: int
    numerator_half_bin: float

    @property
    def combined_se(self) -> float:
        return self.ratio_se


def mc_risk_oracle(
    model,
    t: float,
    z_T: float,
    z_star: float,
    *,
    density: CovariateDensity | None = None,
    n_seasons: int = 1_000_000,
    bin_frac: float = 0.005,
    seed: int = 0,
) -> OracleEstimate:
    """Brute-force risk measure: simulate seasons, condition on the
    pre-``t`` maximum falling in a narrow bin around ``z_T``.

    Numerator and denominator use independent season batches so their
    standard errors combine without covariance terms.  The numerator is
    re-estimated at half the bin width so bin sensitivity is visible.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))

    mu, sigma, xi = _draw_thetas(model, density, n_seasons, rng)
    before, after = _split_maxima(mu, sigma, xi, t, rng)
    half = 0.5 * bin_frac * max(abs(z_T), 1e-6)
    keep = np.abs(before - z_T) <= half
    n_keep = int(keep.sum())
    if n_keep == 0:
        raise ValueError("conditioning bin caught no simulated seasons; widen it")
    hits = after[keep] > z_star
    num = float(hits.mean())
    num_se = float(np.sqrt(max(num * (1.0 - num), 1e-300) / n_keep))
    keep_half = np.abs(before - z_T) <= 0.5 * half
    num_half = float((after[keep_half] > z_star).mean()) if keep_half.any() else np.nan

    mu, sigma, xi = _draw_thetas(model, density, n_seasons, rng)
    _, after2 = _split_maxima(mu, sigma, xi, t, rng)
    den = float((after2 > z_star).mean())
    den_se = float(np.sqrt(max(den * (1.0 - den), 1e-300) / n_seasons))

    if den > 0:
        ratio = num / den
        ratio_se = ratio * np.sqrt((num_se / max(num, 1e-300)) ** 2 + (den_se / den) ** 2)
    else:
        ratio, ratio_se = np.nan, np.nan
    return OracleEstimate(
        numerator=num,
        numerator_se=num_se,
        denominator=den,
        denominator_se=den_se,
        ratio=float(ratio),
        ratio_se=float(ratio_se),
        n_retained=n_keep,
        numerator_half_bin=num_half,
    )
