"""GEV distribution and Poisson-process threshold model: the stationary core.

Everything is parametrised by (mu, sigma, xi) so that the block (annual)
maximum is GEV(mu, sigma, xi).  Exceedances of a high threshold u over a
unit time window form a Poisson process with intensity
``(1/sigma) * [1 + xi*(z-mu)/sigma]_+^(-1/xi - 1)``; its integral above a
level is `exceedance_rate`.  All array helpers broadcast over both the
level and the parameters, which is what the covariate and random-effects
modules lean on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence
from .optimize import minimize_restarts, numerical_hessian

# Shape values below this are evaluated through the Gumbel-limit series to
# avoid cancellation in log(1+xi*y)/xi.
SHAPE_TOL = 1e-8


def scaled_log1p(y, xi):
    """log(1 + xi*y)/xi, continued through xi -> 0 by its series in xi.

    Only meaningful where 1 + xi*y > 0; callers mask the complement.
    """
    y = np.asarray(y, dtype=float)
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < SHAPE_TOL
    safe_xi = np.where(small, 1.0, xi)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = np.log1p(xi * y) / safe_xi
    series = y * (1.0 - xi * y / 2.0 + (xi * y) ** 2 / 3.0)
    return np.where(small, series, exact)


def _scaled_expm1(w, xi):
    """expm1(-xi*w)/xi, continued through xi -> 0 (limit -w)."""
    w = np.asarray(w, dtype=float)
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < SHAPE_TOL
    safe_xi = np.where(small, 1.0, xi)
    with np.errstate(over="ignore"):
        exact = np.expm1(-xi * w) / safe_xi
    series = -w * (1.0 - xi * w / 2.0 + (xi * w) ** 2 / 6.0)
    return np.where(small, series, exact)


def exceedance_rate(z, mu, sigma, xi):
    """Expected number of process points above ``z`` per unit time.

    This is ``[1 + xi*(z-mu)/sigma]_+^(-1/xi)``: zero above a finite upper
    endpoint (xi < 0) and +inf below the lower endpoint (xi > 0).
    """
    z, mu, sigma, xi = np.broadcast_arrays(
        np.asarray(z, float), np.asarray(mu, float), np.asarray(sigma, float), np.asarray(xi, float)
    )
    y = (z - mu) / sigma
    arg = 1.0 + xi * y
    with np.errstate(over="ignore", invalid="ignore"):
        rate = np.exp(-scaled_log1p(y, xi))
    out = np.where(arg > 0.0, rate, np.where(xi < 0.0, 0.0, np.inf))
    return out if out.ndim else float(out)


def log_event_intensity(z, mu, sigma, xi):
    """log of the process intensity (1/sigma)*[1+xi*(z-mu)/sigma]_+^(-1/xi-1).

    -inf outside the support.
    """
    z, mu, sigma, xi = np.broadcast_arrays(
        np.asarray(z, float), np.asarray(mu, float), np.asarray(sigma, float), np.asarray(xi, float)
    )
    y = (z - mu) / sigma
    arg = 1.0 + xi * y
    with np.errstate(invalid="ignore"):
        val = -np.log(sigma) - (1.0 + xi) * scaled_log1p(y, xi)
    return np.where(arg > 0.0, val, -np.inf)


def rate_inverse(c, mu, sigma, xi):
    """Level whose exceedance rate is ``c`` (inverse of `exceedance_rate`)."""
    c = np.asarray(c, dtype=float)
    with np.errstate(divide="ignore"):
        w = np.log(c)
    out = mu + sigma * _scaled_expm1(w, xi)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class NhppParams:
    """Location / scale / shape of the threshold Poisson process."""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def lower_endpoint(self) -> float:
        """Finite iff xi > 0."""
        if self.xi > 0:
            return self.mu - self.sigma / self.xi
        return -np.inf

    @property
    def upper_endpoint(self) -> float:
        """Finite iff xi < 0."""
        if self.xi < 0:
            return self.mu - self.sigma / self.xi
        return np.inf

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.sigma, self.xi])


@dataclass(frozen=True)
class ThresholdedData:
    """Independent exceedances of a threshold over ``n_blocks`` blocks."""

    exceedances: np.ndarray
    threshold: float
    n_blocks: int

    def __post_init__(self):
        object.__setattr__(self, "exceedances", np.asarray(self.exceedances, dtype=float))
        if self.exceedances.size and not np.all(self.exceedances > self.threshold):
            raise ValueError("all exceedances must lie strictly above the threshold")
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")


def gev_cdf(z, p: NhppParams):
    """GEV distribution function exp{-[1+xi*(z-mu)/sigma]_+^(-1/xi)}."""
    return np.exp(-exceedance_rate(z, p.mu, p.sigma, p.xi))


def gev_pdf(z, p: NhppParams):
    """GEV density; zero outside the support."""
    rate = exceedance_rate(z, p.mu, p.sigma, p.xi)
    with np.errstate(invalid="ignore", over="ignore"):
        out = np.exp(log_event_intensity(z, p.mu, p.sigma, p.xi) - rate)
    out = np.where(np.isfinite(rate), out, 0.0)
    return out if np.ndim(out) else float(out)


def gev_quantile(prob, p: NhppParams):
    """Inverse of `gev_cdf` for probabilities in (0, 1)."""
    prob = np.asarray(prob, dtype=float)
    if np.any((prob <= 0.0) | (prob >= 1.0)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    return rate_inverse(-np.log(prob), p.mu, p.sigma, p.xi)


def nhpp_intensity(z, p: NhppParams, t_window: tuple[float, float] = (0.0, 1.0)):
    """Process intensity at level ``z``; constant over time windows."""
    t1, t2 = t_window
    if not 0.0 <= t1 <= t2 <= 1.0:
        raise ValueError("time window must satisfy 0 <= t1 <= t2 <= 1")
    with np.errstate(over="ignore"):
        out = np.exp(log_event_intensity(z, p.mu, p.sigma, p.xi))
    return out if np.ndim(out) else float(out)


def integrated_intensity(u, t_window: tuple[float, float], p: NhppParams):
    """Expected number of points in [t1, t2] x [u, inf)."""
    t1, t2 = t_window
    if not t1 <= t2:
        raise ValueError("time window must satisfy t1 <= t2")
    return (t2 - t1) * exceedance_rate(u, p.mu, p.sigma, p.xi)


def stationary_nll(data: ThresholdedData, p: NhppParams) -> float:
    """Negative log likelihood of the stationary threshold process.

    Infeasible parameter values (any exceedance, or the threshold itself,
    outside the support) return +inf so optimisers can roam freely.
    """
    return _stationary_nll_raw(
        data.exceedances, data.threshold, data.n_blocks, p.mu, np.log(p.sigma), p.xi
    )


def _stationary_nll_raw(z, u, n_blocks, mu, log_sigma, xi) -> float:
    sigma = np.exp(log_sigma)
    if not np.isfinite(sigma) or sigma <= 0 or not np.isfinite(xi):
        return np.inf
    if 1.0 + xi * (u - mu) / sigma <= 0.0:
        return np.inf
    exponent = n_blocks * exceedance_rate(u, mu, sigma, xi)
    log_terms = log_event_intensity(z, mu, sigma, xi)
    if np.any(~np.isfinite(log_terms)):
        return np.inf
    return float(exponent - np.sum(log_terms))


@dataclass
class FitResult:
    """Point estimate with observed-information covariance (None if the
    numerically differenced Hessian is not positive definite)."""

    params: object
    covariance: np.ndarray | None
    nll: float

    def stderr(self) -> np.ndarray | None:
        if self.covariance is None:
            return None
        return np.sqrt(np.diag(self.covariance))


def _default_init(data: ThresholdedData) -> NhppParams:
    z = data.exceedances
    excess = np.mean(z - data.threshold) if z.size else 1.0
    sigma0 = max(float(np.std(z)) if z.size > 1 else excess, 1e-3)
    return NhppParams(mu=float(data.threshold), sigma=sigma0, xi=0.1)


def fit_stationary(
    data: ThresholdedData,
    init: NhppParams | None = None,
    *,
    restarts: int = 5,
    seed: int = 0,
) -> FitResult:
    """Maximum likelihood fit via Nelder-Mead with jittered restarts.

    Optimisation runs over (mu, log sigma, xi); the covariance is reported
    on the natural (mu, sigma, xi) scale from a central-difference Hessian.
    Raises `NonConvergence` if no restart meets the simplex tolerance.
    """
    if data.exceedances.size < 3:
        raise NonConvergence("stationary fit needs at least 3 exceedances")
    if init is None:
        init = _default_init(data)
    z, u, ny = data.exceedances, data.threshold, data.n_blocks

    def objective(theta):
        return _stationary_nll_raw(z, u, ny, theta[0], theta[1], theta[2])

    theta0 = np.array([init.mu, np.log(init.sigma), init.xi])
    jitter = np.array([0.5 * (1.0 + abs(init.mu)), 0.25, 0.1])
    best = minimize_restarts(objective, theta0, jitter, restarts=restarts, seed=seed)
    if best is None:
        raise NonConvergence("stationary fit: no Nelder-Mead restart converged")

    mu, log_sigma, xi = best.x
    params = NhppParams(mu=float(mu), sigma=float(np.exp(log_sigma)), xi=float(xi))

    def natural_objective(theta):
        if theta[1] <= 0:
            return np.inf
        return _stationary_nll_raw(z, u, ny, theta[0], np.log(theta[1]), theta[2])

    cov = _covariance_from_hessian(natural_objective, params.as_array())
    return FitResult(params=params, covariance=cov, nll=float(best.fun))


def _covariance_from_hessian(objective, theta) -> np.ndarray | None:
    # Shrink the step once if differencing walks over a support boundary.
    for rel_step in (1e-4, 1e-5):
        hess = numerical_hessian(objective, theta, rel_step=rel_step)
        if not np.all(np.isfinite(hess)):
            continue
        try:
            # Cholesky doubles as the positive-definiteness check.
            np.linalg.cholesky(hess)
        except np.linalg.LinAlgError:
            return None
        return np.linalg.inv(hess)
    return None


def gev_nll(maxima, p: NhppParams) -> float:
    """Negative log likelihood of iid GEV block maxima (comparison baseline)."""
    z = np.asarray(maxima, dtype=float)
    log_dens = log_event_intensity(z, p.mu, p.sigma, p.xi)
    rate = exceedance_rate(z, p.mu, p.sigma, p.xi)
    if np.any(~np.isfinite(log_dens)):
        return np.inf
    return float(np.sum(rate - log_dens))


def fit_gev_maxima(maxima, init: NhppParams | None = None, *, restarts: int = 5, seed: int = 0) -> FitResult:
    """Maximum likelihood GEV fit to block maxima.

    This is the deliberately mis-specified baseline the covariate and
    random-effects models are compared against: it ignores any block-level
    heterogeneity.
    """
    z = np.asarray(maxima, dtype=float)
    if z.size < 3:
        raise ValueError("need at least 3 block maxima")
    if init is None:
        sd = float(np.std(z, ddof=1))
        init = NhppParams(mu=float(np.mean(z)) - 0.45 * sd, sigma=max(0.78 * sd, 1e-6), xi=0.1)

    def objective(theta):
        sigma = np.exp(theta[1])
        if not np.isfinite(sigma):
            return np.inf
        return gev_nll(z, NhppParams(mu=theta[0], sigma=sigma, xi=theta[2]))

    theta0 = np.array([init.mu, np.log(init.sigma), init.xi])
    jitter = np.array([0.5 * (1.0 + abs(init.mu)), 0.25, 0.1])
    best = minimize_restarts(objective, theta0, jitter, restarts=restarts, seed=seed)
    if best is None:
        raise NonConvergence("GEV maxima fit: no Nelder-Mead restart converged")
    params = NhppParams(mu=float(best.x[0]), sigma=float(np.exp(best.x[1])), xi=float(best.x[2]))

    def natural_objective(theta):
        if theta[1] <= 0:
            return np.inf
        return gev_nll(z, NhppParams(mu=theta[0], sigma=theta[1], xi=theta[2]))

    cov = _covariance_from_hessian(natural_objective, params.as_array())
    return FitResult(params=params, covariance=cov, nll=float(best.fun))


def return_level_stationary(T: float, p: NhppParams) -> float:
    """Level exceeded by the block maximum with probability 1/T."""
    if not T > 1:
        raise ValueError("return period must exceed 1 block")
    return float(gev_quantile(1.0 - 1.0 / T, p))


def return_period_all_exceedances(T: float) -> float:
    """Expected waiting time between exceedances of the T-block return level
    when every observation (not only block maxima) counts: -1/log(1 - 1/T)."""
    if not T > 1:
        raise ValueError("return period must exceed 1 block")
    return -1.0 / np.log1p(-1.0 / T)
