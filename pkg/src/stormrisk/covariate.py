"""Threshold Poisson process with an observed scalar covariate.

Parameters respond linearly to the covariate (log link on the scale):
``mu(s) = mu0 + mu1*s``, ``log sigma(s) = sig0 + sig1*s``,
``xi(s) = xi0 + xi1*s``.  Integrals against the covariate density use
trapezoidal quadrature on a fixed grid, which is also how kernel density
estimates are represented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, NonConvergence
from .evt import (
    FitResult,
    NhppParams,
    ThresholdedData,
    exceedance_rate,
    log_event_intensity,
    return_level_stationary,
)
from .optimize import find_increasing_root, minimize_restarts, numerical_hessian

COEF_NAMES = ("mu0", "mu1", "sig0", "sig1", "xi0", "xi1")


@dataclass(frozen=True)
class CovariateNhpp:
    """Linear covariate response in all three process parameters.

    ``sig0``/``sig1`` act on log sigma, so sigma(s) > 0 for every s.
    """

    mu0: float
    mu1: float
    sig0: float
    sig1: float
    xi0: float
    xi1: float

    def mu(self, s):
        return self.mu0 + self.mu1 * np.asarray(s, dtype=float)

    def sigma(self, s):
        return np.exp(self.sig0 + self.sig1 * np.asarray(s, dtype=float))

    def xi(self, s):
        return self.xi0 + self.xi1 * np.asarray(s, dtype=float)

    def params_at(self, s: float) -> NhppParams:
        return NhppParams(mu=float(self.mu(s)), sigma=float(self.sigma(s)), xi=float(self.xi(s)))

    def coefficients(self) -> np.ndarray:
        return np.array([self.mu0, self.mu1, self.sig0, self.sig1, self.xi0, self.xi1])

    @classmethod
    def from_coefficients(cls, coefs) -> "CovariateNhpp":
        return cls(*(float(c) for c in coefs))

    @classmethod
    def stationary(cls, p: NhppParams) -> "CovariateNhpp":
        return cls(mu0=p.mu, mu1=0.0, sig0=float(np.log(p.sigma)), sig1=0.0, xi0=p.xi, xi1=0.0)


@dataclass
class CovariateDensity:
    """Covariate density tabulated on a grid; the quadrature measure for
    every integral over the covariate.

    ``density`` is renormalised so the trapezoid rule integrates to one
    exactly, making the grid a proper probability measure.
    """

    grid: np.ndarray
    density: np.ndarray
    sample: np.ndarray | None = None
    bandwidth: float | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ValueError("grid must be 1-D with at least two points")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(self.density < 0):
            raise ValueError("density values must be non-negative")
        total = np.trapezoid(self.density, self.grid)
        if not total > 0:
            raise ValueError("density integrates to zero on the grid")
        self.density = self.density / total

    @property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights times density: ``expectation(f) = f @ quad_weights``."""
        dx = np.diff(self.grid)
        w = np.zeros_like(self.grid)
        w[:-1] += 0.5 * dx
        w[1:] += 0.5 * dx
        return w * self.density

    def expectation(self, values_on_grid: np.ndarray) -> float:
        """Trapezoid integral of f(s) h(s) ds for f tabulated on the grid.

        Zero-weight nodes are masked so an infinite integrand off the
        support cannot poison the sum with nan.
        """
        w = self.quad_weights
        contrib = np.where(w > 0.0, values_on_grid * w, 0.0)
        return float(np.sum(contrib))

    def mean(self) -> float:
        return self.expectation(self.grid)

    def refine(self, factor: int = 2) -> "CovariateDensity":
        """Same density on a grid ``factor`` times finer (KDE grids are
        re-evaluated exactly; tabulated ones are linearly interpolated)."""
        n = (self.grid.size - 1) * factor + 1
        grid = np.linspace(self.grid[0], self.grid[-1], n)
        if self.sample is not None and self.bandwidth is not None:
            dens = _gaussian_kde_values(self.sample, self.bandwidth, grid)
        else:
            dens = np.interp(grid, self.grid, self.density)
        return CovariateDensity(grid=grid, density=dens, sample=self.sample, bandwidth=self.bandwidth)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Exact draws from the piecewise-linear density the grid defines."""
        w = self.quad_weights
        cell_mass = 0.5 * (self.density[:-1] + self.density[1:]) * np.diff(self.grid)
        cell_mass = cell_mass / cell_mass.sum()
        cells = rng.choice(cell_mass.size, size=n, p=cell_mass)
        u = rng.uniform(size=n)
        h0 = self.density[cells]
        h1 = self.density[cells + 1]
        dx = np.diff(self.grid)[cells]
        # Invert the quadratic within-cell CDF of a linear density.
        slope = h1 - h0
        target = u * 0.5 * (h0 + h1)
        flat = np.abs(slope) < 1e-300
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(
                flat,
                np.where(h0 > 0, target / np.where(h0 > 0, h0, 1.0), u),
                (-h0 + np.sqrt(h0**2 + 2.0 * slope * target)) / np.where(flat, 1.0, slope),
            )
        return self.grid[cells] + np.clip(frac, 0.0, 1.0) * dx

    @classmethod
    def from_function(cls, fn, lo: float, hi: float, n: int = 512) -> "CovariateDensity":
        grid = np.linspace(lo, hi, n)
        return cls(grid=grid, density=np.asarray(fn(grid), dtype=float))


def silverman_bandwidth(sample: np.ndarray) -> float:
    """Rule-of-thumb bandwidth 0.9 * min(sd, IQR/1.34) * n^(-1/5)."""
    sd = float(np.std(sample, ddof=1))
    q75, q25 = np.percentile(sample, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread <= 0:
        raise DegenerateSample("sample has zero spread; no density estimate")
    return 0.9 * spread * sample.size ** (-0.2)


def _gaussian_kde_values(sample: np.ndarray, bw: float, grid: np.ndarray) -> np.ndarray:
    z = (grid[:, None] - sample[None, :]) / bw
    return np.exp(-0.5 * z**2).sum(axis=1) / (sample.size * bw * np.sqrt(2.0 * np.pi))


def kde(sample, n_grid: int = 512) -> CovariateDensity:
    """Gaussian kernel density of the marginal covariate sample.

    The grid spans [min - 3bw, max + 3bw]; the tabulated values are then
    renormalised on the grid (see `CovariateDensity`).
    """
    sample = np.asarray(sample, dtype=float)
    if sample.size < 2:
        raise DegenerateSample("need at least two covariate values")
    bw = silverman_bandwidth(sample)
    grid = np.linspace(sample.min() - 3.0 * bw, sample.max() + 3.0 * bw, n_grid)
    dens = _gaussian_kde_values(sample, bw, grid)
    return CovariateDensity(grid=grid, density=dens, sample=sample, bandwidth=bw)


def expected_exceedances(u: float, model: CovariateNhpp, density: CovariateDensity) -> float:
    """Covariate-integrated exceedance rate of ``u`` per block."""
    rate = exceedance_rate(u, model.mu(density.grid), model.sigma(density.grid), model.xi(density.grid))
    return density.expectation(rate)


def covariate_nll_per_obs(
    z,
    s,
    u: float,
    n_blocks: int,
    model: CovariateNhpp,
    density: CovariateDensity,
) -> float:
    """Negative log likelihood when the covariate is observed per event.

    The exponent term integrates the exceedance rate against the covariate
    density; the product term uses each event's own covariate value.  The
    covariate-density factors of the product are dropped (they carry no
    parameter information).  +inf on infeasible parameter values.
    """
    z = np.asarray(z, dtype=float)
    s = np.asarray(s, dtype=float)
    exponent = n_blocks * expected_exceedances(u, model, density)
    if not np.isfinite(exponent):
        return np.inf
    log_terms = log_event_intensity(z, model.mu(s), model.sigma(s), model.xi(s))
    if np.any(~np.isfinite(log_terms)):
        return np.inf
    return float(exponent - log_terms.sum())


def covariate_nll_per_block(
    z,
    block_index,
    s_block,
    u: float,
    model: CovariateNhpp,
    block_weights=None,
) -> float:
    """Negative log likelihood when the covariate is constant per block.

    ``s_block`` holds one covariate value per block; ``block_weights``
    (default all ones) scale each block's exponent term by its length as a
    fraction of a standard block.
    """
    z = np.asarray(z, dtype=float)
    block_index = np.asarray(block_index, dtype=int)
    s_block = np.asarray(s_block, dtype=float)
    if block_weights is None:
        block_weights = np.ones(s_block.size)
    mu_b = model.mu(s_block)
    sig_b = model.sigma(s_block)
    xi_b = model.xi(s_block)
    # A block whose threshold sits above its upper endpoint has rate zero:
    # legal iff it contains no events (their intensity terms go to -inf).
    rate_u = exceedance_rate(u, mu_b, sig_b, xi_b)
    if np.any(~np.isfinite(rate_u)):
        return np.inf
    log_terms = log_event_intensity(z, mu_b[block_index], sig_b[block_index], xi_b[block_index])
    if np.any(~np.isfinite(log_terms)):
        return np.inf
    return float(np.sum(block_weights * rate_u) - log_terms.sum())


def fit_covariate(
    z,
    s,
    u: float,
    n_blocks: int,
    density: CovariateDensity,
    init: CovariateNhpp | None = None,
    *,
    per_block: bool = False,
    block_index=None,
    free: tuple[str, ...] = COEF_NAMES,
    restarts: int = 5,
    seed: int = 0,
) -> FitResult:
    """Maximum likelihood over the covariate-response coefficients.

    ``per_block=True`` fits the block-constant likelihood: ``s`` then holds
    one value per block and ``block_index`` maps events to blocks.  ``free``
    selects which coefficients move (the rest stay at their init values,
    e.g. ``("mu0", "mu1", "sig0", "xi0")`` for a location-only response);
    the 6x6 covariance carries zero rows/columns for fixed coefficients.
    """
    z = np.asarray(z, dtype=float)
    s = np.asarray(s, dtype=float)
    if z.size < len(free) + 1:
        raise NonConvergence(f"covariate fit needs more than {len(free)} exceedances")
    if init is None:
        stat = ThresholdedData(exceedances=z, threshold=u, n_blocks=n_blocks)
        from .evt import fit_stationary

        init = CovariateNhpp.stationary(fit_stationary(stat, seed=seed).params)
    unknown = set(free) - set(COEF_NAMES)
    if unknown:
        raise ValueError(f"unknown coefficient name(s) {sorted(unknown)}")
    mask = np.array([n in free for n in COEF_NAMES])

    if per_block and block_index is None:
        raise ValueError("per_block fits need block_index")

    base = init.coefficients()

    def full_coefs(theta):
        c = base.copy()
        c[mask] = theta
        return c

    def objective(theta):
        m = CovariateNhpp.from_coefficients(full_coefs(theta))
        if per_block:
            return covariate_nll_per_block(z, block_index, s, u, m)
        return covariate_nll_per_obs(z, s, u, n_blocks, m, density)

    jitter_full = np.array([0.5 * (1.0 + abs(base[0])), 0.5, 0.25, 0.1, 0.1, 0.05])
    best = minimize_restarts(objective, base[mask], jitter_full[mask], restarts=restarts, seed=seed)
    if best is None:
        raise NonConvergence("covariate fit: no Nelder-Mead restart converged")
    model = CovariateNhpp.from_coefficients(full_coefs(best.x))
    cov_free = _coef_covariance(objective, best.x)
    cov = None
    if cov_free is not None:
        cov = np.zeros((6, 6))
        idx = np.flatnonzero(mask)
        cov[np.ix_(idx, idx)] = cov_free
    return FitResult(params=model, covariance=cov, nll=float(best.fun))


def _coef_covariance(objective, coefs) -> np.ndarray | None:
    # Shrink the step once if differencing walks over a support boundary.
    for rel_step in (1e-4, 1e-5):
        hess = numerical_hessian(objective, coefs, rel_step=rel_step)
        if not np.all(np.isfinite(hess)):
            continue
        try:
            np.linalg.cholesky(hess)
        except np.linalg.LinAlgError:
            return None
        return np.linalg.inv(hess)
    return None


def annual_max_cdf(z: float, model: CovariateNhpp, density: CovariateDensity) -> float:
    """P(block maximum <= z) with the covariate integrated out."""
    rate = exceedance_rate(z, model.mu(density.grid), model.sigma(density.grid), model.xi(density.grid))
    return float(density.expectation(np.exp(-rate)))


def return_level_covariate(T: float, model: CovariateNhpp, density: CovariateDensity) -> float:
    """Level whose covariate-integrated annual-maximum probability is 1 - 1/T."""
    if not T > 1:
        raise ValueError("return period must exceed 1 block")
    target = 1.0 - 1.0 / T
    s_bar = density.mean()
    z0 = return_level_stationary(T, model.params_at(s_bar))
    step = max(float(model.sigma(s_bar)), 1e-3)
    return find_increasing_root(lambda z: annual_max_cdf(z, model, density) - target, z0, step)
