import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from stormrisk import (
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
from stormrisk.errors import NonConvergence
from stormrisk.evt import exceedance_rate, fit_gev_maxima, gev_nll
from stormrisk.simulate import SimDesign, simulate_block, simulate_replicate

GUMBEL = NhppParams(mu=0.0, sigma=1.0, xi=0.0)

params_st = st.builds(
    NhppParams,
    mu=st.floats(-10.0, 10.0),
    sigma=st.floats(0.1, 10.0),
    xi=st.floats(-0.45, 0.45),
)


def test_gumbel_cdf_at_location():
    assert gev_cdf(0.0, GUMBEL) == pytest.approx(np.exp(-1.0))


def test_gumbel_pdf_at_location():
    assert gev_pdf(0.0, GUMBEL) == pytest.approx(np.exp(-1.0))


def test_cdf_reaches_one_at_finite_endpoint():
    p = NhppParams(mu=0.0, sigma=1.0, xi=-0.2)
    assert gev_cdf(p.upper_endpoint, p) == 1.0
    assert gev_cdf(p.upper_endpoint + 0.5, p) == 1.0


def test_pdf_zero_outside_support():
    p = NhppParams(mu=0.0, sigma=1.0, xi=-0.5)
    assert gev_pdf(p.upper_endpoint + 1.0, p) == 0.0
    q = NhppParams(mu=0.0, sigma=1.0, xi=0.3)
    assert gev_pdf(q.lower_endpoint - 1.0, q) == 0.0


def test_cdf_matches_integral_of_pdf():
    p = NhppParams(mu=0.0, sigma=1.0, xi=0.2)
    val, err = quad(lambda z: gev_pdf(z, p), p.lower_endpoint, 2.0, limit=200)
    assert gev_cdf(2.0, p) == pytest.approx(val, abs=1e-8)


def test_pdf_matches_finite_difference_of_cdf():
    p = NhppParams(mu=0.5, sigma=2.0, xi=0.1)
    h = 1e-5
    fd = (gev_cdf(1.3 + h, p) - gev_cdf(1.3 - h, p)) / (2.0 * h)
    assert gev_pdf(1.3, p) == pytest.approx(fd, abs=1e-6)


def test_intensity_at_location_is_inverse_scale():
    p = NhppParams(mu=3.0, sigma=2.5, xi=0.15)
    assert nhpp_intensity(3.0, p) == pytest.approx(1.0 / 2.5)


def test_intensity_zero_above_endpoint():
    p = NhppParams(mu=0.0, sigma=1.0, xi=-0.3)
    assert nhpp_intensity(p.upper_endpoint + 0.1, p) == 0.0


def test_intensity_matches_derivative_of_integrated_intensity():
    p = NhppParams(mu=1.0, sigma=1.5, xi=0.1)
    h = 1e-5
    fd = -(integrated_intensity(2.0 + h, (0, 1), p) - integrated_intensity(2.0 - h, (0, 1), p)) / (
        2.0 * h
    )
    assert nhpp_intensity(2.0, p) == pytest.approx(fd, abs=1e-6)


def test_integrated_intensity_unit_at_location():
    p = NhppParams(mu=2.0, sigma=1.0, xi=0.2)
    assert integrated_intensity(2.0, (0.0, 1.0), p) == pytest.approx(1.0)


def test_integrated_intensity_zero_window():
    assert integrated_intensity(1.0, (0.3, 0.3), GUMBEL) == 0.0


def test_integrated_intensity_matches_simulated_counts():
    p = NhppParams(mu=0.0, sigma=1.5, xi=0.2)
    lam = integrated_intensity(0.5, (0.0, 1.0), p)
    rng = np.random.default_rng(7)
    n = 20_000
    counts = np.array([simulate_block(p, 0.5, rng=rng)[1].size for _ in range(n)])
    se = counts.std(ddof=1) / np.sqrt(n)
    assert abs(counts.mean() - lam) < 3.0 * se


def test_empty_exceedances_nll_is_exponent_term():
    d = ThresholdedData(exceedances=[], threshold=0.0, n_blocks=1)
    assert stationary_nll(d, GUMBEL) == pytest.approx(1.0)


def test_nll_matches_literal_transcription(rng):
    # Independent transcription of the likelihood: exponent term plus the
    # product of intensities, written with plain loops.
    z = rng.uniform(1.0, 4.0, size=25)
    d = ThresholdedData(exceedances=z, threshold=1.0, n_blocks=8)
    for p in (NhppParams(0.5, 1.2, 0.1), NhppParams(1.2, 2.0, -0.15), NhppParams(0.0, 0.8, 0.0)):
        expected = 8 * (1 + p.xi * (1.0 - p.mu) / p.sigma) ** (-1 / p.xi if p.xi else 1)
        if p.xi == 0.0:
            expected = 8 * np.exp(-(1.0 - p.mu) / p.sigma)
        log_prod = 0.0
        for zi in z:
            if p.xi == 0.0:
                log_prod += -np.log(p.sigma) - (zi - p.mu) / p.sigma
            else:
                log_prod += -np.log(p.sigma) + (-1 / p.xi - 1) * np.log(
                    1 + p.xi * (zi - p.mu) / p.sigma
                )
        assert stationary_nll(d, p) == pytest.approx(expected - log_prod, rel=1e-10)


def test_nll_infeasible_returns_inf():
    d = ThresholdedData(exceedances=[2.0, 3.0], threshold=1.0, n_blocks=3)
    assert stationary_nll(d, NhppParams(0.0, 1.0, -0.4)) == np.inf  # events above endpoint
    assert stationary_nll(d, NhppParams(10.0, 1.0, 0.5)) == np.inf  # threshold below lower end


def test_nll_grid_argmin_near_truth():
    truth = NhppParams(mu=0.0, sigma=1.5, xi=0.2)
    rep = simulate_replicate(SimDesign(model=truth, n_blocks=30, threshold=0.0, seed=5), 0)
    d = ThresholdedData(rep.events.magnitudes, 0.0, 30)
    mus = np.linspace(-1.5, 1.5, 13)
    sigmas = np.linspace(0.5, 3.0, 11)
    xis = np.linspace(-0.3, 0.7, 11)
    best = min(
        ((stationary_nll(d, NhppParams(m, s, x)), (m, s, x)) for m in mus for s in sigmas for x in xis),
        key=lambda t: t[0],
    )
    m, s, x = best[1]
    assert abs(m) <= 0.5 and abs(s - 1.5) <= 0.5 and abs(x - 0.2) <= 0.3


def test_fit_stationary_fixed_point(study_data, study_threshold):
    d = ThresholdedData(study_data.events.magnitudes, study_threshold, 30)
    fit1 = fit_stationary(d)
    fit2 = fit_stationary(d, init=fit1.params)
    assert fit2.params.mu == pytest.approx(fit1.params.mu, abs=1e-4)
    assert fit2.params.sigma == pytest.approx(fit1.params.sigma, abs=1e-4)
    assert fit2.params.xi == pytest.approx(fit1.params.xi, abs=1e-4)
    assert fit2.nll <= fit1.nll + 1e-9


def test_fit_stationary_underdetermined_raises():
    d = ThresholdedData(exceedances=[1.5], threshold=1.0, n_blocks=1)
    with pytest.raises(NonConvergence):
        fit_stationary(d)


@pytest.mark.slow
def test_fit_stationary_wald_coverage():
    # 50 replicates, 30 blocks, ~3 exceedances per block; Wald intervals
    # should cover each true parameter about 95% of the time (gate set a
    # binomial 3 sigma below).
    truth = NhppParams(mu=0.0, sigma=1.5, xi=0.2)
    from stormrisk.simulate import calibrate_threshold

    u = calibrate_threshold(truth, 3.0)
    design = SimDesign(model=truth, n_blocks=30, threshold=u, n_replicates=50, seed=11)
    hits = np.zeros(3)
    used = 0
    for r in range(50):
        rep = simulate_replicate(design, r)
        d = ThresholdedData(rep.events.magnitudes, u, 30)
        fit = fit_stationary(d, seed=r)
        if fit.covariance is None:
            continue
        used += 1
        se = fit.stderr()
        est = fit.params.as_array()
        hits += np.abs(est - truth.as_array()) <= 1.96 * se
    assert used >= 45
    assert np.all(hits / used >= 0.86)


def test_return_level_gumbel_values():
    assert return_level_stationary(100.0, GUMBEL) == pytest.approx(4.600149, abs=1e-4)
    assert return_level_stationary(2.0, GUMBEL) == pytest.approx(0.366513, abs=1e-4)


def test_return_level_inverts_cdf():
    for p in (GUMBEL, NhppParams(1.0, 2.0, 0.3), NhppParams(-1.0, 0.5, -0.25)):
        for T in (1.5, 10.0, 250.0):
            z = return_level_stationary(T, p)
            assert gev_cdf(z, p) == pytest.approx(1.0 - 1.0 / T, abs=1e-10)


def test_all_exceedance_return_period():
    assert return_period_all_exceedances(100.0) == pytest.approx(99.499, abs=1e-3)
    assert abs(return_period_all_exceedances(21.0) - 20.5) < 0.51
    assert return_period_all_exceedances(1e6) / 1e6 == pytest.approx(1.0, abs=1e-5)


def test_gev_maxima_fit_recovers_truth(rng):
    truth = NhppParams(mu=1.0, sigma=2.0, xi=0.15)
    maxima = gev_quantile(rng.uniform(1e-9, 1 - 1e-9, size=4000), truth)
    fit = fit_gev_maxima(maxima, seed=1)
    assert fit.params.mu == pytest.approx(1.0, abs=0.15)
    assert fit.params.sigma == pytest.approx(2.0, abs=0.15)
    assert fit.params.xi == pytest.approx(0.15, abs=0.05)
    assert gev_nll(maxima, fit.params) <= gev_nll(maxima, truth) + 1e-6


# -- properties -------------------------------------------------------------


@given(params_st, st.floats(-20.0, 20.0), st.floats(0.01, 5.0))
@settings(max_examples=200, deadline=None)
def test_cdf_monotone(p, z, dz):
    assert gev_cdf(z + dz, p) >= gev_cdf(z, p) - 1e-12


@given(params_st)
@settings(max_examples=20, deadline=None)
def test_pdf_integrates_to_one(p):
    # Quantile-based bounds keep the interval on the density's scale; what
    # little mass lies outside is ~2e-12.
    lo, hi = gev_quantile(1e-12, p), gev_quantile(1.0 - 1e-12, p)
    val, err = quad(lambda z: gev_pdf(z, p), lo, hi, limit=400)
    assert val == pytest.approx(1.0, abs=1e-6)


@given(st.floats(-5.0, 5.0))
@settings(max_examples=60, deadline=None)
def test_shape_switch_continuity(z):
    for s in (+1.0, -1.0):
        near = NhppParams(mu=0.0, sigma=1.0, xi=s * 1e-8)
        assert abs(gev_cdf(z, near) - gev_cdf(z, GUMBEL)) < 1e-6


@given(params_st, st.floats(1.01, 500.0), st.floats(1.01, 2.0))
@settings(max_examples=100, deadline=None)
def test_return_level_increasing_in_period(p, T, factor):
    assert return_level_stationary(T * factor, p) > return_level_stationary(T, p)


@given(st.integers(1, 6))
@settings(max_examples=20, deadline=None)
def test_nll_linear_in_block_count(k):
    z = np.array([1.2, 1.9, 3.4, 2.2])
    p = NhppParams(mu=1.0, sigma=1.2, xi=0.1)
    base = ThresholdedData(z, 1.0, 4)
    scaled = ThresholdedData(z, 1.0, 4 * k)
    shift = stationary_nll(scaled, p) - stationary_nll(base, p)
    assert shift == pytest.approx((k - 1) * 4 * exceedance_rate(1.0, p.mu, p.sigma, p.xi), rel=1e-12)


@given(params_st, st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_integrated_intensity_additive(p, a, b, c):
    t1, t2, t3 = sorted((a, b, c))
    whole = integrated_intensity(p.mu + p.sigma, (t1, t3), p)
    parts = integrated_intensity(p.mu + p.sigma, (t1, t2), p) + integrated_intensity(
        p.mu + p.sigma, (t2, t3), p
    )
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)
