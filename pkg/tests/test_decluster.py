import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stormrisk import RandomEffectsModel, TimeSeries, decluster, interarrival_pp, quantile_threshold
from stormrisk.decluster import EventSet
from stormrisk.errors import TooFewEvents
from stormrisk.simulate import SimDesign, simulate_replicate


def series(values, start="2000-10-01"):
    dates = np.arange(np.datetime64(start), np.datetime64(start) + np.timedelta64(len(values), "D"))
    return TimeSeries(times=dates, values=np.asarray(values, dtype=float))


def brute_force_clusters(values, day_pos, threshold, w):
    """Independent re-implementation of the runs rule: scan every pair of
    consecutive exceedances and split when at least w below-threshold days
    separate them."""
    idx = [i for i, v in enumerate(values) if v > threshold]
    clusters = []
    for i in idx:
        if clusters and day_pos[i] - day_pos[clusters[-1][-1]] - 1 < w:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    out = []
    for members in clusters:
        best = max(members, key=lambda i: (values[i], -i))
        out.append((best, values[best]))
    return out


def test_hand_traced_six_values():
    ts = series([5, 1, 6, 1, 1, 7])
    es = decluster(ts, 4.0, 2)
    assert list(es.magnitudes) == [6.0, 7.0]
    assert es.n_events == 2


def test_run_length_one_splits_on_any_gap():
    ts = series([5, 1, 6, 1, 1, 7])
    es = decluster(ts, 4.0, 1)
    assert list(es.magnitudes) == [5.0, 6.0, 7.0]


def test_all_below_threshold_gives_empty_set():
    es = decluster(series([1, 2, 3]), 10.0, 3)
    assert es.n_events == 0
    assert es.n_blocks >= 1


def test_tie_takes_earliest_day():
    ts = series([5.0, 7.0, 7.0, 5.0])
    es = decluster(ts, 4.0, 2)
    assert es.n_events == 1
    # both 7s are in one cluster; the event is timed at the first
    assert es.times[0] == pytest.approx(2.0 / 366.0, abs=1e-9)


def test_missing_days_break_runs():
    dates = np.array(
        ["2000-11-01", "2000-11-02", "2000-11-10", "2000-11-11"], dtype="datetime64[D]"
    )
    ts = TimeSeries(times=dates, values=np.array([5.0, 6.0, 7.0, 5.5]))
    es = decluster(ts, 4.0, 5)
    # 7 missing days between Nov 2 and Nov 10 count as below threshold
    assert es.n_events == 2
    assert list(es.magnitudes) == [6.0, 7.0]


def test_quantile_threshold_median():
    assert quantile_threshold(series([1, 2, 3]), 0.5) == 2.0


def test_quantile_threshold_ordered():
    ts = series(list(np.random.default_rng(3).gamma(2.0, 2.0, size=400)))
    assert quantile_threshold(ts, 0.7) <= quantile_threshold(ts, 0.9)


def test_block_labels_cover_record():
    vals = np.ones(3 * 366)
    ts = series(list(vals), start="2000-10-01")
    es = decluster(ts, 10.0, 7)
    assert es.block_labels[0] == 2001  # water year labelled by its ending year
    assert es.block_labels[-1] >= 2003


def test_event_magnitudes_match_brute_force_random():
    rng = np.random.default_rng(12)
    values = rng.gamma(2.0, 2.0, size=1000)
    ts = series(list(values))
    day_pos = np.arange(1000)
    for w in (1, 3, 7):
        u = float(np.quantile(values, 0.9))
        es = decluster(ts, u, w)
        expected = brute_force_clusters(values, day_pos, u, w)
        assert es.n_events == len(expected)
        assert np.allclose(es.magnitudes, [m for _, m in expected])


@given(
    st.lists(st.floats(0.0, 10.0), min_size=5, max_size=60),
    st.integers(1, 6),
    st.floats(1.0, 9.0),
)
@settings(max_examples=150, deadline=None)
def test_decluster_matches_brute_force(values, w, u):
    ts = series(values)
    es = decluster(ts, u, w)
    expected = brute_force_clusters(values, np.arange(len(values)), u, w)
    assert es.n_events == len(expected)
    assert np.allclose(es.magnitudes, [m for _, m in expected])


@given(st.lists(st.floats(0.0, 10.0), min_size=5, max_size=60), st.integers(1, 5))
@settings(max_examples=100, deadline=None)
def test_event_count_monotone_in_window(values, w):
    # Count is non-increasing in w.  It is NOT monotone in the threshold:
    # raising u can remove an exceedance that bridged two clusters, e.g.
    # [6,0,0,0,4,6] with w=4 has one cluster above u=3 but two above u=5.
    ts = series(values)
    assert decluster(ts, 3.0, w + 1).n_events <= decluster(ts, 3.0, w).n_events


def test_threshold_monotonicity_counterexample():
    ts = series([6.0, 0.0, 0.0, 0.0, 4.0, 6.0])
    assert decluster(ts, 3.0, 4).n_events == 1
    assert decluster(ts, 5.0, 4).n_events == 2


def test_times_strictly_increasing_within_block():
    rng = np.random.default_rng(4)
    ts = series(list(rng.gamma(2.0, 2.0, size=800)))
    es = decluster(ts, float(np.quantile(ts.values, 0.85)), 3)
    for b in range(es.n_blocks):
        t = es.times[es.block_index == b]
        assert np.all(np.diff(t) > 0)
        assert np.all((t > 0) & (t < 1))


# -- inter-arrival diagnostics ----------------------------------------------


def _simulated_events(model, n_blocks, threshold, seed) -> EventSet:
    return simulate_replicate(
        SimDesign(model=model, n_blocks=n_blocks, threshold=threshold, seed=seed), 0
    ).events


def test_two_events_single_interarrival():
    es = EventSet(
        block_labels=[0, 1],
        block_index=np.array([0, 1]),
        times=np.array([0.5, 0.25]),
        magnitudes=np.array([2.0, 3.0]),
        threshold=1.0,
    )
    pp = interarrival_pp(es, n_bootstrap=50, seed=0)
    assert pp.empirical.size == 1
    assert pp.empirical[0] == pytest.approx(0.5)


def test_too_few_events_raises():
    es = EventSet(
        block_labels=[0],
        block_index=np.array([0]),
        times=np.array([0.5]),
        magnitudes=np.array([2.0]),
        threshold=1.0,
    )
    with pytest.raises(TooFewEvents):
        interarrival_pp(es)


def test_model_probabilities_monotone(study_data):
    pp = interarrival_pp(study_data.events, n_bootstrap=100, seed=1)
    assert np.all(np.diff(pp.model) >= 0)


def test_homogeneous_events_stay_inside_band():
    from stormrisk import NhppParams

    outside = []
    for r in range(10):
        es = _simulated_events(NhppParams(0.0, 1.5, 0.1), 40, -1.5, seed=60 + r)
        pp = interarrival_pp(es, n_bootstrap=400, seed=r)
        outside.append(pp.outside.mean())
    assert np.mean(outside) <= 0.07


def test_block_effects_produce_short_interarrival_excess():
    # Strong location effect: too many short gaps relative to the fitted
    # exponential, the signature of local non-stationarity.
    model = RandomEffectsModel(
        mu0=0.0, mu1=2.5, sig0=float(np.log(1.5)), sig1=0.0, xi0=-0.2, xi1=0.0, effect_dims=("mu",)
    )
    hits = 0
    n = 12
    for r in range(n):
        es = _simulated_events(model, 40, -0.55, seed=80 + r)
        pp = interarrival_pp(es, n_bootstrap=100, seed=r)
        i = int(round(0.1 * (pp.empirical.size + 1)))
        hits += pp.empirical[i] > pp.model[i]
    assert hits >= int(0.75 * n)
