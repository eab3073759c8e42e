"""Runs-method declustering and inter-arrival diagnostics.

A raw daily series is reduced to independent extreme events: maximal runs
of threshold exceedances separated by fewer than ``w`` below-threshold
days form one cluster, and only each cluster's maximum is kept.  Calendar
gaps count as below-threshold days, so storms are never merged across
missing stretches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewEvents

WATER_YEAR = "water-year"
CALENDAR_YEAR = "calendar"


def _block_label(dates: np.ndarray, rule: str) -> np.ndarray:
    """Block label per date: water years (Oct-Sep, labelled by the ending
    calendar year) or plain calendar years."""
    years = dates.astype("datetime64[Y]").astype(int) + 1970
    if rule == CALENDAR_YEAR:
        return years
    if rule == WATER_YEAR:
        months = dates.astype("datetime64[M]").astype(int) % 12 + 1
        return np.where(months >= 10, years + 1, years)
    raise ValueError(f"unknown block rule {rule!r}")


def _block_start(label: int, rule: str) -> np.datetime64:
    if rule == CALENDAR_YEAR:
        return np.datetime64(f"{label}-01-01")
    return np.datetime64(f"{label - 1}-10-01")


def _block_length_days(label: int, rule: str) -> int:
    nxt = _block_start(label + 1, rule)
    return int((nxt - _block_start(label, rule)).astype(int))


@dataclass
class TimeSeries:
    """Daily gauge record. Dates must be strictly increasing; gaps are
    allowed and treated as below-threshold when declustering."""

    times: np.ndarray
    values: np.ndarray
    block_rule: str = WATER_YEAR

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype="datetime64[D]")
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same length")
        if self.times.size >= 2 and not np.all(np.diff(self.times).astype(int) > 0):
            raise ValueError("times must be strictly increasing")

    def block_of(self) -> np.ndarray:
        return _block_label(self.times, self.block_rule)


@dataclass
class EventSet:
    """Independent extreme events grouped by block.

    ``block_labels`` lists every block spanned by the record (including
    blocks with no events) so the block count survives into likelihoods;
    ``block_index`` points each event into that list.
    """

    block_labels: list
    block_index: np.ndarray
    times: np.ndarray
    magnitudes: np.ndarray
    threshold: float
    run_length: int = 1

    def __post_init__(self):
        self.block_index = np.asarray(self.block_index, dtype=int)
        self.times = np.asarray(self.times, dtype=float)
        self.magnitudes = np.asarray(self.magnitudes, dtype=float)
        if self.magnitudes.size and not np.all(self.magnitudes > self.threshold):
            raise ValueError("all event magnitudes must exceed the threshold")
        if np.any((self.times <= 0.0) | (self.times >= 1.0)):
            raise ValueError("event times must lie strictly inside (0, 1)")

    @property
    def n_blocks(self) -> int:
        return len(self.block_labels)

    @property
    def n_events(self) -> int:
        return self.magnitudes.size

    def events_in_block(self, i: int) -> np.ndarray:
        return self.magnitudes[self.block_index == i]

    def global_times(self) -> np.ndarray:
        """Event times on the concatenated [0, n_blocks] timeline."""
        return np.sort(self.block_index + self.times)


def quantile_threshold(ts: TimeSeries, q: float) -> float:
    """Empirical quantile of the observed values (linear interpolation)."""
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    return float(np.quantile(ts.values, q))


def decluster(ts: TimeSeries, threshold: float, w: int) -> EventSet:
    """Extract one event per cluster of exceedances using the runs method.

    Consecutive exceedances separated by fewer than ``w`` below-threshold
    days (observed or missing) belong to the same cluster; the cluster
    maximum (earliest day on ties) becomes the event.  An exceedance-free
    series yields an empty EventSet.
    """
    if w < 1:
        raise ValueError("run length w must be >= 1")
    day_pos = (ts.times - ts.times[0]).astype("timedelta64[D]").astype(int)
    exceed_idx = np.flatnonzero(ts.values > threshold)

    clusters: list[list[int]] = []
    for idx in exceed_idx:
        if clusters and day_pos[idx] - day_pos[clusters[-1][-1]] - 1 < w:
            clusters[-1].append(idx)
        else:
            clusters.append([idx])

    labels = ts.block_of()
    first, last = int(labels[0]), int(labels[-1])
    block_labels = list(range(first, last + 1))

    block_index, times, magnitudes = [], [], []
    for members in clusters:
        vals = ts.values[members]
        peak = members[int(np.argmax(vals))]
        label = int(labels[peak])
        start = _block_start(label, ts.block_rule)
        offset = int((ts.times[peak] - start).astype(int))
        length = _block_length_days(label, ts.block_rule)
        block_index.append(label - first)
        times.append((offset + 1.0) / (length + 1.0))
        magnitudes.append(float(vals.max()))

    return EventSet(
        block_labels=block_labels,
        block_index=np.array(block_index, dtype=int),
        times=np.array(times, dtype=float),
        magnitudes=np.array(magnitudes, dtype=float),
        threshold=threshold,
        run_length=w,
    )


@dataclass
class PpDiagnostics:
    """P-P comparison of inter-arrival times against a fitted exponential."""

    empirical: np.ndarray
    model: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    rate: float
    n_bootstrap: int
    level: float = 0.95

    @property
    def outside(self) -> np.ndarray:
        return (self.model < self.lower) | (self.model > self.upper)


def interarrival_pp(
    es: EventSet, *, n_bootstrap: int = 1000, level: float = 0.95, seed: int = 0
) -> PpDiagnostics:
    """Inter-arrival exponentiality check on the concatenated timeline.

    Empirical probabilities are plotting positions i/(n+1); model
    probabilities come from an exponential with the MLE rate.  The
    tolerance band is a pointwise parametric bootstrap envelope (the band
    construction is a choice of ours, not prescribed upstream).
    """
    gaps = np.diff(es.global_times())
    if gaps.size < 1 or es.n_events < 2:
        raise TooFewEvents("need at least two events for inter-arrival diagnostics")
    gaps = np.sort(gaps)
    n = gaps.size
    rate = 1.0 / float(np.mean(gaps))
    empirical = np.arange(1, n + 1) / (n + 1.0)
    model = -np.expm1(-rate * gaps)

    rng = np.random.Generator(np.random.Philox(key=seed))
    sims = rng.exponential(scale=1.0 / rate, size=(n_bootstrap, n))
    sims.sort(axis=1)
    boot_rates = 1.0 / sims.mean(axis=1)
    boot_model = -np.expm1(-boot_rates[:, None] * sims)
    alpha = 100.0 * (1.0 - level) / 2.0
    lower = np.percentile(boot_model, alpha, axis=0)
    upper = np.percentile(boot_model, 100.0 - alpha, axis=0)
    return PpDiagnostics(
        empirical=empirical,
        model=model,
        lower=lower,
        upper=upper,
        rate=rate,
        n_bootstrap=n_bootstrap,
        level=level,
    )
