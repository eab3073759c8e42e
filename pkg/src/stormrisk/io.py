"""File formats: CSV readers/writers, config files and run manifests.

All CSVs carry a mandatory header row, ISO-8601 dates and plain decimal
points.  Config files and manifests are ``key = value`` lines with ``#``
comments.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .decluster import EventSet, PpDiagnostics, TimeSeries
from .errors import CsvFormatError
from .risk import RiskCurve


def _read_rows(path, required: tuple[str, ...]):
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CsvFormatError(f"{path}: empty file", line=1)
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise CsvFormatError(f"{path}: missing column(s) {', '.join(missing)}", line=1)
        rows = []
        for i, row in enumerate(reader, start=2):
            if all((v is None or v == "") for v in row.values()):
                continue
            rows.append((i, row))
    return rows


def _parse_float(value, path, line, column) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise CsvFormatError(f"{path}: bad {column} value {value!r}", line=line) from None


def read_series_csv(path) -> TimeSeries:
    """Raw gauge series: columns date,value."""
    rows = _read_rows(path, ("date", "value"))
    dates, values = [], []
    for line, row in rows:
        try:
            dates.append(np.datetime64(row["date"], "D"))
        except ValueError:
            raise CsvFormatError(f"{path}: bad date {row['date']!r}", line=line) from None
        values.append(_parse_float(row["value"], path, line, "value"))
    if not dates:
        raise CsvFormatError(f"{path}: no data rows", line=2)
    return TimeSeries(times=np.array(dates), values=np.array(values))


def write_events_csv(es: EventSet, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block", "time_in_block", "magnitude"])
        for bi, t, z in zip(es.block_index, es.times, es.magnitudes):
            writer.writerow([es.block_labels[bi], f"{t:.12g}", f"{z:.12g}"])


def read_events_csv(path, threshold: float, n_blocks: int | None = None) -> EventSet:
    """Event list (block,time_in_block,magnitude).

    Blocks with no events cannot appear in the file; when labels are
    integers the full consecutive label range is restored, and ``n_blocks``
    can extend it explicitly.
    """
    rows = _read_rows(path, ("block", "time_in_block", "magnitude"))
    labels, times, mags = [], [], []
    for line, row in rows:
        labels.append(row["block"])
        times.append(_parse_float(row["time_in_block"], path, line, "time_in_block"))
        mags.append(_parse_float(row["magnitude"], path, line, "magnitude"))
    try:
        as_int = [int(l) for l in labels]
        lo, hi = (min(as_int), max(as_int)) if as_int else (0, -1)
        block_labels = list(range(lo, hi + 1))
        index = [l - lo for l in as_int]
    except ValueError:
        block_labels = sorted(set(labels))
        lookup = {l: i for i, l in enumerate(block_labels)}
        index = [lookup[l] for l in labels]
    if n_blocks is not None:
        if n_blocks < len(block_labels):
            raise CsvFormatError(f"{path}: n_blocks={n_blocks} below the {len(block_labels)} blocks present")
        if block_labels and isinstance(block_labels[0], int):
            block_labels = list(range(block_labels[0], block_labels[0] + n_blocks))
        else:
            block_labels = block_labels + [f"pad{i}" for i in range(n_blocks - len(block_labels))]
    return EventSet(
        block_labels=block_labels,
        block_index=np.array(index, dtype=int),
        times=np.array(times),
        magnitudes=np.array(mags),
        threshold=threshold,
    )


def write_pp_csv(pp: PpDiagnostics, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["empirical", "model", "lower", "upper"])
        for row in zip(pp.empirical, pp.model, pp.lower, pp.upper):
            writer.writerow([f"{v:.12g}" for v in row])


def read_covariates_csv(path) -> dict:
    """Covariate values keyed by block label (columns block,s) or by date
    (columns date,s)."""
    path = Path(path)
    with path.open(newline="") as fh:
        header = csv.DictReader(fh).fieldnames or []
    key = "block" if "block" in header else "date"
    rows = _read_rows(path, (key, "s"))
    out = {}
    for line, row in rows:
        out[row[key]] = _parse_float(row["s"], path, line, "s")
    return out


def read_site_table(path) -> list[dict]:
    """Site table: site,threshold,first_year,last_year."""
    rows = _read_rows(path, ("site", "threshold", "first_year", "last_year"))
    sites = []
    for line, row in rows:
        sites.append(
            {
                "site": row["site"],
                "threshold": _parse_float(row["threshold"], path, line, "threshold"),
                "first_year": int(_parse_float(row["first_year"], path, line, "first_year")),
                "last_year": int(_parse_float(row["last_year"], path, line, "last_year")),
            }
        )
    return sites


def write_risk_csv(curve: RiskCurve, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T_star", "R", "lo95", "hi95", "numerator", "denominator"])
        n = curve.t_star.size
        lo = curve.lower if curve.lower is not None else [np.nan] * n
        hi = curve.upper if curve.upper is not None else [np.nan] * n
        for row in zip(curve.t_star, curve.ratio, lo, hi, curve.numerator, curve.denominator):
            writer.writerow([f"{v:.12g}" for v in row])


def write_params_csv(names, values, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "value"])
        for n, v in zip(names, values):
            writer.writerow([n, f"{v:.17g}"])


def read_params_csv(path) -> dict:
    rows = _read_rows(path, ("name", "value"))
    return {row["name"]: _parse_float(row["value"], path, line, "value") for line, row in rows}


def write_matrix_csv(names, matrix, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name"] + list(names))
        for n, row in zip(names, np.asarray(matrix)):
            writer.writerow([n] + [f"{v:.17g}" for v in row])


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = header[1:]
        rows = [[float(v) for v in row[1:]] for row in reader if row]
    return names, np.array(rows)


def write_posterior_csv(post, path) -> None:
    """One draw per row: coefficients, correlations, then every block effect."""
    effect_cols = [
        f"r_{dim}[{b}]"
        for dim in post.effect_dims
        for b in range(post.effects.shape[1])
    ]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(post.param_names) + effect_cols + ["log_posterior"])
        for i in range(post.n_draws):
            row = list(post.params[i])
            for j in range(len(post.effect_dims)):
                row += list(post.effects[i, :, j])
            row.append(post.log_posterior[i])
            writer.writerow([f"{v:.17g}" for v in row])


def write_manifest(path, entries: dict) -> None:
    with Path(path).open("w") as fh:
        fh.write("# stormrisk run manifest\n")
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")


def parse_config(path) -> dict:
    """One ``key = value`` per line; ``#`` starts a comment."""
    out = {}
    for i, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CsvFormatError(f"{path}: expected 'key = value'", line=i)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
