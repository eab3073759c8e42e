"""Command-line pipeline: decluster, fit, return-levels, risk, simulate.

Every run writes a manifest echoing its fully resolved configuration, so
outputs are reproducible byte-for-byte given the same config and seed
(manifest timestamps aside).  Exit codes: 0 success, 2 input error,
3 empty or degenerate result, 4 numerical warning state.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, io
from .covariate import CovariateNhpp, fit_covariate, kde, return_level_covariate
from .decluster import decluster, interarrival_pp, quantile_threshold
from .errors import (
    BracketFailure,
    ChainStuck,
    CsvFormatError,
    DegenerateSample,
    NonConvergence,
    StormriskError,
    TooFewEvents,
)
from .evt import NhppParams, ThresholdedData, fit_gev_maxima, fit_stationary, return_level_stationary
from .random_effects import (
    McmcConfig,
    PosteriorSamples,
    RandomEffectsModel,
    RegionalModel,
    SiteData,
    block_return_level,
    fit_bayes,
    marginal_return_level,
)
from .risk import RiskQuery, default_t_star_grid, risk_measure_cov, risk_measure_re
from .simulate import SimDesign, simulate_design

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EMPTY = 3
EXIT_NUMERIC = 4


def _resolve_seed(args, cfg: dict) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get("STORMRISK_SEED")
    return int(env) if env else 0


def _load_config(args) -> dict:
    return io.parse_config(args.config) if getattr(args, "config", None) else {}


def _manifest(path_stem: str, entries: dict, status: str = "ok") -> None:
    entries = {"version": __version__, "status": status, **entries,
               "written_at": time.strftime("%Y-%m-%dT%H:%M:%S")}
    io.write_manifest(f"{path_stem}.manifest.txt", entries)


# ---------------------------------------------------------------------------


def cmd_decluster(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(args, cfg)
    if (args.threshold is None) == (args.threshold_quantile is None):
        print("decluster: give exactly one of --threshold / --threshold-quantile", file=sys.stderr)
        return EXIT_INPUT
    ts = io.read_series_csv(args.input)
    ts.block_rule = args.block_rule
    u = args.threshold if args.threshold is not None else quantile_threshold(ts, args.threshold_quantile)
    es = decluster(ts, u, args.run_length)
    io.write_events_csv(es, args.output)
    stem = str(Path(args.output).with_suffix(""))
    entries = {
        "command": "decluster",
        "input": args.input,
        "threshold": u,
        "threshold_quantile": args.threshold_quantile,
        "run_length": args.run_length,
        "block_rule": args.block_rule,
        "n_events": es.n_events,
        "n_blocks": es.n_blocks,
        "seed": seed,
    }
    if es.n_events == 0:
        _manifest(stem, entries, status="empty")
        print("decluster: no exceedances above the threshold", file=sys.stderr)
        return EXIT_EMPTY
    if args.diagnostics:
        try:
            pp = interarrival_pp(es, seed=seed)
            io.write_pp_csv(pp, args.diagnostics)
            entries["diagnostics"] = args.diagnostics
        except TooFewEvents:
            entries["diagnostics"] = "skipped: fewer than two events"
    _manifest(stem, entries)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _events_covariates(args, es):
    cov_map = io.read_covariates_csv(args.covariates)
    try:
        s_block = np.array([cov_map[str(lbl)] for lbl in es.block_labels])
    except KeyError as exc:
        raise CsvFormatError(f"covariate file lacks a value for block {exc}") from None
    return s_block


def _mcmc_config(args, cfg, seed) -> McmcConfig:
    return McmcConfig(
        iterations=args.iterations if args.iterations is not None else int(cfg.get("iterations", 200_000)),
        burn_in=args.burn_in if args.burn_in is not None else int(cfg.get("burn_in", 50_000)),
        thinning=args.thinning if args.thinning is not None else int(cfg.get("thinning", 10)),
        seed=seed,
    )


def _effect_dims(raw: str) -> tuple[str, ...]:
    return tuple(d.strip() for d in raw.split(",") if d.strip())


def _stationary_skeleton(site: SiteData, effect_dims, seed) -> RandomEffectsModel:
    data = ThresholdedData(site.magnitudes, site.threshold, site.n_blocks)
    p = fit_stationary(data, seed=seed).params
    return RandomEffectsModel(
        mu0=p.mu,
        mu1=0.5 * p.sigma if "mu" in effect_dims else 0.0,
        sig0=float(np.log(p.sigma)),
        sig1=0.1 if "sigma" in effect_dims else 0.0,
        xi0=float(np.clip(p.xi, -0.45, 0.45)),
        xi1=0.1 if "xi" in effect_dims else 0.0,
        effect_dims=effect_dims,
    )


def _write_posterior_artifact(post: PosteriorSamples, args, entries, status) -> None:
    prefix = args.output
    io.write_posterior_csv(post, f"{prefix}.posterior.csv")
    acc = np.array(list(post.acceptance.values()))
    entries.update(
        {
            "posterior": f"{prefix}.posterior.csv",
            "effect_dims": ",".join(post.effect_dims),
            "n_sites": post.n_sites,
            "n_blocks": post.effects.shape[1],
            "thresholds": ",".join(f"{u:.12g}" for u in post.skeleton.thresholds),
            "iterations": post.burn_in + post.n_draws * post.thinning,
            "burn_in": post.burn_in,
            "thinning": post.thinning,
            "acceptance_min": f"{acc.min():.4f}",
            "acceptance_max": f"{acc.max():.4f}",
        }
    )
    _manifest(prefix, entries, status=status)


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(args, cfg)
    prefix = args.output
    entries = {"command": "fit", "model": args.model, "seed": seed}
    status = "ok"

    if args.model in ("stationary", "covariate", "random-effects"):
        if not args.events or args.threshold is None:
            print("fit: this model needs --events and --threshold", file=sys.stderr)
            return EXIT_INPUT

    if args.model in ("stationary", "covariate"):
        es = io.read_events_csv(args.events, threshold=args.threshold, n_blocks=args.n_blocks)
        entries.update({"events": args.events, "threshold": args.threshold, "n_blocks": es.n_blocks})

    if args.model == "stationary":
        data = ThresholdedData(es.magnitudes, args.threshold, es.n_blocks)
        try:
            fit = fit_stationary(data, seed=seed)
        except NonConvergence as exc:
            _manifest(prefix, entries, status=f"nonconvergence: {exc}")
            print(f"fit: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        p = fit.params
        io.write_params_csv(["mu", "sigma", "xi"], [p.mu, p.sigma, p.xi], f"{prefix}.params.csv")
        if fit.covariance is not None:
            io.write_matrix_csv(["mu", "sigma", "xi"], fit.covariance, f"{prefix}.cov.csv")
        else:
            status = "degenerate-hessian"
        entries["nll"] = f"{fit.nll:.6f}"
        _manifest(prefix, entries, status=status)
        return EXIT_OK

    if args.model == "covariate":
        if not args.covariates:
            print("fit: covariate model needs --covariates", file=sys.stderr)
            return EXIT_INPUT
        s_block = _events_covariates(args, es)
        s_events = s_block[es.block_index]
        density = kde(s_block)
        per_block = args.covariate_mode == "per-block"
        try:
            fit = fit_covariate(
                es.magnitudes,
                s_block if per_block else s_events,
                args.threshold,
                es.n_blocks,
                density,
                per_block=per_block,
                block_index=es.block_index if per_block else None,
                seed=seed,
            )
        except NonConvergence as exc:
            _manifest(prefix, entries, status=f"nonconvergence: {exc}")
            print(f"fit: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        names = ["mu0", "mu1", "sig0", "sig1", "xi0", "xi1"]
        io.write_params_csv(names, fit.params.coefficients(), f"{prefix}.params.csv")
        if fit.covariance is not None:
            io.write_matrix_csv(names, fit.covariance, f"{prefix}.cov.csv")
        else:
            status = "degenerate-hessian"
        with open(f"{prefix}.h_sample.csv", "w") as fh:
            fh.write("s\n" + "\n".join(f"{v:.12g}" for v in s_block) + "\n")
        entries.update({"covariates": args.covariates, "covariate_mode": args.covariate_mode,
                        "nll": f"{fit.nll:.6f}"})
        _manifest(prefix, entries, status=status)
        return EXIT_OK

    # Bayesian variants.
    dims = _effect_dims(args.effects)
    mcmc = _mcmc_config(args, cfg, seed)
    entries.update({"effects": ",".join(dims)})

    if args.model == "random-effects":
        es = io.read_events_csv(args.events, threshold=args.threshold, n_blocks=args.n_blocks)
        site = SiteData.from_event_set(es)
        skeleton = _stationary_skeleton(site, dims, seed)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ChainStuck)
            post = fit_bayes(site, skeleton, config=mcmc)
        entries.update({"events": args.events, "threshold": args.threshold})
        stuck = [w for w in caught if issubclass(w.category, ChainStuck)]
        status = "chain-stuck" if stuck else "ok"
        _write_posterior_artifact(post, args, entries, status)
        return EXIT_NUMERIC if stuck else EXIT_OK

    if args.model == "regional":
        if not args.sites or not args.events_dir:
            print("fit: regional model needs --sites and --events-dir", file=sys.stderr)
            return EXIT_INPUT
        table = io.read_site_table(args.sites)
        first = min(row["first_year"] for row in table)
        last = max(row["last_year"] for row in table)
        n_blocks = last - first + 1
        sites, intercepts, thresholds = [], [], []
        for row in table:
            es = io.read_events_csv(
                Path(args.events_dir) / f"{row['site']}.csv", threshold=row["threshold"]
            )
            idx = np.array([int(es.block_labels[i]) - first for i in es.block_index])
            recorded = np.zeros(n_blocks, dtype=bool)
            recorded[row["first_year"] - first : row["last_year"] - first + 1] = True
            site = SiteData(
                magnitudes=es.magnitudes,
                block_index=idx,
                n_blocks=n_blocks,
                threshold=row["threshold"],
                recorded=recorded,
            )
            sites.append(site)
            sk = _stationary_skeleton(site, dims, seed)
            intercepts.append([sk.mu0, sk.sig0, sk.xi0])
            thresholds.append(row["threshold"])
        ref = _stationary_skeleton(sites[0], dims, seed)
        skeleton = RegionalModel(
            intercepts=np.array(intercepts),
            mu1=ref.mu1,
            sig1=ref.sig1,
            xi1=ref.xi1,
            thresholds=np.array(thresholds),
            effect_dims=dims,
        )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ChainStuck)
            post = fit_bayes(sites, skeleton, config=mcmc)
        entries.update({"sites": args.sites, "first_year": first, "last_year": last})
        stuck = [w for w in caught if issubclass(w.category, ChainStuck)]
        status = "chain-stuck" if stuck else "ok"
        _write_posterior_artifact(post, args, entries, status)
        return EXIT_NUMERIC if stuck else EXIT_OK

    print(f"fit: unknown model {args.model!r}", file=sys.stderr)
    return EXIT_INPUT


# ---------------------------------------------------------------------------


def _load_fit(prefix: str) -> dict:
    manifest = io.parse_config(f"{prefix}.manifest.txt")
    model = manifest["model"]
    out = {"model": model, "manifest": manifest}
    if model == "stationary":
        p = io.read_params_csv(f"{prefix}.params.csv")
        out["params"] = NhppParams(mu=p["mu"], sigma=p["sigma"], xi=p["xi"])
    elif model == "covariate":
        p = io.read_params_csv(f"{prefix}.params.csv")
        out["params"] = CovariateNhpp.from_coefficients(
            [p[n] for n in ("mu0", "mu1", "sig0", "sig1", "xi0", "xi1")]
        )
        sample = np.loadtxt(f"{prefix}.h_sample.csv", skiprows=1, ndmin=1)
        out["density"] = kde(sample)
        cov_path = Path(f"{prefix}.cov.csv")
        out["cov"] = io.read_matrix_csv(cov_path)[1] if cov_path.exists() else None
    else:
        dims = _effect_dims(manifest["effect_dims"])
        thresholds = np.array([float(v) for v in manifest["thresholds"].split(",")])
        out["posterior"] = _read_posterior(f"{prefix}.posterior.csv", dims, thresholds, manifest)
    return out


def _read_posterior(path, dims, thresholds, manifest) -> PosteriorSamples:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    eff_cols = [i for i, n in enumerate(header) if n.startswith("r_")]
    par_cols = [i for i, n in enumerate(header) if not n.startswith("r_") and n != "log_posterior"]
    lp_col = header.index("log_posterior")
    n_blocks = int(manifest["n_blocks"])
    k = len(dims)
    effects = data[:, eff_cols].reshape(-1, k, n_blocks).transpose(0, 2, 1)
    names = [header[i] for i in par_cols]
    n_sites = len(thresholds)
    intercepts = np.empty((n_sites, 3))
    for d in range(n_sites):
        suffix = "" if n_sites == 1 else f"_{d}"
        intercepts[d] = [
            data[0, names.index("mu0" + suffix)],
            data[0, names.index("sig0" + suffix)],
            data[0, names.index("xi0" + suffix)],
        ]
    slopes = {"mu": 0.0, "sigma": 0.0, "xi": 0.0}
    for dim, nm in (("mu", "mu1"), ("sigma", "sig1"), ("xi", "xi1")):
        if nm in names:
            slopes[dim] = data[0, names.index(nm)]
    skeleton = RegionalModel(
        intercepts=intercepts,
        mu1=slopes["mu"],
        sig1=slopes["sigma"],
        xi1=slopes["xi"],
        thresholds=thresholds,
        effect_dims=dims,
    )
    return PosteriorSamples(
        param_names=names,
        params=data[:, par_cols],
        effects=effects,
        effect_dims=dims,
        log_posterior=data[:, lp_col],
        acceptance={},
        burn_in=int(manifest.get("burn_in", 0)),
        thinning=int(manifest.get("thinning", 1)),
        seed=int(manifest.get("seed", 0)),
        skeleton=skeleton,
    )


def cmd_return_levels(args) -> int:
    fit = _load_fit(args.fit)
    periods = [float(v) for v in args.T.split(",")]
    rows: list[list] = []
    header = ["T", "z_T"]
    model = fit["model"]

    if model == "stationary":
        for T in periods:
            rows.append([T, return_level_stationary(T, fit["params"])])
    elif model == "covariate":
        for T in periods:
            rows.append([T, return_level_covariate(T, fit["params"], fit["density"])])
    else:
        post = fit["posterior"]
        mean_model, mean_effects = post.mean_model()
        site_model = mean_model.site_model(args.site)
        if args.mode == "block":
            header += [f"block_{i}" for i in range(mean_effects.shape[0])]
            for T in periods:
                row = [T, marginal_return_level(T, site_model)]
                row += [block_return_level(T, site_model, r) for r in mean_effects]
                rows.append(row)
        else:
            for T in periods:
                rows.append([T, marginal_return_level(T, site_model)])

    if args.compare_iid_gev:
        if not args.annual_maxima:
            print("return-levels: --compare-iid-gev needs --annual-maxima", file=sys.stderr)
            return EXIT_INPUT
        maxima = np.loadtxt(args.annual_maxima, delimiter=",", skiprows=1, ndmin=2)[:, 1]
        gev = fit_gev_maxima(maxima).params
        header.append("z_T_iid_gev")
        for row in rows:
            row.append(return_level_stationary(row[0], gev))

    import csv as _csv

    with open(args.output, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.12g}" for v in row])
    _manifest(str(Path(args.output).with_suffix("")), {"command": "return-levels", "fit": args.fit,
                                                       "T": args.T, "mode": args.mode})
    return EXIT_OK


def _parse_grid(raw: str) -> np.ndarray:
    if ":" in raw:
        lo, hi, n = raw.split(":")
        return default_t_star_grid(float(lo), float(hi), int(n))
    return np.array([float(v) for v in raw.split(",")])


def cmd_risk(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(args, cfg)
    fit = _load_fit(args.fit)
    grid = _parse_grid(args.tstar_grid)
    if fit["model"] == "stationary":
        print("risk: a stationary fit has no short-term risk update (R = 1)", file=sys.stderr)
        return EXIT_INPUT
    if fit["model"] == "covariate":
        query = RiskQuery(
            t=args.t,
            T=args.T,
            t_star_grid=grid,
            covariate_model=fit["params"],
            covariate_density=fit["density"],
            coef_cov=fit["cov"],
            band_draws=args.bands,
            seed=seed,
        )
        curve = risk_measure_cov(query)
    else:
        query = RiskQuery(
            t=args.t,
            T=args.T,
            t_star_grid=grid,
            posterior=fit["posterior"],
            site=args.site,
            band_draws=args.bands,
            seed=seed,
        )
        curve = risk_measure_re(query)
    io.write_risk_csv(curve, args.output)
    _manifest(str(Path(args.output).with_suffix("")), {
        "command": "risk", "fit": args.fit, "t": args.t, "T": args.T,
        "tstar_grid": args.tstar_grid, "bands": args.bands, "seed": seed,
        "n_undefined": int(np.sum(curve.undefined)),
    })
    return EXIT_OK


# ---------------------------------------------------------------------------


def _model_from_config(cfg: dict):
    kind = cfg.get("model", "stationary")
    g = lambda key, default=0.0: float(cfg.get(key, default))
    if kind == "stationary":
        return NhppParams(mu=g("mu"), sigma=g("sigma", 1.0), xi=g("xi"))
    if kind == "covariate":
        return CovariateNhpp(mu0=g("mu0"), mu1=g("mu1"), sig0=g("sig0"), sig1=g("sig1"),
                             xi0=g("xi0"), xi1=g("xi1"))
    dims = _effect_dims(cfg.get("effects", "mu,sigma"))
    corr = _correlation_from_config(cfg, dims)
    if kind == "random-effects":
        return RandomEffectsModel(mu0=g("mu0"), mu1=g("mu1"), sig0=g("sig0"), sig1=g("sig1"),
                                  xi0=g("xi0"), xi1=g("xi1"), effect_dims=dims, correlation=corr)
    if kind == "regional":
        n_sites = int(cfg["n_sites"])
        intercepts = [[g(f"mu0_{d}"), g(f"sig0_{d}"), g(f"xi0_{d}")] for d in range(n_sites)]
        thresholds = [g(f"threshold_{d}") for d in range(n_sites)]
        return RegionalModel(intercepts=np.array(intercepts), mu1=g("mu1"), sig1=g("sig1"),
                             xi1=g("xi1"), thresholds=np.array(thresholds),
                             effect_dims=dims, correlation=corr)
    raise ValueError(f"unknown model kind {kind!r}")


def _correlation_from_config(cfg: dict, dims) -> np.ndarray | None:
    k = len(dims)
    if k == 1:
        return None
    corr = np.eye(k)
    pair_keys = {("mu", "sigma"): "rho_mu_sigma", ("mu", "xi"): "rho_mu_xi", ("sigma", "xi"): "rho_sigma_xi"}
    for a in range(k):
        for b in range(a + 1, k):
            key = pair_keys[(dims[a], dims[b])]
            val = cfg.get(key, cfg.get("rho", 0.0) if k == 2 else 0.0)
            corr[a, b] = corr[b, a] = float(val)
    return corr


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(args, cfg)
    model = _model_from_config(cfg)
    design = SimDesign(
        model=model,
        n_blocks=int(cfg["n_blocks"]),
        threshold=float(cfg["threshold"]) if "threshold" in cfg else None,
        events_per_block=float(cfg["events_per_block"]) if "events_per_block" in cfg else None,
        n_replicates=int(cfg.get("replicates", 1)),
        seed=seed,
    )
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    reps = simulate_design(design)
    for rep in reps:
        tag = "" if design.n_replicates == 1 else f"_r{rep.replicate:03d}"
        if hasattr(rep, "sites"):
            for d, es in enumerate(rep.sites):
                io.write_events_csv(es, outdir / f"events_site{d}{tag}.csv")
            np.savetxt(outdir / f"effects{tag}.csv", rep.effects, delimiter=",",
                       header=",".join(f"r_{d}" for d in model.effect_dims), comments="")
        else:
            io.write_events_csv(rep.events, outdir / f"events{tag}.csv")
            if rep.covariates is not None:
                with open(outdir / f"covariates{tag}.csv", "w") as fh:
                    fh.write("block,s\n")
                    for lbl, s in zip(rep.events.block_labels, rep.covariates):
                        fh.write(f"{lbl},{s:.12g}\n")
            if rep.effects is not None:
                np.savetxt(outdir / f"effects{tag}.csv", rep.effects, delimiter=",",
                           header=",".join(f"r_{d}" for d in model.effect_dims), comments="")
            with open(outdir / f"block_maxima{tag}.csv", "w") as fh:
                fh.write("block,max\n")
                for lbl, m in zip(rep.events.block_labels, rep.block_maxima):
                    fh.write(f"{lbl},{m:.12g}\n")
    entries = {"command": "simulate", "seed": seed, **cfg}
    _manifest(str(outdir / "design"), entries)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stormrisk", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decluster", help="extract independent events with the runs method")
    p.add_argument("--input", required=True, help="raw series CSV (date,value)")
    p.add_argument("--threshold", type=float)
    p.add_argument("--threshold-quantile", type=float, default=None,
                   help="empirical quantile level (default if neither given: 0.97)")
    p.add_argument("--run-length", type=int, default=7)
    p.add_argument("--block-rule", choices=["water-year", "calendar"], default="water-year")
    p.add_argument("--output", required=True, help="events CSV")
    p.add_argument("--diagnostics", help="inter-arrival P-P table CSV")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_decluster)

    p = sub.add_parser("fit", help="fit a model to declustered events")
    p.add_argument("--model", required=True,
                   choices=["stationary", "covariate", "random-effects", "regional"])
    p.add_argument("--events", help="events CSV")
    p.add_argument("--threshold", type=float)
    p.add_argument("--n-blocks", type=int, help="override block count (empty blocks are invisible in CSV)")
    p.add_argument("--covariates", help="covariate CSV (block,s)")
    p.add_argument("--covariate-mode", choices=["per-obs", "per-block"], default="per-block")
    p.add_argument("--effects", default="mu,sigma", help="effect dimensions, e.g. mu,sigma")
    p.add_argument("--sites", help="site table CSV (regional)")
    p.add_argument("--events-dir", help="directory of <site>.csv event files (regional)")
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thinning", type=int)
    p.add_argument("--output", required=True, help="output path prefix")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("return-levels", help="return levels from a fit artifact")
    p.add_argument("--fit", required=True, help="fit output prefix")
    p.add_argument("--T", required=True, help="comma-separated return periods")
    p.add_argument("--mode", choices=["marginal", "block"], default="marginal")
    p.add_argument("--site", type=int, default=0)
    p.add_argument("--compare-iid-gev", action="store_true")
    p.add_argument("--annual-maxima", help="CSV (block,max) for the iid GEV baseline")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_return_levels)

    p = sub.add_parser("risk", help="short-term risk curve from a fit artifact")
    p.add_argument("--fit", required=True)
    p.add_argument("--t", type=float, required=True, help="event time within the season, in (0,1)")
    p.add_argument("--T", type=float, required=True, help="conditioning return period")
    p.add_argument("--tstar-grid", default="1.5:1000:50", help="lo:hi:n (log-spaced) or comma list")
    p.add_argument("--bands", type=int, default=500, help="uncertainty draws (0 disables)")
    p.add_argument("--site", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("simulate", help="generate synthetic datasets from a design config")
    p.add_argument("--config", required=True, help="design config (key = value lines)")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "decluster" and args.threshold is None and args.threshold_quantile is None:
        args.threshold_quantile = 0.97
    try:
        return args.func(args)
    except CsvFormatError as exc:
        print(f"stormrisk: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"stormrisk: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateSample, TooFewEvents) as exc:
        print(f"stormrisk: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (NonConvergence, BracketFailure) as exc:
        print(f"stormrisk: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except StormriskError as exc:
        print(f"stormrisk: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
