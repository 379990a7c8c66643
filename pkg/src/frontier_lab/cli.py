"""Command-line front end: scenario dispatch, persistence, reproducibility.

Every run writes a results file (CSV by default, JSON mirroring the same
columns) plus a sidecar manifest with the config echo, seed, code version,
and wall time; rerunning with the same seed and config produces a byte
identical results file. Exit codes: 0 success, 2 invalid config, 3 budget
exceeded (partial results flagged in the manifest), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Dict, List, Tuple

import numpy as np

from . import __version__
from .config import (
    EXPERIMENTS,
    ExperimentConfig,
    canonical_text,
    from_mapping,
    parse_config_text,
    validate,
)
from .curves import DISPLACEMENT_CRITICAL, make_curves
from .engine import correlated_pair_estimate, simulate_population, TubeScenario, \
    single_particle_tube_weights
from .errors import ConfigError, FrontierLabError
from .estimators import (
    ExperimentResult,
    MCEstimate,
    displacement_quantiles,
    jaffuel_survival,
    lambda_tail,
    many_to_one_check,
    neveu_summary,
    tail_slope_fit,
    worker_count,
)
from .stochastic_kernels import derive_key
from .tube_analytics import fixed_tube_probability, top_window_shape

A = DISPLACEMENT_CRITICAL


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _run_lambda_tail(cfg: ExperimentConfig):
    table = lambda_tail(cfg.t, list(cfg.z), cfg.replicas, cfg.seed,
                        dt=cfg.effective_dt(), workers=cfg.workers)
    columns = ("z", "p_hat", "stderr", "ci_lo", "ci_hi", "shape")
    rows = [(r.z, r.p_hat.value, r.p_hat.stderr, r.p_hat.ci95[0],
             r.p_hat.ci95[1], r.shape) for r in table.rows]
    preds: Dict[str, float] = {"reference_slope": -math.sqrt(2.0)}
    try:
        slope, intercept, r2 = tail_slope_fit(table)
        preds.update({"fit_slope": slope, "fit_intercept": intercept, "fit_r2": r2})
    except FrontierLabError:
        pass
    return columns, rows, preds, 0


def _run_jaffuel(cfg: ExperimentConfig):
    est = jaffuel_survival(cfg.t, cfg.replicas, cfg.seed, dt=cfg.effective_dt(),
                           workers=cfg.workers)
    columns = ("t", "replicas", "p_hat", "stderr", "ci_lo", "ci_hi")
    rows = [(cfg.t, cfg.replicas, est.value, est.stderr, est.ci95[0], est.ci95[1])]
    return columns, rows, {}, 0


def _run_neveu(cfg: ExperimentConfig):
    out = neveu_summary(list(cfg.y), cfg.replicas, cfg.seed, dt=cfg.effective_dt(),
                        workers=cfg.workers)
    columns = ("kind", "y_from", "y_to", "t", "median", "q25", "q75", "diagnostic")
    rows: List[Tuple] = []
    for r in out["rows"]:
        rows.append(("statistic", r["y"], r["y"], r["t"], r["median"],
                     r["q25"], r["q75"], r["max_over_median"]))
    for r in out["ratios"]:
        rows.append(("ratio", r["y_from"], r["y_to"], float("nan"), r["median"],
                     r["q25"], r["q75"], float(r["n"])))
    return columns, rows, {}, 0


def _run_moment_check(cfg: ExperimentConfig):
    columns = ("check", "t", "z", "u", "m", "n", "estimate", "stderr",
               "prediction", "prediction_stderr", "zscore")
    rows: List[Tuple] = []
    budget = 0
    zval = cfg.z[0] if cfg.z else 1.0
    if cfg.u is not None:
        singles = cfg.single_replicas or 10 * cfg.replicas
        pop, pred, zs = many_to_one_check(cfg.t, zval, cfg.u, cfg.replicas,
                                          singles, cfg.seed, dt=cfg.effective_dt(),
                                          workers=cfg.workers)
        rows.append(("many-to-one", cfg.t, zval, cfg.u, float("nan"), float("nan"),
                     pop.value, pop.stderr, pred.value, pred.stderr, zs))
    if cfg.pair_m is not None:
        est = correlated_pair_estimate(cfg.t, zval, cfg.pair_m, cfg.pair_n,
                                       max(cfg.replicas, 2), cfg.seed,
                                       dt=cfg.effective_dt())
        f, L = make_curves("horizon_tube", t=cfg.t, z=zval)
        scen = TubeScenario(lower=f, width=L, horizon=cfg.pair_n,
                            dt=cfg.effective_dt(),
                            observation_times=(cfg.pair_m, cfg.pair_n)
                            if cfg.pair_n > cfg.pair_m else (cfg.pair_m,),
                            population_cap=1_000_000)
        res = simulate_population(scen, cfg.seed + 1, range(cfg.replicas))
        prod = (res.top_window_counts[cfg.pair_m].astype(float)
                * res.top_window_counts[cfg.pair_n].astype(float))
        direct = MCEstimate.from_samples(prod, cfg.seed + 1)
        budget += int(res.budget_exceeded.sum())
        denom = math.hypot(est.stderr, direct.stderr)
        zs = (est.value - direct.value) / denom if denom > 0 else 0.0
        rows.append(("pair-moment", cfg.t, zval, float("nan"), cfg.pair_m,
                     cfg.pair_n, est.value, est.stderr, direct.value,
                     direct.stderr, zs))
    return columns, rows, {}, budget


def _run_feller(cfg: ExperimentConfig):
    t = cfg.t if cfg.t is not None else 1.0
    exact = fixed_tube_probability(0.0, t, -1.0, 1.0)
    from .curves import Constant, Curve

    floor = Curve([Constant(-1.0)])
    width = Curve([Constant(2.0)])
    dt = cfg.effective_dt()
    chunk = 200_000
    total_w = 0.0
    total_w2 = 0.0
    for lo in range(0, cfg.replicas, chunk):
        n = min(chunk, cfg.replicas - lo)
        keys = derive_key(cfg.seed, 0xFE11E4, np.arange(lo, lo + n, dtype=np.uint64))
        _, w = single_particle_tube_weights(floor, width, keys, 0.0, t, dt, 0.0)
        total_w += float(w.sum())
        total_w2 += float((w * w).sum())
    mc = total_w / cfg.replicas
    var = max(total_w2 / cfg.replicas - mc * mc, 0.0)
    se = math.sqrt(var / cfg.replicas)
    zscore = (mc - exact) / se if se > 0 else 0.0
    columns = ("t", "dt", "replicas", "mc", "stderr", "exact", "zscore")
    rows = [(t, dt, cfg.replicas, mc, se, exact, zscore)]
    return columns, rows, {"exact_series": exact}, 0


def _run_tube_prob(cfg: ExperimentConfig):
    # the raw single-path probability decays exponentially along the tube,
    # so it is estimated through the population: mean top-window count over
    # replicas times e^-s is unbiased for the one-path probability
    zval = cfg.z[0]
    f, L = make_curves("horizon_tube", t=cfg.t, z=zval)
    dt = cfg.effective_dt()
    columns = ("t", "z", "s", "y", "p_hat", "stderr", "shape", "ratio")
    rows = []
    budget = 0
    y = 1.0
    for s in cfg.s:
        s = round(s / dt) * dt
        scen = TubeScenario(lower=f, width=L, horizon=s, dt=dt,
                            observation_times=(s,), population_cap=1_000_000)
        res = simulate_population(scen, cfg.seed, range(cfg.replicas))
        budget += int(res.budget_exceeded.sum())
        counts = res.top_window_counts[s].astype(float)
        p = float(counts.mean()) * math.exp(-s)
        se = float(counts.std(ddof=1)) / math.sqrt(cfg.replicas) * math.exp(-s)
        shape = top_window_shape(cfg.t, zval, s, y)
        rows.append((cfg.t, zval, s, y, p, se, shape,
                     p / shape if shape > 0 else float("nan")))
    return columns, rows, {}, budget


def _run_lambda_location(cfg: ExperimentConfig):
    columns = ("t", "median", "q25", "q75", "offset_vs_critical",
               "censored_fraction", "critical_location")
    rows = []
    for t in cfg.ts:
        q = displacement_quantiles(t, cfg.replicas, cfg.seed,
                                   dt=cfg.effective_dt(), workers=cfg.workers)
        rows.append((t, q["median"], q["q25"], q["q75"],
                     q["offset_vs_critical"], q["censored_fraction"],
                     A * t ** (1.0 / 3.0)))
    return columns, rows, {}, 0


_RUNNERS = {
    "lambda-tail": _run_lambda_tail,
    "jaffuel-survival": _run_jaffuel,
    "neveu": _run_neveu,
    "moment-check": _run_moment_check,
    "feller-validate": _run_feller,
    "tube-prob": _run_tube_prob,
    "lambda-location": _run_lambda_location,
}


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _write_outputs(cfg: ExperimentConfig, result: ExperimentResult,
                   wall_time: float, budget: int) -> None:
    columns, rows, preds = result.columns, result.rows, result.predictions
    manifest = {
        "config": {k: v for k, v in sorted(json.loads(json.dumps({
            f: getattr(cfg, f) for f in (
                "experiment", "seed", "replicas", "dt", "t", "z", "y", "s",
                "ts", "u", "pair_m", "pair_n", "single_replicas", "workers",
                "out", "format")
        })).items()) if v not in (None, [], "")},
        "config_canonical": canonical_text(cfg),
        "code_version": __version__,
        "wall_time_s": round(wall_time, 3),
        "budget_exceeded_replicas": budget,
        "predictions": preds,
    }
    if cfg.format == "csv":
        with open(cfg.out, "w") as fh:
            fh.write(_csv_text(columns, rows))
        with open(cfg.out + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        payload = {
            "columns": list(columns),
            "rows": [list(r) for r in rows],
            "manifest": manifest,
        }
        with open(cfg.out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frontier-lab",
        description="Branching Brownian motion frontier experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", metavar="EXPERIMENT")
    helptexts = {
        "tube-prob": "single-path tube probability against its predicted "
                     "shape; CSV columns t,z,s,y,p_hat,stderr,shape,ratio",
        "lambda-tail": "displacement tail P(disp <= a t^(1/3) - z); CSV "
                       "columns z,p_hat,stderr,ci_lo,ci_hi,shape",
        "jaffuel-survival": "survival above the critical barrier; CSV "
                            "columns t,replicas,p_hat,stderr,ci_lo,ci_hi",
        "neveu": "absorbed-count statistics at lines sqrt2 u - y; CSV "
                 "columns kind,y_from,y_to,t,median,q25,q75,diagnostic",
        "moment-check": "many-to-one and pair-moment consistency checks; "
                        "CSV columns check,t,z,u,m,n,estimate,stderr,"
                        "prediction,prediction_stderr,zscore",
        "feller-validate": "fixed-tube Monte Carlo against the exact series; "
                           "CSV columns t,dt,replicas,mc,stderr,exact,zscore",
        "lambda-location": "median displacement location versus a t^(1/3); "
                           "CSV columns t,median,q25,q75,offset_vs_critical,"
                           "censored_fraction,critical_location",
    }
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=helptexts[name], description=helptexts[name])
        p.add_argument("--config", help="plain-text config file; flags override")
        p.add_argument("--seed", type=int)
        p.add_argument("--replicas", type=int)
        p.add_argument("--single-replicas", type=int, dest="single_replicas")
        p.add_argument("--dt", type=float)
        p.add_argument("--t", type=float)
        p.add_argument("--u", type=float)
        p.add_argument("--pair-m", type=float, dest="pair_m")
        p.add_argument("--pair-n", type=float, dest="pair_n")
        p.add_argument("--z", type=str, help="comma-separated list")
        p.add_argument("--y", type=str, help="comma-separated list")
        p.add_argument("--s", type=str, help="comma-separated list")
        p.add_argument("--ts", type=str, help="comma-separated list")
        p.add_argument("--out", type=str)
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--workers", type=int,
                       help="worker cap (FRONTIER_LAB_THREADS also applies)")
        p.add_argument("--validate-only", action="store_true")
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    mapping: Dict[str, object] = {}
    if args.config:
        with open(args.config) as fh:
            mapping.update(parse_config_text(fh.read()))
    mapping["experiment"] = args.experiment
    for key in ("seed", "replicas", "single_replicas", "dt", "t", "u",
                "pair_m", "pair_n", "out", "format", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            mapping[key] = val
    for key in ("z", "y", "s", "ts"):
        raw = getattr(args, key, None)
        if raw is not None:
            mapping[key] = tuple(float(x) for x in str(raw).split(","))
    return from_mapping(mapping)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.experiment is None:
        parser.print_help()
        return 2
    try:
        cfg = _config_from_args(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    violations = validate(cfg)
    if violations:
        for v in violations:
            print(f"invalid config: {v}", file=sys.stderr)
        return 2
    if args.validate_only:
        print("config OK")
        return 0
    start = time.time()
    try:
        columns, rows, preds, budget = _RUNNERS[cfg.experiment](cfg)
    except FrontierLabError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    wall = time.time() - start
    result = ExperimentResult(
        experiment=cfg.experiment,
        params={k: getattr(cfg, k) for k in
                ("seed", "replicas", "t", "u", "pair_m", "pair_n")
                if getattr(cfg, k) is not None},
        columns=tuple(columns),
        rows=list(rows),
        predictions=preds,
        seed=cfg.seed,
    )
    try:
        _write_outputs(cfg, result, wall, budget)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    print(f"{cfg.experiment}: wrote {cfg.out} ({len(result.rows)} rows, "
          f"{wall:.1f}s, workers<={worker_count(cfg.workers)})")
    if budget > 0:
        print(f"warning: {budget} replicas exceeded the population budget; "
              "results are partial and flagged in the manifest", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
