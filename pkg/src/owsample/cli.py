"""Command-line interface: run experiments, verify numerics, list assets.

Exit codes: 0 success, 1 runtime failure (partial results preserved),
2 invalid configuration.
"""

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .acquisition import AcquisitionKind
from .benchmarks import get_problem, list_problems
from .experiment import (ExperimentConfig, aggregate, replicate_seed,
                         run_lhs_baseline, run_sequential)
from .subspace import as_surrogate, build_active_subspace
from .experiment import _cached_truth, log_pdf_error

CONFIG_FIELDS = {
    "problem", "acquisition", "n_iter", "n_init", "noise_variance",
    "noise_mode", "n_gmm", "seed", "mc_samples", "replicates",
    "alg3_sampling", "acq_restarts", "gp_starts",
}


class ConfigError(Exception):
    pass


def _load_config(path, overrides):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]  # re-running a manifest
    unknown = set(raw) - CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    for key in ("problem", "acquisition", "n_iter"):
        if key not in raw:
            raise ConfigError(f"missing config field: {key}")
    if raw["problem"] not in list_problems():
        raise ConfigError(f"unknown problem in field 'problem': "
                          f"{raw['problem']!r}")
    name = str(raw["acquisition"])
    if name != "LHS":
        try:
            AcquisitionKind.from_name(name)
        except ValueError as exc:
            raise ConfigError(f"invalid field 'acquisition': {exc}") from exc
    merged = dict(raw)
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    replicates = int(merged.pop("replicates", 1))
    try:
        config = ExperimentConfig(
            problem=merged["problem"],
            acquisition=name,
            n_iter=int(merged["n_iter"]),
            n_init=(int(merged["n_init"])
                    if merged.get("n_init") is not None else None),
            noise_variance=float(merged.get("noise_variance", 0.0)),
            noise_mode=str(merged.get("noise_mode", "fixed")),
            n_gmm=int(merged.get("n_gmm", 2)),
            seed=int(merged.get("seed", 0)),
            mc_samples=int(merged.get("mc_samples", 100_000)),
            replicate_count=replicates,
            alg3_sampling=str(merged.get("alg3_sampling", "prior")),
            acq_restarts=int(merged.get("acq_restarts", 10)),
            gp_starts=int(merged.get("gp_starts", 8)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    return config


def _default_out_dir():
    return os.environ.get("OWSAMPLE_OUT", "owsample-out")


def _write_replicate_csv(path, record, dim, sequential):
    """One row per error entry; acquired points attached on sequential runs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = (["iteration", "error", "cumulative_min"]
                  + [f"x{j+1}" for j in range(dim)] + ["y"])
        writer.writerow(header)
        n_series = record.error_series.size
        start = 0 if sequential else 1
        n_init = record.visited.shape[0] - (n_series - 1) if sequential else 0
        for i in range(n_series):
            it = start + i
            row = [it, f"{record.error_series[i]:.10g}",
                   f"{record.cumulative_min_series[i]:.10g}"]
            if sequential and i > 0:
                x = record.visited[n_init + i - 1]
                yv = record.outputs[n_init + i - 1]
                row += [f"{v:.10g}" for v in x] + [f"{yv:.10g}"]
            else:
                row += [""] * dim + [""]
            writer.writerow(row)


def _run_one_replicate(rep_config):
    if rep_config.acquisition == "LHS":
        return run_lhs_baseline(rep_config)
    return run_sequential(rep_config)


def _write_aggregate_csv(path, median, mad, start_iter):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "median", "mad"])
        for i, (m, s) in enumerate(zip(median, mad)):
            writer.writerow([start_iter + i, f"{m:.10g}", f"{s:.10g}"])


def _run_active_subspace_baseline(config, problem, args):
    """Error of the active-subspace surrogate at a ladder of budgets."""
    results = []
    truth = _cached_truth(config.problem, config.mc_samples, config.seed)
    for rep in range(config.replicate_count):
        rng = np.random.default_rng(replicate_seed(config.seed, rep))
        asub = build_active_subspace(problem, args.k, args.alpha, args.q, rng,
                                     noise_variance=config.noise_variance)
        errors = []
        budgets = []
        for n_s in range(args.q + 1, args.q + 1 + max(1, config.n_iter)):
            surr = as_surrogate(asub, problem, n_s, rng,
                                noise_variance=config.noise_variance)
            errors.append(log_pdf_error(surr, truth))
            budgets.append(surr.evaluations_total)
        results.append((budgets, np.asarray(errors)))
    return results


def cmd_run(args):
    try:
        config = _load_config(args.config, {
            "replicates": args.replicates, "seed": args.seed,
        })
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or _default_out_dir()
    os.makedirs(out_dir, exist_ok=True)
    problem = get_problem(config.problem)
    seeds = [replicate_seed(config.seed, i)
             for i in range(config.replicate_count)]
    manifest = {
        "version": __version__,
        "config": {**{k: v for k, v in asdict(config).items()
                      if k not in ("replicate_count", "truth_seed")},
                   "replicates": config.replicate_count},
        "replicate_seeds": seeds,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "outputs": [],
    }
    if args.baseline == "active-subspace":
        manifest["baseline"] = {"kind": "active-subspace", "k": args.k,
                                "alpha": args.alpha, "q": args.q}

    status = 0
    try:
        if args.baseline == "active-subspace":
            results = _run_active_subspace_baseline(config, problem, args)
            series = np.stack([e for _, e in results])
            med = np.median(series, axis=0)
            mad = np.median(np.abs(series - med[None, :]), axis=0)
            budgets = results[0][0]
            agg = os.path.join(out_dir, "aggregate.csv")
            with open(agg, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["evaluations", "median", "mad"])
                for b, m, s in zip(budgets, med, mad):
                    writer.writerow([b, f"{m:.10g}", f"{s:.10g}"])
            manifest["outputs"].append(agg)
        else:
            sequential = config.acquisition != "LHS"
            rep_configs = [replace(config, seed=seeds[i],
                                   truth_seed=config.seed, replicate_count=1)
                           for i in range(config.replicate_count)]
            records = []
            if args.jobs > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    futures = list(pool.map(_run_one_replicate, rep_configs))
                records_iter = enumerate(futures)
            else:
                records_iter = ((i, _run_one_replicate(rc))
                                for i, rc in enumerate(rep_configs))
            for i, rec in records_iter:
                records.append(rec)
                path = os.path.join(out_dir, f"replicate_{i:03d}.csv")
                _write_replicate_csv(path, rec, problem.dim, sequential)
                manifest["outputs"].append(path)
            med, mad = aggregate(records)
            agg = os.path.join(out_dir, "aggregate.csv")
            _write_aggregate_csv(agg, med, mad, 0 if sequential else 1)
            manifest["outputs"].append(agg)
    except Exception as exc:  # noqa: BLE001 - report and preserve partials
        print(f"error: run failed: {exc}", file=sys.stderr)
        status = 1
    manifest["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status


def cmd_verify(_args):
    from .verify import run_all_checks

    results = run_all_checks()
    width = max(len(r.name) for r in results)
    all_ok = True
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        line = f"{r.name:<{width}}  {mark}  max err {r.max_error:.3e}"
        if r.detail:
            line += f"  ({r.detail})"
        print(line)
        all_ok = all_ok and r.passed
    print("verify:", "all checks passed" if all_ok else "FAILURES above")
    return 0 if all_ok else 1


def cmd_list(_args):
    print("problems:")
    for name in list_problems():
        problem = get_problem(name)
        lo = np.array2string(problem.bounds.lo, precision=3, threshold=6,
                             max_line_width=10 ** 9)
        hi = np.array2string(problem.bounds.hi, precision=3, threshold=6,
                             max_line_width=10 ** 9)
        print(f"  {name} d={problem.dim} bounds {lo} .. {hi}")
    print("acquisitions:")
    for kind in AcquisitionKind:
        print(f"  {kind.value}")
    print("  LHS (baseline)")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="owsample",
        description="Output-weighted sequential sampling experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("config", help="JSON config (or manifest) file")
    p_run.add_argument("--out", default=None,
                       help="output directory (default $OWSAMPLE_OUT)")
    p_run.add_argument("--replicates", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=1,
                       help="worker processes for replicates")
    p_run.add_argument("--baseline", choices=["active-subspace"],
                       default=None)
    p_run.add_argument("--k", type=int, default=2,
                       help="singular values to resolve (active subspace)")
    p_run.add_argument("--alpha", type=float, default=2.0,
                       help="oversampling factor (active subspace)")
    p_run.add_argument("--q", type=int, default=2,
                       help="subspace dimension (active subspace)")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run the numeric check suite")
    p_verify.set_defaults(func=cmd_verify)

    p_list = sub.add_parser("list", help="list problems and acquisitions")
    p_list.set_defaults(func=cmd_list)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
