"""Command-line entry point.

Five subcommands: ``adjust`` runs the step-up procedure on a p-value CSV,
``simulate-fdr`` estimates realized FDR on synthetic pools,
``classifier-bound`` prints the randomized-classifier error bound,
``sharpness`` runs the tightness construction, and ``validate`` re-checks a
guarantee by Monte Carlo.  All randomness flows from ``--seed`` (default
42); no entropy is taken from the environment, so identical invocations
produce byte-identical reports.  Exit status: 0 success, 2 input error,
1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds, multitest, reports, sharpness, simulate
from .priors import (
    complexity_prior_from_csv,
    complexity_prior_uniform,
    harmonic_number,
    size_prior_by,
    size_prior_dirac,
    size_prior_from_csv,
    size_prior_uniform,
)
from .simulate import DEFAULT_SEED, ScenarioSpec

__all__ = ["RunConfig", "main", "build_parser", "run_adjust", "run_simulate_fdr",
           "run_classifier_bound", "run_sharpness", "run_validate"]


@dataclass(frozen=True)
class RunConfig:
    """Parsed invocation: one subcommand plus its flags."""

    subcommand: str
    flags: dict = field(default_factory=dict)
    input: str | None = None
    output: str | None = None
    format: str = "json"
    seed: int = DEFAULT_SEED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hammer",
        description="Prior-weighted step-up multiple testing with "
                    "distribution-free FDR control, randomized-classifier "
                    "error bounds, and Monte Carlo validators.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    adj = sub.add_parser(
        "adjust", help="run the step-up procedure on a p-value CSV",
        description="Read hypothesis_id,p_value[,weight][,is_null] rows and "
                    "report the rejection set.")
    adj.add_argument("--input", required=True, metavar="FILE",
                     help="CSV with header hypothesis_id,p_value[,weight][,is_null]")
    adj.add_argument("--alpha", type=float, required=True,
                     help="confidence budget in [0, 1]")
    adj.add_argument("--procedure", choices=["hammer", "bh", "by"], default="hammer",
                     help="prior-weighted step-up or a classical baseline (default hammer)")
    adj.add_argument("--size-prior", default="by", metavar="SPEC",
                     help="by | uniform | dirac:A | custom:FILE (default by)")
    adj.add_argument("--complexity-prior", default="uniform", metavar="SPEC",
                     help="uniform | column | custom:FILE (default uniform)")
    adj.add_argument("--format", choices=["json", "csv"], default="json")
    adj.add_argument("--output", default=None, metavar="FILE",
                     help="write the report here instead of stdout")

    sim = sub.add_parser(
        "simulate-fdr", help="estimate realized FDR on synthetic pools",
        description="Equicorrelated Gaussian nulls with a mean shift on the "
                    "alternatives; reports mean realized FDP against the bound.")
    sim.add_argument("--scenario", default=None, metavar="FILE",
                     help="JSON file with scenario fields; explicit flags override it")
    sim.add_argument("--m", type=int, help="pool size")
    sim.add_argument("--m0", type=int, help="number of true nulls")
    sim.add_argument("--effect", type=float, help="mean shift on alternatives (default 3.0)")
    sim.add_argument("--rho", type=float, help="pairwise correlation (default 0.0)")
    sim.add_argument("--alpha", type=float, help="confidence budget in [0, 1]")
    sim.add_argument("--procedure", choices=["hammer", "bh", "by"], default=None,
                     help="default hammer")
    sim.add_argument("--size-prior", default=None, metavar="SPEC",
                     help="by | uniform | dirac:A | custom:FILE (default by; hammer only)")
    sim.add_argument("--trials", type=int, help="Monte Carlo trials (default 10000)")
    sim.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    sim.add_argument("--format", choices=["json", "csv"], default="json")
    sim.add_argument("--output", default=None, metavar="FILE")

    clf = sub.add_parser(
        "classifier-bound", help="error bound for a randomly selected classifier",
        description="Divergence budget and inverted upper error bound for one "
                    "selected classifier.")
    clf.add_argument("--n", type=int, required=True, help="sample size (>= 2)")
    clf.add_argument("--delta", type=float, required=True, help="confidence parameter in (0, 1]")
    clf.add_argument("--theta", type=float, required=True,
                     help="selection density at the drawn classifier, relative to uniform")
    clf.add_argument("--emp-error", type=float, required=True,
                     help="empirical error rate in [0, 1]")
    clf.add_argument("--output", default=None, metavar="FILE")

    shp = sub.add_parser(
        "sharpness", help="tightness construction on the discretized circle",
        description="Mean realized false-positive rate of the worst-case arc "
                    "construction; approaches alpha0 as the grid refines.")
    shp.add_argument("--alpha0", type=float, required=True,
                     help="target false-positive rate in (0, 1)")
    shp.add_argument("--nu", default="uniform01", metavar="SPEC",
                     help="set-size distribution: uniform01 | table:FILE (default uniform01)")
    shp.add_argument("--grid-n", type=int, default=100_000,
                     help="grid points on the circle (default 100000)")
    shp.add_argument("--trials", type=int, default=1000, help="default 1000")
    shp.add_argument("--seed", type=int, default=DEFAULT_SEED,
                     help=f"master seed (default {DEFAULT_SEED})")
    shp.add_argument("--output", default=None, metavar="FILE",
                     help="JSON summary destination (default stdout)")
    shp.add_argument("--trial-csv", default=None, metavar="FILE",
                     help="also write per-trial u,set_size,fpr rows here")

    val = sub.add_parser(
        "validate", help="re-check a guarantee by Monte Carlo",
        description="Runs one of the validators and reports the violation "
                    "frequency or mean rate against its bound.")
    val.add_argument("--check", required=True,
                     choices=["constant-volume", "hammer-joint", "classifier"])
    val.add_argument("--scenario", default=None, metavar="FILE",
                     help="JSON file with scenario fields; explicit flags override it")
    val.add_argument("--m", type=int,
                     help="pool size (family size for --check classifier, default 50)")
    val.add_argument("--m0", type=int, help="number of true nulls (default m)")
    val.add_argument("--a", type=int, help="fixed selection size for constant-volume (default 1)")
    val.add_argument("--delta", type=float, help="level budget (default 0.05)")
    val.add_argument("--rho", type=float, help="pairwise correlation (default 0.0)")
    val.add_argument("--effect", type=float, help="mean shift on alternatives (default 3.0)")
    val.add_argument("--n", type=int, help="per-classifier sample size (classifier check)")
    val.add_argument("--size-prior", default=None, metavar="SPEC",
                     help="size prior for hammer-joint (default by)")
    val.add_argument("--trials", type=int, help="Monte Carlo trials (default 10000)")
    val.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    val.add_argument("--format", choices=["json", "csv"], default="json")
    val.add_argument("--output", default=None, metavar="FILE")

    return parser


def _size_prior_from_flag(spec: str, m: int):
    """Resolve a --size-prior value into a prior and its report fragment."""
    if spec == "by":
        return size_prior_by(m), {"size_prior": "by", "kappa": harmonic_number(m)}
    if spec == "uniform":
        return size_prior_uniform(m), {"size_prior": "uniform"}
    if spec.startswith("dirac:"):
        try:
            a = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad dirac size in {spec!r}") from None
        return size_prior_dirac(a, m), {"size_prior": "dirac", "a": a}
    if spec.startswith("custom:"):
        path = spec.split(":", 1)[1]
        return size_prior_from_csv(path, m=m), {"size_prior": "custom", "source": path}
    raise ValueError(f"unknown size prior {spec!r}; "
                     "use by, uniform, dirac:A or custom:FILE")


def _complexity_prior_from_flag(spec: str, pool, column_prior):
    if spec == "uniform":
        return complexity_prior_uniform(pool.m)
    if spec == "column":
        if column_prior is None:
            raise ValueError("--complexity-prior column needs a weight column "
                             "in the input CSV")
        return column_prior
    if spec.startswith("custom:"):
        return complexity_prior_from_csv(spec.split(":", 1)[1], pool.ids)
    raise ValueError(f"unknown complexity prior {spec!r}; "
                     "use uniform, column or custom:FILE")


def run_adjust(config: RunConfig) -> int:
    flags = config.flags
    pool, column_prior = reports.parse_pvalue_csv(config.input)
    alpha = flags["alpha"]
    procedure = flags["procedure"]
    if procedure == "hammer":
        size_prior, spec_info = _size_prior_from_flag(flags["size_prior"], pool.m)
        prior = _complexity_prior_from_flag(flags["complexity_prior"], pool, column_prior)
        result = multitest.step_up(pool, prior, size_prior, alpha)
    elif procedure == "bh":
        result = multitest.bh_baseline(pool, alpha)
        spec_info = {"baseline": "bh", "kappa": 1.0}
    else:
        result = multitest.by_baseline(pool, alpha)
        spec_info = {"baseline": "by", "kappa": harmonic_number(pool.m)}
    record = {
        "alpha": alpha,
        "k_star": result.k_star,
        "kappa_or_beta_spec": spec_info,
        "rejected": [h for h in pool.ids if h in result.rejected],
        "thresholds": {h: result.thresholds[h] for h in pool.ids},
    }
    rows = [
        (h, float(pool.p_values[i]), result.thresholds[h], h in result.rejected)
        for i, h in enumerate(pool.ids)
    ]
    report = reports.Report(record, ("hypothesis_id", "p_value", "threshold", "rejected"), rows)
    reports.emit_report(report, config.format, config.output)
    return 0


_SCENARIO_KEYS = ("m", "m0", "a", "alpha", "delta", "effect", "rho", "n",
                  "procedure", "size_prior", "trials", "seed")


def _merge_scenario(args, defaults: dict) -> dict:
    """Defaults, overlaid by a --scenario JSON file, overlaid by explicit flags."""
    merged = dict(defaults)
    path = getattr(args, "scenario", None)
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ValueError(f"{path}: scenario file must hold a JSON object")
        unknown = sorted(set(data) - set(_SCENARIO_KEYS))
        if unknown:
            raise ValueError(f"{path}: unknown scenario keys {unknown}")
        merged.update(data)
    for key in _SCENARIO_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _require(merged: dict, keys, subcommand: str):
    missing = [k for k in keys if merged.get(k) is None]
    if missing:
        raise ValueError(
            f"{subcommand}: missing required value(s) {missing}; "
            "pass flags or a --scenario file"
        )


def run_simulate_fdr(config: RunConfig) -> int:
    merged = config.flags
    _require(merged, ("m", "m0", "alpha"), "simulate-fdr")
    spec = ScenarioSpec(m=int(merged["m"]), m0=int(merged["m0"]),
                        effect=float(merged["effect"]), rho=float(merged["rho"]),
                        trials=int(merged["trials"]), seed=int(merged["seed"]))
    alpha = float(merged["alpha"])
    procedure = merged["procedure"]
    record = {
        "procedure": procedure, "m": spec.m, "m0": spec.m0,
        "effect": spec.effect, "rho": spec.rho, "alpha": alpha,
        "trials": spec.trials, "seed": spec.seed,
    }
    if procedure == "hammer":
        size_prior, spec_info = _size_prior_from_flag(merged["size_prior"], spec.m)
        record["kappa_or_beta_spec"] = spec_info
        estimate = simulate.estimate_fdr(spec, alpha, procedure, size_prior=size_prior)
    else:
        estimate = simulate.estimate_fdr(spec, alpha, procedure)
    bound = alpha * spec.m0 / spec.m
    record.update({
        "fdr_estimate": estimate.value,
        "std_error": estimate.std_error,
        "fdr_bound": bound,
        "consistent_with_bound": estimate.value <= bound + 3.0 * estimate.std_error,
    })
    header = tuple(record)
    report = reports.Report(record, header, [tuple(record.values())])
    reports.emit_report(report, config.format, config.output)
    return 0


def run_classifier_bound(config: RunConfig) -> int:
    flags = config.flags
    rep = bounds.classifier_bound_report(
        n=flags["n"], delta=flags["delta"], theta_value=flags["theta"],
        empirical_error=flags["emp_error"],
    )
    record = {
        "n": rep.n, "delta": rep.delta, "theta_value": rep.theta_value,
        "empirical_error": rep.empirical_error, "kl_budget": rep.kl_budget,
        "error_upper_bound": rep.error_upper_bound,
    }
    report = reports.Report(record, tuple(record), [tuple(record.values())])
    reports.emit_report(report, "json", config.output)
    return 0


def run_sharpness(config: RunConfig) -> int:
    flags = config.flags
    nu = flags["nu"]
    if nu == "uniform01":
        size_dist = sharpness.UniformSizeDistribution()
    elif nu.startswith("table:"):
        size_dist = sharpness.load_size_distribution(nu.split(":", 1)[1])
    else:
        raise ValueError(f"unknown set-size distribution {nu!r}; "
                         "use uniform01 or table:FILE")
    cfg = sharpness.SharpnessConfig(
        alpha0=flags["alpha0"], size_dist=size_dist, grid_n=flags["grid_n"],
        trials=flags["trials"], seed=config.seed,
    )
    summary = sharpness.estimate(cfg)
    record = {
        "alpha0": summary.alpha0, "nu": nu, "grid_n": summary.grid_n,
        "trials": summary.trials, "degenerate_trials": summary.degenerate_trials,
        "seed": summary.seed, "mean_fpr": summary.mean_fpr,
        "std_error": summary.std_error, "ks_set_size": summary.ks_set_size,
    }
    trial_rows = list(zip(summary.trial_u, summary.trial_set_size, summary.trial_fpr))
    report = reports.Report(record, ("u", "set_size", "fpr"), trial_rows)
    reports.emit_report(report, "json", config.output)
    if flags.get("trial_csv"):
        reports.emit_report(report, "csv", flags["trial_csv"])
    return 0


def run_validate(config: RunConfig) -> int:
    merged = config.flags
    check = merged["check"]
    record = {"check": check}
    if check == "classifier":
        _require(merged, ("n",), "validate --check classifier")
        m = int(merged["m"]) if merged.get("m") is not None else 50
        n = int(merged["n"])
        delta = float(merged["delta"])
        trials = int(merged["trials"])
        seed = int(merged["seed"])
        errors = np.linspace(0.1, 0.5, m)
        estimate = simulate.validate_classifier_coverage(
            n, delta, errors, trials=trials, seed=seed)
        record.update({"n": n, "family_size": m, "delta": delta,
                       "trials": trials, "seed": seed})
    else:
        _require(merged, ("m",), f"validate --check {check}")
        m = int(merged["m"])
        m0 = int(merged["m0"]) if merged.get("m0") is not None else m
        delta = float(merged["delta"])
        spec = ScenarioSpec(m=m, m0=m0, effect=float(merged["effect"]),
                            rho=float(merged["rho"]), trials=int(merged["trials"]),
                            seed=int(merged["seed"]))
        record.update({"m": m, "m0": m0, "effect": spec.effect, "rho": spec.rho,
                       "delta": delta, "trials": spec.trials, "seed": spec.seed})
        if check == "constant-volume":
            a = int(merged["a"]) if merged.get("a") is not None else 1
            record["a"] = a
            estimate = simulate.validate_constant_volume(spec, a, delta)
        else:
            size_flag = merged["size_prior"] or "by"
            size_prior, spec_info = _size_prior_from_flag(size_flag, m)
            record["kappa_or_beta_spec"] = spec_info
            estimate = simulate.validate_hammer_joint(
                spec, simulate.random_top_k_rule(), size_prior, delta)
    record.update({
        "value": estimate.value,
        "std_error": estimate.std_error,
        "events": estimate.events,
        "bound": delta,
        "consistent_with_bound": estimate.value <= delta + 3.0 * estimate.std_error,
    })
    header = tuple(record)
    report = reports.Report(record, header, [tuple(record.values())])
    reports.emit_report(report, config.format, config.output)
    return 0


_RUNNERS = {
    "adjust": run_adjust,
    "simulate-fdr": run_simulate_fdr,
    "classifier-bound": run_classifier_bound,
    "sharpness": run_sharpness,
    "validate": run_validate,
}

_MC_DEFAULTS = {"m0": None, "a": None, "n": None, "alpha": None, "m": None,
                "effect": 3.0, "rho": 0.0, "delta": 0.05, "procedure": "hammer",
                "size_prior": "by", "trials": 10_000, "seed": DEFAULT_SEED}


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    sub = args.subcommand
    if sub in ("simulate-fdr", "validate"):
        flags = _merge_scenario(args, _MC_DEFAULTS)
        if sub == "validate":
            flags["check"] = args.check
        seed = int(flags["seed"])
    else:
        flags = {k: v for k, v in vars(args).items()
                 if k not in ("subcommand", "input", "output", "format")}
        seed = int(getattr(args, "seed", DEFAULT_SEED))
    return RunConfig(
        subcommand=sub, flags=flags,
        input=getattr(args, "input", None),
        output=getattr(args, "output", None),
        format=getattr(args, "format", "json"),
        seed=seed,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        config = _config_from_args(args)
        return _RUNNERS[config.subcommand](config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything else is a defect, not bad input
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
