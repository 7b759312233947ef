"""Command-line surface: stability selection on CSVs, simulation,
diagnostics, calibration, and the experiment harness.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numerical failure.
All primary outputs are written to temporary files first and renamed only
once every write has succeeded, so a failing run leaves nothing partial
behind.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from ._svg import stability_path_svg
from .control import (
    ControlSpec,
    calibrate_q,
    calibrate_threshold,
    ev_bound,
    lambda_min_from_frequencies,
)
from .data import LambdaGrid, load_csv, normalize_columns
from .diagnostics import condition_report
from .engine import (
    lasso_selector,
    omp_selector,
    randomised_lasso_selector,
    romp_selector,
    selection_frequencies,
    stable_set,
)
from .errors import ConfigError, DataError, NumericalError
from .harness import (
    ExperimentConfig,
    error_control_experiment,
    graph_experiment,
    recovery_experiment,
    separation_experiment,
)
from .simgen import (
    DESIGN_PRESETS,
    DesignSpec,
    banded_precision,
    exact_gram_design,
    gen_beta,
    gen_design,
    gen_ggm,
    gen_response,
    permute_null,
    population_covariance,
)

CONFIG_SCHEMA = 1
CONFIG_DEFAULTS = {
    "schema": CONFIG_SCHEMA,
    "selector": "lasso",
    "weakness": 0.5,
    "p_w": 0.5,
    "steps": None,
    "subsamples": 100,
    "threshold": None,
    "q": None,
    "target_ev": None,
    "strict_q": False,
    "grid_size": 100,
    "grid_min_ratio": 0.001,
    "has_header": True,
    "response_column": "y",
    "seed": 0,
    "threads": 1,
}
SELECT_SELECTORS = ("lasso", "randomised-lasso", "omp", "romp")


def load_run_config(path=None, overrides=None) -> dict:
    """Merge defaults, an optional config file, and CLI overrides; reject
    unknown keys and schema mismatches before any compute."""
    config = dict(CONFIG_DEFAULTS)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        unknown = set(loaded) - set(CONFIG_DEFAULTS)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        if loaded.get("schema", CONFIG_SCHEMA) != CONFIG_SCHEMA:
            raise ConfigError(
                f"{path}: unsupported schema {loaded.get('schema')!r}, expected {CONFIG_SCHEMA}"
            )
        config.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            config[key] = value
    if config["selector"] not in SELECT_SELECTORS:
        raise ConfigError(
            f"unknown selector {config['selector']!r}; choose from {SELECT_SELECTORS}"
        )
    return config


def _resolve_control(config: dict, p: int) -> ControlSpec:
    given = {
        k: config[k] for k in ("threshold", "q", "target_ev") if config[k] is not None
    }
    if len(given) != 2:
        raise ConfigError(
            "exactly two of (threshold, q, target_ev) must be set; got "
            f"{sorted(given) or 'none'}"
        )
    if "threshold" in given and "target_ev" in given:
        return ControlSpec.from_threshold_and_ev(p, given["threshold"], given["target_ev"])
    if "q" in given and "target_ev" in given:
        return ControlSpec.from_q_and_ev(p, given["q"], given["target_ev"])
    return ControlSpec.from_threshold_and_q(p, given["threshold"], given["q"])


def _make_selector(config: dict):
    name = config["selector"]
    if name == "lasso":
        return lasso_selector()
    if name == "randomised-lasso":
        return randomised_lasso_selector(config["weakness"], config["p_w"])
    if name == "omp":
        return omp_selector()
    return romp_selector(config["weakness"])


def _atomic_write_all(outputs: dict) -> None:
    staged = []
    try:
        for path, content in outputs.items():
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_text(content)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise


def cmd_select(args) -> int:
    overrides = {
        "selector": args.selector,
        "threshold": args.threshold,
        "q": args.q,
        "target_ev": args.target_ev,
        "subsamples": args.subsamples,
        "weakness": args.weakness,
        "steps": args.steps,
        "seed": args.seed,
        "threads": args.threads,
        "response_column": args.response_column,
    }
    config = load_run_config(args.config, overrides)
    raw = load_csv(args.csv, has_header=config["has_header"],
                   response_column=config["response_column"])
    if raw.y is None:
        raise DataError("the response column is required for selection")
    data = normalize_columns(raw)
    control = _resolve_control(config, data.p)

    if config["selector"] in ("omp", "romp"):
        steps = config["steps"] or max(1, math.floor(control.q))
        grid = LambdaGrid.steps(min(steps, data.n // 2 - 1, data.p))
    else:
        grid = LambdaGrid.for_data(
            data, num=config["grid_size"], min_ratio=config["grid_min_ratio"]
        )
    freq = selection_frequencies(
        _make_selector(config), data, grid,
        B=config["subsamples"], seed=config["seed"], threads=config["threads"],
    )
    lm = lambda_min_from_frequencies(freq, control.q, strict=config["strict_q"])
    result = stable_set(freq, control.threshold, lm.lambda_min)
    control = control.with_lambda_min(lm.lambda_min)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv = io.StringIO()
    freq.to_tsv(tsv, names=data.names)
    ranking = np.argsort(-result.max_frequency, kind="stable")
    listing = ["variable\tmax_frequency\tstable"]
    for k in ranking:
        listing.append(
            f"{data.names[k]}\t{result.max_frequency[k]:.12g}\t"
            f"{int(int(k) in result.selected)}"
        )
    meta = {
        "control": control.to_dict(),
        "result": result.to_dict(),
        "selected_names": [data.names[k] for k in result.selected.sorted()],
        "realized_q": lm.realized_q,
        "config": config,
        "csv": str(args.csv),
    }
    svg = stability_path_svg(
        freq.pi_hat, control.threshold, result.selected.sorted(), data.names, grid.values
    )
    _atomic_write_all(
        {
            out_dir / "frequencies.tsv": tsv.getvalue(),
            out_dir / "stable_set.tsv": "\n".join(listing) + "\n",
            out_dir / "control.json": json.dumps(meta, indent=2, sort_keys=True) + "\n",
            out_dir / "stability_paths.svg": svg,
        }
    )
    names = ", ".join(meta["selected_names"]) or "(empty)"
    print(f"stable set ({len(result.selected)} variables): {names}")
    print(f"threshold={control.threshold:.4g} q={control.q:.4g} "
          f"lambda_min={lm.lambda_min:.6g} ev_bound={control.target_ev:.4g}")
    print(f"outputs in {out_dir}")
    return 0


def _csv_text(data, response=None) -> str:
    lines = [",".join(data.names + (("y",) if response is not None else ()))]
    for i in range(data.n):
        row = [f"{v:.17g}" for v in data.X[i]]
        if response is not None:
            row.append(f"{response[i]:.17g}")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _spec_from_args(args) -> DesignSpec:
    if args.preset:
        return DESIGN_PRESETS[args.preset] if args.preset in DESIGN_PRESETS else _bad_preset(args.preset)
    if not args.kind:
        raise ConfigError("give --preset or --kind")
    return DesignSpec(
        kind=args.kind, n=args.n, p=args.p, rho=args.rho, n_factors=args.factors
    )


def _bad_preset(name):
    raise ConfigError(f"unknown preset {name!r}; presets: {sorted(DESIGN_PRESETS)}")


def cmd_simulate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "ggm":
        theta = banded_precision(args.d, band=args.band, off=args.off)
        data = gen_ggm(args.d, theta, args.n, rng)
        response = None
    else:
        spec = _spec_from_args(args)
        data = gen_design(spec, rng)
        response = None
        if args.s:
            truth = gen_beta(spec.p, args.s, args.beta_dist, rng)
            data, truth = gen_response(data, truth, args.snr, rng)
            response = data.y
    if args.permute:
        data = permute_null(data, "per_column", rng=rng)
    out = Path(args.out)
    _atomic_write_all({out: _csv_text(data, response)})
    print(f"wrote {data.n}x{data.p} dataset to {out}")
    return 0


def cmd_diagnose(args) -> int:
    if args.csv:
        data = normalize_columns(load_csv(args.csv, has_header=args.has_header))
        X = data.X
        if not args.support:
            raise ConfigError("--support is required with --csv")
    else:
        if args.design:
            spec = DesignSpec(kind=args.design, n=args.n, p=args.p, rho=args.rho,
                              n_factors=args.factors)
        elif args.preset:
            spec = _spec_from_args(args)
        else:
            raise ConfigError("give --csv, --design, or --preset")
        if args.population:
            X = exact_gram_design(population_covariance(spec)).X
        else:
            X = gen_design(spec, np.random.default_rng(args.seed)).X
        if not args.support and spec.kind == "two_correlated":
            args.support = "1,2"
        if not args.support:
            raise ConfigError("--support is required for this design")
    support = [int(tok) - 1 for tok in args.support.split(",")]
    if any(k < 0 for k in support):
        raise ConfigError("--support uses 1-based column indices")
    signs = None
    if args.signs:
        signs = [1.0 if tok.strip() in ("+", "+1", "1") else -1.0 for tok in args.signs.split(",")]
    phi_sizes = [int(tok) for tok in args.phi_sizes.split(",")] if args.phi_sizes else ()
    report = condition_report(X, support, signs=signs, phi_sizes=phi_sizes,
                              rng=np.random.default_rng(args.seed))
    # CLI indices are 1-based, matching the --support argument
    text = report.to_text(index_base=1)
    if args.out:
        _atomic_write_all({Path(args.out): text})
    sys.stdout.write(text)
    return 0


def cmd_calibrate(args) -> int:
    given = {k: v for k, v in (("pi", args.pi), ("q", args.q), ("ev", args.ev)) if v is not None}
    if len(given) != 2:
        raise ConfigError(f"give exactly two of --pi/--q/--ev, got {sorted(given) or 'none'}")
    if "pi" in given and "ev" in given:
        q = calibrate_q(args.p, args.pi, args.ev)
        pi, ev = args.pi, args.ev
    elif "q" in given and "ev" in given:
        pi = calibrate_threshold(args.p, args.q, args.ev)
        q, ev = args.q, args.ev
    else:
        ev = ev_bound(args.q, args.p, args.pi)
        q, pi = args.q, args.pi
    print(f"p={args.p} q={q:.6g} threshold={pi:.6g} ev_bound={ev:.6g}")
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig(
        design=args.design,
        s=args.s,
        snr=args.snr,
        selector=args.selector,
        weakness=args.weakness,
        gamma=args.gamma,
        replicates=args.replicates,
        subsamples=args.subsamples,
        threshold=args.threshold,
        q=args.q,
        beta_dist=args.beta_dist,
        seed=args.seed,
        threads=args.threads,
    )
    if args.kind == "recovery":
        report = recovery_experiment(config)
    elif args.kind == "error-control":
        report = error_control_experiment(config)
    elif args.kind == "separation":
        weaknesses = [float(tok) for tok in args.weakness_list.split(",")]
        report = separation_experiment(args.rho, weaknesses, config)
    elif args.kind == "graph":
        theta = banded_precision(args.d, band=args.band, off=args.off)
        fracs = [float(tok) for tok in args.lam_fracs.split(",")]
        report = graph_experiment(
            args.d, args.n, theta, fracs, args.target_ev, config, null=args.null
        )
    else:
        raise ConfigError(f"unknown experiment kind {args.kind!r}")
    text = report.to_json(canonical=True) + "\n"
    if args.out:
        out = Path(args.out)
        _atomic_write_all({
            out: text,
            out.with_suffix(".tsv"): report.scenarios_tsv(),
        })
        print(f"report written to {args.out} ({report.runtime_seconds:.1f}s)", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stabsel",
        description="Stability selection with finite-sample false-discovery control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("select", help="run stability selection on a CSV")
    ps.add_argument("csv", help="input CSV (RFC-4180 subset, '.' decimals)")
    ps.add_argument("--config", help="JSON run configuration")
    ps.add_argument("--out", default="stabsel-out", help="output directory")
    ps.add_argument("--selector", choices=SELECT_SELECTORS)
    ps.add_argument("--threshold", type=float, help="stability cutoff in (0.5, 1]")
    ps.add_argument("--q", type=float, help="average selected-count target")
    ps.add_argument("--target-ev", dest="target_ev", type=float,
                    help="expected false-selection bound")
    ps.add_argument("--subsamples", type=int)
    ps.add_argument("--weakness", type=float)
    ps.add_argument("--steps", type=int, help="forward-selection step budget")
    ps.add_argument("--seed", type=int)
    ps.add_argument("--threads", type=int)
    ps.add_argument("--response-column", dest="response_column")
    ps.set_defaults(func=cmd_select)

    pm = sub.add_parser("simulate", help="generate a synthetic dataset CSV")
    pm.add_argument("--preset", help=f"one of {sorted(DESIGN_PRESETS)}")
    pm.add_argument("--kind", choices=["independent", "block", "toeplitz", "factor",
                                       "two_correlated", "ggm"])
    pm.add_argument("--n", type=int, default=100)
    pm.add_argument("--p", type=int, default=200)
    pm.add_argument("--rho", type=float)
    pm.add_argument("--factors", type=int)
    pm.add_argument("--d", type=int, default=20, help="graph dimension (kind=ggm)")
    pm.add_argument("--band", type=int, default=1)
    pm.add_argument("--off", type=float, default=0.3)
    pm.add_argument("--s", type=int, default=0, help="planted support size")
    pm.add_argument("--snr", type=float, default=2.0)
    pm.add_argument("--beta-dist", dest="beta_dist", default="uniform01",
                    choices=["uniform01", "std_normal"])
    pm.add_argument("--permute", action="store_true", help="per-column permutation null")
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--out", default="simulated.csv")
    pm.set_defaults(func=cmd_simulate)

    pd = sub.add_parser("diagnose", help="design-condition diagnostics")
    pd.add_argument("--csv")
    pd.add_argument("--has-header", dest="has_header", action="store_true", default=True)
    pd.add_argument("--design", choices=["independent", "block", "toeplitz", "factor",
                                         "two_correlated"])
    pd.add_argument("--preset")
    pd.add_argument("--n", type=int, default=200)
    pd.add_argument("--p", type=int, default=200)
    pd.add_argument("--rho", type=float)
    pd.add_argument("--factors", type=int)
    pd.add_argument("--population", action="store_true", default=None,
                    help="use the exact population Gram design")
    pd.add_argument("--support", help="1-based true-support indices, e.g. 1,2")
    pd.add_argument("--signs", help="signs on the support, e.g. +,+")
    pd.add_argument("--phi-sizes", dest="phi_sizes",
                    help="subset sizes for sparse-eigenvalue extremes, e.g. 2,3")
    pd.add_argument("--seed", type=int, default=0)
    pd.add_argument("--out")
    pd.set_defaults(func=cmd_diagnose)

    pc = sub.add_parser("calibrate", help="error-control arithmetic")
    pc.add_argument("--p", type=int, required=True)
    pc.add_argument("--pi", type=float, help="stability cutoff")
    pc.add_argument("--q", type=float, help="average selected count")
    pc.add_argument("--ev", type=float, help="expected false-selection bound")
    pc.set_defaults(func=cmd_calibrate)

    pe = sub.add_parser("experiment", help="run a harness experiment")
    pe.add_argument("--kind", required=True,
                    choices=["recovery", "error-control", "separation", "graph"])
    pe.add_argument("--design", default="A-desk")
    pe.add_argument("--s", type=int, default=5)
    pe.add_argument("--snr", type=float, default=2.0)
    pe.add_argument("--selector", default="lasso+stability")
    pe.add_argument("--weakness", type=float, default=0.5)
    pe.add_argument("--gamma", type=float, default=0.4)
    pe.add_argument("--replicates", type=int, default=20)
    pe.add_argument("--subsamples", type=int, default=100)
    pe.add_argument("--threshold", type=float, default=0.6)
    pe.add_argument("--q", type=float)
    pe.add_argument("--beta-dist", dest="beta_dist", default="uniform01",
                    choices=["uniform01", "std_normal"])
    pe.add_argument("--rho", type=float, default=0.7)
    pe.add_argument("--weakness-list", dest="weakness_list", default="0.2,1.0")
    pe.add_argument("--d", type=int, default=20)
    pe.add_argument("--n", type=int, default=100)
    pe.add_argument("--band", type=int, default=1)
    pe.add_argument("--off", type=float, default=0.3)
    pe.add_argument("--lam-fracs", dest="lam_fracs", default="0.3,0.5")
    pe.add_argument("--target-ev", dest="target_ev", type=float, default=3.0)
    pe.add_argument("--null", action="store_true")
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--threads", type=int, default=1)
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # two_correlated population diagnostics default to the exact Gram
    if getattr(args, "population", None) is None and getattr(args, "design", None):
        if args.command == "diagnose" and args.design == "two_correlated":
            args.population = True
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
