"""Command-line entry point: ``omspde --config run.yaml [--out DIR] [--seed N]``.

Exit status: 0 on success, 1 when a hypothesis or precondition fails,
2 when the configuration is invalid.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .action import DiscretePath, evaluate_action
from .config import RunConfig, load_config, load_path
from .errors import ConfigError, InvalidArgument, PreconditionViolation
from .io import write_path_csv, write_records
from .levy import eta_correction, h4_moment, square_integrability, variation_constant
from .mcvalidate import TubeExperiment, simulate_mild, tube_ratio
from .pathopt import minimize_path
from .spectral import validate_model

log = logging.getLogger("omspde")

EXIT_OK, EXIT_PRECONDITION, EXIT_CONFIG = 0, 1, 2


def _eta(cfg: RunConfig, spec):
    if isinstance(spec, str):  # "auto": from the jump block, zero without jumps
        if not cfg.jumps.num_modes:
            return np.zeros(cfg.model.truncation)
        return eta_correction(cfg.jumps, cfg.quad_tol, M=cfg.model.truncation).eta
    return spec


def _records(cfg, name, records):
    if "jsonl" in cfg.formats:
        write_records(cfg.out_dir / name, records)


def cmd_check(cfg: RunConfig, args):
    jumps = cfg.jumps if cfg.jumps.num_modes else None
    report = validate_model(cfg.model, cfg.drift, jumps, probe_radius=cfg.params["probe_radius"])
    recs = [e.as_record() for e in report.entries]
    if jumps is not None:
        sq = square_integrability(cfg.jumps)
        recs.append(
            {
                "check": "square integrability",
                "passed": sq.convergent,
                "index": None,
                "detail": f"partial sum {sq.partial_sum:.17g} under {sq.tail.kind} tail",
            }
        )
    recs.append({"check": "summary", "passed": report.passed, "index": None, "detail": report.summary()})
    _records(cfg, "check.jsonl", recs)
    for r in recs:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']}" + (f"  [mode {r['index']}]" if r["index"] else ""))
    return EXIT_OK if report.passed else EXIT_PRECONDITION


def cmd_eta(cfg: RunConfig, args):
    M = cfg.model.truncation
    corr = eta_correction(cfg.jumps, cfg.quad_tol, M=M)
    mom = h4_moment(cfg.jumps, cfg.quad_tol)
    C = variation_constant(cfg.jumps, cfg.model, cfg.quad_tol)
    recs = []
    for j in range(M):
        recs.append(
            {
                "mode": j + 1,
                "eta": corr.eta[j],
                "error": corr.errors[j],
                "moment": mom.moments[j] if j < mom.moments.size else 0.0,
            }
        )
    recs.append({"variation_constant": C, "moment_sum": mom.total})
    _records(cfg, "eta.jsonl", recs)
    print("eta =", " ".join(format(v, ".10g") for v in corr.eta))
    return EXIT_OK


def cmd_eval(cfg: RunConfig, args):
    p = cfg.params
    path = load_path(p["path"], "command.path")
    out = evaluate_action(path, cfg.model, cfg.drift, _eta(cfg, p["eta"]), p["form"])
    _records(cfg, "action.jsonl", [out.as_record()])
    print(f"S = {out.total:.17g}")
    return EXIT_OK


def cmd_minimize(cfg: RunConfig, args):
    p = cfg.params
    initial = load_path(p["initial_path"], "command.initial_path") if "initial_path" in p else None
    trace_log = args.log if args.log else (cfg.out_dir / "trace.csv" if "csv" in cfg.formats else None)
    res = minimize_path(
        p["start"],
        p["target"],
        cfg.model,
        cfg.drift,
        _eta(cfg, p["eta"]),
        p["optimizer"],
        steps=p["steps"],
        initial=initial,
        log_path=trace_log,
    )
    write_path_csv(cfg.out_dir / "path.csv", res.path.coefficients, res.path.time_horizon)
    _records(cfg, "minimize.jsonl", [res.as_record()])
    print(f"S = {res.breakdown.total:.17g}  converged={res.converged}  iterations={res.iterations}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args):
    p = cfg.params
    seed = args.seed if args.seed is not None else p["seed"]
    X = simulate_mild(
        cfg.model, cfg.drift, cfg.jumps, p["x"], p["steps"], seed, p["include_jumps"], p["samples"], p["cutoff"]
    )
    T = cfg.model.time_horizon
    for k in range(min(p["write_paths"], X.shape[0])):
        write_path_csv(cfg.out_dir / f"sample_{k + 1:04d}.csv", X[k], T)
    mean = X.mean(axis=0)
    var = X.var(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros_like(mean)
    if "csv" in cfg.formats:
        t = np.linspace(0.0, T, X.shape[1])
        M = cfg.model.truncation
        with open(cfg.out_dir / "moments.csv", "w") as fh:
            cols = [f"mean_{j}" for j in range(1, M + 1)] + [f"var_{j}" for j in range(1, M + 1)]
            fh.write(",".join(["t"] + cols) + "\n")
            for i in range(t.size):
                fh.write(",".join(format(v, ".17g") for v in [t[i], *mean[i], *var[i]]) + "\n")
    _records(
        cfg,
        "simulate.jsonl",
        [{"samples": int(X.shape[0]), "seed": seed, "terminal_mean": mean[-1], "terminal_variance": var[-1]}],
    )
    print(f"simulated {X.shape[0]} paths")
    return EXIT_OK


def cmd_tube_ratio(cfg: RunConfig, args):
    p = cfg.params
    seed = args.seed if args.seed is not None else p["seed"]
    exp = TubeExperiment(
        p["epsilon"],
        p["samples"],
        load_path(p["path_a"], "command.path_a"),
        load_path(p["path_b"], "command.path_b"),
        seed=seed,
        include_jumps=p["include_jumps"],
        cutoff=p["cutoff"],
    )
    est = tube_ratio(exp, cfg.model, cfg.drift, cfg.jumps, _eta(cfg, p["eta"]), threads=args.threads)
    _records(cfg, "ratio.jsonl", [est.as_record()])
    print(f"ratio = {est.ratio:.6g} +- {est.ratio_se:.2g}  predicted {est.predicted_ratio:.6g}")
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "eta": cmd_eta,
    "eval": cmd_eval,
    "minimize": cmd_minimize,
    "simulate": cmd_simulate,
    "tube-ratio": cmd_tube_ratio,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="omspde", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--out", help="output directory (overrides output.directory)")
    ap.add_argument("--seed", type=int, help="random seed (overrides command.seed)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for sampling")
    ap.add_argument("--log", help="log file; for minimize, the optimisation trace")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except (ConfigError, InvalidArgument) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        cfg.out_dir = Path(args.out)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if args.log and cfg.command != "minimize":
        logging.basicConfig(filename=args.log, level=logging.INFO)
    log.info("running %s from %s", cfg.command, cfg.source)
    try:
        return COMMANDS[cfg.command](cfg, args)
    except PreconditionViolation as e:
        print(f"precondition violated: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ConfigError, InvalidArgument) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
