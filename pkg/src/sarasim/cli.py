"""Command-line front end.

Subcommands: ``analytic`` (closed-form tables), ``oracle`` (enumeration
checks and fixed-point iteration on a topology), ``simulate`` (Monte Carlo
run), ``sweep`` (density/threshold/scheme grid), ``validate`` (acceptance
suite).  Configuration comes from an optional key=value file with flag
overrides (flags win); results go to CSV or JSON next to a sidecar metadata
file that allows exact replay.  Exit codes: 0 success, 1 validation failure,
2 bad configuration, 3 unwritable output.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import acceptance, aloha
from .channel import FADING_MODES, ChannelParams
from .engine import RunConfig, SweepCell, run, run_experiment
from .geometry import Region, generate_topology, load_topology, save_topology
from .oracle import ProbVector, SubsetSinrTable, check_axioms, fixed_point_iterate
from .policies import POLICY_KINDS, PolicySpec
from .units import dbm_to_watts, watts_to_dbm

OUT_DIR_ENV = "SARASIM_OUT"

# key -> (parser, description with accepted range)
CONFIG_KEYS = {
    "lambda": (float, "node density per m^2, > 0"),
    "region": (str, "region size as WxH in metres, e.g. 100x100"),
    "wrap": (lambda v: v.lower() in ("1", "true", "yes"), "toroidal distance, true/false"),
    "rt": (float, "link distance in metres, > 0"),
    "alpha": (float, "pathloss exponent, > 2"),
    "beta_db": (float, "target SINR threshold in dB"),
    "tx_power_dbm": (float, "transmit power in dBm"),
    "noise_dbm": (str, "noise floor in dBm, or 'off' for pure SIR"),
    "fading": (str, f"one of {FADING_MODES}"),
    "scheme": (str, f"one of {POLICY_KINDS}"),
    "phi": (float, "fixed_aloha transmit probability in (0, 1]"),
    "phi_min": (float, "lower probability bound in (0, 1]"),
    "phi_max": (float, "upper probability bound in (0, 1]"),
    "window": (int, "measurement window in slots, >= 1"),
    "radius": (float, "neighbour counting radius in metres, > 0"),
    "r_cs": (float, "fixed sensing range in metres, > 0"),
    "r_b": (float, "base adaptive sensing range in metres, > 0"),
    "phi_access": (float, "carrier-sensing access probability in (0, 1]"),
    "slots": (int, "slots per drop, >= 1"),
    "drops": (int, "independent drops, >= 1"),
    "warmup": (int, "slots excluded from metrics, >= 0"),
    "seed": (int, "master seed"),
    "n_pairs": (int, "condition the Poisson draw on this count, >= 0"),
}


class ConfigError(Exception):
    pass


def _parse_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key = value, got {line!r}")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in CONFIG_KEYS:
                raise ConfigError(
                    f"{path}:{ln}: unknown key {key!r}; known keys: {', '.join(sorted(CONFIG_KEYS))}"
                )
            parser, desc = CONFIG_KEYS[key]
            try:
                values[key] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}:{ln}: {key} = {raw!r} invalid ({desc})") from exc
    return values


def _merge_flags(values: dict, args: argparse.Namespace) -> dict:
    mapping = {
        "lambda": args.lam, "region": args.region, "wrap": args.wrap,
        "rt": args.rt, "alpha": args.alpha, "beta_db": args.beta_db,
        "scheme": args.scheme, "phi": getattr(args, "phi", None),
        "phi_min": args.phi_min, "phi_max": args.phi_max, "window": args.window,
        "slots": args.slots, "drops": args.drops, "seed": args.seed,
        "warmup": getattr(args, "warmup", None),
        "n_pairs": getattr(args, "n_pairs", None),
        "fading": getattr(args, "fading", None),
    }
    merged = dict(values)
    for key, val in mapping.items():
        if val is not None:
            merged[key] = val
    return merged


def _region_from(values: dict) -> Region:
    spec = str(values.get("region", "100x100"))
    try:
        w, _, h = spec.lower().partition("x")
        return Region(float(w), float(h), wrap=bool(values.get("wrap", False)))
    except ValueError as exc:
        raise ConfigError(f"region must look like 100x100, got {spec!r}") from exc


def _channel_from(values: dict) -> ChannelParams:
    noise = values.get("noise_dbm", -70.0)
    if isinstance(noise, str):
        noise_power = 0.0 if noise.lower() == "off" else dbm_to_watts(float(noise))
    else:
        noise_power = dbm_to_watts(float(noise))
    try:
        return ChannelParams(
            alpha=float(values.get("alpha", 4.0)),
            tx_power=dbm_to_watts(float(values.get("tx_power_dbm", 30.0))),
            noise_power=noise_power,
            fading=str(values.get("fading", "rayleigh")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _policy_from(values: dict) -> PolicySpec:
    try:
        return PolicySpec(
            kind=str(values.get("scheme", "sara")),
            phi=values.get("phi"),
            phi_min=float(values.get("phi_min", 0.01)),
            phi_max=float(values.get("phi_max", 1.0)),
            window=int(values.get("window", 100)),
            radius=float(values.get("radius", 10.0)),
            r_cs=float(values.get("r_cs", 10.0)),
            r_b=float(values.get("r_b", 10.0)),
            phi_access=float(values.get("phi_access", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_run_config(values: dict) -> RunConfig:
    try:
        return RunConfig(
            lam=float(values.get("lambda", 0.02)),
            region=_region_from(values),
            r_t=float(values.get("rt", 5.0)),
            channel=_channel_from(values),
            beta_db=float(values.get("beta_db", 3.0)),
            policy=_policy_from(values),
            slots=int(values.get("slots", 100_000)),
            drops=int(values.get("drops", 30)),
            seed=int(values.get("seed", 1)),
            warmup=values.get("warmup"),
            n_pairs=values.get("n_pairs"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _out_path(args, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / default_name


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _emit_rows(rows: list[dict], fmt: str, path: Path) -> None:
    """Deterministic column order, 6 significant digits, CSV or JSON."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            if fmt == "json":
                json.dump(
                    [{k: (float(_fmt(v)) if isinstance(v, float) else v) for k, v in r.items()} for r in rows],
                    fh, indent=2,
                )
                fh.write("\n")
            else:
                if rows:
                    cols = list(rows[0].keys())
                    fh.write(",".join(cols) + "\n")
                    for r in rows:
                        fh.write(",".join(_fmt(r[c]) for c in cols) + "\n")
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        raise SystemExit(3)


def _emit_sidecar(path: Path, values: dict, extra: dict | None = None) -> None:
    """Replay manifest in the CLI's own config format."""
    side = path.with_suffix(path.suffix + ".meta.cfg")
    try:
        with open(side, "w") as fh:
            fh.write("# replay configuration\n")
            for key in sorted(values):
                fh.write(f"{key} = {values[key]}\n")
            for key, val in (extra or {}).items():
                fh.write(f"# {key}: {val}\n")
    except OSError as exc:
        print(f"error: cannot write {side}: {exc}", file=sys.stderr)
        raise SystemExit(3)


def _resolved_values(cfg: RunConfig, values: dict) -> dict:
    """Full key=value view of a run configuration for the sidecar."""
    out = {
        "lambda": cfg.lam,
        "region": f"{cfg.region.width:g}x{cfg.region.height:g}",
        "wrap": cfg.region.wrap,
        "rt": cfg.r_t,
        "alpha": cfg.channel.alpha,
        "tx_power_dbm": watts_to_dbm(cfg.channel.tx_power),
        "noise_dbm": (
            "off" if cfg.channel.noise_power == 0.0
            else watts_to_dbm(cfg.channel.noise_power)
        ),
        "beta_db": cfg.beta_db,
        "fading": cfg.channel.fading,
        "scheme": cfg.policy.kind,
        "phi_min": cfg.policy.phi_min,
        "phi_max": cfg.policy.phi_max,
        "window": cfg.policy.window,
        "radius": cfg.policy.radius,
        "r_cs": cfg.policy.r_cs,
        "r_b": cfg.policy.r_b,
        "phi_access": cfg.policy.phi_access,
        "slots": cfg.slots,
        "drops": cfg.drops,
        "seed": cfg.seed,
    }
    if cfg.policy.phi is not None and np.ndim(cfg.policy.phi) == 0:
        out["phi"] = cfg.policy.phi
    if values.get("warmup") is not None:
        out["warmup"] = values["warmup"]
    if values.get("n_pairs") is not None:
        out["n_pairs"] = values["n_pairs"]
    return out


def cmd_analytic(args) -> int:
    beta = 10.0 ** ((args.beta_db if args.beta_db is not None else 3.0) / 10.0)
    p = aloha.AlohaParams(lam=args.lam or 0.02, r_t=args.rt or 5.0, beta=beta,
                          alpha=args.alpha or 4.0)
    phis = np.linspace(0.0, 1.0, args.steps)
    rows = [
        {"phi": float(phi), "success_probability": aloha.success_probability(p, phi),
         "ase": aloha.ase_curve(p, phi)}
        for phi in phis
    ]
    path = _out_path(args, "analytic.csv" if args.format == "csv" else "analytic.json")
    _emit_rows(rows, args.format, path)
    print(f"rho(alpha)          = {aloha.rho(p.alpha):.6g}")
    print(f"optimal phi         = {aloha.optimal_phi(p):.6g}")
    print(f"numeric argmax phi  = {aloha.argmax_phi_numeric(p):.6g}")
    print(f"maximum ASE         = {aloha.max_ase(p):.6g}")
    print(f"curve written to {path}")
    return 0


def cmd_oracle(args) -> int:
    channel = ChannelParams(alpha=args.alpha or 4.0, fading="off")
    if args.topology:
        topo = load_topology(args.topology)
    else:
        topo = generate_topology(
            args.lam or 0.02,
            Region(*(float(v) for v in (args.region or "100x100").lower().split("x")),
                   wrap=bool(args.wrap)),
            args.rt or 5.0, seed=args.seed if args.seed is not None else 1, n_pairs=args.n_pairs,
        )
    beta = 10.0 ** ((args.beta_db if args.beta_db is not None else 3.0) / 10.0)
    table = SubsetSinrTable.build(topo, channel)
    rng = np.random.default_rng(args.seed if args.seed is not None else 1)
    pv0 = ProbVector(rng.uniform(args.phi_min or 0.01, args.phi_max or 1.0, topo.n_pairs),
                     args.phi_min or 0.01, args.phi_max or 1.0)
    fp = fixed_point_iterate(table, beta, pv0)
    report = check_axioms(table, beta, trials=args.trials, seed=args.seed if args.seed is not None else 1,
                          phi_min=pv0.phi_min, phi_max=pv0.phi_max)
    rows = [
        {"iteration": it, "pair": pair, "phi": float(fp.trajectory[it, pair])}
        for it in range(fp.trajectory.shape[0])
        for pair in range(topo.n_pairs)
    ]
    path = _out_path(args, "oracle_trajectory.csv")
    _emit_rows(rows, "csv", path)
    report_path = path.with_name(path.stem + "_axioms.json")
    try:
        with open(report_path, "w") as fh:
            json.dump(
                {"trials": report.trials,
                 "positivity_failures": report.positivity_failures,
                 "two_sided_failures_update_map": report.two_sided_failures_update_map,
                 "two_sided_failures_raw_map": report.two_sided_failures_raw_map,
                 "monotonicity_failures": report.monotonicity_failures,
                 "witnesses": report.witnesses},
                fh, indent=2,
            )
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write {report_path}: {exc}", file=sys.stderr)
        return 3
    print(f"pairs                = {topo.n_pairs}")
    print(f"converged            = {fp.converged} in {fp.iterations} iterations "
          f"(residual {fp.residual:.3g})")
    print(f"fixed point          = {np.array2string(fp.phi, precision=4)}")
    print(f"axiom trials         = {report.trials}: positivity failures "
          f"{report.positivity_failures}, update-map two-sided failures "
          f"{report.two_sided_failures_update_map}, raw-map failures "
          f"{report.two_sided_failures_raw_map}")
    print(f"trajectory written to {path}")
    return 0


def cmd_simulate(args) -> int:
    values = _merge_flags(_parse_config_file(args.config) if args.config else {}, args)
    cfg = build_run_config(values)
    if args.trace:
        cfg = replace(cfg, record_trace=True)
    topology = load_topology(args.topology) if args.topology else None
    metrics, results = run(cfg, topology)
    rows = [{
        "scheme": cfg.policy.kind, "lambda": cfg.lam, "beta_db": cfg.beta_db,
        "ase_mean": metrics.ase, "ase_stderr": metrics.ase_stderr,
        "success_rate": metrics.success_rate, "drops": cfg.drops,
        "slots": cfg.slots, "seed": cfg.seed,
    }]
    path = _out_path(args, f"simulate.{args.format}")
    _emit_rows(rows, args.format, path)
    _emit_sidecar(path, _resolved_values(cfg, values),
                  {"drop_seeds": metrics.drop_seeds})
    if args.trace and results and results[0].trace is not None:
        tr = results[0].trace
        trace_rows = [
            {"slot": s, "pair": p,
             "transmitted": int(tr.transmitted[s, p]),
             "success": int(tr.success[s, p]),
             "sinr_db": (10.0 * math.log10(tr.sinr[s, p])
                         if tr.transmitted[s, p] and tr.sinr[s, p] > 0 else "")}
            for s in range(tr.transmitted.shape[0])
            for p in range(tr.transmitted.shape[1])
        ]
        trace_path = path.with_name(path.stem + "_trace.csv")
        _emit_rows(trace_rows, "csv", trace_path)
        print(f"slot trace written to {trace_path}")
    if args.phi_trace and results and results[0].phi_windows is not None:
        tw = results[0].phi_windows
        phi_rows = [
            {"window": w, "pair": p, "phi": float(tw[w, p])}
            for w in range(tw.shape[0]) for p in range(tw.shape[1])
        ]
        phi_path = path.with_name(path.stem + "_phi.csv")
        _emit_rows(phi_rows, "csv", phi_path)
        print(f"probability trace written to {phi_path}")
    print(f"{cfg.policy.kind}: ase = {metrics.ase:.6g} +- {metrics.ase_stderr:.2g}, "
          f"success rate = {metrics.success_rate:.3f}")
    print(f"results written to {path}")
    return 0


def cmd_sweep(args) -> int:
    values = _merge_flags(_parse_config_file(args.config) if args.config else {}, args)
    base = build_run_config(values)
    lams = [float(v) for v in args.lambdas.split(",")]
    betas = [float(v) for v in args.beta_dbs.split(",")]
    schemes = args.schemes.split(",")
    cells = []
    for lam in lams:
        for beta_db in betas:
            for scheme in schemes:
                cells.append(SweepCell(lam, beta_db, _policy_from({**values, "scheme": scheme})))
    rows = [
        {"scheme": r.scheme, "lambda": r.lam, "beta_db": r.beta_db,
         "ase_mean": r.ase_mean, "ase_stderr": r.ase_stderr,
         "success_rate": r.success_rate, "drops": r.drops,
         "slots": r.slots, "seed": r.seed}
        for r in run_experiment(base, cells)
    ]
    path = _out_path(args, f"sweep.{args.format}")
    _emit_rows(rows, args.format, path)
    _emit_sidecar(path, _resolved_values(base, values),
                  {"lambdas": lams, "beta_dbs": betas, "schemes": schemes})
    print(f"{len(rows)} sweep rows written to {path}")
    return 0


def cmd_topology(args) -> int:
    region = Region(*(float(v) for v in (args.region or "100x100").lower().split("x")),
                    wrap=bool(args.wrap))
    topo = generate_topology(args.lam or 0.02, region, args.rt or 5.0,
                             seed=args.seed if args.seed is not None else 1,
                             n_pairs=args.n_pairs)
    path = _out_path(args, "topology.csv")
    try:
        save_topology(topo, path)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return 3
    print(f"{topo.n_pairs} pairs written to {path}")
    return 0


def cmd_validate(args) -> int:
    names = args.criteria.split(",") if args.criteria else None
    results = acceptance.run_all(names)
    for r in results:
        print(r.line())
        if args.verbose or not r.passed:
            for d in r.details:
                print("    " + d)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def _add_common(sub: argparse.ArgumentParser, simulate: bool = False) -> None:
    sub.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="node density per m^2")
    sub.add_argument("--beta-db", dest="beta_db", type=float, default=None,
                     help="target SINR threshold in dB")
    sub.add_argument("--alpha", type=float, default=None, help="pathloss exponent (> 2)")
    sub.add_argument("--rt", type=float, default=None, help="link distance in metres")
    sub.add_argument("--region", type=str, default=None, help="region WxH in metres")
    sub.add_argument("--wrap", action="store_true", default=None,
                     help="toroidal distance metric")
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--out", type=str, default=None, help="output file path")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    if simulate:
        sub.add_argument("--scheme", choices=POLICY_KINDS, default=None)
        sub.add_argument("--phi", type=float, default=None,
                         help="fixed_aloha transmit probability")
        sub.add_argument("--phi-min", dest="phi_min", type=float, default=None)
        sub.add_argument("--phi-max", dest="phi_max", type=float, default=None)
        sub.add_argument("--window", type=int, default=None,
                         help="measurement window in slots")
        sub.add_argument("--slots", type=int, default=None)
        sub.add_argument("--drops", type=int, default=None)
        sub.add_argument("--warmup", type=int, default=None)
        sub.add_argument("--n-pairs", dest="n_pairs", type=int, default=None)
        sub.add_argument("--fading", choices=FADING_MODES, default=None)
        sub.add_argument("--config", type=str, default=None,
                         help="key=value configuration file (flags win)")
        sub.add_argument("--topology", type=str, default=None,
                         help="explicit topology file instead of a random drop")
        sub.add_argument("--trace", action="store_true",
                         help="write a slot-level trace CSV (first drop)")
        sub.add_argument("--phi-trace", dest="phi_trace", action="store_true",
                         help="write the per-window probability trace CSV (first drop)")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sarasim",
        description="Slotted-time SINR random-access simulator and oracles",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    analytic = subs.add_parser("analytic", help="closed-form ALOHA tables")
    _add_common(analytic)
    analytic.add_argument("--steps", type=int, default=101, help="phi grid size")
    analytic.set_defaults(func=cmd_analytic)

    oracle_cmd = subs.add_parser("oracle", help="enumeration checks and fixed point")
    _add_common(oracle_cmd, simulate=True)
    oracle_cmd.add_argument("--trials", type=int, default=100, help="axiom trials")
    oracle_cmd.set_defaults(func=cmd_oracle)

    simulate = subs.add_parser("simulate", help="Monte Carlo run")
    _add_common(simulate, simulate=True)
    simulate.set_defaults(func=cmd_simulate)

    sweep = subs.add_parser("sweep", help="grid of (lambda, beta, scheme) cells")
    _add_common(sweep, simulate=True)
    sweep.add_argument("--lambdas", type=str, default="0.005,0.01,0.02,0.04,0.06")
    sweep.add_argument("--beta-dbs", dest="beta_dbs", type=str, default="3")
    sweep.add_argument("--schemes", type=str, default="sara,optimal_aloha,csma_fixed")
    sweep.set_defaults(func=cmd_sweep)

    topo = subs.add_parser("topology", help="generate and save a topology file")
    _add_common(topo, simulate=True)
    topo.set_defaults(func=cmd_topology)

    validate = subs.add_parser("validate", help="run the acceptance suite")
    validate.add_argument("--criteria", type=str, default=None,
                          help="comma-separated subset of criteria")
    validate.add_argument("--verbose", action="store_true")
    validate.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
