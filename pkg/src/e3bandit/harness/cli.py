"""Command line entry point: ``e3bandit {single,multi,bounds,auction-demo,repro}``."""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .. import regret
from ..env import BanditInstance, gap_summary
from ..matching import auction_run, brute_force, comm_slots
from ..policy_single import parse_log_base
from .config import MULTI_POLICIES, SINGLE_POLICIES, ConfigError, configs_from_dict, load_configs, load_yaml, validate
from .experiment import logging_grid, run_experiment
from .output import emit_bound_csv, emit_csv, fmt

OUTDIR_ENV = "E3BANDIT_OUTDIR"
DEFAULT_VALUES = [[0.2, 0.25, 0.3], [0.4, 0.6, 0.5], [0.7, 0.9, 0.8]]
BOUND_KINDS = ("e3", "e3ts", "de3", "de3ts", "unknown", "ucb1")


def _resolve_out(out: str | None, default: str) -> Path:
    path = Path(out or default)
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir and not path.is_absolute():
        path = Path(outdir) / path
    return path


def _apply_overrides(cfgs, args):
    out = []
    for cfg in cfgs:
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.runs is not None:
            changes["runs"] = args.runs
        if args.horizon is not None:
            changes["horizon_slots"] = args.horizon
            changes["horizon_epochs"] = None
        if args.log_base is not None:
            changes["log_base"] = args.log_base
        cfg = dataclasses.replace(cfg, **changes)
        validate(cfg)
        out.append(cfg)
    return out


def _policy_paths(base: Path, cfgs) -> list[Path]:
    if len(cfgs) == 1:
        return [base]
    return [base.with_name(f"{base.stem}_{c.policy.name}{base.suffix or '.csv'}") for c in cfgs]


def _run_configs(cfgs, args, default_out: str) -> int:
    base = _resolve_out(args.out or cfgs[0].output, default_out)
    for cfg, path in zip(cfgs, _policy_paths(base, cfgs)):
        result = run_experiment(cfg)
        emit_csv(result.records(), path)
        final = result.mean_total[-1]
        print(f"{cfg.policy.name}: T={result.grid[-1]} runs={cfg.runs} mean regret={final:.6g} -> {path}")
        if args.per_run:
            for k in range(cfg.runs):
                emit_csv(result.run_records(k), path.with_name(f"{path.stem}_run{k}{path.suffix}"))
    return 0


def _load_for(args, allowed):
    if not args.config:
        raise ConfigError("--config is required")
    cfgs = load_configs(args.config)
    for c in cfgs:
        if c.policy.name not in allowed:
            raise ConfigError(f"{args.config}: policy {c.policy.name!r} does not belong to this subcommand")
    return _apply_overrides(cfgs, args)


def cmd_single(args) -> int:
    return _run_configs(_load_for(args, SINGLE_POLICIES), args, "single.csv")


def cmd_multi(args) -> int:
    return _run_configs(_load_for(args, MULTI_POLICIES), args, "multi.csv")


def cmd_repro(args) -> int:
    text = resources.files("e3bandit.recipes").joinpath(f"{args.figure}.yaml").read_text()
    cfgs = _apply_overrides(configs_from_dict(yaml.safe_load(text), f"recipe {args.figure}"), args)
    return _run_configs(cfgs, args, f"{args.figure}.csv")


def _bound_values(raw: dict, horizon: int | None, log_base_flag: str | None):
    allowed = {"bound", "instance", "n_arms", "n_players", "delta_min", "delta_max", "gaps", "gamma", "cost",
               "delta", "log_base", "grid", "horizon"}
    extra = set(raw) - allowed
    if extra:
        raise ConfigError(f"unknown bound keys {sorted(extra)}")
    kind = raw.get("bound", "e3")
    if kind not in BOUND_KINDS:
        raise ConfigError(f"bound must be one of {BOUND_KINDS}, got {kind!r}")
    fields = {}
    if "instance" in raw:
        inst = BanditInstance(np.array(raw["instance"]["means"], dtype=float))
        gs = gap_summary(inst)
        fields.update(n_arms=inst.n_arms, n_players=inst.n_players, delta_min=gs.delta_min, delta_max=gs.delta_max,
                      gaps=tuple(float(g) for g in gs.suboptimal_gaps))
    for key in ("n_arms", "n_players", "delta_min", "delta_max"):
        if key in raw:
            fields[key] = raw[key]
    if "gaps" in raw:
        fields["gaps"] = tuple(raw["gaps"])
    if "n_arms" not in fields or "delta_max" not in fields:
        raise ConfigError("bound config needs instance.means or n_arms and delta_max")
    base_raw = log_base_flag or str(raw.get("log_base", "e" if kind == "ucb1" else "2"))
    spec = regret.BoundSpec(gamma=raw.get("gamma", 0), cost=raw.get("cost", 0.0), delta=raw.get("delta"),
                            log_base=parse_log_base(base_raw), **fields)
    horizon = horizon or raw.get("horizon") or 2**20
    grid = raw.get("grid") or {}
    if "points" in grid:
        ts = np.array(sorted(int(x) for x in grid["points"] if 2 <= int(x) <= horizon), dtype=np.int64)
    else:
        ts = logging_grid(horizon, float(grid.get("ratio", 2.0)))
        ts = ts[ts >= 2]
    if kind == "e3" or kind == "de3":
        vals = regret.bound_e3(ts, spec)
    elif kind in ("e3ts", "de3ts"):
        vals = regret.bound_e3ts(ts, spec)
    elif kind == "unknown":
        vals = regret.bound_unknown(ts, spec).value
    else:
        if not spec.gaps:
            raise ConfigError("ucb1 bound needs the arm gaps (instance.means or gaps)")
        vals = regret.bound_ucb1(ts, spec.gaps, spec.log_base)
    return ts, np.broadcast_to(vals, ts.shape)


def cmd_bounds(args) -> int:
    if not args.config:
        raise ConfigError("--config is required")
    try:
        ts, vals = _bound_values(load_yaml(args.config), args.horizon, args.log_base)
    except (TypeError, KeyError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{args.config}: {e}") from e
    if args.out:
        path = emit_bound_csv(ts, vals, _resolve_out(args.out, "bounds.csv"))
        print(f"{len(ts)} points -> {path}")
    else:
        print("t,bound_value")
        for t, v in zip(ts, vals):
            print(f"{int(t)},{fmt(v)}")
    return 0


def _parse_matrix(text: str):
    return [[float(x) for x in row.split(",")] for row in text.split(";") if row.strip()]


def cmd_auction(args) -> int:
    values, eps = DEFAULT_VALUES, 0.001
    if args.config:
        raw = load_yaml(args.config)
        extra = set(raw) - {"values", "epsilon"}
        if extra:
            raise ConfigError(f"{args.config}: unknown keys {sorted(extra)}")
        values = raw.get("values", values)
        eps = raw.get("epsilon", eps)
    if args.values:
        values = _parse_matrix(args.values)
    if args.epsilon is not None:
        eps = args.epsilon
    try:
        values = np.array(values, dtype=float)
        matching, trace = auction_run(values, eps)
        best, opt = brute_force(values) if values.shape[1] <= 8 else (None, float("nan"))
    except ValueError as e:
        raise ConfigError(str(e)) from e
    m, n = values.shape
    comm = comm_slots(m, n, min(eps, 0.5), trace.iterations)
    pairs = ", ".join(f"{i + 1}->{a + 1}" for i, a in enumerate(matching.arms))
    print(f"matching: {pairs}")
    print(f"surplus: {matching.surplus(values):.6f}")
    print(f"optimum: {opt:.6f} (gap {opt - matching.surplus(values):.6f}, epsilon {eps:g})")
    print(f"iterations: {trace.iterations} (bound {trace.iteration_bound})")
    print(f"prices: {' '.join(f'{p:.6f}' for p in trace.prices)}")
    print(f"signalling: {comm.slots} slots, {comm.preference_bits}+{comm.bid_bits} bits per message")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--horizon", type=int, help="horizon in slots")
    common.add_argument("--runs", type=int, help="number of replications")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--log-base", choices=("2", "e"), help="logarithm base for bound curves")
    common.add_argument("--per-run", action="store_true", help="also write one CSV per replication")

    parser = argparse.ArgumentParser(prog="e3bandit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("single", parents=[common], help="single-player experiment").set_defaults(fn=cmd_single)
    sub.add_parser("multi", parents=[common], help="multiplayer experiment").set_defaults(fn=cmd_multi)
    sub.add_parser("bounds", parents=[common], help="theoretical bound curve as CSV").set_defaults(fn=cmd_bounds)
    demo = sub.add_parser("auction-demo", parents=[common], help="run one auction and compare to the optimum")
    demo.add_argument("--values", help='matrix as "a,b,c;d,e,f"')
    demo.add_argument("--epsilon", type=float)
    demo.set_defaults(fn=cmd_auction)
    repro = sub.add_parser("repro", parents=[common], help="reproduce a shipped figure recipe")
    repro.add_argument("figure", choices=("fig1", "fig2"))
    repro.set_defaults(fn=cmd_repro)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")
    try:
        return args.fn(args)
    except (ConfigError, OSError) as e:
        print(f"e3bandit: error: {e}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as e:
        print(f"e3bandit: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
