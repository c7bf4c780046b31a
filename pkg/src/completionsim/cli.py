"""``completionsim`` command line.

Exit status: 0 success, 1 invariant violation (or Table 1 mismatch),
2 configuration error.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .config import SCENARIOS, default_config, describe_keys, load_config
from .ecmp import EcmpConfig, ecmp_load, exact_no_collision
from .errors import ConfigError, SimError
from .scenarios import MODES, compare_modes, emit_table1, run_scenario

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _config(args, scenario: str):
    cfg = load_config(args.config) if getattr(args, "config", None) else default_config(scenario)
    if cfg.explicit.get("scenario", scenario) != scenario:
        raise ConfigError(f"config is for scenario {cfg.scenario!r}, not {scenario!r}", key="scenario")
    overrides = {"scenario": scenario}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return cfg.with_overrides(**overrides)


def cmd_run(args) -> int:
    cfg = _config(args, args.scenario)
    result = run_scenario(cfg, args.mode, args.trace)
    rep = result.report
    if args.json:
        sys.stdout.write(rep.to_json())
    elif args.scenario == "table1":
        sys.stdout.write(rep.extra["table"])
    else:
        sys.stdout.write(rep.format_text())
    return EXIT_VIOLATION if rep.violations() else EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args, args.scenario)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()] if args.modes else MODES[args.scenario]
    cmp = compare_modes(cfg, modes)
    sys.stdout.write(cmp.format_table())
    bad = cmp.violations()
    for v in bad:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_table1(args) -> int:
    res = emit_table1(args.seed or 0, ualink_assumption=args.ualink)
    sys.stdout.write(res.text)
    return EXIT_OK if res.ok else EXIT_VIOLATION


def cmd_ecmp(args) -> int:
    cfg = EcmpConfig(args.flows, args.paths, args.qps, args.seed or 0, args.trials)
    res = ecmp_load(cfg)
    for k, v in res.summary().items():
        print(f"{k:<26} {v}")
    units = cfg.flow_count * cfg.qps_per_flow
    print(f"{'exact_no_collision':<26} {float(exact_no_collision(units, cfg.path_count)):.6f}")
    return EXIT_OK


def cmd_keys(args) -> int:
    sys.stdout.write(describe_keys())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="completionsim",
                                description="Completion-versus-agreement gap simulator")
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("scenario", choices=SCENARIOS)
    run.add_argument("--config")
    run.add_argument("--seed", type=int)
    run.add_argument("--trace", help="write the event trace here")
    run.add_argument("--mode")
    run.add_argument("--json", action="store_true", help="print the report as JSON")
    run.set_defaults(func=cmd_run)

    cmp = sub.add_parser("compare", help="run a scenario under several modes")
    cmp.add_argument("scenario", choices=SCENARIOS)
    cmp.add_argument("--modes", help="comma-separated, e.g. RC,UC,SDR")
    cmp.add_argument("--config")
    cmp.add_argument("--seed", type=int)
    cmp.set_defaults(func=cmd_compare)

    t1 = sub.add_parser("table1", help="simulate the interconnect gap matrix")
    t1.add_argument("--seed", type=int)
    t1.add_argument("--ualink", choices=("coherent", "non-coherent"), default="coherent")
    t1.set_defaults(func=cmd_table1)

    ec = sub.add_parser("ecmp", help="hash-based multipath load experiment")
    ec.add_argument("--flows", type=int, default=8)
    ec.add_argument("--paths", type=int, default=16)
    ec.add_argument("--qps", type=int, default=1)
    ec.add_argument("--trials", type=int, default=100_000)
    ec.add_argument("--seed", type=int)
    ec.set_defaults(func=cmd_ecmp)

    keys = sub.add_parser("keys", help="list config keys and defaults")
    keys.set_defaults(func=cmd_keys)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        # bad argument values and unreadable files are configuration problems
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimError as exc:
        print(f"invariant violation: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
