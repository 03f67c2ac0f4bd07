"""Command-line entry point: ``simulate --scenario <name> | --config <path> [overrides]``."""

from __future__ import annotations

import argparse
import sys

from .core import Policy
from .sim import PRESETS, load_config, preset, run_scenario, with_overrides


def _ids(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(" ", "").split(",") if t)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simulate", description="Run one scenario of the production-economy model.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", choices=sorted(PRESETS), help="built-in scenario preset")
    src.add_argument("--config", help="YAML or JSON scenario file")
    p.add_argument("--list-scenarios", action="store_true", help="print preset names and exit")
    p.add_argument("--seed", type=int)
    p.add_argument("--months", type=int)
    p.add_argument("--warmup-months", type=int)
    p.add_argument("--firms", type=int, dest="n_firms")
    p.add_argument("--policy", choices=[x.name.lower() for x in Policy])
    p.add_argument("--distortion", type=float, dest="order_distortion")
    p.add_argument("--duration-multiplier", type=int)
    p.add_argument("--failure-prob", type=float, dest="failure_probability")
    p.add_argument("--workers", type=int, help="worker threads for the per-firm kernels")
    p.add_argument("--out", dest="out_dir", default=None, help="output directory (default: out/<scenario>)")
    p.add_argument("--trace-firms", type=_ids, help="comma-separated firm ids to log per tick")
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "run":
        argv = argv[1:]
    args = build_parser().parse_args(argv)
    if args.list_scenarios:
        print("\n".join(PRESETS))
        return 0
    overrides = {
        "seed": args.seed, "months": args.months, "warmup_months": args.warmup_months, "n_firms": args.n_firms,
        "distribution_policy": args.policy, "order_distortion": args.order_distortion,
        "duration_multiplier": args.duration_multiplier, "failure_probability": args.failure_probability,
        "workers": args.workers, "out_dir": args.out_dir, "trace_firms": args.trace_firms,
    }
    try:
        if args.config:
            config = with_overrides(load_config(args.config), **overrides)
        elif args.scenario:
            config = with_overrides(preset(args.scenario), **overrides)
        else:
            print("simulate: one of --scenario or --config is required", file=sys.stderr)
            return 2
        if config.out_dir is None:
            config = with_overrides(config, out_dir=f"out/{config.scenario}")
        config.validate()
    except (KeyError, ValueError, OSError) as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_scenario(config)
    except OSError as exc:
        print(f"simulate: cannot write outputs: {exc}", file=sys.stderr)
        return 2
    s = result.summary
    if result.ok:
        print(f"{config.scenario}: final-year GDP {s['final_year_gdp']:.6g}, peak {s['peak_gdp']:.6g}, "
              f"rejections {s['total_rejections']}, failures {s['total_failures']} -> {config.out_dir}")
        return 0
    print(f"{config.scenario}: invariant violated: {result.error}", file=sys.stderr)
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
