"""Time one scenario on the numba kernels and on the pure-numpy fallback.

Usage: python benchmarks/bench_backends.py [--firms N] [--months M] [--scenario NAME]
"""

from __future__ import annotations

import argparse
import time

from prodsim.sim import PRESETS, preset, run_scenario


def timed(name: str, backend: str, firms: int, months: int) -> tuple[float, list[tuple]]:
    cfg = preset(name, n_firms=firms, months=months, backend=backend)
    t0 = time.perf_counter()
    res = run_scenario(cfg, write=False)
    return time.perf_counter() - t0, res.planner_rows


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="prop-regular", choices=sorted(PRESETS))
    p.add_argument("--firms", type=int, default=10_000)
    p.add_argument("--months", type=int, default=144)
    args = p.parse_args()

    # warm the numba cache so compile time is not billed to the run
    timed(args.scenario, "numba", 100, 36)
    t_numba, rows_numba = timed(args.scenario, "numba", args.firms, args.months)
    t_numpy, rows_numpy = timed(args.scenario, "numpy", args.firms, args.months)
    print(f"{args.scenario}, {args.firms} firms x {args.months} months")
    print(f"  numba  {t_numba:8.2f} s")
    print(f"  numpy  {t_numpy:8.2f} s   ({t_numpy / t_numba:.1f}x slower)")
    print(f"  identical planner output: {rows_numba == rows_numpy}")


if __name__ == "__main__":
    main()
