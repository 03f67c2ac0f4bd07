from __future__ import annotations

import os

# the determinism check runs kernels on up to 8 threads, which numba only
# allows if the pool was sized for it before the first import
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

import time  # noqa: E402

import pytest  # noqa: E402

from prodsim.sim import PRESETS, preset, run_scenario  # noqa: E402


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    """Full-scale runs of every preset at the default seed, outputs written to disk."""
    root = tmp_path_factory.mktemp("presets")
    runs = {}
    for name in PRESETS:
        t0 = time.perf_counter()
        res = run_scenario(preset(name, out_dir=str(root / name), workers=1))
        res.elapsed = time.perf_counter() - t0
        res.out_dir = root / name
        runs[name] = res
    return runs
