from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prodsim import firms as fe
from prodsim.firms import FirmArrays
from prodsim.kernels import get_backend
from prodsim.kernels._common import COMPLETED, FAILED, QUEUED, REJECTED, STARTED

BACKENDS = ["numpy", "numba"]


def make_firms(n=1, L=10.0, K_q=1000.0, l_p=0.7, rho_q=1.0, markup=0.0, K=None, **kw):
    f = FirmArrays.empty(n, **kw)
    f.L[:] = L
    f.K_q[:] = K_q
    f.K[:] = K_q if K is None else K
    f.labor_productivity[:] = l_p
    f.recipe_q[:] = rho_q
    f.recipe[:] = rho_q
    f.markup[:] = markup
    return f


def send(f, firm_ids, qty, dur, backend):
    firm_ids = np.asarray(firm_ids, dtype=np.int64)
    perm = np.argsort(firm_ids, kind="stable")
    offsets = np.zeros(len(f) + 1, dtype=np.int64)
    np.cumsum(np.bincount(firm_ids, minlength=len(f)), out=offsets[1:])
    fe.accept_orders(f, offsets, np.asarray(qty, float)[perm], np.asarray(dur)[perm], backend=get_backend(backend))


def test_capacity_examples():
    assert fe.capacity(10, 1e9, 0.7, 1.0) == pytest.approx(7.0)
    assert fe.capacity(10, 0.0, 0.7, 1.0) == 0.0
    assert fe.capacity(0, 100.0, 0.7, 1.0) == 0.0


@pytest.mark.parametrize("backend", BACKENDS)
def test_accept_start_queue_reject(backend):
    f = make_firms()  # capacity 7 per tick
    send(f, [0], [14.0], [2], backend)  # rate 7 fills the firm
    assert f.counts[0, STARTED] == 1
    send(f, [0], [3.0], [1], backend)  # fits total capacity, not free capacity
    assert f.counts[0, QUEUED] == 1 and f.q_len[0] == 1
    send(f, [0], [8.0], [1], backend)  # rate 8 > 7
    assert f.counts[0, REJECTED] == 1
    assert f.q_len[0] == 1


@pytest.mark.parametrize("backend", BACKENDS)
def test_queue_head_starts_when_factors_free(backend):
    kb = get_backend(backend)
    f = make_firms()
    send(f, [0, 0], [7.0, 7.0], [1, 1], backend)
    assert f.q_len[0] == 1
    fe.step_processes(f, 0.0, None, 0.1, 12, backend=kb)
    fe.conclude_production(f, backend=kb)
    assert f.q_len[0] == 0
    assert (f.p_rem[0] > 0).sum() == 1


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("p,expect_failed", [(0.0, 0), (1.0, 5)])
def test_failure_extremes(backend, p, expect_failed):
    kb = get_backend(backend)
    f = make_firms()
    send(f, [0] * 5, [1.0] * 5, [3] * 5, backend)
    unif = np.random.default_rng(0).random(f.p_rem.shape)
    fe.step_processes(f, p, unif, 0.1, 12, backend=kb)
    assert f.counts[0, FAILED] == expect_failed
    if p == 1.0:
        assert f.wip_value[0] == 0.0 and f.locked_labor[0] == 0.0
        assert f.writeoff[0] == pytest.approx(f.accrued[0])


@pytest.mark.parametrize("backend", BACKENDS)
def test_process_runs_exactly_its_duration(backend):
    kb = get_backend(backend)
    f = make_firms()
    send(f, [0], [5.0], [4], backend)
    for tick in range(4):
        assert f.fg_qty[0] == 0.0
        fe.step_processes(f, 0.0, None, 0.1, 12, backend=kb)
        fe.conclude_production(f, backend=kb)
    assert f.fg_qty[0] == 5.0
    assert f.counts[0, COMPLETED] == 1


@pytest.mark.parametrize("backend", BACKENDS)
def test_conclusion_value_with_markup(backend):
    kb = get_backend(backend)
    # class-1-like firm: l_p 0.6, recipe 50 at price 1, markup 0.10
    f = make_firms(L=5.0, K_q=250.0, l_p=0.6, rho_q=50.0, markup=0.10)
    send(f, [0], [3.0], [1], backend)
    fe.step_processes(f, 0.0, None, 0.1, 12, backend=kb)
    cost = f.p_cost[0].sum()
    unit_cost = (1.0 + 50 * 0.1 / 12) / 0.6
    assert cost == pytest.approx(3 * unit_cost)
    fe.conclude_production(f, apply_markup=True, backend=kb)
    assert f.fg_value[0] == pytest.approx(3 * unit_cost * 1.10)
    assert f.wip_value[0] == 0.0


@pytest.mark.parametrize("backend", BACKENDS)
def test_no_markup_keeps_accrued_cost(backend):
    kb = get_backend(backend)
    f = make_firms(markup=0.3)
    send(f, [0], [6.0], [2], backend)
    for _ in range(2):
        fe.step_processes(f, 0.0, None, 0.1, 12, backend=kb)
    cost = f.wip_value[0]
    fe.conclude_production(f, apply_markup=False, backend=kb)
    assert f.fg_value[0] == cost


@pytest.mark.parametrize("backend", BACKENDS)
def test_failed_second_tick_writes_off_accrued(backend):
    kb = get_backend(backend)
    f = make_firms()
    send(f, [0], [4.0], [2], backend)
    fe.step_processes(f, 0.5, np.ones(f.p_rem.shape), 0.1, 12, backend=kb)  # survives
    first = f.wip_value[0]
    u = np.ones(f.p_rem.shape)
    u[0, 0] = 0.0
    fe.step_processes(f, 0.5, u, 0.1, 12, backend=kb)
    assert f.writeoff[0] == pytest.approx(2 * first)
    fe.conclude_production(f, backend=kb)
    assert f.fg_qty[0] == 0.0 and f.fg_value[0] == 0.0


def test_completion_rate_matches_survival():
    n = 10_000
    kb = get_backend()
    f = make_firms(n=n)
    send(f, np.arange(n), np.full(n, 1.2), np.full(n, 12), "numba")
    rng = np.random.default_rng(11)
    for _ in range(12):
        fe.step_processes(f, 0.05, rng.random(f.p_rem.shape), 0.1, 12, backend=kb)
        fe.conclude_production(f, backend=kb)
    rate = f.counts[:, COMPLETED].sum() / n
    p = 0.95 ** 12
    assert abs(rate - p) < 3 * np.sqrt(p * (1 - p) / n)


def _random_world(seed, n=60, slots=8, qcap=4):
    rng = np.random.default_rng(seed)
    f = make_firms(n=n, max_processes=slots, queue_capacity=qcap)
    f.L[:] = rng.integers(1, 20, n)
    f.K_q[:] = rng.uniform(0, 40, n)
    f.K[:] = f.K_q * rng.uniform(1, 3, n)
    f.labor_productivity[:] = rng.choice([0.6, 0.7, 0.8], n)
    f.recipe_q[:] = rng.uniform(1, 3, n)
    f.markup[:] = 0.2
    return f, rng


def _drive(f, rng, backend, ticks=30, p=0.1):
    kb = get_backend(backend)
    n = len(f)
    for _ in range(ticks):
        m = rng.integers(0, 3 * n)
        ids = rng.integers(0, n, m)
        send(f, ids, rng.uniform(0.5, 15, m), rng.integers(1, 6, m), backend)
        fe.step_processes(f, p, rng.random(f.p_rem.shape), 0.1, 12, backend=kb)
        fe.decay_locked_capital(f)
        f.K_q *= 1 - 1 / 144
        f.K *= 1 - 1 / 144
        fe.conclude_production(f, backend=kb)
        assert f.check_invariants() == []


@pytest.mark.parametrize("seed", range(3))
def test_backends_bit_identical(seed):
    a, ra = _random_world(seed)
    b, rb = _random_world(seed)
    _drive(a, ra, "numpy")
    _drive(b, rb, "numba")
    for name in ("p_rem", "p_rate", "p_qty", "p_cap", "p_cost", "q_qty", "q_dur", "q_head", "q_len",
                 "fg_qty", "fg_value", "wip_value", "counts", "accrued", "writeoff"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_factor_conservation_and_wip_ledger(seed):
    f, rng = _random_world(seed, n=20)
    _drive(f, rng, "numpy", ticks=10)
    assert np.all(f.locked_labor <= f.L * (1 + 1e-9))
    assert np.all(f.locked_capital <= f.K_q * (1 + 1e-9) + 1e-12)
    assert np.allclose(f.wip_value, f.p_cost.sum(axis=1), rtol=1e-12, atol=0)


def _utilization(multiplier, seed=3, ticks=300):
    rng = np.random.default_rng(seed)
    f = make_firms(n=200, L=10.0, K_q=1e9, l_p=1.0)
    kb = get_backend()
    busy = 0.0
    for _ in range(ticks):
        m = rng.poisson(200 * 0.8)
        d = rng.integers(1, 5, m)
        q = rng.uniform(1, 10, m) * d  # keep the rate, stretch the work
        send(f, rng.integers(0, 200, m), q * multiplier, d * multiplier, "numba")
        fe.step_processes(f, 0.0, None, 0.1, 12, backend=kb)
        busy += f.locked_labor.sum() / f.L.sum()
        fe.conclude_production(f, backend=kb)
    return busy / ticks


def test_longer_orders_do_not_lower_utilization():
    assert _utilization(2) >= _utilization(1)
