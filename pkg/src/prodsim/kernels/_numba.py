"""JIT-compiled per-firm kernels.

Each kernel loops over firms with ``prange``; a firm only touches its own
rows, so results do not depend on the thread count. Sums over process slots
run in slot order, matching the numpy backend operation for operation.
"""

from __future__ import annotations

import os

import numba
import numpy as np
from numba import njit, prange

from ._common import COMPLETED, DROPPED, FAILED, OVERFLOW, QUEUED, RECEIVED, REJECTED, STARTED, TOL

NAME = "numba"

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # try OpenMP before TBB; an old TBB only produces a warning and falls through anyway
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]


@njit(cache=True, inline="always")
def _used(i, p_rate, p_cap):
    used_rate = 0.0
    used_cap = 0.0
    for j in range(p_rate.shape[1]):
        used_rate += p_rate[i, j]
        used_cap += p_cap[i, j]
    return used_rate, used_cap


@njit(cache=True, inline="always")
def _free_slot(i, p_qty):
    for j in range(p_qty.shape[1]):
        if p_qty[i, j] == 0.0:
            return j
    return -1


@njit(cache=True, inline="always")
def _start(i, j, qty, dur, rate, need_cap, p_rem, p_rate, p_qty, p_cap, p_cost):
    p_rem[i, j] = dur
    p_rate[i, j] = rate
    p_qty[i, j] = qty
    p_cap[i, j] = need_cap
    p_cost[i, j] = 0.0


@njit(cache=True, inline="always")
def _drain(i, used_rate, used_cap, L, Kq, l_p, rho_q,
           p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len, counts):
    qcap = q_qty.shape[1]
    cap_rate = l_p[i] * min(L[i], Kq[i] / rho_q[i])
    lim_rate = L[i] * l_p[i] * (1.0 + TOL)
    lim_cap = Kq[i] * (1.0 + TOL)
    while q_len[i] > 0:
        h = q_head[i]
        qty = q_qty[i, h]
        dur = q_dur[i, h]
        rate = qty / dur
        if rate > cap_rate * (1.0 + TOL):
            q_head[i] = (h + 1) % qcap
            q_len[i] -= 1
            counts[i, DROPPED] += 1
            continue
        need_cap = rate / l_p[i] * rho_q[i]
        if used_rate + rate > lim_rate or used_cap + need_cap > lim_cap:
            break
        j = _free_slot(i, p_qty)
        if j < 0:
            break
        _start(i, j, qty, dur, rate, need_cap, p_rem, p_rate, p_qty, p_cap, p_cost)
        used_rate += rate
        used_cap += need_cap
        q_head[i] = (h + 1) % qcap
        q_len[i] -= 1
        counts[i, STARTED] += 1
    return used_rate, used_cap


@njit(cache=True, inline="always")
def _wip(i, p_cost):
    total = 0.0
    for j in range(p_cost.shape[1]):
        total += p_cost[i, j]
    return total


@njit(cache=True, parallel=True)
def accept_orders(offsets, o_qty, o_dur, L, Kq, l_p, rho_q,
                  p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len, counts):
    n = L.shape[0]
    qcap = q_qty.shape[1]
    for i in prange(n):
        used_rate, used_cap = _used(i, p_rate, p_cap)
        used_rate, used_cap = _drain(i, used_rate, used_cap, L, Kq, l_p, rho_q,
                                     p_rem, p_rate, p_qty, p_cap, p_cost,
                                     q_qty, q_dur, q_head, q_len, counts)
        cap_rate = l_p[i] * min(L[i], Kq[i] / rho_q[i])
        lim_rate = L[i] * l_p[i] * (1.0 + TOL)
        lim_cap = Kq[i] * (1.0 + TOL)
        for k in range(offsets[i], offsets[i + 1]):
            counts[i, RECEIVED] += 1
            qty = o_qty[k]
            dur = o_dur[k]
            rate = qty / dur
            if rate > cap_rate * (1.0 + TOL):
                counts[i, REJECTED] += 1
                continue
            need_cap = rate / l_p[i] * rho_q[i]
            j = -1
            if q_len[i] == 0 and used_rate + rate <= lim_rate and used_cap + need_cap <= lim_cap:
                j = _free_slot(i, p_qty)
            if j >= 0:
                _start(i, j, qty, dur, rate, need_cap, p_rem, p_rate, p_qty, p_cap, p_cost)
                used_rate += rate
                used_cap += need_cap
                counts[i, STARTED] += 1
            elif q_len[i] < qcap:
                pos = (q_head[i] + q_len[i]) % qcap
                q_qty[i, pos] = qty
                q_dur[i, pos] = dur
                q_len[i] += 1
                counts[i, QUEUED] += 1
            else:
                counts[i, OVERFLOW] += 1


@njit(cache=True, parallel=True)
def step_processes(L, K, Kq, l_p, rho_q, fail_p, unif, wage, capital_rate_tick,
                   p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len,
                   wip, accrued, writeoff, counts):
    n = L.shape[0]
    n_slots = p_rem.shape[1]
    draw = fail_p > 0.0
    for i in prange(n):
        price = K[i] / Kq[i] if Kq[i] > 0.0 else 0.0
        acc = 0.0
        lost = 0.0
        for j in range(n_slots):
            if p_rem[i, j] > 0:
                c = p_rate[i, j] / l_p[i] * wage + p_cap[i, j] * price * capital_rate_tick
                p_cost[i, j] += c
                acc += c
                if draw and unif[i, j] < fail_p:
                    lost += p_cost[i, j]
                    p_rem[i, j] = 0
                    p_rate[i, j] = 0.0
                    p_qty[i, j] = 0.0
                    p_cap[i, j] = 0.0
                    p_cost[i, j] = 0.0
                    counts[i, FAILED] += 1
                else:
                    p_rem[i, j] -= 1
        accrued[i] = acc
        writeoff[i] = lost
        used_rate, used_cap = _used(i, p_rate, p_cap)
        _drain(i, used_rate, used_cap, L, Kq, l_p, rho_q,
               p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len, counts)
        wip[i] = _wip(i, p_cost)


@njit(cache=True, parallel=True)
def conclude_production(markup_factor, L, Kq, l_p, rho_q,
                        p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len,
                        fg_qty, fg_value, wip, concluded_cost, concluded_value, counts):
    n = L.shape[0]
    n_slots = p_rem.shape[1]
    for i in prange(n):
        cost = 0.0
        value = 0.0
        for j in range(n_slots):
            if p_qty[i, j] > 0.0 and p_rem[i, j] == 0:
                v = p_cost[i, j] * markup_factor[i]
                fg_qty[i] += p_qty[i, j]
                fg_value[i] += v
                cost += p_cost[i, j]
                value += v
                p_rate[i, j] = 0.0
                p_qty[i, j] = 0.0
                p_cap[i, j] = 0.0
                p_cost[i, j] = 0.0
                counts[i, COMPLETED] += 1
        concluded_cost[i] = cost
        concluded_value[i] = value
        used_rate, used_cap = _used(i, p_rate, p_cap)
        _drain(i, used_rate, used_cap, L, Kq, l_p, rho_q,
               p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len, counts)
        wip[i] = _wip(i, p_cost)


def set_threads(workers: int) -> int:
    """Use ``workers`` numba threads (clipped to the pool size); returns the count in use."""
    workers = max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(workers)
    return workers


def warmup() -> None:
    """Trigger compilation on a tiny problem."""
    one = np.ones(1)
    i1 = np.zeros((1, 1), dtype=np.int64)
    f1 = np.zeros((1, 1))
    counts = np.zeros((1, 8), dtype=np.int64)
    accept_orders(np.zeros(2, dtype=np.int64), np.zeros(0), np.zeros(0, dtype=np.int64), one, one, one, one,
                  i1, f1.copy(), f1.copy(), f1.copy(), f1.copy(), f1.copy(), i1.copy(),
                  np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64), counts)
    step_processes(one, one, one, one, one, 0.0, np.zeros((0, 0)), 1.0, 0.0,
                   i1, f1.copy(), f1.copy(), f1.copy(), f1.copy(), f1.copy(), i1.copy(),
                   np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64),
                   np.zeros(1), np.zeros(1), np.zeros(1), counts)
    conclude_production(one, one, one, one, one,
                        i1, f1.copy(), f1.copy(), f1.copy(), f1.copy(), f1.copy(), i1.copy(),
                        np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64),
                        np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1), counts)
