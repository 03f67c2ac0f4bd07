"""Vectorized numpy twins of the JIT kernels.

Work that is sequential inside a firm (queue draining, one order after
another) runs in rounds: round ``k`` handles the ``k``-th item of every firm
at once. Per-firm sums accumulate column by column in slot order so the
floating-point results match the numba backend exactly.
"""

from __future__ import annotations

import numpy as np

from ._common import COMPLETED, DROPPED, FAILED, OVERFLOW, QUEUED, RECEIVED, REJECTED, STARTED, TOL

NAME = "numpy"


def _used(p_rate, p_cap):
    used_rate = np.zeros(p_rate.shape[0])
    used_cap = np.zeros(p_rate.shape[0])
    for j in range(p_rate.shape[1]):
        used_rate += p_rate[:, j]
        used_cap += p_cap[:, j]
    return used_rate, used_cap


def _row_sum(a):
    total = np.zeros(a.shape[0])
    for j in range(a.shape[1]):
        total += a[:, j]
    return total


def _free_slot(idx, p_qty):
    free = p_qty[idx] == 0.0
    return np.where(free.any(axis=1), free.argmax(axis=1), -1)


def _start(idx, j, qty, dur, rate, need_cap, p_rem, p_rate, p_qty, p_cap, p_cost):
    p_rem[idx, j] = dur
    p_rate[idx, j] = rate
    p_qty[idx, j] = qty
    p_cap[idx, j] = need_cap
    p_cost[idx, j] = 0.0


def _limits(idx, L, Kq, l_p, rho_q):
    cap_rate = l_p[idx] * np.minimum(L[idx], Kq[idx] / rho_q[idx])
    lim_rate = L[idx] * l_p[idx] * (1.0 + TOL)
    lim_cap = Kq[idx] * (1.0 + TOL)
    return cap_rate, lim_rate, lim_cap


def _drain(idx, used_rate, used_cap, L, Kq, l_p, rho_q,
           p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len, counts):
    """Start queue heads while they fit; ``used_*`` are full-length and updated in place."""
    qcap = q_qty.shape[1]
    idx = idx[q_len[idx] > 0]
    while idx.size:
        cap_rate, lim_rate, lim_cap = _limits(idx, L, Kq, l_p, rho_q)
        h = q_head[idx]
        qty = q_qty[idx, h]
        dur = q_dur[idx, h]
        rate = qty / dur
        drop = rate > cap_rate * (1.0 + TOL)
        need_cap = rate / l_p[idx] * rho_q[idx]
        fits = ~drop & (used_rate[idx] + rate <= lim_rate) & (used_cap[idx] + need_cap <= lim_cap)
        j = np.full(idx.size, -1)
        if fits.any():
            j[fits] = _free_slot(idx[fits], p_qty)
        start = j >= 0
        s = idx[start]
        _start(s, j[start], qty[start], dur[start], rate[start], need_cap[start],
               p_rem, p_rate, p_qty, p_cap, p_cost)
        used_rate[s] += rate[start]
        used_cap[s] += need_cap[start]
        counts[s, STARTED] += 1
        counts[idx[drop], DROPPED] += 1
        moved = idx[drop | start]
        q_head[moved] = (q_head[moved] + 1) % qcap
        q_len[moved] -= 1
        idx = moved[q_len[moved] > 0]


def accept_orders(offsets, o_qty, o_dur, L, Kq, l_p, rho_q,
                  p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len, counts):
    n = L.shape[0]
    qcap = q_qty.shape[1]
    used_rate, used_cap = _used(p_rate, p_cap)
    _drain(np.arange(n), used_rate, used_cap, L, Kq, l_p, rho_q,
           p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len, counts)
    n_orders = np.diff(offsets)
    counts[:, RECEIVED] += n_orders
    k = 0
    while True:
        idx = np.flatnonzero(n_orders > k)
        if idx.size == 0:
            break
        o = offsets[idx] + k
        k += 1
        qty = o_qty[o]
        dur = o_dur[o]
        rate = qty / dur
        cap_rate, lim_rate, lim_cap = _limits(idx, L, Kq, l_p, rho_q)
        reject = rate > cap_rate * (1.0 + TOL)
        counts[idx[reject], REJECTED] += 1
        keep = ~reject
        idx, qty, dur, rate = idx[keep], qty[keep], dur[keep], rate[keep]
        lim_rate, lim_cap = lim_rate[keep], lim_cap[keep]
        need_cap = rate / l_p[idx] * rho_q[idx]
        fits = (q_len[idx] == 0) & (used_rate[idx] + rate <= lim_rate) & (used_cap[idx] + need_cap <= lim_cap)
        j = np.full(idx.size, -1)
        if fits.any():
            j[fits] = _free_slot(idx[fits], p_qty)
        start = j >= 0
        s = idx[start]
        _start(s, j[start], qty[start], dur[start], rate[start], need_cap[start],
               p_rem, p_rate, p_qty, p_cap, p_cost)
        used_rate[s] += rate[start]
        used_cap[s] += need_cap[start]
        counts[s, STARTED] += 1
        wait = ~start
        room = wait & (q_len[idx] < qcap)
        r = idx[room]
        pos = (q_head[r] + q_len[r]) % qcap
        q_qty[r, pos] = qty[room]
        q_dur[r, pos] = dur[room]
        q_len[r] += 1
        counts[r, QUEUED] += 1
        counts[idx[wait & ~room], OVERFLOW] += 1


def step_processes(L, K, Kq, l_p, rho_q, fail_p, unif, wage, capital_rate_tick,
                   p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len,
                   wip, accrued, writeoff, counts):
    n = L.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        price = np.where(Kq > 0.0, K / np.where(Kq > 0.0, Kq, 1.0), 0.0)
    running = p_rem > 0
    c = p_rate / l_p[:, None] * wage + p_cap * price[:, None] * capital_rate_tick
    c = np.where(running, c, 0.0)
    p_cost += c
    accrued[:] = _row_sum(c)
    if fail_p > 0.0:
        fail = running & (unif < fail_p)
    else:
        fail = np.zeros_like(running)
    writeoff[:] = _row_sum(np.where(fail, p_cost, 0.0))
    counts[:, FAILED] += fail.sum(axis=1)
    p_rem[running & ~fail] -= 1
    p_rem[fail] = 0
    p_rate[fail] = 0.0
    p_qty[fail] = 0.0
    p_cap[fail] = 0.0
    p_cost[fail] = 0.0
    used_rate, used_cap = _used(p_rate, p_cap)
    _drain(np.arange(n), used_rate, used_cap, L, Kq, l_p, rho_q,
           p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len, counts)
    wip[:] = _row_sum(p_cost)


def conclude_production(markup_factor, L, Kq, l_p, rho_q,
                        p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len,
                        fg_qty, fg_value, wip, concluded_cost, concluded_value, counts):
    n = L.shape[0]
    done = (p_qty > 0.0) & (p_rem == 0)
    v = np.where(done, p_cost * markup_factor[:, None], 0.0)
    q = np.where(done, p_qty, 0.0)
    cst = np.where(done, p_cost, 0.0)
    # inventories are accumulated slot by slot, like the JIT loop
    for j in range(p_qty.shape[1]):
        fg_qty += q[:, j]
        fg_value += v[:, j]
    concluded_cost[:] = _row_sum(cst)
    concluded_value[:] = _row_sum(v)
    counts[:, COMPLETED] += done.sum(axis=1)
    p_rate[done] = 0.0
    p_qty[done] = 0.0
    p_cap[done] = 0.0
    p_cost[done] = 0.0
    used_rate, used_cap = _used(p_rate, p_cap)
    _drain(np.arange(n), used_rate, used_cap, L, Kq, l_p, rho_q,
           p_rem, p_rate, p_qty, p_cap, p_cost, q_qty, q_dur, q_head, q_len, counts)
    wip[:] = _row_sum(p_cost)


def set_threads(workers: int) -> int:
    return 1


def warmup() -> None:
    return None
