"""Firm-side production: acceptance, queues, parallel processes, conclusion.

Firm state lives in a structure of arrays (:class:`FirmArrays`). Running
processes occupy slots of fixed-width ``(n, max_processes)`` matrices; an
empty slot has quantity 0. Accepted orders that cannot start wait in a
per-firm FIFO ring buffer.

A process with output rate ``r`` locks ``r / l_p`` workers and
``r / l_p * rho_q`` units of capital, where ``rho_q`` is the recipe
expressed in capital quantity per worker.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .core import Firm, ProductionProcess, ProductionType
from .kernels import N_EVENTS, get_backend
from .kernels._common import TOL


@dataclass
class FirmArrays:
    # per-firm constants
    class_index: np.ndarray
    production_type: np.ndarray
    labor_productivity: np.ndarray
    recipe: np.ndarray  # capital value per worker
    recipe_q: np.ndarray  # capital quantity per worker at the initial price
    markup: np.ndarray
    l_min: np.ndarray
    l_max: np.ndarray
    life_ticks: np.ndarray
    obs_freq: np.ndarray
    # factors
    L: np.ndarray
    L_target: np.ndarray
    K: np.ndarray
    K_q: np.ndarray
    # inventories
    fg_qty: np.ndarray
    fg_value: np.ndarray
    wip_value: np.ndarray
    # process slots
    p_rem: np.ndarray
    p_rate: np.ndarray
    p_qty: np.ndarray
    p_cap: np.ndarray
    p_cost: np.ndarray
    # FIFO queue
    q_qty: np.ndarray
    q_dur: np.ndarray
    q_head: np.ndarray
    q_len: np.ndarray
    # order history ring, slot = tick % H
    h_rate: np.ndarray
    h_dur: np.ndarray
    h_cnt: np.ndarray
    # per-tick scratch
    counts: np.ndarray
    accrued: np.ndarray
    writeoff: np.ndarray
    concluded_cost: np.ndarray
    concluded_value: np.ndarray
    # cumulative event totals
    totals: np.ndarray

    @classmethod
    def empty(cls, n: int, max_processes: int = 64, queue_capacity: int = 16, history: int = 20) -> FirmArrays:
        f = lambda: np.zeros(n)  # noqa: E731
        i = lambda: np.zeros(n, dtype=np.int64)  # noqa: E731
        return cls(
            class_index=i(), production_type=i(), labor_productivity=np.ones(n), recipe=np.ones(n),
            recipe_q=np.ones(n), markup=f(), l_min=f(), l_max=np.full(n, np.inf),
            life_ticks=np.full(n, 144.0), obs_freq=np.ones(n, dtype=np.int64),
            L=f(), L_target=f(), K=f(), K_q=f(),
            fg_qty=f(), fg_value=f(), wip_value=f(),
            p_rem=np.zeros((n, max_processes), dtype=np.int64),
            p_rate=np.zeros((n, max_processes)), p_qty=np.zeros((n, max_processes)),
            p_cap=np.zeros((n, max_processes)), p_cost=np.zeros((n, max_processes)),
            q_qty=np.zeros((n, queue_capacity)), q_dur=np.zeros((n, queue_capacity), dtype=np.int64),
            q_head=i(), q_len=i(),
            h_rate=np.zeros((n, history)), h_dur=np.zeros((n, history)),
            h_cnt=np.zeros((n, history), dtype=np.int64),
            counts=np.zeros((n, N_EVENTS), dtype=np.int64),
            accrued=f(), writeoff=f(), concluded_cost=f(), concluded_value=f(),
            totals=np.zeros(N_EVENTS, dtype=np.int64),
        )

    def __len__(self) -> int:
        return len(self.L)

    def copy(self) -> FirmArrays:
        return FirmArrays(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    # -- derived quantities -------------------------------------------------

    @property
    def capital_price(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.K_q > 0, self.K / np.where(self.K_q > 0, self.K_q, 1.0), np.nan)

    @property
    def locked_labor(self) -> np.ndarray:
        return self.p_rate.sum(axis=1) / self.labor_productivity

    @property
    def locked_capital(self) -> np.ndarray:
        return self.p_cap.sum(axis=1)

    @property
    def running(self) -> np.ndarray:
        return self.p_rem > 0

    def view(self, i: int) -> Firm:
        occupied = np.flatnonzero(self.p_qty[i] > 0)
        running = [
            ProductionProcess(
                quantity=float(self.p_qty[i, j]),
                rate=float(self.p_rate[i, j]),
                remaining_ticks=int(self.p_rem[i, j]),
                labor_locked=float(self.p_rate[i, j] / self.labor_productivity[i]),
                capital_locked=float(self.p_cap[i, j]),
                cost_accrued=float(self.p_cost[i, j]),
            )
            for j in occupied
        ]
        qcap = self.q_qty.shape[1]
        queue = [
            (float(self.q_qty[i, (self.q_head[i] + k) % qcap]), int(self.q_dur[i, (self.q_head[i] + k) % qcap]))
            for k in range(self.q_len[i])
        ]
        return Firm(
            id=i,
            class_index=int(self.class_index[i]),
            production_type=ProductionType(int(self.production_type[i])),
            L=float(self.L[i]),
            K=float(self.K[i]),
            K_q=float(self.K_q[i]),
            obs_freq=int(self.obs_freq[i]),
            queue=queue,
            running=running,
            finished_goods_value=float(self.fg_value[i]),
            finished_goods_quantity=float(self.fg_qty[i]),
            wip_value=float(self.wip_value[i]),
        )

    def check_invariants(self, rtol: float = 1e-9) -> list[str]:
        """Return a description of every violated firm invariant (empty when sound)."""
        problems = []
        for name in ("L", "K", "K_q", "fg_qty", "fg_value", "wip_value"):
            bad = np.flatnonzero(getattr(self, name) < 0)
            if bad.size:
                problems.append(f"{name} < 0 for firms {bad[:10].tolist()}")
        zero_mismatch = np.flatnonzero((self.K == 0) != (self.K_q == 0))
        if zero_mismatch.size:
            problems.append(f"K == 0 xor K_q == 0 for firms {zero_mismatch[:10].tolist()}")
        price = self.capital_price
        has = self.K_q > 0
        bad = np.flatnonzero(has & ~(np.isfinite(price) & (price > 0)))
        if bad.size:
            problems.append(f"capital price not finite/positive for firms {bad[:10].tolist()}")
        slack = lambda x: rtol * np.maximum(1.0, np.abs(x))  # noqa: E731
        bad = np.flatnonzero(self.locked_labor > self.L + slack(self.L))
        if bad.size:
            problems.append(f"locked labor exceeds L for firms {bad[:10].tolist()}")
        bad = np.flatnonzero(self.locked_capital > self.K_q + slack(self.K_q))
        if bad.size:
            problems.append(f"locked capital exceeds K_q for firms {bad[:10].tolist()}")
        bad = np.flatnonzero(np.abs(self.wip_value - self.p_cost.sum(axis=1)) > slack(self.wip_value))
        if bad.size:
            problems.append(f"WIP ledger mismatch for firms {bad[:10].tolist()}")
        if np.any(self.p_rem < 0):
            problems.append("negative remaining ticks")
        return problems


def capacity(L, K_q, labor_productivity, recipe_q):
    """Output per tick allowed by the binding factor: ``l_p * min(L, K_q / rho_q)``."""
    return labor_productivity * np.minimum(L, np.asarray(K_q) / recipe_q)


def free_capacity(firms: FirmArrays) -> np.ndarray:
    """Output rate that could still start now, given the factors already locked."""
    used_rate = firms.p_rate.sum(axis=1)
    free_labor_rate = firms.L * firms.labor_productivity - used_rate
    free_cap_rate = (firms.K_q - firms.p_cap.sum(axis=1)) / firms.recipe_q * firms.labor_productivity
    return np.maximum(0.0, np.minimum(free_labor_rate, free_cap_rate))


def would_reject(rate, total_capacity):
    return np.asarray(rate) > np.asarray(total_capacity) * (1.0 + TOL)


# ---------------------------------------------------------------------------
# phase wrappers
# ---------------------------------------------------------------------------


def accept_orders(firms: FirmArrays, offsets, o_qty, o_dur, backend=None) -> None:
    """Step 3: drain queues, then accept, queue or reject each incoming order.

    ``offsets/o_qty/o_dur`` hold the tick's orders grouped by firm (CSR).
    """
    kb = backend or get_backend()
    kb.accept_orders(
        np.ascontiguousarray(offsets, dtype=np.int64), np.ascontiguousarray(o_qty, dtype=np.float64),
        np.ascontiguousarray(o_dur, dtype=np.int64),
        firms.L, firms.K_q, firms.labor_productivity, firms.recipe_q,
        firms.p_rem, firms.p_rate, firms.p_qty, firms.p_cap, firms.p_cost,
        firms.q_qty, firms.q_dur, firms.q_head, firms.q_len, firms.counts,
    )


def step_processes(firms: FirmArrays, failure_probability: float, unif, capital_rate: float,
                   ticks_per_year: int, wage: float = 1.0, backend=None) -> None:
    """Step 4: every running process accrues one tick of cost, then may fail.

    ``unif`` is an ``(n, max_processes)`` array of uniforms, one per slot; a
    process fails when its draw is below ``failure_probability``. Failed
    work in progress is written off and its factors are freed.
    """
    kb = backend or get_backend()
    if failure_probability > 0.0:
        unif = np.ascontiguousarray(unif, dtype=np.float64)
    else:
        unif = np.zeros((0, 0))
    kb.step_processes(
        firms.L, firms.K, firms.K_q, firms.labor_productivity, firms.recipe_q,
        float(failure_probability), unif, float(wage), float(capital_rate) / ticks_per_year,
        firms.p_rem, firms.p_rate, firms.p_qty, firms.p_cap, firms.p_cost,
        firms.q_qty, firms.q_dur, firms.q_head, firms.q_len,
        firms.wip_value, firms.accrued, firms.writeoff, firms.counts,
    )


def conclude_production(firms: FirmArrays, apply_markup: bool = True, backend=None) -> None:
    """Step 6: finished processes move to inventory at cost, uplifted by the markup if enabled."""
    kb = backend or get_backend()
    factor = 1.0 + firms.markup if apply_markup else np.ones(len(firms))
    kb.conclude_production(
        np.ascontiguousarray(factor),
        firms.L, firms.K_q, firms.labor_productivity, firms.recipe_q,
        firms.p_rem, firms.p_rate, firms.p_qty, firms.p_cap, firms.p_cost,
        firms.q_qty, firms.q_dur, firms.q_head, firms.q_len,
        firms.fg_qty, firms.fg_value, firms.wip_value,
        firms.concluded_cost, firms.concluded_value, firms.counts,
    )


def record_orders(firms: FirmArrays, tick: int, firm_ids, rate, duration) -> None:
    """Write the tick's received orders into the history ring (rejected ones included)."""
    n = len(firms)
    h = tick % firms.h_rate.shape[1]
    firms.h_rate[:, h] = np.bincount(firm_ids, weights=rate, minlength=n)
    firms.h_dur[:, h] = np.bincount(firm_ids, weights=duration, minlength=n)
    firms.h_cnt[:, h] = np.bincount(firm_ids, minlength=n)


def decay_locked_capital(firms: FirmArrays) -> None:
    """Locked capital wears out with the rest of the stock."""
    firms.p_cap -= firms.p_cap / firms.life_ticks[:, None]
