"""Labor sizing and the three-case capital adaptation rule.

All functions accept scalars or equally shaped numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TICKS_PER_YEAR

CASE_REDUCE = 1  # desired capital below the tolerance band
CASE_KEEP = 2  # inside the band: replace obsolescence only
CASE_GROW = 3  # above the band: replace and ask for an increment


@dataclass(frozen=True)
class AdaptationParams:
    tolerance: float = 0.1
    useful_life: int = 12  # years
    ticks_per_year: int = TICKS_PER_YEAR

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.useful_life < 1 or self.ticks_per_year < 1:
            raise ValueError("useful_life and ticks_per_year must be >= 1")

    @property
    def life_ticks(self) -> int:
        return self.useful_life * self.ticks_per_year


@dataclass
class InvestmentRequest:
    """What firms ask the planner for, in quantity and at their own capital price."""

    substitutions_q: np.ndarray
    increment_q: np.ndarray
    price: np.ndarray
    case: np.ndarray

    @property
    def substitutions(self) -> np.ndarray:
        return self.substitutions_q * self.price

    @property
    def increment(self) -> np.ndarray:
        return self.increment_q * self.price

    @property
    def total_q(self) -> np.ndarray:
        return self.substitutions_q + self.increment_q


# ---------------------------------------------------------------------------
# labor
# ---------------------------------------------------------------------------


def window_demand(h_rate, h_dur, h_cnt, tick, window):
    """Average order rate and expected concurrency over the last ``window`` ticks.

    ``h_*`` are ring buffers of shape (n, H) indexed by ``tick % H``; row ``i``
    looks back ``window[i]`` ticks including ``tick``. Returns ``(q_bar,
    n_bar, count)`` where ``q_bar`` is the mean per-tick rate of the orders
    received, ``n_bar`` the number of them that would run side by side on
    average (total ticks of work over the window, at least one), and
    ``count`` the number of orders seen.
    """
    h_rate = np.atleast_2d(h_rate)
    H = h_rate.shape[1]
    age = (tick - np.arange(H)) % H
    window = np.asarray(window).reshape(-1, 1)
    mask = (age[None, :] < window) & (age[None, :] <= tick)
    cnt = np.where(mask, h_cnt, 0).sum(axis=1)
    rate_sum = np.where(mask, h_rate, 0.0).sum(axis=1)
    dur_sum = np.where(mask, h_dur, 0.0).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        q_bar = np.where(cnt > 0, rate_sum / np.maximum(cnt, 1), 0.0)
    n_bar = np.where(cnt > 0, np.maximum(1.0, dur_sum / window[:, 0]), 0.0)
    return q_bar, n_bar, cnt


def desired_labor(q_bar, n_bar, labor_productivity, l_min, l_max):
    """Workers needed to produce ``q_bar * n_bar`` per tick, clamped to the class bounds."""
    Q = np.asarray(q_bar, dtype=np.float64) * n_bar
    # shave float noise so that 7.0 / 0.7 = 10.000000000000002 still means 10 workers
    need = np.ceil(Q / labor_productivity * (1.0 - 1e-12))
    return np.clip(need, l_min, l_max)


def adjust_labor(L, L_desired, on_schedule, locked_labor=0.0):
    """Move to the desired head count in one step on scheduled ticks.

    Workers busy on running processes are never fired. Returns ``(new_L,
    hires, fires)``.
    """
    L = np.asarray(L, dtype=np.float64)
    floor = np.ceil(np.asarray(locked_labor) * (1.0 - 1e-12))
    target = np.maximum(L_desired, floor)
    new_L = np.where(on_schedule, target, L)
    delta = new_L - L
    return new_L, np.maximum(delta, 0.0), np.maximum(-delta, 0.0)


def on_schedule(tick, obs_freq):
    """True on the ticks where a firm revisits its labor (every ``obs_freq`` ticks)."""
    tick = np.asarray(tick)
    return (tick > 0) & (tick % np.asarray(obs_freq) == 0)


# ---------------------------------------------------------------------------
# capital
# ---------------------------------------------------------------------------


def obsolescence(K, K_q, life_ticks):
    """Per-tick loss of capital, ``K/(u n)`` in value and ``K_q/(u n)`` in quantity."""
    return np.asarray(K) / life_ticks, np.asarray(K_q) / life_ticks


def capital_price(K, K_q, fallback):
    """Implicit price ``K / K_q``; ``fallback`` where the firm holds no capital."""
    K = np.asarray(K, dtype=np.float64)
    K_q = np.asarray(K_q, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(K_q > 0.0, K / np.where(K_q > 0.0, K_q, 1.0), fallback)


def desired_capital(recipe, L_desired, price):
    """Capital quantity that matches the recipe for ``L_desired`` workers at ``price``."""
    return np.asarray(recipe) * L_desired / price


def capital_request(K_q, K_qd, tolerance, K_oq):
    """The three-case rule. Returns ``(case, S_q, delta_q)``.

    The band ``[K_q/(1+tol), K_q(1+tol)]`` is taken on the capital held before
    this tick's obsolescence ``K_oq`` is removed.
    """
    K_q = np.asarray(K_q, dtype=np.float64)
    K_qd = np.asarray(K_qd, dtype=np.float64)
    band_min = K_q / (1.0 + tolerance)
    band_max = K_q * (1.0 + tolerance)
    a = -np.asarray(K_oq, dtype=np.float64)
    b = K_qd - band_min
    below = K_qd < band_min
    above = K_qd > band_max
    case = np.where(below, CASE_REDUCE, np.where(above, CASE_GROW, CASE_KEEP))
    s_reduce = np.where(b <= a, 0.0, np.abs(a) - np.abs(b))
    S_q = np.where(below, s_reduce, np.abs(a))
    delta_q = np.where(above, K_qd - band_max, 0.0)
    return case, S_q, delta_q


def adapt_capital(K, K_q, K_qd, params: AdaptationParams, fallback_price=1.0):
    """Apply obsolescence and derive this tick's investment request.

    Returns ``(K_after, K_q_after, request)``; the request is priced at the
    firm's implicit capital price before the reduction (the reduction is
    proportional, so the price is unchanged by it).
    """
    K = np.asarray(K, dtype=np.float64)
    K_q = np.asarray(K_q, dtype=np.float64)
    K_o, K_oq = obsolescence(K, K_q, params.life_ticks)
    price = capital_price(K, K_q, fallback_price)
    case, S_q, delta_q = capital_request(K_q, K_qd, params.tolerance, K_oq)
    K_after = np.maximum(K - K_o, 0.0)
    K_q_after = np.maximum(K_q - K_oq, 0.0)
    return K_after, K_q_after, InvestmentRequest(S_q, delta_q, price, case)


def apply_investment_delivery(K, K_q, delivered_q, price, substitutions_q):
    """Add delivered capital at ``price``; substitutions are served first.

    Returns ``(K, K_q, substituted_q, increment_q)``.
    """
    delivered_q = np.asarray(delivered_q, dtype=np.float64)
    if np.any(delivered_q < 0.0):
        raise ValueError("negative investment delivery")
    substituted = np.minimum(delivered_q, substitutions_q)
    increment = delivered_q - substituted
    return K + delivered_q * price, K_q + delivered_q, substituted, increment
