"""The central planner: order diffusion, investment-goods allocation, purchases.

The planner is the whole demand side. Each tick it issues production orders
to the two sectors, hands out the investment goods it bought during the
previous tick, and buys from every firm's finished-goods inventory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FirmClass, Order, PlannerState, Policy, ProductionType

DEFAULT_ORDER_FLOOR_SHARE = 0.1


@dataclass
class ScenarioPolicy:
    distribution_policy: Policy = Policy.PROPORTIONAL
    order_distortion: float = 0.0
    duration_multiplier: int = 1
    failure_probability: float = 0.05
    order_floor_share: float = DEFAULT_ORDER_FLOOR_SHARE
    # value-equivalent order load per tick; filled in when the population is built
    total_order_flow_target: float | None = None
    purchase_noise: float = 0.1

    def __post_init__(self) -> None:
        self.distribution_policy = Policy.parse(self.distribution_policy)
        self.validate()

    def validate(self) -> None:
        if not 0.0 < self.order_floor_share < 1.0:
            raise ValueError(f"order_floor_share must lie in (0, 1), got {self.order_floor_share}")
        if not 0.0 <= self.failure_probability <= 1.0:
            raise ValueError(f"failure_probability must lie in [0, 1], got {self.failure_probability}")
        if int(self.duration_multiplier) != self.duration_multiplier or self.duration_multiplier < 1:
            raise ValueError(f"duration_multiplier must be an integer >= 1, got {self.duration_multiplier}")
        if self.order_distortion <= -1.0:
            raise ValueError("order_distortion must be > -1")
        if not 0.0 <= self.purchase_noise < 1.0:
            raise ValueError("purchase_noise must lie in [0, 1)")


# ---------------------------------------------------------------------------
# order generation
# ---------------------------------------------------------------------------


def draw_order_quantity(max_order, s: float, rng, size=None):
    """Uniform on ``[s * max_order, max_order)``."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"order floor share must lie in (0, 1), got {s}")
    u = rng.random(size)
    return s * max_order + u * (1.0 - s) * max_order


def draw_order_duration(duration_min, duration_max, multiplier: int, rng, size=None):
    """Integer uniform on ``[duration_min, duration_max]`` times ``multiplier``."""
    if multiplier < 1:
        raise ValueError("duration multiplier must be >= 1")
    return rng.integers(duration_min, np.asarray(duration_max) + 1, size=size) * multiplier


@dataclass
class OrderBatch:
    """Orders issued in one tick, one row per order."""

    firm: np.ndarray  # int64 firm index
    quantity: np.ndarray
    duration: np.ndarray  # int64 ticks
    production_type: np.ndarray  # int64
    issued_tick: int
    first_id: int = 0

    def __len__(self) -> int:
        return len(self.firm)

    @property
    def rate(self) -> np.ndarray:
        return self.quantity / self.duration

    def by_firm(self, n_firms: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR layout: (offsets, quantity, duration) grouped by firm, issue order kept."""
        perm = np.argsort(self.firm, kind="stable")
        counts = np.bincount(self.firm, minlength=n_firms)
        offsets = np.zeros(n_firms + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return offsets, self.quantity[perm], self.duration[perm].astype(np.int64)

    def to_orders(self) -> list[tuple[int, Order]]:
        return [
            (
                int(f),
                Order(
                    id=self.first_id + k,
                    quantity=float(q),
                    duration=int(d),
                    production_type=ProductionType(int(p)),
                    issued_tick=self.issued_tick,
                ),
            )
            for k, (f, q, d, p) in enumerate(
                zip(self.firm, self.quantity, self.duration, self.production_type)
            )
        ]


@dataclass
class OrderTargets:
    """Per-sector firm lists and the baseline flows the planner aims at.

    ``baseline_flow`` holds the undistorted value-equivalent order load per
    tick for (consumption, investment); ``mean_order_value`` is the expected
    value of one order sent to a uniformly chosen firm of the sector.
    """

    sector_firms: tuple[np.ndarray, np.ndarray]
    max_order: np.ndarray
    duration_min: np.ndarray
    duration_max: np.ndarray
    baseline_flow: tuple[float, float]
    mean_order_value: tuple[float, float]

    @classmethod
    def build(
        cls,
        class_index: np.ndarray,
        catalog: list[FirmClass],
        capacity: np.ndarray,
        order_floor_share: float,
        flow_calibration: float,
        capital_rate: float,
    ) -> OrderTargets:
        """Calibrate the baseline flow to ``flow_calibration`` times sector capacity.

        ``capacity`` is the per-firm output capacity (units per tick) used for
        sizing; each unit is weighted by its class's value so the two sectors
        are comparable in money terms.
        """
        ptype = np.array([int(c.production_type) for c in catalog])[class_index]
        value = np.array([c.unit_value(capital_rate) for c in catalog])[class_index]
        max_order = np.array([c.max_order_production for c in catalog])[class_index]
        mean_q = 0.5 * (1.0 + order_floor_share) * max_order
        sectors = []
        flows = []
        mean_values = []
        for p in (ProductionType.CONSUMPTION, ProductionType.INVESTMENT):
            ids = np.flatnonzero(ptype == p)
            sectors.append(ids)
            flows.append(float(flow_calibration * np.sum(capacity[ids] * value[ids])) if ids.size else 0.0)
            mean_values.append(float(np.mean(mean_q[ids] * value[ids])) if ids.size else 0.0)
        return cls(
            sector_firms=(sectors[0], sectors[1]),
            max_order=max_order,
            duration_min=np.array([c.duration_min for c in catalog], dtype=np.int64)[class_index],
            duration_max=np.array([c.duration_max for c in catalog], dtype=np.int64)[class_index],
            baseline_flow=(flows[0], flows[1]),
            mean_order_value=(mean_values[0], mean_values[1]),
        )

    @property
    def total_flow(self) -> float:
        return self.baseline_flow[0] + self.baseline_flow[1]


def sector_flows(baseline: tuple[float, float], distortion: float) -> tuple[float, float]:
    """Scale the investment flow by ``1 + distortion``; consumption absorbs the difference."""
    base_c, base_i = baseline
    inv = base_i * (1.0 + distortion)
    cons = base_c + base_i - inv
    if cons < 0.0:
        raise ValueError(f"distortion {distortion} leaves a negative consumption flow")
    return cons, inv


def generate_cycle_orders(
    targets: OrderTargets, policy: ScenarioPolicy, rng: np.random.Generator, tick: int, first_id: int = 0
) -> OrderBatch:
    flows = sector_flows(targets.baseline_flow, policy.order_distortion)
    firm_parts = []
    type_parts = []
    for p, (ids, flow, mean_value) in enumerate(zip(targets.sector_firms, flows, targets.mean_order_value)):
        if ids.size == 0 or mean_value <= 0.0 or flow <= 0.0:
            continue
        expected = flow / mean_value
        n = int(expected)
        if rng.random() < expected - n:
            n += 1
        firm_parts.append(ids[rng.integers(0, ids.size, size=n)])
        type_parts.append(np.full(n, p, dtype=np.int64))
    if firm_parts:
        firm = np.concatenate(firm_parts)
        ptype = np.concatenate(type_parts)
    else:
        firm = np.zeros(0, dtype=np.int64)
        ptype = np.zeros(0, dtype=np.int64)
    quantity = draw_order_quantity(targets.max_order[firm], policy.order_floor_share, rng, size=firm.size)
    duration = draw_order_duration(
        targets.duration_min[firm], targets.duration_max[firm], policy.duration_multiplier, rng, size=firm.size
    )
    return OrderBatch(
        firm=firm.astype(np.int64),
        quantity=np.asarray(quantity, dtype=np.float64),
        duration=np.asarray(duration, dtype=np.int64),
        production_type=ptype,
        issued_tick=tick,
        first_id=first_id,
    )


# ---------------------------------------------------------------------------
# investment goods
# ---------------------------------------------------------------------------


@dataclass
class Allocation:
    quantity: np.ndarray  # per firm
    unit_value: float  # price at which deliveries enter firm capital
    domestic_q: float
    imported_q: float
    unsatisfied_value: float


def _proportional_factor(requests: np.ndarray, stock: float) -> float:
    total = float(np.sum(requests))
    if total <= stock:
        return 1.0
    factor = stock / total
    # rounding may push the allocated sum a hair above the stock
    while factor > 0.0 and float(np.sum(requests * factor)) > stock:
        factor = float(np.nextafter(factor, 0.0))
    return factor


def distribute_investment_goods(
    requests: np.ndarray,
    state: PlannerState,
    rng: np.random.Generator | None = None,
    request_prices: np.ndarray | None = None,
    random_shares: np.ndarray | None = None,
) -> Allocation:
    """Allocate investment goods to firms under ``state.policy``.

    Domestic goods come out of the planner's stock (bought during the
    previous tick). Under TOTAL and RANDOM the planner ignores its stock and
    any excess is booked as imports. Unsatisfied requests, valued at each
    requester's own capital price, accumulate in ``gross_inv_expected_value``.
    """
    requests = np.asarray(requests, dtype=np.float64)
    if np.any(requests < 0.0) or not np.all(np.isfinite(requests)):
        raise ValueError("investment requests must be finite and non-negative")
    if request_prices is None:
        request_prices = np.full(requests.shape, state.stock_unit_value)
    stock = state.inv_goods_stock_q
    policy = state.policy
    if policy is Policy.ZERO:
        alloc = np.zeros_like(requests)
    elif policy is Policy.TOTAL:
        alloc = requests.copy()
    elif policy is Policy.RANDOM:
        if random_shares is None:
            random_shares = rng.random(requests.shape)
        alloc = requests * random_shares
    else:
        alloc = requests * _proportional_factor(requests, stock)

    unit_value = state.stock_unit_value
    total = float(np.sum(alloc))
    domestic = min(total, stock)
    imported = total - domestic
    if domestic > 0.0:
        if domestic >= stock:
            state.inv_goods_stock_q = 0.0
            state.inv_goods_stock_value = 0.0
        else:
            state.inv_goods_stock_q = stock - domestic
            state.inv_goods_stock_value -= domestic * unit_value
    state.reference_price = unit_value
    state.imported_q += imported
    state.imported_value += imported * unit_value

    requested_value = float(np.sum(requests * request_prices))
    delivered_value = float(np.sum(alloc * request_prices))
    unsatisfied = float(np.sum((requests - alloc) * request_prices))
    state.cumulative_requested_value += requested_value
    state.cumulative_delivered_value += delivered_value
    state.gross_inv_expected_value += unsatisfied
    return Allocation(alloc, unit_value, domestic, imported, unsatisfied)


def receive_investment_goods(state: PlannerState, quantity: float, value: float) -> None:
    state.inv_goods_stock_q += quantity
    state.inv_goods_stock_value += value
    if state.inv_goods_stock_q > 0.0:
        state.reference_price = state.inv_goods_stock_value / state.inv_goods_stock_q


# ---------------------------------------------------------------------------
# purchases
# ---------------------------------------------------------------------------


@dataclass
class Purchase:
    revenue: np.ndarray  # per firm, book value of goods sold
    consumption_value: float
    inv_goods_q: float
    inv_goods_value: float


def purchase_fractions(noise: np.ndarray) -> np.ndarray:
    """Share of each inventory bought when the planner bids ``(1 + eps)`` times its value."""
    return np.minimum(1.0, 1.0 + noise)


def purchase_goods(
    fg_qty: np.ndarray,
    fg_value: np.ndarray,
    production_type: np.ndarray,
    amplitude: float,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> Purchase:
    """Buy from every firm's finished goods; mutates the inventory arrays in place.

    The bid is the inventory value times ``1 + eps`` with ``eps`` uniform on
    ``[-amplitude, amplitude]``; a bid above the inventory just clears it. What
    is left over is bought on later ticks, so purchases track production.
    """
    if noise is None:
        noise = rng.uniform(-amplitude, amplitude, size=fg_qty.shape) if amplitude > 0 else np.zeros(fg_qty.shape)
    frac = purchase_fractions(noise)
    bought_q = fg_qty * frac
    revenue = fg_value * frac
    full = frac >= 1.0
    fg_qty -= bought_q
    fg_value -= revenue
    fg_qty[full] = 0.0
    fg_value[full] = 0.0
    inv = production_type == int(ProductionType.INVESTMENT)
    return Purchase(
        revenue=revenue,
        consumption_value=float(np.sum(revenue[~inv])),
        inv_goods_q=float(np.sum(bought_q[inv])),
        inv_goods_value=float(np.sum(revenue[inv])),
    )
