"""Domain types and the built-in firm-class catalog.

Money and quantities are plain float64 values. One tick is one month.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from enum import IntEnum
from pathlib import Path

import yaml

TICKS_PER_YEAR = 12
WAGE = 1.0
SHARE_TOLERANCE = 1e-9


class ProductionType(IntEnum):
    CONSUMPTION = 0
    INVESTMENT = 1


class Policy(IntEnum):
    ZERO = 0
    TOTAL = 1
    RANDOM = 2
    PROPORTIONAL = 3

    @classmethod
    def parse(cls, value: str | int | Policy) -> Policy:
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown distribution policy {value!r}") from None
        return cls(value)


@dataclass(frozen=True)
class FirmClass:
    """One firm archetype (a column of the class table)."""

    share_of_firms: float
    l_min: int
    l_max: int
    k_min: float
    k_max: float
    duration_min: int
    duration_max: int
    recipe: float  # capital value per worker
    labor_productivity: float  # output per worker per tick
    max_order_production: float
    useful_life: int  # years
    planned_markup: float
    obs_freq_min: int
    obs_freq_max: int
    production_type: ProductionType

    def __post_init__(self) -> None:
        object.__setattr__(self, "production_type", ProductionType(self.production_type))
        self.validate()

    def validate(self) -> None:
        if not 0.0 <= self.share_of_firms <= 1.0:
            raise ValueError(f"share_of_firms out of [0, 1]: {self.share_of_firms}")
        if not 0 <= self.l_min <= self.l_max:
            raise ValueError(f"bad labor bounds [{self.l_min}, {self.l_max}]")
        if not 0 <= self.k_min <= self.k_max:
            raise ValueError(f"bad capital bounds [{self.k_min}, {self.k_max}]")
        if not 1 <= self.duration_min <= self.duration_max:
            raise ValueError(f"bad duration bounds [{self.duration_min}, {self.duration_max}]")
        if not 1 <= self.obs_freq_min <= self.obs_freq_max:
            raise ValueError(f"bad observation bounds [{self.obs_freq_min}, {self.obs_freq_max}]")
        if self.labor_productivity <= 0 or self.recipe <= 0 or self.max_order_production <= 0:
            raise ValueError("labor_productivity, recipe and max_order_production must be > 0")
        if self.useful_life < 1:
            raise ValueError("useful_life must be >= 1 year")

    def unit_cost(self, capital_rate: float = 0.10, wage: float = WAGE) -> float:
        """Cost of one unit of output when the recipe is exactly respected, before markup.

        Per worker-tick the firm pays one wage plus the compensation of
        ``recipe`` units of capital value, so the result does not depend on
        the capital price.
        """
        return (wage + self.recipe * capital_rate / TICKS_PER_YEAR) / self.labor_productivity

    def unit_value(self, capital_rate: float = 0.10, wage: float = WAGE) -> float:
        return self.unit_cost(capital_rate, wage) * (1.0 + self.planned_markup)


def default_catalog() -> list[FirmClass]:
    """The eight default firm classes, bit-exact."""
    shares = (0.843, 0.094, 0.034, 0.017, 0.003, 0.003, 0.003, 0.003)
    l_min = (1, 1, 10, 10, 50, 50, 250, 250)
    l_max = (9, 9, 49, 49, 249, 249, 1000, 1000)
    k_min = (100, 100, 1200, 1200, 8000, 8000, 30000, 30000)
    k_max = (450, 450, 2400, 2400, 16000, 16000, 70000, 70000)
    d_min = (1, 2, 1, 2, 2, 4, 6, 12)
    d_max = (1, 4, 1, 4, 4, 8, 12, 24)
    recipe = (50, 50, 50, 50, 70, 70, 80, 80)
    l_prod = (0.6, 0.6, 0.7, 0.7, 0.7, 0.7, 0.8, 0.8)
    max_order = (6, 6, 50, 50, 250, 250, 500, 500)
    life = (12,) * 8
    markup = (0.10, 0.10, 0.30, 0.30, 0.20, 0.20, 0.30, 0.30)
    obs_min = (5, 5, 5, 5, 10, 10, 15, 15)
    obs_max = (10, 10, 10, 10, 15, 15, 20, 20)
    ptype = (0, 1, 0, 1, 0, 1, 0, 1)
    return [
        FirmClass(
            share_of_firms=shares[c],
            l_min=l_min[c],
            l_max=l_max[c],
            k_min=float(k_min[c]),
            k_max=float(k_max[c]),
            duration_min=d_min[c],
            duration_max=d_max[c],
            recipe=float(recipe[c]),
            labor_productivity=l_prod[c],
            max_order_production=float(max_order[c]),
            useful_life=life[c],
            planned_markup=markup[c],
            obs_freq_min=obs_min[c],
            obs_freq_max=obs_max[c],
            production_type=ProductionType(ptype[c]),
        )
        for c in range(8)
    ]


def validate_catalog(classes: list[FirmClass]) -> None:
    if not classes:
        raise ValueError("empty class catalog")
    total = math.fsum(c.share_of_firms for c in classes)
    if abs(total - 1.0) > SHARE_TOLERANCE:
        raise ValueError(f"class shares sum to {total!r}, expected 1.0")


def load_catalog(path: str | Path) -> list[FirmClass]:
    """Read a catalog override: a JSON or YAML list of class mappings."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if isinstance(raw, dict):
        raw = raw.get("classes", raw)
    names = {f.name for f in fields(FirmClass)}
    classes = []
    for entry in raw:
        unknown = set(entry) - names
        if unknown:
            raise ValueError(f"unknown firm-class keys: {sorted(unknown)}")
        classes.append(FirmClass(**entry))
    validate_catalog(classes)
    return classes


def catalog_to_records(classes: list[FirmClass]) -> list[dict]:
    out = []
    for c in classes:
        d = asdict(c)
        d["production_type"] = int(c.production_type)
        out.append(d)
    return out


@dataclass(frozen=True)
class Order:
    id: int
    quantity: float
    duration: int
    production_type: ProductionType
    issued_tick: int

    @property
    def rate(self) -> float:
        return self.quantity / self.duration


@dataclass
class ProductionProcess:
    """Snapshot of one running order inside a firm."""

    quantity: float
    rate: float
    remaining_ticks: int
    labor_locked: float
    capital_locked: float
    cost_accrued: float
    failed: bool = False


@dataclass
class Firm:
    """Read-only snapshot of one firm, assembled from the engine's arrays."""

    id: int
    class_index: int
    production_type: ProductionType
    L: float
    K: float
    K_q: float
    obs_freq: int
    queue: list[tuple[float, int]]
    running: list[ProductionProcess]
    finished_goods_value: float
    finished_goods_quantity: float
    wip_value: float

    @property
    def capital_price(self) -> float:
        return self.K / self.K_q if self.K_q > 0 else math.nan


@dataclass
class PlannerState:
    inv_goods_stock_q: float = 0.0
    inv_goods_stock_value: float = 0.0
    gross_inv_expected_value: float = 0.0
    policy: Policy = Policy.PROPORTIONAL
    order_distortion: float = 0.0
    # last known unit value of the stock, used to price imports and empty-stock deliveries
    reference_price: float = 1.0
    cumulative_requested_value: float = 0.0
    cumulative_delivered_value: float = 0.0
    imported_q: float = 0.0
    imported_value: float = 0.0

    @property
    def stock_unit_value(self) -> float:
        if self.inv_goods_stock_q > 0:
            return self.inv_goods_stock_value / self.inv_goods_stock_q
        return self.reference_price


@dataclass
class YearRecord:
    year: int
    consumption: float
    gross_investment: float
    inventory_change: float
    gdp: float
    value_added: float = 0.0
    imports: float = 0.0


@dataclass
class NationalAccounts:
    records: list[YearRecord] = field(default_factory=list)

    def append(self, record: YearRecord) -> None:
        self.records.append(record)

    def series(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.records]
