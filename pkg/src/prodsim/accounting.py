"""Firm income statements, value added and national accounts.

Inventories (finished goods, work in progress and the planner's stock of
investment goods) are all carried on one valuation basis: accrued cost,
uplifted by the markup when production concludes. Every transfer between
them moves book value, so

    GDP = consumption + domestic gross investment + change in inventories
        = sum of firm value added

holds up to floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import TICKS_PER_YEAR, YearRecord

IDENTITY_RTOL = 1e-9


class StockFlowError(RuntimeError):
    """A value flow leaked: the GDP identity failed beyond tolerance."""


@dataclass
class IncomeStatement:
    wages: np.ndarray
    capital_compensation: np.ndarray
    substitutions: np.ndarray
    write_offs: np.ndarray
    revenues: np.ndarray
    value_added: np.ndarray

    @property
    def profit(self) -> np.ndarray:
        # write-offs already reduce value added through the WIP change
        return self.value_added - self.wages - self.capital_compensation - self.substitutions


def tick_income_statement(L, K, substitutions, write_offs, revenues, value_added,
                          r: float = 0.10, w: float = 1.0, n: int = TICKS_PER_YEAR) -> IncomeStatement:
    """One tick of costs and revenues; capital is paid ``r/n`` per tick (simple interest)."""
    return IncomeStatement(
        wages=np.asarray(L, dtype=np.float64) * w,
        capital_compensation=np.asarray(K, dtype=np.float64) * r / n,
        substitutions=np.asarray(substitutions, dtype=np.float64),
        write_offs=np.asarray(write_offs, dtype=np.float64),
        revenues=np.asarray(revenues, dtype=np.float64),
        value_added=np.asarray(value_added, dtype=np.float64),
    )


def firm_value_added(revenues, fg_start, fg_end, wip_start, wip_end):
    """Sales plus the change in finished goods and work in progress.

    No intermediate inputs are bought, so this is the value of output; a
    write-off shows up as a drop in work in progress.
    """
    return np.asarray(revenues) + (np.asarray(fg_end) - fg_start) + (np.asarray(wip_end) - wip_start)


def identity_gap(gdp: float, value_added: float, scale: float) -> float:
    return abs(gdp - value_added) / max(scale, 1e-300) if scale > 0 else abs(gdp - value_added)


def check_identity(consumption: float, investment: float, inventory_change: float, value_added: float,
                   where: str, rtol: float = IDENTITY_RTOL) -> float:
    gdp = consumption + investment + inventory_change
    scale = max(abs(consumption) + abs(investment) + abs(inventory_change), abs(value_added))
    gap = identity_gap(gdp, value_added, scale)
    if scale == 0.0:
        if gap > 1e-12:
            raise StockFlowError(f"{where}: GDP {gdp!r} != value added {value_added!r} on a zero economy")
    elif gap > rtol:
        raise StockFlowError(
            f"{where}: C + I + dInv = {gdp!r} but value added = {value_added!r} (relative gap {gap:.3e})"
        )
    return gap


@dataclass
class MonthRecord:
    tick: int
    consumption: float
    investment: float  # domestic deliveries, valued
    imports: float
    inventory_change: float  # summed per holder, so rounding scales with the flows
    inventories: float  # end-of-tick stock: firms' FG + WIP + planner stock
    value_added: float


@dataclass
class AccountsLedger:
    """Collects monthly flows and rolls them into yearly national accounts."""

    months: list[MonthRecord] = field(default_factory=list)
    rtol: float = IDENTITY_RTOL

    def record(self, rec: MonthRecord) -> None:
        check_identity(rec.consumption, rec.investment, rec.inventory_change, rec.value_added,
                       f"tick {rec.tick}", self.rtol)
        self.months.append(rec)

    def year(self, first_tick: int, label: int, ticks_per_year: int = TICKS_PER_YEAR) -> YearRecord:
        return aggregate_national_accounts(self.months, first_tick, label, ticks_per_year, self.rtol)

    def years(self, warmup_months: int, ticks_per_year: int = TICKS_PER_YEAR) -> list[YearRecord]:
        out = []
        n_years = (len(self.months) - warmup_months) // ticks_per_year
        for y in range(n_years):
            out.append(self.year(warmup_months + y * ticks_per_year, y + 1, ticks_per_year))
        return out


def aggregate_national_accounts(months: list[MonthRecord], first_tick: int, label: int,
                                ticks_per_year: int = TICKS_PER_YEAR,
                                rtol: float = IDENTITY_RTOL) -> YearRecord:
    """Sum ``ticks_per_year`` monthly records starting at ``first_tick`` into one year."""
    block = months[first_tick:first_tick + ticks_per_year]
    if len(block) != ticks_per_year:
        raise ValueError(f"year starting at tick {first_tick} is incomplete")
    c = sum(m.consumption for m in block)
    i = sum(m.investment for m in block)
    va = sum(m.value_added for m in block)
    d_inv = sum(m.inventory_change for m in block)
    check_identity(c, i, d_inv, va, f"year {label}", rtol)
    return YearRecord(
        year=label,
        consumption=c,
        gross_investment=i,
        inventory_change=d_inv,
        gdp=c + i + d_inv,
        value_added=va,
        imports=sum(m.imports for m in block),
    )
