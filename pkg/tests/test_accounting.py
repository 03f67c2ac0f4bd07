from __future__ import annotations

import numpy as np
import pytest

from prodsim.accounting import (
    AccountsLedger,
    MonthRecord,
    StockFlowError,
    aggregate_national_accounts,
    check_identity,
    firm_value_added,
    tick_income_statement,
)


def test_income_statement_capital_compensation():
    st = tick_income_statement(L=[10.0], K=[120.0], substitutions=[0.5], write_offs=[0.0],
                               revenues=[20.0], value_added=[20.0])
    assert st.capital_compensation[0] == pytest.approx(1.0)
    assert st.wages[0] == 10.0
    assert st.profit[0] == pytest.approx(20.0 - 10.0 - 1.0 - 0.5)


def test_value_added_counts_inventory_build_up_and_write_off():
    # nothing sold, WIP grows by the tick's cost
    assert firm_value_added(0.0, 0.0, 0.0, 2.0, 5.0) == 3.0
    # finished goods sold out of stock: sale offset by the inventory drop
    assert firm_value_added(4.0, 4.0, 0.0, 0.0, 0.0) == 0.0
    # a failed process is written off: negative value added
    assert firm_value_added(0.0, 0.0, 0.0, 6.0, 0.0) == -6.0


def _hand_ledger():
    """Two firms over three ticks, tracked by hand.

    Firm A (consumption) runs a 2-tick process costing 3 per tick, concludes
    at tick 1 with a 10% markup and sells everything at tick 2. Firm B
    (investment) makes 4 per tick in one-tick processes, value 4 each; the
    planner buys all of it and delivers 2 units of value to firms at ticks
    1 and 2, keeping the rest in stock.
    """
    months = []
    inv = {"A_wip": 0.0, "A_fg": 0.0, "B_fg": 0.0, "stock": 0.0}
    flows = [
        # A_wip_end, A_fg_end, A_sales, B_fg_end, B_sales, stock_end, delivered
        (3.0, 0.0, 0.0, 0.0, 4.0, 4.0, 0.0),
        (0.0, 6.6, 0.0, 0.0, 4.0, 6.0, 2.0),
        (0.0, 0.0, 6.6, 0.0, 4.0, 8.0, 2.0),
    ]
    for t, (aw, af, asales, bf, bsales, stock, delivered) in enumerate(flows):
        va_a = firm_value_added(asales, inv["A_fg"], af, inv["A_wip"], aw)
        va_b = firm_value_added(bsales, inv["B_fg"], bf, 0.0, 0.0)
        d_inv = (aw - inv["A_wip"]) + (af - inv["A_fg"]) + (bf - inv["B_fg"]) + (stock - inv["stock"])
        inv.update(A_wip=aw, A_fg=af, B_fg=bf, stock=stock)
        months.append(MonthRecord(t, asales, delivered, 0.0, d_inv, sum(inv.values()), va_a + va_b))
    return months


def test_hand_ledger_balances_each_tick_and_in_total():
    ledger = AccountsLedger()
    for m in _hand_ledger():
        ledger.record(m)
    yr = aggregate_national_accounts(ledger.months, 0, 1, ticks_per_year=3)
    assert yr.consumption == pytest.approx(6.6)
    assert yr.gross_investment == pytest.approx(4.0)
    assert yr.inventory_change == pytest.approx(8.0)
    assert yr.gdp == pytest.approx(18.6)
    assert yr.value_added == pytest.approx(3.0 + 3.6 + 12.0)


def test_leak_is_detected():
    ledger = AccountsLedger()
    bad = MonthRecord(0, 5.0, 1.0, 0.0, 0.0, 0.0, 6.0 + 1e-6)
    with pytest.raises(StockFlowError):
        ledger.record(bad)


def test_identity_tolerance_is_relative():
    assert check_identity(1e9, 0.0, 0.0, 1e9 * (1 + 5e-10), "x") < 1e-9
    with pytest.raises(StockFlowError):
        check_identity(1e9, 0.0, 0.0, 1e9 * (1 + 5e-9), "x")
    assert check_identity(0.0, 0.0, 0.0, 0.0, "empty") == 0.0


def test_years_skip_warmup_and_drop_partial_year():
    rng = np.random.default_rng(0)
    ledger = AccountsLedger()
    for t in range(24 + 30):
        c, i, d = rng.random(3)
        ledger.record(MonthRecord(t, c, i, 0.0, d, 0.0, c + i + d))
    years = ledger.years(warmup_months=24)
    assert [y.year for y in years] == [1, 2]
    first = ledger.months[24:36]
    assert years[0].gdp == pytest.approx(sum(m.value_added for m in first), rel=1e-12)
    with pytest.raises(ValueError):
        ledger.year(48, 3)
