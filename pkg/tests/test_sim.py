from __future__ import annotations

import json

import numpy as np
import pytest

from prodsim.core import default_catalog
from prodsim.sim import (
    PRESETS,
    ScenarioConfig,
    build_population,
    class_counts,
    load_config,
    make_world,
    preset,
    rng_for,
    run_scenario,
    run_tick,
)

SHARES = [c.share_of_firms for c in default_catalog()]


def small(name="prop-regular", **kw):
    kw.setdefault("n_firms", 400)
    kw.setdefault("months", 48)
    return preset(name, **kw)


def test_class_counts_full_scale():
    assert list(class_counts(SHARES, 10_000)) == [8430, 940, 340, 170, 30, 30, 30, 30]


def test_class_counts_small_keep_every_class():
    assert list(class_counts(SHARES, 8)) == [1] * 8
    for n in (9, 17, 100, 1234):
        c = class_counts(SHARES, n)
        assert c.sum() == n and c.min() >= 1
    assert class_counts(SHARES, 0).sum() == 0
    with pytest.raises(ValueError):
        class_counts(SHARES, 5)


def test_workforce_near_target():
    totals = []
    for seed in range(5):
        pop = build_population(preset("prop-regular", seed=seed), default_catalog(), rng_for(seed, 0))
        totals.append(pop.firms.L.sum())
        assert np.all(pop.firms.L >= 1)
    assert abs(np.mean(totals) - 100_000) <= 10_000


def test_initial_state_within_class_bounds():
    cat = default_catalog()
    cfg = preset("prop-regular", n_firms=2000, undersizing=1.0)
    f = build_population(cfg, cat, rng_for(3, 0)).firms
    lo = np.array([c.l_min for c in cat])[f.class_index]
    hi = np.array([c.l_max for c in cat])[f.class_index]
    assert np.all((f.L >= lo) & (f.L <= hi))
    fmin = np.array([c.obs_freq_min for c in cat])[f.class_index]
    fmax = np.array([c.obs_freq_max for c in cat])[f.class_index]
    assert np.all((f.obs_freq >= fmin) & (f.obs_freq <= fmax))


def test_presets_and_unknown_name():
    assert len(PRESETS) == 11
    assert preset("prop-max-inv-2x-fail10").failure_probability == 0.10
    with pytest.raises(KeyError):
        preset("nope")


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        ScenarioConfig(n_firms=3)
    with pytest.raises(ValueError):
        ScenarioConfig(failure_probability=1.5)


def test_same_seed_same_run_and_seed_matters():
    a = run_scenario(small(seed=4), write=False)
    b = run_scenario(small(seed=4), write=False)
    c = run_scenario(small(seed=5), write=False)
    assert a.ok and b.ok
    assert a.planner_rows == b.planner_rows
    assert [y.gdp for y in a.years] == [y.gdp for y in b.years]
    assert [y.gdp for y in a.years] != [y.gdp for y in c.years]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_small_presets_keep_invariants(name):
    res = run_scenario(small(name), write=False, keep_world=True)
    assert res.ok, res.error
    assert len(res.years) == 2
    for y in res.years:
        assert abs(y.gdp - (y.consumption + y.gross_investment + y.inventory_change)) <= 1e-9 * abs(y.gdp)
        assert y.gdp == pytest.approx(y.value_added, rel=1e-9)
    f = res.world.firms
    assert f.check_invariants() == []
    assert res.world.planner.inv_goods_stock_q >= 0.0


def test_planner_stock_ledger_balances():
    res = run_scenario(small("prop-max-inv"), write=False)
    stock = res.planner_series("inv_goods_inventories")
    bought = res.planner_series("inv_goods_bought")
    delivered = res.planner_series("grossInvQ_value")
    prev = np.concatenate([[0.0], stock[:-1]])
    assert np.allclose(stock, prev + bought - delivered, rtol=0, atol=1e-9 * max(1.0, stock.max()))
    assert np.all(stock >= 0.0)


def test_zero_firms_runs():
    res = run_scenario(small(n_firms=0), write=False)
    assert res.ok
    assert all(y.gdp == 0.0 for y in res.years)


def test_zero_policy_never_delivers():
    res = run_scenario(small("planner-zero"), write=False)
    assert np.all(res.planner_series("grossInvQ") == 0.0)
    expected = res.planner_series("grossInvExpected")
    assert np.all(np.diff(expected) >= 0.0)


def test_planner_csv_columns_and_outputs(tmp_path):
    res = run_scenario(small(out_dir=str(tmp_path), trace_firms=(0, 5)), write=True)
    header = (tmp_path / "planner_monthly.csv").read_text().splitlines()[0]
    assert header == "tick,grossInvExpected,inv_goods_bought,inv_goods_inventories,grossInvQ,grossInvQ_value"
    yearly = (tmp_path / "national_accounts_yearly.csv").read_text().splitlines()
    assert yearly[0] == "year,consumption,gross_investment,inventory_change,gdp"
    assert len(yearly) == 1 + len(res.years)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["invariants_ok"] is True and summary["months_run"] == 48
    trace = (tmp_path / "firm_trace.csv").read_text().splitlines()
    assert len(trace) == 1 + 2 * 48


def test_load_config_yaml_and_json(tmp_path):
    y = tmp_path / "c.yaml"
    y.write_text("scenario: prop-max-inv\nseed: 9\nn_firms: 100\nfailure_probability: 0.2\n")
    cfg = load_config(y, months=36)
    assert cfg.order_distortion == preset("prop-max-inv").order_distortion
    assert (cfg.seed, cfg.n_firms, cfg.failure_probability, cfg.months) == (9, 100, 0.2, 36)
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"distribution_policy": "total", "n_firms": 50}))
    assert load_config(j).policy().distribution_policy.name == "TOTAL"
    bad = tmp_path / "bad.yaml"
    bad.write_text("colour: blue\n")
    with pytest.raises((KeyError, ValueError)):
        load_config(bad)


def test_backends_give_identical_runs():
    a = run_scenario(small(backend="numpy", months=36), write=False)
    b = run_scenario(small(backend="numba", months=36), write=False)
    assert a.planner_rows == b.planner_rows
