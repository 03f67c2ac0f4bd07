from __future__ import annotations

import json
import math

import pytest

from prodsim.core import FirmClass, Policy, ProductionType, catalog_to_records, load_catalog, default_catalog


def test_catalog_values():
    cat = default_catalog()
    assert len(cat) == 8
    assert [c.share_of_firms for c in cat] == [0.843, 0.094, 0.034, 0.017, 0.003, 0.003, 0.003, 0.003]
    assert math.isclose(math.fsum(c.share_of_firms for c in cat), 1.0)
    assert [c.production_type for c in cat] == [ProductionType.CONSUMPTION, ProductionType.INVESTMENT] * 4
    c3 = cat[2]
    assert (c3.l_min, c3.l_max, c3.labor_productivity, c3.max_order_production) == (10, 49, 0.7, 50.0)
    c8 = cat[7]
    assert (c8.duration_min, c8.duration_max, c8.recipe, c8.k_max) == (12, 24, 80.0, 70000.0)
    assert all(c.useful_life == 12 for c in cat)


def test_unit_cost_includes_wage_and_capital_compensation():
    c1 = default_catalog()[0]
    # one worker costs 1 and holds 50 of capital paid at 10%/12 per tick
    assert c1.unit_cost() == pytest.approx((1.0 + 50 * 0.10 / 12) / 0.6)
    assert c1.unit_value() == pytest.approx(c1.unit_cost() * 1.10)


@pytest.mark.parametrize("field,value", [
    ("share_of_firms", 1.5), ("l_min", 10), ("duration_min", 0), ("labor_productivity", 0.0), ("useful_life", 0),
])
def test_firm_class_rejects_bad_values(field, value):
    base = catalog_to_records(default_catalog())[0]
    base[field] = value
    with pytest.raises(ValueError):
        FirmClass(**base)


def test_load_catalog_roundtrip(tmp_path):
    path = tmp_path / "classes.json"
    path.write_text(json.dumps({"classes": catalog_to_records(default_catalog())}))
    assert load_catalog(path) == default_catalog()


def test_load_catalog_rejects_bad_share_sum(tmp_path):
    recs = catalog_to_records(default_catalog())
    recs[0]["share_of_firms"] = 0.5
    path = tmp_path / "classes.yaml"
    import yaml

    path.write_text(yaml.safe_dump(recs))
    with pytest.raises(ValueError, match="sum"):
        load_catalog(path)


def test_load_catalog_rejects_unknown_keys(tmp_path):
    recs = catalog_to_records(default_catalog())
    recs[0]["colour"] = "red"
    path = tmp_path / "classes.json"
    path.write_text(json.dumps(recs))
    with pytest.raises(ValueError, match="unknown"):
        load_catalog(path)


def test_policy_parse():
    assert Policy.parse("proportional") is Policy.PROPORTIONAL
    assert Policy.parse(" Zero ") is Policy.ZERO
    assert Policy.parse(1) is Policy.TOTAL
    with pytest.raises(ValueError):
        Policy.parse("greedy")
