"""Scenario parsing and validation: referential checks, parameter invariants."""

import json

import pytest

from lendsim.scenario import (
    ParseError,
    ValidationError,
    build_world,
    load_scenario,
    parse_scenario,
    validate_scenario,
)

from conftest import make_doc, pool_doc


def check(doc):
    return validate_scenario(parse_scenario(doc))


def base_doc(**kw):
    return make_doc(
        assets=["ETH", "DAI"],
        pools=[
            pool_doc("ETH", "cETH"),
            pool_doc("DAI", "aDAI", "rebasing", collateral_factor="0.7", liquidation_threshold="0.8"),
        ],
        prices={"ETH": [[0, "2000"]], "DAI": [[0, "1"]]},
        **kw,
    )


def test_well_formed_doc_passes():
    assert check(base_doc()) == []


def test_unsupported_schema_version():
    doc = base_doc()
    doc["schema_version"] = 99
    with pytest.raises(ParseError):
        parse_scenario(doc)


def test_amounts_must_be_decimal_strings():
    doc = base_doc()
    doc["pools"][0]["initial_cash"] = 100
    with pytest.raises(ParseError, match="decimal strings"):
        parse_scenario(doc)


def test_pool_referencing_undefined_asset():
    doc = base_doc()
    doc["pools"][0]["asset"] = "GHOST"
    with pytest.raises(ValidationError, match="GHOST"):
        check(doc)


def test_threshold_not_above_collateral_factor():
    doc = base_doc()
    doc["pools"][0]["liquidation_threshold"] = "0.7"
    doc["pools"][0]["collateral_factor"] = "0.75"
    with pytest.raises(ValidationError, match="liquidation_threshold"):
        check(doc)


def test_all_violations_reported_not_just_first():
    doc = base_doc()
    doc["pools"][0]["asset"] = "GHOST"
    doc["pools"][1]["liquidation_threshold"] = "0.1"
    doc["agents"] = [{"id": "x", "kind": "alien", "endowment": {}, "params": {}}]
    with pytest.raises(ValidationError) as info:
        check(doc)
    text = "\n".join(info.value.problems)
    assert "GHOST" in text
    assert "liquidation_threshold" in text
    assert "alien" in text
    assert len(info.value.problems) >= 3


def test_missing_feed_for_referenced_asset():
    doc = base_doc()
    del doc["price_feeds"]["series"]["DAI"]
    with pytest.raises(ValidationError, match="no feed"):
        check(doc)


def test_non_increasing_feed_steps():
    doc = base_doc()
    doc["price_feeds"]["series"]["ETH"] = [[0, "2000"], [0, "1900"]]
    with pytest.raises(ValidationError, match="strictly increasing"):
        check(doc)


def test_bonus_threshold_product_warns_but_passes():
    doc = base_doc()
    doc["pools"][0]["liquidation_threshold"] = "0.99"
    doc["pools"][0]["liquidation_bonus"] = "0.05"
    warnings = check(doc)
    assert warnings and "improve health" in warnings[0]


def test_duplicate_agent_ids_rejected():
    doc = base_doc()
    doc["agents"] = [
        {"id": "dup", "kind": "depositor", "endowment": {}, "params": {"pool": "ETH"}},
        {"id": "dup", "kind": "depositor", "endowment": {}, "params": {"pool": "ETH"}},
    ]
    with pytest.raises(ValidationError, match="duplicate agent id"):
        check(doc)


def test_reserved_agent_id_rejected():
    doc = base_doc()
    doc["agents"] = [{"id": "scanner", "kind": "depositor", "endowment": {}, "params": {"pool": "ETH"}}]
    with pytest.raises(ValidationError, match="reserved"):
        check(doc)


def test_bad_horizon_and_rewards():
    doc = base_doc()
    doc["horizon"] = 0
    doc["rewards"] = {"emission_per_pool": "1", "supply_split": "1.5"}
    with pytest.raises(ValidationError) as info:
        check(doc)
    text = "\n".join(info.value.problems)
    assert "horizon" in text and "supply_split" in text


def test_agent_params_must_reference_defined_pools_and_venues():
    doc = base_doc()
    doc["agents"] = [
        {"id": "d", "kind": "depositor", "endowment": {}, "params": {"pool": "GHOST"}},
        {"id": "l", "kind": "leverage_spiral", "endowment": {},
         "params": {"collateral": "ETH", "borrow": "DAI", "venue": "nowhere"}},
    ]
    with pytest.raises(ValidationError) as info:
        check(doc)
    text = "\n".join(info.value.problems)
    assert "params.pool" in text and "params.venue" in text


def test_amm_with_zero_reserves_rejected():
    doc = base_doc()
    doc["venues"] = [{"kind": "amm", "id": "amm1", "pair": ["ETH", "DAI"], "reserves": ["0", "10"]}]
    with pytest.raises(ValidationError, match="reserves"):
        check(doc)


def test_gas_asset_must_exist():
    doc = base_doc()
    doc["gas"] = {"asset": "GHOST", "fee": "1"}
    with pytest.raises(ValidationError, match="gas.asset"):
        check(doc)


def test_load_scenario_round_trips_from_disk(tmp_path):
    path = tmp_path / "sc.json"
    path.write_text(json.dumps(base_doc()))
    sc = load_scenario(str(path))
    validate_scenario(sc)
    w = build_world(sc)
    assert set(w.pools) == {"ETH", "DAI"}


def test_malformed_json_is_a_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        load_scenario(str(path))


def test_csv_feed_reference(tmp_path):
    feed = tmp_path / "feed.csv"
    feed.write_text("step,asset,price\n0,ETH,2000\n0,DAI,1\n")
    doc = base_doc()
    doc["price_feeds"] = {"mode": "replay", "csv": str(feed)}
    assert check(doc) == []
    w = build_world(parse_scenario(doc))
    assert w.oracle.price_at("ETH", 5) == 2000 * 10**18
