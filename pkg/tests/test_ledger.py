"""Ledger conservation, checkpoint semantics, and journal replay."""

import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lendsim import errors
from lendsim.fixed import wad
from lendsim.ledger import GENESIS_AUTHORITY, Ledger


def fresh(accounts=("a", "b", "c"), assets=("ETH", "DAI")):
    lg = Ledger()
    for asset in assets:
        lg.register_asset(asset)
    for account in accounts:
        lg.register_account(account)
    return lg


def test_transfer_moves_balance():
    lg = fresh()
    lg.mint("a", "ETH", wad(100), GENESIS_AUTHORITY)
    lg.transfer("a", "b", "ETH", wad(40))
    assert lg.balance("a", "ETH") == wad(60)
    assert lg.balance("b", "ETH") == wad(40)


def test_zero_transfer_appends_journal_record():
    lg = fresh()
    lg.mint("a", "ETH", wad(100), GENESIS_AUTHORITY)
    before = len(lg.journal)
    lg.transfer("a", "b", "ETH", 0)
    assert lg.balance("a", "ETH") == wad(100)
    assert lg.balance("b", "ETH") == 0
    assert len(lg.journal) == before + 1


def test_insufficient_balance_leaves_state_unchanged():
    lg = fresh()
    lg.mint("a", "ETH", wad(100), GENESIS_AUTHORITY)
    with pytest.raises(errors.InsufficientBalance):
        lg.transfer("a", "b", "ETH", wad(101))
    assert lg.balance("a", "ETH") == wad(100)
    assert lg.balance("b", "ETH") == 0


def test_unknown_account_and_asset():
    lg = fresh()
    with pytest.raises(errors.UnknownAccount):
        lg.transfer("a", "nobody", "ETH", 1)
    with pytest.raises(errors.UnknownAsset):
        lg.transfer("a", "b", "XXX", 1)


def test_mint_and_burn_round_trip():
    lg = Ledger()
    lg.register_asset("DAI", ["cdp"])
    lg.register_account("b")
    lg.mint("b", "DAI", wad(500), "cdp")
    assert lg.supply("DAI") == wad(500)
    assert lg.balance("b", "DAI") == wad(500)
    lg.burn("b", "DAI", wad(500), "cdp")
    assert lg.supply("DAI") == 0
    assert lg.balance("b", "DAI") == 0
    with pytest.raises(errors.InsufficientBalance):
        lg.burn("b", "DAI", 1, "cdp")


def test_mint_requires_authority():
    lg = Ledger()
    lg.register_asset("DAI", ["cdp"])
    lg.register_account("b")
    with pytest.raises(errors.Unauthorized):
        lg.mint("b", "DAI", 1, "pool:ETH")


def test_rollback_restores_checkpointed_state():
    lg = fresh()
    lg.mint("a", "ETH", wad(100), GENESIS_AUTHORITY)
    snapshot = {acct: lg.balance(acct, "ETH") for acct in ("a", "b", "c")}
    journal_len = len(lg.journal)
    cp = lg.checkpoint()
    lg.transfer("a", "b", "ETH", wad(40))
    lg.rollback(cp)
    assert {acct: lg.balance(acct, "ETH") for acct in ("a", "b", "c")} == snapshot
    assert len(lg.journal) == journal_len


def test_commit_keeps_mutations():
    lg = fresh()
    lg.mint("a", "ETH", wad(100), GENESIS_AUTHORITY)
    cp = lg.checkpoint()
    lg.transfer("a", "b", "ETH", wad(40))
    lg.commit(cp)
    assert lg.balance("b", "ETH") == wad(40)
    assert lg.open_checkpoints() == 0


def test_checkpoints_are_strictly_lifo():
    lg = fresh()
    cp1 = lg.checkpoint()
    cp2 = lg.checkpoint()
    with pytest.raises(errors.CheckpointOrderViolation):
        lg.rollback(cp1)
    lg.commit(cp2)
    lg.rollback(cp1)
    with pytest.raises(errors.CheckpointOrderViolation):
        lg.commit(cp1)


# ---------------------------------------------------------------------------
# property tests
# ---------------------------------------------------------------------------
op_strategy = st.lists(
    st.tuples(
        st.sampled_from(["transfer", "mint", "burn"]),
        st.sampled_from(["a", "b", "c"]),
        st.sampled_from(["a", "b", "c"]),
        st.sampled_from(["ETH", "DAI"]),
        st.integers(min_value=0, max_value=wad(50)),
    ),
    max_size=60,
)


def apply_ops(lg, ops):
    applied = 0
    for op, frm, to, asset, amount in ops:
        try:
            if op == "transfer":
                lg.transfer(frm, to, asset, amount)
            elif op == "mint":
                lg.mint(to, asset, amount, GENESIS_AUTHORITY)
            else:
                lg.burn(frm, asset, amount, GENESIS_AUTHORITY)
            applied += 1
        except errors.SimError:
            pass
    return applied


@given(op_strategy)
def test_conservation_equals_net_minted(ops):
    lg = fresh()
    apply_ops(lg, ops)
    for asset in ("ETH", "DAI"):
        total = sum(lg.balance(acct, asset) for acct in ("a", "b", "c"))
        minted = sum(r.amount for r in lg.journal if r.op == "mint" and r.asset == asset)
        burned = sum(r.amount for r in lg.journal if r.op == "burn" and r.asset == asset)
        assert total == minted - burned
    lg.full_audit()


@given(op_strategy, op_strategy)
@settings(max_examples=50)
def test_rollback_exactness_over_random_sequences(setup_ops, inner_ops):
    lg = fresh()
    apply_ops(lg, setup_ops)
    state_before = {a: dict(t) for a, t in lg._balances.items()}
    journal_before = list(lg.journal)
    cp = lg.checkpoint()
    apply_ops(lg, inner_ops)
    lg.rollback(cp)
    assert {a: dict(t) for a, t in lg._balances.items()} == state_before
    assert lg.journal == journal_before


@given(op_strategy)
@settings(max_examples=50)
def test_journal_replay_reproduces_balances(ops):
    lg = fresh()
    apply_ops(lg, ops)
    replayed = Ledger.replay_balances(lg.journal)
    for asset in ("ETH", "DAI"):
        for acct in ("a", "b", "c"):
            assert replayed.get(asset, {}).get(acct, 0) == lg.balance(acct, asset)


def test_journal_export_schema():
    lg = fresh()
    lg.mint("a", "ETH", wad(5), GENESIS_AUTHORITY, tag="genesis")
    lg.transfer("a", "b", "ETH", wad(1), tag="payment")
    buf = io.StringIO()
    lg.export_journal(buf)
    lines = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert lines[0] == {
        "seq": 0,
        "op": "mint",
        "from": None,
        "to": "a",
        "asset": "ETH",
        "amount": wad(5),
        "tag": "genesis",
    }
    assert [rec["seq"] for rec in lines] == [0, 1]
    assert lines[1]["op"] == "transfer" and lines[1]["tag"] == "payment"
