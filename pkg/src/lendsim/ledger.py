"""Journaled balance ledger: the single mutation substrate for every module.

Balances live in nested dicts keyed asset -> account. All mutation flows
through one credit/debit primitive that also maintains a running per-asset
balance sum, which makes the every-step conservation audit O(assets): the sum
must always equal net minted supply exactly.

Checkpoints are strictly LIFO. A checkpoint snapshots balances and records the
journal position; rollback restores the snapshot and truncates the journal, so
a reverted transaction leaves no trace beyond whatever the caller appends
afterwards (e.g. the gas-fee record of a failed flash loan).

Mint/burn authority is a static per-asset whitelist fixed at world
construction; the "genesis" authority funds initial endowments.
"""

from __future__ import annotations

import json
from typing import IO, Iterable, NamedTuple

from . import errors
from .fixed import require_amount

GENESIS_AUTHORITY = "genesis"

ACCOUNT_KINDS = ("user", "pool", "vault-engine", "venue", "fee-sink")


class JournalRecord(NamedTuple):
    seq: int
    op: str  # transfer | mint | burn
    frm: str | None
    to: str | None
    asset: str
    amount: int
    tag: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "op": self.op,
                "from": self.frm,
                "to": self.to,
                "asset": self.asset,
                "amount": self.amount,
                "tag": self.tag,
            },
            separators=(",", ":"),
        )


class Ledger:
    def __init__(self) -> None:
        self._accounts: dict[str, str] = {}  # id -> kind
        self._balances: dict[str, dict[str, int]] = {}  # asset -> account -> raw
        self._mint_auth: dict[str, frozenset[str]] = {}
        self._minted: dict[str, int] = {}  # net minted per asset
        self._sums: dict[str, int] = {}  # running sum of balances per asset
        self.journal: list[JournalRecord] = []
        # open checkpoints: (id, journal_len, balances, minted, sums)
        self._checkpoints: list[tuple[int, int, dict, dict, dict]] = []
        self._cp_counter = 0

    # ------------------------------------------------------------------
    # registration
    # ------------------------------------------------------------------
    def register_account(self, account: str, kind: str = "user") -> str:
        if not account:
            raise ValueError("account id must be non-empty")
        if kind not in ACCOUNT_KINDS:
            raise ValueError(f"unknown account kind {kind!r}")
        if account in self._accounts:
            raise ValueError(f"duplicate account {account!r}")
        self._accounts[account] = kind
        return account

    def register_asset(self, symbol: str, mint_authorities: Iterable[str] = ()) -> str:
        if not symbol:
            raise ValueError("asset symbol must be non-empty")
        if symbol in self._balances:
            raise ValueError(f"duplicate asset {symbol!r}")
        self._balances[symbol] = {}
        self._mint_auth[symbol] = frozenset(mint_authorities) | {GENESIS_AUTHORITY}
        self._minted[symbol] = 0
        self._sums[symbol] = 0
        return symbol

    def has_account(self, account: str) -> bool:
        return account in self._accounts

    def account_kind(self, account: str) -> str:
        try:
            return self._accounts[account]
        except KeyError:
            raise errors.UnknownAccount(account) from None

    def accounts(self) -> list[str]:
        return list(self._accounts)

    def assets(self) -> list[str]:
        return list(self._balances)

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------
    def balance(self, account: str, asset: str) -> int:
        if account not in self._accounts:
            raise errors.UnknownAccount(account)
        try:
            return self._balances[asset].get(account, 0)
        except KeyError:
            raise errors.UnknownAsset(asset) from None

    def supply(self, asset: str) -> int:
        """Net minted supply (mints minus burns) of an asset."""
        try:
            return self._minted[asset]
        except KeyError:
            raise errors.UnknownAsset(asset) from None

    def holders(self, asset: str) -> list[tuple[str, int]]:
        """(account, balance) pairs with positive balance, sorted by account."""
        return sorted(self.iter_holders(asset))

    def iter_holders(self, asset: str):
        """Unsorted variant for hot paths whose results are order-independent."""
        try:
            table = self._balances[asset]
        except KeyError:
            raise errors.UnknownAsset(asset) from None
        return ((a, b) for a, b in table.items() if b > 0)

    # ------------------------------------------------------------------
    # mutation
    # ------------------------------------------------------------------
    def _check_parties(self, asset: str, *accounts: str) -> dict[str, int]:
        try:
            table = self._balances[asset]
        except KeyError:
            raise errors.UnknownAsset(asset) from None
        for account in accounts:
            if account not in self._accounts:
                raise errors.UnknownAccount(account)
        return table

    def _record(self, op: str, frm: str | None, to: str | None, asset: str, amount: int, tag: str) -> None:
        self.journal.append(JournalRecord(len(self.journal), op, frm, to, asset, amount, tag))

    def transfer(self, frm: str, to: str, asset: str, amount: int, tag: str = "transfer") -> None:
        require_amount(amount)
        table = self._check_parties(asset, frm, to)
        if table.get(frm, 0) < amount:
            raise errors.InsufficientBalance(f"{frm} holds {table.get(frm, 0)} {asset}, needs {amount}")
        table[frm] = table.get(frm, 0) - amount
        table[to] = table.get(to, 0) + amount
        self._record("transfer", frm, to, asset, amount, tag)

    def mint(self, to: str, asset: str, amount: int, authority: str, tag: str = "mint") -> None:
        require_amount(amount)
        table = self._check_parties(asset, to)
        if authority not in self._mint_auth[asset]:
            raise errors.Unauthorized(f"{authority!r} may not mint {asset}")
        table[to] = table.get(to, 0) + amount
        self._minted[asset] += amount
        self._sums[asset] += amount
        self._record("mint", None, to, asset, amount, tag)

    def burn(self, frm: str, asset: str, amount: int, authority: str, tag: str = "burn") -> None:
        require_amount(amount)
        table = self._check_parties(asset, frm)
        if authority not in self._mint_auth[asset]:
            raise errors.Unauthorized(f"{authority!r} may not burn {asset}")
        if table.get(frm, 0) < amount:
            raise errors.InsufficientBalance(f"{frm} holds {table.get(frm, 0)} {asset}, needs {amount}")
        table[frm] = table.get(frm, 0) - amount
        self._minted[asset] -= amount
        self._sums[asset] -= amount
        self._record("burn", frm, None, asset, amount, tag)

    # ------------------------------------------------------------------
    # checkpoints (strict LIFO)
    # ------------------------------------------------------------------
    def checkpoint(self) -> int:
        self._cp_counter += 1
        snapshot = (
            self._cp_counter,
            len(self.journal),
            {asset: dict(table) for asset, table in self._balances.items()},
            dict(self._minted),
            dict(self._sums),
        )
        self._checkpoints.append(snapshot)
        return self._cp_counter

    def _pop_checkpoint(self, cp: int) -> tuple[int, int, dict, dict, dict]:
        if not self._checkpoints:
            raise errors.CheckpointOrderViolation(f"no open checkpoint for id {cp}")
        if self._checkpoints[-1][0] != cp:
            raise errors.CheckpointOrderViolation(
                f"checkpoint {cp} is not the most recent open checkpoint"
            )
        return self._checkpoints.pop()

    def rollback(self, cp: int) -> None:
        _, journal_len, balances, minted, sums = self._pop_checkpoint(cp)
        self._balances = balances
        self._minted = minted
        self._sums = sums
        del self.journal[journal_len:]

    def commit(self, cp: int) -> None:
        self._pop_checkpoint(cp)

    def open_checkpoints(self) -> int:
        return len(self._checkpoints)

    # ------------------------------------------------------------------
    # audits and export
    # ------------------------------------------------------------------
    def audit(self) -> None:
        """O(assets) conservation check against the incremental sums."""
        for asset, total in self._sums.items():
            if total != self._minted[asset]:
                raise errors.InvariantViolation(
                    f"conservation broken for {asset}: balances sum {total}, net minted {self._minted[asset]}"
                )

    def full_audit(self) -> None:
        """Recompute every per-asset sum from scratch and compare."""
        for asset, table in self._balances.items():
            fresh = sum(table.values())
            if fresh != self._minted[asset] or fresh != self._sums[asset]:
                raise errors.InvariantViolation(
                    f"conservation broken for {asset}: recomputed {fresh}, "
                    f"net minted {self._minted[asset]}, running sum {self._sums[asset]}"
                )
            for account, bal in table.items():
                if bal < 0:
                    raise errors.InvariantViolation(f"negative balance {bal} for {account}/{asset}")

    def export_journal(self, fp: IO[str]) -> int:
        for record in self.journal:
            fp.write(record.to_json())
            fp.write("\n")
        return len(self.journal)

    @staticmethod
    def replay_balances(records: Iterable[JournalRecord]) -> dict[str, dict[str, int]]:
        """Re-derive balances from a journal alone (authority checks skipped)."""
        balances: dict[str, dict[str, int]] = {}
        for rec in records:
            table = balances.setdefault(rec.asset, {})
            if rec.op == "transfer":
                table[rec.frm] = table.get(rec.frm, 0) - rec.amount
                table[rec.to] = table.get(rec.to, 0) + rec.amount
            elif rec.op == "mint":
                table[rec.to] = table.get(rec.to, 0) + rec.amount
            elif rec.op == "burn":
                table[rec.frm] = table.get(rec.frm, 0) - rec.amount
            else:
                raise ValueError(f"unknown journal op {rec.op!r}")
        return balances
