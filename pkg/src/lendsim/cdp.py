"""Collateralized-debt-position engine issuing a soft-pegged stablecoin.

Vaults lock one or more collateral assets with the vault-engine account and
mint stablecoin debt up to a per-asset issuance fraction of collateral value.
The same fraction is the liquidation bound: there is no margin call, and as
soon as debt strictly exceeds the bound anyone may liquidate by repaying debt
(which is burned) in exchange for collateral at a penalty discount.

A per-step stability fee compounds a global fee index; the fee itself may be
driven by a pluggable policy (constant by default, with a proportional
controller available) consulted once per step with the stablecoin's oracle
price. Debt issuance treats one stablecoin as one USD regardless of its
market price; the market price only matters to traders and the fee policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from . import errors
from .fixed import WAD, div_down, div_up, mul_down, mul_up, require_amount, to_str

VAULT_ENGINE_ACCOUNT = "vault-engine"
CDP_AUTHORITY = "cdp"

VAULT_TELEMETRY_HEADER = "step,vault_id,collateral_value,debt,bound,safe_flag,fee_index"

# fee policies map the stablecoin's oracle price to a per-step fee
FeePolicy = Callable[[int], int]


def constant_fee(fee: int) -> FeePolicy:
    return lambda _price: fee


def proportional_fee(base: int, gain: int, target: int = WAD) -> FeePolicy:
    """Raise the fee when the stablecoin trades below target, lower it above."""

    def policy(price: int) -> int:
        return max(0, base + mul_down(gain, target - price))

    return policy


@dataclass
class Vault:
    vault_id: int
    owner: str
    collateral: dict[str, int] = field(default_factory=dict)
    debt_scaled: int = 0  # debt / fee_index at last touch


class CdpEngine:
    def __init__(
        self,
        dai_asset: str,
        issuance_fraction: dict[str, int],
        stability_fee: int,
        liquidation_penalty: int,
        fee_policy: FeePolicy | None = None,
    ):
        self.dai_asset = dai_asset
        self.issuance_fraction = dict(issuance_fraction)
        self.stability_fee = stability_fee
        self.liquidation_penalty = liquidation_penalty
        self.fee_policy = fee_policy
        self.fee_index = WAD
        self.vaults: dict[int, Vault] = {}
        self._next_vault = 0

    # ------------------------------------------------------------------
    def open_vault(self, owner: str) -> int:
        self._next_vault += 1
        self.vaults[self._next_vault] = Vault(self._next_vault, owner)
        return self._next_vault

    def vault(self, vault_id: int) -> Vault:
        try:
            return self.vaults[vault_id]
        except KeyError:
            raise errors.UnknownVault(str(vault_id)) from None

    def debt_of(self, vault: Vault) -> int:
        return mul_up(vault.debt_scaled, self.fee_index)

    def collateral_value(self, world, vault: Vault, step: int) -> int:
        return sum(
            world.oracle.value_usd(amt, asset, step)
            for asset, amt in vault.collateral.items()
            if amt
        )

    def issuance_bound(self, world, vault: Vault, step: int) -> int:
        """Max debt (stablecoin units at the 1 USD target) the vault supports."""
        bound = 0
        for asset, amt in vault.collateral.items():
            if amt:
                value = world.oracle.value_usd(amt, asset, step)
                bound += mul_down(value, self.issuance_fraction.get(asset, 0))
        return bound

    def is_unsafe(self, world, vault: Vault, step: int) -> bool:
        return self.debt_of(vault) > self.issuance_bound(world, vault, step)

    # ------------------------------------------------------------------
    def lock(self, world, vault_id: int, asset: str, amount: int) -> None:
        require_amount(amount)
        vault = self.vault(vault_id)
        if asset not in self.issuance_fraction:
            raise errors.UnknownAsset(f"{asset} is not accepted vault collateral")
        world.ledger.transfer(vault.owner, VAULT_ENGINE_ACCOUNT, asset, amount, tag="vault-lock")
        vault.collateral[asset] = vault.collateral.get(asset, 0) + amount

    def free(self, world, vault_id: int, asset: str, amount: int, step: int) -> None:
        require_amount(amount)
        vault = self.vault(vault_id)
        held = vault.collateral.get(asset, 0)
        if amount > held:
            raise errors.InsufficientBalance(f"vault {vault_id} holds {held} {asset}")
        if self.debt_of(vault) > 0:
            removed = mul_down(
                world.oracle.value_usd(amount, asset, step),
                self.issuance_fraction.get(asset, 0),
            )
            if self.debt_of(vault) > self.issuance_bound(world, vault, step) - removed:
                raise errors.WouldBreachIssuanceBound(f"vault {vault_id}")
        vault.collateral[asset] = held - amount
        world.ledger.transfer(VAULT_ENGINE_ACCOUNT, vault.owner, asset, amount, tag="vault-free")

    def draw(self, world, vault_id: int, amount: int, step: int) -> None:
        require_amount(amount)
        vault = self.vault(vault_id)
        if amount == 0:
            return
        new_debt = self.debt_of(vault) + amount
        if new_debt > self.issuance_bound(world, vault, step):
            raise errors.ExceedsIssuanceBound(
                f"vault {vault_id}: debt {new_debt} > bound {self.issuance_bound(world, vault, step)}"
            )
        vault.debt_scaled += div_up(amount, self.fee_index)
        world.ledger.mint(vault.owner, self.dai_asset, amount, CDP_AUTHORITY, tag="dai-draw")

    def repay(self, world, vault_id: int, amount: int) -> int:
        require_amount(amount)
        vault = self.vault(vault_id)
        debt = self.debt_of(vault)
        if debt == 0:
            raise errors.NoDebt(f"vault {vault_id}")
        applied = min(amount, debt)
        world.ledger.burn(vault.owner, self.dai_asset, applied, CDP_AUTHORITY, tag="dai-repay")
        if applied == debt:
            vault.debt_scaled = 0
        else:
            vault.debt_scaled -= div_down(applied, self.fee_index)
        return applied

    # ------------------------------------------------------------------
    def accrue(self, world, step: int, dt: int = 1) -> None:
        for _ in range(dt):
            if self.fee_policy is not None:
                self.stability_fee = self.fee_policy(world.oracle.price_at(self.dai_asset, step))
            self.fee_index = mul_up(self.fee_index, WAD + self.stability_fee)

    def set_fee(self, fee: int) -> None:
        if fee < 0:
            raise ValueError("stability fee must be >= 0")
        self.stability_fee = fee

    # ------------------------------------------------------------------
    def liquidate(
        self,
        world,
        liquidator: str,
        vault_id: int,
        repay_amount: int,
        seize_asset: str,
        step: int,
    ) -> int:
        require_amount(repay_amount)
        vault = self.vault(vault_id)
        if not self.is_unsafe(world, vault, step):
            raise errors.VaultSafe(f"vault {vault_id}")
        held = vault.collateral.get(seize_asset, 0)
        if held == 0:
            raise errors.NoSuchCollateral(f"vault {vault_id} holds no {seize_asset}")

        debt = self.debt_of(vault)
        applied = min(repay_amount, debt)
        price_dai = WAD  # issuance accounting values the stablecoin at target
        price_seize = world.oracle.price_at(seize_asset, step)
        penalty = WAD + self.liquidation_penalty

        seize_value = mul_down(mul_down(applied, price_dai), penalty)
        seized = div_down(seize_value, price_seize)
        if seized > held:
            seized = held
            capped_value = mul_down(seized, price_seize)
            applied = min(applied, div_up(div_up(capped_value, penalty), price_dai))

        world.ledger.burn(liquidator, self.dai_asset, applied, CDP_AUTHORITY, tag="vault-liquidation-repay")
        if applied >= debt:
            vault.debt_scaled = 0
        else:
            vault.debt_scaled -= div_down(applied, self.fee_index)
        vault.collateral[seize_asset] = held - seized
        world.ledger.transfer(VAULT_ENGINE_ACCOUNT, liquidator, seize_asset, seized, tag="vault-liquidation-seize")

        world.emit(
            kind="vault-liquidation",
            step=step,
            liquidator=liquidator,
            target=f"vault:{vault_id}",
            repay_asset=self.dai_asset,
            repay_amt=to_str(applied),
            seize_asset=seize_asset,
            seized_amt=to_str(seized),
            hf_before="",
            hf_after="",
        )
        return seized

    # ------------------------------------------------------------------
    def telemetry_rows(self, world, step: int) -> list[str]:
        rows = []
        for vault_id in sorted(self.vaults):
            vault = self.vaults[vault_id]
            value = self.collateral_value(world, vault, step)
            debt = self.debt_of(vault)
            bound = self.issuance_bound(world, vault, step)
            rows.append(
                ",".join(
                    (
                        str(step),
                        str(vault_id),
                        to_str(value),
                        to_str(debt),
                        to_str(bound),
                        str(int(debt <= bound)),
                        to_str(self.fee_index),
                    )
                )
            )
        return rows
