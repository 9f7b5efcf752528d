"""Account health accounting and open-access liquidation of pool positions.

Health factor = sum(flagged collateral value * liquidation_threshold) over
debt value; a position is liquidatable strictly below 1. Any caller may
liquidate, repaying up to close_factor of the target's per-asset debt and
seizing collateral worth (1 + bonus) times the repaid value. The seized
collateral is handed over as the pool's IOU token (the claim stays inside the
pool; the liquidator may redeem it afterwards).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import errors
from .fixed import WAD, div_down, div_up, mul_down, require_amount, to_str


@dataclass
class HealthReport:
    account: str
    collateral_value: int  # USD wad, flagged deposits only
    threshold_value: int  # USD wad, weighted by per-asset liquidation threshold
    debt_value: int  # USD wad
    ltv: int | None  # None when collateral_value == 0
    health_factor: int | None  # None means infinite (no debt)

    @property
    def liquidatable(self) -> bool:
        return self.health_factor is not None and self.health_factor < WAD

    def hf_str(self) -> str:
        return "inf" if self.health_factor is None else to_str(self.health_factor)


def account_totals(world, account: str, step: int) -> HealthReport:
    collateral = threshold = debt = 0
    for p in world.pools.values():
        claim = p.underlying_claim(world, account)
        if claim and p.collateral_on.get(account, False):
            value = world.oracle.value_usd(claim, p.params.asset, step)
            collateral += value
            threshold += mul_down(value, p.params.liquidation_threshold)
        owed = p.debt_of(account)
        if owed:
            debt += world.oracle.value_usd(owed, p.params.asset, step)
    ltv = div_down(debt, collateral) if collateral else None
    hf = div_down(threshold, debt) if debt else None
    return HealthReport(account, collateral, threshold, debt, ltv, hf)


def health(world, account: str, step: int) -> HealthReport:
    return account_totals(world, account, step)


def borrowing_power(world, account: str, step: int) -> int:
    """USD borrow capacity: sum of flagged collateral value * collateral_factor."""
    power = 0
    for p in world.pools.values():
        claim = p.underlying_claim(world, account)
        if claim and p.collateral_on.get(account, False):
            value = world.oracle.value_usd(claim, p.params.asset, step)
            power += mul_down(value, p.params.collateral_factor)
    return power


def liquidate(
    world,
    liquidator: str,
    target: str,
    repay_asset: str,
    seize_asset: str,
    repay_amount: int,
    step: int,
) -> int:
    """Repay part of an unhealthy account's debt and seize discounted collateral.

    Returns the seized amount in underlying units of seize_asset; the claim is
    transferred as IOU tokens. The seize is capped at the target's deposit,
    shrinking the effective repay proportionally.
    """
    require_amount(repay_amount)
    if liquidator == target:
        raise errors.SelfLiquidation(liquidator)
    repay_pool = world.pools.get(repay_asset)
    seize_pool = world.pools.get(seize_asset)
    if repay_pool is None:
        raise errors.UnknownAsset(f"no pool for {repay_asset}")
    if seize_pool is None:
        raise errors.UnknownAsset(f"no pool for {seize_asset}")

    before = account_totals(world, target, step)
    if not before.liquidatable:
        raise errors.NotLiquidatable(f"{target} health factor {before.hf_str()}")
    debt = repay_pool.debt_of(target)
    if debt == 0:
        raise errors.NoDebt(f"{target} owes nothing in {repay_asset}")
    max_repay = mul_down(debt, repay_pool.params.close_factor)
    if repay_amount > max_repay:
        raise errors.ExceedsCloseFactor(f"repay {repay_amount} > close-factor cap {max_repay}")
    seize_claim = seize_pool.underlying_claim(world, target)
    if seize_claim == 0 or not seize_pool.collateral_on.get(target, False):
        raise errors.NoSuchCollateral(f"{target} has no flagged {seize_asset} deposit")

    price_repay = world.oracle.price_at(repay_asset, step)
    price_seize = world.oracle.price_at(seize_asset, step)
    bonus = WAD + seize_pool.params.liquidation_bonus

    repay_value = mul_down(repay_amount, price_repay)
    seize_value = mul_down(repay_value, bonus)
    seized = div_down(seize_value, price_seize)
    applied = repay_amount
    if seized > seize_claim:
        # cap at the deposit; shrink the effective repay to keep the
        # (1+bonus) value relation, rounding against the liquidator
        seized = seize_claim
        capped_value = mul_down(seized, price_seize)
        applied = min(repay_amount, div_up(div_up(capped_value, bonus), price_repay))

    # settle the debt leg
    world.ledger.transfer(liquidator, repay_pool.account, repay_asset, applied, tag="liquidation-repay")
    pos = repay_pool.positions[target]
    if pos.rate_mode == "variable":
        if applied >= repay_pool.debt_of(target):
            pos.scaled = 0
        else:
            pos.scaled -= div_down(applied, repay_pool.borrow_index)
    else:
        pos.stable_principal = max(0, pos.stable_principal - applied)
    repay_pool.total_borrows = max(0, repay_pool.total_borrows - applied)
    if pos.scaled == 0 and pos.stable_principal == 0:
        del repay_pool.positions[target]

    # hand over the seized claim as IOU units
    if seize_pool.params.iou_mode == "exchange-rate":
        units = div_down(seized, seize_pool.exchange_rate(world))
    else:
        units = div_down(seized, seize_pool.liquidity_index)
    world.ledger.transfer(target, liquidator, seize_pool.params.iou_asset, units, tag="liquidation-seize")
    seize_pool.collateral_on.setdefault(liquidator, True)

    after = account_totals(world, target, step)
    world.emit(
        kind="liquidation",
        step=step,
        liquidator=liquidator,
        target=target,
        repay_asset=repay_asset,
        repay_amt=to_str(applied),
        seize_asset=seize_asset,
        seized_amt=to_str(seized),
        hf_before=before.hf_str(),
        hf_after=after.hf_str(),
    )
    return seized
