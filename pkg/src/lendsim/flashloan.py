"""Atomic flash loans: uncollateralized borrow + plan + repay in one transaction.

A plan is a straight-line program over venue trades and liquidations. execute()
checkpoints the world, wires the loan out of the pool, runs the steps, then
repays principal plus the pool's flash fee (credited to reserves). Any failure
rolls the world back to the checkpoint; the configured gas fee is charged
either way, so a reverted plan's only surviving mutation is the gas record.

Scanners look for two plan shapes: two-venue price-gap arbitrage (sized in
closed form on quote venues, by ternary search on the unimodal profit curve
when an AMM leg is involved) and liquidation of unhealthy accounts or unsafe
vaults (profit measured exactly by running the candidate plan on a scratch
checkpoint and rolling back).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import errors, liquidation
from .fixed import WAD, div_down, mul_down, mul_up, to_str
from .venues import AmmVenue, QuoteVenue, amm_in_given_out
from .world import SCANNER_ACCOUNT, World


# ---------------------------------------------------------------------------
# plan steps
# ---------------------------------------------------------------------------
@dataclass
class SellStep:
    venue_id: str
    asset: str
    amount: int | None = None  # None sells the borrower's full balance


@dataclass
class BuyStep:
    venue_id: str
    asset: str
    amount: int


@dataclass
class SwapStep:
    venue_id: str
    asset_in: str
    amount: int | None = None  # None swaps the borrower's full balance


@dataclass
class LiquidateStep:
    target: str
    repay_asset: str
    seize_asset: str
    amount: int
    vault_id: int | None = None  # set for CDP vault liquidations


PlanStep = SellStep | BuyStep | SwapStep | LiquidateStep


@dataclass
class FlashPlan:
    borrower: str
    asset: str  # loan asset (also the pool it is drawn from)
    amount: int
    steps: list[PlanStep]
    profit_asset: str  # asset in which the outcome's profit is measured


@dataclass
class Committed:
    profit: int  # signed balance delta of the borrower in profit_asset


@dataclass
class Reverted:
    fee_charged: int


Outcome = Committed | Reverted


@dataclass
class Opportunity:
    kind: str  # arbitrage | liquidation
    plan: FlashPlan
    expected_profit: int
    computed_at_step: int
    venue_or_target: str

    def to_record(self, step: int) -> dict:
        return {
            "step": step,
            "kind": self.kind,
            "asset": self.plan.asset,
            "size": to_str(self.plan.amount),
            "expected_profit": to_str(self.expected_profit),
            "profit_asset": self.plan.profit_asset,
            "venue_or_target": self.venue_or_target,
        }


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------
def _venue(world: World, venue_id: str):
    try:
        return world.venues[venue_id]
    except KeyError:
        raise errors.UnknownVenue(venue_id) from None


def _run_step(world: World, borrower: str, step_item: PlanStep, step: int) -> None:
    if isinstance(step_item, SellStep):
        venue = _venue(world, step_item.venue_id)
        amount = step_item.amount
        if amount is None:
            amount = world.ledger.balance(borrower, step_item.asset)
        venue.sell(world, borrower, step_item.asset, amount)
    elif isinstance(step_item, BuyStep):
        venue = _venue(world, step_item.venue_id)
        venue.buy(world, borrower, step_item.asset, step_item.amount)
    elif isinstance(step_item, SwapStep):
        venue = _venue(world, step_item.venue_id)
        amount = step_item.amount
        if amount is None:
            amount = world.ledger.balance(borrower, step_item.asset_in)
        venue.swap(world, borrower, step_item.asset_in, amount)
    elif isinstance(step_item, LiquidateStep):
        if step_item.vault_id is not None:
            if world.cdp is None:
                raise errors.UnknownVault(str(step_item.vault_id))
            world.cdp.liquidate(
                world, borrower, step_item.vault_id, step_item.amount, step_item.seize_asset, step
            )
        else:
            seize_pool = world.pools.get(step_item.seize_asset)
            if seize_pool is None:
                raise errors.UnknownAsset(f"no pool for {step_item.seize_asset}")
            iou = seize_pool.params.iou_asset
            before = world.ledger.balance(borrower, iou)
            liquidation.liquidate(
                world,
                borrower,
                step_item.target,
                step_item.repay_asset,
                step_item.seize_asset,
                step_item.amount,
                step,
            )
            # surface the seized claim as underlying so a swap leg can use it
            gained = world.ledger.balance(borrower, iou) - before
            if gained:
                if seize_pool.params.iou_mode == "exchange-rate":
                    seize_pool.redeem(world, borrower, gained, step)
                else:
                    seize_pool.redeem(world, borrower, mul_down(gained, seize_pool.liquidity_index), step)
    else:
        raise TypeError(f"unknown plan step {step_item!r}")


def execute(world: World, plan: FlashPlan, step: int) -> Outcome:
    source = world.pools.get(plan.asset)
    if source is None:
        raise errors.UnknownAsset(f"no pool for loan asset {plan.asset}")
    if plan.amount > source.cash(world):
        raise errors.InsufficientPoolLiquidity(
            f"pool {plan.asset} cash {source.cash(world)} < loan {plan.amount}"
        )
    if world.gas.asset is not None and world.gas.fee:
        if world.ledger.balance(plan.borrower, world.gas.asset) < world.gas.fee:
            raise errors.InsufficientBalance(f"{plan.borrower} cannot pay the gas fee")

    fee = mul_up(plan.amount, source.params.flash_fee)
    start_profit_balance = world.ledger.balance(plan.borrower, plan.profit_asset)

    cp = world.checkpoint()
    try:
        world.ledger.transfer(source.account, plan.borrower, plan.asset, plan.amount, tag="flash-borrow")
        for item in plan.steps:
            _run_step(world, plan.borrower, item, step)
        source = world.pools[plan.asset]  # re-fetch: steps may have replaced pool objects
        world.ledger.transfer(plan.borrower, source.account, plan.asset, plan.amount + fee, tag="flash-repay")
        source.reserves += fee
        world.charge_gas(plan.borrower)
        world.commit(cp)
    except errors.SimError:
        world.rollback(cp)
        charged = world.charge_gas(plan.borrower)
        return Reverted(fee_charged=charged)
    profit = world.ledger.balance(plan.borrower, plan.profit_asset) - start_profit_balance
    return Committed(profit=profit)


# ---------------------------------------------------------------------------
# arbitrage scanner
# ---------------------------------------------------------------------------
class _Leg:
    """Uniform sell/buy arithmetic over one venue for one (asset, numeraire)."""

    def __init__(self, world: World, venue, asset: str, numeraire: str):
        self.world = world
        self.venue = venue
        self.asset = asset
        self.numeraire = numeraire
        self.is_amm = isinstance(venue, AmmVenue)

    def sell_out(self, amount: int) -> int:
        if self.is_amm:
            return self.venue.swap_quote(self.world, self.asset, amount)
        return self.venue.sell_quote(self.asset, amount)

    def buy_cost(self, amount: int) -> int | None:
        if self.is_amm:
            reserve_in, reserve_out = self.venue.reserves(self.world, self.numeraire)
            if amount >= reserve_out:
                return None
            return amm_in_given_out(reserve_in, reserve_out, amount, self.venue.fee_bps)
        if amount > self.venue.max_buy(self.world, self.asset):
            return None
        return self.venue.buy_quote(self.asset, amount)

    def max_sell(self) -> int | None:
        if self.is_amm:
            return None  # slippage-limited, no hard cap
        return self.venue.max_sell(self.world, self.asset)

    def max_buy(self) -> int | None:
        if self.is_amm:
            asset_reserve = self.venue.reserves(self.world, self.numeraire)[1]
            return max(asset_reserve - 1, 0)
        return self.venue.max_buy(self.world, self.asset)

    def sell_step(self, amount: int) -> PlanStep:
        if self.is_amm:
            return SwapStep(self.venue.venue_id, asset_in=self.asset, amount=amount)
        return SellStep(self.venue.venue_id, self.asset, amount)

    def buy_step(self, amount: int) -> PlanStep:
        if self.is_amm:
            reserve_in, reserve_out = self.venue.reserves(self.world, self.numeraire)
            cost = amm_in_given_out(reserve_in, reserve_out, amount, self.venue.fee_bps)
            return SwapStep(self.venue.venue_id, asset_in=self.numeraire, amount=cost)
        return BuyStep(self.venue.venue_id, self.asset, amount)


def _venue_markets(world: World) -> dict[tuple[str, str], list]:
    """Group venues by (asset, numeraire) market they can trade."""
    markets: dict[tuple[str, str], list] = {}
    for venue in world.venues.values():
        if isinstance(venue, QuoteVenue):
            for asset in venue.quotes:
                markets.setdefault((asset, venue.numeraire), []).append(venue)
        elif isinstance(venue, AmmVenue):
            a, b = venue.pair
            markets.setdefault((a, b), []).append(venue)
            markets.setdefault((b, a), []).append(venue)
    return markets


def _gas_in(world: World, asset: str) -> int:
    return world.gas.fee if world.gas.asset == asset else 0


def _arb_profit(world: World, sell_leg: _Leg, buy_leg: _Leg, flash_fee: int, size: int) -> int | None:
    if size <= 0:
        return None
    max_sell = sell_leg.max_sell()
    if max_sell is not None and size > max_sell:
        return None
    buy_amount = size + mul_up(size, flash_fee)
    cost = buy_leg.buy_cost(buy_amount)
    if cost is None:
        return None
    return sell_leg.sell_out(size) - cost


def _best_size(world: World, sell_leg: _Leg, buy_leg: _Leg, flash_fee: int, cap: int) -> tuple[int, int] | None:
    """Maximize arbitrage profit over sizes in [1, cap]."""
    if cap < 1:
        return None
    if not (sell_leg.is_amm or buy_leg.is_amm):
        profit = _arb_profit(world, sell_leg, buy_leg, flash_fee, cap)
        return (cap, profit) if profit is not None else None
    # profit is concave through the origin, so an unprofitable small probe
    # (and cap) means nothing above dust is profitable: skip the search
    probe = _arb_profit(world, sell_leg, buy_leg, flash_fee, min(cap, WAD))
    at_cap = _arb_profit(world, sell_leg, buy_leg, flash_fee, cap)
    if (probe is None or probe <= 0) and (at_cap is None or at_cap <= 0):
        return None
    lo, hi = 1, cap
    while hi - lo > 4:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        p1 = _arb_profit(world, sell_leg, buy_leg, flash_fee, m1)
        p2 = _arb_profit(world, sell_leg, buy_leg, flash_fee, m2)
        if p1 is None:
            hi = m1 - 1
        elif p2 is None:
            hi = m2 - 1
        elif p1 < p2:
            lo = m1 + 1
        else:
            hi = m2
    best = None
    for size in range(max(lo, 1), hi + 1):
        profit = _arb_profit(world, sell_leg, buy_leg, flash_fee, size)
        if profit is not None and (best is None or profit > best[1]):
            best = (size, profit)
    return best


def scan_arbitrage(world: World, step: int, borrower: str | None = None) -> list[Opportunity]:
    borrower = borrower or SCANNER_ACCOUNT
    opportunities = []
    markets = _venue_markets(world)
    for (asset, numeraire), venues in markets.items():
        pool = world.pools.get(asset)
        if pool is None or len(venues) < 2:
            continue
        flash_fee = pool.params.flash_fee
        pool_cash = pool.cash(world)
        for sell_venue in venues:
            for buy_venue in venues:
                if sell_venue is buy_venue:
                    continue
                sell_leg = _Leg(world, sell_venue, asset, numeraire)
                buy_leg = _Leg(world, buy_venue, asset, numeraire)
                cap = pool_cash
                for bound in (sell_leg.max_sell(), buy_leg.max_buy()):
                    if bound is not None:
                        cap = min(cap, bound)
                best = _best_size(world, sell_leg, buy_leg, flash_fee, cap)
                if best is None:
                    continue
                size, profit = best
                profit -= _gas_in(world, numeraire)
                if profit <= 0:
                    continue
                buy_amount = size + mul_up(size, flash_fee)
                plan = FlashPlan(
                    borrower=borrower,
                    asset=asset,
                    amount=size,
                    steps=[sell_leg.sell_step(size), buy_leg.buy_step(buy_amount)],
                    profit_asset=numeraire,
                )
                opportunities.append(
                    Opportunity(
                        kind="arbitrage",
                        plan=plan,
                        expected_profit=profit,
                        computed_at_step=step,
                        venue_or_target=f"{sell_venue.venue_id}->{buy_venue.venue_id}",
                    )
                )
    opportunities.sort(key=lambda o: (-o.expected_profit, o.venue_or_target))
    return opportunities


# ---------------------------------------------------------------------------
# liquidation scanner
# ---------------------------------------------------------------------------
def _swap_legs(world: World, asset_from: str, asset_to: str) -> list[PlanStep]:
    """A one-venue conversion of the borrower's full asset_from balance."""
    for venue in world.venues.values():
        if isinstance(venue, AmmVenue) and set(venue.pair) == {asset_from, asset_to}:
            return [SwapStep(venue.venue_id, asset_in=asset_from, amount=None)]
        if isinstance(venue, QuoteVenue) and venue.numeraire == asset_to and asset_from in venue.quotes:
            return [SellStep(venue.venue_id, asset_from, amount=None)]
    return []


def _grant_scratch_funds(world: World, borrower: str) -> None:
    # inside a scratch checkpoint only: let an unfunded scanner account pay gas
    if world.gas.asset is not None and world.gas.fee:
        short = world.gas.fee - world.ledger.balance(borrower, world.gas.asset)
        if short > 0:
            world.ledger.mint(borrower, world.gas.asset, short, "genesis", tag="scratch-grant")


def _try_plan(world: World, plan: FlashPlan, step: int, grant_gas: bool) -> int | None:
    cp = world.checkpoint()
    try:
        if grant_gas:
            _grant_scratch_funds(world, plan.borrower)
        outcome = execute(world, plan, step)
    except errors.SimError:
        return None
    finally:
        world.rollback(cp)
    if isinstance(outcome, Committed) and outcome.profit > 0:
        return outcome.profit
    return None


def _pool_liquidation_candidates(world: World, step: int):
    accounts = set()
    for pool in world.pools.values():
        accounts.update(pool.positions)
    for account in sorted(accounts):
        report = liquidation.account_totals(world, account, step)
        if report.liquidatable:
            yield account, report


def scan_liquidations(world: World, step: int, borrower: str | None = None) -> list[Opportunity]:
    borrower = borrower or SCANNER_ACCOUNT
    grant_gas = borrower == SCANNER_ACCOUNT
    opportunities = []

    for account, _report in _pool_liquidation_candidates(world, step):
        if account == borrower:
            continue
        repay_asset = max(
            (a for a, p in world.pools.items() if p.debt_of(account)),
            key=lambda a: world.oracle.value_usd(world.pools[a].debt_of(account), a, step),
            default=None,
        )
        if repay_asset is None:
            continue
        repay_pool = world.pools[repay_asset]
        flagged = [
            (a, p.underlying_claim(world, account))
            for a, p in world.pools.items()
            if p.collateral_on.get(account, False) and p.underlying_claim(world, account)
        ]
        if not flagged:
            continue
        seize_asset = max(flagged, key=lambda item: world.oracle.value_usd(item[1], item[0], step))[0]
        debt = repay_pool.debt_of(account)
        repay_amt = mul_down(debt, repay_pool.params.close_factor)
        # keep inside the seizable deposit so the close-factor repay lands fully
        seize_claim = world.pools[seize_asset].underlying_claim(world, account)
        seize_value = world.oracle.value_usd(seize_claim, seize_asset, step)
        bonus = WAD + world.pools[seize_asset].params.liquidation_bonus
        cap_value = div_down(seize_value, bonus)
        price_repay = world.oracle.price_at(repay_asset, step)
        repay_amt = min(repay_amt, div_down(cap_value, price_repay), repay_pool.cash(world))
        if repay_amt <= 0:
            continue
        steps: list[PlanStep] = [LiquidateStep(account, repay_asset, seize_asset, repay_amt)]
        if seize_asset != repay_asset:
            legs = _swap_legs(world, seize_asset, repay_asset)
            if not legs:
                continue
            steps.extend(legs)
        plan = FlashPlan(borrower, repay_asset, repay_amt, steps, profit_asset=repay_asset)
        profit = _try_plan(world, plan, step, grant_gas)
        if profit is not None:
            opportunities.append(Opportunity("liquidation", plan, profit, step, account))

    if world.cdp is not None:
        dai = world.cdp.dai_asset
        dai_pool = world.pools.get(dai)
        for vault_id in sorted(world.cdp.vaults):
            vault = world.cdp.vaults[vault_id]
            if dai_pool is None or not world.cdp.is_unsafe(world, vault, step):
                continue
            held = [(a, amt) for a, amt in vault.collateral.items() if amt]
            if not held:
                continue
            seize_asset = max(held, key=lambda item: world.oracle.value_usd(item[1], item[0], step))[0]
            repay_amt = min(world.cdp.debt_of(vault), dai_pool.cash(world))
            if repay_amt <= 0:
                continue
            steps = [LiquidateStep(f"vault:{vault_id}", dai, seize_asset, repay_amt, vault_id=vault_id)]
            if seize_asset != dai:
                legs = _swap_legs(world, seize_asset, dai)
                if not legs:
                    continue
                steps.extend(legs)
            plan = FlashPlan(borrower, dai, repay_amt, steps, profit_asset=dai)
            profit = _try_plan(world, plan, step, grant_gas)
            if profit is not None:
                opportunities.append(Opportunity("liquidation", plan, profit, step, f"vault:{vault_id}"))

    opportunities.sort(key=lambda o: (-o.expected_profit, o.venue_or_target))
    return opportunities
