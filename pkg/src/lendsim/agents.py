"""Market participants driven by the step scheduler.

Five agent kinds: plain depositors, borrow-spiral reward farmers (borrow,
re-deposit, borrow again against the same pool), leverage-spiral traders
(borrow stablecoin, swap into the collateral asset, re-deposit, borrow more),
liquidators, and arbitrageurs. Spirals stop when the marginal borrow falls
below the agent's minimum action size or the iteration cap is hit; protocol
errors end a spiral gracefully and are reported, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import errors, flashloan, liquidation
from .fixed import div_down, from_str, mul_down
from .scenario import AgentSpec
from .venues import AmmVenue, QuoteVenue
from .world import World

DEFAULT_MIN_ACTION = from_str("0.000001")
DEFAULT_ITERATION_CAP = 10_000


@dataclass
class SpiralReport:
    iterations: int = 0
    total_deposited: int = 0
    total_borrowed: int = 0
    deposits: list[int] = field(default_factory=list)
    borrows: list[int] = field(default_factory=list)
    exposure: int = 0  # leverage spiral: total collateral asset acquired
    stopped_by: str = "min-action"


def _headroom(world: World, account: str, asset: str, step: int) -> int:
    """Remaining borrow capacity converted into units of `asset`."""
    power = liquidation.borrowing_power(world, account, step)
    debt = liquidation.account_totals(world, account, step).debt_value
    if debt >= power:
        return 0
    return div_down(power - debt, world.oracle.price_at(asset, step))


def run_borrow_spiral(
    world: World,
    account: str,
    asset: str,
    amount: int,
    step: int,
    *,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
    min_action: int = DEFAULT_MIN_ACTION,
    buffer: int = 0,
) -> SpiralReport:
    """Deposit, then repeatedly borrow against the latest deposit and re-deposit."""
    pool = world.pools[asset]
    report = SpiralReport()
    factor = max(pool.params.collateral_factor - buffer, 0)
    try:
        pool.deposit(world, account, amount)
    except errors.SimError:
        report.stopped_by = "error"
        return report
    report.total_deposited += amount
    report.deposits.append(amount)
    latest = amount
    while report.iterations < iteration_cap:
        want = min(mul_down(latest, factor), _headroom(world, account, asset, step))
        if want < min_action:
            report.stopped_by = "min-action"
            break
        try:
            pool.borrow(world, account, want, step=step)
            pool.deposit(world, account, want)
        except errors.SimError:
            report.stopped_by = "error"
            break
        report.iterations += 1
        report.total_borrowed += want
        report.total_deposited += want
        report.borrows.append(want)
        report.deposits.append(want)
        latest = want
    else:
        report.stopped_by = "iteration-cap"
    return report


def _swap_to(world: World, account: str, venue_id: str, asset_in: str, asset_out: str, amount: int) -> int:
    venue = world.venues[venue_id]
    if isinstance(venue, AmmVenue):
        return venue.swap(world, account, asset_in, amount)
    if isinstance(venue, QuoteVenue):
        if asset_out == venue.numeraire:
            return venue.sell(world, account, asset_in, amount)
        if asset_in == venue.numeraire:
            # spend `amount` numeraire on as much asset_out as it buys
            price = venue.quotes[asset_out]
            lo, hi = 0, div_down(amount, price) + 1
            while venue.buy_quote(asset_out, hi) <= amount:
                hi *= 2
            while lo < hi:
                mid = (lo + hi + 1) // 2
                if venue.buy_quote(asset_out, mid) <= amount:
                    lo = mid
                else:
                    hi = mid - 1
            if lo:
                venue.buy(world, account, asset_out, lo)
            return lo
    raise errors.UnknownVenue(venue_id)


def run_leverage_spiral(
    world: World,
    account: str,
    collateral_asset: str,
    borrow_asset: str,
    venue_id: str,
    amount: int,
    step: int,
    *,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
    min_action: int = DEFAULT_MIN_ACTION,
    buffer: int = 0,
) -> SpiralReport:
    """Deposit collateral, then loop borrow -> swap -> re-deposit for leverage."""
    coll_pool = world.pools[collateral_asset]
    borrow_pool = world.pools[borrow_asset]
    report = SpiralReport()
    try:
        coll_pool.deposit(world, account, amount)
    except errors.SimError:
        report.stopped_by = "error"
        return report
    report.total_deposited += amount
    report.deposits.append(amount)
    report.exposure = amount
    factor = max(coll_pool.params.collateral_factor - buffer, 0)
    latest_value = world.oracle.value_usd(amount, collateral_asset, step)
    price_borrow = world.oracle.price_at(borrow_asset, step)
    while report.iterations < iteration_cap:
        want = min(
            div_down(mul_down(latest_value, factor), price_borrow),
            _headroom(world, account, borrow_asset, step),
        )
        if want < min_action:
            report.stopped_by = "min-action"
            break
        try:
            borrow_pool.borrow(world, account, want, step=step)
            acquired = _swap_to(world, account, venue_id, borrow_asset, collateral_asset, want)
            if acquired < min_action:
                report.stopped_by = "min-action"
                break
            coll_pool.deposit(world, account, acquired)
        except errors.SimError:
            report.stopped_by = "error"
            break
        report.iterations += 1
        report.total_borrowed += want
        report.total_deposited += acquired
        report.borrows.append(want)
        report.deposits.append(acquired)
        report.exposure += acquired
        latest_value = world.oracle.value_usd(acquired, collateral_asset, step)
    else:
        report.stopped_by = "iteration-cap"
    return report


# ---------------------------------------------------------------------------
# scheduler-facing agents
# ---------------------------------------------------------------------------
class BaseAgent:
    def __init__(self, spec: AgentSpec):
        self.spec = spec
        self.account = spec.agent_id

    def active(self, t: int) -> bool:
        return self.spec.window[0] <= t <= self.spec.window[1]

    def act(self, world: World, t: int) -> None:
        raise NotImplementedError

    def _min_action(self) -> int:
        raw = self.spec.params.get("min_action")
        return from_str(str(raw)) if raw is not None else DEFAULT_MIN_ACTION

    def _buffer(self) -> int:
        raw = self.spec.params.get("buffer")
        return from_str(str(raw)) if raw is not None else 0

    def _cap(self) -> int:
        return int(self.spec.params.get("iteration_cap", DEFAULT_ITERATION_CAP))


class DepositorAgent(BaseAgent):
    def __init__(self, spec: AgentSpec):
        super().__init__(spec)
        self.done = False

    def act(self, world: World, t: int) -> None:
        if self.done:
            return
        self.done = True
        asset = self.spec.params["pool"]
        amount = world.ledger.balance(self.account, asset)
        if amount:
            world.pools[asset].deposit(world, self.account, amount)
            world.emit(kind="deposit", step=t, agent=self.account, asset=asset, amount=amount)


class BorrowSpiralAgent(BaseAgent):
    def __init__(self, spec: AgentSpec):
        super().__init__(spec)
        self.report: SpiralReport | None = None

    def act(self, world: World, t: int) -> None:
        if self.report is not None:
            return
        asset = self.spec.params["pool"]
        amount = world.ledger.balance(self.account, asset)
        self.report = run_borrow_spiral(
            world,
            self.account,
            asset,
            amount,
            t,
            iteration_cap=self._cap(),
            min_action=self._min_action(),
            buffer=self._buffer(),
        )
        world.emit(
            kind="borrow-spiral",
            step=t,
            agent=self.account,
            iterations=self.report.iterations,
            deposited=self.report.total_deposited,
            borrowed=self.report.total_borrowed,
            stopped_by=self.report.stopped_by,
        )


class LeverageSpiralAgent(BaseAgent):
    def __init__(self, spec: AgentSpec):
        super().__init__(spec)
        self.report: SpiralReport | None = None

    def act(self, world: World, t: int) -> None:
        if self.report is not None:
            return
        collateral = self.spec.params["collateral"]
        borrow = self.spec.params["borrow"]
        venue = self.spec.params["venue"]
        amount = world.ledger.balance(self.account, collateral)
        self.report = run_leverage_spiral(
            world,
            self.account,
            collateral,
            borrow,
            venue,
            amount,
            t,
            iteration_cap=self._cap(),
            min_action=self._min_action(),
            buffer=self._buffer(),
        )
        world.emit(
            kind="leverage-spiral",
            step=t,
            agent=self.account,
            iterations=self.report.iterations,
            exposure=self.report.exposure,
            borrowed=self.report.total_borrowed,
            stopped_by=self.report.stopped_by,
        )


class LiquidatorAgent(BaseAgent):
    def act(self, world: World, t: int) -> None:
        use_flash = bool(self.spec.params.get("use_flashloan", True))
        found = flashloan.scan_liquidations(world, t, borrower=self.account)
        if not found:
            return
        best = found[0]
        if use_flash:
            outcome = flashloan.execute(world, best.plan, t)
            world.emit(
                kind="flash",
                step=t,
                agent=self.account,
                plan="liquidation",
                target=best.venue_or_target,
                outcome="committed" if isinstance(outcome, flashloan.Committed) else "reverted",
                profit=getattr(outcome, "profit", None),
                profit_asset=best.plan.profit_asset,
            )
        else:
            item = best.plan.steps[0]
            liquidation.liquidate(
                world, self.account, item.target, item.repay_asset, item.seize_asset, item.amount, t
            )


class ArbitrageurAgent(BaseAgent):
    def act(self, world: World, t: int) -> None:
        found = flashloan.scan_arbitrage(world, t, borrower=self.account)
        if not found:
            return
        best = found[0]
        outcome = flashloan.execute(world, best.plan, t)
        world.emit(
            kind="flash",
            step=t,
            agent=self.account,
            plan="arbitrage",
            target=best.venue_or_target,
            outcome="committed" if isinstance(outcome, flashloan.Committed) else "reverted",
            profit=getattr(outcome, "profit", None),
            profit_asset=best.plan.profit_asset,
        )


AGENT_CLASSES = {
    "depositor": DepositorAgent,
    "borrow_spiral": BorrowSpiralAgent,
    "leverage_spiral": LeverageSpiralAgent,
    "liquidator": LiquidatorAgent,
    "arbitrageur": ArbitrageurAgent,
}


def make_agent(spec: AgentSpec) -> BaseAgent:
    try:
        cls = AGENT_CLASSES[spec.kind]
    except KeyError:
        raise ValueError(f"unknown agent kind {spec.kind!r}") from None
    return cls(spec)
