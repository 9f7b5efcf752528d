"""Declarative scenario files: parse, validate, and build a runnable world.

A scenario is one JSON document (schema_version 1). All amounts, prices,
rates and fractions are decimal strings so no precision is lost in transit.
Validation collects *every* violation instead of stopping at the first, and
separates hard errors from warnings (e.g. a liquidation bonus large enough
that liquidation may not improve health).

Pools are funded at construction through a bootstrap depositor account per
pool ("lp:<asset>"), so initial cash is real deposited liquidity with matching
IOU supply and conservation holds from the genesis journal onwards.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from . import oracle as oracle_mod
from .cdp import CdpEngine, constant_fee, proportional_fee
from .fixed import AmountError, WAD, from_str
from .ledger import GENESIS_AUTHORITY, Ledger
from .oracle import PriceOracle, WalkParams
from .pool import EXCHANGE_RATE, Pool, PoolParams, RateModelParams
from .venues import AmmVenue, QuoteVenue
from .world import FEE_SINK_ACCOUNT, GasConfig, RewardConfig, SCANNER_ACCOUNT, World

SCHEMA_VERSION = 1

AGENT_KINDS = ("depositor", "borrow_spiral", "leverage_spiral", "liquidator", "arbitrageur")


class ParseError(Exception):
    pass


class ValidationError(Exception):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class AgentSpec:
    agent_id: str
    kind: str
    endowment: dict[str, int] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)
    window: tuple[int, int] = (0, 2**62)


@dataclass
class PoolSpec:
    params: PoolParams
    initial_cash: int = 0


@dataclass
class CdpSpec:
    dai_asset: str
    issuance_fraction: dict[str, int]
    stability_fee: int
    liquidation_penalty: int
    fee_policy: dict[str, Any] | None = None


@dataclass
class VenueSpec:
    kind: str  # quote | amm
    venue_id: str
    numeraire: str = ""
    quotes: dict[str, int] = field(default_factory=dict)
    pair: tuple[str, str] = ("", "")
    reserves: tuple[int, int] = (0, 0)
    inventory: dict[str, int] = field(default_factory=dict)
    fee_bps: int = 30


@dataclass
class Scenario:
    assets: list[str]
    pools: list[PoolSpec]
    venues: list[VenueSpec]
    feed_mode: str
    feed_series: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    feed_walk: dict[str, Any] = field(default_factory=dict)
    cdp: CdpSpec | None = None
    agents: list[AgentSpec] = field(default_factory=list)
    rewards: RewardConfig = field(default_factory=RewardConfig)
    gas: GasConfig = field(default_factory=GasConfig)
    horizon: int = 1
    seed: int = 0


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------
def _amt(raw: Any, where: str, problems: list[str]) -> int:
    if not isinstance(raw, str):
        problems.append(f"{where}: amounts must be decimal strings, got {type(raw).__name__}")
        return 0
    try:
        value = from_str(raw)
    except AmountError as exc:
        problems.append(f"{where}: {exc}")
        return 0
    return value


def load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fp:
            doc = json.load(fp)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_scenario(doc, base_path=path)


def parse_scenario(doc: dict, base_path: str = "<memory>") -> Scenario:
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise ParseError("scenario root must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {doc.get('schema_version')!r}")

    assets = list(doc.get("assets", []))

    pools = []
    for i, p in enumerate(doc.get("pools", [])):
        where = f"pools[{i}]"
        model = p.get("rate_model", {})
        rate_model = RateModelParams(
            base_rate=_amt(model.get("base_rate", "0"), f"{where}.rate_model.base_rate", problems),
            slope1=_amt(model.get("slope1", "0"), f"{where}.rate_model.slope1", problems),
            slope2=_amt(model.get("slope2", "0"), f"{where}.rate_model.slope2", problems),
            kink=_amt(model.get("kink", "0.8"), f"{where}.rate_model.kink", problems),
            reserve_factor=_amt(model.get("reserve_factor", "0"), f"{where}.rate_model.reserve_factor", problems),
        )
        params = PoolParams(
            asset=p.get("asset", ""),
            iou_asset=p.get("iou_symbol", ""),
            iou_mode=p.get("iou_mode", EXCHANGE_RATE),
            collateral_factor=_amt(p.get("collateral_factor", "0"), f"{where}.collateral_factor", problems),
            liquidation_threshold=_amt(p.get("liquidation_threshold", "0"), f"{where}.liquidation_threshold", problems),
            liquidation_bonus=_amt(p.get("liquidation_bonus", "0"), f"{where}.liquidation_bonus", problems),
            close_factor=_amt(p.get("close_factor", "0.5"), f"{where}.close_factor", problems),
            rate_model=rate_model,
            flash_fee=_amt(p.get("flash_fee", "0.0009"), f"{where}.flash_fee", problems),
            stable_rate_premium=_amt(p.get("stable_rate_premium", "0"), f"{where}.stable_rate_premium", problems),
        )
        pools.append(PoolSpec(params=params, initial_cash=_amt(p.get("initial_cash", "0"), f"{where}.initial_cash", problems)))

    venues = []
    for i, v in enumerate(doc.get("venues", [])):
        where = f"venues[{i}]"
        kind = v.get("kind", "quote")
        if kind == "quote":
            venues.append(
                VenueSpec(
                    kind="quote",
                    venue_id=str(v.get("id", f"venue{i}")),
                    numeraire=v.get("numeraire", ""),
                    quotes={a: _amt(q, f"{where}.quotes.{a}", problems) for a, q in v.get("quotes", {}).items()},
                    inventory={a: _amt(q, f"{where}.inventory.{a}", problems) for a, q in v.get("inventory", {}).items()},
                    fee_bps=int(v.get("fee_bps", 0)),
                )
            )
        elif kind == "amm":
            pair = v.get("pair", ["", ""])
            reserves = v.get("reserves", ["0", "0"])
            venues.append(
                VenueSpec(
                    kind="amm",
                    venue_id=str(v.get("id", f"venue{i}")),
                    pair=(pair[0], pair[1]) if len(pair) == 2 else ("", ""),
                    reserves=(
                        _amt(reserves[0], f"{where}.reserves[0]", problems),
                        _amt(reserves[1], f"{where}.reserves[1]", problems),
                    )
                    if len(reserves) == 2
                    else (0, 0),
                    fee_bps=int(v.get("fee_bps", 30)),
                )
            )
        else:
            problems.append(f"{where}.kind: unknown venue kind {kind!r}")

    feeds = doc.get("price_feeds", {})
    feed_mode = feeds.get("mode", "replay")
    feed_series: dict[str, list[tuple[int, int]]] = {}
    feed_walk: dict[str, Any] = {}
    if feed_mode == "replay":
        if "csv" in feeds:
            feed_series = oracle_mod.load_feed_csv(feeds["csv"])
        for asset, points in feeds.get("series", {}).items():
            feed_series[asset] = [
                (int(s), _amt(p, f"price_feeds.series.{asset}", problems)) for s, p in points
            ]
    elif feed_mode == "walk":
        feed_walk = {
            "seed": int(feeds.get("seed", 0)),
            "drift": float(feeds.get("drift", 0.0)),
            "volatility": float(feeds.get("volatility", 0.0)),
            "initial": {
                a: _amt(p, f"price_feeds.initial.{a}", problems)
                for a, p in feeds.get("initial", {}).items()
            },
        }
    else:
        problems.append(f"price_feeds.mode: unknown mode {feed_mode!r}")

    cdp_spec = None
    if "cdp" in doc:
        c = doc["cdp"]
        cdp_spec = CdpSpec(
            dai_asset=c.get("dai_symbol", "DAI"),
            issuance_fraction={
                a: _amt(t, f"cdp.issuance_fractions.{a}", problems)
                for a, t in c.get("issuance_fractions", {}).items()
            },
            stability_fee=_amt(c.get("stability_fee", "0"), "cdp.stability_fee", problems),
            liquidation_penalty=_amt(c.get("liquidation_penalty", "0.13"), "cdp.liquidation_penalty", problems),
            fee_policy=c.get("fee_policy"),
        )

    agents = []
    for i, a in enumerate(doc.get("agents", [])):
        where = f"agents[{i}]"
        window = a.get("window", [0, doc.get("horizon", 1)])
        agents.append(
            AgentSpec(
                agent_id=str(a.get("id", f"agent{i}")),
                kind=a.get("kind", ""),
                endowment={
                    asset: _amt(q, f"{where}.endowment.{asset}", problems)
                    for asset, q in a.get("endowment", {}).items()
                },
                params=dict(a.get("params", {})),
                window=(int(window[0]), int(window[1])),
            )
        )

    rewards_doc = doc.get("rewards", {})
    rewards = RewardConfig(
        emission_per_pool=_amt(rewards_doc.get("emission_per_pool", "0"), "rewards.emission_per_pool", problems),
        supply_split=_amt(rewards_doc.get("supply_split", "0.5"), "rewards.supply_split", problems),
    )

    gas_doc = doc.get("gas", {})
    gas = GasConfig(
        asset=gas_doc.get("asset"),
        fee=_amt(gas_doc.get("fee", "0"), "gas.fee", problems) if gas_doc else 0,
    )

    if problems:
        raise ParseError(f"{base_path}: " + "; ".join(problems))

    return Scenario(
        assets=assets,
        pools=pools,
        venues=venues,
        feed_mode=feed_mode,
        feed_series=feed_series,
        feed_walk=feed_walk,
        cdp=cdp_spec,
        agents=agents,
        rewards=rewards,
        gas=gas,
        horizon=int(doc.get("horizon", 1)),
        seed=int(doc.get("seed", 0)),
    )


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------
def validate_scenario(sc: Scenario) -> list[str]:
    """Return warnings; raise ValidationError with every hard violation."""
    problems: list[str] = []
    warnings: list[str] = []
    assets = set(sc.assets)

    for i, symbol in enumerate(sc.assets):
        if not symbol or not symbol.isupper() or not symbol.isalnum():
            problems.append(f"assets[{i}]: symbol {symbol!r} must be non-empty uppercase alphanumeric")
    if len(assets) != len(sc.assets):
        problems.append("assets: duplicate symbols")

    fed_assets = set(sc.feed_series) if sc.feed_mode == "replay" else set(sc.feed_walk.get("initial", {}))
    referenced: set[str] = set()

    iou_symbols = set()
    pool_assets = set()
    for i, spec in enumerate(sc.pools):
        where = f"pools[{i}]"
        p = spec.params
        if p.asset not in assets:
            problems.append(f"{where}.asset: undefined asset {p.asset!r}")
        referenced.add(p.asset)
        if p.asset in pool_assets:
            problems.append(f"{where}.asset: duplicate pool for {p.asset!r}")
        pool_assets.add(p.asset)
        if not p.iou_asset:
            problems.append(f"{where}.iou_symbol: must be non-empty")
        if p.iou_asset in iou_symbols or p.iou_asset in assets:
            problems.append(f"{where}.iou_symbol: {p.iou_asset!r} collides with another symbol")
        iou_symbols.add(p.iou_asset)
        pool_problems, pool_warnings = p.validate()
        problems.extend(f"{where}: {msg}" for msg in pool_problems)
        warnings.extend(f"{where}: {msg}" for msg in pool_warnings)
        if spec.initial_cash < 0:
            problems.append(f"{where}.initial_cash: must be >= 0")

    venue_ids = set()
    for i, v in enumerate(sc.venues):
        where = f"venues[{i}]"
        if v.venue_id in venue_ids:
            problems.append(f"{where}.id: duplicate venue id {v.venue_id!r}")
        venue_ids.add(v.venue_id)
        if v.kind == "quote":
            if v.numeraire not in assets:
                problems.append(f"{where}.numeraire: undefined asset {v.numeraire!r}")
            referenced.add(v.numeraire)
            for asset, price in v.quotes.items():
                if asset not in assets:
                    problems.append(f"{where}.quotes: undefined asset {asset!r}")
                referenced.add(asset)
                if price <= 0:
                    problems.append(f"{where}.quotes.{asset}: price must be > 0")
            for asset in v.inventory:
                if asset not in assets:
                    problems.append(f"{where}.inventory: undefined asset {asset!r}")
        else:
            for asset in v.pair:
                if asset not in assets:
                    problems.append(f"{where}.pair: undefined asset {asset!r}")
                referenced.add(asset)
            if v.pair[0] == v.pair[1]:
                problems.append(f"{where}.pair: assets must differ")
            if min(v.reserves) <= 0:
                problems.append(f"{where}.reserves: both reserves must be > 0")
        if not 0 <= v.fee_bps < 10_000:
            problems.append(f"{where}.fee_bps: must lie in [0, 10000)")

    if sc.cdp is not None:
        if sc.cdp.dai_asset not in assets:
            problems.append(f"cdp.dai_symbol: undefined asset {sc.cdp.dai_asset!r}")
        referenced.add(sc.cdp.dai_asset)
        for asset, theta in sc.cdp.issuance_fraction.items():
            if asset not in assets:
                problems.append(f"cdp.issuance_fractions: undefined asset {asset!r}")
            referenced.add(asset)
            if not 0 < theta < WAD:
                problems.append(f"cdp.issuance_fractions.{asset}: must lie in (0, 1)")
        if sc.cdp.stability_fee < 0:
            problems.append("cdp.stability_fee: must be >= 0")
        if sc.cdp.liquidation_penalty < 0:
            problems.append("cdp.liquidation_penalty: must be >= 0")

    for asset in sorted(referenced):
        if asset in assets and asset not in fed_assets:
            problems.append(f"price_feeds: no feed for referenced asset {asset!r}")
    for asset, points in sc.feed_series.items():
        if asset not in assets:
            problems.append(f"price_feeds.series: undefined asset {asset!r}")
        last = -1
        for step, price in points:
            if step <= last:
                problems.append(f"price_feeds.series.{asset}: steps must be strictly increasing")
                break
            last = step
            if price <= 0:
                problems.append(f"price_feeds.series.{asset}: price at step {step} must be > 0")
                break

    reserved = {FEE_SINK_ACCOUNT, SCANNER_ACCOUNT, "vault-engine"}
    seen_agents = set()
    for i, a in enumerate(sc.agents):
        where = f"agents[{i}]"
        if a.kind not in AGENT_KINDS:
            problems.append(f"{where}.kind: unknown agent kind {a.kind!r}")
        if not a.agent_id or a.agent_id in reserved or ":" in a.agent_id:
            problems.append(f"{where}.id: {a.agent_id!r} is reserved or invalid")
        if a.agent_id in seen_agents:
            problems.append(f"{where}.id: duplicate agent id {a.agent_id!r}")
        seen_agents.add(a.agent_id)
        for asset in a.endowment:
            if asset not in assets:
                problems.append(f"{where}.endowment: undefined asset {asset!r}")
        if a.window[0] < 0 or a.window[1] < a.window[0]:
            problems.append(f"{where}.window: must satisfy 0 <= start <= end")
        eps = a.params.get("min_action")
        if eps is not None and from_str(str(eps)) <= 0:
            problems.append(f"{where}.params.min_action: must be > 0")
        buffer = a.params.get("buffer")
        if buffer is not None and from_str(str(buffer)) < 0:
            problems.append(f"{where}.params.buffer: must be >= 0")
        cap = a.params.get("iteration_cap")
        if cap is not None and int(cap) < 0:
            problems.append(f"{where}.params.iteration_cap: must be >= 0")
        if a.kind in ("depositor", "borrow_spiral"):
            if a.params.get("pool") not in pool_assets:
                problems.append(f"{where}.params.pool: no pool for {a.params.get('pool')!r}")
        elif a.kind == "leverage_spiral":
            for key in ("collateral", "borrow"):
                if a.params.get(key) not in pool_assets:
                    problems.append(f"{where}.params.{key}: no pool for {a.params.get(key)!r}")
            if a.params.get("venue") not in venue_ids:
                problems.append(f"{where}.params.venue: unknown venue {a.params.get('venue')!r}")

    if not 0 <= sc.rewards.supply_split <= WAD:
        problems.append("rewards.supply_split: must lie in [0, 1]")
    if sc.rewards.emission_per_pool < 0:
        problems.append("rewards.emission_per_pool: must be >= 0")
    if sc.gas.asset is not None and sc.gas.asset not in assets:
        problems.append(f"gas.asset: undefined asset {sc.gas.asset!r}")
    if sc.horizon < 1:
        problems.append("horizon: must be >= 1")

    if problems:
        raise ValidationError(problems)
    return warnings


# ---------------------------------------------------------------------------
# world construction
# ---------------------------------------------------------------------------
def build_world(sc: Scenario, seed_override: int | None = None) -> World:
    lg = Ledger()
    for asset in sc.assets:
        authorities = []
        if sc.cdp is not None and asset == sc.cdp.dai_asset:
            authorities.append("cdp")
        lg.register_asset(asset, authorities)

    lg.register_account(FEE_SINK_ACCOUNT, "fee-sink")
    lg.register_account(SCANNER_ACCOUNT, "user")
    lg.register_account("vault-engine", "vault-engine")

    if sc.feed_mode == "replay":
        price_oracle = PriceOracle(mode="replay", series=sc.feed_series)
    else:
        walk_seed = sc.feed_walk["seed"]
        if seed_override is not None:
            walk_seed = seed_override
        price_oracle = PriceOracle(
            mode="walk",
            walk=WalkParams(
                seed=walk_seed,
                drift=sc.feed_walk["drift"],
                volatility=sc.feed_walk["volatility"],
                initial=dict(sc.feed_walk["initial"]),
            ),
        )

    pools: dict[str, Pool] = {}
    for spec in sc.pools:
        account = lg.register_account(f"pool:{spec.params.asset}", "pool")
        p = Pool(spec.params, account)
        lg.register_asset(spec.params.iou_asset, [p.authority])
        pools[spec.params.asset] = p

    venues: dict[str, object] = {}
    for v in sc.venues:
        account = lg.register_account(f"venue:{v.venue_id}", "venue")
        if v.kind == "quote":
            venue = QuoteVenue(v.venue_id, v.numeraire, dict(v.quotes), v.fee_bps, account)
            for asset, amount in v.inventory.items():
                lg.mint(account, asset, amount, GENESIS_AUTHORITY, tag="genesis")
        else:
            venue = AmmVenue(v.venue_id, v.pair, v.fee_bps, account)
            lg.mint(account, v.pair[0], v.reserves[0], GENESIS_AUTHORITY, tag="genesis")
            lg.mint(account, v.pair[1], v.reserves[1], GENESIS_AUTHORITY, tag="genesis")
        venues[v.venue_id] = venue

    engine = None
    if sc.cdp is not None:
        policy = None
        policy_doc = sc.cdp.fee_policy
        if policy_doc:
            if policy_doc.get("kind") == "proportional":
                policy = proportional_fee(
                    base=from_str(str(policy_doc.get("base", "0"))),
                    gain=from_str(str(policy_doc.get("gain", "0"))),
                )
            elif policy_doc.get("kind") == "constant":
                policy = constant_fee(from_str(str(policy_doc.get("fee", "0"))))
        engine = CdpEngine(
            dai_asset=sc.cdp.dai_asset,
            issuance_fraction=sc.cdp.issuance_fraction,
            stability_fee=sc.cdp.stability_fee,
            liquidation_penalty=sc.cdp.liquidation_penalty,
            fee_policy=policy,
        )

    world = World(lg, price_oracle, pools, venues, cdp=engine, gas=sc.gas)

    for a in sc.agents:
        lg.register_account(a.agent_id, "user")
        for asset, amount in a.endowment.items():
            lg.mint(a.agent_id, asset, amount, GENESIS_AUTHORITY, tag="genesis")

    # bootstrap pool liquidity through a per-pool depositor so IOU supply and
    # cash stay consistent
    for spec in sc.pools:
        if spec.initial_cash:
            lp_account = lg.register_account(f"lp:{spec.params.asset}", "user")
            lg.mint(lp_account, spec.params.asset, spec.initial_cash, GENESIS_AUTHORITY, tag="genesis")
            pools[spec.params.asset].deposit(world, lp_account, spec.initial_cash)

    return world
