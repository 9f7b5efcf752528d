"""Deterministic simulation engine for overcollateralized lending protocols.

Subsystems: a journaled, checkpointable asset ledger; USD price feeds
(recorded or seeded geometric walks); pooled lending markets with two IOU
accounting modes and a kinked utilization rate model; health-factor
liquidations; a stablecoin CDP vault engine with stability fees; quote and
constant-product trading venues; atomic flash loans with opportunity
scanners; and a step scheduler running agents under replayable seeds.
"""

from . import agents, cdp, errors, flashloan, ledger, liquidation, oracle, pool, scenario, simulation, venues, world
from .fixed import WAD, from_str, to_str, wad

__version__ = "0.1.0"

__all__ = [
    "WAD",
    "agents",
    "cdp",
    "errors",
    "flashloan",
    "from_str",
    "ledger",
    "liquidation",
    "oracle",
    "pool",
    "scenario",
    "simulation",
    "to_str",
    "venues",
    "wad",
    "world",
]
