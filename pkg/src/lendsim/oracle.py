"""Per-step USD price source: recorded series or seeded geometric walks.

Replay feeds hold the latest recorded point at or before the queried step.
Walk feeds evolve p(t+1) = p(t) * exp(drift + vol * z) with z from a
per-asset RNG derived from the master seed via sha256, so paths are
independent of query order and of which other assets exist. Prices are
quantized to wad immediately; the oracle is read-only after construction.
"""

from __future__ import annotations

import csv
import hashlib
import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field

from . import errors
from .fixed import from_str, mul_down, require_amount

REPLAY = "replay"
WALK = "walk"


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary labels (process-hash independent)."""
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


@dataclass
class WalkParams:
    seed: int
    drift: float
    volatility: float
    initial: dict[str, int]  # asset -> wad price at step 0


@dataclass
class PriceOracle:
    mode: str
    # replay: asset -> sorted list of (step, wad price)
    series: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    walk: WalkParams | None = None
    _paths: dict[str, list[int]] = field(default_factory=dict, repr=False)
    _rngs: dict[str, random.Random] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.mode not in (REPLAY, WALK):
            raise ValueError(f"unknown oracle mode {self.mode!r}")
        for asset, points in self.series.items():
            last = -1
            for step, price in points:
                if step <= last:
                    raise ValueError(f"feed for {asset} not strictly increasing in step")
                if price <= 0:
                    raise ValueError(f"feed for {asset} has non-positive price at step {step}")
                last = step
        if self.mode == WALK:
            if self.walk is None:
                raise ValueError("walk mode requires WalkParams")
            for asset, price in self.walk.initial.items():
                if price <= 0:
                    raise ValueError(f"initial walk price for {asset} must be positive")

    # ------------------------------------------------------------------
    def assets(self) -> list[str]:
        if self.mode == REPLAY:
            return list(self.series)
        assert self.walk is not None
        return list(self.walk.initial)

    def ensure_step(self, step: int) -> None:
        """Extend walk caches up to `step` (no-op for replay feeds)."""
        if self.mode == WALK:
            for asset in self.assets():
                self._walk_path(asset, step)

    def price_at(self, asset: str, step: int) -> int:
        if step < 0:
            raise ValueError("step must be >= 0")
        if self.mode == REPLAY:
            points = self.series.get(asset)
            if not points:
                raise errors.MissingFeed(asset)
            # hold the latest point at or before `step`
            idx = bisect_right(points, (step, float("inf"))) - 1
            if idx < 0:
                raise errors.StepBeforeFirstPoint(f"{asset} feed starts at step {points[0][0]}, asked {step}")
            return points[idx][1]
        assert self.walk is not None
        if asset not in self.walk.initial:
            raise errors.MissingFeed(asset)
        return self._walk_path(asset, step)[step]

    def value_usd(self, amount: int, asset: str, step: int) -> int:
        require_amount(amount)
        return mul_down(amount, self.price_at(asset, step))

    # ------------------------------------------------------------------
    def _walk_path(self, asset: str, step: int) -> list[int]:
        assert self.walk is not None
        path = self._paths.get(asset)
        if path is None:
            path = [self.walk.initial[asset]]
            self._paths[asset] = path
            self._rngs[asset] = random.Random(derive_seed(self.walk.seed, "walk", asset))
        rng = self._rngs[asset]
        while len(path) <= step:
            z = rng.gauss(0.0, 1.0)
            factor = math.exp(self.walk.drift + self.walk.volatility * z)
            path.append(max(1, int(path[-1] * factor)))
        return path


def load_feed_csv(path: str) -> dict[str, list[tuple[int, int]]]:
    """Read a `step,asset,price` CSV (prices as decimal strings) into series."""
    series: dict[str, list[tuple[int, int]]] = {}
    with open(path, newline="") as fp:
        reader = csv.DictReader(fp)
        required = {"step", "asset", "price"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"feed file {path} must have header step,asset,price")
        for row in reader:
            series.setdefault(row["asset"], []).append((int(row["step"]), from_str(row["price"])))
    for points in series.values():
        points.sort()
    return series
