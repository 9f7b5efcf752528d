"""18-decimal fixed-point integers ("wad") with explicit rounding direction.

Every protocol quantity (asset amounts, USD prices, per-step rates, fractions)
is a plain Python int counting 1e-18 units. The helpers below make the
rounding direction of each multiply/divide explicit; protocol state never
touches a float, so runs are exactly replayable and conservation checks can
demand equality, not tolerance.

Rounding convention used throughout the engine: quantities credited to users
round down, quantities owed by users (debt, fees) round up.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation

WAD = 10**18
BPS_DENOM = 10_000


class AmountError(ValueError):
    """Negative or malformed fixed-point quantity."""


def ceil_div(n: int, d: int) -> int:
    return -(-n // d)


def mul_down(a: int, b: int) -> int:
    return a * b // WAD


def mul_up(a: int, b: int) -> int:
    return ceil_div(a * b, WAD)


def div_down(a: int, b: int) -> int:
    return a * WAD // b


def div_up(a: int, b: int) -> int:
    return ceil_div(a * WAD, b)


def wad(units: int | str) -> int:
    """Whole units -> raw. Accepts an int or a decimal string literal."""
    if isinstance(units, int):
        return units * WAD
    return from_str(units)


def from_str(text: str) -> int:
    """Parse a decimal string ("1.5", "0.000000000000000001") to raw units."""
    try:
        dec = Decimal(text)
    except InvalidOperation as exc:
        raise AmountError(f"not a decimal literal: {text!r}") from exc
    sign, digits, exp = dec.as_tuple()
    if not isinstance(exp, int):
        raise AmountError(f"not a finite decimal: {text!r}")
    magnitude = int("".join(map(str, digits)) or "0")
    shift = exp + 18  # context-free scaling keeps arbitrary precision exact
    if shift >= 0:
        raw = magnitude * 10**shift
    else:
        scale = 10**-shift
        if magnitude % scale:
            raise AmountError(f"more than 18 decimal places: {text!r}")
        raw = magnitude // scale
    return -raw if sign else raw


def to_str(raw: int) -> str:
    """Exact decimal rendering of a raw value; inverse of from_str."""
    sign = "-" if raw < 0 else ""
    whole, frac = divmod(abs(raw), WAD)
    if frac == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}." + f"{frac:018d}".rstrip("0")


def require_amount(raw: object) -> int:
    if not isinstance(raw, int) or isinstance(raw, bool):
        raise AmountError(f"amount must be an int of 1e-18 units, got {type(raw).__name__}")
    if raw < 0:
        raise AmountError(f"amount must be non-negative, got {raw}")
    return raw
