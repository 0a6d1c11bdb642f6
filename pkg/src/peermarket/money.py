"""Fixed-point units: centi-ER$ for cash, micro-shares for quantity.

Every balance, price and notional in the system is an integer count of
centi-ER$ (0.01 ER$). Every holding and order quantity is an integer count
of micro-shares (1e-6 share). Settlement paths never touch floats; the one
place fractional value exists (the issuance accumulator) uses exact
rationals from `fractions.Fraction`.
"""

from __future__ import annotations

from fractions import Fraction

CENTI_PER_ER = 100
MICRO_PER_SHARE = 1_000_000


def round_half_up(value: Fraction | int) -> int:
    """Round an exact rational to the nearest integer, halves upward."""
    if isinstance(value, int):
        return value
    q, r = divmod(value.numerator, value.denominator)
    if 2 * r >= value.denominator:
        q += 1
    return q


def notional_centi(price_centi: int, qty_micro: int) -> int:
    """Cash owed for qty_micro shares at price_centi per share, half-up."""
    return round_half_up(Fraction(price_centi * qty_micro, MICRO_PER_SHARE))


def fmt_er(centi: int) -> str:
    """Format centi-ER$ in the platform's display style, e.g. ER$ 10'000.00."""
    sign = "-" if centi < 0 else ""
    whole, cents = divmod(abs(centi), CENTI_PER_ER)
    grouped = f"{whole:,}".replace(",", "'")
    return f"{sign}ER$ {grouped}.{cents:02d}"


def fmt_shares(micro: int) -> str:
    """Format micro-shares as a decimal share count, e.g. 5.000000."""
    sign = "-" if micro < 0 else ""
    whole, frac = divmod(abs(micro), MICRO_PER_SHARE)
    return f"{sign}{whole}.{frac:06d}"
