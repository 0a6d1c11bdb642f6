"""Projects as wiki pages: revision diffing and price-dependent share issuance.

Contributed work is measured in bytes of inserted lines under a
line-granularity LCS diff (leftmost-match tie-breaking, so the measurement
is deterministic). Every 55 contributed bytes are worth one issuance block
(ER$ 100 by default) of project shares, valued at the project's last trade
price. Fractional remainders accumulate exactly per (participant, project)
in a rational accumulator so repeated small edits lose no value and earn no
rounding bonus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .money import MICRO_PER_SHARE


@dataclass
class Project:
    project_id: str
    creator_id: str
    title: str
    created_ts: str
    body: str = ""
    shares_outstanding: int = 0        # micro-shares
    total_contributed_bytes: int = 0
    last_trade_price_centi: int = 0
    ex_post_value_centi: int | None = None


@dataclass
class Revision:
    revision_id: str
    project_id: str
    participant_id: str
    ts: str
    before_text: str
    after_text: str


@dataclass
class IssuanceAccumulator:
    """Exact rational centi-ER$ of earned value not yet converted to shares.

    After every issuance, 0 <= owed < value of one micro-share at the price
    used (tracked in last_price_centi).
    """

    owed_centi: Fraction = field(default_factory=lambda: Fraction(0))
    last_price_centi: int = 0


def _split_lines(text: str) -> list[str]:
    """Split keeping line endings so every byte belongs to exactly one line."""
    return text.splitlines(keepends=True)


def _lcs_matched_lines(before: list[str], after: list[str]) -> list[str]:
    """Lines of `after` matched by a leftmost-match LCS against `before`.

    Common prefix/suffix are stripped first; the O(n*m) DP only runs on the
    differing middle, which keeps append-style revisions cheap.
    """
    lo = 0
    hi_a, hi_b = len(before), len(after)
    while lo < hi_a and lo < hi_b and before[lo] == after[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and before[hi_a - 1] == after[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    matched = after[:lo] + after[hi_b:]

    a = before[lo:hi_a]
    b = after[lo:hi_b]
    if not a or not b:
        return matched

    # dp[i][j] = LCS length of a[i:], b[j:]
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = dp[i], dp[i + 1]
        ai = a[i]
        for j in range(m - 1, -1, -1):
            if ai == b[j]:
                row[j] = below[j + 1] + 1
            else:
                down, right = below[j], row[j + 1]
                row[j] = down if down >= right else right
    # leftmost-match walk: take the earliest feasible pair; on ties advance
    # the before-side first
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j] and dp[i][j] == dp[i + 1][j + 1] + 1:
            matched.append(b[j])
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return matched


def count_contributed_bytes(before_text: str, after_text: str) -> int:
    """Total UTF-8 bytes of lines inserted by the revision.

    Deletions and unchanged lines contribute 0. Equal texts yield 0; an
    empty before yields len(after) bytes.
    """
    if before_text == after_text:
        return 0
    before = _split_lines(before_text)
    after = _split_lines(after_text)
    matched = _lcs_matched_lines(before, after)
    total_after = sum(len(line.encode("utf-8")) for line in after)
    total_matched = sum(len(line.encode("utf-8")) for line in matched)
    return total_after - total_matched


def issuance_value_centi(contributed_bytes: int, block_bytes: int, block_value_centi: int) -> Fraction:
    """Exact centi-ER$ of share value earned by `contributed_bytes`."""
    if contributed_bytes < 0:
        raise ValueError("bytes must be >= 0")
    return Fraction(contributed_bytes * block_value_centi, block_bytes)


def accrue_and_issue(
    owed_centi: Fraction,
    contributed_bytes: int,
    price_centi: int,
    block_bytes: int,
    block_value_centi: int,
) -> tuple[int, Fraction]:
    """Add a revision's value to the accumulator and convert to whole
    micro-shares at `price_centi`.

    Returns (issued_micro, remaining_owed). The remainder is always
    strictly below the value of one micro-share at this price, so
    cumulative issuance never drifts more than one micro-share from the
    exact rational total.
    """
    if price_centi <= 0:
        raise ValueError("price must be > 0")
    owed = owed_centi + issuance_value_centi(contributed_bytes, block_bytes, block_value_centi)
    per_micro = Fraction(price_centi, MICRO_PER_SHARE)
    issued_micro = int(owed / per_micro)  # floor for non-negative values
    owed -= issued_micro * per_micro
    return issued_micro, owed


def shares_pre_quantization(
    contributed_bytes: int,
    price_centi: int,
    block_bytes: int,
    block_value_centi: int,
) -> Fraction:
    """Exact share count before micro-share flooring; inverse in price."""
    if price_centi <= 0:
        raise ValueError("price must be > 0")
    value = issuance_value_centi(contributed_bytes, block_bytes, block_value_centi)
    return value / price_centi
