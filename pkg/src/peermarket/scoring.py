"""Portfolio valuation, grading and the contribution analytics.

Ex-ante score: cash + reserved cash + holdings at last trade prices.
Ex-post score: same portfolio with instructor-assigned per-share values
substituted for market prices; this is the grading basis. Cash is included in
both (the alternative, grading holdings only, would make hoarding cash
strictly dominated; flip `ex_ante_value`/`ex_post_value` call sites if a
deployment wants that).

Scores are degree-1 homogeneous in the currency unit, so leaderboard
permutations are invariant under uniform rescaling of endowment, prices
and the issuance block value.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .engine import MarketEngine
from .errors import InsufficientPoints, MissingValuation, NonPositiveValue
from .money import MICRO_PER_SHARE, round_half_up


@dataclass
class ScoreRow:
    participant_id: str
    ex_ante_centi: int
    ex_post_centi: int | None
    total_contributed_bytes: int
    rank: int


def _holdings_value_centi(engine: MarketEngine, participant_id: str,
                          price_of: dict[str, int]) -> int:
    acct = engine.ledger.account(participant_id)
    total = 0
    for project_id, holding in acct.holdings.items():
        qty = holding.free + holding.reserved
        if qty == 0:
            continue
        if project_id not in price_of:
            raise MissingValuation([project_id])
        total += round_half_up(Fraction(price_of[project_id] * qty, MICRO_PER_SHARE))
    return total


def ex_ante_value(engine: MarketEngine, participant_id: str) -> int:
    """Portfolio value at current market prices, in centi-ER$."""
    acct = engine.ledger.account(participant_id)
    prices = {pid: p.last_trade_price_centi for pid, p in engine.projects.items()}
    return acct.cash + acct.reserved_cash + _holdings_value_centi(engine, participant_id, prices)


def ex_post_value(engine: MarketEngine, participant_id: str,
                  valuation: dict[str, int]) -> int:
    """Portfolio value with instructor values substituted for prices."""
    acct = engine.ledger.account(participant_id)
    missing = [pid for pid, h in acct.holdings.items()
               if (h.free + h.reserved) > 0 and pid not in valuation]
    if missing:
        raise MissingValuation(missing)
    return acct.cash + acct.reserved_cash + _holdings_value_centi(engine, participant_id, valuation)


def contribution_matrix(engine: MarketEngine) -> tuple[list[str], list[str], list[list[int]]]:
    """Bytes contributed per (participant, project), both axes sorted by
    decreasing total, ties by id. Returns (row_ids, col_ids, matrix)."""
    participants = engine.participant_ids()
    projects = engine.project_ids()
    by_pair = engine.bytes_by_participant_project()
    row_total = {p: 0 for p in participants}
    col_total = {p: 0 for p in projects}
    for (pid, proj), n in by_pair.items():
        row_total[pid] += n
        col_total[proj] += n
    rows = sorted(participants, key=lambda p: (-row_total[p], p))
    cols = sorted(projects, key=lambda p: (-col_total[p], p))
    matrix = [[by_pair.get((r, c), 0) for c in cols] for r in rows]
    return rows, cols, matrix


def fit_scaling_exponent(points: list[tuple[float, float]]) -> tuple[float, float, float]:
    """OLS on (log10 contribution, log10 score); returns (slope, intercept, r2).

    Requires at least 3 strictly positive points; zero-contribution
    participants must be excluded by the caller (a log-log fit cannot
    represent them).
    """
    if len(points) < 3:
        raise InsufficientPoints(f"need >= 3 points, got {len(points)}")
    if any(x <= 0 or y <= 0 for x, y in points):
        raise NonPositiveValue("log-log fit requires strictly positive coordinates")
    x = np.log10([p[0] for p in points])
    y = np.log10([p[1] for p in points])
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise NonPositiveValue("all contributions identical; slope undefined")
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    residuals = y - (slope * x + intercept)
    ss_res = float((residuals ** 2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-18 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return slope, float(intercept), r2


def leaderboard(engine: MarketEngine, mode: str,
                valuation: dict[str, int] | None = None) -> list[ScoreRow]:
    """All participants ranked by score (descending, ties by id).

    mode "ex_ante" ranks by market value; "ex_post" by instructor value and
    requires a complete valuation (engine-stored values are used when no
    explicit valuation is passed).
    """
    if mode not in ("ex_ante", "ex_post"):
        raise ValueError(f"unknown leaderboard mode: {mode}")
    if valuation is None:
        valuation = engine.ex_post_valuation()
    by_pair = engine.bytes_by_participant_project()
    totals: dict[str, int] = {}
    for (pid, _), n in by_pair.items():
        totals[pid] = totals.get(pid, 0) + n
    rows = []
    for pid in engine.participant_ids():
        ex_ante = ex_ante_value(engine, pid)
        ex_post = ex_post_value(engine, pid, valuation) if mode == "ex_post" else None
        rows.append(ScoreRow(participant_id=pid, ex_ante_centi=ex_ante,
                             ex_post_centi=ex_post,
                             total_contributed_bytes=totals.get(pid, 0), rank=0))
    score = (lambda r: r.ex_post_centi) if mode == "ex_post" else (lambda r: r.ex_ante_centi)
    rows.sort(key=lambda r: (-score(r), r.participant_id))
    for i, row in enumerate(rows):
        row.rank = i + 1
    return rows


# ----------------------------------------------------------------------
# CSV exports (canonical field orders; the web client mirrors these)

def leaderboard_csv(rows: list[ScoreRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rank", "participant_id", "ex_ante_centi", "ex_post_centi",
                     "total_contributed_bytes"])
    for r in rows:
        writer.writerow([r.rank, r.participant_id, r.ex_ante_centi,
                         "" if r.ex_post_centi is None else r.ex_post_centi,
                         r.total_contributed_bytes])
    return buf.getvalue()


def matrix_csv(row_ids: list[str], col_ids: list[str], matrix: list[list[int]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["participant_id", *col_ids])
    for pid, row in zip(row_ids, matrix):
        writer.writerow([pid, *row])
    return buf.getvalue()


def scaling_points_csv(rows: list[ScoreRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["participant_id", "contributed_bytes", "ex_ante_centi", "ex_post_centi"])
    for r in sorted(rows, key=lambda r: r.participant_id):
        writer.writerow([r.participant_id, r.total_contributed_bytes, r.ex_ante_centi,
                         "" if r.ex_post_centi is None else r.ex_post_centi])
    return buf.getvalue()
