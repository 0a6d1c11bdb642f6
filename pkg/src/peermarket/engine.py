"""Single-writer market engine: commands in, journaled events out.

Every mutating command validates first, then mutates, then returns the
result together with the dense-sequence event records describing exactly
what happened. Replays re-execute command records and must reproduce the
derived records (trades, issuances, self-trade cancels) bit for bit.

Concurrency contract: one logical writer. Callers serialize commands (the
HTTP service funnels them through a lock; the simulator is single-threaded).
Reads are plain attribute walks and may run between commands.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction

from . import contributions as contrib
from .errors import (
    AlreadyFilled,
    DuplicateTitle,
    NonPositivePrice,
    NonPositiveValue,
    NotOwner,
    StaleRevision,
    UnknownOrder,
    UnknownProject,
    ZeroQuantity,
)
from .exchange import FillAction, Order, OrderBook, SelfCancelAction, Side, Trade
from .ledger import Ledger
from .money import notional_centi

COMMAND_KINDS = frozenset({
    "AccountOpened", "ProjectCreated", "RevisionIngested",
    "OrderSubmitted", "OrderCancelled", "ExPostValueSet",
})
DERIVED_KINDS = frozenset({"SharesIssued", "TradeExecuted"})
EVENT_KINDS = COMMAND_KINDS | DERIVED_KINDS


@dataclass(frozen=True)
class EngineConfig:
    endowment_centi: int = 1_000_000          # ER$ 10'000 starting cash
    founder_grant_micro: int = 5_000_000      # 5 shares to a project's creator
    founding_price_centi: int = 10_000        # ER$ 100 per share before any trade
    issuance_block_bytes: int = 55            # contributed bytes per issuance block
    issuance_block_value_centi: int = 10_000  # ER$ 100 of shares per block

    def validate(self) -> None:
        if (self.endowment_centi < 0 or self.founder_grant_micro < 0
                or self.founding_price_centi <= 0 or self.issuance_block_bytes <= 0
                or self.issuance_block_value_centi < 0):
            raise ValueError("invalid engine config")

    def canonical(self) -> list:
        return [self.endowment_centi, self.founder_grant_micro, self.founding_price_centi,
                self.issuance_block_bytes, self.issuance_block_value_centi]


class MarketEngine:
    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self.config.validate()
        self.ledger = Ledger()
        self.projects: dict[str, contrib.Project] = {}
        self.titles: set[str] = set()
        self.books: dict[str, OrderBook] = {}
        self.orders_by_id: dict[int, Order] = {}
        self.order_status: dict[int, str] = {}  # resting | filled | cancelled
        self.trades: list[Trade] = []
        self.accumulators: dict[tuple[str, str], contrib.IssuanceAccumulator] = {}
        self.contribution_bytes: dict[tuple[str, str], int] = {}
        self.last_event_seq = 0
        self._next_order_id = 1
        self._next_trade_id = 1
        self._next_project_seq = 1
        self._next_revision_seq = 1

    # ------------------------------------------------------------------
    # event plumbing

    def _finalize(self, pending: list[tuple[str, dict]], ts: str) -> list[dict]:
        """Assign dense sequence numbers once the command has fully succeeded."""
        events = []
        for kind, payload in pending:
            self.last_event_seq += 1
            events.append({"seq": self.last_event_seq, "ts": ts, "kind": kind,
                           "payload": payload})
        return events

    # ------------------------------------------------------------------
    # commands

    def open_account(self, participant_id: str, endowment_centi: int | None = None,
                     ts: str = "") -> tuple[str, list[dict]]:
        if endowment_centi is None:
            endowment_centi = self.config.endowment_centi
        self.ledger.open_account(participant_id, endowment_centi)
        events = self._finalize(
            [("AccountOpened", {"participant_id": participant_id,
                                "endowment_centi": endowment_centi})], ts)
        return participant_id, events

    def create_project(self, creator_id: str, title: str, initial_text: str = "",
                       ts: str = "") -> tuple[contrib.Project, list[dict]]:
        self.ledger.account(creator_id)  # UnknownParticipant if absent
        if title in self.titles:
            raise DuplicateTitle(f"title already exists: {title}")
        project_id = f"P{self._next_project_seq:04d}"
        self._next_project_seq += 1
        project = contrib.Project(
            project_id=project_id, creator_id=creator_id, title=title,
            created_ts=ts, body=initial_text,
            last_trade_price_centi=self.config.founding_price_centi,
        )
        self.projects[project_id] = project
        self.titles.add(title)
        self.books[project_id] = OrderBook(project_id=project_id)
        self.credit_shares(creator_id, project_id, self.config.founder_grant_micro)
        pending = [
            ("ProjectCreated", {"project_id": project_id, "creator_id": creator_id,
                                "title": title, "initial_text": initial_text}),
            ("SharesIssued", {"participant_id": creator_id, "project_id": project_id,
                              "qty_micro": self.config.founder_grant_micro,
                              "reason": "founder_grant",
                              "price_centi": self.config.founding_price_centi,
                              "revision_id": None}),
        ]
        return project, self._finalize(pending, ts)

    def ingest_revision(self, project_id: str, participant_id: str, after_text: str,
                        ts: str = "", revision_id: str | None = None,
                        before_text: str | None = None) -> tuple[tuple[int, int], list[dict]]:
        """Apply a revision; returns ((bytes_counted, issued_micro), events)."""
        project = self.project(project_id)
        self.ledger.account(participant_id)
        if before_text is not None and before_text != project.body:
            raise StaleRevision(f"revision base does not match current body of {project_id}")
        if revision_id is None:
            revision_id = f"R{self._next_revision_seq:06d}"
        self._next_revision_seq += 1
        price = project.last_trade_price_centi
        if price <= 0:
            raise NonPositivePrice(f"project {project_id} has non-positive price")
        counted = contrib.count_contributed_bytes(project.body, after_text)
        acc = self.accumulators.setdefault((participant_id, project_id),
                                           contrib.IssuanceAccumulator())
        issued, owed = contrib.accrue_and_issue(
            acc.owed_centi, counted, price,
            self.config.issuance_block_bytes, self.config.issuance_block_value_centi)
        acc.owed_centi = owed
        acc.last_price_centi = price
        project.body = after_text
        project.total_contributed_bytes += counted
        key = (participant_id, project_id)
        self.contribution_bytes[key] = self.contribution_bytes.get(key, 0) + counted
        pending = [("RevisionIngested", {
            "revision_id": revision_id, "project_id": project_id,
            "participant_id": participant_id, "after_text": after_text,
            "bytes_counted": counted, "price_centi": price})]
        if issued > 0:
            self.credit_shares(participant_id, project_id, issued)
            pending.append(("SharesIssued", {
                "participant_id": participant_id, "project_id": project_id,
                "qty_micro": issued, "reason": "contribution",
                "price_centi": price, "revision_id": revision_id}))
        return (counted, issued), self._finalize(pending, ts)

    def submit_limit_order(self, participant_id: str, project_id: str, side: str | Side,
                           limit_price_centi: int, qty_micro: int,
                           ts: str = "") -> tuple[tuple[int, list[Trade]], list[dict]]:
        self.ledger.account(participant_id)
        book = self._book(project_id)
        side = Side(side)
        if qty_micro <= 0:
            raise ZeroQuantity("order quantity must be > 0")
        if limit_price_centi <= 0:
            raise NonPositivePrice("limit price must be > 0")

        order_id = self._next_order_id
        order = Order(order_id=order_id, participant_id=participant_id,
                      project_id=project_id, side=side,
                      limit_price_centi=limit_price_centi,
                      original_qty_micro=qty_micro, remaining_qty_micro=qty_micro,
                      submit_seq=order_id, ts=ts)
        if side is Side.BID:
            reservation = notional_centi(limit_price_centi, qty_micro)
            self.ledger.reserve_cash(participant_id, reservation)  # InsufficientFunds
            order.reserved_centi = reservation
        else:
            self.ledger.reserve_shares(participant_id, project_id, qty_micro)
        self._next_order_id += 1
        self.orders_by_id[order_id] = order
        self.order_status[order_id] = "resting"

        pending = [("OrderSubmitted", {
            "order_id": order_id, "participant_id": participant_id,
            "project_id": project_id, "side": side.value,
            "limit_price_centi": limit_price_centi, "qty_micro": qty_micro})]

        fills: list[Trade] = []
        project = self.projects[project_id]
        for action in book.match_incoming(order):
            if isinstance(action, SelfCancelAction):
                pending.append(self._release_order(action.order, reason="self_trade"))
                continue
            assert isinstance(action, FillAction)
            maker = action.maker
            buy_order, sell_order = (order, maker) if side is Side.BID else (maker, order)
            notional = notional_centi(action.price_centi, action.qty_micro)
            notional = self._ensure_bid_funding(buy_order, notional)
            self.ledger.settle_trade(buy_order.participant_id, sell_order.participant_id,
                                     project_id, action.qty_micro, notional)
            buy_order.reserved_centi -= notional
            self._normalize_bid_reservation(buy_order)
            trade = Trade(trade_id=self._next_trade_id, project_id=project_id,
                          buyer_id=buy_order.participant_id,
                          seller_id=sell_order.participant_id,
                          price_centi=action.price_centi, qty_micro=action.qty_micro,
                          notional_centi=notional, maker_order_id=maker.order_id,
                          taker_order_id=order.order_id, ts=ts)
            self._next_trade_id += 1
            self.trades.append(trade)
            fills.append(trade)
            project.last_trade_price_centi = action.price_centi
            if maker.remaining_qty_micro == 0:
                self.order_status[maker.order_id] = "filled"
            pending.append(("TradeExecuted", {
                "trade_id": trade.trade_id, "project_id": project_id,
                "buyer_id": trade.buyer_id, "seller_id": trade.seller_id,
                "price_centi": trade.price_centi, "qty_micro": trade.qty_micro,
                "notional_centi": trade.notional_centi,
                "maker_order_id": trade.maker_order_id,
                "taker_order_id": trade.taker_order_id}))
        if order.remaining_qty_micro == 0:
            self.order_status[order_id] = "filled"
        return (order_id, fills), self._finalize(pending, ts)

    def cancel_order(self, participant_id: str, order_id: int,
                     ts: str = "") -> tuple[dict, list[dict]]:
        order = self.orders_by_id.get(order_id)
        status = self.order_status.get(order_id)
        if order is None or status == "cancelled":
            raise UnknownOrder(f"no resting order {order_id}")
        if status == "filled":
            raise AlreadyFilled(f"order {order_id} is fully filled")
        if order.participant_id != participant_id:
            raise NotOwner(f"order {order_id} does not belong to {participant_id}")
        self.books[order.project_id].remove(order)
        kind, payload = self._release_order(order, reason="user")
        events = self._finalize([(kind, payload)], ts)
        released = {"released_cash_centi": payload["released_cash_centi"],
                    "released_qty_micro": payload["released_qty_micro"]}
        return released, events

    def set_ex_post_value(self, project_id: str, value_centi: int,
                          ts: str = "") -> tuple[None, list[dict]]:
        project = self.project(project_id)
        if value_centi < 0:
            raise NonPositiveValue("ex-post value must be >= 0")
        project.ex_post_value_centi = value_centi
        events = self._finalize([("ExPostValueSet", {
            "project_id": project_id, "value_centi": value_centi})], ts)
        return None, events

    # ------------------------------------------------------------------
    # command helpers

    def credit_shares(self, participant_id: str, project_id: str, qty_micro: int) -> None:
        """Create qty_micro new shares of project_id in participant's account.

        Internal building block of founder grants and revision issuance;
        callers are responsible for journaling a SharesIssued event when
        qty_micro > 0.
        """
        project = self.project(project_id)
        if qty_micro == 0:
            return
        self.ledger.credit_shares(participant_id, project_id, qty_micro)
        project.shares_outstanding += qty_micro

    def _ensure_bid_funding(self, buy_order: Order, notional: int) -> int:
        """Top up rounding shortfalls from free cash; cap in the dust corner.

        Multi-fill half-up rounding can overshoot the original reservation
        by a centi per fill; the shortfall is pulled from the buyer's free
        cash. Only when that is exhausted too is the notional capped, so
        balances can never go negative.
        """
        if notional <= buy_order.reserved_centi:
            return notional
        shortfall = notional - buy_order.reserved_centi
        free = self.ledger.account(buy_order.participant_id).cash
        topup = min(shortfall, free)
        if topup > 0:
            self.ledger.reserve_cash(buy_order.participant_id, topup)
            buy_order.reserved_centi += topup
        return min(notional, buy_order.reserved_centi)

    def _normalize_bid_reservation(self, buy_order: Order) -> None:
        """Keep a bid's locked cash at exactly round-half-up(limit x remaining).

        Refunds the excess when fills execute at better-than-limit prices
        (and releases everything once the order is done); tops up best
        effort when rounding left the reservation a centi short.
        """
        if buy_order.side is not Side.BID:
            return
        if buy_order.remaining_qty_micro > 0:
            target = notional_centi(buy_order.limit_price_centi, buy_order.remaining_qty_micro)
        else:
            target = 0
        delta = buy_order.reserved_centi - target
        if delta > 0:
            self.ledger.release_cash(buy_order.participant_id, delta)
            buy_order.reserved_centi = target
        elif delta < 0:
            free = self.ledger.account(buy_order.participant_id).cash
            topup = min(-delta, free)
            if topup > 0:
                self.ledger.reserve_cash(buy_order.participant_id, topup)
                buy_order.reserved_centi += topup

    def _release_order(self, order: Order, reason: str) -> tuple[str, dict]:
        """Release a removed order's reservation; build its cancel payload."""
        released_cash = 0
        released_qty = 0
        if order.side is Side.BID:
            released_cash = order.reserved_centi
            if released_cash:
                self.ledger.release_cash(order.participant_id, released_cash)
            order.reserved_centi = 0
        else:
            released_qty = order.remaining_qty_micro
            if released_qty:
                self.ledger.release_shares(order.participant_id, order.project_id, released_qty)
        self.order_status[order.order_id] = "cancelled"
        return ("OrderCancelled", {
            "order_id": order.order_id, "participant_id": order.participant_id,
            "reason": reason, "released_cash_centi": released_cash,
            "released_qty_micro": released_qty})

    # ------------------------------------------------------------------
    # replay dispatch

    def execute_command(self, kind: str, payload: dict, ts: str) -> list[dict]:
        """Re-execute a journaled command record; returns the produced events."""
        if kind == "AccountOpened":
            _, events = self.open_account(payload["participant_id"],
                                          payload["endowment_centi"], ts)
        elif kind == "ProjectCreated":
            _, events = self.create_project(payload["creator_id"], payload["title"],
                                            payload["initial_text"], ts)
        elif kind == "RevisionIngested":
            _, events = self.ingest_revision(payload["project_id"], payload["participant_id"],
                                             payload["after_text"], ts,
                                             revision_id=payload["revision_id"])
        elif kind == "OrderSubmitted":
            _, events = self.submit_limit_order(payload["participant_id"], payload["project_id"],
                                                payload["side"], payload["limit_price_centi"],
                                                payload["qty_micro"], ts)
        elif kind == "OrderCancelled":
            _, events = self.cancel_order(payload["participant_id"], payload["order_id"], ts)
        elif kind == "ExPostValueSet":
            _, events = self.set_ex_post_value(payload["project_id"], payload["value_centi"], ts)
        else:
            raise ValueError(f"not a command kind: {kind}")
        return events

    # ------------------------------------------------------------------
    # reads

    def project(self, project_id: str) -> contrib.Project:
        try:
            return self.projects[project_id]
        except KeyError:
            raise UnknownProject(f"unknown project: {project_id}") from None

    def _book(self, project_id: str) -> OrderBook:
        self.project(project_id)
        return self.books[project_id]

    def last_price(self, project_id: str) -> int:
        return self.project(project_id).last_trade_price_centi

    def book_snapshot(self, project_id: str, depth: int = 10) -> dict:
        if depth < 1:
            raise ValueError("depth must be >= 1")
        return self._book(project_id).snapshot(depth)

    def trades_for(self, project_id: str | None = None) -> list[Trade]:
        if project_id is None:
            return list(self.trades)
        self.project(project_id)
        return [t for t in self.trades if t.project_id == project_id]

    def participant_ids(self) -> list[str]:
        return sorted(self.ledger.accounts)

    def project_ids(self) -> list[str]:
        return sorted(self.projects)

    def bytes_by_participant_project(self) -> dict[tuple[str, str], int]:
        return dict(self.contribution_bytes)

    def ex_post_valuation(self) -> dict[str, int]:
        return {pid: p.ex_post_value_centi for pid, p in self.projects.items()
                if p.ex_post_value_centi is not None}

    # ------------------------------------------------------------------
    # digest + invariants

    def canonical_state(self) -> dict:
        accumulators = [
            [pid, proj, acc.owed_centi.numerator, acc.owed_centi.denominator,
             acc.last_price_centi]
            for (pid, proj), acc in sorted(self.accumulators.items())
            if acc.owed_centi
        ]
        projects = []
        for pid in sorted(self.projects):
            p = self.projects[pid]
            body_sha = hashlib.sha256(p.body.encode("utf-8")).hexdigest()
            projects.append([p.project_id, p.creator_id, p.title, p.created_ts, body_sha,
                             p.total_contributed_bytes, p.shares_outstanding,
                             p.last_trade_price_centi, p.ex_post_value_centi])
        books = [self.books[pid].canonical() for pid in sorted(self.books)]
        trades = [[t.trade_id, t.project_id, t.buyer_id, t.seller_id, t.price_centi,
                   t.qty_micro, t.notional_centi, t.maker_order_id, t.taker_order_id, t.ts]
                  for t in self.trades]
        contributions_rows = [
            [pid, proj, n] for (pid, proj), n in sorted(self.contribution_bytes.items()) if n
        ]
        return {
            "config": self.config.canonical(),
            "accounts": self.ledger.canonical_accounts(),
            "projects": projects,
            "books": books,
            "trades": trades,
            "accumulators": accumulators,
            "contributions": contributions_rows,
            "counters": [self.last_event_seq, self._next_order_id, self._next_trade_id,
                         self._next_project_seq, self._next_revision_seq],
        }

    def snapshot_digest(self) -> str:
        canon = json.dumps(self.canonical_state(), sort_keys=True,
                           separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def check_invariants(self) -> None:
        """Assert the conservation and book invariants; used heavily by tests."""
        ledger = self.ledger
        assert ledger.total_cash_centi() == ledger.total_endowment_centi, "cash conservation broken"
        reserved_cash_by_pid: dict[str, int] = {}
        reserved_shares: dict[tuple[str, str], int] = {}
        for book in self.books.values():
            assert not book.is_crossed(), f"crossed book in {book.project_id}"
            for o in book.bids + book.asks:
                assert o.remaining_qty_micro > 0, "zero-quantity resting order"
                assert o.limit_price_centi > 0
                if o.side is Side.BID:
                    reserved_cash_by_pid[o.participant_id] = (
                        reserved_cash_by_pid.get(o.participant_id, 0) + o.reserved_centi)
                else:
                    key = (o.participant_id, o.project_id)
                    reserved_shares[key] = reserved_shares.get(key, 0) + o.remaining_qty_micro
        held_by_project: dict[str, int] = {}
        for pid, acct in ledger.accounts.items():
            assert acct.cash >= 0 and acct.reserved_cash >= 0, f"negative cash for {pid}"
            assert acct.reserved_cash == reserved_cash_by_pid.get(pid, 0), \
                f"reservation mismatch for {pid}"
            for proj, h in acct.holdings.items():
                assert h.free >= 0 and h.reserved >= 0, f"negative holding {pid}/{proj}"
                assert h.reserved == reserved_shares.get((pid, proj), 0), \
                    f"share reservation mismatch {pid}/{proj}"
                held_by_project[proj] = held_by_project.get(proj, 0) + h.free + h.reserved
        for proj_id, project in self.projects.items():
            held = held_by_project.get(proj_id, 0)
            assert held == project.shares_outstanding, \
                f"outstanding mismatch for {proj_id}: held {held} vs {project.shares_outstanding}"
            assert project.last_trade_price_centi > 0
        for (pid, proj), acc in self.accumulators.items():
            assert acc.owed_centi >= 0, f"negative accumulator {pid}/{proj}"
            if acc.last_price_centi:
                assert acc.owed_centi < Fraction(acc.last_price_centi, 1_000_000), \
                    f"accumulator not reduced {pid}/{proj}"
