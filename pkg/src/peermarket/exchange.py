"""Continuous double auction: per-project limit order book.

Matching is price-time priority, executions always at the resting order's
limit. Self-trades are prevented by cancelling the own resting order that
would match. The book layer is pure structure/sequencing; all money and
share movements are applied by the engine from the action list a match
produces, so fill quantities never depend on ledger state.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, field
from enum import Enum


class Side(str, Enum):
    BID = "BID"
    ASK = "ASK"


@dataclass
class Order:
    order_id: int
    participant_id: str
    project_id: str
    side: Side
    limit_price_centi: int
    original_qty_micro: int
    remaining_qty_micro: int
    submit_seq: int
    ts: str
    reserved_centi: int = 0  # bid orders: cash currently locked for this order


@dataclass
class Trade:
    trade_id: int
    project_id: str
    buyer_id: str
    seller_id: str
    price_centi: int   # the resting order's limit
    qty_micro: int
    notional_centi: int
    maker_order_id: int
    taker_order_id: int
    ts: str


@dataclass
class FillAction:
    maker: Order
    qty_micro: int
    price_centi: int  # maker's limit


@dataclass
class SelfCancelAction:
    order: Order


@dataclass
class OrderBook:
    """One project's resting orders, each side kept in priority order."""

    project_id: str
    bids: list[Order] = field(default_factory=list)  # (-price, seq) ascending
    asks: list[Order] = field(default_factory=list)  # (price, seq) ascending

    def best_bid(self) -> Order | None:
        return self.bids[0] if self.bids else None

    def best_ask(self) -> Order | None:
        return self.asks[0] if self.asks else None

    def insert(self, order: Order) -> None:
        if order.side is Side.BID:
            insort(self.bids, order, key=lambda o: (-o.limit_price_centi, o.submit_seq))
        else:
            insort(self.asks, order, key=lambda o: (o.limit_price_centi, o.submit_seq))

    def remove(self, order: Order) -> None:
        side = self.bids if order.side is Side.BID else self.asks
        side.remove(order)

    def is_crossed(self) -> bool:
        return bool(self.bids and self.asks
                    and self.bids[0].limit_price_centi >= self.asks[0].limit_price_centi)

    def match_incoming(self, incoming: Order) -> list[FillAction | SelfCancelAction]:
        """Walk the opposite side while the incoming order crosses.

        Mutates book structure (removes exhausted/self-cancelled makers,
        decrements remaining quantities) and rests any remainder. Returns
        the actions in execution order for the engine to settle.
        """
        actions: list[FillAction | SelfCancelAction] = []
        opposite = self.asks if incoming.side is Side.BID else self.bids
        while incoming.remaining_qty_micro > 0 and opposite:
            best = opposite[0]
            if incoming.side is Side.BID:
                crosses = incoming.limit_price_centi >= best.limit_price_centi
            else:
                crosses = incoming.limit_price_centi <= best.limit_price_centi
            if not crosses:
                break
            if best.participant_id == incoming.participant_id:
                opposite.pop(0)
                actions.append(SelfCancelAction(order=best))
                continue
            qty = min(incoming.remaining_qty_micro, best.remaining_qty_micro)
            best.remaining_qty_micro -= qty
            incoming.remaining_qty_micro -= qty
            actions.append(FillAction(maker=best, qty_micro=qty, price_centi=best.limit_price_centi))
            if best.remaining_qty_micro == 0:
                opposite.pop(0)
        if incoming.remaining_qty_micro > 0:
            self.insert(incoming)
        return actions

    def snapshot(self, depth: int) -> dict:
        """Top `depth` price levels per side with aggregated quantities."""
        def levels(orders: list[Order]) -> list[dict]:
            out: list[dict] = []
            for o in orders:
                if out and out[-1]["price_centi"] == o.limit_price_centi:
                    out[-1]["qty_micro"] += o.remaining_qty_micro
                    out[-1]["orders"] += 1
                elif len(out) < depth:
                    out.append({"price_centi": o.limit_price_centi,
                                "qty_micro": o.remaining_qty_micro,
                                "orders": 1})
                else:
                    break
            return out

        return {"project_id": self.project_id,
                "bids": levels(self.bids),
                "asks": levels(self.asks)}

    def canonical(self) -> list:
        def rows(orders: list[Order]) -> list:
            return [
                [o.order_id, o.participant_id, o.limit_price_centi,
                 o.remaining_qty_micro, o.reserved_centi, o.submit_seq]
                for o in orders
            ]
        return [self.project_id, rows(self.bids), rows(self.asks)]
