"""Naive reference matcher: O(n^2) scans over plain lists, no shared code
with the production book. Used to verify fills and resting state match
the engine exactly, order for order."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class RefOrder:
    order_id: int
    participant_id: str
    side: str  # "BID" | "ASK"
    price: int
    remaining: int
    seq: int


@dataclass
class RefFill:
    maker_order_id: int
    taker_order_id: int
    buyer_id: str
    seller_id: str
    price: int
    qty: int


class ReferenceMarket:
    """One book per project; price-time priority by exhaustive scan."""

    def __init__(self):
        self.resting: dict[str, list[RefOrder]] = {}
        self.cancelled_self: list[int] = []
        self.last_price: dict[str, int] = {}

    def _best(self, orders: list[RefOrder], side: str) -> RefOrder | None:
        best = None
        for o in orders:
            if o.side != side:
                continue
            if best is None:
                best = o
            elif side == "ASK":
                if (o.price, o.seq) < (best.price, best.seq):
                    best = o
            else:
                if (-o.price, o.seq) < (-best.price, best.seq):
                    best = o
        return best

    def submit(self, project: str, order_id: int, participant: str, side: str,
               price: int, qty: int) -> tuple[list[RefFill], list[int]]:
        book = self.resting.setdefault(project, [])
        incoming = RefOrder(order_id=order_id, participant_id=participant,
                            side=side, price=price, remaining=qty, seq=order_id)
        fills: list[RefFill] = []
        self_cancels: list[int] = []
        opposite = "ASK" if side == "BID" else "BID"
        while incoming.remaining > 0:
            best = self._best(book, opposite)
            if best is None:
                break
            crosses = (incoming.price >= best.price if side == "BID"
                       else incoming.price <= best.price)
            if not crosses:
                break
            if best.participant_id == participant:
                book.remove(best)
                self_cancels.append(best.order_id)
                self.cancelled_self.append(best.order_id)
                continue
            q = min(incoming.remaining, best.remaining)
            buyer, seller = ((participant, best.participant_id) if side == "BID"
                             else (best.participant_id, participant))
            fills.append(RefFill(maker_order_id=best.order_id, taker_order_id=order_id,
                                 buyer_id=buyer, seller_id=seller,
                                 price=best.price, qty=q))
            incoming.remaining -= q
            best.remaining -= q
            self.last_price[project] = best.price
            if best.remaining == 0:
                book.remove(best)
        if incoming.remaining > 0:
            book.append(incoming)
        return fills, self_cancels

    def cancel(self, project: str, order_id: int) -> bool:
        book = self.resting.get(project, [])
        for o in book:
            if o.order_id == order_id:
                book.remove(o)
                return True
        return False

    def resting_state(self, project: str) -> list[tuple[int, int, int]]:
        """(order_id, price, remaining) sorted by id, for comparison."""
        return sorted((o.order_id, o.price, o.remaining)
                      for o in self.resting.get(project, []))
