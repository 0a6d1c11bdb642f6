"""Accounts, balances, reservations and zero-sum settlement.

The ledger is the conservation backbone: cash only ever moves between the
free and reserved buckets of one account or from one account to another,
so the sum of (cash + reserved_cash) over all accounts equals the sum of
endowments at all times. Share issuance creates holdings but never cash.

All mutating entry points validate first and mutate second, so a raised
error leaves state untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    DegenerateTrade,
    DuplicateParticipant,
    EngineInvariantError,
    InsufficientFunds,
    InsufficientHoldings,
    InsufficientReservation,
    UnknownParticipant,
)


@dataclass
class Holding:
    free: int = 0      # micro-shares
    reserved: int = 0  # micro-shares locked behind open asks

    @property
    def total(self) -> int:
        return self.free + self.reserved


@dataclass
class Account:
    participant_id: str
    cash: int = 0           # centi-ER$, free
    reserved_cash: int = 0  # centi-ER$ locked behind open bids
    holdings: dict[str, Holding] = field(default_factory=dict)

    def holding(self, project_id: str) -> Holding:
        h = self.holdings.get(project_id)
        if h is None:
            h = Holding()
            self.holdings[project_id] = h
        return h


class Ledger:
    """All accounts plus the endowment total used by conservation checks."""

    def __init__(self) -> None:
        self.accounts: dict[str, Account] = {}
        self.total_endowment_centi = 0

    # -- accounts ---------------------------------------------------------

    def open_account(self, participant_id: str, endowment_centi: int) -> Account:
        if participant_id in self.accounts:
            raise DuplicateParticipant(f"participant already registered: {participant_id}")
        if endowment_centi < 0:
            raise ValueError("endowment must be >= 0")
        account = Account(participant_id=participant_id, cash=endowment_centi)
        self.accounts[participant_id] = account
        self.total_endowment_centi += endowment_centi
        return account

    def account(self, participant_id: str) -> Account:
        try:
            return self.accounts[participant_id]
        except KeyError:
            raise UnknownParticipant(f"unknown participant: {participant_id}") from None

    def has_account(self, participant_id: str) -> bool:
        return participant_id in self.accounts

    # -- reservations ------------------------------------------------------

    def reserve_cash(self, participant_id: str, amount_centi: int) -> None:
        acct = self.account(participant_id)
        if amount_centi < 0:
            raise ValueError("reservation must be >= 0")
        if acct.cash < amount_centi:
            raise InsufficientFunds(
                f"{participant_id}: need {amount_centi} centi free, have {acct.cash}"
            )
        acct.cash -= amount_centi
        acct.reserved_cash += amount_centi

    def release_cash(self, participant_id: str, amount_centi: int) -> None:
        acct = self.account(participant_id)
        if amount_centi < 0 or acct.reserved_cash < amount_centi:
            raise InsufficientReservation(
                f"{participant_id}: cannot release {amount_centi} centi from "
                f"{acct.reserved_cash} reserved"
            )
        acct.reserved_cash -= amount_centi
        acct.cash += amount_centi

    def reserve_shares(self, participant_id: str, project_id: str, qty_micro: int) -> None:
        acct = self.account(participant_id)
        h = acct.holding(project_id)
        if qty_micro < 0:
            raise ValueError("reservation must be >= 0")
        if h.free < qty_micro:
            raise InsufficientHoldings(
                f"{participant_id}: need {qty_micro} micro of {project_id}, have {h.free}"
            )
        h.free -= qty_micro
        h.reserved += qty_micro

    def release_shares(self, participant_id: str, project_id: str, qty_micro: int) -> None:
        acct = self.account(participant_id)
        h = acct.holding(project_id)
        if qty_micro < 0 or h.reserved < qty_micro:
            raise InsufficientReservation(
                f"{participant_id}: cannot release {qty_micro} micro of {project_id} "
                f"from {h.reserved} reserved"
            )
        h.reserved -= qty_micro
        h.free += qty_micro

    # -- settlement --------------------------------------------------------

    def settle_trade(
        self,
        buyer_id: str,
        seller_id: str,
        project_id: str,
        qty_micro: int,
        notional_centi: int,
    ) -> None:
        """Atomically move notional from buyer reservation to seller cash and
        qty from seller reserved holdings to buyer free holdings."""
        if qty_micro <= 0:
            raise DegenerateTrade("trade quantity must be > 0")
        buyer = self.account(buyer_id)
        seller = self.account(seller_id)
        seller_holding = seller.holding(project_id)
        if notional_centi < 0:
            raise EngineInvariantError("negative notional")
        if buyer.reserved_cash < notional_centi:
            raise InsufficientReservation(
                f"buyer {buyer_id} reserved {buyer.reserved_cash} < notional {notional_centi}"
            )
        if seller_holding.reserved < qty_micro:
            raise InsufficientReservation(
                f"seller {seller_id} reserved {seller_holding.reserved} < qty {qty_micro}"
            )
        buyer.reserved_cash -= notional_centi
        seller.cash += notional_centi
        seller_holding.reserved -= qty_micro
        buyer.holding(project_id).free += qty_micro

    def credit_shares(self, participant_id: str, project_id: str, qty_micro: int) -> None:
        if qty_micro < 0:
            raise ValueError("credit must be >= 0")
        self.account(participant_id).holding(project_id).free += qty_micro

    # -- conservation views -------------------------------------------------

    def total_cash_centi(self) -> int:
        return sum(a.cash + a.reserved_cash for a in self.accounts.values())

    def total_holdings_micro(self, project_id: str) -> int:
        return sum(
            h.total
            for a in self.accounts.values()
            for p, h in a.holdings.items()
            if p == project_id
        )

    def canonical_accounts(self) -> list:
        """Deterministic nested-list form for state digests; zero holdings
        are pruned so a drained position digests like an absent one."""
        out = []
        for pid in sorted(self.accounts):
            a = self.accounts[pid]
            holdings = [
                [proj, h.free, h.reserved]
                for proj, h in sorted(a.holdings.items())
                if h.free or h.reserved
            ]
            out.append([pid, a.cash, a.reserved_cash, holdings])
        return out
