"""Shared fuzzing machinery for conservation, matching and replay tests."""

from __future__ import annotations

import random
import string

import pytest

from peermarket.engine import EngineConfig, MarketEngine
from peermarket.errors import MarketError


class CommandFuzzer:
    """Drives an engine with a random but valid-ish mix of all commands.

    Errors of user level (insufficient funds, duplicate titles, bogus
    cancels, …) are expected and counted; anything else propagates. Every
    event is collected so sessions can be replayed and reconciled.
    """

    def __init__(self, seed: int, config: EngineConfig | None = None,
                 n_participants: int = 8, max_projects: int = 5):
        self.rng = random.Random(seed)
        self.engine = MarketEngine(config or EngineConfig())
        self.events: list[dict] = []
        self.rejected = 0
        self.n_participants = n_participants
        self.max_projects = max_projects
        self._tick = 0
        self._title = 0

    def _ts(self) -> str:
        self._tick += 1
        return f"2025-09-01T08:00:{self._tick:010d}+00:00"

    def run_command(self, method, *args, **kwargs):
        try:
            result, events = method(*args, ts=self._ts(), **kwargs)
        except MarketError:
            self.rejected += 1
            return None
        self.events.extend(events)
        return result

    # -- individual random commands ---------------------------------------

    def open_random_account(self):
        pid = f"u{self.rng.randrange(self.n_participants):02d}"
        endowment = self.rng.choice([0, 500_000, 1_000_000, 2_000_000])
        self.run_command(self.engine.open_account, pid, endowment)

    def create_random_project(self):
        pids = self.engine.participant_ids()
        if not pids or len(self.engine.projects) >= self.max_projects:
            return
        self._title += 1
        self.run_command(self.engine.create_project, self.rng.choice(pids),
                         f"topic-{self._title:04d}", self._random_text(0, 3))

    def random_revision(self):
        pids = self.engine.participant_ids()
        projects = self.engine.project_ids()
        if not pids or not projects:
            return
        project = self.engine.project(self.rng.choice(projects))
        body_lines = project.body.splitlines(keepends=True)
        action = self.rng.random()
        if action < 0.5 or not body_lines:  # append
            after = project.body + self._random_text(1, 4)
        elif action < 0.8:  # replace a line
            i = self.rng.randrange(len(body_lines))
            body_lines[i] = self._random_line()
            after = "".join(body_lines)
        else:  # delete a line
            i = self.rng.randrange(len(body_lines))
            del body_lines[i]
            after = "".join(body_lines)
        self.run_command(self.engine.ingest_revision, project.project_id,
                         self.rng.choice(pids), after)

    def random_order(self):
        pids = self.engine.participant_ids()
        projects = self.engine.project_ids()
        if not pids or not projects:
            return
        pid = self.rng.choice(pids)
        project = self.rng.choice(projects)
        side = self.rng.choice(["BID", "ASK"])
        price = self.rng.choice([1, 3, self.rng.randrange(1, 30_000),
                                 self.rng.randrange(9_000, 11_000)])
        qty = self.rng.choice([1, self.rng.randrange(1, 50_000),
                               self.rng.randrange(1, 2_000_000),
                               self.rng.randrange(1, 2_000_000) // 10_000 * 10_000 + 10_000])
        self.run_command(self.engine.submit_limit_order, pid, project, side, price, qty)

    def random_cancel(self):
        if not self.engine.orders_by_id:
            return
        order_id = self.rng.randrange(1, self.engine._next_order_id + 2)
        pids = self.engine.participant_ids()
        order = self.engine.orders_by_id.get(order_id)
        pid = order.participant_id if order and self.rng.random() < 0.8 else self.rng.choice(pids)
        self.run_command(self.engine.cancel_order, pid, order_id)

    def random_expost(self):
        projects = self.engine.project_ids()
        if not projects:
            return
        self.run_command(self.engine.set_ex_post_value, self.rng.choice(projects),
                         self.rng.randrange(0, 40_000))

    def step(self):
        r = self.rng.random()
        if r < 0.05:
            self.open_random_account()
        elif r < 0.12:
            self.create_random_project()
        elif r < 0.42:
            self.random_revision()
        elif r < 0.85:
            self.random_order()
        elif r < 0.97:
            self.random_cancel()
        else:
            self.random_expost()

    def assert_cash_conserved(self):
        """Cheap per-command invariant: total cash constant, no negatives."""
        ledger = self.engine.ledger
        assert ledger.total_cash_centi() == ledger.total_endowment_centi
        for acct in ledger.accounts.values():
            assert acct.cash >= 0 and acct.reserved_cash >= 0

    def run(self, n_commands: int, check_every: int = 1, full_check_every: int = 100):
        for __ in range(3):  # make sure there is someone to act
            self.open_random_account()
        for i in range(n_commands):
            self.step()
            if check_every and i % check_every == 0:
                self.assert_cash_conserved()
            if full_check_every and i % full_check_every == 0:
                self.engine.check_invariants()
        self.engine.check_invariants()

    # -- helpers ------------------------------------------------------------

    def _random_line(self) -> str:
        width = self.rng.randrange(1, 70)
        return "".join(self.rng.choice(string.ascii_lowercase) for _ in range(width)) + "\n"

    def _random_text(self, lo: int, hi: int) -> str:
        return "".join(self._random_line() for _ in range(self.rng.randrange(lo, hi + 1)))


@pytest.fixture
def engine() -> MarketEngine:
    return MarketEngine()


@pytest.fixture
def funded_engine() -> MarketEngine:
    """Two traders with cash, one project, founder holds 5 shares."""
    e = MarketEngine()
    e.open_account("alice", ts="t1")
    e.open_account("bob", ts="t2")
    e.create_project("alice", "Project X", "", ts="t3")
    return e
