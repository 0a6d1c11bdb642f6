"""Event-sourced HTTP service around the market engine.

Every mutating request is serialized through one lock, executed, journaled
(flushed + fsynced) and only then acknowledged; reads see the latest
committed state. All read endpoints are available to every authenticated
participant: balances, books and histories are deliberately public.
GET /events streams the journal as server-sent events with seq-based
catch-up, so clients deduplicate by seq after reconnects.

Identity is a rostered bearer token (no self-registration); instructors
are flagged in the roster and are the only ones who may open accounts and
enter ex-post valuations.
"""

from __future__ import annotations

import asyncio
import fcntl
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from . import scoring
from .engine import EngineConfig, MarketEngine
from .errors import (
    AlreadyFilled,
    DuplicateParticipant,
    DuplicateTitle,
    InsufficientFunds,
    InsufficientHoldings,
    JournalLocked,
    MarketError,
    MissingValuation,
    NotOwner,
    StaleRevision,
    UnknownOrder,
    UnknownParticipant,
    UnknownProject,
)
from .journal import JournalWriter, encode_record, read_journal, replay_records
from .money import fmt_er

_STATUS_BY_ERROR = [
    ((UnknownParticipant, UnknownProject, UnknownOrder), 404),
    ((DuplicateParticipant, DuplicateTitle, StaleRevision, AlreadyFilled,
      InsufficientFunds, InsufficientHoldings, MissingValuation), 409),
    ((NotOwner,), 403),
]


@dataclass
class Identity:
    token: str
    participant_id: str
    role: str  # student | instructor


def load_roster(path: str | Path) -> dict[str, Identity]:
    """Roster file: {"tokens": {token: {"participant_id":…, "role":…}}}."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    roster = {}
    for token, entry in raw["tokens"].items():
        role = entry.get("role", "student")
        if role not in ("student", "instructor"):
            raise ValueError(f"bad role for {entry['participant_id']}: {role}")
        roster[token] = Identity(token=token, participant_id=entry["participant_id"], role=role)
    return roster


class ServiceState:
    """Engine + journal + in-memory event log behind the single-writer lock."""

    def __init__(self, engine: MarketEngine, writer: JournalWriter | None,
                 events: list[dict]):
        self.engine = engine
        self.writer = writer
        self.events = events  # full event history, index = seq - 1
        self.lock = threading.Lock()

    def execute(self, method, *args, **kwargs):
        with self.lock:
            ts = datetime.now(timezone.utc).isoformat()
            result, events = method(*args, ts=ts, **kwargs)
            if self.writer is not None:
                self.writer.append(events)
            self.events.extend(events)
            return result


class OrderBody(BaseModel):
    project: str
    side: str
    price_centi: int
    qty_micro: int


class ProjectBody(BaseModel):
    title: str
    initial_text: str = ""


class RevisionBody(BaseModel):
    after_text: str
    revision_id: str | None = None


class ParticipantBody(BaseModel):
    participant_id: str
    endowment_centi: int | None = None


class ExPostBody(BaseModel):
    project: str
    value_centi: int


def _http_error(exc: MarketError) -> HTTPException:
    status = 400
    for types, code in _STATUS_BY_ERROR:
        if isinstance(exc, types):
            status = code
            break
    detail = {"error": exc.code, "message": str(exc)}
    if isinstance(exc, MissingValuation):
        detail["projects"] = exc.project_ids
    return HTTPException(status_code=status, detail=detail)


def build_state(journal_path: str | Path | None,
                config: EngineConfig | None = None) -> ServiceState:
    """Recover engine state from the journal (if any) and arm the writer."""
    config = config or EngineConfig()
    if journal_path is None:
        return ServiceState(MarketEngine(config), None, [])
    records = read_journal(journal_path)
    engine = replay_records(records, config)
    writer = JournalWriter(journal_path, last_seq=engine.last_event_seq)
    return ServiceState(engine, writer, list(records))


def acquire_journal_lock(journal_path: str | Path):
    """One serving process per journal; flock is released on process exit."""
    lock_path = Path(str(journal_path) + ".lock")
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(lock_path, "w")
    try:
        fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
    except OSError:
        fh.close()
        raise JournalLocked(f"journal in use: {journal_path}") from None
    return fh


def create_app(state: ServiceState, roster: dict[str, Identity]) -> FastAPI:
    app = FastAPI(title="peermarket", version="0.1.0")
    engine = state.engine

    def authed(request: Request) -> Identity:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise HTTPException(status_code=401, detail={"error": "Unauthorized",
                                                         "message": "bearer token required"})
        identity = roster.get(header[7:].strip())
        if identity is None:
            raise HTTPException(status_code=401, detail={"error": "Unauthorized",
                                                         "message": "unknown token"})
        return identity

    def instructor(identity: Identity = Depends(authed)) -> Identity:
        if identity.role != "instructor":
            raise HTTPException(status_code=403, detail={"error": "Forbidden",
                                                         "message": "instructor role required"})
        return identity

    def run(method, *args, **kwargs):
        try:
            return state.execute(method, *args, **kwargs)
        except MarketError as exc:
            raise _http_error(exc) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={
                "error": "InvalidArgument", "message": str(exc)}) from exc

    # -- mutations -------------------------------------------------------

    @app.post("/participants", status_code=201)
    def open_participant(body: ParticipantBody, _: Identity = Depends(instructor)):
        run(engine.open_account, body.participant_id, body.endowment_centi)
        return _portfolio(body.participant_id)

    @app.post("/projects", status_code=201)
    def create_project(body: ProjectBody, identity: Identity = Depends(authed)):
        project = run(engine.create_project, identity.participant_id,
                      body.title, body.initial_text)
        return _project(project.project_id)

    @app.post("/projects/{project_id}/revisions", status_code=201)
    def post_revision(project_id: str, body: RevisionBody,
                      identity: Identity = Depends(authed)):
        (counted, issued) = run(engine.ingest_revision, project_id,
                                identity.participant_id, body.after_text,
                                revision_id=body.revision_id)
        return {"project_id": project_id, "bytes_counted": counted,
                "issued_micro": issued}

    @app.post("/orders", status_code=201)
    def post_order(body: OrderBody, identity: Identity = Depends(authed)):
        order_id, fills = run(engine.submit_limit_order, identity.participant_id,
                              body.project, body.side, body.price_centi, body.qty_micro)
        return {"order_id": order_id,
                "fills": [{"trade_id": t.trade_id, "price_centi": t.price_centi,
                           "qty_micro": t.qty_micro, "notional_centi": t.notional_centi}
                          for t in fills]}

    @app.delete("/orders/{order_id}")
    def delete_order(order_id: int, identity: Identity = Depends(authed)):
        released = run(engine.cancel_order, identity.participant_id, order_id)
        return {"order_id": order_id, **released}

    @app.post("/expost")
    def set_expost(body: ExPostBody, _: Identity = Depends(instructor)):
        run(engine.set_ex_post_value, body.project, body.value_centi)
        return {"project_id": body.project, "value_centi": body.value_centi}

    # -- reads -----------------------------------------------------------

    def _project(project_id: str) -> dict:
        try:
            p = engine.project(project_id)
        except MarketError as exc:
            raise _http_error(exc) from exc
        return {"project_id": p.project_id, "creator_id": p.creator_id,
                "title": p.title, "created_ts": p.created_ts, "body": p.body,
                "shares_outstanding_micro": p.shares_outstanding,
                "total_contributed_bytes": p.total_contributed_bytes,
                "last_trade_price_centi": p.last_trade_price_centi,
                "ex_post_value_centi": p.ex_post_value_centi}

    def _portfolio(participant_id: str) -> dict:
        try:
            acct = engine.ledger.account(participant_id)
            ex_ante = scoring.ex_ante_value(engine, participant_id)
        except MarketError as exc:
            raise _http_error(exc) from exc
        holdings = [{"project_id": pid, "free_micro": h.free, "reserved_micro": h.reserved,
                     "last_trade_price_centi": engine.projects[pid].last_trade_price_centi}
                    for pid, h in sorted(acct.holdings.items()) if h.free or h.reserved]
        return {"participant_id": participant_id, "cash_centi": acct.cash,
                "reserved_cash_centi": acct.reserved_cash, "holdings": holdings,
                "ex_ante_centi": ex_ante, "ex_ante_display": fmt_er(ex_ante)}

    @app.get("/projects")
    def list_projects(_: Identity = Depends(authed)):
        return [_project(pid) for pid in engine.project_ids()]

    @app.get("/projects/{project_id}")
    def get_project(project_id: str, _: Identity = Depends(authed)):
        return _project(project_id)

    @app.get("/participants/{participant_id}/portfolio")
    def get_portfolio(participant_id: str, _: Identity = Depends(authed)):
        return _portfolio(participant_id)

    @app.get("/book/{project_id}")
    def get_book(project_id: str, depth: int = Query(default=10, ge=1),
                 _: Identity = Depends(authed)):
        try:
            snap = engine.book_snapshot(project_id, depth)
        except MarketError as exc:
            raise _http_error(exc) from exc
        snap["last_trade_price_centi"] = engine.last_price(project_id)
        return snap

    @app.get("/trades")
    def get_trades(project: str | None = None, _: Identity = Depends(authed)):
        try:
            trades = engine.trades_for(project)
        except MarketError as exc:
            raise _http_error(exc) from exc
        return [{"trade_id": t.trade_id, "project_id": t.project_id,
                 "buyer_id": t.buyer_id, "seller_id": t.seller_id,
                 "price_centi": t.price_centi, "qty_micro": t.qty_micro,
                 "notional_centi": t.notional_centi, "ts": t.ts}
                for t in trades]

    @app.get("/leaderboard")
    def get_leaderboard(mode: str = Query(default="ex_ante"),
                        _: Identity = Depends(authed)):
        try:
            rows = scoring.leaderboard(engine, mode)
        except MarketError as exc:
            raise _http_error(exc) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={"error": "BadMode",
                                                         "message": str(exc)}) from exc
        return {"mode": mode,
                "rows": [{"rank": r.rank, "participant_id": r.participant_id,
                          "ex_ante_centi": r.ex_ante_centi,
                          "ex_post_centi": r.ex_post_centi,
                          "total_contributed_bytes": r.total_contributed_bytes}
                         for r in rows]}

    @app.get("/digest")
    def get_digest(_: Identity = Depends(authed)):
        return {"seq": engine.last_event_seq, "digest": engine.snapshot_digest()}

    @app.get("/events")
    async def stream_events(request: Request, since_seq: int = Query(default=0, ge=0),
                            max_events: int | None = Query(default=None, ge=1),
                            _: Identity = Depends(authed)):
        """SSE stream of journal records with seq > since_seq.

        Unbounded by default; max_events turns it into a finite catch-up
        read that closes once that many records were sent.
        """
        async def generate():
            cursor = since_seq
            sent = 0
            idle = 0.0
            while True:
                if await request.is_disconnected():
                    return
                batch = state.events[cursor:]
                if max_events is not None:
                    batch = batch[:max_events - sent]
                if batch:
                    for record in batch:
                        yield f"id: {record['seq']}\ndata: {encode_record(record)}\n\n"
                    cursor += len(batch)
                    sent += len(batch)
                    idle = 0.0
                    if max_events is not None and sent >= max_events:
                        return
                else:
                    await asyncio.sleep(0.05)
                    idle += 0.05
                    if idle >= 15.0:
                        yield ": keep-alive\n\n"
                        idle = 0.0

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app


def serve(port: int, journal_path: str | Path, roster_path: str | Path,
          endowment_centi: int = 1_000_000, host: str = "127.0.0.1") -> None:
    """Run the service until interrupted (blocking)."""
    import uvicorn

    roster = load_roster(roster_path)
    lock = acquire_journal_lock(journal_path)
    config = EngineConfig(endowment_centi=endowment_centi)
    state = build_state(journal_path, config)
    app = create_app(state, roster)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        lock.close()
