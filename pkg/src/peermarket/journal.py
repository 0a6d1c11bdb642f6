"""Append-only event journal and deterministic replay.

The journal is the single source of truth: one JSON event record per line,
UTF-8, dense sequence numbers from 1. A mutating command is acknowledged
only after its records are flushed and fsynced. Replay re-executes the
command records through a fresh engine and verifies every record,
including derived ones (trades, issuances, self-trade cancels), against
what re-execution produces, so nondeterminism or tampering surfaces as
ReplayDivergence.

A torn trailing line (crash mid-append) is skipped: it can only belong to
an unacknowledged command. Malformed interior lines raise CorruptJournal.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

from .engine import COMMAND_KINDS, EVENT_KINDS, EngineConfig, MarketEngine
from .errors import (
    CorruptJournal,
    MarketError,
    ReplayDivergence,
    SequenceGap,
    StorageFailure,
)

logger = logging.getLogger(__name__)

_RECORD_KEYS = {"seq", "ts", "kind", "payload"}


def encode_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class JournalWriter:
    """Durable appender enforcing dense sequence numbers."""

    def __init__(self, path: str | Path, last_seq: int = 0):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")
        self.last_seq = last_seq

    def append(self, records: list[dict]) -> None:
        for record in records:
            if record["seq"] != self.last_seq + 1:
                raise SequenceGap(
                    f"event seq {record['seq']} after {self.last_seq}")
            self.last_seq = record["seq"]
        try:
            for record in records:
                self._fh.write(encode_record(record) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc

    def close(self) -> None:
        self._fh.close()


def read_journal(path: str | Path) -> list[dict]:
    """Parse a journal file, skipping at most one torn trailing line."""
    path = Path(path)
    if not path.exists():
        return []
    records: list[dict] = []
    raw_lines = path.read_text(encoding="utf-8").split("\n")
    if raw_lines and raw_lines[-1] == "":
        raw_lines.pop()
    for i, line in enumerate(raw_lines):
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            if i == len(raw_lines) - 1:
                logger.warning("journal %s: skipping torn trailing line", path)
                break
            raise CorruptJournal(f"{path}: malformed record at line {i + 1}") from None
        if not isinstance(record, dict) or not _RECORD_KEYS.issubset(record):
            raise CorruptJournal(f"{path}: record at line {i + 1} missing fields")
        records.append(record)
    _check_dense(records, str(path))
    return records


def _check_dense(records: list[dict], origin: str) -> None:
    for i, record in enumerate(records):
        if record["seq"] != i + 1:
            raise CorruptJournal(f"{origin}: seq {record['seq']} at position {i + 1}")
        if record["kind"] not in EVENT_KINDS:
            raise CorruptJournal(f"{origin}: unknown event kind {record['kind']!r}")


def is_command_record(record: dict) -> bool:
    kind = record["kind"]
    if kind == "OrderCancelled":
        return record["payload"].get("reason") == "user"
    return kind in COMMAND_KINDS


def replay_records(records: list[dict], config: EngineConfig | None = None) -> MarketEngine:
    """Rebuild an engine from journal records, verifying determinism."""
    _check_dense(records, "journal")
    engine = MarketEngine(config)
    i = 0
    while i < len(records):
        record = records[i]
        if not is_command_record(record):
            raise CorruptJournal(
                f"derived event {record['kind']} at seq {record['seq']} "
                "without a preceding command")
        try:
            produced = engine.execute_command(record["kind"], record["payload"], record["ts"])
        except MarketError as exc:
            raise ReplayDivergence(
                f"seq {record['seq']}: journaled command {record['kind']} "
                f"failed on replay: {exc}") from exc
        for event in produced:
            if i >= len(records):
                raise ReplayDivergence(
                    f"journal ends at seq {records[-1]['seq']} but replay of "
                    f"{record['kind']} produced more events")
            if event != records[i]:
                raise ReplayDivergence(
                    f"seq {event['seq']}: journaled record does not match replay "
                    f"({records[i]['kind']} vs {event['kind']})")
            i += 1
    return engine


def replay_journal(path: str | Path, config: EngineConfig | None = None
                   ) -> tuple[MarketEngine, str]:
    """Replay a journal file; returns (engine, state digest)."""
    engine = replay_records(read_journal(path), config)
    return engine, engine.snapshot_digest()
