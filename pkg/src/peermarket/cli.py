"""Command-line entry point: serve, simulate, replay, report, grade."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import scoring, simharness
from .errors import InvalidConfig, JournalError, MarketError, MissingValuation
from .journal import replay_journal
from .money import fmt_er


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peermarket",
        description="Knowledge-production market: engine service, simulator and analytics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--journal", required=True, help="append-only journal file")
    p_serve.add_argument("--roster", required=True, help="JSON roster of bearer tokens")
    p_serve.add_argument("--endowment-centi", type=int, default=1_000_000,
                         help="starting cash for newly opened accounts")
    p_serve.add_argument("--host", default="127.0.0.1")

    p_sim = sub.add_parser("simulate", help="run an agent-based semester")
    p_sim.add_argument("--config", help="JSON file with simulation parameters")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="directory for report files")

    p_replay = sub.add_parser("replay", help="rebuild state from a journal and print its digest")
    p_replay.add_argument("--journal", required=True)

    p_report = sub.add_parser("report", help="export analytics CSVs from a journal")
    p_report.add_argument("--journal", required=True)
    p_report.add_argument("--out", required=True)

    p_grade = sub.add_parser("grade", help="ex-post leaderboard CSV from a journal + valuations")
    p_grade.add_argument("--journal", required=True)
    p_grade.add_argument("--expost", required=True,
                         help="JSON file mapping project_id to value_centi")
    p_grade.add_argument("--out", help="write CSV here instead of stdout")

    p_ingest = sub.add_parser(
        "ingest",
        help="batch-import a revision feed (line-delimited JSON: "
             "{revision_id, project_id, participant_id, ts, after_text}) "
             "into a journal whose accounts and projects already exist")
    p_ingest.add_argument("--journal", required=True)
    p_ingest.add_argument("--revisions", required=True, help="revision feed file")
    return parser


def _cmd_serve(args) -> int:
    from .service import serve
    serve(port=args.port, journal_path=args.journal, roster_path=args.roster,
          endowment_centi=args.endowment_centi, host=args.host)
    return 0


def _cmd_simulate(args) -> int:
    config = simharness.load_config(args.config) if args.config else simharness.SimConfig()
    report = simharness.run_semester(config, args.seed)
    files = simharness.emit_report(report, args.out)
    print(f"simulated {config.n_days} days, {config.n_agents} agents, seed {args.seed}")
    print(f"projects: {report.n_projects}  trades: {report.n_trades}")
    slope = "n/a" if report.slope is None else f"{report.slope:.4f}"
    corr = ("undefined" if report.price_value_spearman is None
            else f"{report.price_value_spearman:.4f}")
    print(f"scaling slope: {slope}  price/value rank corr: {corr}")
    print(f"journal digest: {report.journal_digest}")
    for path in files:
        print(f"wrote {path}")
    return 0


def _cmd_replay(args) -> int:
    engine, digest = replay_journal(args.journal)
    print(f"events: {engine.last_event_seq}")
    print(f"participants: {len(engine.participant_ids())}  "
          f"projects: {len(engine.project_ids())}  trades: {len(engine.trades)}")
    total = engine.ledger.total_cash_centi()
    print(f"total cash: {fmt_er(total)}")
    print(f"digest: {digest}")
    return 0


def _cmd_report(args) -> int:
    engine, _ = replay_journal(args.journal)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, cols, matrix = scoring.contribution_matrix(engine)
    (out / "contribution_matrix.csv").write_text(
        scoring.matrix_csv(rows, cols, matrix), encoding="utf-8")
    board = scoring.leaderboard(engine, "ex_ante")
    (out / "leaderboard_ex_ante.csv").write_text(
        scoring.leaderboard_csv(board), encoding="utf-8")
    (out / "scaling_points.csv").write_text(
        scoring.scaling_points_csv(board), encoding="utf-8")
    for name in ("contribution_matrix.csv", "leaderboard_ex_ante.csv", "scaling_points.csv"):
        print(f"wrote {out / name}")
    return 0


def _cmd_grade(args) -> int:
    engine, _ = replay_journal(args.journal)
    with open(args.expost, encoding="utf-8") as fh:
        valuation = {pid: int(v) for pid, v in json.load(fh).items()}
    board = scoring.leaderboard(engine, "ex_post", valuation=valuation)
    text = scoring.leaderboard_csv(board)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_ingest(args) -> int:
    from .journal import JournalWriter

    engine, _ = replay_journal(args.journal)
    writer = JournalWriter(args.journal, last_seq=engine.last_event_seq)
    imported = total_bytes = total_issued = 0
    try:
        with open(args.revisions, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                (counted, issued), events = engine.ingest_revision(
                    record["project_id"], record["participant_id"],
                    record["after_text"], ts=record["ts"],
                    revision_id=record["revision_id"])
                writer.append(events)
                imported += 1
                total_bytes += counted
                total_issued += issued
    finally:
        writer.close()
    print(f"imported {imported} revisions: {total_bytes} bytes counted, "
          f"{total_issued} micro-shares issued")
    print(f"digest: {engine.snapshot_digest()}")
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "simulate": _cmd_simulate,
    "replay": _cmd_replay,
    "report": _cmd_report,
    "grade": _cmd_grade,
    "ingest": _cmd_ingest,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MissingValuation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MarketError, JournalError, InvalidConfig, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
