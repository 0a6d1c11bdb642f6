import json
import subprocess
import sys

import pytest

from conftest import CommandFuzzer
from peermarket.cli import main
from peermarket.engine import MarketEngine
from peermarket.journal import JournalWriter


@pytest.fixture
def fuzz_journal(tmp_path):
    fuzzer = CommandFuzzer(seed=301)
    fuzzer.run(250, check_every=0)
    path = tmp_path / "journal.ndjson"
    writer = JournalWriter(path)
    writer.append(fuzzer.events)
    writer.close()
    return path, fuzzer.engine


def test_replay_empty_journal_prints_fresh_digest(tmp_path, capsys):
    journal = tmp_path / "empty.ndjson"
    journal.write_text("")
    assert main(["replay", "--journal", str(journal)]) == 0
    out = capsys.readouterr().out
    assert MarketEngine().snapshot_digest() in out


def test_replay_fuzz_journal(fuzz_journal, capsys):
    path, engine = fuzz_journal
    assert main(["replay", "--journal", str(path)]) == 0
    assert engine.snapshot_digest() in capsys.readouterr().out


def test_simulate_deterministic_outputs(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_agents": 8, "n_days": 12}))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg), "--seed", "7", "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg), "--seed", "7", "--out", str(out2)]) == 0
    names = sorted(p.name for p in out1.iterdir())
    assert names == sorted(p.name for p in out2.iterdir())
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_report_exports(fuzz_journal, tmp_path):
    path, _ = fuzz_journal
    out = tmp_path / "report"
    assert main(["report", "--journal", str(path), "--out", str(out)]) == 0
    for name in ("contribution_matrix.csv", "leaderboard_ex_ante.csv", "scaling_points.csv"):
        text = (out / name).read_text()
        assert text.splitlines()[0].startswith(("participant_id", "rank"))


def test_grade_roundtrip(fuzz_journal, tmp_path, capsys):
    path, engine = fuzz_journal
    expost = {pid: 12_345 for pid in engine.project_ids()}
    expost_path = tmp_path / "expost.json"
    expost_path.write_text(json.dumps(expost))
    assert main(["grade", "--journal", str(path), "--expost", str(expost_path)]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "rank,participant_id,ex_ante_centi,ex_post_centi,total_contributed_bytes"
    assert len(lines) == 1 + len(engine.participant_ids())


def test_grade_incomplete_expost_names_missing_project(fuzz_journal, tmp_path, capsys):
    path, engine = fuzz_journal
    projects = engine.project_ids()
    assert projects, "fuzz session produced no projects"
    held = set()
    for acct in engine.ledger.accounts.values():
        held.update(p for p, h in acct.holdings.items() if h.free + h.reserved > 0)
    incomplete = {pid: 1_000 for pid in sorted(held)[1:]}
    expost_path = tmp_path / "partial.json"
    expost_path.write_text(json.dumps(incomplete))
    assert main(["grade", "--journal", str(path), "--expost", str(expost_path)]) == 1
    err = capsys.readouterr().err
    assert sorted(held)[0] in err


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc_info:
        main(["replay", "--nope"])
    assert exc_info.value.code == 2


def test_missing_journal_exits_1(tmp_path, capsys):
    # the journal path exists check happens on read; nonexistent file reads
    # as empty, but a directory in its place is an OSError
    bad = tmp_path / "adir"
    bad.mkdir()
    assert main(["replay", "--journal", str(bad)]) == 1
    assert "error:" in capsys.readouterr().err


def test_ingest_revision_feed(tmp_path, capsys):
    engine = MarketEngine()
    journal = tmp_path / "j.ndjson"
    writer = JournalWriter(journal)
    for method, args in [
        (engine.open_account, ("alice",)),
        (engine.open_account, ("bob",)),
        (engine.create_project, ("alice", "Wiki", "")),
    ]:
        _, events = method(*args, ts="2025-09-01T08:00:00+00:00")
        writer.append(events)
    writer.close()

    feed = tmp_path / "feed.ndjson"
    lines = [
        {"revision_id": "ext-1", "project_id": "P0001", "participant_id": "bob",
         "ts": "2025-09-02T09:00:00+00:00", "after_text": "b" * 54 + "\n"},
        {"revision_id": "ext-2", "project_id": "P0001", "participant_id": "alice",
         "ts": "2025-09-02T10:00:00+00:00", "after_text": "b" * 54 + "\n" + "a" * 109 + "\n"},
    ]
    feed.write_text("\n".join(json.dumps(x) for x in lines) + "\n")
    assert main(["ingest", "--journal", str(journal), "--revisions", str(feed)]) == 0
    out = capsys.readouterr().out
    assert "imported 2 revisions" in out
    # the journal now replays to a state containing the imported work
    from peermarket.journal import replay_journal
    engine2, _ = replay_journal(journal)
    assert engine2.project("P0001").total_contributed_bytes == 55 + 110
    assert engine2.contribution_bytes[("bob", "P0001")] == 55
    engine2.check_invariants()
    # importing a feed for an unknown project fails cleanly
    feed.write_text(json.dumps({"revision_id": "x", "project_id": "P9999",
                                "participant_id": "bob", "ts": "t",
                                "after_text": ""}) + "\n")
    assert main(["ingest", "--journal", str(journal), "--revisions", str(feed)]) == 1


def test_console_entrypoint_subprocess(fuzz_journal):
    path, _ = fuzz_journal
    proc = subprocess.run([sys.executable, "-m", "peermarket.cli", "replay",
                           "--journal", str(path)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "digest:" in proc.stdout


def test_serve_smoke_real_server(tmp_path):
    """Boot the real HTTP server, hit it, stream one event, shut down."""
    import threading
    import time
    import urllib.request

    import uvicorn

    from peermarket.service import build_state, create_app, load_roster

    roster_path = tmp_path / "roster.json"
    roster_path.write_text(json.dumps({"tokens": {
        "tok-prof": {"participant_id": "prof", "role": "instructor"}}}))
    state = build_state(tmp_path / "j.ndjson")
    app = create_app(state, load_roster(roster_path))
    config = uvicorn.Config(app, host="127.0.0.1", port=8765, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    for _ in range(100):
        if server.started:
            break
        time.sleep(0.05)
    assert server.started
    try:
        req = urllib.request.Request("http://127.0.0.1:8765/projects",
                                     headers={"Authorization": "Bearer tok-prof"})
        with urllib.request.urlopen(req, timeout=5) as resp:
            assert json.loads(resp.read()) == []
        body = json.dumps({"participant_id": "prof"}).encode()
        req = urllib.request.Request("http://127.0.0.1:8765/participants", data=body,
                                     headers={"Authorization": "Bearer tok-prof",
                                              "Content-Type": "application/json"})
        with urllib.request.urlopen(req, timeout=5) as resp:
            assert json.loads(resp.read())["cash_centi"] == 1_000_000
        # unbounded SSE stream: read the first record then drop the connection
        req = urllib.request.Request("http://127.0.0.1:8765/events?since_seq=0",
                                     headers={"Authorization": "Bearer tok-prof"})
        with urllib.request.urlopen(req, timeout=5) as resp:
            line = resp.readline().decode()
            assert line.startswith("id: 1")
    finally:
        server.should_exit = True
        thread.join(timeout=10)
    assert not thread.is_alive()
