import random
from fractions import Fraction
from functools import lru_cache

import pytest

from peermarket.contributions import (
    accrue_and_issue,
    count_contributed_bytes,
    issuance_value_centi,
    shares_pre_quantization,
)
from peermarket.engine import MarketEngine
from peermarket.errors import DuplicateTitle, StaleRevision, UnknownProject

BLOCK_BYTES = 55
BLOCK_VALUE = 10_000  # centi


# ----------------------------------------------------------------------
# diff: brute-force oracle over all maximum common subsequences

def oracle_inserted_bytes(before: list[str], after: list[str]) -> set[int]:
    """All achievable inserted-byte counts over maximum-length LCS matchings."""

    @lru_cache(maxsize=None)
    def lcs_len(i: int, j: int) -> int:
        if i == len(before) or j == len(after):
            return 0
        best = max(lcs_len(i + 1, j), lcs_len(i, j + 1))
        if before[i] == after[j]:
            best = max(best, 1 + lcs_len(i + 1, j + 1))
        return best

    total = lcs_len(0, 0)

    results: set[int] = set()

    def walk(i: int, j: int, matched_bytes: int, length: int):
        if length + lcs_len(i, j) < total:
            return
        if i == len(before) or j == len(after):
            if length == total:
                results.add(matched_bytes)
            return
        if before[i] == after[j] and 1 + lcs_len(i + 1, j + 1) + length == total:
            walk(i + 1, j + 1, matched_bytes + len(after[j].encode()), length + 1)
        if lcs_len(i + 1, j) + length == total:
            walk(i + 1, j, matched_bytes, length)
        if lcs_len(i, j + 1) + length == total:
            walk(i, j + 1, matched_bytes, length)

    walk(0, 0, 0, 0)
    total_after = sum(len(x.encode()) for x in after)
    return {total_after - m for m in results}


def test_identity_is_zero():
    for text in ["", "a\n", "a\nb\nc\n", "no newline"]:
        assert count_contributed_bytes(text, text) == 0


def test_empty_before_counts_everything():
    text = "x" * 54 + "\n"
    assert len(text.encode()) == 55
    assert count_contributed_bytes("", text) == 55


def test_replaced_line_counts_new_line_only():
    line40 = "a" * 39 + "\n"
    line60 = "b" * 59 + "\n"
    context = ["ctx1\n", "ctx2\n", "ctx3\n"]
    before = "".join(context[:2]) + line40 + context[2]
    after = "".join(context[:2]) + line60 + context[2]
    assert count_contributed_bytes(before, after) == 60
    # brute-force oracle agrees (singleton here)
    assert oracle_inserted_bytes(before.splitlines(keepends=True),
                                 after.splitlines(keepends=True)) == {60}


def test_deletion_earns_nothing():
    before = "a\nb\nc\n"
    after = "a\nc\n"
    assert count_contributed_bytes(before, after) == 0


def test_swap_uses_leftmost_match():
    # LCS of [x, y] vs [y, x] is length 1 and ambiguous; the leftmost walk
    # advances the before side first, matching "y" and counting "x" inserted.
    before = "xxxx\n" + "yy\n"
    after = "yy\n" + "xxxx\n"
    assert count_contributed_bytes(before, after) == 5
    assert count_contributed_bytes(before, after) in oracle_inserted_bytes(
        before.splitlines(keepends=True), after.splitlines(keepends=True))


def test_append_only_counts_byte_delta():
    rng = random.Random(3)
    body = ""
    for _ in range(20):
        extra = "".join(
            "".join(rng.choice("ab") for _ in range(rng.randrange(1, 5))) + "\n"
            for _ in range(rng.randrange(1, 4)))
        after = body + extra
        assert count_contributed_bytes(body, after) == len(extra.encode())
        body = after


def test_random_small_texts_match_oracle():
    rng = random.Random(11)
    alphabet = ["a\n", "bb\n", "ccc\n", "dddd\n"]
    for _ in range(300):
        before = [rng.choice(alphabet) for _ in range(rng.randrange(0, 7))]
        after = [rng.choice(alphabet) for _ in range(rng.randrange(0, 7))]
        got = count_contributed_bytes("".join(before), "".join(after))
        allowed = oracle_inserted_bytes(before, after)
        assert got in allowed, (before, after, got, allowed)
        assert got >= 0


def test_multibyte_text_counts_utf8_bytes():
    before = ""
    after = "héllo\n"  # 7 bytes in UTF-8
    assert count_contributed_bytes(before, after) == len(after.encode("utf-8"))


# ----------------------------------------------------------------------
# issuance arithmetic

def test_issuance_value_examples():
    assert issuance_value_centi(55, BLOCK_BYTES, BLOCK_VALUE) == Fraction(10_000)
    assert issuance_value_centi(0, BLOCK_BYTES, BLOCK_VALUE) == 0
    # 11 bytes -> ER$ 20 exactly
    assert issuance_value_centi(11, BLOCK_BYTES, BLOCK_VALUE) == Fraction(2_000)


def test_issue_at_paper_prices():
    for price, expected in [(10_000, 1_000_000), (20_000, 500_000), (5_000, 2_000_000)]:
        issued, owed = accrue_and_issue(Fraction(0), 55, price, BLOCK_BYTES, BLOCK_VALUE)
        assert issued == expected
        assert owed == 0


def test_accumulator_no_value_lost_over_many_small_edits():
    owed = Fraction(0)
    total = 0
    for _ in range(55):
        issued, owed = accrue_and_issue(owed, 1, 10_000, BLOCK_BYTES, BLOCK_VALUE)
        total += issued
    assert total == 1_000_000
    assert owed == 0


def test_accumulator_bounded_by_one_micro_share():
    rng = random.Random(5)
    owed = Fraction(0)
    exact = Fraction(0)
    issued_total = 0
    price = 7_777
    for _ in range(200):
        b = rng.randrange(0, 500)
        exact += issuance_value_centi(b, BLOCK_BYTES, BLOCK_VALUE)
        issued, owed = accrue_and_issue(owed, b, price, BLOCK_BYTES, BLOCK_VALUE)
        issued_total += issued
        per_micro = Fraction(price, 1_000_000)
        assert 0 <= owed < per_micro
        # cumulative issuance within one micro-share of the exact total
        assert abs(issued_total - exact / per_micro) < 1


def test_pre_quantization_exact_inverse_proportionality():
    rng = random.Random(9)
    for _ in range(1_000):
        b = rng.randrange(1, 10_000)
        p1 = rng.randrange(1, 50_000)
        p2 = rng.randrange(p1 + 1, 60_000)
        s1 = shares_pre_quantization(b, p1, BLOCK_BYTES, BLOCK_VALUE)
        s2 = shares_pre_quantization(b, p2, BLOCK_BYTES, BLOCK_VALUE)
        assert s1 * p1 == s2 * p2  # exact rational identity
        assert s1 >= s2
        # quantized issuance monotone non-increasing in price
        i1, _ = accrue_and_issue(Fraction(0), b, p1, BLOCK_BYTES, BLOCK_VALUE)
        i2, _ = accrue_and_issue(Fraction(0), b, p2, BLOCK_BYTES, BLOCK_VALUE)
        assert i1 >= i2


def test_single_call_linearity_error_below_one_micro():
    rng = random.Random(13)
    for _ in range(500):
        b = rng.randrange(0, 5_000)
        p = rng.randrange(1, 40_000)
        issued, _ = accrue_and_issue(Fraction(0), b, p, BLOCK_BYTES, BLOCK_VALUE)
        exact = shares_pre_quantization(b, p, BLOCK_BYTES, BLOCK_VALUE) * 1_000_000
        assert abs(issued - exact) < 1


# ----------------------------------------------------------------------
# engine-level project/revision behaviour

def test_create_project_founder_grant(engine: MarketEngine):
    engine.open_account("alice", ts="t1")
    project, events = engine.create_project("alice", "Project X", "", ts="t2")
    acct = engine.ledger.account("alice")
    assert acct.holdings[project.project_id].free == 5_000_000
    assert project.shares_outstanding == 5_000_000
    assert project.last_trade_price_centi == 10_000
    # implied founding price: ER$500 grant / 5 shares = ER$100
    assert 5 * project.last_trade_price_centi == 50_000
    kinds = [e["kind"] for e in events]
    assert kinds == ["ProjectCreated", "SharesIssued"]


def test_duplicate_title_rejected(engine: MarketEngine):
    engine.open_account("alice", ts="t")
    engine.create_project("alice", "Same", "", ts="t")
    with pytest.raises(DuplicateTitle):
        engine.create_project("alice", "Same", "", ts="t")


def test_initial_text_earns_no_issuance(engine: MarketEngine):
    engine.open_account("alice", ts="t")
    project, _ = engine.create_project("alice", "Seeded", "x" * 54 + "\n", ts="t")
    assert project.shares_outstanding == 5_000_000
    assert project.total_contributed_bytes == 0


def test_revision_issues_at_last_price(funded_engine: MarketEngine):
    engine = funded_engine
    (counted, issued), _ = engine.ingest_revision(
        "P0001", "bob", "y" * 109 + "\n", ts="t4")
    assert counted == 110
    assert issued == 2_000_000  # 110 bytes at ER$100 -> 2 shares
    engine.check_invariants()


def test_pure_deletion_revision(funded_engine: MarketEngine):
    engine = funded_engine
    engine.ingest_revision("P0001", "bob", "a\nb\n", ts="t4")
    (counted, issued), _ = engine.ingest_revision("P0001", "bob", "a\n", ts="t5")
    assert (counted, issued) == (0, 0)


def test_revision_unknown_project(funded_engine: MarketEngine):
    with pytest.raises(UnknownProject):
        funded_engine.ingest_revision("P9999", "bob", "x\n", ts="t")


def test_stale_revision_detected(funded_engine: MarketEngine):
    engine = funded_engine
    engine.ingest_revision("P0001", "bob", "a\n", ts="t")
    with pytest.raises(StaleRevision):
        engine.ingest_revision("P0001", "bob", "b\n", ts="t", before_text="stale\n")


def test_issuance_never_changes_cash(funded_engine: MarketEngine):
    engine = funded_engine
    before = engine.ledger.total_cash_centi()
    for i in range(10):
        body = engine.project("P0001").body
        engine.ingest_revision("P0001", "bob", body + f"line {i}\n", ts="t")
    assert engine.ledger.total_cash_centi() == before
