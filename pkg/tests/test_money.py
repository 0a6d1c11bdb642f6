from fractions import Fraction

from peermarket.money import fmt_er, fmt_shares, notional_centi, round_half_up


def test_round_half_up_boundaries():
    assert round_half_up(Fraction(1, 2)) == 1
    assert round_half_up(Fraction(499, 1000)) == 0
    assert round_half_up(Fraction(3, 2)) == 2
    assert round_half_up(Fraction(7)) == 7
    assert round_half_up(5) == 5


def test_notional_whole_share():
    # 1.000000 share at ER$ 100.00 -> ER$ 100.00
    assert notional_centi(10_000, 1_000_000) == 10_000


def test_notional_fractional_rounds_half_up():
    # 0.5 share at 1 centi -> 0.5 centi -> 1
    assert notional_centi(1, 500_000) == 1
    # 0.4999.. stays below half a centi
    assert notional_centi(1, 499_999) == 0


def test_formatting():
    assert fmt_er(1_000_000) == "ER$ 10'000.00"
    assert fmt_er(1_050_000) == "ER$ 10'500.00"
    assert fmt_er(7) == "ER$ 0.07"
    assert fmt_er(-250) == "-ER$ 2.50"
    assert fmt_shares(5_000_000) == "5.000000"
    assert fmt_shares(500_000) == "0.500000"
