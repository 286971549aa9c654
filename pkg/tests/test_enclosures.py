"""Rational enclosures: containment is checked exactly, never by float proxy."""

import math
import random
from fractions import Fraction

import pytest

from aplab.enclosures import (
    ceil_enclosed,
    exp_enclosure,
    floor_enclosed,
    floor_nth_root,
    int_pow_le,
    ln_enclosure,
    nth_root_enclosure,
    sqrt_enclosure,
)


def test_floor_nth_root_small():
    assert floor_nth_root(0, 3) == 0
    assert floor_nth_root(26, 3) == 2
    assert floor_nth_root(27, 3) == 3
    assert floor_nth_root(28, 3) == 3
    assert floor_nth_root(10**18, 2) == 10**9


def test_floor_nth_root_random_exact():
    rng = random.Random(1)
    for _ in range(200):
        n = rng.randint(1, 7)
        m = rng.randint(0, 10**24)
        r = floor_nth_root(m, n)
        assert r**n <= m < (r + 1) ** n


def test_sqrt_enclosure_contains_exactly():
    for x in [Fraction(2), Fraction(1, 3), Fraction(99, 7), Fraction(10**12, 13)]:
        lo, hi = sqrt_enclosure(x)
        assert lo * lo <= x <= hi * hi
        assert 0 < hi - lo <= Fraction(1, 10**30)


def test_nth_root_enclosure_contains_exactly():
    for n in (2, 3, 5):
        for x in [Fraction(2), Fraction(7, 3), Fraction(1, 1000)]:
            lo, hi = nth_root_enclosure(x, n)
            assert lo**n <= x <= hi**n


def test_exp_enclosure_orders_and_tightens():
    for x in [Fraction(0), Fraction(1), Fraction(-2), Fraction(7, 2), Fraction(-31, 10)]:
        lo, hi = exp_enclosure(x)
        assert 0 < lo <= hi
        assert lo <= Fraction(math.exp(float(x))) * Fraction(10001, 10000)
        assert hi >= Fraction(math.exp(float(x))) * Fraction(9999, 10000)
    lo1, hi1 = exp_enclosure(Fraction(1), terms=6)
    lo2, hi2 = exp_enclosure(Fraction(1), terms=30)
    assert lo1 <= lo2 <= hi2 <= hi1


def test_exp_functional_equation_bracket():
    # e^{a+b} must land inside the product of enclosures
    a, b = Fraction(3, 7), Fraction(-5, 3)
    la, ha = exp_enclosure(a)
    lb, hb = exp_enclosure(b)
    ls, hs = exp_enclosure(a + b)
    assert la * lb <= hs and ls <= ha * hb


def test_ln_enclosure_exact_containment_via_exp():
    for x in [Fraction(2), Fraction(1, 2), Fraction(10), Fraction(3, 7), Fraction(1000000)]:
        llo, lhi = ln_enclosure(x)
        assert llo <= lhi
        # exp is increasing: exp(llo) ≤ x ≤ exp(lhi), checked through enclosures
        assert exp_enclosure(llo)[0] <= x <= exp_enclosure(lhi)[1]
    assert ln_enclosure(Fraction(1)) [0] <= 0 <= ln_enclosure(Fraction(1))[1]
    with pytest.raises(ValueError):
        ln_enclosure(Fraction(0))


def test_ceil_floor_enclosed():
    # ⌈π-ish⌉ through a refinable enclosure: v = ln(8/ε)·K²/2 with K=2, ε=1/2
    def fn(prec):
        lo, hi = ln_enclosure(Fraction(16), terms=prec)
        return 2 * lo, 2 * hi

    v = 2 * math.log(16)
    assert ceil_enclosed(fn) == math.ceil(v)
    assert floor_enclosed(fn) == math.floor(v)


def test_int_pow_le_matches_brute():
    rng = random.Random(9)
    for _ in range(300):
        a, b = rng.randint(0, 40), rng.randint(0, 40)
        e, f = rng.randint(0, 12), rng.randint(0, 12)
        assert int_pow_le(a, e, b, f) == (a**e <= b**f)


def test_int_pow_le_prefilter_scale():
    # enormous exponents where the bit-length filter must decide
    assert int_pow_le(2, 10**6, 3, 10**6)
    assert not int_pow_le(3, 10**6, 2, 10**6)
