"""Exact rational enclosures for the irrational quantities the pipelines need.

Every bound this package certifies is decided in integer/rational arithmetic.
Square roots, n-th roots, exp and ln enter only through two-sided rational
enclosures (lo ≤ value ≤ hi), which callers refine until the comparison they
care about is decided.  Enclosures are computed from scratch each call —
nothing here caches or floats.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

Interval = tuple[Fraction, Fraction]


def floor_nth_root(m: int, n: int) -> int:
    """⌊m^{1/n}⌋ for integers m ≥ 0, n ≥ 1 (Newton on integers)."""
    if m < 0 or n < 1:
        raise ValueError("need m ≥ 0 and n ≥ 1")
    if m == 0:
        return 0
    if n == 1:
        return m
    x = 1 << -(-m.bit_length() // n)  # ≥ m^{1/n}
    while True:
        y = ((n - 1) * x + m // x ** (n - 1)) // n
        if y >= x:
            break
        x = y
    # x is now within 1; settle exactly
    while x**n > m:
        x -= 1
    while (x + 1) ** n <= m:
        x += 1
    return x


def nth_root_enclosure(x: Fraction, n: int, scale: int = 10**30) -> Interval:
    """(lo, hi) with lo ≤ x^{1/n} ≤ hi and hi − lo ≤ 1/(q·scale) for x = p/q ≥ 0."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("need x ≥ 0")
    p, q = x.numerator, x.denominator
    u = floor_nth_root(p * q ** (n - 1) * scale**n, n)
    return Fraction(u, q * scale), Fraction(u + 1, q * scale)


def sqrt_enclosure(x: Fraction, scale: int = 10**30) -> Interval:
    return nth_root_enclosure(x, 2, scale)


def exp_enclosure(x: Fraction, terms: int = 24) -> Interval:
    """(lo, hi) with lo ≤ eˣ ≤ hi; `terms` Taylor terms after range reduction."""
    x = Fraction(x)
    if terms < 2:
        raise ValueError("need at least 2 terms")
    if x == 0:
        return Fraction(1), Fraction(1)
    if x < 0:
        lo, hi = exp_enclosure(-x, terms)
        return 1 / hi, 1 / lo
    halvings = 0
    y = x
    while y > Fraction(1, 2):
        y /= 2
        halvings += 1
    # Taylor with explicit geometric tail bound: Σ_{i≥T} yⁱ/i! ≤ (y^T/T!)·1/(1−y/(T+1))
    s = Fraction(0)
    term = Fraction(1)
    for i in range(terms):
        s += term
        term = term * y / (i + 1)
    tail = term / (1 - y / (terms + 1))
    lo, hi = s, s + tail
    for _ in range(halvings):
        lo, hi = lo * lo, hi * hi
    return lo, hi


def _atanh_series(u: Fraction, terms: int) -> Interval:
    """(lo, hi) enclosing 2·atanh(u) = ln((1+u)/(1−u)) for 0 ≤ u < 1."""
    s = Fraction(0)
    upow = u
    usq = u * u
    for j in range(terms):
        s += upow / (2 * j + 1)
        upow *= usq
    tail = Fraction(2) * upow / ((2 * terms + 1) * (1 - usq))
    return 2 * s, 2 * s + tail


def ln_enclosure(x: Fraction, terms: int = 32) -> Interval:
    """(lo, hi) with lo ≤ ln x ≤ hi for rational x > 0."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("need x > 0")
    # one-shot power-of-two reduction to y ∈ [1, 2)
    k = x.numerator.bit_length() - x.denominator.bit_length()
    y = x / Fraction(2) ** k
    while y >= 2:
        y /= 2
        k += 1
    while y < 1:
        y *= 2
        k -= 1
    if y.numerator.bit_length() + y.denominator.bit_length() > 512:
        # huge operand: ln is increasing, so a 96-bit dyadic sandwich of y
        # keeps the series cheap while the enclosure stays valid
        n = (y.numerator << 96) // y.denominator
        y_lo, y_hi = Fraction(n, 1 << 96), Fraction(n + 1, 1 << 96)
        ylo = _atanh_series((y_lo - 1) / (y_lo + 1), terms)[0]
        yhi = _atanh_series((y_hi - 1) / (y_hi + 1), terms)[1]
    else:
        # ln y = 2·atanh((y−1)/(y+1)), u ∈ [0, 1/3]
        ylo, yhi = _atanh_series((y - 1) / (y + 1), terms)
    ln2lo, ln2hi = _atanh_series(Fraction(1, 3), terms)
    klo, khi = (k * ln2lo, k * ln2hi) if k >= 0 else (k * ln2hi, k * ln2lo)
    return klo + ylo, khi + yhi


def ceil_enclosed(fn: Callable[[int], Interval], start: int = 16, max_doublings: int = 40) -> int:
    """⌈v⌉ for v given only through refinable enclosures fn(prec) = (lo, hi).

    Terminates whenever v is not an exact integer (true for the eˣ/ln values
    this package takes ceilings of, which are irrational); a hard doubling cap
    guards the loop regardless.
    """
    prec = start
    for _ in range(max_doublings):
        lo, hi = fn(prec)
        clo, chi = math.ceil(lo), math.ceil(hi)
        if clo == chi:
            return clo
        prec *= 2
    raise ArithmeticError("enclosure failed to pin a ceiling (value may be an exact integer)")


def floor_enclosed(fn: Callable[[int], Interval], start: int = 16, max_doublings: int = 40) -> int:
    """⌊v⌋ via refinable enclosures, same contract as ceil_enclosed."""
    prec = start
    for _ in range(max_doublings):
        lo, hi = fn(prec)
        flo, fhi = math.floor(lo), math.floor(hi)
        if flo == fhi:
            return flo
        prec *= 2
    raise ArithmeticError("enclosure failed to pin a floor (value may be an exact integer)")


def int_pow_le(a: int, e: int, b: int, f: int) -> bool:
    """Decide aᵉ ≤ bᶠ for nonnegative integers, bit-length prefilter first."""
    if min(a, b) < 0 or min(e, f) < 0:
        raise ValueError("need nonnegative arguments")
    av = 1 if e == 0 else (0 if a == 0 else (1 if a == 1 else None))
    bv = 1 if f == 0 else (0 if b == 0 else (1 if b == 1 else None))
    if av is not None and bv is not None:
        return av <= bv
    if av is not None:
        return True  # av ≤ 1 ≤ bᶠ (here b ≥ 2, f ≥ 1)
    if bv is not None:
        return False  # aᵉ ≥ 2 > bv
    # a, b ≥ 2 and e, f ≥ 1; use 2^{bl−1} ≤ n < 2^{bl}
    if e * a.bit_length() <= f * (b.bit_length() - 1):
        return True
    if e * (a.bit_length() - 1) >= f * b.bit_length():
        return False
    return a**e <= b**f
