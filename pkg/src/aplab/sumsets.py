"""Long arithmetic progressions inside sumsets A+B.

Both entry points share one skeleton: run the translate-rich structure pipeline
to get T, extract a long symmetric progression from T by collision counting,
drop an endpoint, and scan for the translate that the counting argument
guarantees lands inside A+B.  Every returned progression is re-verified
element by element against the actual sumset.

At small N the exact parameter gate typically selects k = 0 and the result
degenerates to a single element; `k_override` forces a deeper run where the
instance can support it.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .enclosures import ln_enclosure
from .groups import (
    GroupError,
    GSet,
    Group,
    interval,
    product_set,
    window_group,
)
from .periods import SearchConfig
from .progressions import (
    Progression,
    VerificationError,
    find_ap_in_iterated_difference,
)
from .structure import TranslateNotFoundError, ab_struct_pipeline, find_left_translate


def _pow_le(a: Fraction, e: int, b: Fraction, f: int) -> bool:
    """Exact a^e ≤ b^f for rationals a, b ≥ 1.

    The sides are usually thousands of digits apart, so cheap sandwiches come
    first — powers of two from bit lengths, then log enclosures — and the exact
    integer-power comparison only runs when they genuinely touch.
    """
    a, b = Fraction(a), Fraction(b)
    la_lo = a.numerator.bit_length() - 1 - a.denominator.bit_length()
    la_hi = a.numerator.bit_length() - (a.denominator.bit_length() - 1)
    lb_lo = b.numerator.bit_length() - 1 - b.denominator.bit_length()
    lb_hi = b.numerator.bit_length() - (b.denominator.bit_length() - 1)
    if e * la_hi <= f * lb_lo:
        return True
    if e * la_lo > f * lb_hi:
        return False
    for terms in (24, 96):
        a_lo, a_hi = ln_enclosure(a, terms)
        b_lo, b_hi = ln_enclosure(b, terms)
        if e * a_hi <= f * b_lo:
            return True
        if e * a_lo > f * b_hi:
            return False
    return a.numerator**e * b.denominator**f <= b.numerator**f * a.denominator**e


def choose_sumset_k(N: int, size_A: int, size_B: int) -> int:
    """Largest k ≥ 0 with (10k)⁴·log(4/β) ≤ α·log N, α = |A|/N, β = |B|/N,
    decided exactly: (4/β)^{(10k)⁴} ≤ N^α ⟺ (4/β)^{(10k)⁴·q_a} ≤ N^{p_a}."""
    if not 1 <= size_A <= N or not 1 <= size_B <= N:
        raise ValueError("need 1 ≤ |A|, |B| ≤ N")
    alpha = Fraction(size_A, N)
    four_over_beta = Fraction(4 * N, size_B)

    def holds(k: int) -> bool:
        e = (10 * k) ** 4 * alpha.denominator
        return _pow_le(four_over_beta, e, Fraction(N), alpha.numerator)

    if not holds(1):
        return 0
    k = 1
    while holds(k + 1):
        k += 1
    return k


def choose_small_sumset_k(size_A: int, K1: Fraction, K2: Fraction) -> int:
    """Largest k ≥ 0 with (10k)⁴·K₁·log(2K₂) ≤ log|A|, decided exactly:
    (2K₂)^{(10k)⁴·p₁} ≤ |A|^{q₁} with K₁ = p₁/q₁."""
    if size_A < 1:
        raise ValueError("need |A| ≥ 1")
    K1 = Fraction(K1)

    def holds(k: int) -> bool:
        e = (10 * k) ** 4 * K1.numerator
        return _pow_le(2 * Fraction(K2), e, Fraction(size_A), K1.denominator)

    if size_A == 1 or not holds(1):
        return 0
    k = 1
    while holds(k + 1):
        k += 1
    return k


def _as_window_sets(A: GSet, B: GSet, N: int) -> tuple[GSet, GSet, GSet, Group]:
    """Normalise A, B ⊆ [1..N] into a window wide enough for the whole run."""
    if A.group.kind != "window" or B.group.kind != "window":
        raise GroupError("this pipeline works on integer windows")
    g = window_group(2 * N)
    box = interval(g, 1, N)
    A2 = GSet(g, A.elements)
    B2 = GSet(g, B.elements)
    if not (A2.subset_of(box) and B2.subset_of(box)):
        raise ValueError("need A, B ⊆ [1..N]")
    return A2, B2, box, g


def _trivial_progression(AB: GSet) -> Progression:
    g = AB.group
    return Progression(g, min(AB.elements), g.identity(), 1)


def _normalised(g: Group, base, step, length: int) -> Progression:
    """Same element set, step made positive (windows) for a canonical payload."""
    if g.kind == "window" and length > 1 and step[0] < 0:
        base = (base[0] + (length - 1) * step[0],)
        step = (-step[0],)
    return Progression(g, tuple(base), tuple(step), length)


def _verified_in(prog: Progression, AB: GSet) -> Progression:
    for e in prog.elements():
        if e not in AB:
            raise VerificationError(f"{e} ∉ A·B")
    return prog


def ap_in_sumset(
    A: GSet,
    B: GSet,
    N: int,
    cfg: SearchConfig = SearchConfig(),
    k_override: int | None = None,
    subset_samples: int = 12,
) -> Progression:
    """A progression of length 2^{k+1} inside A+B for A, B ⊆ [1..N], where k is
    the exact-gate value of ⌊(α·log N / log(4/β))^{1/4}/10⌋ (or `k_override`).

    k = 0 yields the degenerate single-element progression.  For k ≥ 1 the
    translate-rich pipeline runs with the always-valid constants K₁ = K₂ = 2/α,
    K₃ = 2/β, the collision argument turns T into a symmetric progression of
    2^{k+1}+1 terms, one endpoint is dropped, and a translate landing inside
    A+B is located by a complete scan.  The result lives in a ±2N window.
    """
    A, B, S, g = _as_window_sets(A, B, N)
    AB = product_set(A, B)
    k = choose_sumset_k(N, len(A), len(B)) if k_override is None else k_override
    if k < 0:
        raise ValueError("k must be ≥ 0")
    if k == 0:
        return _trivial_progression(AB)

    alpha = Fraction(len(A), N)
    beta = Fraction(len(B), N)
    n = 2 ** (k + 1)
    T, _report = ab_struct_pipeline(
        A,
        B,
        S,
        k=k,
        n=n,
        cfg=cfg,
        K1=2 / alpha,
        K2=2 / alpha,
        K3=2 / beta,
        subset_samples=subset_samples,
    )
    T_home = GSet(g, [tuple(t) for t in T])
    Q = find_ap_in_iterated_difference(T_home, S, k)
    P = Progression(Q.group, Q.base, Q.step, n)  # drop the top endpoint
    x = find_left_translate(AB, P.elements())
    if x is None:
        raise TranslateNotFoundError(
            f"no translate of the {n}-term progression fits in A+B", tuple(P.elements())
        )
    final = _normalised(g, (x[0] + P.base[0],), P.step, n)
    return _verified_in(final, AB)


def ap_in_small_sumset(
    A: GSet,
    B: GSet,
    cfg: SearchConfig = SearchConfig(),
    k_override: int | None = None,
    subset_samples: int = 12,
) -> Progression:
    """A progression of length 2^{k+1} inside A+B controlled only by the exact
    ratios K₁ = |A+B|/|A| and K₂ = |A+B|/|B| (any abelian group).

    The ambient search set is A itself, so the collision step runs inside A;
    the doubling control |A+A| ≤ K₁K₂²|A| is re-checked exactly first.
    """
    if not A.group.abelian:
        raise GroupError("needs an abelian group")
    if min(len(A), len(B)) < 1:
        raise ValueError("A and B must be nonempty")
    AB = product_set(A, B)
    K1 = Fraction(len(AB), len(A))
    K2 = Fraction(len(AB), len(B))
    k = choose_small_sumset_k(len(A), K1, K2) if k_override is None else k_override
    if k < 0:
        raise ValueError("k must be ≥ 0")
    if k == 0:
        return _trivial_progression(AB)

    doubled = len(product_set(A, A))
    if doubled > K1 * K2**2 * len(A):
        raise VerificationError(f"|A+A| = {doubled} exceeds K₁K₂²|A| = {K1 * K2**2 * len(A)}")
    n = 2 ** (k + 1)
    T, _report = ab_struct_pipeline(
        A, B, A, k=k, n=n, cfg=cfg, K1=K1, K2=K2, K3=K2, subset_samples=subset_samples
    )
    T_home = GSet(A.group, [tuple(t) for t in T])
    Q = find_ap_in_iterated_difference(T_home, A, k)
    g = Q.group  # a wider window when the collision step had to re-embed
    if g == A.group:
        AB_wide = AB
    else:
        AB_wide = product_set(GSet(g, A.elements), GSet(g, B.elements))
    P = Progression(g, Q.base, Q.step, n)
    x = find_left_translate(AB_wide, P.elements())
    if x is None:
        raise TranslateNotFoundError(
            f"no translate of the {n}-term progression fits in A+B", tuple(P.elements())
        )
    final = _verified_in(_normalised(g, g.mul(x, P.base), P.step, n), AB_wide)
    if g != A.group:
        try:  # fold back into the caller's group when everything fits
            final = _verified_in(_normalised(A.group, final.base, final.step, n), AB)
        except GroupError:
            pass
    return final


def longest_ap_oracle(X: GSet) -> Progression:
    """The longest progression inside X by exhaustive walk, canonical on ties
    (longest, then smallest positive step, then smallest base).

    Independent yardstick for the pipelines above; refuses |X| > 10⁴.
    """
    if len(X) == 0:
        raise ValueError("X must be nonempty")
    if len(X) > 10_000:
        raise ValueError("oracle capped at |X| ≤ 10000")
    if not X.group.abelian:
        raise GroupError("needs an abelian group")
    g = X.group
    if g.kind == "window":
        vals = sorted(e[0] for e in X)
        vset = set(vals)
        span = vals[-1] - vals[0]
        best_len, best_step, best_base = 1, 0, vals[0]
        d = 1
        while d * best_len <= span:  # a longer progression must fit in the span
            for a in vals:
                if a - d in vset:
                    continue  # not a chain start
                length, cur = 1, a + d
                while cur in vset:
                    length += 1
                    cur += d
                if length > best_len:
                    best_len, best_step, best_base = length, d, a
            d += 1
        step = (best_step,) if best_len > 1 else g.identity()
        return Progression(g, (best_base,), step, best_len)
    if g.kind == "cyclic":
        n = g.params[0]
        vset = {e[0] for e in X}
        vals = sorted(vset)
        best_len, best_step, best_base = 1, 0, vals[0]
        for d in range(1, n):
            ord_d = n // math.gcd(n, d)
            visited: set[int] = set()
            for a in vals:
                if a in visited:
                    continue
                start, steps_back = a, 0  # walk back to the chain start
                while (start - d) % n in vset and steps_back < ord_d:
                    start = (start - d) % n
                    steps_back += 1
                if steps_back == ord_d:  # the whole ⟨d⟩-cycle through a is in X
                    cycle = sorted((a + i * d) % n for i in range(ord_d))
                    visited.update(cycle)
                    if ord_d > best_len:
                        best_len, best_step, best_base = ord_d, d, cycle[0]
                    continue
                length, cur, chain = 1, (start + d) % n, [start]
                while cur in vset:
                    chain.append(cur)
                    length += 1
                    cur = (cur + d) % n
                visited.update(chain)
                if length > best_len:
                    best_len, best_step, best_base = length, d, start
        step = (best_step,) if best_len > 1 else g.identity()
        return Progression(g, (best_base,), step, best_len)
    raise GroupError(f"oracle supports windows and cyclic groups, not {g.kind}")
