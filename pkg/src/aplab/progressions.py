"""Arithmetic progressions out of unstructured sets, by collision counting.

The central move: stream (k+1)-tuples (a, x₁, …, x_k) over a set A and hash the
image (x₁−2a, …, x_k−2^k a).  A collision between tuples with distinct first
coordinates yields a step d = a−b such that the whole symmetric progression
[−2^k..2^k]·d lands inside kA−kA — and the landing is re-verified element by
element with exact set arithmetic before anything is returned.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .convtable import convolve_sets, translation_defect
from .groups import (
    Element,
    GroupError,
    GSet,
    Group,
    inverse_set,
    interval,
    iterated_product,
    product_set,
    with_window_bound,
    window_group,
)
from .periods import PeriodCertificate, SearchConfig, find_almost_periods


class ProgressionError(Exception):
    """Base class for progression-generation failures."""


class DensityTooLowError(ProgressionError):
    """The pigeonhole precondition |A|^{k+1} > K^{3k(k+1)/2}|S|^k fails."""


class NoCollisionError(ProgressionError):
    """No collision found although the precondition held — a defect, not bad luck."""


class VerificationError(ProgressionError):
    """An exact re-check of a claimed containment failed — a defect."""


@dataclass(frozen=True)
class Progression:
    """base, base+step, …, base+(length−1)·step in an abelian group."""

    group: Group
    base: Element
    step: Element
    length: int
    symmetric_through_zero: bool = False

    def __post_init__(self) -> None:
        if not self.group.abelian:
            raise GroupError("progressions need an abelian group")
        self.group.check(self.base)
        self.group.check(self.step)
        if self.length < 1:
            raise ValueError("length must be ≥ 1")
        if self.step == self.group.identity() and self.length > 1:
            raise ValueError("step must be nonzero for length > 1")
        elems = self.elements()
        if len(set(elems)) != self.length:
            raise ValueError("progression elements are not pairwise distinct")
        if self.symmetric_through_zero:
            if self.length % 2 == 0:
                raise ValueError("symmetric progression must have odd length")
            r = (self.length - 1) // 2
            if self.base != self.group.inv(self.group.scalar(r, self.step)):
                raise ValueError("symmetric progression must be centred on 0")

    def elements(self) -> list[Element]:
        g, out, cur = self.group, [self.base], self.base
        for _ in range(self.length - 1):  # not one extra: the endpoint may sit on the window edge
            cur = g.mul(cur, self.step)
            out.append(cur)
        return out

    def to_gset(self) -> GSet:
        return GSet(self.group, self.elements())

    def radius(self) -> int:
        if not self.symmetric_through_zero:
            raise ValueError("radius is defined only for symmetric progressions")
        return (self.length - 1) // 2

    def to_payload(self) -> dict:
        return {
            "group": self.group.spec(),
            "base": list(self.base),
            "step": list(self.step),
            "length": self.length,
            "symmetric_through_zero": self.symmetric_through_zero,
        }


def symmetric_progression(group: Group, step: Element, radius: int) -> Progression:
    """[−radius..radius]·step, symmetric through 0 (2·radius+1 elements)."""
    base = group.inv(group.scalar(radius, step)) if radius else group.identity()
    return Progression(group, base, step, 2 * radius + 1, symmetric_through_zero=True)


def clip_symmetric(p: Progression, radius: int) -> Progression:
    """Symmetric subprogression of smaller radius; same step and centre."""
    if not 0 <= radius <= p.radius():
        raise ValueError(f"need 0 ≤ radius ≤ {p.radius()}, got {radius}")
    return symmetric_progression(p.group, p.step, radius)


def _max_abs(X: GSet) -> int:
    return max(abs(v) for a in X for v in a)


def _embed_for(k: int, *sets: GSet) -> tuple[GSet, ...]:
    """Re-embed window sets into a bound that survives all k-fold arithmetic."""
    g = sets[0].group
    if g.kind != "window":
        return sets
    m = max(_max_abs(X) for X in sets if len(X))
    bound = (2 ** (k + 1) + 2 * k + 4) * max(m, 1)
    return tuple(with_window_bound(X, bound) for X in sets)


def doubling_constant(S: GSet) -> Fraction:
    """K := min(|S·S|, |S·S⁻¹|)/|S|, computed exactly."""
    ss = len(product_set(S, S))
    sd = len(product_set(S, inverse_set(S)))
    return Fraction(min(ss, sd), len(S))


def find_ap_in_iterated_difference(A: GSet, S: GSet, k: int) -> Progression:
    """Symmetric progression [−2^k..2^k]·d through 0 with d ∈ A−A, inside kA−kA.

    Requires A ⊆ S in an abelian group and the counting precondition
    |A|^{k+1} > K^{3k(k+1)/2}·|S|^k with K = min(|S+S|,|S−S|)/|S|; under it a
    collision of the (k+1)-tuple images is forced, and every element of the
    output is re-verified inside kA−kA exactly.
    """
    if k < 1:
        raise ValueError("k must be ≥ 1")
    if not A.group.abelian:
        raise GroupError("needs an abelian group")
    if not A.subset_of(S):
        raise ValueError("need A ⊆ S")
    A, S = _embed_for(k, A, S)
    g = A.group
    K = doubling_constant(S)
    E = 3 * k * (k + 1) // 2
    if not len(A) ** (k + 1) * K.denominator**E > K.numerator**E * len(S) ** k:
        raise DensityTooLowError(
            f"|A|^{k + 1} = {len(A) ** (k + 1)} ≤ K^{E}·|S|^{k} with K = {K}, |S| = {len(S)}"
        )

    # stream tuples lexicographically; key = (x₁−2a, …, x_k−2^k a)
    seen: dict[tuple, Element] = {}
    d: Element | None = None
    pows = [2**i for i in range(1, k + 1)]
    for a in A:
        shifts = [g.inv(g.scalar(p, a)) for p in pows]
        for xs in itertools.product(A.elements, repeat=k):
            key = tuple(g.mul(x, s) for x, s in zip(xs, shifts))
            owner = seen.setdefault(key, a)
            if owner != a:
                d = g.mul(owner, g.inv(a))
                break
        if d is not None:
            break
    if d is None:
        raise NoCollisionError("pigeonhole precondition held but no collision was found")

    prog = symmetric_progression(g, d, 2**k)
    kA = iterated_product(A, k)
    container = product_set(kA, inverse_set(kA))
    for x in prog.elements():
        if x not in container:
            raise VerificationError(f"{x} ∉ kA−kA for k = {k}")
    return prog


def verify_dilate_bound(A: GSet, k: int) -> dict:
    """Exact report on |A − 2^k·A| ≤ K^{3k}|A| with K = min(|A+A|,|A−A|)/|A|."""
    if k < 1:
        raise ValueError("k must be ≥ 1")
    (A,) = _embed_for(k, A)
    K = doubling_constant(A)
    dilated = GSet(A.group, [A.group.scalar(2**k, a) for a in A])
    lhs = len(product_set(A, inverse_set(dilated)))
    rhs = K ** (3 * k) * len(A)
    return {"K": K, "k": k, "lhs": lhs, "rhs": rhs, "holds": lhs <= rhs}


# ── almost-periods → progression (window pipeline) ───────────────────────────

def _window_interval_set(N: int, bound: int) -> GSet:
    return interval(window_group(bound), 1, N)


def choose_ap_depth(N: int, size_A: int, delta: Fraction) -> int:
    """Largest k ≥ 1 with 36k³·log(4/α) ≤ δ²·log N, via exact integer power tests.

    With δ² = p/q in lowest terms, the condition reads (4N)^{36k³q} ≤ N^p·|A|^{36k³q}.
    Returns 0 when even k = 1 fails (the density precondition α ≥ 4N^{−δ²/36}).
    """
    d2 = Fraction(delta) ** 2
    p, q = d2.numerator, d2.denominator

    def holds(k: int) -> bool:
        e = 36 * k**3 * q
        return (4 * N) ** e <= N**p * size_A**e

    if not holds(1):
        return 0
    k = 1
    while holds(k + 1):
        k += 1
    return k


def ap_of_almost_periods(
    A: GSet,
    N: int,
    delta: Fraction,
    cfg: SearchConfig = SearchConfig(),
    k_override: int | None = None,
) -> tuple[Progression, PeriodCertificate]:
    """Symmetric progression P ⊆ [−N/2, N/2] through 0 along which 1_A*1_A moves
    by at most δ²|A|³ in L², verified exactly for every t ∈ P.

    Pipeline: almost-period search on (A, A, [N]) with K = 2/α at ε = δ/k,
    collision step on the returned T, then clipping to radius min(2^k, ⌊N/2|d|⌋).
    `k_override` bypasses the density gate (the gate needs astronomically large
    N; the override exercises the machinery at desk scale and is recorded).
    """
    delta = Fraction(delta)
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0,1], got {delta}")
    if A.group.kind != "window":
        raise GroupError("needs an integer-window group")
    if not len(A):
        raise ValueError("A must be nonempty")
    if not all(1 <= a[0] <= N for a in A):
        raise ValueError("need A ⊆ {1,…,N}")

    if k_override is not None:
        k = k_override
        if k < 1:
            raise ValueError("k_override must be ≥ 1")
    else:
        k = choose_ap_depth(N, len(A), delta)
        if k < 1:
            raise DensityTooLowError(
                f"|A|/N = {Fraction(len(A), N)} < 4·N^(−δ²/36) at δ = {delta}: no valid k"
            )
    epsilon = delta / k  # k²ε² = δ² exactly
    alpha = Fraction(len(A), N)

    bound = 3 * N
    A_w = with_window_bound(A, bound)
    S = _window_interval_set(N, bound)
    cert = find_almost_periods(A_w, A_w, S, epsilon, m=1, side="right", cfg=cfg, K=2 / alpha)

    prog = find_ap_in_iterated_difference(cert.T, S, k)
    d = prog.step[0]
    r = min(2**k, N // (2 * abs(d)))
    # 2^k·|d| ≤ kN because the progression sits inside kT−kT ⊆ [−kN, kN]
    assert r >= 2 ** (k - 1) // k, (r, k, d)
    clipped = symmetric_progression(A_w.group, (d,), r)

    f = convolve_sets([A_w, A_w])
    limit = delta**2 * len(A) ** 3
    for t in clipped.elements():
        if translation_defect(f, t, "right", 2).value > limit:
            raise VerificationError(f"defect at t = {t} exceeds δ²|A|³ = {limit}")
    return clipped, cert


# ── vector-space variant: greedy subspace generation ─────────────────────────

def span_of_symmetric_set(X: GSet, max_order: int = 4096) -> GSet:
    """Subspace of F_p^n spanned by X, via greedy linear-independence collection.

    Out of the progression pipelines' critical path; exposed because iterated
    sums of a symmetric set in a vector group naturally generate a subspace
    rather than a progression.
    """
    g = X.group
    if g.kind != "vector":
        raise GroupError("needs an F_p^n vector group")
    p, n = g.params
    basis: list[list[int]] = []
    pivots: list[int] = []
    for x in X:
        v = list(x)
        for b, piv in zip(basis, pivots):
            coeff = v[piv] * pow(b[piv], -1, p) % p
            v = [(vi - coeff * bi) % p for vi, bi in zip(v, b)]
        nz = next((i for i, vi in enumerate(v) if vi), None)
        if nz is not None:
            basis.append(v)
            pivots.append(nz)
    if p ** len(basis) > max_order:
        raise ValueError(f"span would have {p ** len(basis)} elements > cap {max_order}")
    span = {g.identity()}
    for b in basis:
        span = {g.mul(s, tuple((c * bi) % p for bi in b)) for s in span for c in range(p)}
    return GSet(g, sorted(span), _trusted=True)
