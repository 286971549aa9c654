"""Strong approximate groups: exact K and almost-invariant product sets.

A nonempty finite set A is a strong K-approximate group when every x ∈ A²
has at least |A|/K representations as a product of two elements of A; the
minimal such K is |A| divided by the smallest value of 1_A*1_A on A², an
exact rational.  From K, a random k-subset C of A² certifies a set
T ⊆ A⁻¹ of translates along which C·A nearly tiles A², and S := T·T⁻¹ is
a symmetric identity-containing subset of A⁻¹A every element of which
moves A² by at most ε·|A²| in symmetric difference.  The real-valued
sampling threshold λ = 4e^{−2k/K²} enters only as a rational upper
enclosure gating the search; the final per-element inequality on S is
re-checked exactly before anything is returned.
"""

from __future__ import annotations

from fractions import Fraction

from .convtable import convolve_sets
from .enclosures import ceil_enclosed, exp_enclosure, ln_enclosure
from .groups import (
    GSet,
    inverse_set,
    product_set,
    sym_diff_size,
    translate,
    with_window_bound,
)
from .periods import AttemptsExhaustedError, SearchConfig, sample_k_subset
from .sampling import SplitMix64, subseed

__all__ = [
    "StrongApproxVerificationError",
    "strong_approx_check",
    "strong_approx_periods",
]


class StrongApproxVerificationError(Exception):
    """An exact re-check of the symmetric-difference guarantee failed — a defect."""


def strong_approx_check(A: GSet, threshold: Fraction | None = None) -> tuple[bool, Fraction]:
    """(is_strong, K): the minimal K with 1_A*1_A(x) ≥ |A|/K on all of A².

    K = |A| / min_{x∈A²} 1_A*1_A(x), exact.  Every nonempty A is strong for
    its own minimal K; pass `threshold` to ask whether K ≤ threshold instead.
    """
    if len(A) == 0:
        raise ValueError("A must be nonempty")
    f = convolve_sets([_embedded(A)] * 2)
    K = Fraction(len(A), min(v for _, v in f.entries))
    is_strong = True if threshold is None else K <= Fraction(threshold)
    return is_strong, K


def _frac_ceil(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def _embedded(A: GSet) -> GSet:
    """Re-embed window sets so depth-4 products (s·A² ⊆ A⁻¹A·A²) cannot overflow."""
    if A.group.kind != "window":
        return A
    m = max((abs(v) for a in A for v in a), default=0)
    return with_window_bound(A, 6 * max(m, 1))


def _symdiff_defect(s, A2: GSet) -> int:
    """|s·A² △ A²|, exact."""
    return sym_diff_size(translate(s, A2, "left"), A2)


def _pair_products(group, T: list, t) -> list:
    """All new elements of T·T⁻¹ contributed by adding t (both orders, plus e)."""
    inv, mul = group.inv, group.mul
    out = {mul(t, inv(t))}
    for u in T:
        out.add(mul(t, inv(u)))
        out.add(mul(u, inv(t)))
    return sorted(out)


def _greedy_certified(A2: GSet, candidates: GSet, bound: Fraction) -> GSet:
    """Largest-found T ⊆ candidates with |s·A²△A²| ≤ bound for all s ∈ T·T⁻¹.

    Candidates are scanned by ascending direct defect (canonical order on
    ties); a singleton always certifies since T·T⁻¹ = {e} moves nothing.
    """
    group = A2.group
    scored = sorted(candidates, key=lambda t: (_symdiff_defect(t, A2), t))
    chosen: list = []
    for t in scored:
        news = _pair_products(group, chosen, t)
        if all(_symdiff_defect(s, A2) <= bound for s in news):
            chosen.append(t)
    return GSet(group, chosen)


def strong_approx_periods(
    A: GSet, epsilon: Fraction, cfg: SearchConfig = SearchConfig()
) -> tuple[GSet, dict]:
    """Symmetric S ⊆ A⁻¹A, identity ∈ S, with |t·A² △ A²| ≤ ε|A²| ∀t ∈ S, exact.

    k := ⌈K²·ln(8/ε)/2⌉ pinned through rational enclosures; each attempt
    samples a k-subset C of A² and keeps T := {t ∈ A⁻¹ : |A² △ t·C·A| ≤
    λ_up·|A²|} with λ_up ≥ 4e^{−2k/K²} rational.  An attempt is accepted
    once |T| ≥ ⌈τ·|A|/(2K)^k⌉ and every element of T·T⁻¹ passes the exact
    ε-check (any shrink needed there is flagged as an anomaly).  When
    2k > |A| the sampling premise is void and a greedy exhaustively
    certified T is built directly.
    """
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
    if len(A) == 0:
        raise ValueError("A must be nonempty")
    A = _embedded(A)
    group = A.group
    _, K = strong_approx_check(A)
    A2 = product_set(A, A)
    if len(A2) > K * len(A):
        raise StrongApproxVerificationError(
            f"|A²| = {len(A2)} exceeds K|A| = {K * len(A)}"
        )

    k = ceil_enclosed(
        lambda terms: tuple(K * K * v / 2 for v in ln_enclosure(8 / epsilon, terms))
    )
    lambda_up = 4 * exp_enclosure(-Fraction(2 * k) / (K * K))[1]
    gate_bound = lambda_up * len(A2)
    final_bound = epsilon * len(A2)
    candidates = inverse_set(A)

    # (2K)^k only drives the target and the attempt policy; since 2K ≥ 2, a
    # bit-length test settles both without building the power when k is huge
    tau_A = cfg.target_fraction * len(A)
    if k >= tau_A.numerator.bit_length():
        target = 1  # (2K)^k ≥ 2^k > τ|A|
    else:
        target = _frac_ceil(tau_A / (2 * K) ** k)
    if cfg.max_attempts is not None:
        max_attempts, cap_applied = cfg.max_attempts, False
    elif k >= (20 * cfg.attempts_ceiling).bit_length():
        max_attempts, cap_applied = cfg.attempts_ceiling, True  # policy ≥ 2^k ≫ ceiling
    else:
        policy_attempts = _frac_ceil(20 * (2 * K) ** k)
        max_attempts = min(policy_attempts, cfg.attempts_ceiling)
        cap_applied = policy_attempts > cfg.attempts_ceiling

    def finish(T: GSet, mode: str, attempts_used: int, anomaly: bool) -> tuple[GSet, dict]:
        S = product_set(T, inverse_set(T))
        if inverse_set(S) != S or group.identity() not in S:
            raise StrongApproxVerificationError("T·T⁻¹ is not symmetric through the identity")
        if not S.subset_of(product_set(candidates, A)):
            raise StrongApproxVerificationError("S escapes A⁻¹·A")
        worst = 0
        for s in S:
            d = _symdiff_defect(s, A2)
            worst = max(worst, d)
            if d > final_bound:
                raise StrongApproxVerificationError(
                    f"|{s}·A² △ A²| = {d} exceeds ε|A²| = {final_bound}"
                )
        report = {
            "epsilon": epsilon,
            "K": K,
            "k": k,
            "lambda_up": lambda_up,
            "A2_size": len(A2),
            "doubling_bound": K * len(A),
            "mode": mode,
            "attempts_used": attempts_used,
            "T_size": len(T),
            "S_size": len(S),
            "worst_defect": worst,
            "defect_bound": final_bound,
            "target_size": target,
            "max_attempts": max_attempts,
            "attempts_cap_applied": cap_applied,
            "shrink_anomaly": anomaly,
            "seed": cfg.seed,
        }
        return S, report

    if 2 * k > len(A):
        # sampling premise (a k-subset of A² lands in t⁻¹A often) is void
        T = _greedy_certified(A2, candidates, final_bound)
        return finish(T, "trivial", 0, False)

    for attempt in range(max_attempts):
        rng = SplitMix64(subseed(cfg.seed, attempt))
        C = sample_k_subset(A2, k, rng)
        CA = product_set(C, A)
        T = GSet(
            group,
            [t for t in candidates if sym_diff_size(translate(t, CA, "left"), A2) <= gate_bound],
        )
        if len(T) < target:
            continue
        pair_set = product_set(T, inverse_set(T))
        if all(_symdiff_defect(s, A2) <= final_bound for s in pair_set):
            return finish(T, "sampled", attempt + 1, False)
        # 2λ ≤ ε precludes this up to enclosure slack: shrink and flag
        T2 = _greedy_certified(A2, T, final_bound)
        if len(T2) >= target:
            return finish(T2, "sampled", attempt + 1, True)

    if cfg.on_exhausted == "fallback":
        T = _greedy_certified(A2, candidates, final_bound)
        return finish(T, "fallback", max_attempts, False)
    raise AttemptsExhaustedError(
        f"no sampled C reached target |T| ≥ {target} in {max_attempts} attempts "
        f"(K = {K}, k = {k})"
    )
