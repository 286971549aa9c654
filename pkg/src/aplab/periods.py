"""Randomized search for almost-period sets T with exact certification.

The search samples a k-subset C of the enlarged set (S·A on the left, B·S on
the right), selects the translates t where the scaled table μ_C*1_B stays
L^{2m}-close to the translated 1_A*1_B, and then *certifies* the returned set:
every t ∈ T·T⁻¹ is re-checked against the theorem's inequality by exhaustive
exact arithmetic.  Certificates record everything needed to replay the run.

Two regimes:

* sampled — k ≤ |base|/2: the probabilistic argument applies, and the
  triangle inequality guarantees certification succeeds (a shrink here is
  reported as an anomaly);
* trivial — k > |base|/2: the target size ⌈τ|S|/(2K)^k⌉ is provably < 1, so
  a greedy exhaustively-certified subset of the full candidate set is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .convtable import ConvTable, convolve_sets, lp_norm_pow, translation_defect
from .groups import GSet, inverse_set, product_set
from .sampling import SplitMix64, sample_subset, subseed


class PeriodSearchError(Exception):
    """Base class for almost-period search failures."""


class PreconditionError(PeriodSearchError):
    """The doubling premise |S·A| ≤ K|A| (or |B·S| ≤ K|B|) fails for the given K."""


class AttemptsExhaustedError(PeriodSearchError):
    """No sampled C reached the target |T| within the attempt budget."""


@dataclass(frozen=True)
class SearchConfig:
    """Caller-tunable search policy; defaults follow the recorded retry policy."""

    max_attempts: int | None = None  # None → ⌈20·(2K)^k⌉ capped at attempts_ceiling
    attempts_ceiling: int = 500
    target_fraction: Fraction = Fraction(1, 2)
    seed: int = 0
    on_exhausted: str = "error"  # or "fallback": greedy certified set, target waived

    def __post_init__(self) -> None:
        object.__setattr__(self, "target_fraction", Fraction(self.target_fraction))
        if self.max_attempts is not None and self.max_attempts < 1:
            raise ValueError("max_attempts must be ≥ 1")
        if not 0 < self.target_fraction <= 1:
            raise ValueError("target_fraction must lie in (0, 1]")
        if self.on_exhausted not in ("error", "fallback"):
            raise ValueError("on_exhausted must be 'error' or 'fallback'")


@dataclass(frozen=True)
class PeriodCertificate:
    """Everything needed to replay and re-verify one almost-period search."""

    A: GSet
    B: GSet
    S: GSet
    side: str
    epsilon: Fraction | None  # None when the search was driven by ε² alone
    epsilon_sq: Fraction
    m: int
    k: int
    K: Fraction
    C: GSet
    T: GSet
    bound_rhs: Fraction
    attempts_used: int
    seed: int
    mode: str  # "sampled" | "trivial" | "fallback"
    target_size: int
    max_attempts: int
    attempts_cap_applied: bool
    shrink_anomaly: bool


def _frac_ceil(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def choose_k(epsilon: Fraction, m: int) -> int:
    """Sample size: ⌈8/ε²⌉ in L², ⌈49m/ε⌉ in L^{2m} for m ≥ 2."""
    epsilon = Fraction(epsilon)
    if m == 1:
        return choose_k_sq(epsilon**2)
    return _frac_ceil(49 * m / epsilon)


def choose_k_sq(epsilon_sq: Fraction) -> int:
    """L² sample size ⌈8/ε²⌉ from ε² directly (ε itself may be irrational)."""
    return _frac_ceil(8 / Fraction(epsilon_sq))


def sample_k_subset(A: GSet, k: int, rng: SplitMix64) -> GSet:
    """Uniform k-subset of A, deterministic given the generator state."""
    if not 1 <= k <= len(A):
        raise ValueError(f"need 1 ≤ k ≤ |A| = {len(A)}, got k = {k}")
    return GSet(A.group, sample_subset(rng, A.elements, k))


# ── approximation tests (μ_C = (|base|/k)·1_C against f = 1_A*1_B) ───────────

def approximates_l2(C: GSet, A: GSet, B: GSet, k: int) -> bool:
    """‖μ_C*1_B − 1_A*1_B‖₂² ≤ 2|A|²|B|/k, cross-multiplied to integers."""
    if len(C) != k:
        raise ValueError(f"|C| = {len(C)} ≠ k = {k}")
    f = convolve_sets([A, B])
    g = convolve_sets([C, B])
    a = len(A)
    xs = {x for x, _ in f.entries} | {x for x, _ in g.entries}
    lhs = sum((a * g.value(x) - k * f.value(x)) ** 2 for x in xs)
    return lhs <= 2 * k * a * a * len(B)


def l2m_lambda(f: ConvTable, base_size: int, k: int, m: int) -> Fraction:
    """λ = 2·(m·|base|/k)^m · Σ_{x∈supp f} (3f(x) + m·|base|/k)^m, exactly."""
    q = Fraction(m * base_size, k)
    return 2 * q**m * sum(((3 * v + q) ** m for _, v in f.entries), Fraction(0))


def approximates_l2m(C: GSet, A: GSet, B: GSet, k: int, m: int) -> bool:
    """‖μ_C*1_B − 1_A*1_B‖_{2m}^{2m} ≤ 2λ, all rational."""
    if len(C) != k:
        raise ValueError(f"|C| = {len(C)} ≠ k = {k}")
    if m < 1:
        raise ValueError("m must be ≥ 1")
    f = convolve_sets([A, B])
    g = convolve_sets([C, B])
    a = len(A)
    lam = l2m_lambda(f, a, k, m)
    xs = {x for x, _ in f.entries} | {x for x, _ in g.entries}
    lhs = sum((a * g.value(x) - k * f.value(x)) ** (2 * m) for x in xs)
    return lhs <= 2 * lam * k ** (2 * m)


def lambda_inequality_report(A: GSet, B: GSet, k: int, m: int, side: str = "left") -> dict:
    """Check λ ≤ 2(m·base/k)^m·(61/20)^m·max(‖f‖_m, 20m|AB|·base/k)^m exactly.

    This inequality is stated without derivation in the source argument; it is
    verified per instance and reported, never relied on.
    """
    f = convolve_sets([A, B])
    base = len(A) if side == "left" else len(B)
    lam = l2m_lambda(f, base, k, m)
    norm_m = Fraction(lp_norm_pow(f, m).value)  # ‖f‖_m^m
    alt = Fraction(20 * m * len(f.entries) * base, k) ** m
    rhs = 2 * Fraction(m * base, k) ** m * Fraction(61, 20) ** m * max(norm_m, alt)
    return {"lambda": lam, "claimed_rhs": rhs, "holds": lam <= rhs}


# ── theorem thresholds ───────────────────────────────────────────────────────

def theorem_bound_rhs_sq(A: GSet, B: GSet, epsilon_sq: Fraction, side: str) -> Fraction:
    """L² threshold ε²|A|²|B| (left) / ε²|A||B|² (right), from ε² directly."""
    epsilon_sq = Fraction(epsilon_sq)
    if side == "left":
        return epsilon_sq * len(A) ** 2 * len(B)
    if side == "right":
        return epsilon_sq * len(A) * len(B) ** 2
    raise ValueError(f"side must be 'left' or 'right', not {side!r}")


def theorem_bound_rhs(A: GSet, B: GSet, epsilon: Fraction, m: int, side: str) -> Fraction:
    """The certified inequality's right side for defect ‖Δ_t f‖_{2m}^{2m}."""
    epsilon = Fraction(epsilon)
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    if m == 1:
        return theorem_bound_rhs_sq(A, B, epsilon**2, side)
    ab = len(product_set(A, B))
    f = convolve_sets([A, B])
    norm_m = Fraction(lp_norm_pow(f, m).value)
    base = len(A) if side == "left" else len(B)
    return max(epsilon**m * ab * base**m, norm_m) * epsilon**m * base**m


# ── certification ────────────────────────────────────────────────────────────

def certify_translates(f: ConvTable, ts, side: str, p: int, bound: Fraction) -> list:
    """Return the list of t whose exact defect exceeds the bound."""
    bound = Fraction(bound)
    return [t for t in ts if translation_defect(f, t, side, p).value > bound]


def _pair_products(group, T: list, t: tuple) -> list:
    """All new elements of T·T⁻¹ contributed by adding t (both orders, plus e)."""
    inv, mul = group.inv, group.mul
    out = {mul(t, inv(t)), }
    for u in T:
        out.add(mul(t, inv(u)))
        out.add(mul(u, inv(t)))
    return sorted(out)


def greedy_certified_subset(f: ConvTable, candidates: GSet, side: str, p: int, bound: Fraction) -> GSet:
    """Largest-found T ⊆ candidates with every t ∈ T·T⁻¹ certified exactly.

    Candidates are scanned by ascending single-translate defect (canonical
    order on ties), so near-periods are kept preferentially.  Any singleton
    certifies (T·T⁻¹ = {e}), so the result is nonempty when candidates is.
    """
    group = f.group
    bound = Fraction(bound)
    scored = sorted(candidates, key=lambda t: (translation_defect(f, t, side, p).value, t))
    chosen: list = []
    for t in scored:
        new_ts = _pair_products(group, chosen, t)
        if not certify_translates(f, new_ts, side, p, bound):
            chosen.append(t)
    return GSet(group, chosen)


# ── the search ───────────────────────────────────────────────────────────────

def _select_T(f: ConvTable, g: ConvTable, S: GSet, k: int, m: int, side: str, base_size: int, other_size: int, lam: Fraction | None) -> GSet:
    """Translates t whose shifted f stays close to the scaled sample table g.

    left:  t ∈ S⁻¹ with Σ_x (|A|·g(x) − k·f(tx))^{2m} ≤ threshold;
    right: t ∈ S   with Σ_x (|B|·g(x) − k·f(xt⁻¹))^{2m} ≤ threshold.
    """
    group = f.group
    mul, inv = group.mul, group.inv
    g_support = [x for x, _ in g.entries]
    f_support = [x for x, _ in f.entries]
    if m == 1:
        threshold = 2 * k * base_size**2 * other_size
    else:
        threshold = 2 * lam * k ** (2 * m)
    members = []
    domain = inverse_set(S) if side == "left" else S
    for t in domain:
        if side == "left":
            shift = lambda x: mul(t, x)  # noqa: E731
            unshift = lambda y: mul(inv(t), y)  # noqa: E731
        else:
            tinv = inv(t)
            shift = lambda x: mul(x, tinv)  # noqa: E731
            unshift = lambda y: mul(y, t)  # noqa: E731
        xs = set(g_support)
        xs.update(unshift(y) for y in f_support)
        total = 0
        for x in xs:
            d = base_size * g.value(x) - k * f.value(shift(x))
            total += d ** (2 * m)
            if total > threshold:
                break
        if total <= threshold:
            members.append(t)
    return GSet(group, members)


def find_almost_periods(
    A: GSet,
    B: GSet,
    S: GSet,
    epsilon: Fraction | None,
    m: int = 1,
    side: str = "left",
    cfg: SearchConfig = SearchConfig(),
    K: Fraction | None = None,
    epsilon_sq: Fraction | None = None,
) -> PeriodCertificate:
    """Search for T (⊆ S⁻¹ on the left, ⊆ S on the right) with |T| ≥ τ·|S|/(2K)^k
    such that every t ∈ T·T⁻¹ satisfies the L^{2m} translation-defect bound,
    verified exactly before the certificate is returned.

    Pass `epsilon_sq` instead of `epsilon` when only ε² is rational (m = 1 only).
    """
    if epsilon_sq is not None:
        if epsilon is not None:
            raise ValueError("give epsilon or epsilon_sq, not both")
        if m != 1:
            raise ValueError("epsilon_sq is only meaningful for m = 1")
        epsilon_sq = Fraction(epsilon_sq)
        if not 0 < epsilon_sq <= 1:
            raise ValueError(f"epsilon_sq must lie in (0,1], got {epsilon_sq}")
    else:
        if epsilon is None:
            raise ValueError("epsilon is required when epsilon_sq is not given")
        epsilon = Fraction(epsilon)
        if not 0 < epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0,1], got {epsilon}")
        epsilon_sq = epsilon**2
    if m < 1:
        raise ValueError("m must be ≥ 1")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    if min(len(A), len(B), len(S)) == 0:
        raise ValueError("A, B, S must be nonempty")

    # doubling constant from the actual sets; a caller-supplied K is only checked
    enlarged = product_set(S, A) if side == "left" else product_set(B, S)
    base = A if side == "left" else B
    actual_ratio = Fraction(len(enlarged), len(base))
    if K is None:
        K = actual_ratio
    else:
        K = Fraction(K)
        if actual_ratio > K:
            raise PreconditionError(
                f"|{'S·A' if side == 'left' else 'B·S'}|/|{'A' if side == 'left' else 'B'}| = {actual_ratio} exceeds K = {K}"
            )

    k = choose_k_sq(epsilon_sq) if m == 1 else choose_k(epsilon, m)
    f = convolve_sets([A, B])
    bound_rhs = (
        theorem_bound_rhs_sq(A, B, epsilon_sq, side)
        if m == 1
        else theorem_bound_rhs(A, B, epsilon, m, side)
    )
    # (2K)^k only drives the target and the attempt policy; since 2K ≥ 2, a
    # bit-length test settles both without building the power when k is huge
    tau_S = cfg.target_fraction * len(S)
    if k >= tau_S.numerator.bit_length():
        target = 1  # (2K)^k ≥ 2^k > τ|S|
    else:
        target = _frac_ceil(tau_S / (2 * K) ** k)
    if cfg.max_attempts is not None:
        max_attempts, cap_applied = cfg.max_attempts, False
    elif k >= (20 * cfg.attempts_ceiling).bit_length():
        max_attempts, cap_applied = cfg.attempts_ceiling, True  # policy ≥ 2^k ≫ ceiling
    else:
        policy_attempts = _frac_ceil(20 * (2 * K) ** k)
        max_attempts = min(policy_attempts, cfg.attempts_ceiling)
        cap_applied = policy_attempts > cfg.attempts_ceiling
    p = 2 * m
    empty_C = GSet(A.group, [])

    def build(T: GSet, C: GSet, mode: str, attempts_used: int, anomaly: bool) -> PeriodCertificate:
        return PeriodCertificate(
            A=A, B=B, S=S, side=side, epsilon=epsilon, epsilon_sq=epsilon_sq,
            m=m, k=k, K=K, C=C, T=T,
            bound_rhs=bound_rhs, attempts_used=attempts_used, seed=cfg.seed,
            mode=mode, target_size=target, max_attempts=max_attempts,
            attempts_cap_applied=cap_applied, shrink_anomaly=anomaly,
        )

    candidates = inverse_set(S) if side == "left" else S

    if 2 * k > len(base):
        # trivial regime: target = ⌈τ|S|/(2K)^k⌉ ≤ ⌈τ|base|/(2^k K^{k−1})⌉ = 1
        T = greedy_certified_subset(f, candidates, side, p, bound_rhs)
        return build(T, empty_C, "trivial", 0, False)

    lam = None if m == 1 else l2m_lambda(f, len(base), k, m)
    for attempt in range(max_attempts):
        rng = SplitMix64(subseed(cfg.seed, attempt))
        C = sample_k_subset(enlarged, k, rng)
        g = convolve_sets([C, B]) if side == "left" else convolve_sets([A, C])
        T = _select_T(f, g, S, k, m, side, len(base), len(B) if side == "left" else len(A), lam)
        if len(T) < target:
            continue
        pair_set = product_set(T, inverse_set(T))
        failures = certify_translates(f, pair_set, side, p, bound_rhs)
        if not failures:
            return build(T, C, "sampled", attempt + 1, False)
        # the proofs preclude this: shrink to a certified subset, flag anomaly
        T2 = greedy_certified_subset(f, T, side, p, bound_rhs)
        if len(T2) >= target:
            return build(T2, C, "sampled", attempt + 1, True)

    if cfg.on_exhausted == "fallback":
        T = greedy_certified_subset(f, candidates, side, p, bound_rhs)
        return build(T, empty_C, "fallback", max_attempts, False)
    raise AttemptsExhaustedError(
        f"no sampled C reached target |T| ≥ {target} in {max_attempts} attempts "
        f"(K = {K}, k = {k})"
    )


def verify_certificate(cert: PeriodCertificate) -> bool:
    """Re-derive the certified inequality from raw sets; True iff everything holds."""
    f = convolve_sets([cert.A, cert.B])
    if cert.epsilon is not None and Fraction(cert.epsilon) ** 2 != Fraction(cert.epsilon_sq):
        return False
    if cert.epsilon is None and cert.m != 1:
        return False
    expected_bound = (
        theorem_bound_rhs_sq(cert.A, cert.B, cert.epsilon_sq, cert.side)
        if cert.m == 1
        else theorem_bound_rhs(cert.A, cert.B, cert.epsilon, cert.m, cert.side)
    )
    if Fraction(cert.bound_rhs) != expected_bound:
        return False
    domain = inverse_set(cert.S) if cert.side == "left" else cert.S
    if not cert.T.subset_of(domain):
        return False
    pair_set = product_set(cert.T, inverse_set(cert.T))
    if certify_translates(f, pair_set, cert.side, 2 * cert.m, cert.bound_rhs):
        return False
    identity = cert.A.group.identity()
    if identity not in pair_set or inverse_set(pair_set) != pair_set:
        return False
    return True


def brute_force_periods(A: GSet, B: GSet, S: GSet, epsilon: Fraction, p: int, side: str, domain: GSet | None = None) -> GSet:
    """Exhaustive oracle: all t in S ∪ S⁻¹ (or a supplied domain) whose exact
    defect meets the theorem threshold for ‖Δ_t f‖_p^p (p = 2m)."""
    if p < 2 or p % 2:
        raise ValueError("p must be a positive even integer")
    m = p // 2
    f = convolve_sets([A, B])
    bound = theorem_bound_rhs(A, B, epsilon, m, side)
    if domain is None:
        from .groups import union

        domain = union(S, inverse_set(S))
    hits = [t for t in domain if translation_defect(f, t, side, p).value <= bound]
    return GSet(A.group, hits)
