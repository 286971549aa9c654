"""Structure in product sets: symmetric sets of almost-periods whose iterated
products stay inside small product sets.

Each pipeline runs the seeded almost-period search, forms S := T·T⁻¹, and then
re-verifies the headline claims — containment of S^k in the product set and
pointwise representation counts — by exact set arithmetic and convolution
tables, independently of how T was found.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .convtable import convolve_sets, energy, is_gamma_popular, lp_norm_pow
from .enclosures import ceil_enclosed, exp_enclosure, ln_enclosure, nth_root_enclosure
from .groups import (
    Element,
    GSet,
    full_set,
    inverse_set,
    iterated_product,
    product_set,
    translate,
    with_window_bound,
)
from .periods import PeriodCertificate, SearchConfig, find_almost_periods
from .sampling import SplitMix64, sample_subset, subseed


class PipelineError(Exception):
    """Base class for structure-pipeline failures."""


class NotPopularError(PipelineError):
    """The designated element has no representations at all."""


class TranslateNotFoundError(PipelineError):
    """No translate of a tested subset fits in the product set (parameter violation)."""

    def __init__(self, message: str, subset: tuple):
        super().__init__(message)
        self.subset = subset


class PipelineVerificationError(PipelineError):
    """An exact re-check of a pipeline guarantee failed — a defect."""


@dataclass(frozen=True)
class StructureResult:
    """A verified symmetric set S with S^k inside the stated container."""

    S: GSet
    k: int
    container: GSet
    rep_lower_bound: Fraction
    certificate: PeriodCertificate
    iterated: GSet  # S^k as verified
    report: dict

    def __post_init__(self) -> None:
        if inverse_set(self.S) != self.S:
            raise PipelineVerificationError("S is not symmetric")
        if self.S.group.identity() not in self.S:
            raise PipelineVerificationError("S does not contain the identity")
        if not self.iterated.subset_of(self.container):
            raise PipelineVerificationError("S^k escapes the verified container")


def _max_abs(X) -> int:
    vals = [abs(v) for a in X for v in a]
    return max(vals) if vals else 0


def _embedded(k: int, *sets: GSet, extra: tuple[Element, ...] = ()) -> tuple[GSet, ...]:
    """Re-embed window sets so products of depth ≤ 2k+6 cannot overflow."""
    g = sets[0].group
    if g.kind != "window":
        return sets
    m = max(max(_max_abs(X) for X in sets), _max_abs(extra), 1)
    return tuple(with_window_bound(X, (2 * k + 6) * m) for X in sets)


def _tt_inv(T: GSet) -> GSet:
    return product_set(T, inverse_set(T))


def core_set_pipeline(A: GSet, k: int, cfg: SearchConfig = SearchConfig()) -> StructureResult:
    """Symmetric S ⊆ A⁻¹A, identity ∈ S, with S^k ⊆ A²·A⁻² and every element of
    S^k having ≥ |A|³/2K representations a₁a₂a₃⁻¹a₄⁻¹, where K := |A²|/|A|.

    Search parameter: ε² = 1/(k²K), so k-fold products keep defect ≤ |A|³/K.
    """
    if len(A) < 2:
        raise ValueError("degenerate |A| < 2")
    if k < 1:
        raise ValueError("k must be ≥ 1")
    (A,) = _embedded(k, A)
    K = Fraction(len(product_set(A, A)), len(A))
    eps_sq = 1 / (k * k * K)
    cert = find_almost_periods(A, A, A, None, m=1, side="left", cfg=cfg, epsilon_sq=eps_sq)

    S = _tt_inv(cert.T)
    Ainv = inverse_set(A)
    if not S.subset_of(product_set(Ainv, A)):
        raise PipelineVerificationError("S escapes A⁻¹·A")
    Sk = iterated_product(S, k)
    container = product_set(product_set(A, A), product_set(Ainv, Ainv))
    conv4 = convolve_sets([A, A, Ainv, Ainv])
    rep_bound = Fraction(len(A) ** 3, 2) / K
    rep_min = min(conv4.value(t) for t in Sk)
    if rep_min < rep_bound:
        raise PipelineVerificationError(f"representation count {rep_min} < bound {rep_bound}")
    report = {
        "K": K,
        "epsilon_sq": eps_sq,
        "rep_min": rep_min,
        "rep_bound": rep_bound,
        "sizes": {"A": len(A), "S": len(S), "S^k": len(Sk), "container": len(container)},
        "mode": cert.mode,
    }
    return StructureResult(S, k, container, rep_bound, cert, Sk, report)


def abba_pipeline(
    A: GSet, B: GSet, D: GSet, k: int, cfg: SearchConfig = SearchConfig()
) -> StructureResult:
    """Symmetric S ⊆ D⁻¹D with S^k ⊆ A·B·B⁻¹·A⁻¹ and ≥ |A|²|B|/2K representations
    a₁b₁b₂⁻¹a₂⁻¹ for every element, where K := |A|²|B|/E(A,B) (exact energy)."""
    if min(len(A), len(B), len(D)) < 1 or max(len(A), len(B)) < 2:
        raise ValueError("degenerate input sets")
    if k < 1:
        raise ValueError("k must be ≥ 1")
    A, B, D = _embedded(k, A, B, D)
    E = energy(A, B)
    K = Fraction(len(A) ** 2 * len(B), E)
    eps_sq = 1 / (k * k * K)
    cert = find_almost_periods(A, B, D, None, m=1, side="left", cfg=cfg, epsilon_sq=eps_sq)

    S = _tt_inv(cert.T)
    if not S.subset_of(product_set(inverse_set(D), D)):
        raise PipelineVerificationError("S escapes D⁻¹·D")
    Sk = iterated_product(S, k)
    Binv, Ainv = inverse_set(B), inverse_set(A)
    container = product_set(product_set(A, B), product_set(Binv, Ainv))
    conv4 = convolve_sets([A, B, Binv, Ainv])
    rep_bound = Fraction(len(A) ** 2 * len(B), 2) / K  # = E/2
    rep_min = min(conv4.value(t) for t in Sk)
    if rep_min < rep_bound:
        raise PipelineVerificationError(f"representation count {rep_min} < bound {rep_bound}")
    K_prime = Fraction(len(product_set(D, A)), len(A))
    report = {
        "K": K,
        "K_prime": K_prime,
        "energy": E,
        "epsilon_sq": eps_sq,
        "rep_min": rep_min,
        "rep_bound": rep_bound,
        "sizes": {"A": len(A), "B": len(B), "D": len(D), "S": len(S), "S^k": len(Sk)},
        "mode": cert.mode,
    }
    return StructureResult(S, k, container, rep_bound, cert, Sk, report)


def abc_pipeline(
    A1: GSet,
    A2: GSet,
    A3: GSet,
    x: Element,
    D: GSet,
    k: int,
    cfg: SearchConfig = SearchConfig(),
) -> StructureResult:
    """Symmetric S ⊆ D·D⁻¹ with x·S^k ⊆ A₁·A₂·A₃, every element keeping at least
    half of x's representation count, via the popularity of x.

    K is minimal with (1_{A₁}*1_{A₂}*1_{A₃})(x) ≥ (|A₁||A₂|)^{1/2}|A₃|/K; only
    K² is rational and all comparisons are squared.  Search runs on (A₂, A₃)
    with ε² = 1/(4k²K²).
    """
    if k < 1:
        raise ValueError("k must be ≥ 1")
    A1, A2, A3, D = _embedded(k, A1, A2, A3, D, extra=(x,))
    g = A1.group
    conv3 = convolve_sets([A1, A2, A3])
    v = conv3.value(x)
    if v == 0:
        raise NotPopularError(f"{x} has no representations in A₁·A₂·A₃")
    K_sq = Fraction(len(A1) * len(A2) * len(A3) ** 2, v * v)  # ≥ 1 since v ≤ |A₂||A₃| etc.
    if not is_gamma_popular(A1, A2, A3, x, gamma_sq=1 / K_sq):
        raise NotPopularError("popularity self-check failed")
    eps_sq = 1 / (4 * k * k * K_sq)
    cert = find_almost_periods(A2, A3, D, None, m=1, side="right", cfg=cfg, epsilon_sq=eps_sq)

    S = _tt_inv(cert.T)
    if not S.subset_of(product_set(D, inverse_set(D))):
        raise PipelineVerificationError("S escapes D·D⁻¹")
    Sk = iterated_product(S, k)
    triple = product_set(product_set(A1, A2), A3)
    dev_sq_bound = Fraction(len(A1) * len(A2) * len(A3) ** 2, 4) / K_sq  # (√(|A₁||A₂|)|A₃|/2K)²
    worst_dev_sq = Fraction(0)
    for t in Sk:
        xt = g.mul(x, t)
        if xt not in triple:
            raise PipelineVerificationError(f"x·{t} escapes A₁·A₂·A₃")
        dev_sq = Fraction((conv3.value(xt) - v) ** 2)
        worst_dev_sq = max(worst_dev_sq, dev_sq)
        if dev_sq > dev_sq_bound:
            raise PipelineVerificationError(
                f"deviation² {dev_sq} at x·{t} exceeds bound {dev_sq_bound}"
            )
    # dev_sq_bound is exactly v²/4, so every x·t retains ≥ v/2 representations.
    container = translate(g.inv(x), triple, "left")
    rep_bound = Fraction(v, 2)
    report = {
        "K_sq": K_sq,
        "K_prime": Fraction(len(product_set(A3, D)), len(A3)),
        "popular_count": v,
        "epsilon_sq": eps_sq,
        "worst_dev_sq": worst_dev_sq,
        "dev_sq_bound": dev_sq_bound,
        "sizes": {
            "A1": len(A1),
            "A2": len(A2),
            "A3": len(A3),
            "D": len(D),
            "S": len(S),
            "triple_product": len(triple),
        },
        "mode": cert.mode,
        "x": x,  # container is the x⁻¹-translate of A₁·A₂·A₃
    }
    return StructureResult(S, k, container, rep_bound, cert, Sk, report)


def _window_scan_range(AB: GSet, P: list[Element]) -> range:
    lo_ab = min(a[0] for a in AB)
    hi_ab = max(a[0] for a in AB)
    lo_p = min(p[0] for p in P)
    hi_p = max(p[0] for p in P)
    return range(lo_ab - hi_p, hi_ab - lo_p + 1)


def find_left_translate(AB: GSet, P: list[Element]) -> Element | None:
    """First x (canonical order) with x·P ⊆ AB; None when there is none.

    The scan is complete: over the whole group when finite, and over the only
    window interval where x·P can meet AB otherwise.
    """
    g = AB.group
    if g.kind == "window":
        # integer arithmetic directly: x·p may exceed the window bound mid-scan
        member = set(AB.elements)
        for x in _window_scan_range(AB, P):
            if all((x + p[0],) in member for p in P):
                return (x,)
        return None
    for x in full_set(g):
        if all(g.mul(x, p) in AB for p in P):
            return x
    return None


def ab_struct_pipeline(
    A: GSet,
    B: GSet,
    S: GSet,
    k: int,
    n: int,
    cfg: SearchConfig = SearchConfig(),
    K1: Fraction | None = None,
    K2: Fraction | None = None,
    K3: Fraction | None = None,
    subset_samples: int = 100,
    exhaustive_cap: int = 2000,
) -> tuple[GSet, dict]:
    """T ⊆ S such that A·B contains a left-translate of every subset of (TT⁻¹)^k
    of size ≤ n, checked by direct translate scans over sampled (or, when
    feasible, all) such subsets.

    Mirrors the L^{2m} search with m := ⌈log 2n⌉, γ^m := ‖1_A*1_B‖_m^m/(|AB||B|^m)
    exact, and ε := γ/(e·k²) taken at the conservative lower end of a certified
    enclosure.  Supplied K₁/K₂/K₃ are validated against the exact quantities.
    """
    if n < 2:
        raise ValueError("n must be ≥ 2")
    if k < 1:
        raise ValueError("k must be ≥ 1")
    A, B, S = _embedded(k, A, B, S)
    E = energy(A, B)
    AB = product_set(A, B)
    K1_min = Fraction(len(A) * len(B) ** 2, E)
    K2_min = Fraction(len(AB), len(A))
    K3_min = Fraction(len(product_set(B, S)), len(B))
    for name, given, minimal in (("K1", K1, K1_min), ("K2", K2, K2_min), ("K3", K3, K3_min)):
        if given is not None and Fraction(given) < minimal:
            raise ValueError(f"{name} = {given} is below the exact minimum {minimal}")
    K1 = K1_min if K1 is None else Fraction(K1)
    K2 = K2_min if K2 is None else Fraction(K2)
    K3 = K3_min if K3 is None else Fraction(K3)

    m = ceil_enclosed(lambda terms: ln_enclosure(Fraction(2 * n), terms))
    f = convolve_sets([A, B])
    norm_m = lp_norm_pow(f, m).value
    gamma_m = Fraction(norm_m, len(AB) * len(B) ** m)
    e_lo, e_hi = exp_enclosure(Fraction(1))
    g_lo, g_hi = nth_root_enclosure(gamma_m, m)
    eps_lo = g_lo / (e_hi * k * k)
    eps_hi = g_hi / (e_lo * k * k)

    cert = find_almost_periods(A, B, S, eps_lo, m=m, side="right", cfg=cfg, K=K3)
    T = cert.T

    # counting contradiction: n·k^{2m}·ε^m|B|^m·‖f‖_m^m < ‖f‖_m^{2m}/|AB| must hold,
    # which reduces exactly to n < e^m; both sides reported.
    epsm_hi = gamma_m / (e_lo**m * k ** (2 * m))
    counting_lhs_hi = n * k ** (2 * m) * epsm_hi * len(B) ** m * norm_m
    counting_rhs = Fraction(norm_m**2, len(AB))
    counting = {
        "lhs_upper": counting_lhs_hi,
        "rhs": counting_rhs,
        "contradiction_forced": counting_lhs_hi < counting_rhs,
        "n_below_e_pow_m": e_lo**m > n,
    }
    holder_ok = gamma_m**2 * (K1 * K2) ** m >= 1  # γ ≥ 1/√(K₁K₂)

    sigma = iterated_product(_tt_inv(T), k)
    size = min(n, len(sigma))
    if math.comb(len(sigma), size) <= exhaustive_cap:
        subsets = [list(c) for c in itertools.combinations(sigma.elements, size)]
        exhaustive = True
    else:
        rng = SplitMix64(subseed(cfg.seed, 10_001))
        subsets = [sorted(sample_subset(rng, sigma.elements, size)) for _ in range(subset_samples)]
        exhaustive = False
    witnesses = []
    for P in subsets:
        x = find_left_translate(AB, P)
        if x is None:
            raise TranslateNotFoundError(f"no translate of {P} fits in A·B", tuple(P))
        witnesses.append(x)
    report = {
        "K1": K1,
        "K2": K2,
        "K3": K3,
        "m": m,
        "n": n,
        "k": k,
        "gamma_m": gamma_m,
        "epsilon_enclosure": (eps_lo, eps_hi),
        "k_inner": cert.k,
        "mode": cert.mode,
        "counting": counting,
        "holder_ok": holder_ok,
        "sigma_size": len(sigma),
        "subsets_tested": len(subsets),
        "exhaustive": exhaustive,
        "example_translate": witnesses[0] if witnesses else None,
        "certificate": cert,
    }
    return T, report
