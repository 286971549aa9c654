"""Density increments for three-term progressions in integer windows.

Exact machinery for the counting quantity T₃(f) = Σ f(x)f(y)f(2y−x):
a smoothed-indicator comparison along a certified symmetric progression,
an averaging lower bound for T₃ driven by exhaustively computed values
of the largest-progression-free-subset function, and a density-increment
step whose maximiser is certified by exhaustive translate scan.  All
verdicts are exact rational comparisons.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .convtable import convolve_sets, indicator, t3_count
from .groups import Element, GroupError, GSet, iterated_product, window_group, with_window_bound
from .periods import PreconditionError, SearchConfig
from .progressions import (
    DensityTooLowError,
    Progression,
    ProgressionError,
    VerificationError,
    ap_of_almost_periods,
    clip_symmetric,
)

__all__ = [
    "IncrementStep",
    "Not3APFreeError",
    "density_increment_run",
    "density_increment_step",
    "r3_exhaustive",
    "t3_approx_progression",
    "t3_interval_closed_form",
    "varnavides_lower_bound",
]


class Not3APFreeError(ProgressionError):
    """The input set contains a nontrivial three-term progression."""


# ── exhaustive r₃ ─────────────────────────────────────────────────────────────

R3_EXHAUSTIVE_CAP = 32


@functools.lru_cache(maxsize=None)
def r3_exhaustive(N: int) -> tuple[int, GSet]:
    """(r₃(N), witness): the largest progression-free subset of {1..N}.

    Depth-first search over subsets in ascending element order, pruning on
    the span bound |chosen| + (N − x + 1).  Keeps the first maximum found,
    i.e. the lexicographically least witness.  The witness is re-verified
    through the exact count T₃(1_W) = |W|.
    """
    if not 1 <= N <= R3_EXHAUSTIVE_CAP:
        raise ValueError(f"exhaustive search supports 1 ≤ N ≤ {R3_EXHAUSTIVE_CAP}, got {N}")
    best: list[int] = []
    chosen: list[int] = []
    member = bytearray(N + 1)

    def extend(start: int) -> None:
        nonlocal best
        if len(chosen) > len(best):
            best = chosen.copy()
        for x in range(start, N + 1):
            if len(chosen) + (N - x + 1) <= len(best):
                break
            for b in chosen:
                a = 2 * b - x
                if a >= 1 and member[a]:
                    break
            else:
                chosen.append(x)
                member[x] = 1
                extend(x + 1)
                chosen.pop()
                member[x] = 0

    extend(1)
    witness = GSet(window_group(3 * N), [(x,) for x in best])
    if t3_count(indicator(witness)) != len(witness):
        raise VerificationError("witness failed the exact T₃(1_W) = |W| re-check")
    return len(best), witness


# ── averaging lower bound for T₃ ──────────────────────────────────────────────

def varnavides_lower_bound(
    alpha: Fraction, N: int, M: int, enforce_range: bool = True
) -> Fraction:
    """(α − (r₃(M)+2)/M) · M⁻⁴ · N², exactly.

    Lower bound for T₃(f) over f : [N] → [0,1] of average α, valid under
    M ≤ N^{1/10}/2 (checked as the integer power comparison (2M)^10 ≤ N).
    `enforce_range=False` skips that gate and just evaluates the expression;
    callers then owe an exact direct comparison against a computed T₃, which
    replaces the proof-side precondition at desk-scale N.
    """
    alpha = Fraction(alpha)
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0,1], got {alpha}")
    if N < 1:
        raise ValueError(f"N must be ≥ 1, got {N}")
    if not 1 <= M <= R3_EXHAUSTIVE_CAP:
        raise ValueError(f"need 1 ≤ M ≤ {R3_EXHAUSTIVE_CAP} for an exact r₃(M), got {M}")
    if enforce_range and (2 * M) ** 10 > N:
        raise PreconditionError(f"need (2M)^10 = {(2 * M) ** 10} ≤ N = {N}")
    r3_M, _ = r3_exhaustive(M)
    return (alpha - Fraction(r3_M + 2, M)) * Fraction(N * N, M**4)


def t3_interval_closed_form(N: int) -> int:
    """T₃(1_{[N]}) = ⌈N²/2⌉: pairs (x,y) with x, y, 2y−x all in {1..N}."""
    if N < 1:
        raise ValueError(f"N must be ≥ 1, got {N}")
    return (N * N + 1) // 2


# ── smoothed T₃ along a certified progression ─────────────────────────────────

def _length_constant(length: int, epsilon: Fraction, alpha: Fraction, N: int) -> float:
    """Largest c with c·exp(c·(ε²ln N / ln(4/α))^{1/3}) ≤ |P|, by bisection."""
    u = (float(epsilon) ** 2 * math.log(N) / math.log(float(4 / alpha))) ** (1 / 3) if N > 1 else 0.0
    lo, hi = 0.0, 1.0
    while hi * math.exp(hi * u) <= length:
        hi *= 2
    for _ in range(80):
        mid = (lo + hi) / 2
        if mid * math.exp(mid * u) <= length:
            lo = mid
        else:
            hi = mid
    return lo


def t3_approx_progression(
    A: GSet,
    epsilon: Fraction,
    cfg: SearchConfig = SearchConfig(),
    N: int | None = None,
    k_override: int | None = None,
) -> tuple[Progression, dict]:
    """Symmetric progression P ⊆ [−N/8, N/8] with |T₃(1_A*μ_P) − T₃(1_A)| ≤ ε|A|².

    P is the radius-⌊r/4⌋ clip of the progression of almost periods of 1_A*1_A
    at parameter ε², so its 4-fold sumset stays inside that progression and
    |P| ≥ |Q|/8.  Both T₃ values and the deviation are exact rationals
    (T₃(1_A*μ_P) = T₃(1_A*1_P)/|P|³); the ε|A|² comparison is a hard check.
    When N is omitted it is taken to be max(A).
    """
    epsilon = Fraction(epsilon)
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0,1], got {epsilon}")
    if A.group.kind != "window":
        raise GroupError("needs an integer-window group")
    if not len(A):
        raise ValueError("A must be nonempty")
    if N is None:
        N = max(a[0] for a in A)
    delta = epsilon**2

    Q, cert = ap_of_almost_periods(A, N, delta, cfg=cfg, k_override=k_override)
    P = clip_symmetric(Q, Q.radius() // 4)

    bound3 = 3 * N
    P_set = with_window_bound(P.to_gset(), bound3)
    Q_set = with_window_bound(Q.to_gset(), bound3)
    if not iterated_product(P_set, 4).subset_of(Q_set):
        raise VerificationError("4-fold sum of P escapes the parent progression")
    if 8 * P.length < Q.length:
        raise VerificationError(f"|P| = {P.length} < |Q|/8 = {Fraction(Q.length, 8)}")
    if any(8 * abs(p[0]) > N for p in P_set):
        raise VerificationError("P escapes [−N/8, N/8]")

    A_w = with_window_bound(A, bound3)
    t3_exact = t3_count(indicator(A_w))
    t3_smoothed = Fraction(t3_count(convolve_sets([A_w, P_set])), P.length**3)
    deviation = abs(t3_smoothed - t3_exact)
    alpha = Fraction(len(A), N)
    bound = epsilon * len(A) ** 2
    if deviation > bound:
        raise VerificationError(f"deviation {deviation} exceeds ε|A|² = {bound}")
    sharp_bound = delta * len(A) ** 2  # the triangle/Cauchy–Schwarz chain gives ε²|A|²
    report = {
        "N": N,
        "alpha": alpha,
        "epsilon": epsilon,
        "delta_param": delta,
        "Q": Q.to_payload(),
        "P": P.to_payload(),
        "t3_exact": t3_exact,
        "t3_smoothed": t3_smoothed,
        "deviation": deviation,
        "bound": bound,
        "within_bound": True,
        "sharp_bound": sharp_bound,
        "within_sharp": deviation <= sharp_bound,
        "length_constant": _length_constant(P.length, epsilon, alpha, N),
        "certificate": cert,
    }
    return P, report


# ── one density-increment step ────────────────────────────────────────────────

@dataclass(frozen=True)
class IncrementStep:
    """Outcome of one increment attempt: density of A on the best translate x−P.

    `new_density` = |A ∩ (x−P)|/|P| exactly; `passed` records whether it
    reached δ⁻¹·alpha (10/9·alpha in fixed mode); `rescaled` is the affine
    image of A ∩ (x−P) in {1..|P|}, ready for iteration.
    """

    N: int
    alpha: Fraction
    P: Progression
    x: Element
    new_density: Fraction
    passed: bool
    rescaled: GSet
    report: dict = field(compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.new_density <= 1:
            raise ValueError(f"new_density must lie in [0,1], got {self.new_density}")
        if self.new_density != Fraction(len(self.rescaled), self.P.length):
            raise ValueError("new_density must equal |rescaled|/|P| exactly")
        if any(not 1 <= a[0] <= self.P.length for a in self.rescaled):
            raise ValueError("rescaled set must lie in {1..|P|}")


def _require_3ap_free(A: GSet, N: int) -> int:
    t3 = t3_count(indicator(with_window_bound(A, 3 * N)))
    if t3 != len(A):
        raise Not3APFreeError(
            f"T₃(1_A) = {t3} > |A| = {len(A)}: A contains a nontrivial three-term progression"
        )
    return t3


def density_increment_step(
    A: GSet,
    mode: str = "fixed_10_9",
    cfg: SearchConfig = SearchConfig(),
    *,
    delta: Fraction | None = None,
    M: int | None = None,
    c1: Fraction = Fraction(1, 8),
    N: int | None = None,
    k_override: int | None = None,
    progression_override: Progression | None = None,
) -> IncrementStep:
    """One density-increment step on a progression-free A ⊆ {1..N}.

    The smoothing progression P comes from `t3_approx_progression` at
    ε = c1·alpha (or from `progression_override`, for driving the scan with a
    hand-picked P).  The translate x maximising |A ∩ (x−P)| is certified by
    exhaustive scan over every x with a nonempty intersection; ties go to the
    smallest x.  Modes: "fixed_10_9" (δ = 9/10, M = 10) or "custom" with
    explicit δ ∈ (0,1) and M.  Failure to reach δ⁻¹·alpha is not an error:
    the step comes back with passed=False and the maximum density found.
    """
    if A.group.kind != "window":
        raise GroupError("needs an integer-window group")
    if not len(A):
        raise ValueError("A must be nonempty")
    if N is None:
        N = max(a[0] for a in A)
    if not all(1 <= a[0] <= N for a in A):
        raise ValueError("need A ⊆ {1,…,N}")
    if mode == "fixed_10_9":
        if delta is not None or M is not None:
            raise ValueError("fixed_10_9 has δ = 9/10 and M = 10 built in")
        delta, M = Fraction(9, 10), 10
    elif mode == "custom":
        if delta is None or M is None:
            raise ValueError("custom mode needs explicit delta and M")
        delta = Fraction(delta)
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0,1), got {delta}")
    else:
        raise ValueError(f"mode must be 'fixed_10_9' or 'custom', not {mode!r}")

    _require_3ap_free(A, N)
    alpha = Fraction(len(A), N)
    c1 = Fraction(c1)
    if c1 <= 0:
        raise ValueError(f"c1 must be positive, got {c1}")
    epsilon = c1 * alpha
    if epsilon > 1:
        raise PreconditionError(f"c1·alpha = {epsilon} exceeds 1; lower c1")

    if progression_override is not None:
        P = progression_override
        if P.group.kind != "window":
            raise GroupError("override progression needs an integer-window group")
        if not P.symmetric_through_zero:
            raise ValueError("override progression must be symmetric through 0")
        if any(8 * abs(p[0]) > N for p in P.elements()):
            raise ValueError("override progression escapes [−N/8, N/8]")
        t3_report, source = None, "override"
    else:
        P, t3_report = t3_approx_progression(A, epsilon, cfg=cfg, N=N, k_override=k_override)
        source = "pipeline"

    members = frozenset(a[0] for a in A)
    pvals = sorted(p[0] for p in P.elements())
    best_x, best_count = None, -1
    # every x with A ∩ (x−P) ≠ ∅ lies in A+P, so this scan is exhaustive
    for x in sorted({a + p for a in members for p in pvals}):
        count = sum(1 for p in pvals if x - p in members)
        if count > best_count:
            best_x, best_count = x, count

    new_density = Fraction(best_count, P.length)
    threshold = alpha / delta
    passed = new_density >= threshold

    radius = P.radius()
    if P.length == 1:
        positions = [1]
    else:
        d = P.step[0]
        positions = sorted(
            (best_x - a) // d + radius + 1
            for a in members
            if (best_x - a) % d == 0 and abs((best_x - a) // d) <= radius
        )
    if len(positions) != best_count:
        raise VerificationError("rescaling lost elements of A ∩ (x−P)")
    rescaled = GSet(window_group(3 * P.length), [(p,) for p in positions])
    # an affine map with nonzero step carries progressions to progressions
    if t3_count(indicator(rescaled)) != len(rescaled):
        raise VerificationError("rescaled set failed its progression-freeness re-check")

    r3_M, _ = r3_exhaustive(M)
    varnavides_side = (Fraction(4, 5) * delta - Fraction(r3_M + 2, M)) * Fraction(N * N, M**4)
    smoothing_upper_side = 2 * delta**3 * epsilon * N * N / alpha
    report = {
        "source": source,
        "mode": mode,
        "c1": c1,
        "epsilon": epsilon,
        "delta": delta,
        "M": M,
        "r3_M": r3_M,
        "threshold": threshold,
        "max_count": best_count,
        "max_density": new_density,
        "varnavides_side": varnavides_side,
        "smoothing_upper_side": smoothing_upper_side,
        "contradiction_forced": varnavides_side > smoothing_upper_side,
        "epsilon_ge_inv_A": epsilon >= Fraction(1, len(A)),
        "t3_report": t3_report,
    }
    return IncrementStep(
        N=N, alpha=alpha, P=P, x=(best_x,), new_density=new_density,
        passed=passed, rescaled=rescaled, report=report,
    )


def density_increment_run(
    A: GSet,
    mode: str = "fixed_10_9",
    cfg: SearchConfig = SearchConfig(),
    *,
    delta: Fraction | None = None,
    M: int | None = None,
    c1: Fraction = Fraction(1, 8),
    N: int | None = None,
    k_override: int | None = None,
    max_steps: int = 64,
) -> dict:
    """Iterate increment steps until one fails or the inner machinery gives out.

    Each rescaled set lives in {1..|P|}, which becomes the next step's N.  The
    number of passed steps is compared against log(N/r₃(N))/log(δ⁻¹) whenever
    N is small enough for an exact r₃(N).
    """
    steps: list[IncrementStep] = []
    current, current_N = A, N
    stopped = "max_steps reached"
    for _ in range(max_steps):
        try:
            step = density_increment_step(
                current, mode, cfg, delta=delta, M=M, c1=c1, N=current_N,
                k_override=k_override,
            )
        except (DensityTooLowError, PreconditionError) as e:
            stopped = f"parameter-conditional: {e}"
            break
        steps.append(step)
        if not step.passed:
            stopped = "increment failed"
            break
        if step.P.length < 3:
            stopped = "progression too short to iterate"
            break
        current, current_N = step.rescaled, step.P.length

    N0 = N if N is not None else max(a[0] for a in A)
    d0 = Fraction(9, 10) if mode == "fixed_10_9" else Fraction(delta)
    if N0 <= R3_EXHAUSTIVE_CAP:
        r3_N0, _ = r3_exhaustive(N0)
        bound = math.log(N0 / r3_N0) / math.log(1 / float(d0))
    else:
        bound = None
    passed_steps = sum(1 for s in steps if s.passed)
    return {
        "steps": steps,
        "stopped": stopped,
        "passed_steps": passed_steps,
        "iteration_bound": bound,
        "within_bound": None if bound is None else passed_steps <= bound,
    }
