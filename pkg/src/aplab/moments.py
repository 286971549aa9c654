"""Exact hypergeometric/binomial distribution arithmetic and moment bounds.

Everything is big-rational: pmfs, means, central moments, and the closed-form
moment bounds they are checked against.  Exponential deviation bounds are
evaluated as outward-rounded rational enclosures so that "exact tail ≤ bound"
is a sound comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .enclosures import exp_enclosure


@dataclass(frozen=True)
class HypergeomParams:
    """Population N, marked M, draws k (without replacement)."""

    N: int
    M: int
    k: int

    def __post_init__(self) -> None:
        if not (self.N >= 1 and 0 <= self.M <= self.N and 0 <= self.k <= self.N):
            raise ValueError(f"need 1 ≤ N, 0 ≤ M ≤ N, 0 ≤ k ≤ N; got {self}")

    @property
    def mean(self) -> Fraction:
        return Fraction(self.k * self.M, self.N)


@dataclass(frozen=True)
class BinomialParams:
    """n trials with rational success probability p."""

    n: int
    p: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", Fraction(self.p))
        if not (self.n >= 1 and 0 <= self.p <= 1):
            raise ValueError(f"need n ≥ 1 and 0 ≤ p ≤ 1; got {self}")

    @property
    def mean(self) -> Fraction:
        return self.n * self.p


def hypergeom_pmf(params: HypergeomParams, j: int) -> Fraction:
    """P(X = j) = C(M,j)·C(N−M,k−j)/C(N,k); zero off-support."""
    N, M, k = params.N, params.M, params.k
    if j < 0 or j > M or k - j < 0 or k - j > N - M:
        return Fraction(0)
    return Fraction(math.comb(M, j) * math.comb(N - M, k - j), math.comb(N, k))


def binom_pmf(params: BinomialParams, j: int) -> Fraction:
    if j < 0 or j > params.n:
        return Fraction(0)
    p = params.p
    return math.comb(params.n, j) * p**j * (1 - p) ** (params.n - j)


def central_moment_exact(dist: HypergeomParams | BinomialParams, order: int) -> Fraction:
    """E|X − EX|^order for even order, by exact pmf summation."""
    if order < 2 or order % 2:
        raise ValueError(f"order must be a positive even integer, got {order}")
    if isinstance(dist, HypergeomParams):
        support = range(max(0, dist.k - (dist.N - dist.M)), min(dist.M, dist.k) + 1)
        pmf = lambda j: hypergeom_pmf(dist, j)  # noqa: E731
    else:
        support = range(dist.n + 1)
        pmf = lambda j: binom_pmf(dist, j)  # noqa: E731
    mean = dist.mean
    return sum((pmf(j) * (j - mean) ** order for j in support), Fraction(0))


def hyper_moment_bound(params: HypergeomParams, m: int) -> Fraction:
    """2·(3m·kM/N + m²)^m, the closed-form cap on E|X − kM/N|^{2m}."""
    if m < 1:
        raise ValueError("m must be ≥ 1")
    return 2 * (3 * m * params.mean + m * m) ** m


def binom_moment_bound(params: BinomialParams, m: int) -> Fraction:
    """2·(3m·np + m²)^m, the binomial analogue."""
    if m < 1:
        raise ValueError("m must be ≥ 1")
    return 2 * (3 * m * params.mean + m * m) ** m


def binom_deviation(params: BinomialParams, t: Fraction, tail: str) -> Fraction:
    """Certified rational upper enclosure of the deviation bound.

    tail="lower": P(X ≤ np − t) ≤ exp(−t²/(2np));
    tail="upper": P(X ≥ np + t) ≤ exp(−t²/(2(np + t/3))).
    """
    t = Fraction(t)
    if t < 0:
        raise ValueError("t must be ≥ 0")
    np = params.mean
    if tail == "lower":
        if np == 0:
            return Fraction(1) if t == 0 else Fraction(0)  # X ≡ 0: only t=0 is reachable
        if t == 0:
            return Fraction(1)
        return exp_enclosure(-t * t / (2 * np))[1]
    if tail == "upper":
        if np == 0 and t == 0:
            return Fraction(1)
        if t == 0:
            return Fraction(1)
        return exp_enclosure(-t * t / (2 * (np + t / 3)))[1]
    raise ValueError(f"tail must be 'lower' or 'upper', not {tail!r}")


def binom_tail_exact(params: BinomialParams, t: Fraction, tail: str) -> Fraction:
    """Exact P(X ≥ np + t) or P(X ≤ np − t) by pmf summation."""
    t = Fraction(t)
    np = params.mean
    if tail == "upper":
        return sum((binom_pmf(params, j) for j in range(params.n + 1) if j >= np + t), Fraction(0))
    if tail == "lower":
        return sum((binom_pmf(params, j) for j in range(params.n + 1) if j <= np - t), Fraction(0))
    raise ValueError(f"tail must be 'lower' or 'upper', not {tail!r}")


def gamma_factorial_bound_holds(m: int) -> bool:
    """Γ(m+1) ≤ 2·(3m/5)^m, i.e. m!·5^m ≤ 2·(3m)^m, decided exactly."""
    if m < 1:
        raise ValueError("m must be ≥ 1")
    return math.factorial(m) * 5**m <= 2 * (3 * m) ** m


# ── grid verification (shared by the acceptance suite and the CLI) ───────────

def verify_moment_grid(max_N: int = 40, max_m: int = 4) -> tuple[bool, list[dict]]:
    """Hypergeometric grid: exact moment vs closed-form bound vs binomial cap.

    Returns (all_pass, rows); each row carries exact values as Fractions.
    """
    rows = []
    all_pass = True
    for N in range(1, max_N + 1):
        for M in range(N + 1):
            for k in range(N + 1):
                hp = HypergeomParams(N, M, k)
                mean = hp.mean
                support = range(max(0, k - (N - M)), min(M, k) + 1)
                hp_pmf = [(j, hypergeom_pmf(hp, j)) for j in support]
                if k >= 1:
                    bp = BinomialParams(k, Fraction(M, N))
                    bp_pmf = [(j, binom_pmf(bp, j)) for j in range(k + 1)]
                else:
                    bp_pmf = None
                for m in range(1, max_m + 1):
                    exact = sum((p * (j - mean) ** (2 * m) for j, p in hp_pmf), Fraction(0))
                    bound = hyper_moment_bound(hp, m)
                    ok = exact <= bound
                    hoeffding_ok = True
                    if bp_pmf is not None:
                        binom_exact = sum((p * (j - mean) ** (2 * m) for j, p in bp_pmf), Fraction(0))
                        hoeffding_ok = exact <= binom_exact
                    all_pass = all_pass and ok and hoeffding_ok
                    rows.append(
                        {
                            "N": N,
                            "M": M,
                            "k": k,
                            "m": m,
                            "exact_moment": exact,
                            "bound": bound,
                            "margin": bound - exact,
                            "bound_ok": ok,
                            "hoeffding_ok": hoeffding_ok,
                        }
                    )
    return all_pass, rows


def verify_binom_grid(max_n: int = 30, ps: tuple[Fraction, ...] = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)), max_m: int = 4) -> tuple[bool, list[dict]]:
    """Binomial grid: moment bounds plus both deviation tails at integer t."""
    rows = []
    all_pass = True
    for n in range(1, max_n + 1):
        for p in ps:
            bp = BinomialParams(n, p)
            for m in range(1, max_m + 1):
                exact = central_moment_exact(bp, 2 * m)
                bound = binom_moment_bound(bp, m)
                ok = exact <= bound
                all_pass = all_pass and ok
                rows.append(
                    {"n": n, "p": p, "m": m, "exact_moment": exact, "bound": bound,
                     "margin": bound - exact, "bound_ok": ok}
                )
            for t in range(1, n + 1):
                for tail in ("lower", "upper"):
                    exact_tail = binom_tail_exact(bp, Fraction(t), tail)
                    dev = binom_deviation(bp, Fraction(t), tail)
                    ok = exact_tail <= dev
                    all_pass = all_pass and ok
                    rows.append(
                        {"n": n, "p": p, "t": t, "tail": tail, "exact_tail": exact_tail,
                         "bound": dev, "margin": dev - exact_tail, "bound_ok": ok}
                    )
    return all_pass, rows
