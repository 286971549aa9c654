"""Almost-period search: sampling, approximation tests, certificates, oracle."""

import itertools
import math
from fractions import Fraction

import pytest

from aplab.convtable import convolve_sets, translation_defect
from aplab.groups import (
    GSet,
    Group,
    full_set,
    interval,
    inverse_set,
    iterated_product,
    parse_group,
    product_set,
    union,
    window_group,
)
from aplab.moments import HypergeomParams, hypergeom_pmf
from aplab.periods import (
    AttemptsExhaustedError,
    PreconditionError,
    SearchConfig,
    approximates_l2,
    approximates_l2m,
    brute_force_periods,
    choose_k,
    find_almost_periods,
    greedy_certified_subset,
    l2m_lambda,
    lambda_inequality_report,
    sample_k_subset,
    theorem_bound_rhs,
    verify_certificate,
)
from aplab.sampling import SplitMix64


def cyc(n):
    return Group("cyclic", (n,))


def gset(g, xs):
    return GSet(g, [(x,) if isinstance(x, int) else tuple(x) for x in xs])


# ── k and sampling ───────────────────────────────────────────────────────────


def test_choose_k():
    assert choose_k(Fraction(1, 2), 1) == 32
    assert choose_k(Fraction(19, 20), 1) == 9
    assert choose_k(Fraction(1, 2), 2) == 196
    assert choose_k(Fraction(99, 100), 2) == 99


def test_sample_k_subset_extremes():
    g = cyc(16)
    A = gset(g, range(10))
    rng = SplitMix64(3)
    assert sample_k_subset(A, 10, rng) == A
    single = sample_k_subset(A, 1, SplitMix64(4))
    assert len(single) == 1 and single.subset_of(A)
    with pytest.raises(ValueError):
        sample_k_subset(A, 11, rng)
    with pytest.raises(ValueError):
        sample_k_subset(A, 0, rng)


def test_sample_inclusion_frequency_binomial():
    g = cyc(32)
    A = gset(g, range(20))
    rng = SplitMix64(777)
    fixed = (7,)
    runs, k = 10_000, 5
    hits = sum(1 for _ in range(runs) if fixed in sample_k_subset(A, k, rng))
    p = k / len(A)
    assert abs(hits - runs * p) < 5 * math.sqrt(runs * p * (1 - p))


def test_sampled_value_matches_hypergeometric_pmf():
    # 1_C*1_B(x) over uniform k-subsets C ⊆ A is hypergeometric(|A|, 1_A*1_B(x), k)
    g = cyc(32)
    A = gset(g, range(20))
    B = gset(g, range(5))
    x = (7,)
    f = convolve_sets([A, B])
    M = f.value(x)
    assert M == 5  # x=7 has A-preimages 3..7 within B-shifts
    k, runs = 6, 10_000
    hp = HypergeomParams(len(A), M, k)
    rng = SplitMix64(2024)
    counts = {}
    for _ in range(runs):
        C = sample_k_subset(A, k, rng)
        j = convolve_sets([C, B]).value(x)
        counts[j] = counts.get(j, 0) + 1
    for j in range(min(M, k) + 1):
        p = float(hypergeom_pmf(hp, j))
        sigma = math.sqrt(runs * p * (1 - p))
        assert abs(counts.get(j, 0) - runs * p) <= 5 * sigma


# ── approximation tests ──────────────────────────────────────────────────────


def test_approximates_full_sample_is_exact():
    g = cyc(16)
    A = gset(g, range(8))
    B = gset(g, [0, 1, 5])
    assert approximates_l2(A, A, B, len(A))
    assert approximates_l2m(A, A, B, len(A), 2)
    with pytest.raises(ValueError):
        approximates_l2(A, A, B, 3)


def test_approximates_l2_expectation_exhaustive():
    # E_C ‖μ_C*1_B − 1_A*1_B‖₂² ≤ |A|²|B|/k over all k-subsets, |A| ≤ 12
    g = cyc(16)
    A = gset(g, range(6))
    B = gset(g, [0, 1])
    k = 3
    f = convolve_sets([A, B])
    a = len(A)
    defects = []
    passes = 0
    for combo in itertools.combinations(A.elements, k):
        C = GSet(g, combo)
        gC = convolve_sets([C, B])
        xs = {x for x, _ in f.entries} | {x for x, _ in gC.entries}
        num = sum((a * gC.value(x) - k * f.value(x)) ** 2 for x in xs)
        defects.append(Fraction(num, k * k))
        if approximates_l2(C, A, B, k):
            passes += 1
    avg = sum(defects, Fraction(0)) / len(defects)
    assert avg <= Fraction(a * a * len(B), k)
    # Markov at twice the mean: at least half of all C pass
    assert 2 * passes >= len(defects)


def test_approximates_l2m_markov_sampled():
    g = cyc(64)
    A = gset(g, range(24))
    B = gset(g, range(6))
    k, m = 8, 2
    rng = SplitMix64(55)
    passes = sum(1 for _ in range(200) if approximates_l2m(sample_k_subset(A, k, rng), A, B, k, m))
    assert passes >= 100


def test_l2m_lambda_m1_consistency():
    # at m=1 the λ-threshold is weaker than the direct L² threshold on any C that passes it
    g = cyc(32)
    A = gset(g, range(12))
    B = gset(g, range(4))
    f = convolve_sets([A, B])
    lam = l2m_lambda(f, len(A), 4, 1)
    assert lam == 2 * Fraction(len(A), 4) * sum(3 * v + Fraction(len(A), 4) for _, v in f.entries)


def test_lambda_inequality_report_holds_on_instances():
    g = cyc(64)
    A = gset(g, range(20))
    B = gset(g, range(8))
    for m in (2, 3):
        rep = lambda_inequality_report(A, B, choose_k(Fraction(1, 2), m), m)
        assert rep["holds"], rep


# ── find_almost_periods: trivial regime ──────────────────────────────────────


def test_subgroup_trivial_certificate():
    g = cyc(16)
    H = gset(g, [0, 4, 8, 12])
    cert = find_almost_periods(H, H, H, Fraction(1, 2), m=1, side="left")
    assert cert.mode == "trivial"
    assert cert.T == H  # H⁻¹ = H, all defects 0
    assert cert.K == 1 and cert.k == 32
    assert cert.attempts_used == 0 and len(cert.C) == 0
    assert verify_certificate(cert)


def test_trivial_dense_window_instance():
    rng = SplitMix64(99)
    g = window_group(300)
    pool = [(v,) for v in range(48)]
    A = GSet(g, [pool[rng.below(48)] for _ in range(40)])  # dense, with repeats dropped
    S = interval(g, 0, 47)
    cert = find_almost_periods(A, A, S, Fraction(1, 2), m=1, side="left")
    assert cert.mode == "trivial"
    f = convolve_sets([A, A])
    bound = Fraction(1, 4) * len(A) ** 3
    for t in product_set(cert.T, inverse_set(cert.T)):
        assert translation_defect(f, t, "left", 2).value <= bound
    assert verify_certificate(cert)


# ── find_almost_periods: sampled regime ──────────────────────────────────────


def sampled_subgroup_instance():
    g = cyc(64)
    H = gset(g, range(0, 64, 2))  # |H| = 32
    return g, H


def test_sampled_subgroup_certificate():
    _, H = sampled_subgroup_instance()
    cfg = SearchConfig(seed=11)
    cert = find_almost_periods(H, H, H, Fraction(19, 20), m=1, side="left", cfg=cfg)
    assert cert.mode == "sampled"
    assert cert.k == 9 and len(cert.C) == 9
    assert cert.K == 1
    assert cert.T == H  # every t ∈ H is a perfect period once C approximates
    assert cert.target_size == 1  # ⌈(1/2)·32/512⌉
    assert not cert.shrink_anomaly
    assert verify_certificate(cert)


def test_sampled_full_target_fraction_paper_bound():
    # |T| ≥ |S|/(2K)^k with τ = 1 on a (2K)^k ≤ 10³ instance
    _, H = sampled_subgroup_instance()
    cfg = SearchConfig(seed=5, target_fraction=Fraction(1))
    cert = find_almost_periods(H, H, H, Fraction(19, 20), m=1, side="left", cfg=cfg)
    assert (2 * cert.K) ** cert.k <= 1000
    assert len(cert.T) >= Fraction(len(H), (2 * cert.K) ** cert.k)


def test_sampled_determinism_and_seed_sensitivity():
    _, H = sampled_subgroup_instance()
    c1 = find_almost_periods(H, H, H, Fraction(19, 20), cfg=SearchConfig(seed=11))
    c2 = find_almost_periods(H, H, H, Fraction(19, 20), cfg=SearchConfig(seed=11))
    assert c1 == c2
    c3 = find_almost_periods(H, H, H, Fraction(19, 20), cfg=SearchConfig(seed=12))
    assert c3.C != c1.C or c3.attempts_used != c1.attempts_used or c3 == c1


def test_sampled_right_variant():
    g = cyc(64)
    H = gset(g, range(0, 64, 2))
    cert = find_almost_periods(H, H, H, Fraction(19, 20), m=1, side="right", cfg=SearchConfig(seed=2))
    assert cert.side == "right"
    assert cert.T.subset_of(H)  # right variant: T ⊆ S
    assert verify_certificate(cert)


def test_attempts_exhausted_and_fallback():
    # seed 0's first draw mixes the two cosets of S·A and certifies nothing
    g = cyc(64)
    A = gset(g, range(18))
    S = gset(g, [0, 32])
    cfg = SearchConfig(seed=0, max_attempts=1)
    with pytest.raises(AttemptsExhaustedError):
        find_almost_periods(A, A, S, Fraction(19, 20), m=1, side="left", cfg=cfg)
    cfg_fb = SearchConfig(seed=0, max_attempts=1, on_exhausted="fallback")
    cert = find_almost_periods(A, A, S, Fraction(19, 20), m=1, side="left", cfg=cfg_fb)
    assert cert.mode == "fallback"
    assert cert.attempts_used == 1
    assert verify_certificate(cert)
    assert (0,) in cert.T  # the identity trivially certifies


def test_precondition_error_with_supplied_K():
    g = cyc(64)
    A = gset(g, range(18))
    S = gset(g, [0, 32])
    with pytest.raises(PreconditionError) as exc:
        find_almost_periods(A, A, S, Fraction(19, 20), K=Fraction(3, 2))
    assert "2" in str(exc.value)  # reports the actual ratio 36/18 = 2


def test_parameter_validation():
    g = cyc(8)
    A = gset(g, [0, 1])
    with pytest.raises(ValueError):
        find_almost_periods(A, A, A, Fraction(3, 2))
    with pytest.raises(ValueError):
        find_almost_periods(A, A, A, Fraction(1, 2), m=0)
    with pytest.raises(ValueError):
        find_almost_periods(A, A, A, Fraction(1, 2), side="up")
    with pytest.raises(ValueError):
        find_almost_periods(A, A, GSet(g, []), Fraction(1, 2))


# ── L^{2m} search ────────────────────────────────────────────────────────────


def test_l2m_trivial_certificate_m2():
    g = cyc(32)
    H = gset(g, range(0, 32, 4))
    cert = find_almost_periods(H, H, H, Fraction(1, 2), m=2, side="left")
    assert cert.mode == "trivial" and cert.m == 2
    assert cert.T == H
    assert verify_certificate(cert)
    assert cert.bound_rhs == theorem_bound_rhs(H, H, Fraction(1, 2), 2, "left")


def test_l2m_sampled_m2():
    # |A| = 224 union of 7 cosets of 8ℤ/256: k = 99·2/… chooses m=2, ε=99/100 → k=198 ≤ |A|/2 = 112? no —
    # use ε close to 1 so k = ⌈49·2/ε⌉ = 99 ≤ 112 with ε = 99/100
    g = cyc(256)
    H = gset(g, range(0, 256, 8))  # |H| = 32
    A = GSet(g, [((h + c) % 256,) for (h,) in H for c in range(7)])  # 7 cosets, |A| = 224
    cert = find_almost_periods(A, A, H, Fraction(99, 100), m=2, side="left", cfg=SearchConfig(seed=9))
    assert cert.mode == "sampled"
    assert cert.k == 99
    assert verify_certificate(cert)


# ── duality and composition ──────────────────────────────────────────────────


def test_left_right_duality_brute():
    g = cyc(20)
    rng = SplitMix64(14)
    A = GSet(g, [( rng.below(20),) for _ in range(8)])
    B = GSet(g, [( rng.below(20),) for _ in range(6)])
    S = GSet(g, [( rng.below(20),) for _ in range(5)])
    for p in (2, 4):
        left = brute_force_periods(inverse_set(B), inverse_set(A), inverse_set(S), Fraction(1, 2), p, "left")
        right = brute_force_periods(A, B, S, Fraction(1, 2), p, "right")
        assert left == inverse_set(right)


def test_select_T_duality_with_reflected_sample():
    from aplab.periods import _select_T

    g = cyc(24)
    A = gset(g, [0, 1, 2, 3, 4, 5, 6, 7, 11])
    B = gset(g, [0, 2, 5, 9])
    S = gset(g, [0, 3, 12])
    k, m = 3, 1
    BS = product_set(B, S)
    C = GSet(g, BS.elements[:k])
    fr = convolve_sets([A, B])
    gr = convolve_sets([A, C])
    right = _select_T(fr, gr, S, k, m, "right", len(B), len(A), None)
    fl = convolve_sets([inverse_set(B), inverse_set(A)])
    gl = convolve_sets([inverse_set(C), inverse_set(A)])
    left = _select_T(fl, gl, inverse_set(S), k, m, "left", len(B), len(A), None)
    assert left == right


def test_triangle_composition_powers():
    g = cyc(16)
    H = gset(g, [0, 4, 8, 12])
    cert = find_almost_periods(H, H, H, Fraction(1, 2))
    f = convolve_sets([H, H])
    D = product_set(cert.T, inverse_set(cert.T))
    for j in (1, 2, 3):
        Dj = iterated_product(D, j)
        for t in Dj:
            assert translation_defect(f, t, "left", 2).value <= j * j * cert.bound_rhs


# ── brute-force oracle ───────────────────────────────────────────────────────


def test_brute_force_basics():
    g = cyc(12)
    H = gset(g, [0, 3, 6, 9])
    out = brute_force_periods(H, H, H, Fraction(1, 2), 2, "left")
    assert out == H  # subgroup: every t is a perfect period
    A = gset(g, [0, 1, 2, 5])
    # identity present whenever it lies in the scanned domain
    assert (0,) in brute_force_periods(A, A, gset(g, [0, 1]), Fraction(1, 2), 2, "left")
    out2 = brute_force_periods(A, A, gset(g, [1, 2]), Fraction(1, 2), 2, "left")
    assert out2.subset_of(union(gset(g, [1, 2]), gset(g, [10, 11])))


def test_brute_force_monotone_in_epsilon():
    g = cyc(24)
    rng = SplitMix64(8)
    A = GSet(g, [(rng.below(24),) for _ in range(9)])
    S = full_set(g)
    prev = None
    for eps in [Fraction(9, 10), Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)]:
        cur = brute_force_periods(A, A, S, eps, 2, "left")
        if prev is not None:
            assert cur.subset_of(prev)
        prev = cur


def test_certificate_TTinv_inside_brute_force():
    # 50 seeded instances: certified T·T⁻¹ always lands inside the oracle set
    g = cyc(64)
    H = gset(g, range(0, 64, 2))
    for seed in range(50):
        cert = find_almost_periods(H, H, H, Fraction(19, 20), cfg=SearchConfig(seed=seed))
        oracle = brute_force_periods(H, H, H, Fraction(19, 20), 2, "left")
        assert product_set(cert.T, inverse_set(cert.T)).subset_of(oracle)


# ── greedy certified subset and tampered certificates ────────────────────────


def test_greedy_certified_subset_exact():
    g = cyc(16)
    A = gset(g, [0, 1, 2, 3])
    f = convolve_sets([A, A])
    cands = gset(g, range(16))
    T = greedy_certified_subset(f, cands, "left", 2, Fraction(0))
    # zero tolerance: only exact periods survive; A+A has trivial stabilizer
    assert T == gset(g, [0])
    T2 = greedy_certified_subset(f, cands, "left", 2, Fraction(10**6))
    assert T2 == cands  # huge budget: everything certifies


def test_verify_certificate_rejects_tampering():
    g, H = cyc(16), None
    H = gset(g, [0, 4, 8, 12])
    cert = find_almost_periods(H, H, H, Fraction(1, 2))
    assert verify_certificate(cert)
    from dataclasses import replace

    bad_T = GSet(g, list(H) + [(1,)])
    assert not verify_certificate(replace(cert, T=bad_T))
    assert not verify_certificate(replace(cert, bound_rhs=cert.bound_rhs + 1))
    assert not verify_certificate(replace(cert, epsilon=Fraction(1, 3)))
