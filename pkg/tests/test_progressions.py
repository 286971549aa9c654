"""Collision-based progression generation and its sumset supports."""

from fractions import Fraction

import pytest

from aplab.convtable import convolve_sets, translation_defect
from aplab.enclosures import exp_enclosure, ln_enclosure, nth_root_enclosure
from aplab.groups import (
    GSet,
    GroupError,
    full_set,
    interval,
    inverse_set,
    iterated_product,
    parse_group,
    product_set,
    window_group,
)
from aplab.periods import SearchConfig
from aplab.progressions import (
    DensityTooLowError,
    Progression,
    ap_of_almost_periods,
    choose_ap_depth,
    clip_symmetric,
    doubling_constant,
    find_ap_in_iterated_difference,
    span_of_symmetric_set,
    symmetric_progression,
    verify_dilate_bound,
)
from aplab.sampling import SplitMix64, sample_subset


# ── Progression type ─────────────────────────────────────────────────────────

def test_progression_invariants():
    z8 = parse_group("Z%8")
    p = Progression(z8, (0,), (2,), 4)
    assert p.elements() == [(0,), (2,), (4,), (6,)]
    with pytest.raises(ValueError):  # 0,2,4,6,0 wraps onto itself
        Progression(z8, (0,), (2,), 5)
    with pytest.raises(ValueError):  # zero step
        Progression(z8, (0,), (0,), 2)
    with pytest.raises(ValueError):  # length must be positive
        Progression(z8, (0,), (1,), 0)
    with pytest.raises(GroupError):  # nonabelian
        Progression(parse_group("S:3"), (0, 1, 2), (1, 0, 2), 2)


def test_symmetric_progression():
    w = window_group(50)
    p = symmetric_progression(w, (3,), 2)
    assert sorted(p.elements()) == [(-6,), (-3,), (0,), (3,), (6,)]
    assert p.radius() == 2 and p.length == 5 and p.symmetric_through_zero
    assert (0,) in p.elements()
    with pytest.raises(ValueError):  # even length can't be symmetric through 0
        Progression(w, (0,), (1,), 2, symmetric_through_zero=True)
    with pytest.raises(ValueError):  # off-centre base
        Progression(w, (0,), (1,), 3, symmetric_through_zero=True)
    q = clip_symmetric(p, 1)
    assert sorted(q.elements()) == [(-3,), (0,), (3,)] and q.step == p.step
    with pytest.raises(ValueError):
        clip_symmetric(p, 3)
    plain = Progression(w, (1,), (1,), 4)
    with pytest.raises(ValueError):
        plain.radius()


def test_progression_payload_and_gset():
    p = symmetric_progression(window_group(20), (2,), 1)
    assert p.to_payload() == {
        "group": "Z_window:20",
        "base": [-2],
        "step": [2],
        "length": 3,
        "symmetric_through_zero": True,
    }
    assert p.to_gset().elements == ((-2,), (0,), (2,))


def test_doubling_constant_interval():
    S = interval(window_group(100), 0, 9)
    assert doubling_constant(S) == Fraction(19, 10)


# ── collision search ─────────────────────────────────────────────────────────

def test_interval_collision_k1():
    A = interval(window_group(100), 0, 19)
    p = find_ap_in_iterated_difference(A, A, 1)
    assert p.symmetric_through_zero and p.length == 5 and abs(p.step[0]) == 1
    diff = product_set(A, inverse_set(A))
    assert p.step in diff and p.step != (0,)
    for x in p.elements():
        assert x in diff  # kA−kA with k=1


def test_interval_collision_k2():
    n = 512
    A = interval(window_group(4 * n), 0, n - 1)
    p = find_ap_in_iterated_difference(A, A, 2)
    assert p.length == 9 and abs(p.step[0]) == 1
    twoA = iterated_product(A, 2)
    container = product_set(twoA, inverse_set(twoA))
    assert all(x in container for x in p.elements())


def test_full_cyclic_group_any_k():
    G = parse_group("Z%64")
    F = full_set(G)
    p = find_ap_in_iterated_difference(F, F, 2)
    assert p.length == 9
    assert all(x in F for x in p.elements())
    p1 = find_ap_in_iterated_difference(full_set(parse_group("Z%16")), full_set(parse_group("Z%16")), 1)
    assert p1.length == 5


def test_collision_preconditions():
    w = window_group(200)
    A = GSet(w, [(0,), (7,), (31,)])
    S = interval(w, 0, 99)
    with pytest.raises(DensityTooLowError):
        find_ap_in_iterated_difference(A, S, 1)
    with pytest.raises(ValueError):
        find_ap_in_iterated_difference(S, S, 0)
    with pytest.raises(ValueError):  # A ⊄ S
        find_ap_in_iterated_difference(interval(w, 0, 120), S, 1)
    s3 = parse_group("S:3")
    with pytest.raises(GroupError):
        find_ap_in_iterated_difference(full_set(s3), full_set(s3), 1)


def test_pigeonhole_random_instances():
    """Whenever the counting gate opens, a collision is found and verified."""
    rng = SplitMix64(414)
    ran = 0
    for N in (24, 36, 48, 60):
        G = parse_group(f"Z%{N}")
        allpts = full_set(G).elements
        for trial in range(6):
            A = GSet(G, sample_subset(rng, allpts, 2 * N // 3))
            S = full_set(G)
            K = doubling_constant(S)
            E = 3
            if len(A) ** 2 * K.denominator**E > K.numerator**E * len(S):
                p = find_ap_in_iterated_difference(A, S, 1)
                diff = product_set(A, inverse_set(A))
                assert all(x in diff for x in p.elements())
                assert p.step in diff
                ran += 1
    assert ran >= 12


# ── dilate bound ─────────────────────────────────────────────────────────────

def test_dilate_bound_two_points():
    A = GSet(window_group(10), [(0,), (1,)])
    rep = verify_dilate_bound(A, 1)
    assert rep == {"K": Fraction(3, 2), "k": 1, "lhs": 4, "rhs": Fraction(27, 4), "holds": True}


def test_dilate_bound_subgroup_tight():
    G = parse_group("Z%16")
    A = GSet(G, [(0,), (4,), (8,), (12,)])
    rep = verify_dilate_bound(A, 2)
    assert rep["K"] == 1 and rep["lhs"] == 4 and rep["rhs"] == 4 and rep["holds"]


def test_dilate_bound_random():
    rng = SplitMix64(515)
    for N in (20, 33, 47):
        G = parse_group(f"Z%{N}")
        allpts = full_set(G).elements
        for trial in range(5):
            A = GSet(G, sample_subset(rng, allpts, 5 + trial))
            for k in (1, 2, 3):
                assert verify_dilate_bound(A, k)["holds"]


def test_dilate_bound_validation():
    with pytest.raises(ValueError):
        verify_dilate_bound(GSet(window_group(10), [(0,), (1,)]), 0)


# ── subspace generation in vector groups ─────────────────────────────────────

def test_span_of_symmetric_set():
    V = parse_group("F:3^3")
    X = GSet(V, [(1, 0, 0), (2, 0, 0), (0, 1, 0), (0, 2, 0)])
    S = span_of_symmetric_set(X)
    assert len(S) == 9
    assert X.subset_of(S)
    assert product_set(S, S) == S  # closed under addition
    assert inverse_set(S) == S
    zero_only = span_of_symmetric_set(GSet(V, [(0, 0, 0)]))
    assert zero_only.elements == ((0, 0, 0),)
    with pytest.raises(ValueError):
        span_of_symmetric_set(full_set(parse_group("F:2^5")), max_order=16)
    with pytest.raises(GroupError):
        span_of_symmetric_set(GSet(parse_group("Z%9"), [(1,)]))


# ── almost-periods → progression pipeline ────────────────────────────────────

def test_ap_depth_threshold():
    assert choose_ap_depth(128, 128, Fraction(1, 2)) == 0  # desk scale: gate shut
    assert choose_ap_depth(10**40, 10**40, Fraction(1)) == 1
    assert choose_ap_depth(10**400, 10**400, Fraction(1)) >= 2


def test_ap_pipeline_interval_sampled():
    N = 64
    A = interval(window_group(3 * N), 1, N)
    cfg = SearchConfig(seed=0, attempts_ceiling=40, on_exhausted="fallback")
    P, cert = ap_of_almost_periods(A, N, Fraction(3, 4), cfg=cfg, k_override=1)
    assert cert.mode == "sampled" and cert.attempts_used == 3 and len(cert.T) == 34
    assert abs(P.step[0]) == 1 and P.length == 5 and P.symmetric_through_zero
    # independent re-verification of the advertised guarantee
    f = convolve_sets([cert.A, cert.A])
    limit = Fraction(9, 16) * N**3
    for t in P.elements():
        assert translation_defect(f, t, "right", 2).value <= limit
        assert abs(t[0]) <= N // 2
    assert translation_defect(f, (0,), "right", 2).value == 0


def test_ap_pipeline_fallback_mode():
    N = 128
    A = interval(window_group(3 * N), 1, 96)
    cfg = SearchConfig(seed=0, attempts_ceiling=10, on_exhausted="fallback")
    P, cert = ap_of_almost_periods(A, N, Fraction(1, 2), cfg=cfg, k_override=1)
    assert cert.mode == "fallback" and cert.attempts_used == 10 and len(cert.T) == 38
    assert abs(P.step[0]) == 1 and P.length == 5


def test_ap_pipeline_structured_step_multiple():
    """A lying on 2ℤ forces the progression step onto 2ℤ as well."""
    N = 128
    A = GSet(window_group(3 * N), [(2 * i,) for i in range(1, 65)])
    cfg = SearchConfig(seed=1, attempts_ceiling=25, on_exhausted="fallback")
    P, cert = ap_of_almost_periods(A, N, Fraction(9, 10), cfg=cfg, k_override=1)
    assert cert.mode == "sampled" and len(cert.T) == 42
    assert P.step[0] % 2 == 0 and P.step[0] != 0
    assert all(x[0] % 2 == 0 for x in P.elements())


def test_ap_pipeline_random_half_density():
    N, delta = 128, Fraction(1, 2)
    rng = SplitMix64(902)
    pts = sample_subset(rng, [(i,) for i in range(1, N + 1)], 64)
    A = GSet(window_group(3 * N), pts)
    cfg = SearchConfig(seed=2, attempts_ceiling=25, on_exhausted="fallback")
    P, cert = ap_of_almost_periods(A, N, delta, cfg=cfg, k_override=1)
    assert cert.mode == "sampled" and len(cert.T) == 45
    f = convolve_sets([cert.A, cert.A])
    limit = delta**2 * 64**3
    for t in P.elements():
        assert translation_defect(f, t, "right", 2).value <= limit

    # size target exp((1/14)(δ²·ln N / ln(4/α))^{1/3}): certified via enclosures
    lnN = ln_enclosure(Fraction(N))
    ln4a = ln_enclosure(Fraction(8))  # 4/α = 8 at α = 1/2
    ratio_hi = delta**2 * lnN[1] / ln4a[0]
    cube_hi = nth_root_enclosure(ratio_hi, 3)[1]
    target_hi = exp_enclosure(cube_hi / 14)[1]
    assert P.length >= target_hi


def test_ap_pipeline_inner_density_failure():
    """Dense interval at δ=1/2: the sampled T is too small for the collision gate."""
    N = 128
    A = interval(window_group(3 * N), 1, N)
    cfg = SearchConfig(seed=0, attempts_ceiling=40, on_exhausted="fallback")
    with pytest.raises(DensityTooLowError, match=r"\|A\|\^2 = 529"):
        ap_of_almost_periods(A, N, Fraction(1, 2), cfg=cfg, k_override=1)


def test_ap_pipeline_validation_and_gate():
    N = 128
    A = interval(window_group(3 * N), 1, N)
    with pytest.raises(DensityTooLowError):  # real gate: no k ≥ 1 at desk scale
        ap_of_almost_periods(A, N, Fraction(1, 2))
    with pytest.raises(ValueError):
        ap_of_almost_periods(A, N, Fraction(3, 2))
    with pytest.raises(ValueError):
        ap_of_almost_periods(A, N, Fraction(1, 2), k_override=0)
    with pytest.raises(ValueError):  # A ⊄ [N]
        ap_of_almost_periods(interval(window_group(3 * N), 0, 5), N, Fraction(1, 2), k_override=1)
    with pytest.raises(GroupError):
        ap_of_almost_periods(GSet(parse_group("Z%128"), [(1,)]), 128, Fraction(1, 2), k_override=1)


def test_ap_pipeline_deterministic():
    N = 64
    A = interval(window_group(3 * N), 1, N)
    cfg = SearchConfig(seed=0, attempts_ceiling=40, on_exhausted="fallback")
    P1, c1 = ap_of_almost_periods(A, N, Fraction(3, 4), cfg=cfg, k_override=1)
    P2, c2 = ap_of_almost_periods(A, N, Fraction(3, 4), cfg=cfg, k_override=1)
    assert P1 == P2 and c1 == c2
