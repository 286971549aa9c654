"""Convolution tables: exactness against brute-force enumeration oracles."""

import itertools
import random
from fractions import Fraction

import pytest

from aplab.convtable import (
    ConvTable,
    convolve,
    convolve_sets,
    energy,
    indicator,
    is_gamma_popular,
    lp_norm_pow,
    reflect,
    t3_count,
    table_to_csv,
    table_to_json,
    translation_defect,
)
from aplab.groups import (
    GroupError,
    GroupMismatchError,
    GSet,
    Group,
    full_set,
    interval,
    inverse_set,
    parse_group,
    product_set,
    translate,
    window_group,
)


def cyc(n):
    return Group("cyclic", (n,))


def gset(g, xs):
    return GSet(g, [(x,) if isinstance(x, int) else tuple(x) for x in xs])


def random_gset(rng, g, size):
    elems = list(g.elements())
    return GSet(g, rng.sample(elems, size))


def random_table(rng, g, size, vmax=3):
    elems = rng.sample(list(g.elements()), size)
    return ConvTable(g, {x: rng.randint(1, vmax) for x in elems})


# ── oracles (independent brute force) ────────────────────────────────────────


def oracle_convolve_sets(sets):
    """Count factorizations by enumerating all tuples."""
    g = sets[0].group
    out = {}
    for combo in itertools.product(*[list(s) for s in sets]):
        x = combo[0]
        for y in combo[1:]:
            x = g.mul(x, y)
        out[x] = out.get(x, 0) + 1
    return out


def oracle_energy(A, B):
    g = A.group
    count = 0
    for a, b, a2, b2 in itertools.product(A, B, A, B):
        if g.mul(a, b) == g.mul(a2, b2):
            count += 1
    return count


def oracle_t3(A):
    """Direct (x, y) enumeration of x, y with 2y − x ∈ A."""
    g = A.group
    count = 0
    for x in A:
        for y in A:
            twoy = g.mul(y, y)
            if g.mul(twoy, g.inv(x)) in A:
                count += 1
    return count


# ── convolve ─────────────────────────────────────────────────────────────────


def test_delta_is_identity():
    g = cyc(9)
    B = gset(g, [2, 3, 7])
    assert convolve(indicator(gset(g, [0])), indicator(B)) == indicator(B)
    assert convolve(indicator(B), indicator(gset(g, [0]))) == indicator(B)


def test_frozen_z5_square():
    g = cyc(5)
    f = indicator(gset(g, [0, 1]))
    assert dict(convolve(f, f).entries) == {(0,): 1, (1,): 2, (2,): 1}


def test_full_sum_identity_random():
    rng = random.Random(7)
    for spec in ["Z%16", "S:3", "D:5", "F:2^3"]:
        g = parse_group(spec)
        n = g.order()
        for _ in range(8):
            A = random_gset(rng, g, rng.randint(1, n))
            B = random_gset(rng, g, rng.randint(1, n))
            assert convolve_sets([A, B]).total() == len(A) * len(B)


def test_full_sum_identity_k4():
    rng = random.Random(11)
    g = parse_group("Z%12")
    sets = [random_gset(rng, g, rng.randint(1, 6)) for _ in range(4)]
    assert convolve_sets(sets).total() == len(sets[0]) * len(sets[1]) * len(sets[2]) * len(sets[3])


def test_convolve_sets_binomial():
    g = cyc(7)
    A = gset(g, [0, 1])
    assert dict(convolve_sets([A, A, A]).entries) == {(0,): 1, (1,): 3, (2,): 3, (3,): 1}


def test_convolve_sets_against_tuple_oracle():
    rng = random.Random(3)
    for spec in ["S:3", "D:4", "Z%24"]:
        g = parse_group(spec)
        n = g.order()
        for _ in range(4):
            sets = [random_gset(rng, g, rng.randint(1, min(6, n))) for _ in range(3)]
            table = convolve_sets(sets)
            assert dict(table.entries) == oracle_convolve_sets(sets)
            assert table.support() == product_set(product_set(sets[0], sets[1]), sets[2])


def test_group_mismatch():
    with pytest.raises(GroupMismatchError):
        convolve(indicator(gset(cyc(3), [0])), indicator(gset(cyc(4), [0])))


def test_associativity_random():
    rng = random.Random(5)
    g = parse_group("D:4")
    for _ in range(5):
        f, h, k = (random_table(rng, g, rng.randint(1, 5)) for _ in range(3))
        assert convolve(convolve(f, h), k) == convolve(f, convolve(h, k))


def test_pointwise_intersection_identity():
    rng = random.Random(13)
    g = parse_group("S:3")
    A = random_gset(rng, g, 3)
    B = random_gset(rng, g, 4)
    f = convolve_sets([A, B])
    Binv = inverse_set(B)
    for x in g.elements():
        xBinv = translate(x, Binv, side="left")
        assert f.value(x) == len([a for a in A if a in xBinv])


# ── reflect ──────────────────────────────────────────────────────────────────


def test_reflect_indicator_and_involution():
    g = parse_group("S:3")
    rng = random.Random(2)
    X = random_gset(rng, g, 4)
    assert reflect(indicator(X)) == indicator(inverse_set(X))
    f = random_table(rng, g, 5)
    assert reflect(reflect(f)) == f


def test_reflect_antihomomorphism_exhaustive_small():
    rng = random.Random(23)
    for spec in ["Z%6", "S:3", "D:3"]:
        g = parse_group(spec)
        for _ in range(6):
            f = random_table(rng, g, rng.randint(1, 4))
            h = random_table(rng, g, rng.randint(1, 4))
            assert reflect(convolve(f, h)) == convolve(reflect(h), reflect(f))


# ── norms, energy, popularity ────────────────────────────────────────────────


def test_lp_norm_pow():
    g = cyc(5)
    assert lp_norm_pow(ConvTable(g, {}), 2).value == 0
    f = ConvTable(g, {(0,): 1, (1,): 2, (2,): 1})
    assert lp_norm_pow(f, 2).value == 6
    A = gset(g, [0, 2, 3])
    assert lp_norm_pow(indicator(A), 1).value == len(A)


def test_energy_frozen_interval():
    g = window_group(10)
    A = interval(g, 0, 1)
    assert energy(A, A) == 6


def test_energy_subgroup_cubed():
    g = cyc(12)
    H = gset(g, [0, 4, 8])
    assert energy(H, H) == len(H) ** 3


def test_energy_against_quadruple_oracle_and_cs():
    rng = random.Random(17)
    for spec in ["Z%10", "D:3", "S:3"]:
        g = parse_group(spec)
        n = g.order()
        for _ in range(4):
            A = random_gset(rng, g, rng.randint(1, min(5, n)))
            B = random_gset(rng, g, rng.randint(1, min(5, n)))
            e = energy(A, B)
            assert e == oracle_energy(A, B)
            assert e * len(product_set(A, B)) >= len(A) ** 2 * len(B) ** 2


def test_popularity_full_group_and_outside():
    g = cyc(6)
    G = full_set(g)
    for x in g.elements():
        assert is_gamma_popular(G, G, G, x, Fraction(1))
    A = gset(g, [1])
    assert not is_gamma_popular(A, A, A, (0,), Fraction(1, 100))


def test_popularity_pigeonhole():
    rng = random.Random(29)
    g = cyc(32)
    for _ in range(6):
        A = random_gset(rng, g, rng.randint(2, 8))
        B = random_gset(rng, g, rng.randint(2, 8))
        C = random_gset(rng, g, rng.randint(2, 8))
        ABC = product_set(product_set(A, B), C)
        # |ABC| ≤ K√(|A||B|) with K chosen as the exact quotient, squared compare
        ksq = Fraction(len(ABC) ** 2, len(A) * len(B))
        gamma_sq = 1 / ksq
        gamma = Fraction(1, int(ksq**Fraction(1, 2)) + 1)
        assert gamma * gamma <= gamma_sq
        assert any(is_gamma_popular(A, B, C, x, gamma) for x in ABC)


# ── translation defect ───────────────────────────────────────────────────────


def test_defect_identity_zero():
    g = cyc(5)
    f = convolve_sets([gset(g, [0, 1]), gset(g, [0, 1])])
    assert translation_defect(f, (0,), "left", 2).value == 0


def test_defect_subgroup_period():
    g = cyc(12)
    H = gset(g, [0, 3, 6, 9])
    f = convolve_sets([H, H])
    for t in H:
        assert translation_defect(f, t, "right", 2).value == 0


def test_defect_frozen_z5():
    g = cyc(5)
    f = convolve_sets([gset(g, [0, 1]), gset(g, [0, 1])])
    assert translation_defect(f, (1,), "right", 2).value == 4
    assert translation_defect(f, (1,), "left", 2).value == 4


def test_defect_expansion_identity():
    rng = random.Random(31)
    g = cyc(16)
    for _ in range(5):
        A = random_gset(rng, g, rng.randint(2, 6))
        f = convolve_sets([A, A])
        negA = inverse_set(A)
        conv4 = convolve_sets([A, A, negA, negA])
        e = energy(A, A)
        for t in [(1,), (5,), (9,)]:
            assert translation_defect(f, t, "right", 2).value == 2 * (e - conv4.value(t))


def test_defect_rejects_odd_p():
    g = cyc(5)
    f = indicator(gset(g, [0]))
    with pytest.raises(ValueError):
        translation_defect(f, (1,), "left", 3)


# ── T₃ ───────────────────────────────────────────────────────────────────────


def test_t3_singleton():
    g = window_group(50)
    assert t3_count(indicator(gset(g, [7]))) == 1


def test_t3_frozen_123():
    g = window_group(50)
    assert t3_count(indicator(gset(g, [1, 2, 3]))) == 5


def test_t3_ap_free_sets():
    g = window_group(100)
    for xs in [[0, 1, 3, 4], [1, 2, 4, 8, 9], [0, 2, 3]]:
        A = gset(g, xs)
        assert t3_count(indicator(A)) == oracle_t3(A)
    assert t3_count(indicator(gset(g, [0, 1, 3, 4]))) == 4  # 3AP-free


def test_t3_against_oracle_random():
    rng = random.Random(37)
    g = cyc(15)
    for _ in range(6):
        A = random_gset(rng, g, rng.randint(1, 7))
        assert t3_count(indicator(A)) == oracle_t3(A)


def test_t3_rejects_nonabelian():
    g = parse_group("S:3")
    with pytest.raises(GroupError):
        t3_count(indicator(gset(g, [(0, 0, 0)])))


# ── serialization ────────────────────────────────────────────────────────────


def test_csv_and_json_payloads():
    g = cyc(5)
    f = convolve_sets([gset(g, [0, 1]), gset(g, [0, 1])])
    csv_text = table_to_csv(f)
    assert csv_text.splitlines()[0] == "element,count"
    assert '"0",1' in csv_text or "0,1" in csv_text
    j = table_to_json(f)
    assert '"group":"Z%5"' in j
    assert '"count":2' in j
