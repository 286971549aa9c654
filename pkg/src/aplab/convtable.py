"""Exact integer convolution tables and the statistics built on them.

A :class:`ConvTable` is a finitely supported map Element → nonnegative integer
(zero entries are never stored).  Convolution is the direct double loop over
supports — no transform tricks — so abelian and non-abelian groups go through
the same code path and every value is exact.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple

from .groups import (
    Element,
    GroupError,
    GroupMismatchError,
    GSet,
    Group,
)


class ConvTable:
    """Immutable finitely-supported Element → nonnegative-int function."""

    __slots__ = ("group", "entries", "_map")

    def __init__(self, group: Group, values: Mapping[Element, int] | Iterable[tuple[Element, int]]):
        items = values.items() if isinstance(values, Mapping) else values
        m: dict[Element, int] = {}
        for x, v in items:
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"table values must be nonnegative integers, got {v!r} at {x!r}")
            if v:
                group.check(x)
                m[x] = v
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "entries", tuple(sorted(m.items())))
        object.__setattr__(self, "_map", m)

    def __setattr__(self, *a):  # noqa: D105
        raise AttributeError("ConvTable is immutable")

    def value(self, x: Element) -> int:
        return self._map.get(x, 0)

    def support(self) -> GSet:
        return GSet(self.group, [x for x, _ in self.entries], _trusted=True)

    def total(self) -> int:
        return sum(v for _, v in self.entries)

    def max_value(self) -> int:
        return max((v for _, v in self.entries), default=0)

    def __iter__(self) -> Iterator[tuple[Element, int]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConvTable) and self.group == other.group and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.group, self.entries))

    def __repr__(self) -> str:
        head = ", ".join(f"{x}:{v}" for x, v in self.entries[:4])
        more = "" if len(self.entries) <= 4 else f", …(+{len(self.entries) - 4})"
        return f"ConvTable({self.group.spec()}, {{{head}{more}}})"


class NormValue(NamedTuple):
    """p-th power of an L^p norm, held exactly."""

    p: int
    value: int | Fraction


def indicator(A: GSet) -> ConvTable:
    return ConvTable(A.group, {a: 1 for a in A})


def _require_same_group(f: ConvTable, g: ConvTable) -> Group:
    if f.group != g.group:
        raise GroupMismatchError(f"tables live in different groups: {f.group.spec()} vs {g.group.spec()}")
    return f.group


def convolve(f: ConvTable, g: ConvTable) -> ConvTable:
    """f*g(x) = Σ_y f(y)·g(y⁻¹x), via the double loop over supports."""
    grp = _require_same_group(f, g)
    mul = grp.mul
    out: dict[Element, int] = {}
    for y, fy in f.entries:
        for z, gz in g.entries:
            x = mul(y, z)
            out[x] = out.get(x, 0) + fy * gz
    return ConvTable(grp, out)


def convolve_sets(sets: list[GSet]) -> ConvTable:
    """1_{A₁}*…*1_{A_k}: value at x = number of factorizations x = a₁⋯a_k."""
    if not sets:
        raise ValueError("need at least one set")
    out = indicator(sets[0])
    for A in sets[1:]:
        out = convolve(out, indicator(A))
    return out


def reflect(f: ConvTable) -> ConvTable:
    """f̃(x) := f(x⁻¹)."""
    inv = f.group.inv
    return ConvTable(f.group, {inv(x): v for x, v in f.entries})


def lp_norm_pow(f: ConvTable, p: int) -> NormValue:
    """‖f‖ₚᵖ = Σ |f(x)|ᵖ, exactly."""
    if p < 1:
        raise ValueError(f"p must be ≥ 1, got {p}")
    return NormValue(p, sum(v**p for _, v in f.entries))


def energy(A: GSet, B: GSet) -> int:
    """Multiplicative energy E(A,B) = ‖1_A*1_B‖₂² = #{(a,b,a′,b′): ab = a′b′}."""
    f = convolve_sets([A, B])
    return sum(v * v for _, v in f.entries)


def is_gamma_popular(
    A: GSet,
    B: GSet,
    C: GSet,
    x: Element,
    gamma: Fraction | None = None,
    gamma_sq: Fraction | None = None,
) -> bool:
    """(1_A*1_B*1_C)(x) ≥ γ·(|A||B|)^{1/2}·|C|, decided exactly by squaring.

    Pass `gamma_sq` when only γ² is rational (e.g. γ = 1/K with K² rational).
    """
    if (gamma is None) == (gamma_sq is None):
        raise ValueError("give exactly one of gamma, gamma_sq")
    gamma_sq = Fraction(gamma) ** 2 if gamma is not None else Fraction(gamma_sq)
    if not 0 < gamma_sq <= 1:
        raise ValueError(f"gamma² must lie in (0,1], got {gamma_sq}")
    v = convolve_sets([A, B, C]).value(x)
    return v * v >= gamma_sq * len(A) * len(B) * len(C) * len(C)


def translation_defect(f: ConvTable, t: Element, side: str, p: int) -> NormValue:
    """‖f(t·x)−f(x)‖ₚᵖ (left) or ‖f(x·t)−f(x)‖ₚᵖ (right), p even, exact."""
    if p < 2 or p % 2:
        raise ValueError(f"p must be a positive even integer, got {p}")
    grp = f.group
    grp.check(t)
    mul, inv = grp.mul, grp.inv
    if side == "left":
        shifted = lambda x: mul(t, x)  # noqa: E731
        preimage = lambda x: mul(inv(t), x)  # noqa: E731
    elif side == "right":
        shifted = lambda x: mul(x, t)  # noqa: E731
        preimage = lambda x: mul(x, inv(t))  # noqa: E731
    else:
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    xs = {x for x, _ in f.entries}
    xs.update(preimage(x) for x, _ in f.entries)
    return NormValue(p, sum((f.value(shifted(x)) - f.value(x)) ** p for x in xs))


def t3_count(f: ConvTable) -> int:
    """T₃(f) = Σ_y f(y)·(f*f)(2y); for f = 1_A this counts 3APs with direction
    and the |A| trivial ones, so A is 3AP-free iff t3_count = |A|."""
    grp = f.group
    if not grp.abelian:
        raise GroupError(f"T₃ needs an abelian group, not {grp.spec()}")
    ff = convolve(f, f)
    mul = grp.mul
    return sum(fy * ff.value(mul(y, y)) for y, fy in f.entries)


# ── serialization (CLI report payloads) ──────────────────────────────────────

def table_to_csv(f: ConvTable) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["element", "count"])
    for x, v in f.entries:
        w.writerow([",".join(map(str, x)), v])
    return buf.getvalue()


def table_to_json(f: ConvTable) -> str:
    payload = {
        "group": f.group.spec(),
        "entries": [{"element": list(x), "count": v} for x, v in f.entries],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))
