"""Concrete group arithmetic and set algebra.

Every element is a canonical integer tuple, interpretable only relative to a
``Group`` descriptor:

* additive kinds (integer window, ℤ/N, F_p^n) use residue/value vectors,
* Symmetric(n) uses Lehmer-coded permutation words (lexicographic order of
  codes equals lexicographic order of one-line permutations),
* Dihedral(n) uses (rotation index, reflection bit),
* direct products concatenate the component tuples.

Canonical tuples give a total order, so sets of elements are stored sorted and
deduplicated (:class:`GSet`) and every computation downstream is reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

Element = tuple[int, ...]


class GroupError(Exception):
    """Base class for group arithmetic errors."""


class WindowOverflowError(GroupError):
    """An integer-window operation left the window: an error, not wraparound."""


class InvalidElementError(GroupError):
    """Element tuple is not valid for the group."""


class GroupMismatchError(GroupError):
    """Operands live in different groups."""


class GroupParseError(GroupError):
    """Malformed group spec string or set file."""


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


# ── permutation <-> Lehmer code helpers (Symmetric(n)) ──────────────────────

def lehmer_decode(code: Sequence[int]) -> tuple[int, ...]:
    """Lehmer code → one-line permutation (images of 0..n−1)."""
    avail = list(range(len(code)))
    return tuple(avail.pop(c) for c in code)


def lehmer_encode(perm: Sequence[int]) -> tuple[int, ...]:
    """One-line permutation → Lehmer code."""
    avail = list(range(len(perm)))
    out = []
    for v in perm:
        i = avail.index(v)
        out.append(i)
        avail.pop(i)
    return tuple(out)


@dataclass(frozen=True)
class Group:
    """Descriptor of one of the supported concrete groups.

    kind ∈ {"window", "cyclic", "vector", "symmetric", "dihedral", "product"};
    params: (bound,) / (N,) / (p, n) / (n,) / (n,) / tuple of child Groups.
    """

    kind: str
    params: tuple

    def __post_init__(self) -> None:
        k, p = self.kind, self.params
        if k == "window":
            if not (len(p) == 1 and isinstance(p[0], int) and p[0] >= 1):
                raise GroupParseError(f"bad window params {p!r}")
        elif k == "cyclic":
            if not (len(p) == 1 and isinstance(p[0], int) and p[0] >= 1):
                raise GroupParseError(f"bad cyclic params {p!r}")
        elif k == "vector":
            if not (len(p) == 2 and _is_prime(p[0]) and p[1] >= 1):
                raise GroupParseError(f"bad vector params {p!r}")
        elif k == "symmetric":
            if not (len(p) == 1 and 2 <= p[0] <= 8):
                raise GroupParseError(f"bad symmetric params {p!r} (n must be 2..8)")
        elif k == "dihedral":
            if not (len(p) == 1 and p[0] >= 1):
                raise GroupParseError(f"bad dihedral params {p!r}")
        elif k == "product":
            if not (len(p) >= 2 and all(isinstance(c, Group) for c in p)):
                raise GroupParseError(f"bad product params {p!r}")
        else:
            raise GroupParseError(f"unknown group kind {k!r}")

    # ---- structure ----

    @property
    def arity(self) -> int:
        if self.kind == "vector":
            return self.params[1]
        if self.kind == "dihedral":
            return 2
        if self.kind == "symmetric":
            return self.params[0]
        if self.kind == "product":
            return sum(c.arity for c in self.params)
        return 1

    @property
    def abelian(self) -> bool:
        if self.kind == "symmetric":
            return self.params[0] <= 2
        if self.kind == "dihedral":
            return self.params[0] <= 2
        if self.kind == "product":
            return all(c.abelian for c in self.params)
        return True

    def order(self) -> int | None:
        """Number of group elements; None for the (unbounded) integer window."""
        if self.kind == "window":
            return None
        if self.kind == "cyclic":
            return self.params[0]
        if self.kind == "vector":
            return self.params[0] ** self.params[1]
        if self.kind == "symmetric":
            import math

            return math.factorial(self.params[0])
        if self.kind == "dihedral":
            return 2 * self.params[0]
        total = 1
        for c in self.params:
            o = c.order()
            if o is None:
                return None
            total *= o
        return total

    def spec(self) -> str:
        if self.kind == "window":
            return f"Z_window:{self.params[0]}"
        if self.kind == "cyclic":
            return f"Z%{self.params[0]}"
        if self.kind == "vector":
            return f"F:{self.params[0]}^{self.params[1]}"
        if self.kind == "symmetric":
            return f"S:{self.params[0]}"
        if self.kind == "dihedral":
            return f"D:{self.params[0]}"
        return "x".join(c.spec() for c in self.params)

    def __repr__(self) -> str:  # noqa: D105
        return f"Group({self.spec()!r})"

    # ---- element validity ----

    def check(self, a: Element) -> None:
        if not isinstance(a, tuple) or len(a) != self.arity or not all(isinstance(v, int) for v in a):
            raise InvalidElementError(f"{a!r} is not a valid element tuple for {self.spec()}")
        k = self.kind
        if k == "window":
            if abs(a[0]) > self.params[0]:
                raise InvalidElementError(f"{a[0]} outside window ±{self.params[0]}")
        elif k == "cyclic":
            if not 0 <= a[0] < self.params[0]:
                raise InvalidElementError(f"{a[0]} not a residue mod {self.params[0]}")
        elif k == "vector":
            p = self.params[0]
            if any(not 0 <= v < p for v in a):
                raise InvalidElementError(f"{a!r} not a residue vector mod {p}")
        elif k == "symmetric":
            n = self.params[0]
            if any(not 0 <= a[i] <= n - 1 - i for i in range(n)):
                raise InvalidElementError(f"{a!r} not a Lehmer code for S_{n}")
        elif k == "dihedral":
            n = self.params[0]
            if not (0 <= a[0] < n and a[1] in (0, 1)):
                raise InvalidElementError(f"{a!r} not a (rotation, reflection) pair for D_{n}")
        else:
            for child, part in zip(self.params, self._split(a)):
                child.check(part)

    def _split(self, a: Element) -> list[Element]:
        parts, i = [], 0
        for c in self.params:
            parts.append(a[i : i + c.arity])
            i += c.arity
        return parts

    # ---- arithmetic ----

    def identity(self) -> Element:
        if self.kind == "product":
            return tuple(v for c in self.params for v in c.identity())
        if self.kind == "dihedral":
            return (0, 0)
        return (0,) * self.arity

    def mul(self, a: Element, b: Element) -> Element:
        k = self.kind
        if k == "window":
            s = a[0] + b[0]
            if abs(s) > self.params[0]:
                raise WindowOverflowError(f"{a[0]} + {b[0]} leaves window ±{self.params[0]}")
            return (s,)
        if k == "cyclic":
            return ((a[0] + b[0]) % self.params[0],)
        if k == "vector":
            p = self.params[0]
            return tuple((x + y) % p for x, y in zip(a, b))
        if k == "symmetric":
            pa, pb = lehmer_decode(a), lehmer_decode(b)
            return lehmer_encode(tuple(pa[pb[i]] for i in range(len(pa))))
        if k == "dihedral":
            n = self.params[0]
            r = (a[0] + b[0]) % n if a[1] == 0 else (a[0] - b[0]) % n
            return (r, a[1] ^ b[1])
        return tuple(
            v
            for c, x, y in zip(self.params, self._split(a), self._split(b))
            for v in c.mul(x, y)
        )

    def inv(self, a: Element) -> Element:
        k = self.kind
        if k == "window":
            return (-a[0],)
        if k == "cyclic":
            return ((-a[0]) % self.params[0],)
        if k == "vector":
            p = self.params[0]
            return tuple((-x) % p for x in a)
        if k == "symmetric":
            pa = lehmer_decode(a)
            out = [0] * len(pa)
            for i, v in enumerate(pa):
                out[v] = i
            return lehmer_encode(out)
        if k == "dihedral":
            n = self.params[0]
            return ((-a[0]) % n, 0) if a[1] == 0 else a
        return tuple(v for c, x in zip(self.params, self._split(a)) for v in c.inv(x))

    def scalar(self, lam: int, a: Element) -> Element:
        """λ·a in an abelian group (dilation of a single element)."""
        if not self.abelian:
            raise GroupError(f"dilation needs an abelian group, not {self.spec()}")
        k = self.kind
        if k == "window":
            v = lam * a[0]
            if abs(v) > self.params[0]:
                raise WindowOverflowError(f"{lam}·{a[0]} leaves window ±{self.params[0]}")
            return (v,)
        if k == "cyclic":
            return ((lam * a[0]) % self.params[0],)
        if k == "vector":
            p = self.params[0]
            return tuple((lam * x) % p for x in a)
        if k == "product":
            return tuple(v for c, x in zip(self.params, self._split(a)) for v in c.scalar(lam, x))
        # abelian symmetric/dihedral degenerate cases: fall back to repeated mul
        e = self.identity()
        out = e
        base = a if lam >= 0 else self.inv(a)
        for _ in range(abs(lam)):
            out = self.mul(out, base)
        return out

    # ---- enumeration ----

    def elements(self) -> Iterator[Element]:
        """All elements in canonical (sorted tuple) order; window yields its carrier."""
        k = self.kind
        if k == "window":
            b = self.params[0]
            return ((v,) for v in range(-b, b + 1))
        if k == "cyclic":
            return ((v,) for v in range(self.params[0]))
        if k == "vector":
            p, n = self.params
            return (t for t in itertools.product(range(p), repeat=n))
        if k == "symmetric":
            n = self.params[0]
            ranges = [range(n - i) for i in range(n)]
            return (t for t in itertools.product(*ranges))
        if k == "dihedral":
            n = self.params[0]
            return ((r, s) for r in range(n) for s in (0, 1))
        children = [list(c.elements()) for c in self.params]
        return (tuple(v for part in combo for v in part) for combo in itertools.product(*children))


# ── group spec strings ───────────────────────────────────────────────────────

def parse_group(spec: str) -> Group:
    """Parse a group spec string: Z%N, Z_window:B, F:p^n, S:n, D:n, joined by 'x'."""
    spec = spec.strip()
    parts = spec.split("x")
    groups = [_parse_atom(p) for p in parts]
    if len(groups) == 1:
        return groups[0]
    return Group("product", tuple(groups))


def _parse_atom(atom: str) -> Group:
    atom = atom.strip()
    try:
        if atom.startswith("Z%"):
            return Group("cyclic", (int(atom[2:]),))
        if atom.startswith("Z_window:"):
            return Group("window", (int(atom.split(":", 1)[1]),))
        if atom.startswith("F:"):
            p, n = atom[2:].split("^")
            return Group("vector", (int(p), int(n)))
        if atom.startswith("S:"):
            return Group("symmetric", (int(atom[2:]),))
        if atom.startswith("D:"):
            return Group("dihedral", (int(atom[2:]),))
    except (ValueError, GroupParseError) as exc:
        raise GroupParseError(f"cannot parse group atom {atom!r}: {exc}") from exc
    raise GroupParseError(f"cannot parse group atom {atom!r}")


# ── GSet: immutable sorted set of elements ───────────────────────────────────

class GSet:
    """Immutable, sorted, deduplicated set of elements of one group."""

    __slots__ = ("group", "elements", "_eset")

    def __init__(self, group: Group, elems: Iterable[Element], *, _trusted: bool = False):
        if _trusted:
            elements = tuple(elems)
        else:
            seen = set()
            for a in elems:
                a = tuple(a)
                group.check(a)
                seen.add(a)
            elements = tuple(sorted(seen))
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "_eset", frozenset(elements))

    def __setattr__(self, *a):  # noqa: D105
        raise AttributeError("GSet is immutable")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __contains__(self, a: Element) -> bool:
        return a in self._eset

    def __eq__(self, other) -> bool:
        return isinstance(other, GSet) and self.group == other.group and self.elements == other.elements

    def __hash__(self) -> int:
        return hash((self.group, self.elements))

    def __repr__(self) -> str:
        body = ", ".join(map(str, self.elements[:6]))
        more = "" if len(self) <= 6 else f", …(+{len(self) - 6})"
        return f"GSet({self.group.spec()}, {{{body}{more}}})"

    def subset_of(self, other: "GSet") -> bool:
        return self._eset <= other._eset


def _require_same_group(*sets: GSet) -> Group:
    g = sets[0].group
    for s in sets[1:]:
        if s.group != g:
            raise GroupMismatchError(f"sets live in different groups: {g.spec()} vs {s.group.spec()}")
    return g


# ── set algebra ──────────────────────────────────────────────────────────────

def product_set(A: GSet, B: GSet) -> GSet:
    """{ab : a ∈ A, b ∈ B}, deduplicated."""
    g = _require_same_group(A, B)
    mul = g.mul
    return GSet(g, sorted({mul(a, b) for a in A for b in B}), _trusted=True)


def inverse_set(A: GSet) -> GSet:
    g = A.group
    return GSet(g, sorted({g.inv(a) for a in A}), _trusted=True)


def translate(t: Element, A: GSet, side: str = "left") -> GSet:
    g = A.group
    g.check(t)
    if side == "left":
        return GSet(g, sorted({g.mul(t, a) for a in A}), _trusted=True)
    if side == "right":
        return GSet(g, sorted({g.mul(a, t) for a in A}), _trusted=True)
    raise ValueError(f"side must be 'left' or 'right', not {side!r}")


def iterated_product(A: GSet, k: int) -> GSet:
    """A^k, the k-fold product set."""
    if k < 1:
        raise ValueError(f"k must be ≥ 1, got {k}")
    out = A
    for _ in range(k - 1):
        out = product_set(out, A)
    return out


def dilate(lam: int, A: GSet) -> GSet:
    """{λ·a : a ∈ A} in an abelian group."""
    g = A.group
    return GSet(g, sorted({g.scalar(lam, a) for a in A}), _trusted=True)


def union(A: GSet, B: GSet) -> GSet:
    g = _require_same_group(A, B)
    return GSet(g, sorted(A._eset | B._eset), _trusted=True)


def sym_diff_size(A: GSet, B: GSet) -> int:
    _require_same_group(A, B)
    return len(A._eset ^ B._eset)


def full_set(group: Group) -> GSet:
    """Every element of a finite group (or the whole window carrier)."""
    return GSet(group, list(group.elements()), _trusted=True)


# ── integer-window conveniences ──────────────────────────────────────────────

def window_group(bound: int) -> Group:
    return Group("window", (bound,))


def interval(group: Group, lo: int, hi: int) -> GSet:
    """{lo, …, hi} as a GSet in an integer-window group."""
    if group.kind != "window":
        raise GroupError("interval() needs an integer-window group")
    return GSet(group, [(v,) for v in range(lo, hi + 1)])


def with_window_bound(A: GSet, bound: int) -> GSet:
    """Same integer values, re-embedded in a window of the given bound."""
    if A.group.kind != "window":
        raise GroupError("with_window_bound() needs an integer-window set")
    return GSet(window_group(bound), A.elements)


# ── set files ────────────────────────────────────────────────────────────────

def parse_set_file(text: str) -> GSet:
    """Set file: first line a group spec, then one element per line (csv ints)."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise GroupParseError("empty set file")
    group = parse_group(lines[0])
    elems = []
    for ln in lines[1:]:
        try:
            elems.append(tuple(int(v) for v in ln.split(",")))
        except ValueError as exc:
            raise GroupParseError(f"bad element line {ln!r}") from exc
    return GSet(group, elems)


def format_set_file(A: GSet, header_comment: str | None = None) -> str:
    out = []
    if header_comment:
        out.append(f"# {header_comment}")
    out.append(A.group.spec())
    out.extend(",".join(str(v) for v in a) for a in A)
    return "\n".join(out) + "\n"


def read_set_file(path) -> GSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_set_file(fh.read())


def write_set_file(path, A: GSet, header_comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_set_file(A, header_comment))
