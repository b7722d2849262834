"""Graded vector spaces, complexes and the Koszul sign rule.

Every sign that comes from moving homogeneous things past each other goes
through :func:`koszul_sign`.  Symmetric and exterior powers are built as
coinvariants of the signed symmetric group action; their bases are sorted
tuples of global basis indices, which makes them canonical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from math import factorial
from typing import Callable, Hashable, Sequence

from .exactla import SparseMatrix, subquotient_homology


# ----------------------------------------------------------------------------
# signs


def koszul_sign(parities: Sequence[int], order: Sequence[int]) -> int:
    """Sign picked up when factors with the given parities are rearranged.

    ``order[k]`` is the old position of the factor that ends up in slot k.
    A pair of factors that cross contributes ``(-1)^(p*q)``.
    """
    odd = [parities[i] & 1 for i in order]
    s = 0
    # an odd pair crosses when the left one came from further right
    for k, i in enumerate(order):
        if odd[k]:
            for kk in range(k):
                if odd[kk] and order[kk] > i:
                    s ^= 1
    return -1 if s else 1


def permutation_sign(order: Sequence[int]) -> int:
    return koszul_sign([1] * len(order), order)


def sort_with_sign(items: Sequence[int], parity: Callable[[int], int], exterior: bool = False) -> tuple[int, tuple]:
    """Sort a word of basis indices and return (sign, sorted tuple).

    The sign is the Koszul sign of the sorting permutation, times its plain
    sign when ``exterior`` is set.  Returns sign 0 when the word vanishes in
    the (anti)coinvariants: a repeated odd letter, or a repeated even letter
    in the exterior case.
    """
    order = sorted(range(len(items)), key=lambda k: items[k])
    srt = tuple(items[k] for k in order)
    for a, b in zip(srt, srt[1:]):
        if a == b and (parity(a) + exterior) & 1:
            return 0, srt
    s = koszul_sign([parity(x) for x in items], order)
    if exterior:
        s *= permutation_sign(order)
    return s, srt


def swap_sign(p: int, q: int) -> int:
    return koszul_sign((p, q), (1, 0))


def shift_tensor_sign(i: int, m: int) -> int:
    """Sign of ``X[n] (x) Y[m] -> (X (x) Y)[n+m]`` on ``x`` of degree i in X."""
    return -1 if (i * m) & 1 else 1


def decalage_sign(degrees: Sequence[int]) -> int:
    n = len(degrees)
    return -1 if sum((n - 1 - k) * p for k, p in enumerate(degrees)) & 1 else 1


# ----------------------------------------------------------------------------
# spaces and maps


@dataclass(frozen=True)
class GradedSpace:
    dims: dict
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(p): int(n) for p, n in self.dims.items() if n}
        if any(n < 0 for n in clean.values()):
            raise ValueError("negative dimension")
        object.__setattr__(self, "dims", clean)
        labs = {}
        for p, n in clean.items():
            given = list(self.labels.get(p, []))
            labs[p] = given if len(given) == n else [f"e{p}_{i}" for i in range(n)]
        object.__setattr__(self, "labels", labs)

    def dim(self, p: int) -> int:
        return self.dims.get(p, 0)

    def degrees(self) -> list[int]:
        return sorted(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def basis(self) -> list[tuple[int, int]]:
        """Global basis ordered by degree, then index."""
        return [(p, i) for p in self.degrees() for i in range(self.dims[p])]

    def __hash__(self):
        return hash(tuple(sorted(self.dims.items())))


@dataclass
class GradedMap:
    source: GradedSpace
    target: GradedSpace
    degree: int
    blocks: dict = field(default_factory=dict)  # source degree -> SparseMatrix

    def __post_init__(self):
        for p, m in self.blocks.items():
            want = (self.target.dim(p + self.degree), self.source.dim(p))
            if m.shape != want:
                raise ValueError(f"block at degree {p} has shape {m.shape}, expected {want}")

    def block(self, p: int) -> SparseMatrix:
        m = self.blocks.get(p)
        if m is None:
            return SparseMatrix.zeros(self.target.dim(p + self.degree), self.source.dim(p))
        return m

    def apply(self, v: dict) -> dict:
        """Apply to an element given as {(degree, index): coefficient}."""
        out: dict = {}
        by_deg: dict = {}
        for (p, i), c in v.items():
            by_deg.setdefault(p, {})[i] = c
        for p, vec in by_deg.items():
            for j, c in self.block(p).apply(vec).items():
                key = (p + self.degree, j)
                s = out.get(key, 0) + c
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return out

    def compose(self, first: "GradedMap") -> "GradedMap":
        """``self o first``."""
        blocks = {}
        for p in first.source.degrees():
            m = self.block(p + first.degree) @ first.block(p)
            if not m.is_zero():
                blocks[p] = m
        return GradedMap(first.source, self.target, self.degree + first.degree, blocks)

    def __add__(self, other: "GradedMap") -> "GradedMap":
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        blocks = {}
        for p in set(self.source.degrees()) | set(other.source.degrees()):
            m = self.block(p) + other.block(p)
            if not m.is_zero():
                blocks[p] = m
        return GradedMap(self.source, self.target, self.degree, blocks)

    def scale(self, c) -> "GradedMap":
        return GradedMap(self.source, self.target, self.degree, {p: m.scale(c) for p, m in self.blocks.items()})

    def __sub__(self, other: "GradedMap") -> "GradedMap":
        return self + other.scale(-1)

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.blocks.values())

    @classmethod
    def identity(cls, space: GradedSpace) -> "GradedMap":
        return cls(space, space, 0, {p: SparseMatrix.identity(space.dim(p)) for p in space.degrees()})

    @classmethod
    def from_function(cls, source: GradedSpace, target: GradedSpace, degree: int, fn) -> "GradedMap":
        """Build from ``fn(p, i) -> {j: coeff}`` giving the image of basis vector i in degree p."""
        blocks = {}
        for p in source.degrees():
            cols = [fn(p, i) for i in range(source.dim(p))]
            m = SparseMatrix.from_columns(target.dim(p + degree), cols)
            if not m.is_zero():
                blocks[p] = m
        return cls(source, target, degree, blocks)


@dataclass
class ComplexQ:
    space: GradedSpace
    d: GradedMap

    def __post_init__(self):
        if self.d.degree != 1:
            raise ValueError("differential must have degree +1")

    def d_squared_zero(self) -> bool:
        return self.d.compose(self.d).is_zero()

    def cohomology(self, p: int):
        return subquotient_homology(self.d.block(p - 1), self.d.block(p))

    def cohomology_dims(self) -> dict:
        return {p: self.cohomology(p).dim for p in self.space.degrees()}

    def is_chain_map(self, f: GradedMap, target: "ComplexQ") -> bool:
        """Checks d f = (-1)^deg f d."""
        lhs = target.d.compose(f)
        rhs = f.compose(self.d).scale(-1 if f.degree & 1 else 1)
        return (lhs - rhs).is_zero()


def zero_differential(space: GradedSpace) -> GradedMap:
    return GradedMap(space, space, 1, {})


def complex_from_matrices(dims: dict, diffs: dict, labels: dict | None = None) -> ComplexQ:
    sp = GradedSpace(dims, labels or {})
    blocks = {p: m for p, m in diffs.items() if sp.dim(p) and not m.is_zero()}
    return ComplexQ(sp, GradedMap(sp, sp, 1, blocks))


# ----------------------------------------------------------------------------
# monomial complexes: explicit bases of hashable labels


class MonomialComplex:
    """A complex whose basis in each degree is an explicit list of labels.

    ``diff(label) -> {label: coeff}`` gives the differential on basis labels.
    """

    def __init__(self, bases: dict, diff: Callable[[Hashable], dict] | None, degree_of: Callable[[Hashable], int]):
        self.bases = {p: list(b) for p, b in bases.items() if b}
        self.index = {p: {lab: k for k, lab in enumerate(b)} for p, b in self.bases.items()}
        self.degree_of = degree_of
        self.space = GradedSpace({p: len(b) for p, b in self.bases.items()}, {p: [str(x) for x in b] for p, b in self.bases.items()})
        self._diff = diff
        self._complex: ComplexQ | None = None

    def locate(self, label) -> tuple[int, int]:
        p = self.degree_of(label)
        return p, self.index[p][label]

    def vector(self, element: dict) -> dict:
        """{label: c} -> {(p, i): c}."""
        out = {}
        for lab, c in element.items():
            if c:
                out[self.locate(lab)] = Fraction(c)
        return out

    def element(self, vec: dict) -> dict:
        return {self.bases[p][i]: c for (p, i), c in vec.items() if c}

    def map_to(self, target: "MonomialComplex", degree: int, fn: Callable[[Hashable], dict]) -> GradedMap:
        def col(p, i):
            out = {}
            for lab, c in fn(self.bases[p][i]).items():
                if c:
                    q, j = target.locate(lab)
                    if q != p + degree:
                        raise ValueError(f"map sends degree {p} to {q}, expected {p + degree}")
                    out[j] = out.get(j, 0) + c
            return out

        return GradedMap.from_function(self.space, target.space, degree, col)

    @property
    def complex(self) -> ComplexQ:
        if self._complex is None:
            d = self.map_to(self, 1, self._diff) if self._diff else zero_differential(self.space)
            self._complex = ComplexQ(self.space, d)
        return self._complex


def add_into(acc: dict, key, c) -> None:
    if not c:
        return
    s = acc.get(key, 0) + c
    if s:
        acc[key] = s
    else:
        acc.pop(key, None)


# ----------------------------------------------------------------------------
# shift and tensor product


def shift(C: ComplexQ, n: int) -> ComplexQ:
    """``C[n]``: degree p holds ``C^{p+n}``, differential ``(-1)^n d``."""
    sp = GradedSpace({p - n: k for p, k in C.space.dims.items()}, {p - n: l for p, l in C.space.labels.items()})
    sgn = -1 if n & 1 else 1
    blocks = {p - n: m.scale(sgn) for p, m in C.d.blocks.items()}
    return ComplexQ(sp, GradedMap(sp, sp, 1, blocks))


@dataclass
class TensorComplex:
    left: ComplexQ
    right: ComplexQ
    bases: dict  # degree -> list of (p, a, q, b)
    index: dict
    complex: ComplexQ

    def locate(self, p, a, q, b) -> tuple[int, int]:
        return p + q, self.index[p + q][(p, a, q, b)]


def tensor(C: ComplexQ, D: ComplexQ) -> TensorComplex:
    """Tensor product with ``d(x (x) y) = dx (x) y + (-1)^|x| x (x) dy``."""
    bases: dict = {}
    for p in C.space.degrees():
        for q in D.space.degrees():
            for a in range(C.space.dim(p)):
                for b in range(D.space.dim(q)):
                    bases.setdefault(p + q, []).append((p, a, q, b))
    for k in bases:
        bases[k].sort()
    index = {k: {lab: i for i, lab in enumerate(v)} for k, v in bases.items()}
    sp = GradedSpace({k: len(v) for k, v in bases.items()})
    dcols = {p: C.d.block(p).columns() for p in C.space.degrees()}
    ecols = {q: D.d.block(q).columns() for q in D.space.degrees()}

    def col(k, i):
        p, a, q, b = bases[k][i]
        out: dict = {}
        for a2, c in dcols[p][a].items():
            add_into(out, index[k + 1][(p + 1, a2, q, b)], c)
        sgn = -1 if p & 1 else 1
        for b2, c in ecols[q][b].items():
            add_into(out, index[k + 1][(p, a, q + 1, b2)], sgn * c)
        return out

    d = GradedMap.from_function(sp, sp, 1, col)
    return TensorComplex(C, D, bases, index, ComplexQ(sp, d))


def commutativity(XY: TensorComplex, YX: TensorComplex) -> GradedMap:
    """``R(x (x) y) = (-1)^{|x||y|} y (x) x``."""

    def col(k, i):
        p, a, q, b = XY.bases[k][i]
        return {YX.index[k][(q, b, p, a)]: swap_sign(p, q)}

    return GradedMap.from_function(XY.complex.space, YX.complex.space, 0, col)


def shifting_iso(C: ComplexQ, D: ComplexQ, n: int, m: int) -> tuple[GradedMap, ComplexQ, ComplexQ]:
    """``C[n] (x) D[m] -> (C (x) D)[n+m]``, with sign ``(-1)^{im}`` for x in ``C^i``.

    Returns the map together with its source and target complexes.
    """
    src = tensor(shift(C, n), shift(D, m))
    base = tensor(C, D)
    tgt = shift(base.complex, n + m)

    def col(k, i):
        p, a, q, b = src.bases[k][i]
        i_deg = p + n
        j = base.index[k + n + m][(p + n, a, q + m, b)]
        return {j: shift_tensor_sign(i_deg, m)}

    f = GradedMap.from_function(src.complex.space, tgt.space, 0, col)
    return f, src.complex, tgt


def associativity(C: ComplexQ, D: ComplexQ, E: ComplexQ) -> tuple[GradedMap, ComplexQ, ComplexQ]:
    """``(x (x) y) (x) z -> x (x) (y (x) z)`` on Kronecker bases."""
    CD = tensor(C, D)
    L = tensor(CD.complex, E)
    DE = tensor(D, E)
    R = tensor(C, DE.complex)

    def col(k, i):
        pq, ab, r, c = L.bases[k][i]
        p, a, q, b = CD.bases[pq][ab]
        return {R.index[k][(p, a, q + r, DE.index[q + r][(q, b, r, c)])]: 1}

    return GradedMap.from_function(L.complex.space, R.complex.space, 0, col), L.complex, R.complex


# ----------------------------------------------------------------------------
# tensor, symmetric and exterior powers


@dataclass
class PowerComplex:
    """``T^n``, ``S^n`` or ``Lambda^n`` of a complex, with projection and section."""

    base: ComplexQ
    n: int
    variant: str
    words: MonomialComplex  # T^n, labels are tuples of global indices
    mono: MonomialComplex  # S^n or Lambda^n, labels are sorted tuples
    projection: GradedMap
    section: GradedMap

    @property
    def complex(self) -> ComplexQ:
        return self.mono.complex

    @property
    def tensor_power(self) -> ComplexQ:
        return self.words.complex


def _global_basis(C: ComplexQ):
    gb = C.space.basis()
    deg = [p for p, _ in gb]
    pos = {pi: k for k, pi in enumerate(gb)}
    return gb, deg, pos


def tensor_power_words(C: ComplexQ, n: int) -> MonomialComplex:
    gb, deg, pos = _global_basis(C)
    dcols = {p: C.d.block(p).columns() for p in C.space.degrees()}
    bases: dict = {}
    for w in product(range(len(gb)), repeat=n):
        bases.setdefault(sum(deg[x] for x in w), []).append(w)

    def diff(w):
        out: dict = {}
        before = 0
        for k, x in enumerate(w):
            p, a = gb[x]
            sgn = -1 if before & 1 else 1
            for a2, c in dcols[p][a].items():
                add_into(out, w[:k] + (pos[(p + 1, a2)],) + w[k + 1 :], sgn * c)
            before += p
        return out

    return MonomialComplex(bases, diff, lambda w: sum(deg[x] for x in w))


def sym_ext_power(C: ComplexQ, n: int, variant: str = "symmetric") -> PowerComplex:
    if variant not in ("symmetric", "exterior"):
        raise ValueError("variant must be 'symmetric' or 'exterior'")
    gb, deg, pos = _global_basis(C)
    ext = variant == "exterior"

    def parity(x):
        return deg[x] & 1

    words = tensor_power_words(C, n)
    bases: dict = {}
    for p, ws in words.bases.items():
        for w in ws:
            if list(w) == sorted(w):
                s, _ = sort_with_sign(w, parity, ext)
                if s:
                    bases.setdefault(p, []).append(w)

    def proj(w):
        s, srt = sort_with_sign(w, parity, ext)
        return {srt: s} if s else {}

    def diff(m):
        out: dict = {}
        for w, c in words._diff(m).items():
            for srt, s in proj(w).items():
                add_into(out, srt, s * c)
        return out

    mono = MonomialComplex(bases, diff, lambda w: sum(deg[x] for x in w))
    nf = Fraction(1, factorial(n))

    def sec(m):
        out: dict = {}
        for order in permutations(range(n)):
            w = tuple(m[k] for k in order)
            s = koszul_sign([parity(x) for x in m], order)
            if ext:
                s *= permutation_sign(order)
            add_into(out, w, s * nf)
        return out

    projection = words.map_to(mono, 0, proj)
    section = mono.map_to(words, 0, sec)
    return PowerComplex(C, n, variant, words, mono, projection, section)


@dataclass
class Decalage:
    source: PowerComplex  # S^n(C[1])
    target_power: PowerComplex  # Lambda^n(C)
    target: ComplexQ  # Lambda^n(C)[n]
    forward: GradedMap
    inverse: GradedMap


def decalage(C: ComplexQ, n: int) -> Decalage:
    """``S^n(C[1]) -> Lambda^n(C)[n]``, ``x1...xn -> (-1)^{sum (n-i) p_i} x1 ^ ... ^ xn``."""
    S = sym_ext_power(shift(C, 1), n, "symmetric")
    L = sym_ext_power(C, n, "exterior")
    Ln = shift(L.complex, n)
    gb, deg, _ = _global_basis(C)

    def col(p, i):
        m = S.mono.bases[p][i]
        q, j = L.mono.locate(m)
        assert q - n == p
        return {j: decalage_sign([deg[x] for x in m])}

    fwd = GradedMap.from_function(S.complex.space, Ln.space, 0, col)

    def icol(p, j):
        m = L.mono.bases[p + n][j]
        q, i = S.mono.locate(m)
        return {i: decalage_sign([deg[x] for x in m])}

    inv = GradedMap.from_function(Ln.space, S.complex.space, 0, icol)
    return Decalage(S, L, Ln, fwd, inv)


@lru_cache(maxsize=None)
def unshuffles(n: int, k: int) -> tuple:
    """All ways to pick k positions out of n (as sorted tuples)."""
    from itertools import combinations

    return tuple(combinations(range(n), k))
