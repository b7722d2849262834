"""Dg Lie algebras and their Chevalley-Eilenberg (Quillen) standard complex.

The standard complex is stored as the symmetric coalgebra on ``g[1]``:
a basis monomial is a sorted tuple of basis indices of ``g``, and the letter
``i`` carries the shifted degree ``|e_i| - 1``.  The exterior picture
``Lambda^n(g)[n]`` is reached through the decalage signs in :mod:`graded`.

Coefficients are Fractions, or elements of a finite dimensional commutative
base algebra when the algebra is a Lie algebra over that base (then ``g`` is
a free module and the standard complex is taken over the base).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from math import factorial
from typing import Callable, Hashable, Iterable, Sequence

from .exactla import Echelon, SparseMatrix, kernel, subquotient_homology
from .graded import (
    ComplexQ,
    GradedMap,
    GradedSpace,
    MonomialComplex,
    add_into,
    complex_from_matrices,
    koszul_sign,
    sort_with_sign,
    sym_ext_power,
)


class AxiomFailure(ValueError):
    """The input is not a dg Lie algebra."""


class TruncationTooSmall(ValueError):
    """The stored truncation does not determine the requested homology."""


class UnitViolation(ValueError):
    """A map that must kill the unit does not."""


class NotMaurerCartan(ValueError):
    """The Maurer-Cartan residual is nonzero."""


# ----------------------------------------------------------------------------
# the algebra


@dataclass
class DGLA:
    """A dg Lie algebra on a homogeneous basis ``e_0, ..., e_{n-1}``.

    ``diff[i]`` is ``d e_i`` and ``bracket[(i, j)]`` is ``[e_i, e_j]``, both as
    ``{index: coefficient}``.  Missing bracket entries are zero.
    """

    degrees: list
    diff: list
    bracket: dict
    labels: list = field(default_factory=list)
    base: object = None  # a base algebra, see algebroid.WeilBase

    def __post_init__(self):
        n = len(self.degrees)
        if not self.labels:
            self.labels = [f"e{i}" for i in range(n)]
        if len(self.diff) != n or len(self.labels) != n:
            raise ValueError("degrees, diff and labels must have equal length")

    @property
    def dim(self) -> int:
        return len(self.degrees)

    @property
    def zero(self):
        return self.base.zero() if self.base is not None else Fraction(0)

    @classmethod
    def from_table(
        cls,
        degrees: Sequence[int],
        brackets: dict,
        diff: dict | None = None,
        labels: Sequence[str] | None = None,
        complete: bool = True,
        base=None,
    ) -> "DGLA":
        """Build from partial tables, filling ``[e_j, e_i]`` by graded skew symmetry when ``complete``."""
        n = len(degrees)
        to_c = (lambda c: c) if base is not None else Fraction
        br: dict = {}
        for (i, j), val in brackets.items():
            br[(i, j)] = {k: to_c(c) for k, c in val.items() if c}
        if complete:
            for (i, j), val in list(br.items()):
                if (j, i) not in br and i != j:
                    s = -koszul_sign((degrees[i], degrees[j]), (1, 0))
                    br[(j, i)] = {k: c * s for k, c in val.items()}
        dl = [dict() for _ in range(n)]
        for i, val in (diff or {}).items():
            dl[i] = {k: to_c(c) for k, c in val.items() if c}
        return cls(list(degrees), dl, br, list(labels) if labels else [], base)

    # element arithmetic, elements are {index: coeff}
    def d(self, x: dict) -> dict:
        out: dict = {}
        for i, c in x.items():
            for k, v in self.diff[i].items():
                add_into(out, k, c * v)
        return out

    def br(self, x: dict, y: dict) -> dict:
        out: dict = {}
        for i, a in x.items():
            for j, b in y.items():
                for k, v in self.bracket.get((i, j), {}).items():
                    add_into(out, k, a * b * v)
        return out

    def basis_vector(self, i: int) -> dict:
        one = self.base.one() if self.base is not None else Fraction(1)
        return {i: one}

    def graded_space(self) -> GradedSpace:
        dims: dict = {}
        for p in self.degrees:
            dims[p] = dims.get(p, 0) + 1
        return GradedSpace(dims)

    def homogeneous_degree(self, x: dict) -> int | None:
        ds = {self.degrees[i] for i in x}
        return ds.pop() if len(ds) == 1 else None


@dataclass
class AxiomReport:
    passed: bool
    failures: list  # (axiom name, witness labels, offending value)

    def first(self, axiom: str):
        return next((f for f in self.failures if f[0] == axiom), None)


def check_dgla(g: DGLA) -> AxiomReport:
    """Check degrees, d^2 = 0, skew symmetry, Jacobi and Leibniz on basis elements.

    The witness recorded for each axiom is the first failing basis tuple in
    lexicographic order.
    """
    n = g.dim
    deg = g.degrees
    lab = g.labels
    fails = []
    e = [g.basis_vector(i) for i in range(n)]

    def first_fail(name, tuples, value):
        for t in tuples:
            v = value(*t)
            if v:
                fails.append((name, tuple(lab[i] for i in t), v))
                return

    def bad_degree_d(i):
        return {k: c for k, c in g.diff[i].items() if deg[k] != deg[i] + 1}

    def bad_degree_b(i, j):
        return {k: c for k, c in g.bracket.get((i, j), {}).items() if deg[k] != deg[i] + deg[j]}

    first_fail("differential degree", ((i,) for i in range(n)), bad_degree_d)
    first_fail("bracket degree", ((i, j) for i in range(n) for j in range(n)), bad_degree_b)
    first_fail("d^2 = 0", ((i,) for i in range(n)), lambda i: g.d(g.d(e[i])))

    def skew(i, j):
        out = dict(g.br(e[i], e[j]))
        s = koszul_sign((deg[i], deg[j]), (1, 0))
        for k, c in g.br(e[j], e[i]).items():
            add_into(out, k, s * c)
        return out

    first_fail("skew symmetry", ((i, j) for i in range(n) for j in range(i, n)), skew)

    def jacobi(i, j, k):
        x, y, z = e[i], e[j], e[k]
        a, b, c = deg[i], deg[j], deg[k]
        out: dict = {}
        for key, v in g.br(x, g.br(y, z)).items():
            add_into(out, key, v)
        s1 = -1 if (a * (b + c)) & 1 else 1
        for key, v in g.br(y, g.br(z, x)).items():
            add_into(out, key, s1 * v)
        s2 = -1 if (c * (a + b)) & 1 else 1
        for key, v in g.br(z, g.br(x, y)).items():
            add_into(out, key, s2 * v)
        return out

    first_fail(
        "Jacobi", ((i, j, k) for i in range(n) for j in range(i, n) for k in range(j, n)), jacobi
    )

    def leibniz(i, j):
        out = dict(g.d(g.br(e[i], e[j])))
        for k, c in g.br(g.d(e[i]), e[j]).items():
            add_into(out, k, -c)
        s = -1 if deg[i] & 1 else 1
        for k, c in g.br(e[i], g.d(e[j])).items():
            add_into(out, k, -s * c)
        return out

    first_fail("Leibniz", ((i, j) for i in range(n) for j in range(n)), leibniz)
    return AxiomReport(not fails, fails)


# some standard algebras


def abelian(dim: int, degree: int = 0) -> DGLA:
    return DGLA.from_table([degree] * dim, {})


def sl2() -> DGLA:
    # basis h, e, f
    return DGLA.from_table([0, 0, 0], {(0, 1): {1: 2}, (0, 2): {2: -2}, (1, 2): {0: 1}}, labels=["h", "e", "f"])


def two_dim_nonabelian() -> DGLA:
    """``[x, y] = y``."""
    return DGLA.from_table([0, 0], {(0, 1): {1: 1}}, labels=["x", "y"])


def heisenberg() -> DGLA:
    return DGLA.from_table([0, 0, 0], {(0, 1): {2: 1}}, labels=["p", "q", "z"])


# ----------------------------------------------------------------------------
# monomial calculus in S(g[1])


def shifted_parity(g: DGLA) -> Callable[[int], int]:
    deg = g.degrees
    return lambda i: (deg[i] - 1) & 1


def mono_degree(g: DGLA, m: tuple) -> int:
    return sum(g.degrees[i] - 1 for i in m)


def normal_word(g: DGLA, word: Sequence[int]) -> tuple[int, tuple]:
    return sort_with_sign(tuple(word), shifted_parity(g))


def mono_mul(g: DGLA, a: tuple, b: tuple) -> tuple[int, tuple]:
    return normal_word(g, a + b)


def elem_mul(g: DGLA, x: dict, y: dict) -> dict:
    """Product in the symmetric algebra S(g[1]) of elements {monomial: coeff}."""
    out: dict = {}
    for a, c in x.items():
        for b, e in y.items():
            s, m = mono_mul(g, a, b)
            if s:
                add_into(out, m, s * c * e)
    return out


def d_II_mono(g: DGLA, m: tuple) -> dict:
    """Differential induced by ``d_{g[1]} = -d_g``, as a derivation with Koszul signs."""
    out: dict = {}
    par = shifted_parity(g)
    before = 0
    for k, x in enumerate(m):
        sgn = -1 if before & 1 else 1
        for y, c in g.diff[x].items():
            s, mm = normal_word(g, m[:k] + (y,) + m[k + 1 :])
            if s:
                add_into(out, mm, -sgn * s * c)
        before += par(x)
    return out


def d_I_mono(g: DGLA, m: tuple) -> dict:
    """Coderivation with ``d_I(sx . sy) = (-1)^{|x|} s[x, y]``."""
    out: dict = {}
    par = shifted_parity(g)
    n = len(m)
    pars = [par(x) for x in m]
    for i in range(n):
        for j in range(i + 1, n):
            rest = [k for k in range(n) if k != i and k != j]
            eps = koszul_sign(pars, [i, j] + rest)
            xi, xj = m[i], m[j]
            s0 = -1 if g.degrees[xi] & 1 else 1
            tail = tuple(m[k] for k in rest)
            for y, c in g.bracket.get((xi, xj), {}).items():
                s, mm = normal_word(g, (y,) + tail)
                if s:
                    add_into(out, mm, eps * s0 * s * c)
    return out


def d_mono(g: DGLA, m: tuple) -> dict:
    out = d_II_mono(g, m)
    for k, c in d_I_mono(g, m).items():
        add_into(out, k, c)
    return out


def coproduct_mono(g: DGLA, m: tuple) -> dict:
    """Unshuffle coproduct ``{(left, right): coeff}`` with Koszul signs."""
    out: dict = {}
    par = shifted_parity(g)
    n = len(m)
    pars = [par(x) for x in m]
    for k in range(n + 1):
        for I in combinations(range(n), k):
            J = [i for i in range(n) if i not in I]
            s = koszul_sign(pars, list(I) + J)
            add_into(out, (tuple(m[i] for i in I), tuple(m[j] for j in J)), s)
    return out


def apply_linear(fn: Callable[[Hashable], dict], x: dict) -> dict:
    out: dict = {}
    for k, c in x.items():
        for kk, v in fn(k).items():
            add_into(out, kk, c * v)
    return out


def enumerate_monomials(g: DGLA, arity: int) -> Iterable[tuple]:
    par = shifted_parity(g)
    for m in combinations_with_replacement(range(g.dim), arity):
        if all(not (a == b and par(a)) for a, b in zip(m, m[1:])):
            yield m


def degree_span(g: DGLA, arity: int) -> tuple[float, float]:
    """Interval containing the degrees of all monomials of a given arity."""
    par = shifted_parity(g)
    sd = [d - 1 for d in g.degrees]
    odd = sorted(sd[i] for i in range(g.dim) if par(i))
    even = [sd[i] for i in range(g.dim) if not par(i)]
    lo, hi = float("inf"), float("-inf")
    for k in range(0, min(arity, len(odd)) + 1):
        r = arity - k
        if r and not even:
            continue
        top = sum(odd[len(odd) - k :]) if k else 0
        bot = sum(odd[:k])
        hi = max(hi, top + (r * max(even) if r else 0))
        lo = min(lo, bot + (r * min(even) if r else 0))
    return lo, hi


# ----------------------------------------------------------------------------
# the standard complex


class CEComplex:
    """``F_N C(g)`` restricted to a window of cohomological degrees.

    Basis labels are monomials (sorted index tuples); over a base algebra they
    are pairs ``(monomial, k)`` with ``k`` indexing the base's Q-basis.
    """

    def __init__(self, g: DGLA, N: int, window: tuple[int, int]):
        self.g = g
        self.N = N
        self.window = window
        lo, hi = window
        self.monos: dict = {}  # degree -> list of monomials
        for a in range(N + 1):
            for m in enumerate_monomials(g, a):
                p = mono_degree(g, m)
                if lo <= p <= hi:
                    self.monos.setdefault(p, []).append(m)
        for p in self.monos:
            self.monos[p].sort(key=lambda m: (len(m), m))
        self.base = g.base
        if self.base is None:
            bases = self.monos
            self._label_degree = lambda m: mono_degree(g, m)
        else:
            bdim = self.base.dim
            bases = {p: [(m, k) for m in ms for k in range(bdim)] for p, ms in self.monos.items()}
            self._label_degree = lambda lab: mono_degree(g, lab[0])
        self.mc = MonomialComplex(bases, None, self._label_degree)
        self._in_range = lambda m: len(m) <= N and lo <= mono_degree(g, m) <= hi

    # expansion of coefficient-valued maps into Q-matrices
    def _expand(self, fn: Callable[[tuple], dict]) -> Callable[[Hashable], dict]:
        if self.base is None:
            return lambda m: {k: v for k, v in fn(m).items() if self._in_range(k)}
        base = self.base

        def col(lab):
            m, k = lab
            out: dict = {}
            bk = base.basis_element(k)
            for mm, c in fn(m).items():
                if not self._in_range(mm):
                    continue
                for kk, v in enumerate(base.coords(c * bk)):
                    if v:
                        add_into(out, (mm, kk), v)
            return out

        return col

    def labels(self, p: int) -> list:
        return self.mc.bases.get(p, [])

    def _map(self, fn, degree: int) -> GradedMap:
        return self.mc.map_to(self.mc, degree, self._expand(fn))

    @property
    def d_I(self) -> GradedMap:
        if not hasattr(self, "_dI"):
            self._dI = self._map(lambda m: d_I_mono(self.g, m), 1)
        return self._dI

    @property
    def d_II(self) -> GradedMap:
        if not hasattr(self, "_dII"):
            self._dII = self._map(lambda m: d_II_mono(self.g, m), 1)
        return self._dII

    @property
    def d(self) -> GradedMap:
        if not hasattr(self, "_d"):
            self._d = self.d_I + self.d_II
        return self._d

    @property
    def complex(self) -> ComplexQ:
        return ComplexQ(self.mc.space, self.d)

    def arity(self, label) -> int:
        return len(label if self.base is None else label[0])

    def filtration_part(self, p: int, m: int) -> list[int]:
        """Indices of the degree-p basis vectors lying in ``F_m``."""
        return [i for i, lab in enumerate(self.labels(p)) if self.arity(lab) <= m]

    def filtration_inclusion(self, m: int) -> tuple[ComplexQ, GradedMap]:
        """The subcomplex ``F_m`` and its inclusion as a chain map."""
        sub = {p: self.filtration_part(p, m) for p in self.mc.bases}
        space = GradedSpace({p: len(v) for p, v in sub.items()})
        inc = GradedMap.from_function(space, self.mc.space, 0, lambda p, i: {sub[p][i]: 1})
        blocks = {}
        for p, idx in sub.items():
            if p + 1 not in sub:
                continue
            full = self.d.block(p)
            pos = {j: k for k, j in enumerate(sub[p + 1])}
            ents = []
            for k, j in enumerate(idx):
                for r, c in full.column(j).items():
                    if r not in pos:
                        raise AssertionError("filtration is not a subcomplex")
                    ents.append((pos[r], k, c))
            blocks[p] = SparseMatrix.from_entries(len(sub[p + 1]), len(idx), ents)
        return ComplexQ(space, GradedMap(space, space, 1, blocks)), inc

    def vector(self, element: dict) -> dict:
        """Element {monomial: coeff} -> {(degree, index): Fraction}."""
        return self.mc.vector(self._flatten(element))

    def _flatten(self, element: dict) -> dict:
        if self.base is None:
            return {m: c for m, c in element.items() if c}
        out: dict = {}
        for m, c in element.items():
            for k, v in enumerate(self.base.coords(c)):
                if v:
                    out[(m, k)] = v
        return out

    def element(self, vec: dict) -> dict:
        lab = self.mc.element(vec)
        if self.base is None:
            return lab
        out: dict = {}
        for (m, k), v in lab.items():
            add_into(out, m, self.base.basis_element(k) * v)
        return out

    # coalgebra structure on elements
    def coproduct(self, element: dict) -> dict:
        return apply_linear(lambda m: coproduct_mono(self.g, m), element)

    def apply_d(self, element: dict) -> dict:
        return apply_linear(lambda m: d_mono(self.g, m), element)


def ce_complex(g: DGLA, N: int, window: tuple[int, int], check: bool = True) -> CEComplex:
    """``F_N C(g)`` in cohomological degrees ``window[0] .. window[1]``."""
    if check:
        rep = check_dgla(g)
        if not rep.passed:
            name, wit, _ = rep.failures[0]
            raise AxiomFailure(f"{name} fails at {wit}")
    return CEComplex(g, N, window)


def bracket_from_ce(g: DGLA) -> dict:
    """Recover the bracket from ``d_I`` on arity two: ``[x, y] = (-1)^{|x|} d_I(sx . sy)``."""
    out = {}
    for i in range(g.dim):
        for j in range(g.dim):
            s, m = normal_word(g, (i, j))
            if not s:
                # sx . sx = 0 forces [x, x] = 0 for odd shifted x
                continue
            val = {mm[0]: c * s for mm, c in d_I_mono(g, m).items()}
            sign = -1 if g.degrees[i] & 1 else 1
            val = {k: c * sign for k, c in val.items() if c}
            if val:
                out[(i, j)] = val
    return out


# ----------------------------------------------------------------------------
# homology


@dataclass
class HomologyTable:
    """Lie homology ``H_i = H^{-i}(C)`` with its filtration, per homological index."""

    dims: dict  # i -> dim H_i
    filtered: dict  # i -> [dim F_0 H_i, ..., dim F_N H_i]
    representatives: dict  # i -> list of elements {label: coeff}, adapted to the filtration
    arities: dict  # i -> filtration level at which each representative first appears


def _homology_adapted(ce: CEComplex, p: int, N: int):
    """Adapted basis of ``H^p`` along ``F_0 subset ... subset F_N``."""
    d_in = ce.d.block(p - 1)
    d_out = ce.d.block(p)
    labels = ce.labels(p)
    e = Echelon(len(labels))
    for v in subquotient_homology(d_in, d_out).image:
        e.add(v)
    reps, levels, fdims = [], [], []
    for m in range(N + 1):
        idx = ce.filtration_part(p, m)
        sub = SparseMatrix.from_columns(d_out.rows, [d_out.column(j) for j in idx])
        for kv in kernel(sub):
            v = {idx[j]: c for j, c in kv.items()}
            if e.add(v):
                reps.append(v)
                levels.append(m)
        fdims.append(len(reps))
    return reps, levels, fdims


def check_truncation(g: DGLA, N: int, lo: int, hi: int) -> None:
    """Raise unless every monomial of cohomological degree in [lo, hi] has arity <= N."""
    par = shifted_parity(g)
    n_odd = sum(1 for i in range(g.dim) if par(i))
    a = N + 1
    limit = N + 2 + n_odd + (hi - lo) + 4
    while True:
        dlo, dhi = degree_span(g, a)
        if dlo == float("inf"):
            if a > n_odd:
                return
        elif not (dhi < lo or dlo > hi):
            raise TruncationTooSmall(
                f"monomials of arity {a} reach cohomological degrees [{lo}, {hi}]; raise N above {N}"
            )
        if a >= limit:
            sd_even = [g.degrees[i] - 1 for i in range(g.dim) if not par(i)]
            if 0 in sd_even or (sd_even and min(sd_even) < 0 < max(sd_even)):
                raise TruncationTooSmall("g has shifted-even elements of degree 0; no finite truncation is exact")
            return
        a += 1


def lie_homology(g: DGLA, N: int, window: tuple[int, int], strict: bool = True) -> HomologyTable:
    """``H^{Lie}_i`` for ``i`` in ``window`` (homological indices) from ``F_N C(g)``.

    With ``strict`` set, refuses to answer when the truncation is not exact in
    the degrees involved.  Otherwise the table describes ``H(F_N C)``.
    """
    ilo, ihi = window
    lo, hi = -ihi - 1, -ilo + 1
    if strict:
        check_truncation(g, N, lo, hi)
    ce = ce_complex(g, N, (lo, hi))
    dims, filt, reps, ars = {}, {}, {}, {}
    for i in range(ilo, ihi + 1):
        p = -i
        r, lev, fd = _homology_adapted(ce, p, N)
        dims[i] = len(r)
        filt[i] = fd
        reps[i] = [{ce.labels(p)[j]: c for j, c in v.items()} for v in r]
        ars[i] = lev
    return HomologyTable(dims, filt, reps, ars)


def e1_page(g: DGLA, N: int, window: tuple[int, int]) -> dict:
    """``E_1^{-p, q} = H^q(Lambda^p g)``, computed as homology of ``gr_p C`` under ``d_II``.

    Returned as ``{(-p, q): dim}`` for arities ``p <= N`` and total degrees
    ``-p + q`` in the (cohomological) window.
    """
    lo, hi = window
    ce = ce_complex(g, N, (lo - 1, hi + 1))
    out = {}
    for a in range(N + 1):
        for p in range(lo, hi + 1):
            rows_in = [j for j, lab in enumerate(ce.labels(p - 1)) if ce.arity(lab) == a]
            rows_mid = [j for j, lab in enumerate(ce.labels(p)) if ce.arity(lab) == a]
            rows_out = [j for j, lab in enumerate(ce.labels(p + 1)) if ce.arity(lab) == a]
            if not rows_mid:
                continue
            dii_in = _restrict(ce.d_II.block(p - 1), rows_mid, rows_in)
            dii_out = _restrict(ce.d_II.block(p), rows_out, rows_mid)
            h = subquotient_homology(dii_in, dii_out).dim
            if h:
                out[(-a, p + a)] = h
    return out


def _restrict(m: SparseMatrix, rows: list, cols: list) -> SparseMatrix:
    rpos = {r: k for k, r in enumerate(rows)}
    ents = []
    for k, c in enumerate(cols):
        for r, v in m.column(c).items():
            if r in rpos:
                ents.append((rpos[r], k, v))
    return SparseMatrix.from_entries(len(rows), len(cols), ents)


def kunneth_exterior_dims(hdims: dict, n: int) -> dict:
    """Dimensions of ``Lambda^n`` of a graded space with zero differential, by degree."""
    C = complex_from_matrices(hdims, {})
    return dict(sym_ext_power(C, n, "exterior").complex.space.dims)


# ----------------------------------------------------------------------------
# coalgebras, Maurer-Cartan elements and coalgebra maps


@dataclass
class CoalgebraDatum:
    """A unital dg coalgebra on an explicit basis.

    ``coproduct(x)`` returns ``{(y, z): coeff}``; ``arity(x)`` gives the
    filtration level of a basis element (``0`` only for the unit line).
    """

    basis: list
    degree: Callable[[Hashable], int]
    diff: Callable[[Hashable], dict]
    coproduct: Callable[[Hashable], dict]
    counit: Callable[[Hashable], Fraction]
    unit: Hashable
    arity: Callable[[Hashable], int]


def ce_coalgebra(g: DGLA, N: int) -> CoalgebraDatum:
    """``F_N C(g)`` (all degrees) as a coalgebra datum."""
    basis = [m for a in range(N + 1) for m in enumerate_monomials(g, a)]
    return CoalgebraDatum(
        basis=basis,
        degree=lambda m: mono_degree(g, m),
        diff=lambda m: d_mono(g, m),
        coproduct=lambda m: coproduct_mono(g, m),
        counit=lambda m: Fraction(1) if m == () else Fraction(0),
        unit=(),
        arity=len,
    )


def check_ce(g: DGLA, N: int) -> AxiomReport:
    """``d^2 = 0``, coassociativity, cocommutativity and ``Delta d = (d (x) 1 + 1 (x) d) Delta``
    on every monomial of arity <= N.  Witnesses are the first failing monomial per identity.
    """
    fails: list = []

    def note(name, m, val):
        if not any(f[0] == name for f in fails):
            fails.append((name, tuple(g.labels[i] for i in m), val))

    def lin(fn, x):
        out: dict = {}
        for k, c in x.items():
            for k2, v in fn(k).items():
                add_into(out, k2, c * v)
        return out

    D = lambda x: coproduct_mono(g, x)
    dm_ = lambda x: d_mono(g, x)
    deg = lambda x: mono_degree(g, x)
    for a in range(N + 1):
        for m in enumerate_monomials(g, a):
            dd = lin(dm_, dm_(m))
            if dd:
                note("d^2 = 0", m, dd)
            cm = D(m)
            left: dict = {}
            right: dict = {}
            for (x, y), c in cm.items():
                for (x1, x2), v in D(x).items():
                    add_into(left, (x1, x2, y), c * v)
                for (y1, y2), v in D(y).items():
                    add_into(right, (x, y1, y2), c * v)
            if left != right:
                note("coassociative", m, None)
            sw: dict = {}
            for (x, y), c in cm.items():
                add_into(sw, (y, x), -c if deg(x) * deg(y) & 1 else c)
            if sw != cm:
                note("cocommutative", m, None)
            lhs = lin(D, dm_(m))
            rhs: dict = {}
            for (x, y), c in cm.items():
                for x2, v in dm_(x).items():
                    add_into(rhs, (x2, y), c * v)
                s = -1 if deg(x) & 1 else 1
                for y2, v in dm_(y).items():
                    add_into(rhs, (x, y2), s * c * v)
            if lhs != rhs:
                note("coproduct is a chain map", m, None)
    return AxiomReport(not fails, fails)


def projection_to_generators(g: DGLA) -> Callable[[tuple], dict]:
    """The canonical ``p_1 : C(g) -> g[1]``, as a g-valued map."""
    return lambda m: ({m[0]: Fraction(1)} if len(m) == 1 else {})


def mc_residual(A: CoalgebraDatum, f1: Callable[[Hashable], dict], g: DGLA, elements: Iterable | None = None) -> dict:
    """``d f_1 + 1/2 [f_1, f_1]`` on each basis element of A (or on the given ones).

    Here ``(d f_1)(x) = d_g f_1(x) + f_1(d_A x)`` and
    ``[f_1, f_1](x) = sum (-1)^{|y_i|} [f_1(y_i), f_1(z_i)]`` over ``Delta x = sum y_i (x) z_i``.
    Returns ``{x: nonzero residual}``.
    """
    u = f1(A.unit)
    if any(u.values()):
        raise UnitViolation("f1 does not vanish on the unit")
    half = Fraction(1, 2)
    out = {}
    for x in elements if elements is not None else A.basis:
        r = dict(g.d(f1(x)))
        for y, c in A.diff(x).items():
            for k, v in f1(y).items():
                add_into(r, k, c * v)
        for (y, z), c in A.coproduct(x).items():
            fy, fz = f1(y), f1(z)
            if not fy or not fz:
                continue
            s = -1 if A.degree(y) & 1 else 1
            for k, v in g.br(fy, fz).items():
                add_into(r, k, half * s * c * v)
        if r:
            out[x] = r
    return out


def iterated_coproduct(A: CoalgebraDatum, x: Hashable, n: int, drop_unit: bool = True) -> dict:
    """``Delta^{(n)} x`` as ``{(y_1, ..., y_n): coeff}``; terms with a unit factor are dropped."""
    cur = {(x,): Fraction(1)}
    for _ in range(n - 1):
        nxt: dict = {}
        for w, c in cur.items():
            for (y, z), v in A.coproduct(w[0]).items():
                if drop_unit and (y == A.unit or z == A.unit):
                    continue
                add_into(nxt, (y, z) + w[1:], c * v)
        cur = nxt
    return cur


def lift_component(A: CoalgebraDatum, f1: Callable, g: DGLA, x: Hashable, n: int) -> dict:
    """``f_n(x) = (1/n!) pi_S f_1^{(x) n} Delta^{(n)}(x)`` as an element of ``S^n(g[1])``."""
    if n == 0:
        c = A.counit(x)
        return {(): c} if c else {}
    out: dict = {}
    scale = Fraction(1, factorial(n))
    for word, c in iterated_coproduct(A, x, n).items():
        prod = {(): Fraction(1)}
        for y in word:
            fy = f1(y)
            if not fy:
                prod = {}
                break
            prod = elem_mul(g, prod, {(k,): v for k, v in fy.items()})
            if not prod:
                break
        for m, v in prod.items():
            add_into(out, m, scale * c * v)
    return out


def coalgebra_lift(A: CoalgebraDatum, f1: Callable, g: DGLA, check: bool = True) -> Callable[[Hashable], dict]:
    """The unital coalgebra map ``f : A -> C(g)`` with ``p_1 f = f_1``.

    Components above the filtration level of ``x`` vanish, so ``f(x)`` is the
    finite sum ``f_0(x) + ... + f_k(x)`` with ``k = arity(x)``.
    """
    if check:
        res = mc_residual(A, f1, g)
        if res:
            x = next(iter(res))
            raise NotMaurerCartan(f"residual nonzero at {x!r}")
    cache: dict = {}

    def f(x):
        if x not in cache:
            out: dict = {}
            for n in range(A.arity(x) + 1):
                for m, c in lift_component(A, f1, g, x, n).items():
                    add_into(out, m, c)
            cache[x] = out
        return cache[x]

    return f


def check_coalgebra_map(A: CoalgebraDatum, f: Callable, g: DGLA, elements: Iterable | None = None) -> list:
    """Return the basis elements where ``d f = f d`` or ``Delta f = (f (x) f) Delta`` fails."""
    bad = []
    for x in elements if elements is not None else A.basis:
        fx = f(x)
        lhs = apply_linear(lambda m: d_mono(g, m), fx)
        rhs = apply_linear(f, A.diff(x))
        diff = dict(lhs)
        for k, v in rhs.items():
            add_into(diff, k, -v)
        if diff:
            bad.append(("chain", x))
            continue
        dl = apply_linear(lambda m: coproduct_mono(g, m), fx)
        for (y, z), c in A.coproduct(x).items():
            for a, u in f(y).items():
                for b, v in f(z).items():
                    add_into(dl, (a, b), -c * u * v)
        if dl:
            bad.append(("coalgebra", x))
    return bad


# ----------------------------------------------------------------------------
# constructions


def direct_sum(g: DGLA, h: DGLA) -> DGLA:
    n = g.dim
    diff = [dict(v) for v in g.diff] + [{k + n: c for k, c in v.items()} for v in h.diff]
    br = {k: dict(v) for k, v in g.bracket.items()}
    for (i, j), v in h.bracket.items():
        br[(i + n, j + n)] = {k + n: c for k, c in v.items()}
    return DGLA(g.degrees + h.degrees, diff, br, g.labels + h.labels)


def tensor_with_cdga(L: DGLA, degrees: Sequence[int], mult: dict, diff: dict, names: Sequence[str] | None = None) -> DGLA:
    """``L (x) A`` for a Lie algebra L in degree 0 and a graded commutative dg algebra A.

    A is given on a basis by ``mult[(a, b)] = {c: coeff}`` and ``diff[a] = {b: coeff}``.
    The bracket is ``[x (x) a, y (x) b] = [x, y] (x) ab``.
    """
    if any(L.degrees):
        raise ValueError("L must sit in degree 0")
    na = len(degrees)
    names = list(names) if names else [f"a{k}" for k in range(na)]

    def idx(x, a):
        return x * na + a

    degs, labs, dl = [], [], []
    for x in range(L.dim):
        for a in range(na):
            degs.append(degrees[a])
            labs.append(f"{L.labels[x]}{names[a]}")
            dl.append({idx(x, b): Fraction(c) for b, c in diff.get(a, {}).items() if c})
    br: dict = {}
    for (x, y), val in L.bracket.items():
        for (a, b), prod in mult.items():
            out: dict = {}
            for z, c in val.items():
                for e, v in prod.items():
                    add_into(out, idx(z, e), c * Fraction(v))
            if out:
                br[(idx(x, a), idx(y, b))] = out
    return DGLA(degs, dl, br, labs)


def change_basis(g: DGLA, P: Sequence[Sequence]) -> DGLA:
    """New basis ``f_i = sum_j P[i][j] e_j``; P must be invertible and degree preserving."""
    from .exactla import solve

    n = g.dim
    P = [[Fraction(x) for x in row] for row in P]
    for i in range(n):
        for j in range(n):
            if P[i][j] and g.degrees[i] != g.degrees[j]:
                raise ValueError("basis change mixes degrees")
    # coordinates in the new basis: solve P^T c = v
    PT = SparseMatrix.from_dense([[P[j][i] for j in range(n)] for i in range(n)])

    def to_new(v: dict) -> dict:
        c = solve(PT, v)
        if c is None:
            raise ValueError("basis change is not invertible")
        return c

    fs = [{j: P[i][j] for j in range(n) if P[i][j]} for i in range(n)]
    diff = [to_new(g.d(fs[i])) for i in range(n)]
    br = {}
    for i in range(n):
        for j in range(n):
            v = g.br(fs[i], fs[j])
            if v:
                br[(i, j)] = to_new(v)
    return DGLA(list(g.degrees), diff, br, [f"f{i}" for i in range(n)])
