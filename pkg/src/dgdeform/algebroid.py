"""Lie algebroids over a truncated polynomial base and their enveloping algebras.

The base ``O = Q[x_1..x_m] / (monomials of degree > D)`` stands in for a smooth
formal base.  Its elements remember how far they can be trusted: a
``WeilElement`` with validity ``v`` agrees with the true polynomial answer
modulo ``m^{v+1}``; ``EXACT`` means the stored polynomial *is* the answer.
Partial derivatives lower validity by one, and any operation that would leave
nothing trustworthy raises :class:`ValidityExceeded` instead of returning
garbage.

Everything over ``O`` uses left coefficients: an element of the enveloping
algebra is ``{pbw_monomial: WeilElement}`` meaning ``sum f_M . M``, and the
rule ``b . f = f b + pi(b)(f)`` moves coefficients to the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement, product
from math import factorial
from typing import Callable, Sequence

from .dgla import (
    DGLA,
    AxiomReport,
    CEComplex,
    CoalgebraDatum,
    add_into,
    check_coalgebra_map,
    coalgebra_lift,
    elem_mul,
    mc_residual,
)
from .envelope import schur, symmetric_power_dims
from .exactla import SemiEchelon, SparseMatrix, solve
from .graded import koszul_sign

EXACT = 10**9


class ValidityExceeded(ArithmeticError):
    """A result would depend on coefficients beyond the stored truncation."""


class NoLift(ValueError):
    """No cocycle lift of a coordinate vector field exists in the given data."""


# ----------------------------------------------------------------------------
# the base


class WeilElement:
    """A truncated polynomial together with the degree up to which it is reliable."""

    __slots__ = ("base", "c", "valid")

    def __init__(self, base: "WeilBase", coeffs: dict, valid: int = EXACT):
        self.base = base
        if valid > base.D and any(v and sum(e) > base.D for e, v in coeffs.items()):
            valid = base.D
        self.c = {e: Fraction(v) for e, v in coeffs.items() if v and sum(e) <= valid}
        self.valid = valid

    # arithmetic
    def _coerce(self, other) -> "WeilElement":
        if isinstance(other, WeilElement):
            return other
        return self.base.const(other)

    def __add__(self, other):
        o = self._coerce(other)
        out = dict(self.c)
        for e, v in o.c.items():
            add_into(out, e, v)
        return WeilElement(self.base, out, min(self.valid, o.valid))

    __radd__ = __add__

    def __neg__(self):
        return WeilElement(self.base, {e: -v for e, v in self.c.items()}, self.valid)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, WeilElement):
            if isinstance(other, (int, Fraction)):
                return WeilElement(self.base, {e: v * other for e, v in self.c.items()}, self.valid)
            return NotImplemented
        D = self.base.D
        valid = min(self.valid, other.valid)
        out: dict = {}
        for a, u in self.c.items():
            for b, w in other.c.items():
                e = tuple(x + y for x, y in zip(a, b))
                if sum(e) > D:
                    valid = min(valid, D)
                    continue
                add_into(out, e, u * w)
        return WeilElement(self.base, out, valid)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __bool__(self) -> bool:
        return bool(self.c)

    def __eq__(self, other) -> bool:
        return not (self - self._coerce(other))

    __hash__ = None

    def degree_low(self) -> int | None:
        return min((sum(e) for e in self.c), default=None)

    def constant(self) -> Fraction:
        return self.c.get((0,) * self.base.m, Fraction(0))

    def require(self, v: int) -> "WeilElement":
        if self.valid < v:
            raise ValidityExceeded(f"element valid to degree {self.valid}, needed {v}")
        return self

    def __repr__(self) -> str:
        if not self.c:
            return "0"
        terms = []
        for e in sorted(self.c, key=lambda e: (sum(e), tuple(-x for x in e))):
            mono = "*".join(f"x{i}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            v = self.c[e]
            terms.append(f"{v}" if not mono else (mono if v == 1 else f"{v}*{mono}"))
        tail = "" if self.valid >= EXACT else f" [valid<={self.valid}]"
        return " + ".join(terms) + tail


class WeilBase:
    """``Q[x_1..x_m]`` truncated above total degree D, with partial derivatives."""

    def __init__(self, m: int, D: int):
        if m < 0 or D < 0:
            raise ValueError("need m >= 0 and D >= 0")
        self.m = m
        self.D = D
        monos = []
        for d in range(D + 1):
            for combo in combinations_with_replacement(range(m), d):
                e = [0] * m
                for i in combo:
                    e[i] += 1
                monos.append(tuple(e))
        if m == 0:
            monos = [()]
        self.monomials = monos
        self.index = {e: k for k, e in enumerate(monos)}

    def __repr__(self) -> str:
        return f"WeilBase(m={self.m}, D={self.D})"

    def __eq__(self, other) -> bool:
        return isinstance(other, WeilBase) and (self.m, self.D) == (other.m, other.D)

    def __hash__(self):
        return hash((self.m, self.D))

    # the protocol used by dgla for coefficients in a base algebra
    @property
    def dim(self) -> int:
        return len(self.monomials)

    def zero(self) -> WeilElement:
        return WeilElement(self, {})

    def one(self) -> WeilElement:
        return self.const(1)

    def const(self, c) -> WeilElement:
        return WeilElement(self, {(0,) * self.m: Fraction(c)})

    def basis_element(self, k: int) -> WeilElement:
        return WeilElement(self, {self.monomials[k]: Fraction(1)})

    def coords(self, f: WeilElement) -> list:
        """Coordinates in the monomial basis; f must be reliable through degree D."""
        if f.valid < self.D:
            raise ValidityExceeded(f"element valid to degree {f.valid}, base needs {self.D}")
        out = [Fraction(0)] * self.dim
        for e, v in f.c.items():
            if sum(e) <= self.D:
                out[self.index[e]] = v
        return out

    # constructors
    def var(self, i: int) -> WeilElement:
        e = [0] * self.m
        e[i] = 1
        return WeilElement(self, {tuple(e): Fraction(1)})

    def monomial(self, e: Sequence[int]) -> WeilElement:
        return WeilElement(self, {tuple(e): Fraction(1)})

    def element(self, data) -> WeilElement:
        """From a WeilElement, a scalar, or ``{exponent tuple: coeff}``."""
        if isinstance(data, WeilElement):
            return self.coerce(data)
        if isinstance(data, dict):
            return WeilElement(self, {tuple(e): Fraction(v) for e, v in data.items()})
        return self.const(data)

    def coerce(self, f: WeilElement) -> WeilElement:
        """Re-read an element of another truncation of the same ring."""
        if f.base is self:
            return f
        if f.base.m != self.m:
            raise ValueError("different number of variables")
        valid = f.valid
        if f.base.D < self.D:
            valid = min(valid, f.base.D)
        if any(sum(e) > self.D for e in f.c):
            valid = min(valid, self.D)
        return WeilElement(self, f.c, valid)

    def restrict(self, D: int) -> "WeilBase":
        return WeilBase(self.m, D)

    # calculus
    def partial(self, f: WeilElement, i: int) -> WeilElement:
        valid = f.valid if f.valid >= EXACT else f.valid - 1
        if valid < 0:
            raise ValidityExceeded(f"derivative of an element valid only to degree {f.valid}")
        out: dict = {}
        for e, v in f.c.items():
            if e[i]:
                ee = list(e)
                ee[i] -= 1
                out[tuple(ee)] = v * e[i]
        return WeilElement(self, out, valid)

    def apply_field(self, field: Sequence[WeilElement], f: WeilElement) -> WeilElement:
        """``sum_i field[i] * d_i f``."""
        out = self.zero()
        for i, a in enumerate(field):
            if a:
                out = out + a * self.partial(f, i)
        return out

    def field_bracket(self, X: Sequence[WeilElement], Y: Sequence[WeilElement]) -> list:
        return [self.apply_field(X, Y[i]) - self.apply_field(Y, X[i]) for i in range(self.m)]

    def partial_matrix(self, i: int) -> SparseMatrix:
        """``d_i`` on canonical representatives, as a Q-matrix on the monomial basis."""
        ents = []
        for k, e in enumerate(self.monomials):
            if e[i]:
                ee = list(e)
                ee[i] -= 1
                ents.append((self.index[tuple(ee)], k, Fraction(e[i])))
        return SparseMatrix.from_entries(self.dim, self.dim, ents)

    def leibniz_defect(self, f: WeilElement, g: WeilElement, i: int) -> WeilElement:
        """``d_i(fg) - d_i(f) g - f d_i(g)`` computed on truncated representatives."""
        strip = lambda h: WeilElement(self, h.c)
        fg = strip(strip(f) * strip(g))
        lhs = strip(self.partial(fg, i))
        rhs = strip(strip(self.partial(strip(f), i)) * strip(g)) + strip(strip(f) * strip(self.partial(strip(g), i)))
        return strip(lhs - rhs)


def weil_base(m: int, D: int) -> WeilBase:
    base = WeilBase(m, D)
    mats = [base.partial_matrix(i) for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            if mats[i] @ mats[j] != mats[j] @ mats[i]:
                raise AssertionError("partial derivatives do not commute")
    return base


# ----------------------------------------------------------------------------
# algebroids


def _clean(vec: dict) -> dict:
    return {k: v for k, v in vec.items() if v}


@dataclass
class Algebroid:
    """A dg Lie algebroid, free over the base on homogeneous generators ``b_0..b_{r-1}``.

    ``anchor[k]`` lists the coefficients of ``pi(b_k) = sum_i anchor[k][i] d_i``;
    ``bracket[(j, k)]`` and ``diff[k]`` are ``{index: WeilElement}``.  The
    bracket of general elements follows ``[a, f b] = f [a, b] + pi(a)(f) b``.
    """

    base: WeilBase
    degrees: list
    anchor: list
    bracket: dict
    diff: list
    labels: list = field(default_factory=list)

    def __post_init__(self):
        r = len(self.degrees)
        if not self.labels:
            self.labels = [f"b{k}" for k in range(r)]
        if not (len(self.anchor) == len(self.diff) == len(self.labels) == r):
            raise ValueError("degrees, anchor, diff and labels must have equal length")

    @classmethod
    def from_table(
        cls,
        base: WeilBase,
        degrees: Sequence[int],
        anchor: dict | None = None,
        brackets: dict | None = None,
        diff: dict | None = None,
        labels: Sequence[str] | None = None,
    ) -> "Algebroid":
        """Coefficients may be scalars, WeilElements or ``{exponents: coeff}``.

        ``anchor`` maps a generator to a list of m coefficients; brackets are
        completed by graded skew symmetry (twisted by the anchor).
        """
        r = len(degrees)
        el = base.element
        anc = [[base.zero()] * base.m for _ in range(r)]
        for k, row in (anchor or {}).items():
            anc[k] = [el(v) for v in row]
        dl = [{} for _ in range(r)]
        for k, val in (diff or {}).items():
            dl[k] = _clean({l: el(v) for l, v in val.items()})
        br = {}
        for (j, k), val in (brackets or {}).items():
            br[(j, k)] = _clean({l: el(v) for l, v in val.items()})
        for (j, k), val in list(br.items()):
            if (k, j) not in br and j != k:
                s = -koszul_sign((degrees[j], degrees[k]), (1, 0))
                br[(k, j)] = {l: v * s for l, v in val.items()}
        return cls(base, list(degrees), anc, br, dl, list(labels) if labels else [])

    @property
    def rank(self) -> int:
        return len(self.degrees)

    def generator(self, k: int) -> dict:
        return {k: self.base.one()}

    # element arithmetic; elements are {generator: WeilElement}
    def anchor_of(self, x: dict) -> list:
        out = [self.base.zero() for _ in range(self.base.m)]
        for k, f in x.items():
            for i, a in enumerate(self.anchor[k]):
                if a:
                    out[i] = out[i] + f * a
        return out

    def act(self, x: dict, f: WeilElement) -> WeilElement:
        return self.base.apply_field(self.anchor_of(x), f)

    def d(self, x: dict) -> dict:
        out: dict = {}
        for k, f in x.items():
            for l, v in self.diff[k].items():
                add_into(out, l, f * v)
        return out

    def br(self, x: dict, y: dict) -> dict:
        """Bracket of elements, extended by the twisted Leibniz rule on both sides."""
        base = self.base
        out: dict = {}
        for j, f in x.items():
            for k, g in y.items():
                for l, v in self.bracket.get((j, k), {}).items():
                    add_into(out, l, f * g * v)
                # f pi(b_j)(g) b_k
                if self.degrees[j] == 0:
                    dg = base.apply_field(self.anchor[j], g)
                    if dg:
                        add_into(out, k, f * dg)
                # -(-1)^{|b_j||b_k|} g pi(b_k)(f) b_j
                if self.degrees[k] == 0:
                    df = base.apply_field(self.anchor[k], f)
                    if df:
                        s = koszul_sign((self.degrees[j], self.degrees[k]), (1, 0))
                        add_into(out, j, -s * g * df)
        return out

    def kernel_indices(self) -> list[int]:
        return [k for k in range(self.rank) if not any(self.anchor[k])]

    def tangent_indices(self) -> list[int]:
        return [k for k in range(self.rank) if any(self.anchor[k])]

    def anchor_matrix(self) -> list[list[WeilElement]]:
        """Anchor coefficients of the tangent generators, rows indexed by generator."""
        return [list(self.anchor[k]) for k in self.tangent_indices()]

    def is_transitive(self) -> bool:
        t = self.tangent_indices()
        if len(t) != self.base.m:
            return False
        M = [[a.constant() for a in self.anchor[k]] for k in t]
        return _det(M) != 0


def _det(M) -> Fraction:
    n = len(M)
    if n == 0:
        return Fraction(1)
    A = [[Fraction(x) for x in row] for row in M]
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c]), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            for k in range(c, n):
                A[r][k] -= f * A[c][k]
    return det


def check_algebroid(A: Algebroid) -> AxiomReport:
    """Verify the dg Lie algebroid axioms on generators (and generator times variable).

    Comparisons are made within validity; failures carry generator labels.
    """
    base = A.base
    L = A.labels
    fails: list = []
    r = A.rank
    gens = [A.generator(k) for k in range(r)]
    xs = [base.var(i) for i in range(base.m)]

    def fail(name, wit, val):
        fails.append((name, wit, val))

    def is_zero_vec(v):
        return not any(v.values()) if isinstance(v, dict) else not any(v)

    def vsub(a, b):
        out = dict(a)
        for k, v in b.items():
            add_into(out, k, -v)
        return out

    for k in range(r):
        if A.degrees[k] != 0 and any(A.anchor[k]):
            fail("anchor degree", (L[k],), A.anchor[k])
        dd = A.d(A.d(gens[k]))
        if not is_zero_vec(dd):
            fail("d^2", (L[k],), dd)
        pd = A.anchor_of(A.d(gens[k]))
        if any(pd):
            fail("anchor chain map", (L[k],), pd)
        for l, v in A.diff[k].items():
            if A.degrees[l] != A.degrees[k] + 1:
                fail("d degree", (L[k],), v)
    for j in range(r):
        for k in range(r):
            bjk = A.br(gens[j], gens[k])
            for l in bjk:
                if A.degrees[l] != A.degrees[j] + A.degrees[k]:
                    fail("bracket degree", (L[j], L[k]), bjk)
            s = koszul_sign((A.degrees[j], A.degrees[k]), (1, 0))
            skew = dict(bjk)
            for l, v in A.br(gens[k], gens[j]).items():
                add_into(skew, l, s * v)
            if not is_zero_vec(skew):
                fail("skew", (L[j], L[k]), skew)
            lhs = A.anchor_of(bjk)
            rhs = base.field_bracket(A.anchor[j], A.anchor[k]) if A.degrees[j] == A.degrees[k] == 0 else [base.zero()] * base.m
            if any(a - b for a, b in zip(lhs, rhs)):
                fail("anchor Lie", (L[j], L[k]), [a - b for a, b in zip(lhs, rhs)])
            # d is a derivation
            dj, dk = A.d(gens[j]), A.d(gens[k])
            leib = vsub(A.d(bjk), A.br(dj, gens[k]))
            sj = -1 if A.degrees[j] & 1 else 1
            for l, v in A.br(gens[j], dk).items():
                add_into(leib, l, -sj * v)
            if not is_zero_vec(leib):
                fail("Leibniz", (L[j], L[k]), leib)
            # twisted Leibniz against each coordinate function
            for i, x in enumerate(xs):
                left = A.br({j: x}, gens[k])
                right = {l: x * v for l, v in bjk.items()}
                if A.degrees[k] == 0:
                    add_into(right, j, -s * A.act(gens[k], x))
                if not is_zero_vec(vsub(left, right)):
                    fail("twisted Leibniz", (L[j], f"x{i}", L[k]), vsub(left, right))
    for i in range(r):
        for j in range(i, r):
            for k in range(j, r):
                a, b, c = gens[i], gens[j], gens[k]
                # [a,[b,c]] = [[a,b],c] + (-1)^{|a||b|} [b,[a,c]]
                lhs = A.br(a, A.br(b, c))
                rhs = A.br(A.br(a, b), c)
                s = koszul_sign((A.degrees[i], A.degrees[j]), (1, 0))
                for l, v in A.br(b, A.br(a, c)).items():
                    add_into(rhs, l, s * v)
                jac = vsub(lhs, rhs)
                if not is_zero_vec(jac):
                    fail("Jacobi", (L[i], L[j], L[k]), jac)
    ker = set(A.kernel_indices())
    for h in ker:
        for k in range(r):
            v = A.br(gens[k], gens[h])
            if any(A.anchor_of(v)):
                fail("kernel ideal", (L[k], L[h]), v)
    return AxiomReport(not fails, fails)


def tangent_algebroid(base: WeilBase) -> Algebroid:
    anchor = {i: [1 if j == i else 0 for j in range(base.m)] for i in range(base.m)}
    return Algebroid.from_table(base, [0] * base.m, anchor, labels=[f"d{i}" for i in range(base.m)])


def olie_algebroid(base: WeilBase, g: DGLA) -> Algebroid:
    """``O (x) g`` with zero anchor."""
    br = {k: {l: Fraction(c) for l, c in v.items()} for k, v in g.bracket.items()}
    diff = {k: {l: Fraction(c) for l, c in v.items()} for k, v in enumerate(g.diff)}
    return Algebroid.from_table(base, g.degrees, None, br, diff, g.labels)


def gauged_transitive(base: WeilBase, L: DGLA, omega: Sequence[dict] | None = None) -> Algebroid:
    """``O (x) L  (+)  T_O`` in the frame ``gamma_i = d_i + omega_i``.

    ``omega[i]`` is a degree 0 element ``{a: coeff}`` of ``O (x) L``.  In this
    frame ``[gamma_i, h_a] = [omega_i, h_a]``,
    ``[gamma_i, gamma_j] = d_i omega_j - d_j omega_i + [omega_i, omega_j]`` and
    ``d gamma_i = d omega_i``.
    """
    m, n = base.m, L.dim
    om = [{a: base.element(c) for a, c in (omega[i] if omega else {}).items()} for i in range(m)]
    for w in om:
        if any(L.degrees[a] != 0 for a in w if w[a]):
            raise ValueError("omega must have degree 0")
    Lo = olie_algebroid(base, L)
    degrees = list(L.degrees) + [0] * m
    labels = list(L.labels) + [f"g{i}" for i in range(m)]
    br = {k: dict(v) for k, v in Lo.bracket.items()}
    for i in range(m):
        for a in range(n):
            v = Lo.br(om[i], {a: base.one()})
            if v:
                br[(n + i, a)] = v
        for j in range(i + 1, m):
            v = Lo.br(om[i], om[j])
            for a, c in om[j].items():
                add_into(v, a, base.partial(c, i))
            for a, c in om[i].items():
                add_into(v, a, -base.partial(c, j))
            if v:
                br[(n + i, n + j)] = v
    diff = {k: dict(v) for k, v in enumerate(Lo.diff)}
    for i in range(m):
        diff[n + i] = Lo.d(om[i])
    anchor = {n + i: [1 if j == i else 0 for j in range(m)] for i in range(m)}
    return Algebroid.from_table(base, degrees, anchor, br, diff, labels)


# ----------------------------------------------------------------------------
# twisted enveloping algebra


def _subsets(n: int):
    for k in range(n + 1):
        yield from combinations(range(n), k)


class TwistedEnvelope:
    """``F_N U_O(A)``: left O-combinations of PBW monomials.

    Generators are ordered kernel-first, then by (degree, index); a PBW
    monomial is a non-decreasing tuple in that order without repeated odd
    generators.
    """

    def __init__(self, A: Algebroid, N: int):
        self.A = A
        self.base = A.base
        self.N = N
        ker = set(A.kernel_indices())
        self.order = sorted(range(A.rank), key=lambda k: (k not in ker, A.degrees[k], k))
        self.rank_of = {g: r for r, g in enumerate(self.order)}
        self._nf: dict = {}
        self.basis = [()]
        for k in range(1, N + 1):
            for ranks in combinations_with_replacement(range(A.rank), k):
                m = tuple(self.order[r] for r in ranks)
                if self.is_normal(m):
                    self.basis.append(m)
        self.index = {m: i for i, m in enumerate(self.basis)}

    def deg(self, m: Sequence[int]) -> int:
        return sum(self.A.degrees[x] for x in m)

    def is_normal(self, w: Sequence[int]) -> bool:
        for x, y in zip(w, w[1:]):
            if self.rank_of[x] > self.rank_of[y]:
                return False
            if x == y and self.A.degrees[x] & 1:
                return False
        return True

    def move_left(self, word: tuple, f: WeilElement) -> list:
        """``word . f = sum (pi(b_S) f) . word_without_S`` over subsets S of positions."""
        out = []
        A, base = self.A, self.base
        for S in _subsets(len(word)):
            g = f
            for pos in reversed(S):
                k = word[pos]
                if A.degrees[k] != 0 or not any(A.anchor[k]):
                    g = base.zero()
                    break
                g = base.apply_field(A.anchor[k], g)
                if not g:
                    break
            if g:
                out.append((g, tuple(word[p] for p in range(len(word)) if p not in S)))
        return out

    def _sandwich(self, pre: tuple, f: WeilElement, post: tuple, out: dict, scale) -> None:
        """Accumulate ``scale * pre . f . post`` in normal form."""
        for g, sub in self.move_left(pre, f):
            for m, v in self.normal_form(sub + post).items():
                add_into(out, m, scale * g * v)

    def normal_form(self, w: tuple) -> dict:
        """Straighten a coefficient-free word of generators."""
        w = tuple(w)
        hit = self._nf.get(w)
        if hit is not None:
            return hit
        A = self.A
        deg = A.degrees
        out: dict = {}
        for k in range(len(w) - 1):
            y, x = w[k], w[k + 1]
            pre, post = w[:k], w[k + 2 :]
            if self.rank_of[y] > self.rank_of[x]:
                s = koszul_sign((deg[y], deg[x]), (1, 0))
                for m, c in self.normal_form(pre + (x, y) + post).items():
                    add_into(out, m, s * c)
                for z, c in A.bracket.get((y, x), {}).items():
                    self._sandwich(pre, c, (z,) + post, out, 1)
                break
            if y == x and deg[x] & 1:
                for z, c in A.bracket.get((x, x), {}).items():
                    self._sandwich(pre, c, (z,) + post, out, Fraction(1, 2))
                break
        else:
            out = {w: self.base.one()}
        self._nf[w] = out
        return out

    def element(self, data: dict) -> dict:
        """Normalize ``{word: coeff}`` with arbitrary words."""
        out: dict = {}
        for w, f in data.items():
            f = self.base.element(f)
            for m, v in self.normal_form(tuple(w)).items():
                add_into(out, m, f * v)
        return out

    def coefficient(self, f) -> dict:
        f = self.base.element(f)
        return {(): f} if f else {}

    def mul(self, u: dict, v: dict) -> dict:
        out: dict = {}
        for a, f in u.items():
            for b, g in v.items():
                for h, sub in self.move_left(a, g):
                    for m, c in self.normal_form(sub + b).items():
                        add_into(out, m, f * h * c)
        return out

    def d_word(self, w: tuple) -> dict:
        out: dict = {}
        before = 0
        for k, x in enumerate(w):
            s = -1 if before & 1 else 1
            for y, c in self.A.diff[x].items():
                self._sandwich(w[:k], c, (y,) + w[k + 1 :], out, s)
            before += self.A.degrees[x]
        return out

    def d(self, u: dict) -> dict:
        out: dict = {}
        for m, f in u.items():
            for mm, v in self.d_word(m).items():
                add_into(out, mm, f * v)
        return out

    def coproduct_mono(self, m: tuple) -> dict:
        """Generators are primitive; coefficients pass through the left-module tensor."""
        out: dict = {}
        pars = [self.A.degrees[x] for x in m]
        n = len(m)
        for I in _subsets(n):
            J = [j for j in range(n) if j not in I]
            s = koszul_sign(pars, list(I) + J)
            add_into(out, (tuple(m[i] for i in I), tuple(m[j] for j in J)), s)
        return out

    def coproduct(self, u: dict) -> dict:
        out: dict = {}
        for m, f in u.items():
            for k, s in self.coproduct_mono(m).items():
                add_into(out, k, f * s)
        return out

    def counit(self, u: dict):
        return u.get((), self.base.zero())

    def graded_dims(self) -> list[int]:
        """Q-dimensions of the pieces ``gr_i``, i.e. ``dim O`` times the PBW count."""
        return [self.base.dim * sum(1 for m in self.basis if len(m) == i) for i in range(self.N + 1)]

    def filtration_dims(self) -> list[int]:
        g = self.graded_dims()
        return [sum(g[: i + 1]) for i in range(self.N + 1)]

    def coalgebra(self) -> CoalgebraDatum:
        """The O-coalgebra on PBW monomials; differential values have O coefficients."""
        one = self.base.one()
        return CoalgebraDatum(
            basis=list(self.basis),
            degree=self.deg,
            diff=self.d_word,
            coproduct=self.coproduct_mono,
            counit=lambda m: one if m == () else self.base.zero(),
            unit=(),
            arity=len,
        )

    def symmetrization(self, m: tuple) -> dict:
        """``e(x_1...x_n) = (1/n!) sum_sigma (+-) x_sigma(1)...x_sigma(n)``."""
        from itertools import permutations

        n = len(m)
        out: dict = {}
        pars = [self.A.degrees[x] for x in m]
        scale = Fraction(1, factorial(n))
        for p in permutations(range(n)):
            s = koszul_sign(pars, list(p))
            for mm, v in self.normal_form(tuple(m[i] for i in p)).items():
                add_into(out, mm, scale * s * v)
        return out


def twisted_env(A: Algebroid, N: int, check: bool = True) -> TwistedEnvelope:
    if check:
        rep = check_algebroid(A)
        if not rep.passed:
            from .dgla import AxiomFailure

            name, wit, _ = rep.failures[0]
            raise AxiomFailure(f"{name} fails at {wit}")
        if A.tangent_indices() and not A.is_transitive():
            raise ValueError("the envelope is built for transitive algebroids or zero anchor")
    return TwistedEnvelope(A, N)


def diff_model(base: WeilBase, N: int) -> TwistedEnvelope:
    """Differential operators of order at most N as the envelope of the tangent algebroid."""
    return TwistedEnvelope(tangent_algebroid(base), N)


# ----------------------------------------------------------------------------
# PBW, computed from the defining relations


@dataclass
class PBWReport:
    gr_dims: list
    sym_dims: list
    certificate: bool
    holds_through: int

    @property
    def holds(self) -> bool:
        return self.gr_dims == self.sym_dims and self.certificate

    def summary(self) -> str:
        if self.holds:
            return f"PBW holds through {self.holds_through}"
        return f"PBW fails: gr dims {self.gr_dims} vs symmetric dims {self.sym_dims}"


class _Poly:
    """Untruncated polynomial arithmetic used by the relation computation."""

    @staticmethod
    def mul(a: dict, b: dict) -> dict:
        out: dict = {}
        for e, u in a.items():
            for f, v in b.items():
                add_into(out, tuple(x + y for x, y in zip(e, f)), u * v)
        return out

    @staticmethod
    def partial(a: dict, i: int) -> dict:
        out: dict = {}
        for e, v in a.items():
            if e[i]:
                ee = list(e)
                ee[i] -= 1
                add_into(out, tuple(ee), v * e[i])
        return out


def pbw_check(A: Algebroid, N: int) -> PBWReport:
    """Compare ``dim gr_i U_O(A)`` with ``dim O . dim S^i`` for ``i <= N``.

    Independent of :class:`TwistedEnvelope`: U is presented as the span of
    ``f . w`` (f a polynomial, w any word of generators) modulo the two-sided
    ideal generated by ``b_y b_x - (+-) b_x b_y - [b_y, b_x]`` and by
    ``m^{D+1}``.  Coefficients are moved left with genuine polynomial
    arithmetic, so no validity is lost.  Columns are ordered longest word
    first; pivots at word length i count relations living in ``F_i``.
    The certificate says that PBW monomials times O-monomials stay
    independent modulo the relations.
    """
    base = A.base
    m, D, r = base.m, base.D, A.rank
    deg = A.degrees
    anchor = [[dict(a.c) for a in row] for row in A.anchor]
    bracket = {k: {l: dict(v.c) for l, v in val.items()} for k, val in A.bracket.items()}
    tangent = [k for k in range(r) if deg[k] == 0 and any(anchor[k])]

    def act(k, f):
        out: dict = {}
        for i, a in enumerate(anchor[k]):
            if a:
                for e, v in _Poly.mul(a, _Poly.partial(f, i)).items():
                    add_into(out, e, v)
        return out

    def move_left(word, f):
        res = []
        for S in _subsets(len(word)):
            g = f
            for pos in reversed(S):
                if word[pos] not in tangent:
                    g = {}
                    break
                g = act(word[pos], g)
                if not g:
                    break
            if g:
                res.append((g, tuple(word[p] for p in range(len(word)) if p not in S)))
        return res

    words = [()]
    for k in range(1, N + 1):
        words.extend(product(range(r), repeat=k))
    words.sort(key=lambda w: (-len(w), w))
    monos = base.monomials
    col = {}
    for w in words:
        for e in monos:
            col[(e, w)] = len(col)

    def emit(expr: dict):
        row = {}
        for (e, w), v in expr.items():
            if sum(e) <= D:
                row[col[(e, w)]] = v
        return row

    ech = SemiEchelon()
    zero_e = (0,) * m
    for y in range(r):
        for x in range(r):
            if y < x or (y == x and not deg[x] & 1):
                continue
            s = koszul_sign((deg[y], deg[x]), (1, 0))
            rel = [({zero_e: Fraction(1)}, (y, x))]
            if y != x:
                rel.append(({zero_e: Fraction(-s)}, (x, y)))
            for z, c in bracket.get((y, x), {}).items():
                rel.append(({e: -v for e, v in c.items()}, (z,)))
            for lu in range(N - 1):
                for lw in range(N - 1 - lu):
                    for u in product(range(r), repeat=lu):
                        for g_e in WeilBase(m, D + lu).monomials:
                            g = {g_e: Fraction(1)}
                            left: dict = {}
                            for coef, w in rel:
                                for h, sub in move_left(u, _Poly.mul(g, coef)):
                                    for e, v in h.items():
                                        if sum(e) <= D:
                                            add_into(left, (e, sub + w), v)
                            if not left:
                                continue
                            for wt in product(range(r), repeat=lw):
                                row = emit({(e, w + wt): v for (e, w), v in left.items()})
                                if row:
                                    ech.add(row)
    length_of = {}
    for (e, w), c in col.items():
        length_of[c] = len(w)
    piv = [0] * (N + 1)
    for c in ech.pivots:
        piv[length_of[c]] += 1
    cols_at = [0] * (N + 1)
    for c, l in length_of.items():
        cols_at[l] += 1
    gr = [cols_at[i] - piv[i] for i in range(N + 1)]
    sym = [base.dim * s for s in symmetric_power_dims(deg, N)]
    # PBW monomials in the envelope's generator order
    env = TwistedEnvelope(A, N)
    cert = True
    for mono in env.basis:
        for e in monos:
            if not ech.add({col[(e, mono)]: Fraction(1)}):
                cert = False
    through = -1
    for i in range(N + 1):
        if gr[i] != sym[i]:
            break
        through = i
    return PBWReport(gr, sym, cert, through)


# ----------------------------------------------------------------------------
# cone, boundary morphism and Kodaira-Spencer maps


def kernel_dgla(A: Algebroid, idx: Sequence[int] | None = None) -> tuple[DGLA, list]:
    """The dg O-Lie algebra spanned by the given (default: zero-anchor) generators."""
    idx = list(A.kernel_indices() if idx is None else idx)
    pos = {k: j for j, k in enumerate(idx)}

    def pull(v: dict, where: str) -> dict:
        out = {}
        for k, c in v.items():
            if k not in pos:
                raise ValueError(f"{where} leaves the sub-algebra at generator {A.labels[k]}")
            out[pos[k]] = c
        return out

    diff = [pull(A.diff[k], "d") for k in idx]
    br = {}
    for a in idx:
        for b in idx:
            v = A.bracket.get((a, b))
            if v:
                br[(pos[a], pos[b])] = pull(v, "bracket")
    h = DGLA([A.degrees[k] for k in idx], diff, br, [A.labels[k] for k in idx], base=A.base)
    return h, idx


class AlgebroidCone:
    """``Cone(h -> A)`` as a dg algebroid: h-copies (shifted down) first, then A."""

    def __init__(self, A: Algebroid, h_idx: Sequence[int] | None = None):
        self.A = A
        self.h, self.h_idx = kernel_dgla(A, h_idx)
        for k in self.h_idx:
            if any(A.anchor[k]):
                raise ValueError("the ideal must lie in the kernel of the anchor")
        base = A.base
        nh = len(self.h_idx)
        self.nh = nh
        pos = {k: j for j, k in enumerate(self.h_idx)}
        self.pos = pos
        degrees = [A.degrees[k] - 1 for k in self.h_idx] + list(A.degrees)
        labels = [f"s{A.labels[k]}" for k in self.h_idx] + list(A.labels)
        anchor = [[base.zero()] * base.m for _ in range(nh)] + [list(a) for a in A.anchor]
        br: dict = {}
        for (a, b), v in A.bracket.items():
            br[(nh + a, nh + b)] = {nh + l: c for l, c in v.items()}
        for a in range(A.rank):
            for j, k in enumerate(self.h_idx):
                v = self._to_h(A.br({a: base.one()}, {k: base.one()}))
                if v:
                    s = -1 if A.degrees[a] & 1 else 1
                    br[(nh + a, j)] = {l: s * c for l, c in v.items()}
                w = self._to_h(A.br({k: base.one()}, {a: base.one()}))
                if w:
                    br[(j, nh + a)] = w
        diff = []
        for j, k in enumerate(self.h_idx):
            v = {l: -c for l, c in self._to_h(A.diff[k]).items()}
            v[nh + k] = base.one()
            diff.append(v)
        for a in range(A.rank):
            diff.append({nh + l: c for l, c in A.diff[a].items()})
        self.X = Algebroid(base, degrees, anchor, br, diff, labels)

    def _to_h(self, v: dict) -> dict:
        out = {}
        for k, c in v.items():
            if k not in self.pos:
                raise ValueError("h is not an ideal")
            out[self.pos[k]] = c
        return out

    def is_h_generator(self, i: int) -> bool:
        return i < self.nh

    def ad(self, a: int, hv: dict) -> dict:
        """``i^{-1} [b_a, i(v)]`` for a generator a of A and v in h (over O)."""
        A = self.A
        iv = {self.h_idx[j]: c for j, c in hv.items()}
        return self._to_h(A.br({a: A.base.one()}, iv))


class BoundaryMorphism:
    """``c : F_N U_O(Cone) -> F_N C_O(h)``, an O-linear filtered coalgebra chain map."""

    def __init__(self, cone: AlgebroidCone, N: int):
        self.cone = cone
        self.N = N
        self.U = TwistedEnvelope(cone.X, N)
        self.coalg = self.U.coalgebra()
        self._c = None

    def c1_word(self, w: Sequence[int]) -> dict:
        """``(-1)^{sum_{j<n} |x_j|} ad(theta x_1)...ad(theta x_{n-1}) phi(x_n)``."""
        cone = self.cone
        if not w or not cone.is_h_generator(w[-1]):
            return {}
        val = {w[-1]: cone.A.base.one()}
        degX = cone.X.degrees
        for x in reversed(w[:-1]):
            if cone.is_h_generator(x):
                return {}
            val = cone.ad(x - cone.nh, val)
            if degX[x] & 1:
                val = {k: -c for k, c in val.items()}
            if not val:
                return {}
        return val

    def c1(self, u: dict) -> dict:
        out: dict = {}
        for m, f in u.items():
            for k, v in self.c1_word(m).items():
                add_into(out, k, f * v)
        return out

    def residual(self) -> dict:
        return mc_residual(self.coalg, self.c1_word, self.cone.h)

    @property
    def c_mono(self) -> Callable[[tuple], dict]:
        if self._c is None:
            self._c = coalgebra_lift(self.coalg, self.c1_word, self.cone.h, check=False)
        return self._c

    def c(self, u: dict) -> dict:
        out: dict = {}
        for m, f in u.items():
            for k, v in self.c_mono(m).items():
                add_into(out, k, f * v)
        return out

    def check(self) -> list:
        """Basis monomials where the lift fails to be a coalgebra chain map."""
        return check_coalgebra_map(self.coalg, self.c_mono, self.cone.h)


def boundary_morphism(A: Algebroid, N: int, h_idx: Sequence[int] | None = None) -> BoundaryMorphism:
    return BoundaryMorphism(AlgebroidCone(A, h_idx), N)


def _inverse_over_base(M: list, base: WeilBase) -> list:
    """Inverse of a square matrix over O whose constant part is invertible."""
    n = len(M)
    A = [list(row) + [base.one() if i == j else base.zero() for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c].constant()), None)
        if p is None:
            raise NoLift("anchor matrix is not invertible at the closed point")
        A[c], A[p] = A[p], A[c]
        inv = _unit_inverse(A[c][c], base)
        A[c] = [inv * x for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


def _unit_inverse(u: WeilElement, base: WeilBase) -> WeilElement:
    """``1/u`` for a unit of O via the geometric series in the maximal ideal."""
    c0 = u.constant()
    nil = u * Fraction(1, c0) - 1
    out, term = base.one(), base.one()
    for _ in range(base.D):
        term = term * (-nil)
        out = out + term
    return out * Fraction(1, c0)


@dataclass
class KSData:
    """Kodaira-Spencer values ``kappa(d^I)`` for multi-indices I of size <= n."""

    n: int
    values: dict  # sorted index tuple -> element of C_O(h) {mono: WeilElement}
    lifts: list  # per coordinate: (alpha, gamma) with alpha in h, gamma in A
    boundary: BoundaryMorphism

    def piece(self, I: tuple, p: int) -> dict:
        return {m: c for m, c in self.values[I].items() if len(m) == p}


def find_lifts(A: Algebroid) -> list:
    """``gamma_p`` with ``pi(gamma_p) = d_p`` and ``alpha_p`` with ``d gamma_p = i(alpha_p)``.

    The deterministic choice inverts the anchor matrix on the tangent
    generators and adds nothing from the kernel.
    """
    if not A.is_transitive():
        raise NoLift("algebroid is not transitive")
    base = A.base
    t = A.tangent_indices()
    for k in t:
        if A.degrees[k] != 0:
            raise NoLift("tangent generators must sit in degree 0")
    M = [[A.anchor[k][i] for i in range(base.m)] for k in t]
    inv = _inverse_over_base(M, base)  # row p of inv . M = e_p
    ker = set(A.kernel_indices())
    lifts = []
    for p in range(base.m):
        gamma = _clean({t[q]: inv[p][q] for q in range(len(t))})
        dg = A.d(gamma)
        if any(k not in ker for k in dg):
            raise NoLift(f"d gamma_{p} leaves the kernel")
        lifts.append((dg, gamma))
    return lifts


def higher_ks(A: Algebroid, n: int, lifts: Sequence | None = None) -> KSData:
    """``kappa^{<=n}`` on ``d_{i_1}...d_{i_k}`` (k <= n) via the boundary morphism.

    The operator is lifted to the product ``a_{i_1} ... a_{i_k}`` in
    ``U_O(Cone)``, with ``a_p = (-alpha_p, gamma_p)``, and pushed through ``c``.
    """
    if lifts is None:
        lifts = find_lifts(A)
    bm = boundary_morphism(A, n)
    cone = bm.cone
    nh = cone.nh
    a_elems = []
    for alpha, gamma in lifts:
        el: dict = {}
        for k, c in alpha.items():
            add_into(el, (cone.pos[k],), -c)
        for k, c in gamma.items():
            add_into(el, (nh + k,), c)
        # a_p must be a cocycle in the cone
        if bm.U.d(el):
            raise NoLift("lift is not a cocycle; d gamma must equal i(alpha)")
        a_elems.append(el)
    U = bm.U
    values = {}
    one = {(): A.base.one()}
    for k in range(n + 1):
        for I in combinations_with_replacement(range(A.base.m), k):
            prod = one
            for i in I:
                prod = U.mul(prod, a_elems[i])
            values[I] = bm.c(prod)
    return KSData(n, values, list(lifts), bm)


def alpha_sequence(A: Algebroid, lift: tuple, n: int) -> list:
    """``alpha_i = ad(gamma)^{i-1} (-alpha)`` for i = 1..n, as elements of h."""
    cone = AlgebroidCone(A)
    alpha, gamma = lift
    cur = {cone.pos[k]: -c for k, c in alpha.items()}
    out = [cur]
    for _ in range(n - 1):
        iv = {cone.h_idx[j]: c for j, c in cur.items()}
        cur = cone._to_h(A.br(gamma, iv))
        out.append(cur)
    return out


def schur_element(h: DGLA, alphas: Sequence[dict], n: int) -> dict:
    """``P_n(alpha_1..alpha_n)`` in ``S_O(h[1])``."""
    out: dict = {}
    gens = [{(k,): c for k, c in a.items()} for a in alphas]
    for mult, coeff in schur(n).items():
        prod = {(): h.base.one() if h.base is not None else Fraction(1)}
        for j, k in enumerate(mult):
            for _ in range(k):
                prod = elem_mul(h, prod, gens[j])
        for m, v in prod.items():
            add_into(out, m, coeff * v)
    return out


def exp_series_coefficients(h: DGLA, alphas: Sequence[dict], n: int) -> list:
    """``n! [t^n] exp(sum_p alpha_p t^p / p!)`` for 0..n, by truncated series arithmetic."""
    one = h.base.one() if h.base is not None else Fraction(1)
    # series as list of S(h[1]) elements, index = power of t
    X = [{}] + [{(k,): c * Fraction(1, factorial(p)) for k, c in alphas[p - 1].items()} for p in range(1, n + 1)]
    result = [{(): one}] + [{} for _ in range(n)]
    term = [{(): one}] + [{} for _ in range(n)]
    for k in range(1, n + 1):
        new = [{} for _ in range(n + 1)]
        for i in range(n + 1):
            for j in range(1, n + 1 - i):
                if term[i] and X[j]:
                    for m, v in elem_mul(h, term[i], X[j]).items():
                        add_into(new[i + j], m, v * Fraction(1, k))
        term = new
        for i in range(n + 1):
            for m, v in term[i].items():
                add_into(result[i], m, v)
    return [{m: v * factorial(i) for m, v in result[i].items()} for i in range(n + 1)]


def restrict_dgla(h: DGLA, base: WeilBase) -> DGLA:
    co = base.coerce
    diff = [{k: co(c) for k, c in v.items()} for v in h.diff]
    br = {key: {k: co(c) for k, c in v.items()} for key, v in h.bracket.items()}
    return DGLA(list(h.degrees), diff, br, list(h.labels), base=base)


def class_difference_is_boundary(h: DGLA, x: dict, y: dict, N: int, valid: int) -> bool:
    """Decide whether ``x - y`` is ``d`` of something in ``F_N C_O(h)``, modulo ``m^{valid+1}``."""
    from .dgla import mono_degree

    small = h.base.restrict(valid)
    hs = restrict_dgla(h, small)
    diff: dict = {}
    for m, c in x.items():
        add_into(diff, m, small.coerce(c))
    for m, c in y.items():
        add_into(diff, m, -small.coerce(c))
    if not diff:
        return True
    degs = {mono_degree(h, m) for m in diff}
    if len(degs) != 1:
        return False
    p = degs.pop()
    ce = CEComplex(hs, N, (p - 1, p))
    vec = ce.vector(diff)
    if any(q != p for q, _ in vec):
        return False
    target = {i: v for (q, i), v in vec.items()}
    block = ce.d.block(p - 1)
    if block.cols == 0:
        return not target
    return solve(block, target) is not None


@dataclass
class ExponentialReport:
    n: int
    kappa: list  # kappa(d^k) for k = 0..n
    schur: list  # P_k(alpha) for k = 0..n
    series: list  # exp-series coefficients for k = 0..n
    cohomologous: list  # kappa(d^k) ~ P_k
    series_match: list  # P_k == series coefficient


def ks_exponential(A: Algebroid, n: int, var: int = 0, lifts: Sequence | None = None, valid: int = 0) -> ExponentialReport:
    """Compare ``kappa(d^k)`` with ``P_k(alpha_1..alpha_k)`` for a single coordinate field."""
    ks = higher_ks(A, n, lifts)
    h = ks.boundary.cone.h
    alphas = alpha_sequence(A, ks.lifts[var], n) if n else []
    kap, sch, coh, sm = [], [], [], []
    series = exp_series_coefficients(h, alphas, n)
    for k in range(n + 1):
        kv = ks.values[(var,) * k]
        pk = schur_element(h, alphas, k) if k else {(): h.base.one()}
        kap.append(kv)
        sch.append(pk)
        coh.append(class_difference_is_boundary(h, kv, pk, n, valid))
        diff = dict(pk)
        for m, c in series[k].items():
            add_into(diff, m, -c)
        sm.append(not diff)
    return ExponentialReport(n, kap, sch, series, coh, sm)


def ks_toy(base: WeilBase, a, c=0) -> Algebroid:
    """Rank-1 toy: ``A = O gamma + O e`` with ``|e| = 1``, ``d gamma = a e``,
    ``[gamma, e] = c e`` and ``pi(gamma) = d_0``."""
    return Algebroid.from_table(
        base,
        [1, 0],
        anchor={1: [1] + [0] * (base.m - 1)},
        brackets={(1, 0): {0: c}},
        diff={1: {0: a}},
        labels=["e", "gamma"],
    )
