"""Enveloping algebras in PBW normal form, cones of ideals and the connecting morphism.

Elements of ``U(a)`` are dictionaries from PBW monomials to coefficients.  A
PBW monomial is a tuple of generator indices that is non-decreasing in the
generator order (degree first, then index) and never repeats an odd
generator.  Words are straightened with ``yx -> (-1)^{|x||y|} xy + [y, x]``
applied at the leftmost disorder, and ``xx -> [x, x]/2`` for odd ``x``.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from math import factorial
from typing import Callable, Sequence

from .dgla import DGLA, CoalgebraDatum, add_into, coalgebra_lift, mc_residual
from .exactla import ColumnSpace
from .graded import GradedMap, GradedSpace, koszul_sign


class NotAnIdeal(ValueError):
    """The given map does not embed a dg Lie ideal."""


# ----------------------------------------------------------------------------
# truncated enveloping algebra


class TruncEnvelope:
    """``F_N U(a)`` with straightened products, differential and coproduct."""

    def __init__(self, a: DGLA, N: int):
        self.a = a
        self.N = N
        self.order = sorted(range(a.dim), key=lambda i: (a.degrees[i], i))
        self.rank = {g: r for r, g in enumerate(self.order)}
        self._nf: dict = {}
        self.basis = [()]
        for k in range(1, N + 1):
            for ranks in combinations_with_replacement(range(a.dim), k):
                m = tuple(self.order[r] for r in ranks)
                if self.is_normal(m):
                    self.basis.append(m)
        self.index = {m: i for i, m in enumerate(self.basis)}

    def deg(self, m: Sequence[int]) -> int:
        return sum(self.a.degrees[x] for x in m)

    def is_normal(self, w: Sequence[int]) -> bool:
        for x, y in zip(w, w[1:]):
            if self.rank[x] > self.rank[y]:
                return False
            if x == y and self.a.degrees[x] & 1:
                return False
        return True

    def normal_form(self, w: tuple) -> dict:
        """Straighten a word of generators into PBW monomials."""
        w = tuple(w)
        hit = self._nf.get(w)
        if hit is not None:
            return hit
        deg = self.a.degrees
        out: dict = {}
        for k in range(len(w) - 1):
            y, x = w[k], w[k + 1]
            if self.rank[y] > self.rank[x]:
                pre, post = w[:k], w[k + 2 :]
                s = koszul_sign((deg[y], deg[x]), (1, 0))
                for m, c in self.normal_form(pre + (x, y) + post).items():
                    add_into(out, m, s * c)
                for z, c in self.a.bracket.get((y, x), {}).items():
                    for m, v in self.normal_form(pre + (z,) + post).items():
                        add_into(out, m, c * v)
                break
            if y == x and deg[x] & 1:
                pre, post = w[:k], w[k + 2 :]
                for z, c in self.a.bracket.get((x, x), {}).items():
                    for m, v in self.normal_form(pre + (z,) + post).items():
                        add_into(out, m, Fraction(1, 2) * c * v)
                break
        else:
            out = {w: Fraction(1)}
        self._nf[w] = out
        return out

    def mul(self, u: dict, v: dict) -> dict:
        out: dict = {}
        for a, c in u.items():
            for b, e in v.items():
                for m, x in self.normal_form(a + b).items():
                    add_into(out, m, c * e * x)
        return out

    def d_word(self, w: tuple) -> dict:
        """Derivation extension of the differential of a, straightened."""
        out: dict = {}
        before = 0
        for k, x in enumerate(w):
            s = -1 if before & 1 else 1
            for y, c in self.a.diff[x].items():
                for m, v in self.normal_form(w[:k] + (y,) + w[k + 1 :]).items():
                    add_into(out, m, s * c * v)
            before += self.a.degrees[x]
        return out

    def d(self, u: dict) -> dict:
        out: dict = {}
        for m, c in u.items():
            for mm, v in self.d_word(m).items():
                add_into(out, mm, c * v)
        return out

    def coproduct_mono(self, m: tuple) -> dict:
        """Generators are primitive; sub-monomials of a PBW monomial stay normal."""
        out: dict = {}
        pars = [self.a.degrees[x] for x in m]
        n = len(m)
        for k in range(n + 1):
            for I in combinations(range(n), k):
                J = [j for j in range(n) if j not in I]
                s = koszul_sign(pars, list(I) + J)
                add_into(out, (tuple(m[i] for i in I), tuple(m[j] for j in J)), s)
        return out

    def filtration_dims(self) -> list[int]:
        return [sum(1 for m in self.basis if len(m) <= i) for i in range(self.N + 1)]

    def graded_dims(self) -> list[int]:
        return [sum(1 for m in self.basis if len(m) == i) for i in range(self.N + 1)]

    def coalgebra(self) -> CoalgebraDatum:
        return CoalgebraDatum(
            basis=list(self.basis),
            degree=self.deg,
            diff=self.d_word,
            coproduct=self.coproduct_mono,
            counit=lambda m: Fraction(1) if m == () else Fraction(0),
            unit=(),
            arity=len,
        )


def env_truncated(a: DGLA, N: int) -> TruncEnvelope:
    return TruncEnvelope(a, N)


def symmetric_power_dims(degrees: Sequence[int], N: int) -> list[int]:
    """``dim S^i`` of a graded space (odd part exterior), by multiset counting."""
    even = sum(1 for p in degrees if p % 2 == 0)
    odd = len(degrees) - even
    out = []
    for i in range(N + 1):
        tot = 0
        for k in range(min(i, odd) + 1):
            r = i - k
            sym = 1 if r == 0 else (0 if even == 0 else _binom(even + r - 1, r))
            tot += _binom(odd, k) * sym
        out.append(tot)
    return out


def _binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k) if 0 <= k <= n else 0


# ----------------------------------------------------------------------------
# cones


class ConeDGLA:
    """The cone of an ideal embedding ``i : h -> g`` as a dg Lie algebra.

    Basis: the generators of ``h`` (shifted down by one) followed by those of
    ``g``.  ``d(h, g) = (-dh, i(h) + dg)`` and
    ``[(h, g), (h', g')] = ((-1)^{|g|}[g, h'] + [h, g'], [g, g'])``.
    """

    def __init__(self, h: DGLA, g: DGLA, inclusion: Sequence[dict]):
        self.h, self.g = h, g
        self.inc = [{k: Fraction(c) for k, c in v.items() if c} for v in inclusion]
        nh = h.dim
        self.nh = nh
        if len(self.inc) != nh:
            raise ValueError("inclusion needs one image per basis vector of h")
        self._span = ColumnSpace(self.inc)
        if self._span.dim != nh:
            raise NotAnIdeal("inclusion is not injective")
        for k in range(nh):
            if any(g.degrees[j] != h.degrees[k] for j in self.inc[k]):
                raise NotAnIdeal(f"i(h_{k}) is not homogeneous of degree {h.degrees[k]}")
            # chain map and ideal conditions
            lhs = g.d(self.inc[k])
            rhs = self.include(h.d(h.basis_vector(k)))
            diff = dict(lhs)
            for j, c in rhs.items():
                add_into(diff, j, -c)
            if diff:
                raise NotAnIdeal(f"i does not commute with d on h_{k}")
            for a in range(g.dim):
                if self._span.coordinates(g.br({a: Fraction(1)}, self.inc[k])) is None:
                    raise NotAnIdeal(f"[g_{a}, i(h_{k})] leaves the image")
        self.X = self._build()

    def include(self, hv: dict) -> dict:
        out: dict = {}
        for k, c in hv.items():
            for j, v in self.inc[k].items():
                add_into(out, j, c * v)
        return out

    def restrict(self, gv: dict) -> dict:
        coords = self._span.coordinates(gv)
        if coords is None:
            raise NotAnIdeal("element is not in the image of h")
        return coords

    def ad(self, gv: dict, hv: dict) -> dict:
        """``[g, h]`` computed in g and pulled back to h."""
        if not gv or not hv:
            return {}
        return self.restrict(self.g.br(gv, self.include(hv)))

    def _build(self) -> DGLA:
        h, g, nh = self.h, self.g, self.nh
        degs = [p - 1 for p in h.degrees] + list(g.degrees)
        labels = [f"s{l}" for l in h.labels] + list(g.labels)
        diff = []
        for k in range(nh):
            v = {j: -c for j, c in h.diff[k].items()}
            for j, c in self.inc[k].items():
                add_into(v, nh + j, c)
            diff.append(v)
        for a in range(g.dim):
            diff.append({nh + j: c for j, c in g.diff[a].items()})
        br: dict = {}
        for a in range(g.dim):
            for b in range(g.dim):
                v = g.bracket.get((a, b))
                if v:
                    br[(nh + a, nh + b)] = {nh + j: c for j, c in v.items()}
            sa = -1 if g.degrees[a] & 1 else 1
            for k in range(nh):
                v = self.ad({a: Fraction(1)}, {k: Fraction(1)})
                if v:
                    br[(nh + a, k)] = {j: sa * c for j, c in v.items()}
                    # [h, g'] = i^{-1}[i(h), g']
                w = self.restrict(g.br(self.inc[k], {a: Fraction(1)}))
                if w:
                    br[(k, nh + a)] = dict(w)
        return DGLA(degs, diff, br, labels)

    def phi(self, x: dict) -> dict:
        return {k: c for k, c in x.items() if k < self.nh}

    def theta(self, x: dict) -> dict:
        return {k - self.nh: c for k, c in x.items() if k >= self.nh}

    def is_h_generator(self, i: int) -> bool:
        return i < self.nh


def cone_dgla(h: DGLA, inclusion: Sequence[dict], g: DGLA) -> ConeDGLA:
    return ConeDGLA(h, g, inclusion)


def sub_dgla(g: DGLA, vectors: Sequence[dict]) -> tuple[DGLA, list]:
    """The dg Lie subalgebra on a homogeneous basis of a closed subspace, with its inclusion."""
    vecs = [{k: Fraction(c) for k, c in v.items() if c} for v in vectors]
    span = ColumnSpace(vecs)
    if span.dim != len(vecs):
        raise ValueError("vectors are dependent")
    degs = []
    for v in vecs:
        ds = {g.degrees[k] for k in v}
        if len(ds) != 1:
            raise ValueError("vectors must be homogeneous")
        degs.append(ds.pop())

    def coords(x):
        c = span.coordinates(x)
        if c is None:
            raise NotAnIdeal("subspace is not closed")
        return c

    diff = [coords(g.d(v)) for v in vecs]
    br = {}
    for i, u in enumerate(vecs):
        for j, v in enumerate(vecs):
            w = g.br(u, v)
            if w:
                br[(i, j)] = coords(w)
    return DGLA(degs, diff, br, [f"h{i}" for i in range(len(vecs))]), vecs


def generated_ideal(g: DGLA, seeds: Sequence[dict]) -> list[dict]:
    """Homogeneous basis of the smallest dg ideal containing the (homogeneous) seeds."""
    basis_by_deg: dict = {}
    spaces: dict = {}
    queue = [dict(s) for s in seeds if s]
    while queue:
        v = queue.pop()
        v = {k: c for k, c in v.items() if c}
        if not v:
            continue
        p = g.degrees[next(iter(v))]
        sp = spaces.get(p)
        if sp is not None and sp.contains(v):
            continue
        basis_by_deg.setdefault(p, []).append(v)
        spaces[p] = ColumnSpace(basis_by_deg[p])
        queue.append(g.d(v))
        for a in range(g.dim):
            w = g.br({a: Fraction(1)}, v)
            by: dict = {}
            for k, c in w.items():
                by.setdefault(g.degrees[k], {})[k] = c
            queue.extend(by.values())
    return [v for p in sorted(basis_by_deg) for v in basis_by_deg[p]]


# ----------------------------------------------------------------------------
# connecting morphism


class ConnectingMorphism:
    """``c_1 : U(X) -> h[1]`` and its coalgebra lift ``c : F_N U(X) -> F_N C(h)``."""

    def __init__(self, cone: ConeDGLA, N: int):
        self.cone = cone
        self.N = N
        self.U = env_truncated(cone.X, N)
        self.A = self.U.coalgebra()
        self._c = None

    def c1_word(self, w: Sequence[int]) -> dict:
        """``c~1`` on a word of generators of X, straight from the recursion."""
        cone = self.cone
        if not w:
            return {}
        last = w[-1]
        if not cone.is_h_generator(last):
            return {}
        val = {last: Fraction(1)}
        degX = cone.X.degrees
        for x in reversed(w[:-1]):
            if cone.is_h_generator(x):
                return {}
            s = -1 if degX[x] & 1 else 1
            val = cone.ad({x - cone.nh: Fraction(s)}, val)
            if not val:
                return {}
        return val

    def c1(self, u: dict) -> dict:
        out: dict = {}
        for m, c in u.items():
            for k, v in self.c1_word(m).items():
                add_into(out, k, c * v)
        return out

    def f1(self, m: tuple) -> dict:
        return self.c1_word(m)

    def residual(self) -> dict:
        return mc_residual(self.A, self.f1, self.cone.h)

    @property
    def c(self) -> Callable[[tuple], dict]:
        if self._c is None:
            self._c = coalgebra_lift(self.A, self.f1, self.cone.h, check=False)
        return self._c

    def c1_matrix(self) -> GradedMap:
        """``c_1`` as a degree 0 map from ``F_N U(X)`` to ``h[1]``."""
        U = self.U
        h = self.cone.h
        src_b: dict = {}
        for m in U.basis:
            src_b.setdefault(U.deg(m), []).append(m)
        tgt_b: dict = {}
        for k in range(h.dim):
            tgt_b.setdefault(h.degrees[k] - 1, []).append(k)
        src = GradedSpace({p: len(v) for p, v in src_b.items()})
        tgt = GradedSpace({p: len(v) for p, v in tgt_b.items()})
        tpos = {k: (p, i) for p, v in tgt_b.items() for i, k in enumerate(v)}

        def col(p, i):
            return {tpos[k][1]: c for k, c in self.c1_word(src_b[p][i]).items()}

        return GradedMap.from_function(src, tgt, 0, col)


def connecting_c1(cone: ConeDGLA, N: int) -> ConnectingMorphism:
    return ConnectingMorphism(cone, N)


def connecting_c(cone: ConeDGLA, N: int) -> ConnectingMorphism:
    cm = ConnectingMorphism(cone, N)
    res = cm.residual()
    if res:
        from .dgla import NotMaurerCartan

        raise NotMaurerCartan(f"c1 fails the Maurer-Cartan equation at {next(iter(res))!r}")
    return cm


# ----------------------------------------------------------------------------
# Schur polynomials


def partitions_by_multiplicity(n: int):
    """Tuples ``(n_1, ..., n_n)`` with ``sum j n_j = n``."""

    def rec(j, left):
        if j > n:
            if left == 0:
                yield ()
            return
        for k in range(left // j + 1):
            for rest in rec(j + 1, left - k * j):
                yield (k,) + rest

    yield from rec(1, n)


def schur(n: int) -> dict:
    """``P_n`` with ``exp(sum_p alpha_p t^p / p!) = sum_n P_n t^n / n!``.

    Returned as ``{(n_1, ..., n_n): coefficient}`` for the monomial
    ``alpha_1^{n_1} ... alpha_n^{n_n}``; the coefficient counts set partitions
    of an n-element set with ``n_j`` blocks of size j.
    """
    out = {}
    for mult in partitions_by_multiplicity(n):
        den = 1
        for j, k in enumerate(mult, start=1):
            den *= factorial(j) ** k * factorial(k)
        out[mult] = Fraction(factorial(n), den)
    return out
