"""Finite covers, Cech cosimplicial objects and derived global sections.

A cover is purely combinatorial: a finite set of points, opens given as
subsets, and a presheaf that assigns a graded space (optionally with a
differential and a bracket) to every open and a restriction matrix to every
inclusion.  Intersections of opens are again subsets of points, so
refinements between covers of the same point set come with their
restriction maps for free.

Two tuple models are offered.  ``tuples="all"`` takes every tuple in
``I^{n+1}``.  ``tuples="ordered"`` keeps only non-decreasing tuples; it is
a cosimplicial sub-object with the same cohomology whose normalized part
vanishes above level ``|I| - 1``, so the Thom-Sullivan truncation can see
all of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement, product
from typing import Sequence

from .dgla import DGLA, AxiomReport, HomologyTable, _homology_adapted, ce_complex, elem_mul, lie_homology
from .envelope import symmetric_power_dims
from .exactla import ColumnSpace, SparseMatrix, inverse, rank, subquotient_homology
from .graded import add_into
from .thomsullivan import (
    CosimplicialMap,
    CosimplicialModule,
    HomotopyReport,
    TSComplexModel,
    normalize,
    path_homotopy,
    ts_abelian_dgla,
    ts_complex,
    ts_dgla,
)


class InconsistentRestrictions(ValueError):
    """Restriction maps are not functorial or do not respect the structure."""


class NotARefinement(ValueError):
    """An open of the finer cover is not inside the open it is mapped to."""


class HypothesisFailure(ValueError):
    """A hypothesis of a comparison statement fails; carries the report."""


# ----------------------------------------------------------------------------
# presheaves on finite point sets


class Presheaf:
    """Interface: ``space(W)`` gives the internal degrees of the sections over
    the open W (a frozenset of points), ``restrict(W, V)`` the matrix
    ``F(W) -> F(V)`` for ``V <= W``.  ``diff`` and ``bracket`` are optional."""

    def space(self, W: frozenset) -> list:
        raise NotImplementedError

    def restrict(self, W: frozenset, V: frozenset) -> SparseMatrix:
        raise NotImplementedError

    def diff(self, W: frozenset) -> SparseMatrix | None:
        return None

    def bracket(self, W: frozenset) -> dict:
        return {}

    @property
    def graded(self) -> bool:
        return False


@dataclass
class AtomPresheaf(Presheaf):
    """Direct sum of "interval" atoms.

    Atom ``(lo, hi, degree)`` contributes one basis vector over every open W
    with ``lo <= W <= hi``; restriction keeps it when both opens carry it and
    kills it otherwise.  Intervals are convex in the inclusion order, which is
    exactly what makes these restrictions functorial.  ``twist[W]`` is an
    optional automorphism of ``F(W)`` hiding the atom coordinates, and
    ``differential`` a list of ``(source atom, target atom, coeff)`` that
    must commute with restriction (checked by :func:`check_cover`).
    """

    atoms: list
    twist: dict = field(default_factory=dict)
    differential: list = field(default_factory=list)

    def _present(self, W) -> list:
        return [k for k, (lo, hi, _) in enumerate(self.atoms) if lo <= W <= hi]

    def space(self, W):
        return [self.atoms[k][2] for k in self._present(W)]

    def _twist(self, W):
        g = self.twist.get(W)
        return g, (inverse(g) if g is not None else None)

    def restrict(self, W, V):
        src, tgt = self._present(W), self._present(V)
        pos = {k: i for i, k in enumerate(tgt)}
        m = SparseMatrix.from_entries(len(tgt), len(src), [(pos[k], i, 1) for i, k in enumerate(src) if k in pos])
        gW, gWi = self._twist(W)
        gV, _ = self._twist(V)
        if gWi is not None:
            m = m @ gWi
        if gV is not None:
            m = gV @ m
        return m

    def diff(self, W):
        if not self.differential:
            return None
        pres = self._present(W)
        pos = {k: i for i, k in enumerate(pres)}
        m = SparseMatrix.from_entries(
            len(pres), len(pres), [(pos[t], pos[s], c) for s, t, c in self.differential if s in pos and t in pos]
        )
        g, gi = self._twist(W)
        return g @ m @ gi if g is not None else m

    @property
    def graded(self):
        return bool(self.differential) or len({a[2] for a in self.atoms}) > 1


@dataclass
class ConstantPresheaf(Presheaf):
    """A fixed dg Lie algebra over every nonempty open, identity restrictions."""

    g: DGLA

    def space(self, W):
        return list(self.g.degrees) if W else []

    def restrict(self, W, V):
        if not V:
            return SparseMatrix.zeros(0, len(self.space(W)))
        return SparseMatrix.identity(self.g.dim)

    def diff(self, W):
        if not W:
            return SparseMatrix.zeros(0, 0)
        return SparseMatrix.from_columns(self.g.dim, [self.g.diff[i] for i in range(self.g.dim)])

    def bracket(self, W):
        return dict(self.g.bracket) if W else {}

    @property
    def graded(self):
        return True


@dataclass
class ComponentPresheaf(Presheaf):
    """Locally constant functions on a graph: ``F(W) = Q^{components of W}``.

    ``edges`` joins points; the components of an open are those of the induced
    subgraph.  This is a genuine sheaf, so Cech cohomology of a good cover
    computes the cohomology of the graph (e.g. a cycle has ``H^1 = Q``).
    """

    edges: list

    def components(self, W) -> list:
        W = set(W)
        comps = []
        seen = set()
        adj: dict = {}
        for u, v in self.edges:
            if u in W and v in W:
                adj.setdefault(u, set()).add(v)
                adj.setdefault(v, set()).add(u)
        for x in sorted(W, key=str):
            if x in seen:
                continue
            stack, comp = [x], set()
            while stack:
                y = stack.pop()
                if y in comp:
                    continue
                comp.add(y)
                stack.extend(adj.get(y, ()))
            seen |= comp
            comps.append(frozenset(comp))
        return comps

    def space(self, W):
        return [0] * len(self.components(W))

    def restrict(self, W, V):
        cw, cv = self.components(W), self.components(V)
        entries = []
        for i, comp in enumerate(cv):
            j = next(k for k, big in enumerate(cw) if comp <= big)
            entries.append((i, j, 1))
        return SparseMatrix.from_entries(len(cv), len(cw), entries)


@dataclass
class TablePresheaf(Presheaf):
    """Sections listed per subset S of the index set, for cover data given as tables.

    The points are the nonempty subsets of the index set and ``U_i`` is the
    set of subsets containing i, so the intersection over S is the set of
    supersets of S.  ``sections[S]`` lists internal degrees and
    ``maps[(S, T)]`` (S a subset of T) the restriction ``F(U_S) -> F(U_T)``.
    Restrictions between non-adjacent sets are composed along a chain; a
    missing adjacent map is the identity when both section lists agree.
    """

    sections: dict
    maps: dict
    brackets: dict = field(default_factory=dict)
    diffs: dict = field(default_factory=dict)

    def _set_of(self, W) -> frozenset | None:
        if not W:
            return None
        S = frozenset.intersection(*W)
        return S if S in W else None

    def space(self, W):
        S = self._set_of(W)
        return list(self.sections.get(S, [])) if S is not None else []

    def restrict(self, W, V):
        S, T = self._set_of(W), self._set_of(V)
        n_s, n_t = len(self.space(W)), len(self.space(V))
        if S is None or T is None or not n_s or not n_t:
            return SparseMatrix.zeros(n_t, n_s)
        if S == T:
            return SparseMatrix.identity(n_s)
        if (S, T) in self.maps:
            return self.maps[(S, T)]
        if len(T - S) == 1:
            if self.space(W) == self.space(V):
                return SparseMatrix.identity(n_s)
            raise InconsistentRestrictions(f"no restriction from {sorted(S)} to {sorted(T)}")
        # compose through T minus one element
        for x in sorted(T - S):
            mid = T - {x}
            if S <= mid and mid in self.sections:
                Wm = frozenset(u for u in W if mid <= u)
                return self.restrict(Wm, V) @ self.restrict(W, Wm)
        raise InconsistentRestrictions(f"no restriction from {sorted(S)} to {sorted(T)}")

    def diff(self, W):
        S = self._set_of(W)
        return self.diffs.get(S) if S is not None else None

    def bracket(self, W):
        S = self._set_of(W)
        return dict(self.brackets.get(S, {})) if S is not None else {}

    @property
    def graded(self):
        return bool(self.diffs) or any(len(set(v)) > 1 or (v and v[0] != 0) for v in self.sections.values())


def table_points(index: Sequence) -> tuple[list, list]:
    """Points and opens for :class:`TablePresheaf`: the nonempty subsets of the index set."""
    pts = [frozenset(c) for r in range(1, len(index) + 1) for c in combinations(index, r)]
    opens = [frozenset(p for p in pts if i in p) for i in index]
    return pts, opens


# ----------------------------------------------------------------------------
# covers


@dataclass
class CoverDatum:
    """Opens ``U_i`` (subsets of a finite point set) and a presheaf of sections."""

    opens: list
    presheaf: Presheaf

    @property
    def size(self) -> int:
        return len(self.opens)

    def open_of(self, tup: Sequence[int]) -> frozenset:
        W = self.opens[tup[0]]
        for i in tup[1:]:
            W = W & self.opens[i]
        return frozenset(W)

    def union(self) -> frozenset:
        return frozenset().union(*self.opens)


def check_cover(C: CoverDatum) -> AxiomReport:
    """Functoriality of restrictions over all intersections, identity on equal opens,
    compatibility with the differential and the bracket."""
    fails = []
    F = C.presheaf
    opens = {C.open_of(t) for r in range(1, C.size + 1) for t in combinations(range(C.size), r)}
    opens.add(C.union())
    opens = sorted(opens, key=lambda W: (-len(W), sorted(map(str, W))))

    def note(name, wit):
        if not any(f[0] == name for f in fails):
            fails.append((name, wit, None))

    for W in opens:
        n = len(F.space(W))
        if not (F.restrict(W, W) == SparseMatrix.identity(n)):
            note("identity restriction", (sorted(map(str, W)),))
        dW = F.diff(W)
        if dW is not None and not (dW @ dW).is_zero():
            note("d^2", (sorted(map(str, W)),))
    for W in opens:
        for V in opens:
            if not V <= W:
                continue
            r = F.restrict(W, V)
            dW, dV = F.diff(W), F.diff(V)
            if dW is not None and dV is not None and not (r @ dW == dV @ r):
                note("restriction commutes with d", (sorted(map(str, W)), sorted(map(str, V))))
            bW, bV = F.bracket(W), F.bracket(V)
            if bW or bV:
                n = len(F.space(W))
                for j in range(n):
                    for k in range(n):
                        lhs = r.apply(bW.get((j, k), {}))
                        rj, rk = r.apply({j: 1}), r.apply({k: 1})
                        rhs: dict = {}
                        for a, x in rj.items():
                            for b, y in rk.items():
                                for l, c in bV.get((a, b), {}).items():
                                    add_into(rhs, l, x * y * c)
                        if lhs != rhs:
                            note("restriction respects bracket", (sorted(map(str, W)), sorted(map(str, V))))
            for U in opens:
                if U <= V and not (F.restrict(V, U) @ r == F.restrict(W, U)):
                    note("functoriality", tuple(sorted(map(str, X)) for X in (W, V, U)))
    return AxiomReport(not fails, fails)


def _tuples(size: int, n: int, mode: str) -> list:
    if mode == "all":
        return list(product(range(size), repeat=n + 1))
    if mode == "ordered":
        return list(combinations_with_replacement(range(size), n + 1))
    raise ValueError(f"unknown tuple model {mode!r}")


@dataclass
class CechObject:
    """A Cech cosimplicial module together with its tuple bookkeeping."""

    module: CosimplicialModule
    tuples: list  # per level: list of tuples
    offsets: list  # per level: {tuple: offset}
    cover: CoverDatum
    mode: str

    def component(self, p: int, y: dict, tup: tuple) -> dict:
        off = self.offsets[p][tup]
        n = len(self.cover.presheaf.space(self.cover.open_of(tup)))
        return {j - off: c for j, c in y.items() if off <= j < off + n}

    def embed(self, p: int, tup: tuple, v: dict) -> dict:
        off = self.offsets[p][tup]
        return {off + j: c for j, c in v.items()}


def cech_cosimplicial(C: CoverDatum, levels: int, tuples: str = "ordered", check: bool = True) -> CechObject:
    """The Cech cosimplicial object through level ``levels``.

    Level n is the product over tuples of the sections over the intersection;
    ``delta^i`` omits the i-th index and restricts, ``sigma^i`` repeats it.
    """
    if check:
        rep = check_cover(C)
        if not rep.passed:
            raise InconsistentRestrictions(f"{rep.failures[0][0]} at {rep.failures[0][1]}")
    F = C.presheaf
    tups, offs, degs, diffs, brs = [], [], [], [], []
    for n in range(levels + 1):
        ts = _tuples(C.size, n, tuples)
        off, deg, d_entries, br = {}, [], [], {}
        for t in ts:
            off[t] = len(deg)
            W = C.open_of(t)
            sp = F.space(W)
            base = len(deg)
            deg.extend(sp)
            dW = F.diff(W)
            if dW is not None:
                d_entries.extend((base + i, base + j, v) for i, j, v in dW.entries())
            for (a, b), val in F.bracket(W).items():
                br[(base + a, base + b)] = {base + k: Fraction(c) for k, c in val.items()}
        tups.append(ts)
        offs.append(off)
        degs.append(deg)
        diffs.append(SparseMatrix.from_entries(len(deg), len(deg), d_entries))
        brs.append(br)
    cof, cod = [], []
    for n in range(levels):
        row = []
        for i in range(n + 2):
            entries = []
            for t in tups[n + 1]:
                s = t[:i] + t[i + 1:]
                r = F.restrict(C.open_of(s), C.open_of(t))
                for a, b, v in r.entries():
                    entries.append((offs[n + 1][t] + a, offs[n][s] + b, v))
            row.append(SparseMatrix.from_entries(len(degs[n + 1]), len(degs[n]), entries))
        cof.append(row)
        row = []
        for i in range(n + 1):
            entries = []
            for t in tups[n]:
                s = t[: i + 1] + t[i:]
                k = len(F.space(C.open_of(t)))
                entries.extend((offs[n][t] + a, offs[n + 1][s] + a, 1) for a in range(k))
            row.append(SparseMatrix.from_entries(len(degs[n]), len(degs[n + 1]), entries))
        cod.append(row)
    has_d = any(not m.is_zero() for m in diffs)
    has_b = any(brs)
    Y = CosimplicialModule(degs, cof, cod, diffs if has_d else None, brs if has_b else None)
    return CechObject(Y, tups, offs, C, tuples)


def augmentation(C: CoverDatum, cech: CechObject) -> SparseMatrix:
    """``F(X) -> C^0``: restrict global sections to every open."""
    X = C.union()
    n = len(C.presheaf.space(X))
    entries = []
    for t in cech.tuples[0]:
        r = C.presheaf.restrict(X, C.open_of(t))
        entries.extend((cech.offsets[0][t] + a, b, v) for a, b, v in r.entries())
    return SparseMatrix.from_entries(cech.module.dim(0), n, entries)


def augmentation_is_quasi_iso(C: CoverDatum, levels: int, tuples: str = "ordered") -> bool:
    """Whether ``F(X) -> N(C)`` is a quasi-isomorphism (ungraded sections)."""
    ch = cech_cosimplicial(C, levels, tuples)
    N = normalize(ch.module)
    dims = N.cohomology_dims()
    aug = augmentation(C, ch)
    gl = len(C.presheaf.space(C.union()))
    return dims.get(0, 0) == gl and rank(aug) == gl and all(t == 0 for t in dims)


# ----------------------------------------------------------------------------
# derived global sections


def default_levels(C: CoverDatum, D: int, P: int | None = None) -> int:
    P = D + 1 if P is None else P
    return max(P + 1, C.size + 1)


def rgamma(C: CoverDatum, D: int, P: int | None = None, tuples: str = "ordered") -> tuple[CechObject, TSComplexModel]:
    """Cech object and its Thom-Sullivan model."""
    ch = cech_cosimplicial(C, default_levels(C, D, P), tuples)
    return ch, ts_complex(ch.module, D, P)


def rgamma_lie(C: CoverDatum, D: int, P: int | None = None):
    """``R Gamma^Lie``: a DGLA for abelian sections, a TSDGLA otherwise."""
    ch = cech_cosimplicial(C, default_levels(C, D, P), "ordered")
    return ts_dgla(ch.module, D, P)


def cech_cohomology(C: CoverDatum, levels: int | None = None, tuples: str = "ordered") -> dict:
    levels = C.size + 1 if levels is None else levels
    return normalize(cech_cosimplicial(C, levels, tuples).module).cohomology_dims()


# ----------------------------------------------------------------------------
# refinements


def _check_refinement(fine: CoverDatum, coarse: CoverDatum, f: Sequence[int]) -> None:
    if len(f) != fine.size:
        raise NotARefinement("index map has the wrong length")
    for i, j in enumerate(f):
        if not fine.opens[i] <= coarse.opens[j]:
            raise NotARefinement(f"U_{i} is not contained in V_{j}")


def refinement_map(coarse: CechObject, fine: CechObject, f: Sequence[int]) -> CosimplicialMap:
    """``(phi y)_{i_0..i_n} = y_{f(i_0)..f(i_n)}`` restricted to the finer intersection."""
    _check_refinement(fine.cover, coarse.cover, f)
    if coarse.mode == "ordered" and any(f[i] > f[i + 1] for i in range(len(f) - 1)):
        raise NotARefinement("ordered tuple model needs a monotone index map")
    F = fine.cover.presheaf
    top = min(coarse.module.top, fine.module.top)
    levels = []
    for n in range(top + 1):
        entries = []
        for t in fine.tuples[n]:
            s = tuple(f[i] for i in t)
            r = F.restrict(coarse.cover.open_of(s), fine.cover.open_of(t))
            for a, b, v in r.entries():
                entries.append((fine.offsets[n][t] + a, coarse.offsets[n][s] + b, v))
        levels.append(SparseMatrix.from_entries(fine.module.dim(n), coarse.module.dim(n), entries))
    phi = CosimplicialMap(coarse.module, fine.module, levels)
    rep = phi.check()
    if not rep.passed:
        raise NotARefinement(f"induced map fails: {rep.failures[0][0]}")
    return phi


def refinement_homotopy(coarse: CechObject, fine: CechObject, f: Sequence[int], g: Sequence[int]) -> list:
    """Strict homotopy ``C(V) -> C(U)^I`` from phi_f to phi_g (needs f <= g pointwise).

    On the copy indexed by a map s : [n] -> [1] the tuple uses f where s is 0
    and g where s is 1.
    """
    if any(a > b for a, b in zip(f, g)):
        raise NotARefinement("homotopy needs f <= g pointwise")
    F = fine.cover.presheaf
    top = min(coarse.module.top, fine.module.top)
    levels = []
    for n in range(top + 1):
        d = fine.module.dim(n)
        entries = []
        for k in range(n + 2):  # k zeros
            for t in fine.tuples[n]:
                s = tuple(f[i] if pos < k else g[i] for pos, i in enumerate(t))
                if coarse.mode == "ordered" and list(s) != sorted(s):
                    raise NotARefinement("mixed tuple leaves the ordered model")
                r = F.restrict(coarse.cover.open_of(s), fine.cover.open_of(t))
                for a, b, v in r.entries():
                    entries.append((k * d + fine.offsets[n][t] + a, coarse.offsets[n][s] + b, v))
        levels.append(SparseMatrix.from_entries(d * (n + 2), coarse.module.dim(n), entries))
    return levels


def ts_map(source: TSComplexModel, target: TSComplexModel, phi: CosimplicialMap) -> dict:
    """Matrices ``{t: M}`` of the map induced on Thom-Sullivan models."""
    out = {}
    lv = min(source.P, source.D)
    for t in source.space.degrees():
        cols = []
        for k in range(source.space.dim(t)):
            fam = source.family(t, {k: Fraction(1)}, lv)
            img = {p: {key: phi.levels[p].apply(vec) for key, vec in lvl.items()} for p, lvl in fam.items()}
            img = {p: {key: v for key, v in lvl.items() if v} for p, lvl in img.items()}
            cols.append(target.coordinates(img, t))
        out[t] = SparseMatrix.from_columns(target.space.dim(t), cols)
    return out


def induced_on_cohomology(source: TSComplexModel, target: TSComplexModel, maps: dict) -> dict:
    """Matrices of the induced maps between chosen cohomology bases."""
    out = {}
    for t in source.space.degrees():
        Hs, Ht = source.complex.cohomology(t), target.complex.cohomology(t)
        if not Hs.dim:
            continue
        cols = [Ht.class_of(maps[t].apply(z)) for z in Hs.representatives]
        out[t] = SparseMatrix.from_columns(Ht.dim, cols)
    return out


@dataclass
class RefinementReport:
    maps_f: dict
    maps_g: dict
    equal: bool
    homotopy: HomotopyReport | None


def refinement_compare(coarse: CoverDatum, fine: CoverDatum, f: Sequence[int], g: Sequence[int], D: int,
                       P: int | None = None) -> RefinementReport:
    """Cohomology maps of two refinement index maps, and the homotopy between them."""
    _check_refinement(fine, coarse, f)
    _check_refinement(fine, coarse, g)
    levels = max(default_levels(coarse, D, P), default_levels(fine, D, P))
    cc, cf = cech_cosimplicial(coarse, levels), cech_cosimplicial(fine, levels)
    mc, mf = ts_complex(cc.module, D, P), ts_complex(cf.module, D, P)
    phi_f, phi_g = refinement_map(cc, cf, f), refinement_map(cc, cf, g)
    hf = induced_on_cohomology(mc, mf, ts_map(mc, mf, phi_f))
    hg = induced_on_cohomology(mc, mf, ts_map(mc, mf, phi_g))
    equal = set(hf) == set(hg) and all(hf[t] == hg[t] for t in hf)
    homotopy = None
    lo, hi = (f, g) if all(a <= b for a, b in zip(f, g)) else (g, f)
    if all(a <= b for a, b in zip(lo, hi)):
        H = refinement_homotopy(cc, cf, lo, hi)
        ml, mh = refinement_map(cc, cf, lo), refinement_map(cc, cf, hi)
        homotopy = path_homotopy(cc.module, cf.module, ml.levels, mh.levels, H)
    return RefinementReport(hf, hg, equal, homotopy)


# ----------------------------------------------------------------------------
# Lie homology of global sections


@dataclass
class GlobalLieResult:
    table: HomologyTable
    cech_dims: dict
    filtration: dict  # n -> dim F_n H_0
    graded: dict  # n -> dim gr_n
    symmetric: dict  # n -> dim S^n H^1
    symbol_ranks: dict  # n -> rank of S^n H^1 -> gr_n
    hypotheses: dict
    dgla: DGLA
    model: TSComplexModel

    @property
    def hypothesis_failure(self) -> bool:
        return not all(self.hypotheses.values())


def _power_classes(g: DGLA, reps: list, n: int) -> list:
    """Standard-complex monomials ``x_1 ... x_n`` for all multisets of representatives."""
    out = []
    for combo in combinations_with_replacement(range(len(reps)), n):
        acc = {(): Fraction(1)}
        for i in combo:
            acc = elem_mul(g, acc, {(k,): c for k, c in reps[i].items()})
        out.append(acc)
    return out


def global_lie_homology(C: CoverDatum, N: int, D: int, P: int | None = None) -> GlobalLieResult:
    """Filtered Lie homology in degree 0 of ``R Gamma^Lie`` for abelian sections.

    Also forms the symbol map from ``S^n H^1`` (products of degree-1 cocycles)
    into ``gr_n`` and records its rank.  Hypotheses ``H^0 = 0`` and abelian
    sections are computed and reported, never assumed.
    """
    ch, model = rgamma(C, D, P)
    if ch.module.has_bracket():
        raise HypothesisFailure("global Lie homology is implemented for abelian sections only")
    g = ts_abelian_dgla(model)
    cd = model.cohomology_dims()
    table = lie_homology(g, N, (0, 0), strict=False)
    filt = {n: table.filtered[0][n] for n in range(N + 1)}
    graded = {n: filt[n] - (filt[n - 1] if n else 0) for n in filt}
    h1 = cd.get(1, 0)
    sym = dict(enumerate(symmetric_power_dims([0] * h1, N)))
    # symbol map: products of H^1 representatives, classes modulo F_{n-1}
    index = {}
    pos = 0
    for t in model.space.degrees():
        for k in range(model.space.dim(t)):
            index[(t, k)] = pos
            pos += 1
    H1 = model.complex.cohomology(1)
    reps = [{index[(1, k)]: c for k, c in z.items()} for z in H1.representatives]
    ranks = _symbol_ranks(g, reps, N)
    hyp = {"H^0 = 0": cd.get(0, 0) == 0, "abelian sections": True}
    return GlobalLieResult(table, cd, filt, graded, sym, ranks, hyp, g, model)


class FilteredClasses:
    """Degree-0 chains of ``F_N C(g)`` modulo boundaries, with the arity filtration.

    ``span(k)`` is a basis of boundaries plus cycles of arity <= k, so ranks
    computed against it are ranks in ``H_0 / F_k H_0``.
    """

    def __init__(self, g: DGLA, N: int):
        self.g, self.N = g, N
        self.ce = ce_complex(g, N, (-1, 1), check=False)
        self.boundaries = list(subquotient_homology(self.ce.d.block(-1), self.ce.d.block(0)).image)
        self.reps, self.levels, _ = _homology_adapted(self.ce, 0, N)

    def dim(self, k: int) -> int:
        """``dim F_k H_0``."""
        return sum(1 for lv in self.levels if lv <= k)

    def span(self, k: int) -> list:
        return self.boundaries + [r for r, lv in zip(self.reps, self.levels) if lv <= k]

    def vector(self, chain: dict) -> dict:
        vec = self.ce.vector(chain)
        if any(p != 0 for p, _ in vec):
            raise ValueError("chain is not of total degree 0")
        return {i: c for (_, i), c in vec.items()}

    def rank(self, chains: list, below: int = -1) -> int:
        """Rank of the classes of ``chains`` in ``H_0 / F_below H_0``."""
        base = self.span(below)
        before = ColumnSpace(base).dim
        return ColumnSpace(base + [self.vector(x) for x in chains]).dim - before

    def same_class(self, x: dict, y: dict, below: int = -1) -> bool:
        """Whether ``x - y`` is a boundary plus a cycle of arity <= below."""
        diff = dict(x)
        for m, c in y.items():
            add_into(diff, m, -c)
        diff = {m: c for m, c in diff.items() if c}
        return not diff or ColumnSpace(self.span(below)).contains(self.vector(diff))


def _symbol_ranks(g: DGLA, reps: list, N: int) -> dict:
    """Rank of ``S^n H^1 -> F_n H_0 / F_{n-1} H_0`` (products of cocycles), n <= N."""
    fc = FilteredClasses(g, N)
    return {n: fc.rank(_power_classes(g, reps, n), n - 1) for n in range(N + 1)}
