"""Split families over a Weil base and their higher Kodaira-Spencer maps.

A family is given by a cover of the fiber with abelian sections, a Weil base
with coordinates ``x_1..x_m`` and, for every coordinate field ``d_p``, a Cech
1-cocycle per base monomial.  The family algebroid is

    A = h (x) O  +  O gamma_1 + ... + O gamma_m,

where ``h`` is the Thom-Sullivan model of derived sections on the fiber,
``pi(gamma_p) = d_p`` and ``d gamma_p = sum_e x^e W(c_{p,e})`` with ``W`` the
Whitney lift.  Brackets between generators vanish; ``[gamma_p, f u] =
d_p(f) u`` comes from the anchor.  Kodaira-Spencer values are computed by the
boundary morphism of ``Cone(h -> A)`` and compared at the closed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb
from typing import Sequence

from .algebroid import (
    Algebroid,
    KSData,
    WeilBase,
    check_algebroid,
    higher_ks,
    kernel_dgla,
)
from .cech import CechObject, CoverDatum, FilteredClasses, HypothesisFailure, rgamma
from .dgla import DGLA, TruncationTooSmall, elem_mul
from .exactla import ColumnSpace
from .graded import add_into
from .thomsullivan import TSComplexModel, ts_abelian_dgla


class CocycleFailure(ValueError):
    """A lift cochain is not a Cech cocycle; ``witness`` names the offending tuple."""

    def __init__(self, msg: str, witness: tuple):
        super().__init__(msg)
        self.witness = witness


@dataclass
class SplitFamily:
    cover: CoverDatum
    base: WeilBase
    lifts: list  # per coordinate: {exponents: {(i, j): section vector}}
    cech: CechObject
    model: TSComplexModel
    fiber: DGLA  # sections at the closed point
    whitney: list  # per coordinate: {exponents: model coordinates in total degree 1}
    algebroid: Algebroid
    gammas: list  # generator index of each gamma_p
    report: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.base.m


def _model_index(model: TSComplexModel) -> dict:
    index = {}
    for t in model.space.degrees():
        for k in range(model.space.dim(t)):
            index[(t, k)] = len(index)
    return index


def lift_cochain(cech: CechObject, cochain: dict) -> dict:
    """Level-1 vector of the cochain ``{(i, j): v}`` (i < j), zero on ``(i, i)``."""
    y: dict = {}
    F = cech.cover.presheaf
    for (i, j), v in cochain.items():
        if not i < j:
            raise ValueError(f"lift cochains are indexed by pairs i < j, got {(i, j)}")
        n = len(F.space(cech.cover.open_of((i, j))))
        if any(not 0 <= k < n for k in v):
            raise ValueError(f"section index out of range on {(i, j)}")
        for k, c in cech.embed(1, (i, j), v).items():
            add_into(y, k, Fraction(c))
    return y


def check_cocycle(cech: CechObject, y: dict) -> None:
    """Alternating coface sum at level 2 must vanish; raise with the first bad triple."""
    Y = cech.module
    z: dict = {}
    for i in range(3):
        for k, c in Y.coface(1, i).apply(y).items():
            add_into(z, k, -c if i & 1 else c)
    for tup in cech.tuples[2]:
        if cech.component(2, z, tup):
            raise CocycleFailure(f"cocycle condition fails on {tup}", tup)


def split_family(cover: CoverDatum, base: WeilBase, lifts: Sequence[dict], D: int | None = None) -> SplitFamily:
    """Assemble the family algebroid from cocycle lifts, one dict per coordinate.

    ``lifts[p]`` maps an exponent tuple ``e`` (or an int for one variable) to
    a cochain ``{(i, j): {section: coeff}}``.
    """
    if len(lifts) != base.m:
        raise ValueError(f"need one lift per coordinate ({base.m}), got {len(lifts)}")
    D = max(2, cover.size) if D is None else D
    if D < 2:
        raise ValueError("Whitney lifts of 1-cochains need D >= 2")
    cech, model = rgamma(cover, D)
    if cech.module.has_bracket():
        raise HypothesisFailure("split families are implemented for abelian fiber sections only")
    fiber = ts_abelian_dgla(model)
    index = _model_index(model)
    d1 = model.complex.d.block(1)

    whit, gamma_diff = [], []
    for p, per in enumerate(lifts):
        wp, dg = {}, {}
        for e, cochain in per.items():
            e = (e,) if isinstance(e, int) else tuple(e)
            y = lift_cochain(cech, cochain)
            check_cocycle(cech, y)
            if not y:
                continue
            t, w = model.whitney(1, y)
            if t != 1:
                raise ValueError("lift sections must sit in internal degree 0")
            if d1.apply(w):
                raise CocycleFailure("Whitney lift is not closed", (p, e))
            wp[e] = w
            for k, c in w.items():
                dg.setdefault(index[(1, k)], {})[e] = c
        whit.append(wp)
        gamma_diff.append(dg)

    r = len(index)
    degrees = list(fiber.degrees) + [0] * base.m
    diff = {k: dict(v) for k, v in enumerate(fiber.diff) if v}
    for p, dg in enumerate(gamma_diff):
        if dg:
            diff[r + p] = dg
    anchor = {r + p: [int(q == p) for q in range(base.m)] for p in range(base.m)}
    labels = list(fiber.labels) + [f"gamma{p}" for p in range(base.m)]
    A = Algebroid.from_table(base, degrees, anchor=anchor, diff=diff, labels=labels)
    rep = check_algebroid(A)
    if not rep.passed:
        raise CocycleFailure(f"family algebroid fails: {rep.failures[0][0]}", rep.failures[0][1])
    F = SplitFamily(cover, base, list(lifts), cech, model, fiber, whit, A, [r + p for p in range(base.m)])
    F.report = family_invariants(F)
    return F


def family_invariants(F: SplitFamily) -> dict:
    """Exactness by dimension count, surjective anchor, and the closed-point fiber."""
    A = F.algebroid
    h, idx = kernel_dgla(A)
    closed = [{k: c.constant() for k, c in v.items()} for v in h.diff]
    return {
        "exact": A.rank == len(idx) + len(A.tangent_indices()) and len(idx) == len(F.fiber.degrees),
        "anchor surjective": A.is_transitive(),
        "fiber restriction": list(h.degrees) == list(F.fiber.degrees)
        and all({k: c for k, c in v.items() if c} == {k: Fraction(c) for k, c in w.items()}
                for v, w in zip(closed, F.fiber.diff)),
    }


# ----------------------------------------------------------------------------
# Kodaira-Spencer maps


def at_closed_point(x: dict) -> dict:
    """Evaluate an O-chain at the closed point."""
    out = {}
    for m, c in x.items():
        v = c.constant() if hasattr(c, "constant") else Fraction(c)
        if v:
            out[m] = v
    return out


def multi_indices(m: int, n: int) -> list:
    """Sorted index tuples of size <= n, i.e. the monomial basis of Diff^{<= n}."""
    return [I for k in range(n + 1) for I in combinations_with_replacement(range(m), k)]


@dataclass
class KSResult:
    n: int
    data: KSData
    values: dict  # I -> chain at the closed point
    kappa1: list  # per coordinate: class coordinates in H^1 of the fiber model
    classical: list  # per coordinate: class of the lift cocycle at x = 0
    symbols: dict  # I -> kappa(d^I) == (-1)^|I| prod classical, modulo F_{|I|-1}


def _h1_class(F: SplitFamily, w: dict) -> dict:
    return F.model.complex.cohomology(1).class_of(w)


def classical_ks(F: SplitFamily) -> list:
    """Class in ``H^1`` of the Whitney lift of each constant-term cocycle."""
    zero = (0,) * F.m
    return [_h1_class(F, F.whitney[p].get(zero, {})) for p in range(F.m)]


def _h_chain(F: SplitFamily, w: dict) -> dict:
    """Model coordinates in total degree 1 as an arity-1 chain of the fiber."""
    index = _model_index(F.model)
    return {(index[(1, k)],): Fraction(c) for k, c in w.items() if c}


def family_ks(F: SplitFamily, n: int) -> KSResult:
    """``kappa^{<=n}`` on the monomials ``d^I`` (|I| <= n) and its symbol check."""
    if F.base.D < n:
        raise TruncationTooSmall(f"base is truncated at degree {F.base.D} < {n}")
    # order one is always computed so that kappa^1 is available
    data = higher_ks(F.algebroid, max(n, 1))
    values = {I: at_closed_point(v) for I, v in data.values.items()}
    index = _model_index(F.model)
    back = {j: k for (t, k), j in index.items() if t == 1}
    kappa1 = []
    for p in range(F.m):
        arity1 = {back[m[0]]: c for m, c in values[(p,)].items() if len(m) == 1}
        kappa1.append(_h1_class(F, arity1))
    classical = classical_ks(F)
    zero = (0,) * F.m
    reps = [_h_chain(F, F.whitney[p].get(zero, {})) for p in range(F.m)]
    fc = FilteredClasses(F.fiber, n)
    symbols = {}
    values = {I: v for I, v in values.items() if len(I) <= n}
    for I, v in values.items():
        prod = {(): Fraction(1)}
        for i in I:
            prod = elem_mul(F.fiber, prod, reps[i])
        s = -1 if len(I) & 1 else 1
        symbols[I] = fc.same_class(v, {m: s * c for m, c in prod.items()}, len(I) - 1)
    return KSResult(n, data, values, kappa1, classical, symbols)


# ----------------------------------------------------------------------------
# the comparison with the truncated universal ring


@dataclass
class Stage:
    k: int
    diff_dim: int  # dim Diff^{<=k} = dim (R / m^{k+1})^*
    filtered_dim: int  # dim F_k H_0
    rank: int  # rank of kappa^{<=k}
    symbol_rank: int  # rank of the order-k part modulo F_{k-1}
    bijective: bool | None  # None when hypotheses fail


@dataclass
class UniversalReport:
    n: int
    hypotheses: dict
    stages: list
    kappa1_rank: int
    h1: int

    @property
    def hypothesis_failure(self) -> bool:
        return not all(self.hypotheses.values())

    @property
    def failed(self) -> list:
        return [k for k, v in self.hypotheses.items() if not v]

    @property
    def passed(self) -> bool:
        return not self.hypothesis_failure and all(s.bijective for s in self.stages)


def universal_dual_check(F: SplitFamily, n: int) -> UniversalReport:
    """Compare ``kappa^{<=k}`` with ``F_k H_0`` for k <= n; hypotheses are computed.

    When ``H^0`` of the fiber is nonzero or ``kappa^1`` is not an isomorphism
    onto ``H^1``, dimensions are still reported but no bijectivity is claimed.
    """
    cd = F.model.cohomology_dims()
    h1 = cd.get(1, 0)
    ks = family_ks(F, n)
    k1_rank = ColumnSpace(ks.kappa1).dim
    hyp = {
        "H^0 = 0": cd.get(0, 0) == 0,
        "kappa^1 bijective": k1_rank == F.m == h1,
    }
    ok = all(hyp.values())
    fc = FilteredClasses(F.fiber, n)
    stages = []
    for k in range(n + 1):
        low = [ks.values[I] for I in multi_indices(F.m, k)]
        top = [ks.values[I] for I in multi_indices(F.m, k) if len(I) == k]
        r = fc.rank(low)
        sr = fc.rank(top, k - 1)
        dd, fd = comb(F.m + k, k), fc.dim(k)
        stages.append(Stage(k, dd, fd, r, sr, (r == dd == fd) if ok else None))
    return UniversalReport(n, hyp, stages, k1_rank, h1)
