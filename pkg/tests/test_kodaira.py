import random
from fractions import Fraction

import pytest

from dgdeform.algebroid import check_algebroid, higher_ks, ks_exponential, weil_base
from dgdeform.cech import (
    AtomPresheaf,
    ConstantPresheaf,
    CoverDatum,
    FilteredClasses,
    HypothesisFailure,
    cech_cosimplicial,
)
from dgdeform.dgla import TruncationTooSmall, elem_mul, sl2
from dgdeform.kodaira import (
    _model_index,
    CocycleFailure,
    at_closed_point,
    family_ks,
    split_family,
    universal_dual_check,
)
from dgdeform.thomsullivan import normalize

from gen import random_cover

fs = frozenset
BASE = weil_base(1, 3)


def two_cover(extra=()):
    return CoverDatum([fs("ac"), fs("bc")], AtomPresheaf([(fs("c"), fs("c"), 0), *extra]))


def toy(lifts=None):
    lifts = [{0: {(0, 1): {0: 1}}}] if lifts is None else lifts
    return split_family(two_cover(), BASE, lifts)


def random_families(count):
    """Families on 2-covers with H^0 = 0 and H^1 = 1, lifted along a random cocycle."""
    out = []
    seed = 0
    while len(out) < count:
        rng = random.Random(seed)
        seed += 1
        C = random_cover(rng, size=2)
        ch = cech_cosimplicial(C, 3)
        N = normalize(ch.module)
        if N.cohomology_dims() != {1: 1}:
            continue
        z = N.complex.cohomology(1).representatives[0]
        y: dict = {}
        for k, c in z.items():
            p, v = N.vector(1, k)
            for j, x in v.items():
                y[j] = y.get(j, 0) + c * x
        scale = rng.choice([1, 2, -3])
        cochain = {(0, 1): {j: scale * c for j, c in ch.component(1, y, (0, 1)).items() if c}}
        out.append((seed - 1, C, cochain))
    return out


# ---------------------------------------------------------------- assembling families


def test_toy_family_invariants():
    F = toy()
    assert check_algebroid(F.algebroid).passed
    assert F.report == {"exact": True, "anchor surjective": True, "fiber restriction": True}


def test_trivial_family_is_a_direct_sum():
    F = toy([{}])
    A = F.algebroid
    g = F.gammas[0]
    assert A.diff[g] == {} and not any(A.bracket.values())
    assert A.rank == len(F.fiber.degrees) + 1


def test_fiber_restriction_recovers_sections():
    F = toy()
    h = F.fiber
    assert list(F.algebroid.degrees[: len(h.degrees)]) == list(h.degrees)
    for k, v in enumerate(h.diff):
        assert at_closed_point(F.algebroid.diff[k]) == {j: Fraction(c) for j, c in v.items() if c}


def test_anchor_rank_on_two_cover():
    F = toy()
    ranks = [any(a) for a in F.algebroid.anchor]
    assert sum(ranks) == BASE.m
    assert F.algebroid.is_transitive()


def test_cocycle_failure_has_witness():
    C = CoverDatum([fs("ad"), fs("bd"), fs("cd")], AtomPresheaf([(fs("d"), fs("d"), 0)]))
    with pytest.raises(CocycleFailure) as err:
        split_family(C, BASE, [{0: {(0, 1): {0: 1}}}])
    assert err.value.witness == (0, 1, 2)
    # c_01 = c_02 = 1, c_12 = 0 does satisfy the condition
    split_family(C, BASE, [{0: {(0, 1): {0: 1}, (0, 2): {0: 1}}}])


def test_non_abelian_sections_rejected():
    C = CoverDatum([fs("ac"), fs("bc")], ConstantPresheaf(sl2()))
    with pytest.raises(HypothesisFailure):
        split_family(C, BASE, [{}])


# ---------------------------------------------------------------- Kodaira-Spencer maps


def test_trivial_family_has_zero_ks():
    ks = family_ks(toy([{}]), 3)
    for I, v in ks.values.items():
        assert v == ({(): 1} if not I else {})


def test_truncation_too_small():
    F = split_family(two_cover(), weil_base(1, 2), [{0: {(0, 1): {0: 1}}}])
    with pytest.raises(TruncationTooSmall):
        family_ks(F, 3)


@pytest.mark.parametrize("seed,C,cochain", random_families(6))
def test_kappa1_is_minus_the_cech_class(seed, C, cochain):
    F = split_family(C, BASE, [{0: cochain}])
    ks = family_ks(F, 1)
    # independent route: integrate the kappa^1 representative back to Cech
    N = normalize(F.cech.module)
    I = F.model.integration_matrix(N)
    H1 = F.model.complex.cohomology(1)
    rep: dict = {}
    for i, c in ks.kappa1[0].items():
        for k, v in H1.representatives[i].items():
            rep[k] = rep.get(k, 0) + c * v
    image = {k: v for (t, k), v in I.apply({(1, k): c for k, c in rep.items()}).items()}
    y: dict = {}
    for (i, j), v in cochain.items():
        for k, c in F.cech.embed(1, (i, j), v).items():
            y[k] = -Fraction(c)
    HN = N.complex.cohomology(1)
    assert HN.class_of(image) == HN.class_of(N.coordinates(1, y))
    assert ks.kappa1[0] == {k: -c for k, c in ks.classical[0].items()}


def test_symbol_sign_in_order_two():
    ks = family_ks(toy(), 2)
    assert ks.symbols[(0, 0)]
    # without the sign the odd orders fail
    F = toy()
    fc = FilteredClasses(F.fiber, 1)
    w = {(j,): c for j, c in _chain(F).items()}
    assert not fc.same_class(ks.values[(0,)], w, 0)
    assert fc.same_class(ks.values[(0,)], {m: -c for m, c in w.items()}, 0)
    sq = elem_mul(F.fiber, w, w)
    assert FilteredClasses(F.fiber, 2).same_class(ks.values[(0, 0)], sq, 1)


def _chain(F):
    index = _model_index(F.model)
    return {index[(1, k)]: Fraction(c) for k, c in F.whitney[0][(0,)].items()}


@pytest.mark.parametrize("seed,C,cochain", random_families(6))
def test_symbols_on_random_families(seed, C, cochain):
    ks = family_ks(split_family(C, BASE, [{0: cochain}]), 3)
    assert all(ks.symbols.values())


def test_lower_orders_are_restrictions():
    F = toy([{0: {(0, 1): {0: 1}}, 1: {(0, 1): {0: -2}}}])
    hi = higher_ks(F.algebroid, 3).values
    for n in range(3):
        lo = higher_ks(F.algebroid, n).values
        for I, v in lo.items():
            assert at_closed_point(v) == at_closed_point(hi[I])


def test_varying_lifts_follow_schur():
    F = toy([{0: {(0, 1): {0: 1}}, 1: {(0, 1): {0: 2}}, 2: {(0, 1): {0: -1}}}])
    rep = ks_exponential(F.algebroid, 3)
    assert all(rep.cohomologous)
    assert all(rep.series_match)


# ---------------------------------------------------------------- comparison with the universal ring


def test_toy_family_is_universal_through_three():
    rep = universal_dual_check(toy(), 3)
    assert not rep.hypothesis_failure
    for s in rep.stages:
        assert s.diff_dim == s.k + 1 == s.filtered_dim == s.rank
        assert s.symbol_rank == 1
        assert s.bijective
    assert rep.passed


@pytest.mark.parametrize("seed,C,cochain", random_families(4))
def test_random_families_are_universal(seed, C, cochain):
    rep = universal_dual_check(split_family(C, BASE, [{0: cochain}]), 3)
    assert rep.passed, rep


def test_nonzero_h0_is_reported():
    C = two_cover([(fs("c"), fs("abc"), 0)])
    rep = universal_dual_check(split_family(C, BASE, [{0: {(0, 1): {0: 1}}}]), 2)
    assert rep.failed == ["H^0 = 0"]
    assert all(s.bijective is None for s in rep.stages)
    assert not rep.passed


def test_trivial_family_fails_kappa1():
    rep = universal_dual_check(toy([{}]), 2)
    assert rep.failed == ["kappa^1 bijective"]
    assert rep.kappa1_rank == 0 and rep.h1 == 1


def test_check_is_monotone_in_n():
    F = toy()
    small, big = universal_dual_check(F, 1), universal_dual_check(F, 3)
    assert small.hypotheses == big.hypotheses
    for a, b in zip(small.stages, big.stages):
        assert a == b
