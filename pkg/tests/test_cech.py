import random

import pytest

from dgdeform.cech import (
    AtomPresheaf,
    ComponentPresheaf,
    ConstantPresheaf,
    CoverDatum,
    HypothesisFailure,
    InconsistentRestrictions,
    NotARefinement,
    TablePresheaf,
    augmentation_is_quasi_iso,
    cech_cohomology,
    cech_cosimplicial,
    check_cover,
    global_lie_homology,
    refinement_compare,
    refinement_map,
    rgamma,
    rgamma_lie,
    table_points,
)
from dgdeform.dgla import DGLA, check_dgla, e1_page, kunneth_exterior_dims, sl2
from dgdeform.exactla import SparseMatrix
from dgdeform.thomsullivan import TSDGLA, check_cosimplicial, normalize

from gen import random_cover

fs = frozenset


def two_cover():
    return CoverDatum([fs("ac"), fs("bc")], AtomPresheaf([(fs("c"), fs("c"), 0)]))


def hexagon():
    cyc = [(i, (i + 1) % 6) for i in range(6)]
    F = ComponentPresheaf(cyc)
    coarse = CoverDatum([fs({0, 1, 2, 3, 4}), fs({3, 4, 5, 0})], F)
    fine = CoverDatum([fs({0, 1, 2, 3}), fs({3, 4}), fs({4, 5, 0})], F)
    return coarse, fine


def test_single_open_is_constant():
    C = CoverDatum([fs("ab")], AtomPresheaf([(fs("ab"), fs("ab"), 0), (fs("ab"), fs("ab"), 0)]))
    Y = cech_cosimplicial(C, 4).module
    for p in range(5):
        assert Y.dim(p) == 2
        for m in Y.cofaces[p] if p < 4 else []:
            assert m == SparseMatrix.identity(2)
    assert normalize(Y).dims_by_level() == {0: 2}


@pytest.mark.parametrize("seed", range(10))
def test_normalized_vanishes_above_cover_size(seed):
    C = random_cover(random.Random(seed), graded=seed % 2 == 1)
    ch = cech_cosimplicial(C, C.size + 2)
    assert check_cosimplicial(ch.module).passed
    assert all(p < C.size for p in normalize(ch.module).dims_by_level())


def test_three_cover_identities():
    C = random_cover(random.Random(0), size=3)
    assert check_cover(C).passed
    assert check_cosimplicial(cech_cosimplicial(C, 5).module).passed


@pytest.mark.parametrize("seed", range(6))
def test_all_tuples_agree_with_ordered(seed):
    C = random_cover(random.Random(seed))
    lv = C.size + 2
    ordered = cech_cohomology(C, lv)
    full = cech_cohomology(C, lv, "all")
    assert {t: n for t, n in full.items() if t < lv - 1} == ordered


def test_inconsistent_restrictions():
    pts, opens = table_points([0, 1, 2])
    one = SparseMatrix.identity(1)
    two = SparseMatrix.from_entries(1, 1, [(0, 0, 2)])
    sections = {S: [0] for S in pts}
    maps = {(fs({0}), fs({0, 1})): two, (fs({0, 1}), fs({0, 1, 2})): one, (fs({0}), fs({0, 1, 2})): one}
    C = CoverDatum(opens, TablePresheaf(sections, maps))
    assert not check_cover(C).passed
    with pytest.raises(InconsistentRestrictions):
        cech_cosimplicial(C, 3)


def test_table_cover_consistent():
    pts, opens = table_points([0, 1])
    C = CoverDatum(opens, TablePresheaf({fs({0}): [0], fs({1}): [0], fs({0, 1}): [0]}, {}))
    # two points glued along a point: sections of a connected space
    assert cech_cohomology(C) == {0: 1}


def test_augmentation():
    path = [(i, i + 1) for i in range(4)]
    C = CoverDatum([fs({0, 1, 2}), fs({2, 3, 4})], ComponentPresheaf(path))
    assert augmentation_is_quasi_iso(C, 4)
    coarse, _ = hexagon()
    assert not augmentation_is_quasi_iso(coarse, 4)


# ---------------------------------------------------------------- derived sections


def test_one_open_gives_the_algebra_back():
    g = sl2()
    T = rgamma_lie(CoverDatum([fs("ab")], ConstantPresheaf(g)), 1)
    assert isinstance(T, TSDGLA)
    assert T.model.cohomology_dims() == {0: 3}
    assert T.check(samples=0).passed


@pytest.mark.parametrize("seed", range(8))
def test_abelian_derived_sections_match_cech(seed):
    C = random_cover(random.Random(seed), graded=seed % 2 == 1)
    N = normalize(cech_cosimplicial(C, C.size + 2).module)
    D = max(N.bound() + 1, 1)
    g = rgamma_lie(C, D)
    assert isinstance(g, DGLA)
    assert check_dgla(g).passed
    _, model = rgamma(C, D)
    assert model.cohomology_dims() == N.cohomology_dims()


@pytest.mark.parametrize("seed", range(4))
def test_e1_page_of_derived_sections_is_exterior_of_homology(seed):
    C = random_cover(random.Random(seed), graded=seed % 2 == 1)
    N = normalize(cech_cosimplicial(C, C.size + 2).module)
    g = rgamma_lie(C, max(N.bound() + 1, 1))
    h = {t: n for t, n in N.cohomology_dims().items() if n}
    top = max(g.degrees, default=0)
    e1 = e1_page(g, 2, (-2, 2 * top))
    for a in range(3):
        # rows of E_1 in arity a against Lambda^a of the homology
        assert {q: v for (p, q), v in e1.items() if p == -a} == {q: v for q, v in kunneth_exterior_dims(h, a).items() if v}


def test_sl2_two_cover():
    C = CoverDatum([fs("ac"), fs("bc")], ConstantPresheaf(sl2()))
    T = rgamma_lie(C, 1, None)
    T = TSDGLA(T.Y, 1, cap=3)
    assert T.check(samples=0).passed


# ---------------------------------------------------------------- refinements


def test_circle_refinement_maps_agree():
    coarse, fine = hexagon()
    assert cech_cohomology(coarse) == cech_cohomology(fine) == {0: 1, 1: 1}
    rep = refinement_compare(coarse, fine, (0, 0, 1), (0, 1, 1), D=2)
    assert rep.equal
    assert rep.maps_f[1] == rep.maps_g[1]
    assert not rep.maps_f[1].is_zero()
    assert rep.homotopy.passed, rep.homotopy.failures


def test_refinement_by_the_same_map():
    coarse, fine = hexagon()
    rep = refinement_compare(coarse, fine, (0, 0, 1), (0, 0, 1), D=2)
    assert rep.equal and rep.homotopy.passed


def test_refinement_maps_compose():
    coarse, fine = hexagon()
    finer = CoverDatum([fs({0, 1, 2}), fs({2, 3}), fs({3, 4}), fs({4, 5, 0})], fine.presheaf)
    lv = 5
    cc, cf, cg = (cech_cosimplicial(C, lv) for C in (coarse, fine, finer))
    f, h = (0, 0, 1), (0, 0, 1, 2)
    two_steps = refinement_map(cf, cg, h).compose(refinement_map(cc, cf, f))
    direct = refinement_map(cc, cg, tuple(f[i] for i in h))
    assert all(a == b for a, b in zip(two_steps.levels, direct.levels))
    ident = refinement_map(cf, cf, (0, 1, 2))
    assert all(m == SparseMatrix.identity(cf.module.dim(n)) for n, m in enumerate(ident.levels))


def test_not_a_refinement():
    coarse, fine = hexagon()
    with pytest.raises(NotARefinement):
        refinement_compare(coarse, fine, (1, 0, 1), (0, 1, 1), D=2)
    cc, cf = cech_cosimplicial(coarse, 3), cech_cosimplicial(fine, 3)
    with pytest.raises(NotARefinement):
        refinement_map(cc, cf, (1, 1, 0))


# ---------------------------------------------------------------- Lie homology of global sections


def test_global_lie_homology_two_cover():
    r = global_lie_homology(two_cover(), 4, 2)
    assert r.cech_dims == {1: 1}
    assert r.filtration == {n: n + 1 for n in range(5)}
    assert r.graded == r.symmetric == {n: 1 for n in range(5)}
    assert r.symbol_ranks == r.symmetric
    assert not r.hypothesis_failure


def test_global_sections_flag_nonzero_h0():
    C = CoverDatum([fs("ab")], AtomPresheaf([(fs("ab"), fs("ab"), 0)]))
    r = global_lie_homology(C, 3, 1)
    assert r.cech_dims == {0: 1}
    assert r.hypothesis_failure
    assert not r.hypotheses["H^0 = 0"]


def test_global_lie_homology_needs_abelian_sections():
    C = CoverDatum([fs("ac"), fs("bc")], ConstantPresheaf(sl2()))
    with pytest.raises(HypothesisFailure):
        global_lie_homology(C, 2, 1)
