import random
from fractions import Fraction

import pytest

from dgdeform.cech import AtomPresheaf, ConstantPresheaf, CoverDatum, cech_cosimplicial
from dgdeform.dgla import DGLA, check_dgla, sl2
from dgdeform.exactla import ColumnSpace, SparseMatrix
from dgdeform.thomsullivan import (
    CapExceeded,
    DegreeCapExceeded,
    Incompatible,
    NoSolution,
    TSDGLA,
    check_cosimplicial,
    check_form_identities,
    constant_module,
    degeneracy,
    dold_puppe,
    face,
    family_bracket,
    family_residual,
    form_algebra,
    form_d,
    is_reduced,
    normalize,
    path_homotopy,
    path_inclusion,
    path_object,
    path_projection,
    simplex_integral,
    solve_degeneracies,
    sub_and_quotient,
    submodule_closure,
    tensor_with_algebra,
    ts_complex,
    ts_dgla,
    wedge,
    whitney_form,
)

from gen import random_cover

fs = frozenset


def two_cover():
    return CoverDatum([fs("ac"), fs("bc")], AtomPresheaf([(fs("c"), fs("c"), 0)]))


def small_covers(count, levels=5):
    """Random cover modules whose normalized pieces stay small."""
    out = []
    seed = 0
    while len(out) < count:
        rng = random.Random(seed)
        seed += 1
        C = random_cover(rng, graded=seed % 3 == 0)
        Y = cech_cosimplicial(C, levels).module
        N = normalize(Y)
        if max(N.dims_by_level().values(), default=0) <= 3:
            out.append((seed - 1, Y, N))
    return out


# ---------------------------------------------------------------- forms


@pytest.mark.parametrize("p,D", [(p, D) for p in range(4) for D in range(3)])
def test_form_identities(p, D):
    rep = check_form_identities(p, D)
    assert rep.passed, rep.failures


def test_interval_forms_low_degree():
    # 1, t_1 and dt_1 span forms on the interval of polynomial degree <= 1
    A = form_algebra(1, 1)
    assert A.dims_by_form_degree() == {0: 2, 1: 1}


def test_d_of_square():
    t2 = {((2,), (0,)): Fraction(1)}
    assert form_d(t2) == {((1,), (1,)): 2}


def test_dt_squares_to_zero():
    dt = {((0, 0), (1, 0)): 1}
    assert wedge(dt, dt) == {}
    ds = {((0, 0), (0, 1)): 1}
    assert wedge(dt, ds) == {k: -v for k, v in wedge(ds, dt).items()}


def test_faces_of_interval():
    t = {((1,), (0,)): 1}
    # t_1 restricted to vertex 1 (the face omitting 0) is 1, to vertex 0 it is 0
    assert face(1, 0, t) == {((), ()): 1}
    assert face(1, 1, t) == {}
    # pulling back along the collapse of the interval is a constant map
    assert degeneracy(0, 0, {((), ()): 1}) == {((0,), (0,)): 1}


def test_integral_of_dt():
    assert simplex_integral(1, {((0,), (1,)): 1}) == 1
    assert simplex_integral(2, {((1, 0), (1, 1)): 1}) == Fraction(1, 6)


def test_whitney_forms_integrate_to_one():
    for p in range(1, 4):
        top = whitney_form(p, list(range(p + 1)))
        assert simplex_integral(p, top) == 1


# ---------------------------------------------------------------- normalization


def test_constant_module_normalizes_to_a_point():
    Y = constant_module([0], 5)
    assert check_cosimplicial(Y).passed
    N = normalize(Y)
    assert N.dims_by_level() == {0: 1}
    assert N.cohomology_dims() == {0: 1}


def test_two_cover_normalized_vanishes_above_one():
    Y = cech_cosimplicial(two_cover(), 5).module
    N = normalize(Y)
    assert N.dims_by_level() == {1: 1}
    assert N.cohomology_dims() == {1: 1}
    assert N.complex.d_squared_zero()


def test_dold_puppe_constant_counts_one():
    Y = constant_module([0], 4)
    for n in range(4):
        dp = dold_puppe(Y, n)
        assert dp.count(n) == 1
        assert dp.dimension_identity() == (1, 1)


@pytest.mark.parametrize("seed,Y,N", small_covers(4))
def test_dold_puppe_roundtrip(seed, Y, N):
    for n in range(4):
        dp = dold_puppe(Y, n)
        a, b = dp.dimension_identity()
        assert a == b
        for j in range(Y.dim(n)):
            x = {j: Fraction(1)}
            assert dp.assemble(dp.decompose(x)) == x


# ---------------------------------------------------------------- the TS complex


def test_constant_module_has_point_cohomology():
    Y = constant_module([0], 6)
    for D in range(4):
        assert ts_complex(Y, D).cohomology_dims() == {0: 1}


def test_two_cover_model():
    Y = cech_cosimplicial(two_cover(), 4).module
    M = ts_complex(Y, 2)
    assert M.dims == {(0, 0): 1, (1, 0): 2}
    assert M.cohomology_dims() == {1: 1}


def test_too_few_levels_rejected():
    Y = constant_module([0], 2)
    with pytest.raises(ValueError):
        ts_complex(Y, 2)


COVERS = small_covers(15)


@pytest.mark.parametrize("seed,Y,N", COVERS)
def test_de_rham_on_random_covers(seed, Y, N):
    D = max(N.bound() + 1, 1)
    M = ts_complex(Y, D)
    assert M.cohomology_dims() == N.cohomology_dims()
    I = M.integration_matrix(N)
    assert M.complex.is_chain_map(I, N.complex)
    # integration after Whitney is the identity on N
    for t, slots in N.slots.items():
        for k, (p, q, v) in enumerate(slots):
            tt, w = M.whitney(p, v)
            assert tt == t
            assert I.apply({(tt, i): c for i, c in w.items()}) == {(t, k): 1}


@pytest.mark.parametrize("seed,Y,N", COVERS[:6])
def test_short_exact_sequences_stay_exact(seed, Y, N):
    rng = random.Random(seed)
    p = min(N.dims_by_level(), default=0)
    gens = {p: [{j: rng.choice([-1, 1, 2]) for j in range(Y.dim(p)) if rng.random() < 0.7} or {0: 1}]}
    S, Q, inc, proj = sub_and_quotient(Y, submodule_closure(Y, gens))
    assert check_cosimplicial(S).passed and check_cosimplicial(Q).passed
    D = max(N.bound() + 1, 1)
    dy, ds, dq = (ts_complex(Z, D).dims for Z in (Y, S, Q))
    for nq in set(dy) | set(ds) | set(dq):
        assert dy.get(nq, 0) == ds.get(nq, 0) + dq.get(nq, 0)


DUAL_NUMBERS = {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}}


@pytest.mark.parametrize("seed,Y,N", COVERS[:6])
def test_base_change_to_dual_numbers(seed, Y, N):
    YA, actions = tensor_with_algebra(Y, DUAL_NUMBERS, 2)
    assert check_cosimplicial(YA).passed
    D = max(N.bound() + 1, 1)
    M, MA = ts_complex(Y, D), ts_complex(YA, D)
    # Omega(Y) (x) A -> Omega(Y (x) A) is bijective: dimensions double, and the
    # two copies of each basis family are independent in the bigger model
    assert {k: 2 * v for k, v in M.dims.items()} == MA.dims
    n = Y.dim
    images = {}
    for t in M.space.degrees():
        for k in range(M.space.dim(t)):
            fam = M.family(t, {k: Fraction(1)})
            for s in range(2):
                lifted = {p: {key: {s * n(p) + j: c for j, c in vec.items()} for key, vec in lv.items()}
                          for p, lv in fam.items()}
                assert family_residual(YA, lifted, M.P) == []
                images.setdefault(t, []).append(MA.coordinates(lifted, t))
    for t, vecs in images.items():
        assert len(vecs) == MA.space.dim(t) == ColumnSpace(vecs).dim


def test_cocycle_integrates_to_the_generator():
    Y = cech_cosimplicial(two_cover(), 4).module
    M = ts_complex(Y, 2)
    N = normalize(Y)
    I = M.integration_matrix(N)
    z = M.complex.cohomology(1).representatives[0]
    assert I.apply({(1, k): c for k, c in z.items()}) not in ({}, None)


def _vertex_form(p, j):
    # t_j in affine coordinates t_1..t_p, with t_0 = 1 - sum t_i
    zero = (0,) * p
    if j:
        return {(tuple(int(i == j - 1) for i in range(p)), zero): 1}
    out = {(zero, zero): 1}
    for i in range(p):
        out[(tuple(int(r == i) for r in range(p)), zero)] = -1
    return out


def test_whitney_of_level_zero_is_barycentric():
    Y = cech_cosimplicial(random_cover(random.Random(4)), 4).module
    M = ts_complex(Y, 1)
    y = {0: Fraction(1)}
    fam = M.whitney_family(0, y, 2)
    for p in range(3):
        expect: dict = {}
        for j in range(p + 1):
            img = Y.apply_injection(p, [i for i in range(p + 1) if i != j], y)
            for key, c in _vertex_form(p, j).items():
                acc = expect.setdefault(key, {})
                for k, v in img.items():
                    acc[k] = acc.get(k, 0) + c * v
        expect = {key: {k: v for k, v in vec.items() if v} for key, vec in expect.items()}
        assert fam[p] == {key: vec for key, vec in expect.items() if vec}
    assert family_residual(Y, fam, 2) == []


def test_whitney_needs_room():
    Y = cech_cosimplicial(two_cover(), 4).module
    M = ts_complex(Y, 1)
    with pytest.raises(CapExceeded):
        M.whitney_family(1, {0: Fraction(1)})


# ---------------------------------------------------------------- families and coordinates


@pytest.mark.parametrize("seed,Y,N", COVERS[:8])
def test_dfree_coordinates_roundtrip(seed, Y, N):
    D = max(N.bound() + 1, 1)
    M = ts_complex(Y, D)
    for t in M.space.degrees():
        for k in range(M.space.dim(t)):
            v = {k: Fraction(1)}
            assert M.reconstruct(t, M.dfree_coordinates(t, v)) == v
            fam = M.family(t, v)
            assert family_residual(Y, fam, M.P) == []
            assert M.coordinates(fam, t) == v


def test_special_coordinates_match_the_family():
    Y = cech_cosimplicial(two_cover(), 4).module
    M = ts_complex(Y, 2)
    checked = 0
    for t in M.space.degrees():
        for k in range(M.space.dim(t)):
            fam = M.family(t, {k: Fraction(1)})
            for p, lv in fam.items():
                for key, vec in lv.items():
                    if p >= 1 and key[0][0] == 1 and key[1][0] == 0 and is_reduced(key):
                        sub = (key[0][1:], key[1][1:])
                        assert M.special_coordinate(fam, p - 1, sub) == vec
                        checked += 1
    assert checked


def test_special_coordinate_beyond_cap():
    Y = cech_cosimplicial(two_cover(), 4).module
    M = ts_complex(Y, 1)
    fam = M.family(0, {0: Fraction(1)}) if M.space.dim(0) else {}
    with pytest.raises(CapExceeded):
        M.special_coordinate(fam, 0, ((1,), (0,)))


# ---------------------------------------------------------------- degeneracies


def test_solve_degeneracies_zero():
    Y = cech_cosimplicial(two_cover(), 4).module
    assert solve_degeneracies(Y, 2, [0, 1], {0: {}, 1: {}}) == {}


@pytest.mark.parametrize("seed,Y,N", COVERS[:6])
def test_solve_degeneracies_recovers_element(seed, Y, N):
    rng = random.Random(seed)
    for n in range(1, 4):
        x = {j: Fraction(rng.randint(-3, 3)) for j in range(Y.dim(n))}
        x = {j: c for j, c in x.items() if c}
        I = list(range(n))
        targets = {i: Y.codegeneracy(n - 1, i).apply(x) for i in I}
        y = solve_degeneracies(Y, n, I, targets)
        for i in I:
            assert Y.codegeneracy(n - 1, i).apply(y) == targets[i]
        part = sorted(rng.sample(I, rng.randint(1, n)))
        y = solve_degeneracies(Y, n, part, {i: targets[i] for i in part})
        for i in part:
            assert Y.codegeneracy(n - 1, i).apply(y) == targets[i]


def test_incompatible_targets_report_witness():
    Y = constant_module([0], 4)
    with pytest.raises(Incompatible) as err:
        solve_degeneracies(Y, 2, [0, 1], {0: {0: 1}, 1: {0: 2}})
    assert err.value.witness == (0, 1)


def test_unreachable_targets():
    Y = cech_cosimplicial(two_cover(), 4).module
    # a level-0 vector that is no codegeneracy of anything at level 1 is fine,
    # but asking sigma^0 to hit a non-image is not
    with pytest.raises((NoSolution, Incompatible)):
        solve_degeneracies(Y, 1, [0], {0: {j: 1 for j in range(Y.dim(0))} | {Y.dim(0): 1}})


# ---------------------------------------------------------------- strict homotopies


def test_path_object_is_cosimplicial():
    Y = cech_cosimplicial(random_cover(random.Random(0)), 4).module
    assert check_cosimplicial(path_object(Y)).passed


def test_homotopy_of_equal_maps():
    Y = cech_cosimplicial(random_cover(random.Random(3)), 4).module
    I = [SparseMatrix.identity(Y.dim(n)) for n in range(Y.top + 1)]
    F = path_inclusion(Y)
    assert path_homotopy(Y, Y, I, I, F).passed


def test_homotopy_through_the_path_object():
    Y = cech_cosimplicial(random_cover(random.Random(0)), 4).module
    YI = path_object(Y)
    inc, pr0 = path_inclusion(Y), path_projection(Y, 0)
    F, f, g = [], [], []
    for n in range(YI.top + 1):
        d = Y.dim(n)
        dI = d * (n + 2)
        ents = []
        for ku in range(n + 2):
            for ks in range(n + 2):
                # the pointwise minimum of two maps to [1] has max(ku, ks) zeros
                for j in range(d):
                    ents.append((ku * dI + ks * d + j, max(ku, ks) * d + j, 1))
        F.append(SparseMatrix.from_entries(dI * (n + 2), dI, ents))
        f.append(inc[n] @ pr0[n])
        g.append(SparseMatrix.identity(dI))
    rep = path_homotopy(YI, YI, f, g, F)
    assert rep.passed, rep.failures


# ---------------------------------------------------------------- brackets


def test_abelian_sections_give_a_dgla():
    Y = cech_cosimplicial(two_cover(), 4).module
    g = ts_dgla(Y, 2)
    assert isinstance(g, DGLA)
    assert check_dgla(g).passed


def test_koszul_sign_in_family_bracket():
    # constant on a graded Lie algebra with x in degree 1 and [x, x] = y
    Y = constant_module([1, 2], 3, None, {(0, 0): {1: Fraction(1)}})
    w = {p: {((1,) + (0,) * (p - 1), (0,) * p): {0: Fraction(1)}} for p in range(1, 3)}
    dt = {p: {((0,) * p, (1,) + (0,) * (p - 1)): {0: Fraction(1)}} for p in range(1, 3)}
    # [t (x) x, dt (x) x] = (-1)^{|x||dt|} t dt (x) [x, x]
    br = family_bracket(Y, w, dt, 2)
    assert br[1] == {((1,), (1,)): {1: -1}}


def test_sl2_two_cover_jacobi():
    C = CoverDatum([fs("ac"), fs("bc")], ConstantPresheaf(sl2()))
    Y = cech_cosimplicial(C, 5).module
    T = TSDGLA(Y, 1, cap=3)
    assert T.model.cohomology_dims() == {0: 3}
    rep = T.check(samples=0)
    assert rep.passed, rep.failures


def test_bracket_cap():
    C = CoverDatum([fs("ac"), fs("bc")], ConstantPresheaf(sl2()))
    Y = cech_cosimplicial(C, 5).module
    T = TSDGLA(Y, 1, cap=1)
    a = T.element(1, {0: Fraction(1)})
    with pytest.raises(DegreeCapExceeded):
        T.bracket_families(a, a)
    with pytest.raises(DegreeCapExceeded):
        T.as_dgla()
