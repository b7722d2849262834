import random
from fractions import Fraction
from math import factorial

import pytest

from dgdeform.dgla import (
    DGLA,
    abelian,
    check_coalgebra_map,
    check_dgla,
    elem_mul,
    lift_component,
    sl2,
    two_dim_nonabelian,
)
from dgdeform.envelope import (
    NotAnIdeal,
    cone_dgla,
    connecting_c,
    connecting_c1,
    env_truncated,
    generated_ideal,
    schur,
    sub_dgla,
    symmetric_power_dims,
)
from dgdeform.graded import add_into, complex_from_matrices, sym_ext_power

from gen import random_dgla


def rightmost_normal_form(U, w):
    """Independent straightening that always rewrites the rightmost disorder."""
    a = U.a
    deg = a.degrees
    todo = {tuple(w): Fraction(1)}
    done = {}
    while todo:
        word, c = todo.popitem()
        k = None
        for j in range(len(word) - 2, -1, -1):
            y, x = word[j], word[j + 1]
            if U.rank[y] > U.rank[x] or (y == x and deg[x] % 2):
                k = j
                break
        if k is None:
            add_into(done, word, c)
            continue
        y, x = word[k], word[k + 1]
        pre, post = word[:k], word[k + 2 :]
        if y == x:
            for z, v in a.bracket.get((x, x), {}).items():
                add_into(todo, pre + (z,) + post, c * v / 2)
        else:
            s = -1 if (deg[x] * deg[y]) % 2 else 1
            add_into(todo, pre + (x, y) + post, s * c)
            for z, v in a.bracket.get((y, x), {}).items():
                add_into(todo, pre + (z,) + post, c * v)
    return done


def random_cone(rng, max_dim=4):
    g = random_dgla(rng, max_dim)
    seed = {rng.randrange(g.dim): Fraction(1)}
    h, inc = sub_dgla(g, generated_ideal(g, [seed]))
    return cone_dgla(h, inc, g)


# ---------------------------------------------------------------- envelope


def test_abelian_dims():
    U = env_truncated(abelian(2), 2)
    assert U.filtration_dims() == [1, 3, 6]


def test_two_dim_straightening():
    U = env_truncated(two_dim_nonabelian(), 2)
    assert U.normal_form((1, 0)) == {(0, 1): 1, (1,): -1}
    # oracle: apply yx = xy + [y, x] once, [y, x] = -y
    assert rightmost_normal_form(U, (1, 0)) == {(0, 1): 1, (1,): -1}


def test_coproduct_of_two_primitives():
    U = env_truncated(abelian(2), 2)
    assert U.coproduct_mono((0, 1)) == {((), (0, 1)): 1, ((0,), (1,)): 1, ((1,), (0,)): 1, ((0, 1), ()): 1}


def test_straightening_strategy_independent():
    rng = random.Random(1)
    for a in [sl2(), two_dim_nonabelian()] + [random_dgla(rng, 4) for _ in range(10)]:
        U = env_truncated(a, 4)
        for _ in range(30):
            w = tuple(rng.randrange(a.dim) for _ in range(rng.randint(0, 4)))
            assert U.normal_form(w) == rightmost_normal_form(U, w)


def test_associativity_and_derivation():
    rng = random.Random(2)
    for a in [sl2()] + [random_dgla(rng, 4) for _ in range(8)]:
        U = env_truncated(a, 3)
        small = [m for m in U.basis if len(m) <= 1]
        for x in small:
            for y in small:
                for z in small:
                    X, Y, Z = {x: 1}, {y: 1}, {z: 1}
                    assert U.mul(U.mul(X, Y), Z) == U.mul(X, U.mul(Y, Z))
        for x in U.basis:
            for y in small:
                X, Y = {x: Fraction(1)}, {y: Fraction(1)}
                lhs = U.d(U.mul(X, Y))
                rhs = U.mul(U.d(X), Y)
                s = -1 if U.deg(x) % 2 else 1
                for m, c in U.mul(X, U.d(Y)).items():
                    add_into(rhs, m, s * c)
                assert lhs == rhs


def test_pbw_dims():
    rng = random.Random(3)
    for a in [sl2()] + [random_dgla(rng, 5) for _ in range(8)]:
        U = env_truncated(a, 4)
        assert U.graded_dims() == symmetric_power_dims(a.degrees, 4)
        dims = {}
        for p in a.degrees:
            dims[p] = dims.get(p, 0) + 1
        C = complex_from_matrices(dims, {})
        for i in range(1, 4):
            assert U.graded_dims()[i] == sym_ext_power(C, i, "symmetric").complex.space.total_dim


# ---------------------------------------------------------------- cones


def test_cone_bracket_sign():
    g = sl2()
    h, inc = sub_dgla(g, [{0: 1}, {1: 1}, {2: 1}])
    cone = cone_dgla(h, inc, g)
    X = cone.X
    # [(h, 0), (0, g')] = ([h, g'], 0): [s e, f] = s[e, f] = s h
    assert X.br({1: Fraction(1)}, {3 + 2: Fraction(1)}) == {0: 1}
    # [(0, g), (h', 0)] = ((-1)^{|g|} [g, h'], 0) with |g| = 0
    assert X.br({3 + 1: Fraction(1)}, {2: Fraction(1)}) == {0: 1}
    assert check_dgla(X).passed


def test_cone_of_identity_contractible():
    g = two_dim_nonabelian()
    h, inc = sub_dgla(g, [{0: 1}, {1: 1}])
    X = cone_dgla(h, inc, g).X
    assert check_dgla(X).passed
    for k in range(X.dim):
        assert not X.d(X.d({k: 1}))


def test_theta_lie_not_chain_and_dtheta():
    # g = sl2 (x) Q[u]/u^2 with |u| = -1, du = 1; h = ideal generated by the u-part
    from dgdeform.dgla import tensor_with_cdga

    g = tensor_with_cdga(sl2(), [0, -1], {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}}, {1: {0: 1}})
    seeds = [{k: Fraction(1)} for k in range(g.dim) if g.degrees[k] == -1]
    h, inc = sub_dgla(g, generated_ideal(g, seeds))
    cone = cone_dgla(h, inc, g)
    X = cone.X
    theta_not_chain = False
    for x in range(X.dim):
        for y in range(X.dim):
            lhs = cone.theta(X.br({x: 1}, {y: 1}))
            rhs = g.br(cone.theta({x: 1}), cone.theta({y: 1}))
            assert lhs == rhs
        # d theta = theta d - ... ; as a map of degree 0, d(theta) = d_g theta - theta d_X = -i phi
        dth = dict(g.d(cone.theta({x: Fraction(1)})))
        for k, c in cone.theta(X.d({x: Fraction(1)})).items():
            add_into(dth, k, -c)
        want = {k: -c for k, c in cone.include(cone.phi({x: Fraction(1)})).items()}
        assert dth == want
        if dth:
            theta_not_chain = True
    assert theta_not_chain


def test_not_an_ideal():
    g = sl2()
    with pytest.raises(NotAnIdeal):
        cone_dgla(DGLA.from_table([0], {}), [{1: 1}], g)


# ---------------------------------------------------------------- connecting morphism


def test_c1_unit_and_generators():
    rng = random.Random(4)
    for _ in range(5):
        cone = random_cone(rng)
        cm = connecting_c1(cone, 3)
        assert cm.c1({(): Fraction(1)}) == {}
        for x in range(cone.X.dim):
            assert cm.c1_word((x,)) == cone.phi({x: 1})


def test_c1_two_ways_and_relations():
    rng = random.Random(5)
    for _ in range(10):
        cone = random_cone(rng)
        cm = connecting_c1(cone, 3)
        X, U = cone.X, cm.U
        for x in range(X.dim):
            for y in range(X.dim):
                direct = cm.c1_word((x, y))
                via_nf = cm.c1(U.normal_form((x, y)))
                assert direct == via_nf
                # relation xy - (-1)^{ab} yx - [x, y]
                rel = dict(cm.c1_word((x, y)))
                s = -1 if (X.degrees[x] * X.degrees[y]) % 2 else 1
                for k, c in cm.c1_word((y, x)).items():
                    add_into(rel, k, -s * c)
                for z, c in X.bracket.get((x, y), {}).items():
                    for k, v in cm.c1_word((z,)).items():
                        add_into(rel, k, -c * v)
                assert not rel


def test_c_is_filtered_coalgebra_chain_map():
    rng = random.Random(6)
    for _ in range(20):
        cone = random_cone(rng)
        cm = connecting_c(cone, 3)
        assert cm.residual() == {}
        assert cm.c(()) == {(): 1}
        assert check_coalgebra_map(cm.A, cm.c, cone.h) == []
        for m in cm.U.basis:
            assert all(len(k) <= len(m) for k in cm.c(m))


def test_c_on_primitives_is_product():
    g = sl2()
    h, inc = sub_dgla(g, [{0: 1}, {1: 1}, {2: 1}])
    cone = cone_dgla(h, inc, g)
    cm = connecting_c(cone, 3)
    for m in [(0, 1), (0, 1, 2), (1, 2)]:
        prod = {(): Fraction(1)}
        for x in m:
            prod = elem_mul(h, prod, {(k,): v for k, v in cm.c1_word((x,)).items()})
        assert lift_component(cm.A, cm.f1, h, m, len(m)) == prod


def test_zero_ideal_cone_collapses_to_counit():
    g = sl2()
    cone = cone_dgla(DGLA([], [], {}), [], g)
    cm = connecting_c(cone, 3)
    for m in cm.U.basis:
        assert cm.c(m) == ({(): 1} if m == () else {})


# ---------------------------------------------------------------- Schur polynomials


def series_schur(n):
    """Coefficients of n! [t^n] exp(sum alpha_p t^p / p!) by power-series arithmetic."""
    # polynomials in alpha as {exponent tuple: coeff}; series as list indexed by t-degree
    def mono(p):
        e = [0] * n
        e[p - 1] = 1
        return tuple(e)

    S = [dict() for _ in range(n + 1)]
    for p in range(1, n + 1):
        S[p] = {mono(p): Fraction(1, factorial(p))}
    E = [dict() for _ in range(n + 1)]
    E[0] = {tuple([0] * n): Fraction(1)}
    term = [dict(x) for x in E]
    for k in range(1, n + 1):
        new = [dict() for _ in range(n + 1)]
        for i in range(n + 1):
            for j in range(n + 1 - i):
                for a, c in term[i].items():
                    for b, v in S[j].items():
                        add_into(new[i + j], tuple(x + y for x, y in zip(a, b)), c * v / k)
        term = new
        for i in range(n + 1):
            for a, c in term[i].items():
                add_into(E[i], a, c)
    return {a: c * factorial(n) for a, c in E[n].items()}


def test_schur_small():
    assert schur(0) == {(): 1}
    assert schur(1) == {(1,): 1}


def test_schur_matches_series():
    for n in range(1, 7):
        assert schur(n) == series_schur(n)


def test_schur_exponential_substitution():
    a, b = Fraction(2, 3), Fraction(-5, 7)
    for n in range(6):
        val = sum(c * _prod(a ** (p) * b for p in range(len(e)) for _ in range(e[p])) for e, c in schur(n).items())
        # n! [t^n] exp(b (e^{at} - 1) / a), computed by series
        ser = [Fraction(0)] * (n + 1)
        inner = [Fraction(0)] + [b * a ** (k - 1) / factorial(k) for k in range(1, n + 1)]
        term = [Fraction(1)] + [Fraction(0)] * n
        ser = list(term)
        for k in range(1, n + 1):
            term = [sum(term[i] * inner[j - i] for i in range(j + 1)) / k for j in range(n + 1)]
            ser = [x + y for x, y in zip(ser, term)]
        assert val == ser[n] * factorial(n)


def _prod(it):
    out = Fraction(1)
    for x in it:
        out *= x
    return out
