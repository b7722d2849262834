import random
from fractions import Fraction

import numpy as np
import pytest

from dgdeform.exactla import (
    ColumnSpace,
    CompositionNonzero,
    SparseMatrix,
    kernel_image,
    nullspace_integer_rows,
    rank,
    solve,
    subquotient_homology,
)

from oracles import dense_rank


def rand_matrix(rng, r, c, density=0.5, lo=-3, hi=3):
    ents = [
        (i, j, Fraction(rng.randint(lo, hi), rng.choice([1, 1, 2, 3])))
        for i in range(r)
        for j in range(c)
        if rng.random() < density
    ]
    return SparseMatrix.from_entries(r, c, ents)


def test_zero_matrix():
    ker, img = kernel_image(SparseMatrix.zeros(2, 2))
    assert len(ker) == 2 and len(img) == 0


def test_identity():
    ker, img = kernel_image(SparseMatrix.identity(3))
    assert len(ker) == 0 and len(img) == 3


def test_rank_one_example():
    m = SparseMatrix.from_dense([[1, 2], [2, 4]])
    ker, img = kernel_image(m)
    assert len(img) == 1 and len(ker) == 1
    v = ker[0]
    # proportional to (2, -1)
    assert v.get(0, 0) * -1 == v.get(1, 0) * 2
    assert dense_rank(m.to_dense()) == 1


def test_empty_shapes():
    for r, c in [(0, 0), (0, 3), (3, 0)]:
        ker, img = kernel_image(SparseMatrix.zeros(r, c))
        assert len(ker) == c and len(img) == 0


def test_rank_nullity_and_oracle():
    rng = random.Random(7)
    for _ in range(60):
        r, c = rng.randint(0, 7), rng.randint(0, 7)
        m = rand_matrix(rng, r, c)
        ker, img = kernel_image(m)
        assert len(ker) + len(img) == c
        assert len(img) == (dense_rank(m.to_dense()) if r else 0)
        for v in ker:
            assert not m.apply(v)


def test_permutation_invariance():
    rng = random.Random(11)
    for _ in range(30):
        m = rand_matrix(rng, 5, 6)
        rp = list(range(5))
        cp = list(range(6))
        rng.shuffle(rp)
        rng.shuffle(cp)
        assert rank(m.permuted(rp, cp)) == rank(m)


def test_deterministic_bases():
    m = SparseMatrix.from_dense([[1, 1, 0, 2], [0, 1, 1, 1], [1, 2, 1, 3]])
    assert kernel_image(m) == kernel_image(m)


def test_solve():
    m = SparseMatrix.from_dense([[1, 2], [3, 4], [5, 6]])
    x = solve(m, {0: 3, 1: 7, 2: 11})
    assert m.apply(x) == {0: 3, 1: 7, 2: 11}
    assert solve(m, {0: 1}) is None


def test_column_space_coordinates():
    vs = [{0: 1, 1: 1}, {1: 1}, {0: 2, 1: 3}]
    cs = ColumnSpace(vs)
    assert cs.dim == 2
    c = cs.coordinates({0: 5, 1: 2})
    total = {}
    for k, a in c.items():
        for j, x in vs[k].items():
            total[j] = total.get(j, 0) + a * x
    assert {j: x for j, x in total.items() if x} == {0: 5, 1: 2}
    assert ColumnSpace([{0: 1}]).coordinates({1: 1}) is None


def test_homology_zero_maps():
    h = subquotient_homology(SparseMatrix.zeros(2, 2), SparseMatrix.zeros(2, 2))
    assert h.dim == 2


def test_homology_exact():
    h = subquotient_homology(SparseMatrix.identity(3), SparseMatrix.zeros(0, 3))
    assert h.dim == 0


def test_koszul_segment():
    d_in = SparseMatrix.from_dense([[1], [1]])
    d_out = SparseMatrix.from_dense([[1, -1]])
    h = subquotient_homology(d_in, d_out)
    assert h.dim == 0
    # brute-force: dim ker d_out - rank d_in
    assert (2 - dense_rank(d_out.to_dense())) - dense_rank(d_in.to_dense()) == 0


def test_composition_nonzero():
    with pytest.raises(CompositionNonzero):
        subquotient_homology(SparseMatrix.identity(2), SparseMatrix.identity(2))


def test_homology_random_formula():
    rng = random.Random(3)
    for _ in range(30):
        a = rand_matrix(rng, 4, 3)
        # build d_out killing the image of a
        ker_t, _ = kernel_image(a.transpose())
        d_out = SparseMatrix.from_rows(4, ker_t[: rng.randint(0, len(ker_t))]) if ker_t else SparseMatrix.zeros(0, 4)
        h = subquotient_homology(a, d_out)
        assert h.dim == (4 - dense_rank(d_out.to_dense())) - dense_rank(a.to_dense())
        for z in h.representatives:
            assert not d_out.apply(z)
            assert not h.is_boundary(z)


def test_integer_nullspace_matches_exact():
    rng = np.random.default_rng(5)
    for _ in range(10):
        rows = rng.integers(-4, 5, size=(40, 12))
        rows[rng.random(rows.shape) < 0.6] = 0
        big = nullspace_integer_rows([rows[:20], rows[20:]], 12)
        m = SparseMatrix.from_dense(rows.tolist())
        small, _ = kernel_image(m)
        assert len(big) == len(small)
        for v in big:
            assert not m.apply(v)


def test_integer_nullspace_large_entries():
    rows = np.array([[2**40, 3, 0], [0, 2**35, -1]], dtype=np.int64)
    ker = nullspace_integer_rows([rows], 3)
    m = SparseMatrix.from_dense(rows.tolist())
    assert len(ker) == 1 and not m.apply(ker[0])
