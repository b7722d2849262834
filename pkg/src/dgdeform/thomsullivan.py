"""Polynomial forms on simplices and the Thom-Sullivan functor.

Forms on the p-simplex are written in the affine coordinates ``t_1..t_p``
(with ``t_0 = 1 - sum t_i``).  A form is a dict ``{(a, alpha): coeff}`` where
``a`` is the exponent vector and ``alpha`` the 0/1 vector of differentials,
so the key ``(a, alpha)`` stands for ``t^a dt^alpha``.  The total degree of a
key is ``|a| + |alpha|``; the de Rham differential preserves it and every
face or degeneracy map can only lower it.  ``Omega_{<=D}`` is therefore a
sub-object of the simplicial dg algebra of forms.

A cosimplicial module is stored level by level up to a top level.  The
Thom-Sullivan complex is computed as the kernel of the compatibility
equations between consecutive levels, parametrized by the coordinates whose
slots are all nonzero ("reduced" coordinates); every other coordinate is a
coface image of a lower one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import factorial
from typing import Sequence

from .dgla import DGLA, AxiomReport
from .exactla import (
    ColumnSpace,
    Echelon,
    SparseMatrix,
    inverse,
    kernel,
    solve,
    vstack,
)
from .graded import ComplexQ, GradedMap, GradedSpace, add_into


class NotStabilized(RuntimeError):
    """Model dimensions changed between level caps P and P+1."""


class DegreeCapExceeded(ArithmeticError):
    """A bracket or product would leave the tracked polynomial-degree cap."""


class CapExceeded(ValueError):
    """A coordinate needed by an induction lies beyond the stored caps."""


class NotAHomotopy(ValueError):
    """The proposed strict homotopy does not restrict to the two maps."""


class Incompatible(ValueError):
    """Degeneracy targets violate a compatibility; ``witness`` is the pair (i, j)."""

    def __init__(self, msg: str, witness=None):
        super().__init__(msg)
        self.witness = witness


class NoSolution(ValueError):
    """A linear system that should be solvable is not."""


# ----------------------------------------------------------------------------
# forms on simplices


def key_total(key) -> int:
    return sum(key[0]) + sum(key[1])


def _exponents(p: int, top: int):
    if p == 0:
        yield ()
        return
    for e in range(top + 1):
        for rest in _exponents(p - 1, top - e):
            yield (e,) + rest


@lru_cache(maxsize=None)
def form_keys(p: int, D: int, n: int | None = None) -> tuple:
    """Basis keys of ``Omega_p`` of total degree <= D (form degree n if given)."""
    keys = []
    for alpha in product((0, 1), repeat=p):
        k = sum(alpha)
        if k > D or (n is not None and k != n):
            continue
        for a in _exponents(p, D - k):
            keys.append((a, alpha))
    keys.sort(key=lambda x: (key_total(x), x[1], x[0]))
    return tuple(keys)


def is_reduced(key) -> bool:
    return all(a or al for a, al in zip(*key))


def _wedge_sign(alpha, beta) -> int:
    """Sign of dt^alpha ^ dt^beta after sorting the differentials."""
    swaps = 0
    seen = 0
    for x, y in zip(alpha, beta):
        if x:
            swaps += seen
        if y:
            seen += 1
    return -1 if swaps & 1 else 1


def wedge(x: dict, y: dict) -> dict:
    out: dict = {}
    for (a, al), c in x.items():
        for (b, be), e in y.items():
            if any(u and v for u, v in zip(al, be)):
                continue
            s = _wedge_sign(al, be)
            key = (tuple(i + j for i, j in zip(a, b)), tuple(u | v for u, v in zip(al, be)))
            add_into(out, key, s * c * e)
    return out


def form_d(x: dict) -> dict:
    out: dict = {}
    for (a, al), c in x.items():
        before = 0
        for j, (e, f) in enumerate(zip(a, al)):
            if f:
                before += 1
                continue
            if e:
                key = (a[:j] + (e - 1,) + a[j + 1:], al[:j] + (1,) + al[j + 1:])
                add_into(out, key, (-1 if before & 1 else 1) * e * c)
    return out


def _affine_power_mul(poly: dict, image, q: int) -> dict:
    const, lin = image
    out: dict = {}
    for ex, c in poly.items():
        if const:
            add_into(out, ex, c * const)
        for s, v in lin.items():
            add_into(out, ex[:s] + (ex[s] + 1,) + ex[s + 1:], c * v)
    return out


def pullback(key, images, q: int) -> dict:
    """Pull ``t^a dt^alpha`` back along affine coordinate images on a q-simplex.

    ``images[j] = (const, {slot: coeff})`` is the image of ``t_{j+1}``.
    """
    a, al = key
    zero = (0,) * q
    poly = {zero: Fraction(1)}
    for j, e in enumerate(a):
        for _ in range(e):
            poly = _affine_power_mul(poly, images[j], q)
            if not poly:
                return {}
    form = {(ex, zero): c for ex, c in poly.items()}
    for j, f in enumerate(al):
        if f:
            one = {(zero, tuple(1 if s == t else 0 for t in range(q))): Fraction(v) for s, v in images[j][1].items()}
            form = wedge(form, one)
            if not form:
                return {}
    return form


def _face_images(p: int, i: int) -> list:
    """Coordinates of the i-th face inclusion Delta^{p-1} -> Delta^p."""
    imgs = []
    for j in range(1, p + 1):
        if i == 0:
            imgs.append((1, {s: -1 for s in range(p - 1)}) if j == 1 else (0, {j - 2: 1}))
        elif j < i:
            imgs.append((0, {j - 1: 1}))
        elif j == i:
            imgs.append((0, {}))
        else:
            imgs.append((0, {j - 2: 1}))
    return imgs


def _degeneracy_images(p: int, i: int) -> list:
    """Coordinates of the i-th collapse Delta^{p+1} -> Delta^p."""
    imgs = []
    for j in range(1, p + 1):
        if i == 0 or j > i:
            imgs.append((0, {j: 1}))
        elif j < i:
            imgs.append((0, {j - 1: 1}))
        else:
            imgs.append((0, {i - 1: 1, i: 1}))
    return imgs


@lru_cache(maxsize=None)
def _face_key(p: int, i: int, key) -> tuple:
    return tuple(sorted(pullback(key, _face_images(p, i), p - 1).items()))


@lru_cache(maxsize=None)
def _degeneracy_key(p: int, i: int, key) -> tuple:
    return tuple(sorted(pullback(key, _degeneracy_images(p, i), p + 1).items()))


def face(p: int, i: int, x: dict) -> dict:
    """``d_i : Omega_p -> Omega_{p-1}``, 0 <= i <= p."""
    out: dict = {}
    for key, c in x.items():
        for k, v in _face_key(p, i, key):
            add_into(out, k, c * v)
    return out


def degeneracy(p: int, i: int, x: dict) -> dict:
    """``s_i : Omega_p -> Omega_{p+1}``, 0 <= i <= p."""
    out: dict = {}
    for key, c in x.items():
        for k, v in _degeneracy_key(p, i, key):
            add_into(out, k, c * v)
    return out


def simplex_integral(p: int, x: dict) -> Fraction:
    """Integral over the standard p-simplex of the top-degree part of x."""
    total = Fraction(0)
    for (a, al), c in x.items():
        if sum(al) == p:
            num = 1
            for e in a:
                num *= factorial(e)
            total += c * Fraction(num, factorial(sum(a) + p))
    return total


def barycentric(p: int, j: int) -> dict:
    """The function t_j on the p-simplex (j = 0 is 1 - sum t_i)."""
    zero = (0,) * p
    if j == 0:
        out = {(zero, zero): Fraction(1)}
        for s in range(p):
            out[(tuple(1 if t == s else 0 for t in range(p)), zero)] = Fraction(-1)
        return out
    return {(tuple(1 if t == j - 1 else 0 for t in range(p)), zero): Fraction(1)}


def whitney_form(p: int, vertices: Sequence[int]) -> dict:
    """``k! sum_r (-1)^r t_{i_r} dt_{i_0}..(omit r)..dt_{i_k}`` for vertices i_0 < .. < i_k."""
    k = len(vertices) - 1
    out: dict = {}
    for r, v in enumerate(vertices):
        term = barycentric(p, v)
        for w in vertices[:r] + vertices[r + 1:]:
            term = wedge(term, form_d(barycentric(p, w)))
        for key, c in term.items():
            add_into(out, key, (-1 if r & 1 else 1) * factorial(k) * c)
    return out


@dataclass
class FormAlgebra:
    """``Omega_p`` truncated at total degree D, with its structure as matrices."""

    p: int
    D: int

    def __post_init__(self):
        self.keys = form_keys(self.p, self.D)
        self.index = {k: i for i, k in enumerate(self.keys)}

    @property
    def dim(self) -> int:
        return len(self.keys)

    def dims_by_form_degree(self) -> dict:
        out: dict = {}
        for _, al in self.keys:
            out[sum(al)] = out.get(sum(al), 0) + 1
        return out

    def vector(self, x: dict) -> dict:
        return {self.index[k]: c for k, c in x.items()}

    def element(self, v: dict) -> dict:
        return {self.keys[i]: Fraction(c) for i, c in v.items() if c}

    def _matrix(self, fn, target: "FormAlgebra") -> SparseMatrix:
        cols = [target.vector(fn({k: Fraction(1)})) for k in self.keys]
        return SparseMatrix.from_columns(target.dim, cols)

    def d_matrix(self) -> SparseMatrix:
        return self._matrix(form_d, self)

    def face_matrix(self, i: int) -> SparseMatrix:
        return self._matrix(lambda x: face(self.p, i, x), FormAlgebra(self.p - 1, self.D))

    def degeneracy_matrix(self, i: int) -> SparseMatrix:
        return self._matrix(lambda x: degeneracy(self.p, i, x), FormAlgebra(self.p + 1, self.D))

    def wedge(self, x: dict, y: dict) -> dict:
        out = wedge(x, y)
        if any(key_total(k) > self.D for k in out):
            raise DegreeCapExceeded(f"product leaves total degree {self.D}")
        return out


def form_algebra(p: int, D: int) -> FormAlgebra:
    if p < 0 or D < 0:
        raise ValueError("p and D must be non-negative")
    return FormAlgebra(p, D)


def check_form_identities(p: int, D: int) -> AxiomReport:
    """Simplicial identities for faces and degeneracies out of level p, plus d^2 = 0
    and commutation of d with the structure maps."""
    fails = []
    A = {q: FormAlgebra(q, D) for q in range(max(p - 2, 0), p + 3)}

    def dm(q, i):
        return A[q].face_matrix(i)

    def sm(q, i):
        return A[q].degeneracy_matrix(i)

    def expect(name, lhs, rhs, wit):
        if not (lhs == rhs) and not any(f[0] == name for f in fails):
            fails.append((name, wit, None))

    if p >= 2:
        for i in range(p + 1):
            for j in range(i + 1, p + 1):
                expect("face-face", dm(p - 1, i) @ dm(p, j), dm(p - 1, j - 1) @ dm(p, i), (i, j))
    for j in range(p + 1):
        for i in range(p + 2):
            lhs = dm(p + 1, i) @ sm(p, j)
            if i < j:
                rhs = sm(p - 1, j - 1) @ dm(p, i)
            elif i in (j, j + 1):
                rhs = SparseMatrix.identity(A[p].dim)
            else:
                rhs = sm(p - 1, j) @ dm(p, i - 1)
            expect("face-degeneracy", lhs, rhs, (i, j))
        for i in range(j + 1):
            expect("degeneracy-degeneracy", sm(p + 1, i) @ sm(p, j), sm(p + 1, j + 1) @ sm(p, i), (i, j))
    dd = A[p].d_matrix()
    if not (dd @ dd).is_zero():
        fails.append(("d^2", (p,), None))
    for i in range(p + 1):
        if p >= 1:
            expect("d commutes with faces", dm(p, i) @ dd, A[p - 1].d_matrix() @ dm(p, i), (i,))
        expect("d commutes with degeneracies", sm(p, i) @ dd, A[p + 1].d_matrix() @ sm(p, i), (i,))
    return AxiomReport(not fails, fails)


# ----------------------------------------------------------------------------
# cosimplicial modules


def _cols(m: SparseMatrix) -> dict:
    out: dict = {}
    for i, row in m.data.items():
        for j, v in row.items():
            out.setdefault(j, {})[i] = v
    return out


@dataclass
class CosimplicialModule:
    """Levels ``Y^0..Y^top`` with structure maps as sparse matrices.

    ``cofaces[p][i] : Y^p -> Y^{p+1}`` (0 <= i <= p+1) and
    ``codegeneracies[p][i] : Y^{p+1} -> Y^p`` (0 <= i <= p).  Each level may
    carry an internal grading, an internal differential of degree +1 and a
    levelwise bracket ``{(j, k): {l: c}}``.
    """

    degrees: list
    cofaces: list
    codegeneracies: list
    diff: list | None = None
    brackets: list | None = None
    labels: list | None = None

    def __post_init__(self):
        top = len(self.degrees) - 1
        if len(self.cofaces) != top or len(self.codegeneracies) != top:
            raise ValueError("structure maps must be given for levels 0..top-1")
        for p in range(top):
            if len(self.cofaces[p]) != p + 2 or len(self.codegeneracies[p]) != p + 1:
                raise ValueError(f"wrong number of structure maps at level {p}")
            for m in self.cofaces[p]:
                if m.shape != (self.dim(p + 1), self.dim(p)):
                    raise ValueError(f"coface at level {p} has shape {m.shape}")
            for m in self.codegeneracies[p]:
                if m.shape != (self.dim(p), self.dim(p + 1)):
                    raise ValueError(f"codegeneracy at level {p} has shape {m.shape}")
        self._col_cache: dict = {}

    @property
    def top(self) -> int:
        return len(self.degrees) - 1

    def dim(self, p: int) -> int:
        return len(self.degrees[p])

    def internal_degrees(self) -> list:
        return sorted({q for lv in self.degrees for q in lv})

    def coface(self, p: int, i: int) -> SparseMatrix:
        return self.cofaces[p][i]

    def codegeneracy(self, p: int, i: int) -> SparseMatrix:
        """``sigma^i : Y^{p+1} -> Y^p``."""
        return self.codegeneracies[p][i]

    def internal_d(self, p: int) -> SparseMatrix:
        if self.diff is None:
            return SparseMatrix.zeros(self.dim(p), self.dim(p))
        return self.diff[p]

    def has_bracket(self) -> bool:
        return self.brackets is not None and any(self.brackets)

    def columns(self, kind: str, p: int, i: int = 0) -> dict:
        """Column dictionaries of a structure map, cached."""
        key = (kind, p, i)
        if key not in self._col_cache:
            m = {"face": self.coface, "degen": self.codegeneracy}.get(kind)
            mat = m(p, i) if m else self.internal_d(p)
            self._col_cache[key] = _cols(mat)
        return self._col_cache[key]

    def bracket(self, p: int, x: dict, y: dict) -> dict:
        out: dict = {}
        if not self.brackets:
            return out
        table = self.brackets[p]
        for j, a in x.items():
            for k, b in y.items():
                for l, v in table.get((j, k), {}).items():
                    add_into(out, l, a * b * v)
        return out

    def apply_injection(self, level: int, omitted: Sequence[int], y: dict) -> dict:
        """Image of y in Y^level under the monotone injection missing ``omitted``."""
        m = level - len(omitted)
        y = dict(y)
        for j in sorted(omitted):
            y = self.coface(m, j).apply(y)
            m += 1
        return y

    def apply_collapse(self, level: int, indices: Sequence[int], y: dict) -> dict:
        """Apply ``sigma^{i}`` for i in ``indices`` in the given order, starting at ``level``."""
        m = level
        y = dict(y)
        for i in indices:
            y = self.codegeneracy(m - 1, i).apply(y)
            m -= 1
        return y

    def truncate(self, top: int) -> "CosimplicialModule":
        return CosimplicialModule(
            self.degrees[: top + 1],
            self.cofaces[:top],
            self.codegeneracies[:top],
            self.diff[: top + 1] if self.diff is not None else None,
            self.brackets[: top + 1] if self.brackets is not None else None,
            self.labels[: top + 1] if self.labels is not None else None,
        )


def check_cosimplicial(Y: CosimplicialModule) -> AxiomReport:
    """Cosimplicial identities, internal differential and bracket compatibility."""
    fails = []

    def record(name, wit):
        if not any(f[0] == name for f in fails):
            fails.append((name, wit, None))

    dlt, sig = Y.coface, Y.codegeneracy
    for p in range(Y.top - 1):
        for i in range(p + 2):
            for j in range(i + 1, p + 3):
                if not (dlt(p + 1, j) @ dlt(p, i) == dlt(p + 1, i) @ dlt(p, j - 1)):
                    record("coface-coface", (p, i, j))
    for p in range(Y.top - 1):
        for i in range(p + 1):
            for j in range(i, p + 1):
                if not (sig(p, j) @ sig(p + 1, i) == sig(p, i) @ sig(p + 1, j + 1)):
                    record("codegeneracy-codegeneracy", (p, i, j))
    for p in range(1, Y.top):
        # sigma^j delta^i : Y^p -> Y^p
        for j in range(p + 1):
            for i in range(p + 2):
                lhs = sig(p, j) @ dlt(p, i)
                if i < j:
                    rhs = dlt(p - 1, i) @ sig(p - 1, j - 1)
                elif i in (j, j + 1):
                    rhs = SparseMatrix.identity(Y.dim(p))
                else:
                    rhs = dlt(p - 1, i - 1) @ sig(p - 1, j)
                if not (lhs == rhs):
                    record("codegeneracy-coface", (p, i, j))
    if Y.top >= 1:
        for i in range(2):
            if not (sig(0, 0) @ dlt(0, i) == SparseMatrix.identity(Y.dim(0))):
                record("codegeneracy-coface", (0, i, 0))
    for p in range(Y.top + 1):
        deg = Y.degrees[p]
        dY = Y.internal_d(p)
        if not (dY @ dY).is_zero():
            record("internal d^2", (p,))
        for i, j, _ in dY.entries():
            if deg[i] != deg[j] + 1:
                record("internal d degree", (p, j))
        if p < Y.top:
            for m in Y.cofaces[p]:
                for i, j, _ in m.entries():
                    if Y.degrees[p + 1][i] != deg[j]:
                        record("coface degree", (p, j))
                if not (m @ dY == Y.internal_d(p + 1) @ m):
                    record("coface commutes with d", (p,))
            for m in Y.codegeneracies[p]:
                for i, j, _ in m.entries():
                    if deg[i] != Y.degrees[p + 1][j]:
                        record("codegeneracy degree", (p, j))
                if not (m @ Y.internal_d(p + 1) == dY @ m):
                    record("codegeneracy commutes with d", (p,))
    if Y.has_bracket():
        for p in range(Y.top):
            n = Y.dim(p)
            for j in range(n):
                for k in range(n):
                    br = Y.bracket(p, {j: 1}, {k: 1})
                    for m in Y.cofaces[p]:
                        if m.apply(br) != Y.bracket(p + 1, m.apply({j: 1}), m.apply({k: 1})):
                            record("coface bracket", (p, j, k))
            del maps
            n1 = Y.dim(p + 1)
            for j in range(n1):
                for k in range(n1):
                    br = Y.bracket(p + 1, {j: 1}, {k: 1})
                    for m in Y.codegeneracies[p]:
                        if m.apply(br) != Y.bracket(p, m.apply({j: 1}), m.apply({k: 1})):
                            record("codegeneracy bracket", (p, j, k))
    return AxiomReport(not fails, fails)


def constant_module(degrees: Sequence[int], top: int, diff: SparseMatrix | None = None,
                    bracket: dict | None = None) -> CosimplicialModule:
    """The constant cosimplicial object on a graded space (identity structure maps)."""
    n = len(degrees)
    I = SparseMatrix.identity(n)
    return CosimplicialModule(
        [list(degrees) for _ in range(top + 1)],
        [[I] * (p + 2) for p in range(top)],
        [[I] * (p + 1) for p in range(top)],
        [diff] * (top + 1) if diff is not None else None,
        [dict(bracket)] * (top + 1) if bracket else None,
    )


def change_basis(Y: CosimplicialModule, g: Sequence[SparseMatrix]) -> CosimplicialModule:
    """Conjugate every structure map by the level automorphisms ``g[p]``.

    Each ``g[p]`` must preserve the internal degree.  The result is isomorphic
    to Y; brackets are transported as well.
    """
    gi = [inverse(m) for m in g]
    cof = [[g[p + 1] @ m @ gi[p] for m in Y.cofaces[p]] for p in range(Y.top)]
    cod = [[g[p] @ m @ gi[p + 1] for m in Y.codegeneracies[p]] for p in range(Y.top)]
    diff = [g[p] @ Y.internal_d(p) @ gi[p] for p in range(Y.top + 1)] if Y.diff is not None else None
    brs = None
    if Y.brackets is not None:
        brs = []
        for p in range(Y.top + 1):
            n = Y.dim(p)
            cols = [gi[p].apply({j: 1}) for j in range(n)]
            tab = {}
            for j in range(n):
                for k in range(n):
                    v = g[p].apply(Y.bracket(p, cols[j], cols[k]))
                    if v:
                        tab[(j, k)] = v
            brs.append(tab)
    return CosimplicialModule([list(d) for d in Y.degrees], cof, cod, diff, brs)


def direct_sum(Y: CosimplicialModule, Z: CosimplicialModule) -> CosimplicialModule:
    top = min(Y.top, Z.top)

    def blk(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
        data = {i: dict(r) for i, r in a.data.items()}
        for i, r in b.data.items():
            data[a.rows + i] = {a.cols + j: v for j, v in r.items()}
        return SparseMatrix(a.rows + b.rows, a.cols + b.cols, data)

    degs = [Y.degrees[p] + Z.degrees[p] for p in range(top + 1)]
    cof = [[blk(Y.coface(p, i), Z.coface(p, i)) for i in range(p + 2)] for p in range(top)]
    cod = [[blk(Y.codegeneracy(p, i), Z.codegeneracy(p, i)) for i in range(p + 1)] for p in range(top)]
    diff = None
    if Y.diff is not None or Z.diff is not None:
        diff = [blk(Y.internal_d(p), Z.internal_d(p)) for p in range(top + 1)]
    brs = None
    if Y.has_bracket() or Z.has_bracket():
        brs = []
        for p in range(top + 1):
            tab = dict((Y.brackets or [{}] * (top + 1))[p])
            n = Y.dim(p)
            for (j, k), v in (Z.brackets or [{}] * (top + 1))[p].items():
                tab[(n + j, n + k)] = {n + l: c for l, c in v.items()}
            brs.append(tab)
    return CosimplicialModule(degs, cof, cod, diff, brs)


def tensor_with_algebra(Y: CosimplicialModule, mult: dict, k: int) -> tuple[CosimplicialModule, list]:
    """``Y (x) A`` for a k-dimensional commutative algebra A, as a module over Q.

    Level p has basis ``(j, r)`` flattened as ``r * dim Y^p + j``.  Returns the
    module and, per level, the matrices of multiplication by each basis
    element of A (``mult[(r, s)] = {t: c}`` is the structure table of A).
    """
    def tens(m: SparseMatrix) -> SparseMatrix:
        data = {}
        for r in range(k):
            for i, row in m.data.items():
                data[r * m.rows + i] = {r * m.cols + j: v for j, v in row.items()}
        return SparseMatrix(m.rows * k, m.cols * k, data)

    degs = [lv * k for lv in Y.degrees]
    cof = [[tens(m) for m in Y.cofaces[p]] for p in range(Y.top)]
    cod = [[tens(m) for m in Y.codegeneracies[p]] for p in range(Y.top)]
    diff = [tens(Y.internal_d(p)) for p in range(Y.top + 1)] if Y.diff is not None else None
    actions = []
    for p in range(Y.top + 1):
        n = Y.dim(p)
        acts = []
        for r in range(k):
            entries = []
            for s in range(k):
                for t, c in mult.get((r, s), {}).items():
                    entries.extend((t * n + j, s * n + j, c) for j in range(n))
            acts.append(SparseMatrix.from_entries(n * k, n * k, entries))
        actions.append(acts)
    return CosimplicialModule(degs, cof, cod, diff), actions


def submodule_closure(Y: CosimplicialModule, generators: dict) -> list:
    """Bases (per level) of the smallest sub-object containing the generators.

    Closure under cofaces, codegeneracies and the internal differential is
    exact inside the stored levels: every simplicial operator factors as
    collapses followed by injections, so no level above ``top`` is needed.
    """
    spaces = [Echelon(Y.dim(p)) for p in range(Y.top + 1)]
    queue = []
    for p, vs in generators.items():
        for v in vs:
            if spaces[p].add(dict(v)):
                queue.append((p, dict(v)))
    while queue:
        p, v = queue.pop()
        images = []
        if p < Y.top:
            images += [(p + 1, m.apply(v)) for m in Y.cofaces[p]]
        if p > 0:
            images += [(p - 1, m.apply(v)) for m in Y.codegeneracies[p - 1]]
        images.append((p, Y.internal_d(p).apply(v)))
        for q, w in images:
            if w and spaces[q].add(w):
                queue.append((q, w))
    return [[{j: Fraction(x) for j, x in r.items()} for r in e.rref_rows()] for e in spaces]


def _homogeneous_split(Y: CosimplicialModule, p: int, vectors: list) -> list:
    """Re-span a graded subspace by internally homogeneous vectors."""
    by: dict = {}
    for v in vectors:
        for j, c in v.items():
            by.setdefault(Y.degrees[p][j], {}).setdefault(id(v), {})[j] = c
    out = []
    for q in sorted(by):
        e = Echelon(Y.dim(p))
        for w in by[q].values():
            e.add(w)
        out.extend(e.rref_rows())
    return out


def sub_and_quotient(Y: CosimplicialModule, basis: list):
    """Sub-object spanned by ``basis`` (per level, closed) and the quotient.

    Returns ``(S, Q, inclusion, projection)`` with the maps as lists of level
    matrices.
    """
    sub_deg, quo_deg, inc, proj = [], [], [], []
    for p in range(Y.top + 1):
        vecs = _homogeneous_split(Y, p, basis[p])
        n = Y.dim(p)
        e = Echelon(n)
        for v in vecs:
            e.add(v)
        rref = e.rref_rows()
        piv = sorted(e.pivots)
        rest = [j for j in range(n) if j not in e.pivots]
        inc.append(SparseMatrix.from_columns(n, vecs))
        sub_deg.append([Y.degrees[p][min(v, key=lambda j: j)] for v in vecs])
        quo_deg.append([Y.degrees[p][j] for j in rest])
        pos = {j: k for k, j in enumerate(rest)}
        # v -> non-pivot coordinates of v - sum v_c * (rref row at c)
        entries = []
        for j in range(n):
            if j in pos:
                entries.append((pos[j], j, Fraction(1)))
            else:
                row = rref[piv.index(j)]
                for c, x in row.items():
                    if c in pos:
                        entries.append((pos[c], j, -x))
        proj.append(SparseMatrix.from_entries(len(rest), n, entries))
    coords = [ColumnSpace([inc[p].column(k) for k in range(inc[p].cols)]) for p in range(Y.top + 1)]

    def restrict(m: SparseMatrix, p_from: int, p_to: int) -> SparseMatrix:
        cols = []
        for k in range(inc[p_from].cols):
            c = coords[p_to].coordinates(m.apply(inc[p_from].column(k)))
            if c is None:
                raise ValueError("basis does not span a sub-object")
            cols.append(c)
        return SparseMatrix.from_columns(inc[p_to].cols, cols)

    def descend(m: SparseMatrix, p_from: int, p_to: int) -> SparseMatrix:
        rest_from = [j for j in range(Y.dim(p_from)) if j not in _pivots(inc[p_from])]
        cols = [proj[p_to].apply(m.apply({j: Fraction(1)})) for j in rest_from]
        return SparseMatrix.from_columns(proj[p_to].rows, cols)

    top = Y.top
    S = CosimplicialModule(
        sub_deg,
        [[restrict(Y.coface(p, i), p, p + 1) for i in range(p + 2)] for p in range(top)],
        [[restrict(Y.codegeneracy(p, i), p + 1, p) for i in range(p + 1)] for p in range(top)],
        [restrict(Y.internal_d(p), p, p) for p in range(top + 1)] if Y.diff is not None else None,
    )
    Q = CosimplicialModule(
        quo_deg,
        [[descend(Y.coface(p, i), p, p + 1) for i in range(p + 2)] for p in range(top)],
        [[descend(Y.codegeneracy(p, i), p + 1, p) for i in range(p + 1)] for p in range(top)],
        [descend(Y.internal_d(p), p, p) for p in range(top + 1)] if Y.diff is not None else None,
    )
    return S, Q, inc, proj


def _pivots(m: SparseMatrix) -> set:
    e = Echelon(m.rows)
    for v in m.columns():
        e.add(v)
    return set(e.pivots)


# ----------------------------------------------------------------------------
# cosimplicial maps


@dataclass
class CosimplicialMap:
    source: CosimplicialModule
    target: CosimplicialModule
    levels: list  # SparseMatrix per level

    def check(self) -> AxiomReport:
        fails = []
        X, Y, f = self.source, self.target, self.levels
        top = min(X.top, Y.top, len(f) - 1)
        for p in range(top):
            for i in range(p + 2):
                if not (f[p + 1] @ X.coface(p, i) == Y.coface(p, i) @ f[p]):
                    fails.append(("commutes with cofaces", (p, i), None))
                    break
            for i in range(p + 1):
                if not (f[p] @ X.codegeneracy(p, i) == Y.codegeneracy(p, i) @ f[p + 1]):
                    fails.append(("commutes with codegeneracies", (p, i), None))
                    break
        for p in range(top + 1):
            if not (f[p] @ X.internal_d(p) == Y.internal_d(p) @ f[p]):
                fails.append(("commutes with d", (p,), None))
        return AxiomReport(not fails, fails)

    def compose(self, first: "CosimplicialMap") -> "CosimplicialMap":
        n = min(len(self.levels), len(first.levels))
        return CosimplicialMap(first.source, self.target, [self.levels[p] @ first.levels[p] for p in range(n)])


# ----------------------------------------------------------------------------
# normalization and the Dold-Puppe decomposition


def _restrict_columns(m: SparseMatrix, cols: list) -> SparseMatrix:
    pos = {c: k for k, c in enumerate(cols)}
    data = {}
    for i, row in m.data.items():
        r = {pos[j]: v for j, v in row.items() if j in pos}
        if r:
            data[i] = r
    return SparseMatrix(m.rows, len(cols), data)


def normalized_level(Y: CosimplicialModule, p: int, q: int | None = None) -> list:
    """Basis of ``N^p = intersection of ker sigma^i`` (internal degree q if given)."""
    cols = [j for j in range(Y.dim(p)) if q is None or Y.degrees[p][j] == q]
    if p == 0:
        return [{j: Fraction(1)} for j in cols]
    stacked = vstack([_restrict_columns(Y.codegeneracy(p - 1, i), cols) for i in range(p)], len(cols))
    return [{cols[j]: c for j, c in v.items()} for v in kernel(stacked)]


@dataclass
class Normalized:
    """The normalized complex N(Y) as a ComplexQ graded by total degree p + q.

    ``slots[t]`` lists ``(p, q, vector in Y^p)`` for the basis in total degree t.
    Levels up to ``top - 1`` are used (the differential needs the next level);
    ``complete`` records that ``N^top`` vanishes, so that nothing is cut off.
    """

    Y: CosimplicialModule
    complex: ComplexQ
    slots: dict
    level_basis: dict
    complete: bool

    def dims_by_level(self) -> dict:
        out: dict = {}
        for (p, q), b in self.level_basis.items():
            out[p] = out.get(p, 0) + len(b)
        return out

    def bound(self) -> int:
        """Largest level with nonzero normalized part (-1 if none)."""
        lv = [p for p, n in self.dims_by_level().items() if n]
        return max(lv) if lv else -1

    def coordinates(self, p: int, y: dict) -> dict:
        """Total-degree coordinates of a homogeneous element of ``N^p``."""
        if not y:
            return {}
        q = self.Y.degrees[p][next(iter(y))]
        t = p + q
        basis = self.level_basis.get((p, q), [])
        off = next(k for k, s in enumerate(self.slots[t]) if s[0] == p and s[1] == q)
        c = ColumnSpace(basis).coordinates(y)
        if c is None:
            raise ValueError("element is not normalized")
        return {off + k: v for k, v in c.items()}

    def vector(self, t: int, k: int) -> tuple[int, dict]:
        p, q, v = self.slots[t][k]
        return p, v

    def cohomology_dims(self) -> dict:
        return {t: n for t, n in self.complex.cohomology_dims().items() if n}


def normalize(Y: CosimplicialModule) -> Normalized:
    top = Y.top
    basis: dict = {}
    for p in range(top + 1):
        for q in sorted(set(Y.degrees[p])):
            b = normalized_level(Y, p, q)
            if b:
                basis[(p, q)] = b
    complete = not any(p == top for p, _ in basis)
    slots: dict = {}
    for (p, q), b in sorted(basis.items()):
        if p < top:
            slots.setdefault(p + q, []).extend((p, q, v) for v in b)
    spaces = {t: ColumnSpace([v for _, _, v in s]) for t, s in slots.items()}
    # per (p, q) offsets within total degree
    dims = {t: len(s) for t, s in slots.items()}
    space = GradedSpace(dims)
    blocks = {}
    for t, s in slots.items():
        cols = []
        for p, q, v in s:
            img: dict = {}
            if p + 1 < top:
                for i in range(p + 2):
                    for j, c in Y.coface(p, i).apply(v).items():
                        add_into(img, (p + 1, j), (-1 if i & 1 else 1) * c)
            for j, c in Y.internal_d(p).apply(v).items():
                add_into(img, (p, j), (-1 if p & 1 else 1) * c)
            cols.append(_split_levels(img, slots.get(t + 1, []), spaces.get(t + 1)))
        m = SparseMatrix.from_columns(dims.get(t + 1, 0), cols)
        if not m.is_zero():
            blocks[t] = m
    cx = ComplexQ(space, GradedMap(space, space, 1, blocks))
    return Normalized(Y, cx, slots, basis, complete)


def _split_levels(img: dict, slots: list, space) -> dict:
    """Express ``{(p, j): c}`` in a total-degree basis given by ``slots``."""
    if not img:
        return {}
    # flatten (p, j) into a single index space: offset levels by a large stride
    stride = 1 << 20
    flat = {p * stride + j: c for (p, j), c in img.items()}
    vecs = [{p * stride + j: c for j, c in v.items()} for p, _, v in slots]
    c = ColumnSpace(vecs).coordinates(flat)
    if c is None:
        raise ValueError("image leaves the normalized complex")
    return c


def _lambda_maps(m: int, n: int) -> list:
    """Injections [m] -> [n] built from non-final faces, as omitted index sets.

    Sorted by the lexicographic order of the descending face word, largest first.
    """
    sets = [tuple(J) for J in combinations(range(n), n - m)]
    return sorted(sets, key=lambda J: tuple(sorted(J, reverse=True)), reverse=True)


@dataclass
class DoldPuppe:
    """``Y^n = sum_m sum_{f in Lambda_mn} f(N^m)`` with its triangular inversion."""

    Y: CosimplicialModule
    n: int

    def __post_init__(self):
        self.normalized = {m: normalized_level(self.Y, m) for m in range(self.n + 1)}
        self.maps = {m: _lambda_maps(m, self.n) for m in range(self.n + 1)}

    def count(self, m: int) -> int:
        return len(self.maps[m])

    def dimension_identity(self) -> tuple[int, int]:
        return self.Y.dim(self.n), sum(self.count(m) * len(self.normalized[m]) for m in range(self.n + 1))

    def push(self, m: int, J: tuple, z: dict) -> dict:
        return self.Y.apply_injection(self.n, J, z)

    def left_inverse(self, m: int, J: tuple, x: dict) -> dict:
        return self.Y.apply_collapse(self.n, sorted(J, reverse=True), x)

    def decompose(self, x: dict) -> dict:
        """Components ``{(m, J): z}`` with z in ``N^m`` (as vectors of ``Y^m``)."""
        rest = dict(x)
        parts: dict = {}
        for m in range(self.n + 1):
            found = []
            for J in self.maps[m]:
                z = self.left_inverse(m, J, rest)
                for K, w in found:
                    for j, c in self.left_inverse(m, J, self.push(m, K, w)).items():
                        add_into(z, j, -c)
                for i in range(m):
                    if self.Y.codegeneracy(m - 1, i).apply(z):
                        raise ArithmeticError("component is not normalized")
                if z:
                    found.append((J, z))
                    parts[(m, J)] = z
            for J, z in found:
                for j, c in self.push(m, J, z).items():
                    add_into(rest, j, -c)
        if rest:
            raise ArithmeticError("decomposition left a remainder")
        return parts

    def assemble(self, parts: dict) -> dict:
        out: dict = {}
        for (m, J), z in parts.items():
            for j, c in self.push(m, J, z).items():
                add_into(out, j, c)
        return out


def dold_puppe(Y: CosimplicialModule, n: int) -> DoldPuppe:
    if n > Y.top:
        raise ValueError("level beyond the stored range")
    return DoldPuppe(Y, n)


# ----------------------------------------------------------------------------
# solving for prescribed codegeneracies


def solve_degeneracies(Y: CosimplicialModule, n: int, I: Sequence[int], targets: dict) -> dict:
    """Find ``x in Y^n`` with ``sigma^i x = y^i`` for i in I (a subset of [0, n-1])."""
    I = sorted(I)
    for a, i in enumerate(I):
        for j in I[a + 1:]:
            if n >= 2:
                lhs = Y.codegeneracy(n - 2, j - 1).apply(targets[i])
                rhs = Y.codegeneracy(n - 2, i).apply(targets[j])
                if lhs != rhs:
                    raise Incompatible(f"sigma^{j - 1} y^{i} != sigma^{i} y^{j}", (i, j))
    if not I:
        return {}
    normalized = n >= 2 and all(
        not Y.codegeneracy(n - 2, k).apply(targets[i]) for i in I for k in range(n - 1)
    )
    if I == list(range(n)) and (normalized or n == 1):
        # x = sum_j delta^j z^j with z^0 = 0 and z^{i+1} = y^i - z^i
        z = [dict()]
        for i in range(n):
            nxt = dict(targets[i])
            for j, c in z[-1].items():
                add_into(nxt, j, -c)
            z.append(nxt)
        x: dict = {}
        for j, zj in enumerate(z):
            for k, c in Y.coface(n - 1, j).apply(zj).items():
                add_into(x, k, c)
    else:
        m = vstack([Y.codegeneracy(n - 1, i) for i in I], Y.dim(n))
        rhs: dict = {}
        off = 0
        for i in I:
            for j, c in targets[i].items():
                rhs[off + j] = c
            off += Y.dim(n - 1)
        x = solve(m, rhs)
        if x is None:
            raise NoSolution(f"no x in Y^{n} with the prescribed codegeneracies")
    for i in I:
        if Y.codegeneracy(n - 1, i).apply(x) != {j: Fraction(c) for j, c in targets[i].items() if c}:
            raise NoSolution(f"residual at sigma^{i}")
    return x


# ----------------------------------------------------------------------------
# path objects and strict homotopies


def _zeros_after(alpha, k: int, n: int) -> int:
    """Number of u in [n] with alpha(u) < k."""
    return sum(1 for u in range(n + 1) if alpha(u) < k)


def path_object(Y: CosimplicialModule) -> CosimplicialModule:
    """``Y^I``: level n is a product of copies of ``Y^n`` over maps [n] -> [1].

    The copy index k is the number of zeros of the map; block k occupies
    positions ``k * dim Y^n ...``.
    """
    top = Y.top

    def lift(mat: SparseMatrix, alpha, n_src: int, n_tgt: int) -> SparseMatrix:
        ds, dt = Y.dim(n_src), Y.dim(n_tgt)
        entries = []
        for k in range(n_tgt + 2):
            ks = _zeros_after(alpha, k, n_src)
            for i, row in mat.data.items():
                for j, v in row.items():
                    entries.append((k * dt + i, ks * ds + j, v))
        return SparseMatrix.from_entries(dt * (n_tgt + 2), ds * (n_src + 2), entries)

    def blockdiag(mat: SparseMatrix, n: int) -> SparseMatrix:
        d = Y.dim(n)
        entries = [(k * d + i, k * d + j, v) for k in range(n + 2) for i, row in mat.data.items() for j, v in row.items()]
        return SparseMatrix.from_entries(d * (n + 2), d * (n + 2), entries)

    cof = []
    cod = []
    for p in range(top):
        cof.append([lift(Y.coface(p, i), (lambda u, i=i: u if u < i else u + 1), p, p + 1) for i in range(p + 2)])
        cod.append([lift(Y.codegeneracy(p, i), (lambda u, i=i: u if u <= i else u - 1), p + 1, p) for i in range(p + 1)])
    degs = [Y.degrees[n] * (n + 2) for n in range(top + 1)]
    diff = [blockdiag(Y.internal_d(n), n) for n in range(top + 1)] if Y.diff is not None else None
    return CosimplicialModule(degs, cof, cod, diff)


def path_projection(Y: CosimplicialModule, which: int) -> list:
    """Level matrices of ``pr_0`` (constant map 0) or ``pr_1`` (constant map 1)."""
    out = []
    for n in range(Y.top + 1):
        d = Y.dim(n)
        k = n + 1 if which == 0 else 0
        out.append(SparseMatrix.from_entries(d, d * (n + 2), [(j, k * d + j, 1) for j in range(d)]))
    return out


def path_inclusion(Y: CosimplicialModule) -> list:
    out = []
    for n in range(Y.top + 1):
        d = Y.dim(n)
        out.append(SparseMatrix.from_entries(d * (n + 2), d, [(k * d + j, j, 1) for k in range(n + 2) for j in range(d)]))
    return out


@dataclass
class HomotopyReport:
    h: list  # h[n] : X^n -> Y^{n-1}
    passed: bool
    failures: list


def tot_differential(Y: CosimplicialModule, n: int) -> SparseMatrix:
    m = SparseMatrix.zeros(Y.dim(n + 1), Y.dim(n))
    for i in range(n + 2):
        m = m + Y.coface(n, i).scale(-1 if i & 1 else 1)
    return m


def path_homotopy(X: CosimplicialModule, Y: CosimplicialModule, f: list, g: list, F: list) -> HomotopyReport:
    """Chain homotopy on total complexes induced by a strict homotopy F : X -> Y^I.

    ``h(x) = sum_{i<n} (-1)^i sigma^i(y_{alpha_i})`` where ``F(x) = {y_s}``
    and ``alpha_i`` is the map [n] -> [1] with zeros exactly at t <= i.
    The report verifies ``d h + h d = Tot(g) - Tot(f)`` on every level whose
    neighbours are stored.
    """
    YI = path_object(Y)
    Fm = CosimplicialMap(X, YI, F)
    rep = Fm.check()
    if not rep.passed:
        raise NotAHomotopy(f"F is not a cosimplicial map: {rep.failures[0][0]}")
    pr0, pr1 = path_projection(Y, 0), path_projection(Y, 1)
    top = min(X.top, Y.top, len(F) - 1)
    for n in range(top + 1):
        if not (pr0[n] @ F[n] == f[n]):
            raise NotAHomotopy(f"pr_0 F differs from f at level {n}")
        if not (pr1[n] @ F[n] == g[n]):
            raise NotAHomotopy(f"pr_1 F differs from g at level {n}")
    h = [SparseMatrix.zeros(0, X.dim(0))]
    for n in range(1, top + 1):
        d = Y.dim(n)
        m = SparseMatrix.zeros(Y.dim(n - 1), X.dim(n))
        for i in range(n):
            k = i + 1
            pick = SparseMatrix.from_entries(d, d * (n + 2), [(j, k * d + j, 1) for j in range(d)])
            m = m + (Y.codegeneracy(n - 1, i) @ pick @ F[n]).scale(-1 if i & 1 else 1)
        h.append(m)
    fails = []
    for n in range(top):
        lhs = h[n + 1] @ tot_differential(X, n)
        if n >= 1:
            lhs = lhs + tot_differential(Y, n - 1) @ h[n]
        if not (lhs == g[n] - f[n]):
            fails.append(("homotopy identity", (n,), None))
    return HomotopyReport(h, not fails, fails)


# ----------------------------------------------------------------------------
# the Thom-Sullivan complex


def _insert_zero(key, i: int):
    """eta_i: insert an empty slot at position i (1-based)."""
    a, al = key
    return (a[: i - 1] + (0,) + a[i - 1:], al[: i - 1] + (0,) + al[i - 1:])


def _remove_slot(key, i: int):
    a, al = key
    return (a[: i - 1] + a[i:], al[: i - 1] + al[i:])


def _first_empty(key) -> int:
    for s, (a, al) in enumerate(zip(*key), start=1):
        if not a and not al:
            return s
    return 0


def _lin_add(acc: dict, lin: dict, c) -> None:
    for v, x in lin.items():
        add_into(acc, v, c * x)


class _Block:
    """Solutions of form degree n and internal degree q."""

    def __init__(self, Y: CosimplicialModule, D: int, P: int, n: int, q: int):
        self.Y, self.D, self.P, self.n, self.q = Y, D, P, n, q
        self.ydeg = [[j for j, e in enumerate(Y.degrees[p]) if e == q] for p in range(P + 1)]
        self.vars: list = []
        self.var_index: dict = {}
        for p in range(min(D, P) + 1):
            for key in form_keys(p, D, n):
                if is_reduced(key):
                    for k in self.ydeg[p]:
                        self.var_index[(p, key, k)] = len(self.vars)
                        self.vars.append((p, key, k))
        self._expr: dict = {}
        self._solve()

    # coordinates as linear forms in the unknowns
    def expr(self, p: int, key) -> dict:
        """``x_{key}`` at level p as ``{k: {var: coeff}}``."""
        got = self._expr.get((p, key))
        if got is not None:
            return got
        if is_reduced(key):
            if key_total(key) > self.D or p > self.D:
                out = {}
            else:
                out = {k: {self.var_index[(p, key, k)]: Fraction(1)} for k in self.ydeg[p]}
        else:
            i = _first_empty(key)
            out = self.apply(self.Y.columns("face", p - 1, i), self.expr(p - 1, _remove_slot(key, i)))
        self._expr[(p, key)] = out
        return out

    @staticmethod
    def apply(cols: dict, e: dict) -> dict:
        out: dict = {}
        for k, lin in e.items():
            for r, m in cols.get(k, {}).items():
                acc = out.setdefault(r, {})
                _lin_add(acc, lin, m)
                if not acc:
                    del out[r]
        return out

    @staticmethod
    def sub_into(acc: dict, e: dict, c=1) -> None:
        for k, lin in e.items():
            a = acc.setdefault(k, {})
            _lin_add(a, lin, c)
            if not a:
                del acc[k]

    def equations(self):
        """Yield the vector equations (as ``{k: {var: c}}``) of the compatibility system."""
        Y, D, n = self.Y, self.D, self.n
        for p in range(self.P):
            keys = form_keys(p, D, n)
            keys1 = form_keys(p + 1, D, n)
            for key in keys:
                e = self.expr(p, key)
                for i in range(1, p + 2):
                    if _first_empty(_insert_zero(key, i)) == i:
                        continue
                    eq = self.apply(Y.columns("face", p, i), e)
                    self.sub_into(eq, self.expr(p + 1, _insert_zero(key, i)), -1)
                    yield eq
            # d_0: delta^0 x_key = coefficient of key in d_0 (x_{p+1})
            d0: dict = {}
            for key1 in keys1:
                for k, c in _face_key(p + 1, 0, key1):
                    d0.setdefault(k, []).append((key1, c))
            for key in keys:
                eq = self.apply(Y.columns("face", p, 0), self.expr(p, key))
                for key1, c in d0.get(key, ()):
                    self.sub_into(eq, self.expr(p + 1, key1), -c)
                yield eq
            # s_i: coefficient of key1 in s_i(x_p) = sigma^i x_{p+1, key1}
            for i in range(p + 1):
                si: dict = {}
                for key in keys:
                    for k, c in _degeneracy_key(p, i, key):
                        si.setdefault(k, []).append((key, c))
                cols = Y.columns("degen", p, i)
                for key1 in keys1:
                    eq = self.apply(cols, self.expr(p + 1, key1))
                    for key, c in si.get(key1, ()):
                        self.sub_into(eq, self.expr(p, key), -c)
                    yield eq

    def _solve(self):
        e = Echelon(len(self.vars))
        for eq in self.equations():
            for lin in eq.values():
                if lin:
                    e.add(lin)
        self.echelon = e
        self.basis = e.kernel()
        self.free = [j for j in range(len(self.vars)) if j not in e.pivots]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coords(self, u: dict) -> dict:
        c = {i: u[f] for i, f in enumerate(self.free) if u.get(f)}
        back: dict = {}
        for i, x in c.items():
            for j, v in self.basis[i].items():
                add_into(back, j, x * v)
        if back != {j: Fraction(v) for j, v in u.items() if v}:
            raise ValueError("vector violates the compatibility equations")
        return c

    def vector(self, c: dict) -> dict:
        out: dict = {}
        for i, x in c.items():
            for j, v in self.basis[i].items():
                add_into(out, j, x * v)
        return out

    def family(self, u: dict, levels: int | None = None) -> dict:
        """Full coordinates ``{p: {key: {k: c}}}`` of the unknown vector u."""
        out: dict = {}
        for p in range((self.P if levels is None else levels) + 1):
            lv: dict = {}
            for key in form_keys(p, self.D, self.n):
                vec: dict = {}
                for k, lin in self.expr(p, key).items():
                    s = sum((c * u.get(v, 0) for v, c in lin.items()), Fraction(0))
                    if s:
                        vec[k] = s
                if vec:
                    lv[key] = vec
            out[p] = lv
        return out

    def unknowns_of(self, family: dict) -> dict:
        u: dict = {}
        for j, (p, key, k) in enumerate(self.vars):
            c = family.get(p, {}).get(key, {}).get(k)
            if c:
                u[j] = Fraction(c)
        return u


def family_residual(Y: CosimplicialModule, family: dict, levels: int) -> list:
    """Violations of the face and degeneracy compatibilities of an explicit family.

    ``family[p] = {key: {j: c}}``; every key is a form on the p-simplex.
    Returns a list of ``(kind, p, i)`` for each failing equation.
    """
    bad = []
    for p in range(levels):
        xp, xq = family.get(p, {}), family.get(p + 1, {})
        for i in range(p + 2):
            lhs: dict = {}
            for key, vec in xp.items():
                for j, c in Y.coface(p, i).apply(vec).items():
                    add_into(lhs, (key, j), c)
            for key1, vec in xq.items():
                for key, c in _face_key(p + 1, i, key1):
                    for j, v in vec.items():
                        add_into(lhs, (key, j), -c * v)
            if lhs:
                bad.append(("face", p, i))
        for i in range(p + 1):
            lhs = {}
            for key, vec in xp.items():
                for key1, c in _degeneracy_key(p, i, key):
                    for j, v in vec.items():
                        add_into(lhs, (key1, j), c * v)
            for key1, vec in xq.items():
                for j, c in Y.codegeneracy(p, i).apply(vec).items():
                    add_into(lhs, (key1, j), -c)
            if lhs:
                bad.append(("degeneracy", p, i))
    return bad


class TSComplexModel:
    """``Omega_{<=D}(Y)`` with components stored through level P.

    Blocks are indexed by (form degree n, internal degree q) and assembled
    into a complex graded by n + q.  With ``check_stable`` the block
    dimensions are recomputed at level cap P + 1 and must agree.
    """

    def __init__(self, Y: CosimplicialModule, D: int, P: int | None = None, check_stable: bool = True):
        if P is None:
            P = D + 1
        need = P + 1 if check_stable else P
        if Y.top < need:
            raise ValueError(f"cosimplicial module stored to level {Y.top}, need {need}")
        self.Y, self.D, self.P = Y, D, P
        qs = Y.internal_degrees()
        self.blocks: dict = {}
        for n in range(D + 1):
            for q in qs:
                b = _Block(Y, D, P, n, q)
                if b.dim:
                    self.blocks[(n, q)] = b
        if check_stable:
            for n in range(D + 1):
                for q in qs:
                    d1 = _Block(Y, D, P + 1, n, q).dim
                    d0 = self.blocks[(n, q)].dim if (n, q) in self.blocks else 0
                    if d0 != d1:
                        raise NotStabilized(f"block (n={n}, q={q}) has dim {d0} at P={P} and {d1} at P={P + 1}")
        self._build_complex()

    @property
    def dims(self) -> dict:
        return {nq: b.dim for nq, b in self.blocks.items()}

    def _build_complex(self):
        self.slots: dict = {}  # t -> list of (n, q) in order
        self.offset: dict = {}
        for (n, q) in sorted(self.blocks):
            t = n + q
            lst = self.slots.setdefault(t, [])
            self.offset[(n, q)] = sum(self.blocks[b].dim for b in lst)
            lst.append((n, q))
        dims = {t: sum(self.blocks[b].dim for b in lst) for t, lst in self.slots.items()}
        self.space = GradedSpace(dims)
        blocks = {}
        for t, lst in self.slots.items():
            cols = []
            for nq in lst:
                for i in range(self.blocks[nq].dim):
                    cols.append(self.differential(nq, {i: Fraction(1)}))
            m = SparseMatrix.from_columns(dims.get(t + 1, 0), cols)
            if not m.is_zero():
                blocks[t] = m
        self.complex = ComplexQ(self.space, GradedMap(self.space, self.space, 1, blocks))

    def locate(self, nq, i: int) -> tuple[int, int]:
        return nq[0] + nq[1], self.offset[nq] + i

    def block_of(self, t: int, k: int) -> tuple[tuple, int]:
        for nq in self.slots[t]:
            off = self.offset[nq]
            if off <= k < off + self.blocks[nq].dim:
                return nq, k - off
        raise IndexError(k)

    def split(self, t: int, v: dict) -> dict:
        """Total-degree vector -> ``{(n, q): block coordinates}``."""
        out: dict = {}
        for k, c in v.items():
            nq, i = self.block_of(t, k)
            out.setdefault(nq, {})[i] = c
        return out

    def join(self, parts: dict) -> dict:
        out: dict = {}
        for nq, c in parts.items():
            for i, x in c.items():
                if x:
                    out[self.offset[nq] + i] = x
        return out

    def unknowns(self, nq, c: dict) -> dict:
        return self.blocks[nq].vector(c)

    def differential(self, nq, c: dict) -> dict:
        """Image (total-degree coordinates) of a block element."""
        n, q = nq
        u = self.blocks[nq].vector(c)
        b = self.blocks[nq]
        out_d: dict = {}
        out_y: dict = {}
        for j, x in u.items():
            p, (a, al), k = b.vars[j]
            before = 0
            for s, (e, f) in enumerate(zip(a, al)):
                if f:
                    before += 1
                    continue
                if e:
                    key = (a[:s] + (e - 1,) + a[s + 1:], al[:s] + (1,) + al[s + 1:])
                    add_into(out_d, (p, key, k), (-1 if before & 1 else 1) * e * x)
            for r, m in self.Y.columns("diff", p).get(k, {}).items():
                add_into(out_y, (p, (a, al), r), (-1 if n & 1 else 1) * m * x)
        parts = {}
        for target, vals in (((n + 1, q), out_d), ((n, q + 1), out_y)):
            if not vals:
                continue
            tb = self.blocks.get(target)
            if tb is None:
                raise ArithmeticError(f"differential leaves the model at block {target}")
            parts[target] = tb.coords({tb.var_index[v]: x for v, x in vals.items()})
        return self.join(parts)

    # element access ---------------------------------------------------
    def family(self, t: int, v: dict, levels: int | None = None) -> dict:
        """Explicit family ``{p: {key: {j: c}}}`` of a total-degree vector."""
        out: dict = {}
        for nq, c in self.split(t, v).items():
            fam = self.blocks[nq].family(self.blocks[nq].vector(c), levels)
            for p, lv in fam.items():
                tgt = out.setdefault(p, {})
                for key, vec in lv.items():
                    acc = tgt.setdefault(key, {})
                    for j, x in vec.items():
                        add_into(acc, j, x)
                    if not acc:
                        del tgt[key]
        return out

    def coordinates(self, family: dict, t: int) -> dict:
        """Total-degree coordinates of an explicit family of total degree t."""
        parts = {}
        for nq in self.slots.get(t, []):
            b = self.blocks[nq]
            u = b.unknowns_of(family)
            if u:
                parts[nq] = b.coords(u)
        # any reduced coordinate outside the model's blocks must vanish
        for p, lv in family.items():
            for key, vec in lv.items():
                if is_reduced(key) and p <= self.D:
                    for j in vec:
                        nq = (sum(key[1]), self.Y.degrees[p][j])
                        if nq[0] + nq[1] == t and nq not in self.blocks:
                            raise ValueError(f"family has a coordinate in the zero block {nq}")
        return self.join(parts)

    def integrate(self, t: int, v: dict) -> tuple[int, dict]:
        """Integral of the level-n component over the n-simplex, for each block.

        Returns ``(n, y)`` per block as a dict ``{n: Y^n vector}``.
        """
        out: dict = {}
        for (n, q), c in self.split(t, v).items():
            b = self.blocks[(n, q)]
            u = b.vector(c)
            acc = out.setdefault(n, {})
            for j, x in u.items():
                p, (a, al), k = b.vars[j]
                if p == n and all(al):
                    num = 1
                    for e in a:
                        num *= factorial(e)
                    add_into(acc, k, x * Fraction(num, factorial(sum(a) + n)))
        return {n: y for n, y in out.items() if y}

    def integration_matrix(self, N: Normalized) -> GradedMap:
        """The integration map as a degree-0 map into the normalized complex."""
        blocks = {}
        for t in self.space.degrees():
            cols = []
            for k in range(self.space.dim(t)):
                col: dict = {}
                for n, y in self.integrate(t, {k: Fraction(1)}).items():
                    for j, c in N.coordinates(n, y).items():
                        add_into(col, j, c)
                cols.append(col)
            m = SparseMatrix.from_columns(N.complex.space.dim(t), cols)
            if not m.is_zero():
                blocks[t] = m
        return GradedMap(self.space, N.complex.space, 0, blocks)

    def whitney_family(self, k: int, y: dict, levels: int | None = None) -> dict:
        """``W(y)_p = sum_f omega_f (x) f_*(y)`` over injections f : [k] -> [p]."""
        levels = self.P if levels is None else levels
        if k + 1 > self.D and k > 0:
            raise CapExceeded(f"Whitney forms of degree {k} need D >= {k + 1}")
        out: dict = {}
        for p in range(k, levels + 1):
            lv: dict = {}
            for verts in combinations(range(p + 1), k + 1):
                omitted = [j for j in range(p + 1) if j not in verts]
                img = self.Y.apply_injection(p, omitted, y)
                if not img:
                    continue
                for key, c in whitney_form(p, verts).items():
                    acc = lv.setdefault(key, {})
                    for j, x in img.items():
                        add_into(acc, j, c * x)
                    if not acc:
                        del lv[key]
            out[p] = lv
        return out

    def whitney(self, k: int, y: dict) -> tuple[int, dict]:
        """Total degree and coordinates of the Whitney lift of ``y in N^k``."""
        q = self.Y.degrees[k][next(iter(y))] if y else 0
        return k + q, self.coordinates(self.whitney_family(k, y, min(self.P, self.D)), k + q)

    # d-free coordinates ------------------------------------------------
    def dfree_coordinates(self, t: int, v: dict) -> dict:
        """The d-free coordinates (reduced, first slot not ``(1, 0)``) of an element."""
        fam = self.family(t, v, min(self.P, self.D))
        out = {}
        for p, lv in fam.items():
            for key, vec in lv.items():
                if is_reduced(key) and not (p >= 1 and key[0][0] == 1 and key[1][0] == 0):
                    for j, c in vec.items():
                        out[(p, key, j)] = c
        return out

    def reconstruct(self, t: int, coords: dict) -> dict:
        """Element of total degree t with the given d-free coordinates."""
        parts = {}
        for nq in self.slots.get(t, []):
            b = self.blocks[nq]
            rows = []
            rhs = {}
            dfree = [j for j, (p, key, k) in enumerate(b.vars)
                     if not (p >= 1 and key[0][0] == 1 and key[1][0] == 0)]
            for r, j in enumerate(dfree):
                rows.append({i: vec[j] for i, vec in enumerate(b.basis) if vec.get(j)})
                c = coords.get(b.vars[j])
                if c:
                    rhs[r] = Fraction(c)
            m = SparseMatrix.from_rows(b.dim, rows)
            sol = solve(m, rhs)
            if sol is None:
                raise ValueError("coordinates are not d-free coordinates of an element")
            if len(kernel(m)):
                raise ArithmeticError("d-free coordinates do not determine the element in this truncation")
            if sol:
                parts[nq] = sol
        return self.join(parts)

    def special_coordinate(self, family: dict, p: int, key) -> dict:
        """Recover ``x_{(1,0) u key}`` at level p + 1 from the d_0 compatibility.

        Uses only ``delta^0 x_key`` and the other level p + 1 coordinates of
        the family, as in the triangular induction.
        """
        target = ((1,) + key[0], (0,) + key[1])
        if p + 1 > self.P or key_total(target) > self.D:
            raise CapExceeded(f"special coordinate {target} lies beyond D={self.D}, P={self.P}")
        val = self.Y.coface(p, 0).apply(family.get(p, {}).get(key, {}))
        n = sum(key[1])
        for key1 in form_keys(p + 1, self.D, n):
            if key1 == target:
                continue
            coeff = dict(_face_key(p + 1, 0, key1)).get(key)
            if coeff:
                for j, c in family.get(p + 1, {}).get(key1, {}).items():
                    add_into(val, j, -coeff * c)
        own = dict(_face_key(p + 1, 0, target)).get(key)
        return {j: c / own for j, c in val.items()}

    def cohomology_dims(self) -> dict:
        return {t: n for t, n in self.complex.cohomology_dims().items() if n}


def ts_complex(Y: CosimplicialModule, D: int, P: int | None = None, check_stable: bool = True) -> TSComplexModel:
    return TSComplexModel(Y, D, P, check_stable)


# ----------------------------------------------------------------------------
# dg Lie structure


def family_bracket(Y: CosimplicialModule, x: dict, y: dict, levels: int) -> dict:
    """Levelwise ``[w (x) u, v (x) z] = (-1)^{|u||v|} wv (x) [u, z]``.

    ``|u|`` is the internal degree of u and ``|v|`` the form degree of v.
    """
    out: dict = {}
    for p in range(levels + 1):
        lv: dict = {}
        for k1, v1 in x.get(p, {}).items():
            for k2, v2 in y.get(p, {}).items():
                prod = wedge({k1: Fraction(1)}, {k2: Fraction(1)})
                if not prod:
                    continue
                (key, c), = prod.items()
                fdeg = sum(k2[1])
                for j1, a in v1.items():
                    for j2, b in v2.items():
                        br = Y.bracket(p, {j1: a}, {j2: b})
                        if not br:
                            continue
                        s = -1 if (Y.degrees[p][j1] * fdeg) & 1 else 1
                        acc = lv.setdefault(key, {})
                        for j, v in br.items():
                            add_into(acc, j, s * c * v)
                        if not acc:
                            del lv[key]
        out[p] = lv
    return out


def family_add(*terms) -> dict:
    out: dict = {}
    for c, fam in terms:
        for p, lv in fam.items():
            tgt = out.setdefault(p, {})
            for key, vec in lv.items():
                acc = tgt.setdefault(key, {})
                for j, x in vec.items():
                    add_into(acc, j, c * x)
                if not acc:
                    del tgt[key]
    return {p: lv for p, lv in out.items() if lv}


def family_d(Y: CosimplicialModule, x: dict) -> dict:
    out: dict = {}
    for p, lv in x.items():
        tgt = out.setdefault(p, {})
        for key, vec in lv.items():
            for k2, c in form_d({key: Fraction(1)}).items():
                acc = tgt.setdefault(k2, {})
                for j, v in vec.items():
                    add_into(acc, j, c * v)
                if not acc:
                    del tgt[k2]
            sgn = -1 if sum(key[1]) & 1 else 1
            acc = tgt.setdefault(key, {})
            for j, v in Y.internal_d(p).apply(vec).items():
                add_into(acc, j, sgn * v)
            if not acc:
                del tgt[key]
    return out


def family_degree(Y: CosimplicialModule, x: dict) -> int | None:
    ds = {sum(key[1]) + Y.degrees[p][j] for p, lv in x.items() for key, vec in lv.items() for j in vec}
    return ds.pop() if len(ds) == 1 else None


def family_total(x: dict) -> int:
    return max((key_total(k) for lv in x.values() for k in lv), default=0)


class TSDGLA:
    """The Thom-Sullivan dg Lie algebra with explicit polynomial-degree caps.

    Elements of ``Omega_{<=D}`` bracket into ``Omega_{<=2D}``; the model at
    the larger cap is built on demand.  Iterated brackets are formed on
    explicit families, and any family beyond ``cap`` raises
    DegreeCapExceeded.
    """

    def __init__(self, Y: CosimplicialModule, D: int, P: int | None = None, cap: int | None = None):
        self.Y = Y
        self.D = D
        self.cap = 2 * D if cap is None else cap
        self.model = ts_complex(Y, D, P)
        self.P = self.model.P
        self._high = None

    @property
    def abelian(self) -> bool:
        return not self.Y.has_bracket()

    def high(self) -> TSComplexModel:
        if self._high is None:
            self._high = ts_complex(self.Y, self.cap, max(self.P, self.cap + 1))
        return self._high

    def element(self, t: int, v: dict) -> dict:
        return self.model.family(t, v, min(self.P, self.cap))

    def bracket_families(self, x: dict, y: dict) -> dict:
        if family_total(x) + family_total(y) > self.cap:
            raise DegreeCapExceeded(f"bracket reaches total degree {family_total(x) + family_total(y)} > {self.cap}")
        return family_bracket(self.Y, x, y, min(self.P, self.cap))

    def bracket(self, t1: int, v1: dict, t2: int, v2: dict) -> tuple[int, dict]:
        """Bracket of two model elements, in coordinates of the cap-2D model."""
        fam = self.bracket_families(self.element(t1, v1), self.element(t2, v2))
        return t1 + t2, self.high().coordinates(fam, t1 + t2)

    def check(self, samples: int = 3, rng=None) -> AxiomReport:
        """Jacobi, skew symmetry and the Leibniz rule on basis triples of low total degree.

        Triples are drawn from the model at cap ``cap // 3`` so that every
        double bracket stays inside the cap.
        """
        fails = []
        third = ts_complex(self.Y, self.cap // 3, self.P) if self.cap // 3 != self.D else self.model
        elems = []
        for t in third.space.degrees():
            for k in range(third.space.dim(t)):
                elems.append((t, third.family(t, {k: Fraction(1)}, min(self.P, self.cap))))
        if rng is not None and len(elems) > samples:
            elems = rng.sample(elems, samples)
        else:
            elems = elems[:samples] if samples else elems
        Y = self.Y
        br = self.bracket_families
        for ta, a in elems:
            for tb, b in elems:
                ab, ba = br(a, b), br(b, a)
                s = -1 if (ta * tb) & 1 else 1
                if family_add((1, ab), (s, ba)) and not any(f[0] == "skew" for f in fails):
                    fails.append(("skew", (ta, tb), None))
                lhs = family_d(Y, ab)
                rhs = family_add((1, br(family_d(Y, a), b)), (-1 if ta & 1 else 1, br(a, family_d(Y, b))))
                if family_add((1, lhs), (-1, rhs)) and not any(f[0] == "Leibniz" for f in fails):
                    fails.append(("Leibniz", (ta, tb), None))
                for tc, c in elems:
                    s1 = -1 if (ta * tc) & 1 else 1
                    s2 = -1 if (tb * ta) & 1 else 1
                    s3 = -1 if (tc * tb) & 1 else 1
                    j = family_add((s1, br(a, br(b, c))), (s2, br(b, br(c, a))), (s3, br(c, br(a, b))))
                    if j and not any(f[0] == "Jacobi" for f in fails):
                        fails.append(("Jacobi", (ta, tb, tc), None))
        return AxiomReport(not fails, fails)

    def as_dgla(self) -> DGLA:
        """Plain DGLA on the model basis; only available when the bracket vanishes."""
        if not self.abelian:
            raise DegreeCapExceeded("the bracket does not close on Omega_{<=D}; use bracket() with the cap-2D model")
        return ts_abelian_dgla(self.model)


def ts_abelian_dgla(model: TSComplexModel) -> DGLA:
    degrees, labels, index = [], [], {}
    for t in model.space.degrees():
        for k in range(model.space.dim(t)):
            index[(t, k)] = len(degrees)
            degrees.append(t)
            labels.append(f"w{t}_{k}")
    diff = [dict() for _ in degrees]
    for t, m in model.complex.d.blocks.items():
        for i, j, v in m.entries():
            diff[index[(t, j)]][index[(t + 1, i)]] = v
    return DGLA(degrees, diff, {}, labels)


def ts_dgla(Y: CosimplicialModule, D: int, P: int | None = None, cap: int | None = None):
    """The Thom-Sullivan dg Lie algebra of a cosimplicial dg Lie algebra.

    Returns a :class:`DGLA` when the levelwise bracket vanishes (then the
    truncated model is closed under the bracket) and a :class:`TSDGLA`
    otherwise.
    """
    T = TSDGLA(Y, D, P, cap)
    return T.as_dgla() if T.abelian else T
