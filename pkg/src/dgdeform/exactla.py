"""Exact sparse linear algebra over the rationals.

Matrices are stored row-wise as dictionaries of nonzero ``Fraction`` entries.
Elimination runs on primitive integer rows (fraction-free) and only turns back
into rationals when a basis is read off.  Pivoting is deterministic, so every
basis returned here is reproducible from run to run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Iterator, Sequence

import numpy as np

Vector = dict  # sparse vector: index -> Fraction


class CompositionNonzero(ValueError):
    """Raised when two maps that should compose to zero do not."""


def to_q(x) -> Fraction:
    """Parse an int, Fraction or a ``"p/q"`` string into a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot read {x!r} as an exact rational")


def q_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(eq=False)
class SparseMatrix:
    rows: int
    cols: int
    data: dict = field(default_factory=dict)  # row -> {col: Fraction}

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int) -> "SparseMatrix":
        return cls(rows, cols, {})

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, {i: {i: Fraction(1)} for i in range(n)})

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries: Iterable) -> "SparseMatrix":
        m = cls(rows, cols, {})
        for i, j, v in entries:
            if not (0 <= i < rows and 0 <= j < cols):
                raise IndexError(f"entry ({i},{j}) outside {rows}x{cols}")
            v = to_q(v)
            if v:
                r = m.data.setdefault(i, {})
                if j in r:
                    raise ValueError(f"duplicate entry at ({i},{j})")
                r[j] = v
        return m

    @classmethod
    def from_dense(cls, dense: Sequence[Sequence]) -> "SparseMatrix":
        rows = len(dense)
        cols = len(dense[0]) if rows else 0
        return cls.from_entries(rows, cols, ((i, j, v) for i, r in enumerate(dense) for j, v in enumerate(r)))

    @classmethod
    def from_columns(cls, rows: int, columns: Sequence[Vector]) -> "SparseMatrix":
        m = cls(rows, len(columns), {})
        for j, col in enumerate(columns):
            for i, v in col.items():
                if v:
                    m.data.setdefault(i, {})[j] = Fraction(v)
        return m

    @classmethod
    def from_rows(cls, cols: int, rows: Sequence[Vector]) -> "SparseMatrix":
        m = cls(len(rows), cols, {})
        for i, r in enumerate(rows):
            clean = {j: Fraction(v) for j, v in r.items() if v}
            if clean:
                m.data[i] = clean
        return m

    # inspection ---------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def entries(self) -> Iterator[tuple[int, int, Fraction]]:
        for i in sorted(self.data):
            r = self.data[i]
            for j in sorted(r):
                yield i, j, r[j]

    def get(self, i: int, j: int) -> Fraction:
        return self.data.get(i, {}).get(j, Fraction(0))

    def row(self, i: int) -> Vector:
        return dict(self.data.get(i, {}))

    def column(self, j: int) -> Vector:
        return {i: r[j] for i, r in self.data.items() if j in r}

    def columns(self) -> list[Vector]:
        cols: list[Vector] = [dict() for _ in range(self.cols)]
        for i, r in self.data.items():
            for j, v in r.items():
                cols[j][i] = v
        return cols

    def to_dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for i, j, v in self.entries():
            out[i][j] = v
        return out

    def nnz(self) -> int:
        return sum(len(r) for r in self.data.values())

    def is_zero(self) -> bool:
        return not any(self.data.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        if self.shape != other.shape:
            return False
        a = {i: r for i, r in self.data.items() if r}
        b = {i: r for i, r in other.data.items() if r}
        return a == b

    def __repr__(self) -> str:
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"

    # arithmetic ---------------------------------------------------------
    def apply(self, v: Vector) -> Vector:
        out: Vector = {}
        if not v:
            return out
        for i, r in self.data.items():
            s = Fraction(0)
            for j, a in r.items():
                b = v.get(j)
                if b:
                    s += a * b
            if s:
                out[i] = s
        return out

    def transpose(self) -> "SparseMatrix":
        t = SparseMatrix(self.cols, self.rows, {})
        for i, r in self.data.items():
            for j, v in r.items():
                t.data.setdefault(j, {})[i] = v
        return t

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = SparseMatrix(self.rows, other.cols, {})
        for i, r in self.data.items():
            acc: dict = {}
            for k, a in r.items():
                orow = other.data.get(k)
                if not orow:
                    continue
                for j, b in orow.items():
                    acc[j] = acc.get(j, 0) + a * b
            acc = {j: v for j, v in acc.items() if v}
            if acc:
                out.data[i] = acc
        return out

    def _combine(self, other: "SparseMatrix", sign: int) -> "SparseMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        out = SparseMatrix(self.rows, self.cols, {i: dict(r) for i, r in self.data.items()})
        for i, r in other.data.items():
            tgt = out.data.setdefault(i, {})
            for j, v in r.items():
                s = tgt.get(j, 0) + sign * v
                if s:
                    tgt[j] = s
                else:
                    tgt.pop(j, None)
        out.data = {i: r for i, r in out.data.items() if r}
        return out

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        return self._combine(other, 1)

    def __sub__(self, other: "SparseMatrix") -> "SparseMatrix":
        return self._combine(other, -1)

    def __neg__(self) -> "SparseMatrix":
        return self.scale(-1)

    def scale(self, c) -> "SparseMatrix":
        c = to_q(c)
        if not c:
            return SparseMatrix(self.rows, self.cols, {})
        return SparseMatrix(self.rows, self.cols, {i: {j: c * v for j, v in r.items()} for i, r in self.data.items()})

    def permuted(self, row_perm: Sequence[int], col_perm: Sequence[int]) -> "SparseMatrix":
        """Entry (i, j) moves to (row_perm[i], col_perm[j])."""
        return SparseMatrix.from_entries(
            self.rows, self.cols, ((row_perm[i], col_perm[j], v) for i, j, v in self.entries())
        )


def hstack(blocks: Sequence[SparseMatrix], rows: int | None = None) -> SparseMatrix:
    if rows is None:
        rows = blocks[0].rows
    out = SparseMatrix(rows, sum(b.cols for b in blocks), {})
    off = 0
    for b in blocks:
        if b.rows != rows:
            raise ValueError("row mismatch in hstack")
        for i, r in b.data.items():
            tgt = out.data.setdefault(i, {})
            for j, v in r.items():
                tgt[j + off] = v
        off += b.cols
    return out


def vstack(blocks: Sequence[SparseMatrix], cols: int | None = None) -> SparseMatrix:
    if cols is None:
        cols = blocks[0].cols
    out = SparseMatrix(sum(b.rows for b in blocks), cols, {})
    off = 0
    for b in blocks:
        if b.cols != cols:
            raise ValueError("column mismatch in vstack")
        for i, r in b.data.items():
            out.data[i + off] = dict(r)
        off += b.rows
    return out


# ----------------------------------------------------------------------------
# fraction-free elimination


def _primitive(row: dict) -> dict:
    """Scale a rational or integer row to coprime integers with positive lead."""
    if not row:
        return {}
    den = 1
    for v in row.values():
        if isinstance(v, Fraction):
            d = v.denominator
            den = den * d // gcd(den, d)
    ints = {j: int(v * den) for j, v in row.items() if v}
    if not ints:
        return {}
    g = 0
    for v in ints.values():
        g = gcd(g, v)
    lead = ints[min(ints)]
    if lead < 0:
        g = -g
    return {j: v // g for j, v in ints.items()}


class Echelon:
    """Incrementally maintained fully reduced row echelon form.

    Rows are primitive integer dictionaries; each stored row owns the column
    of its leading entry and is zero on every other owned column.
    """

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.pivots: dict[int, dict] = {}

    def __len__(self) -> int:
        return len(self.pivots)

    def reduce(self, row: dict) -> dict:
        r = _primitive(row)
        hits = [c for c in r if c in self.pivots]
        for c in sorted(hits):
            a = r.get(c)
            if not a:
                continue
            p = self.pivots[c]
            b = p[c]
            new = {j: b * v for j, v in r.items()}
            for j, v in p.items():
                s = new.get(j, 0) - a * v
                if s:
                    new[j] = s
                else:
                    new.pop(j, None)
            r = _primitive(new)
        return r

    def add(self, row: dict) -> bool:
        r = self.reduce(row)
        if not r:
            return False
        c0 = min(r)
        lead = r[c0]
        for c, p in list(self.pivots.items()):
            a = p.get(c0)
            if a:
                new = {j: lead * v for j, v in p.items()}
                for j, v in r.items():
                    s = new.get(j, 0) - a * v
                    if s:
                        new[j] = s
                    else:
                        new.pop(j, None)
                self.pivots[c] = _primitive(new)
        self.pivots[c0] = r
        return True

    def pivot_columns(self) -> list[int]:
        return sorted(self.pivots)

    def kernel(self) -> list[Vector]:
        """Basis of the solution space of the stored rows, one vector per free column."""
        piv = self.pivots
        free = [j for j in range(self.ncols) if j not in piv]
        # column j of the reduced matrix, restricted to pivot rows
        by_col: dict[int, list[tuple[int, int, int]]] = {}
        for c, p in piv.items():
            lead = p[c]
            for j, v in p.items():
                if j != c:
                    by_col.setdefault(j, []).append((c, v, lead))
        basis = []
        for f in free:
            v: Vector = {f: Fraction(1)}
            for c, a, lead in by_col.get(f, ()):
                v[c] = Fraction(-a, lead)
            basis.append(v)
        return basis

    def rref_rows(self) -> list[Vector]:
        out = []
        for c in sorted(self.pivots):
            p = self.pivots[c]
            lead = p[c]
            out.append({j: Fraction(v, lead) for j, v in p.items()})
        return out


class SemiEchelon:
    """Leading-entry elimination only; cheaper than :class:`Echelon` when only
    the pivot set and membership tests are needed."""

    def __init__(self):
        self.pivots: dict[int, dict] = {}

    def __len__(self) -> int:
        return len(self.pivots)

    def reduce(self, row: dict) -> dict:
        r = _primitive(row)
        while r:
            c = min(r)
            p = self.pivots.get(c)
            if p is None:
                return r
            a, b = r[c], p[c]
            new = {j: b * v for j, v in r.items()}
            for j, v in p.items():
                s = new.get(j, 0) - a * v
                if s:
                    new[j] = s
                else:
                    new.pop(j, None)
            r = _primitive(new)
        return r

    def add(self, row: dict) -> bool:
        r = self.reduce(row)
        if not r:
            return False
        self.pivots[min(r)] = r
        return True


def row_echelon(m: SparseMatrix) -> Echelon:
    e = Echelon(m.cols)
    for i in sorted(m.data):
        e.add(m.data[i])
    return e


def rank(m: SparseMatrix) -> int:
    return len(row_echelon(m))


def kernel_image(m: SparseMatrix) -> tuple[list[Vector], list[Vector]]:
    """Kernel basis (vectors of length ``cols``) and image basis (length ``rows``).

    The image basis consists of the columns of ``m`` at pivot positions.
    """
    e = row_echelon(m)
    ker = e.kernel()
    cols = m.columns()
    img = [cols[c] for c in e.pivot_columns()]
    return ker, img


def kernel(m: SparseMatrix) -> list[Vector]:
    return row_echelon(m).kernel()


def image(m: SparseMatrix) -> list[Vector]:
    return kernel_image(m)[1]


def solve(m: SparseMatrix, b: Vector) -> Vector | None:
    """One solution of ``m x = b`` (free variables set to zero) or None."""
    e = Echelon(m.cols + 1)
    aug = m.columns()
    rows: dict[int, dict] = {i: dict(r) for i, r in m.data.items()}
    for i, v in b.items():
        if v:
            rows.setdefault(i, {})[m.cols] = Fraction(v)
    del aug
    for i in sorted(rows):
        e.add(rows[i])
    if m.cols in e.pivots:
        return None
    x: Vector = {}
    for c, p in e.pivots.items():
        rhs = p.get(m.cols)
        if rhs:
            x[c] = Fraction(rhs, p[c])
    return x


def inverse(m: SparseMatrix) -> SparseMatrix:
    """Inverse of a square matrix; ValueError if singular."""
    if m.rows != m.cols:
        raise ValueError("inverse of a non-square matrix")
    n = m.rows
    e = Echelon(2 * n)
    for i in range(n):
        row = dict(m.data.get(i, {}))
        row[n + i] = Fraction(1)
        e.add(row)
    if sorted(e.pivots)[:n] != list(range(n)) or len(e.pivots) != n:
        raise ValueError("matrix is singular")
    rows = {}
    for c, p in e.pivots.items():
        lead = p[c]
        rows[c] = {j - n: Fraction(v, lead) for j, v in p.items() if j >= n}
    return SparseMatrix(n, n, {i: r for i, r in rows.items() if r})


class ColumnSpace:
    """Span of a list of vectors with coordinate recovery.

    ``coordinates(v)`` returns coefficients expressing ``v`` in the given
    vectors (using only an independent subset) or None if ``v`` is outside
    the span.
    """

    def __init__(self, vectors: Sequence[Vector]):
        self.vectors = list(vectors)
        self._rows: dict[int, tuple[dict, dict]] = {}  # pivot -> (row, combo)
        self.independent: list[int] = []
        for k, v in enumerate(self.vectors):
            r, combo = self._reduce(dict(v), {k: Fraction(1)})
            if r:
                c0 = min(r)
                lead = r[c0]
                r = {j: x / lead for j, x in r.items()}
                combo = {j: x / lead for j, x in combo.items()}
                for c, (pr, pc) in list(self._rows.items()):
                    a = pr.get(c0)
                    if a:
                        self._rows[c] = (_axpy(pr, r, -a), _axpy(pc, combo, -a))
                self._rows[c0] = (r, combo)
                self.independent.append(k)

    def _reduce(self, r: dict, combo: dict) -> tuple[dict, dict]:
        r = {j: Fraction(x) for j, x in r.items() if x}
        for c in sorted(set(r) & set(self._rows)):
            a = r.get(c)
            if a:
                pr, pc = self._rows[c]
                r = _axpy(r, pr, -a)
                combo = _axpy(combo, pc, -a)
        return r, combo

    @property
    def dim(self) -> int:
        return len(self._rows)

    def contains(self, v: Vector) -> bool:
        r, _ = self._reduce(dict(v), {})
        return not r

    def coordinates(self, v: Vector) -> Vector | None:
        r, combo = self._reduce(dict(v), {})
        if r:
            return None
        return {k: -x for k, x in combo.items() if x}

    def residual(self, v: Vector) -> Vector:
        return self._reduce(dict(v), {})[0]


def _axpy(x: dict, y: dict, a) -> dict:
    out = dict(x)
    for j, v in y.items():
        s = out.get(j, 0) + a * v
        if s:
            out[j] = s
        else:
            out.pop(j, None)
    return out


# ----------------------------------------------------------------------------
# homology of two composable maps


@dataclass
class SubquotientBasis:
    ambient: int
    kernel: list
    image: list
    representatives: list

    @property
    def dim(self) -> int:
        return len(self.representatives)

    def class_of(self, z: Vector) -> Vector:
        """Coordinates of a cycle in the chosen representatives (boundaries dropped)."""
        if not hasattr(self, "_space"):
            self._space = ColumnSpace(list(self.representatives) + list(self.image))
        coords = self._space.coordinates(z)
        if coords is None:
            raise ValueError("vector is not a cycle")
        n = len(self.representatives)
        return {k: v for k, v in coords.items() if k < n}

    def is_boundary(self, z: Vector) -> bool:
        if not hasattr(self, "_bspace"):
            self._bspace = ColumnSpace(list(self.image))
        return self._bspace.contains(z)


def subquotient_homology(d_in: SparseMatrix, d_out: SparseMatrix) -> SubquotientBasis:
    """Homology at the middle space of ``A --d_in--> V --d_out--> B``."""
    if d_in.rows != d_out.cols:
        raise ValueError(f"middle dimensions differ: {d_in.rows} vs {d_out.cols}")
    comp = d_out @ d_in
    if not comp.is_zero():
        i, j, v = next(comp.entries())
        raise CompositionNonzero(f"d_out*d_in has entry {v} at ({i},{j})")
    ker = kernel(d_out)
    img = image(d_in)
    e = Echelon(d_in.rows)
    for v in img:
        e.add(v)
    reps = [v for v in ker if e.add(v)]
    return SubquotientBasis(d_in.rows, ker, img, reps)


# ----------------------------------------------------------------------------
# large integer systems: modular prefilter plus exact certification

_PRIMES = (1048573, 1048571, 1048559, 1048549)


def _modinv(a: int, p: int) -> int:
    return pow(int(a) % p, p - 2, p)


class _ModEchelon:
    """Fully reduced echelon basis modulo a prime, kept as a dense array."""

    def __init__(self, ncols: int, p: int):
        self.p = p
        self.ncols = ncols
        self.basis = np.zeros((0, ncols), dtype=np.int64)
        self.pivcols: list[int] = []

    def absorb(self, chunk: np.ndarray) -> np.ndarray:
        """Reduce a chunk, add new pivots, return indices of rows that created pivots."""
        p = self.p
        a = np.mod(chunk, p)
        if self.pivcols:
            coef = a[:, self.pivcols]
            a = np.mod(a - np.mod(coef @ self.basis, p), p)
        created = []
        nz = np.nonzero(a.any(axis=1))[0]
        for idx in nz:
            row = a[idx]
            for c, brow in zip(self.pivcols, self.basis):
                if row[c]:
                    row = np.mod(row - row[c] * brow, p)
            cols = np.nonzero(row)[0]
            if cols.size == 0:
                continue
            c0 = int(cols[0])
            row = np.mod(row * _modinv(row[c0], p), p)
            if self.basis.shape[0]:
                f = self.basis[:, c0].copy()
                self.basis = np.mod(self.basis - np.outer(f, row), p)
            self.basis = np.vstack([self.basis, row[None, :]])
            self.pivcols.append(c0)
            created.append(int(idx))
            # keep later rows of this chunk reduced against the new pivot
            later = a[idx + 1 :]
            if later.shape[0]:
                f = later[:, c0].copy()
                a[idx + 1 :] = np.mod(later - np.outer(f, row), p)
        return np.array(created, dtype=np.int64)


def _rows_times(rows: np.ndarray, kmat: list[list[int]]) -> bool:
    """Exact check that every integer row annihilates every integer column of kmat."""
    if rows.shape[0] == 0 or not kmat:
        return True
    kcols = len(kmat[0])
    rmax = int(np.abs(rows).max()) if rows.size else 0
    kmax = max((abs(x) for r in kmat for x in r), default=0)
    ncols = rows.shape[1]
    if rmax == 0 or kmax == 0:
        return True
    limb_bits = 20
    nlimbs = 1
    while (1 << (limb_bits * nlimbs)) <= kmax:
        nlimbs += 1
    if rmax * min(kmax, (1 << limb_bits)) * ncols >= (1 << 60):
        # fall back to python integers
        kT = list(zip(*kmat))
        for r in rows.tolist():
            for col in kT:
                if sum(a * b for a, b in zip(r, col) if a):
                    return False
        return True
    mask = (1 << limb_bits) - 1
    limbs = []
    for t in range(nlimbs):
        limb = np.zeros((ncols, kcols), dtype=np.int64)
        for i, r in enumerate(kmat):
            for j, x in enumerate(r):
                if x:
                    s = -1 if x < 0 else 1
                    limb[i, j] = s * ((abs(x) >> (limb_bits * t)) & mask)
        limbs.append(limb)
    carry = np.zeros((rows.shape[0], kcols), dtype=np.int64)
    for limb in limbs:
        total = rows @ limb + carry
        if np.any(total & mask):
            return False
        carry = total >> limb_bits
    return not np.any(carry)


def nullspace_integer_rows(chunks: Iterable[np.ndarray], ncols: int) -> list[Vector]:
    """Exact rational kernel of a (possibly very tall) integer matrix given in chunks.

    Rows are first screened modulo a prime to find a candidate set of
    independent rows; the kernel of those rows is computed exactly and then
    certified against every row with exact integer arithmetic.  Rows that fail
    the certificate are added and the exact step is repeated, so the answer
    never depends on the prime.
    """
    stored = []
    for ch in chunks:
        ch = np.asarray(ch, dtype=np.int64)
        if ch.size == 0:
            continue
        ch = ch[np.any(ch != 0, axis=1)]
        if ch.shape[0]:
            stored.append(np.unique(ch, axis=0))
    if ncols == 0:
        return []
    if not stored:
        return [{j: Fraction(1)} for j in range(ncols)]
    allrows = np.unique(np.vstack(stored), axis=0)
    me = _ModEchelon(ncols, _PRIMES[0])
    chosen: list[int] = []
    step = 4096
    for start in range(0, allrows.shape[0], step):
        created = me.absorb(allrows[start : start + step])
        chosen.extend(int(start + c) for c in created)
    exact = Echelon(ncols)
    for i in chosen:
        exact.add({j: int(v) for j, v in enumerate(allrows[i]) if v})
    for _ in range(64):
        ker = exact.kernel()
        if not ker:
            return ker
        kmat = []
        for j in range(ncols):
            kmat.append([0] * len(ker))
        scaled = []
        for v in ker:
            den = 1
            for x in v.values():
                den = den * x.denominator // gcd(den, x.denominator)
            scaled.append({j: int(x * den) for j, x in v.items()})
        for col, v in enumerate(scaled):
            for j, x in v.items():
                kmat[j][col] = x
        if _rows_times(allrows, kmat):
            return ker
        # find offending rows and add them
        bad = 0
        for i in range(allrows.shape[0]):
            r = allrows[i]
            nzr = np.nonzero(r)[0]
            if any(sum(int(r[j]) * v.get(j, 0) for j in nzr) for v in scaled):
                if exact.add({int(j): int(r[j]) for j in nzr}):
                    bad += 1
                if bad >= 8:
                    break
    raise RuntimeError("exact certification did not converge")
