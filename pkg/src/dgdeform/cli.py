"""Batch front end: one JSON document in, one deterministic report out.

Input documents carry a ``"kind"`` field.  Rationals are JSON integers or
strings ``"p/q"``; base coefficients (over a Weil base) are a rational or a
list of ``[[exponents...], rational]`` pairs.

``dgla``
    ``degrees``, optional ``labels``, ``brackets`` as ``[i, j, k, c]``
    (``[e_i, e_j]`` has coefficient c on ``e_k``; the transposed entry is
    filled in by graded skew symmetry) and ``diff`` as ``[i, k, c]``.
``cone``
    ``h`` and ``g`` (dgla documents) and ``inclusion`` as ``[k, j, c]``.
``algebroid``
    ``base: {m, D}``, ``degrees``, ``labels``, ``anchor`` as ``[k, i, f]``,
    ``brackets`` as ``[j, k, l, f]`` and ``diff`` as ``[k, l, f]``.
``cover``
    ``opens`` (lists of point names) and a ``presheaf``: ``{"type": "atoms",
    "atoms": [[lo, hi, degree]], "differential": [[s, t, c]]}``,
    ``{"type": "components", "edges": [[u, v]]}`` or ``{"type": "constant",
    "algebra": <dgla>}``.
``family``
    ``cover``, ``base: {m, D}`` and ``lifts``: one list per coordinate of
    ``[exponents, i, j, section, c]`` entries (a Cech 1-cochain per base
    monomial).

Exit codes: 0 success, 1 a reported check failed, 2 bad arguments, 3 input
parse error, 4 hypothesis failure, 5 truncation too small, 6 input rejected
by a module (with witness).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .algebroid import (
    Algebroid,
    ValidityExceeded,
    WeilElement,
    check_algebroid,
    ks_exponential,
    pbw_check,
    weil_base,
)
from .cech import (
    AtomPresheaf,
    ComponentPresheaf,
    ConstantPresheaf,
    CoverDatum,
    HypothesisFailure,
    InconsistentRestrictions,
    NotARefinement,
    augmentation_is_quasi_iso,
    cech_cosimplicial,
    check_cover,
    rgamma,
)
from .dgla import (
    DGLA,
    AxiomFailure,
    NotMaurerCartan,
    TruncationTooSmall,
    ce_complex,
    check_ce,
    check_coalgebra_map,
    check_dgla,
    lie_homology,
)
from .envelope import ConnectingMorphism, NotAnIdeal, cone_dgla, env_truncated, symmetric_power_dims
from .kodaira import CocycleFailure, family_ks, split_family, universal_dual_check
from .thomsullivan import CapExceeded, DegreeCapExceeded, NotStabilized, TSDGLA, normalize

COMMANDS = (
    "check", "homology", "ce", "mc", "envelope", "connecting", "pbw", "ks",
    "thom-sullivan", "cech", "family", "universal",
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_PARSE, EXIT_HYPOTHESIS, EXIT_TRUNCATION, EXIT_REJECTED = range(7)


class ParseError(ValueError):
    def __init__(self, msg: str, where: str):
        super().__init__(f"{where}: {msg}")
        self.witness = where


class CheckFailed(Exception):
    pass


# ----------------------------------------------------------------------------
# scalars


def q(x, where: str = "value") -> Fraction:
    if isinstance(x, bool):
        raise ParseError("expected a rational", where)
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad rational {x!r}", where) from None
    raise ParseError("expected an integer or a 'p/q' string", where)


def q_out(c) -> int | str:
    c = Fraction(c)
    return c.numerator if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def weil_in(base, x, where: str) -> WeilElement:
    if isinstance(x, list):
        data = {}
        for k, pair in enumerate(x):
            if not (isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], list)):
                raise ParseError("expected [[exponents], coefficient]", f"{where}[{k}]")
            e = tuple(_int(v, f"{where}[{k}][0]") for v in pair[0])
            if len(e) != base.m:
                raise ParseError(f"exponent needs {base.m} entries", f"{where}[{k}][0]")
            data[e] = data.get(e, 0) + q(pair[1], f"{where}[{k}][1]")
        return base.element(data)
    return base.const(q(x, where))


def weil_out(f: WeilElement):
    terms = sorted((e, c) for e, c in f.c.items() if c)
    if all(sum(e) == 0 for e, _ in terms):
        return q_out(terms[0][1]) if terms else 0
    return [[list(e), q_out(c)] for e, c in terms]


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError("expected an integer", where)
    return x


def _get(doc: dict, key: str, where: str, default=None, required: bool = True):
    if not isinstance(doc, dict):
        raise ParseError("expected an object", where)
    if key not in doc:
        if required:
            raise ParseError(f"missing field {key!r}", where)
        return default
    return doc[key]


def _entries(doc, key, width, where):
    rows = _get(doc, key, where, [], required=False)
    if not isinstance(rows, list):
        raise ParseError("expected a list", f"{where}.{key}")
    for k, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != width:
            raise ParseError(f"expected {width} entries", f"{where}.{key}[{k}]")
    return rows


# ----------------------------------------------------------------------------
# documents


def load_dgla(doc: dict, where: str = "$") -> DGLA:
    degrees = [_int(d, f"{where}.degrees[{k}]") for k, d in enumerate(_get(doc, "degrees", where))]
    n = len(degrees)
    br: dict = {}
    for k, (i, j, l, c) in enumerate(_entries(doc, "brackets", 4, where)):
        w = f"{where}.brackets[{k}]"
        for v in (i, j, l):
            if not 0 <= _int(v, w) < n:
                raise ParseError("generator index out of range", w)
        br.setdefault((i, j), {})[l] = br.get((i, j), {}).get(l, 0) + q(c, w)
    diff: dict = {}
    for k, (i, l, c) in enumerate(_entries(doc, "diff", 3, where)):
        w = f"{where}.diff[{k}]"
        for v in (i, l):
            if not 0 <= _int(v, w) < n:
                raise ParseError("generator index out of range", w)
        diff.setdefault(i, {})[l] = diff.get(i, {}).get(l, 0) + q(c, w)
    labels = _get(doc, "labels", where, None, required=False)
    if labels is not None and (len(labels) != n or not all(isinstance(s, str) for s in labels)):
        raise ParseError("labels must be one string per generator", f"{where}.labels")
    return DGLA.from_table(degrees, br, diff, labels)


def dump_dgla(g: DGLA) -> dict:
    brackets = []
    for (i, j), v in sorted(g.bracket.items()):
        if (j, i) in g.bracket and j < i:
            continue
        brackets.extend([i, j, l, q_out(c)] for l, c in sorted(v.items()) if c)
    diff = [[i, l, q_out(c)] for i, v in enumerate(g.diff) for l, c in sorted(v.items()) if c]
    return {"kind": "dgla", "degrees": list(g.degrees), "labels": list(g.labels), "brackets": brackets, "diff": diff}


def load_cone(doc: dict, where: str = "$"):
    h = load_dgla(_get(doc, "h", where), f"{where}.h")
    g = load_dgla(_get(doc, "g", where), f"{where}.g")
    inc = [dict() for _ in range(h.dim)]
    for k, (a, b, c) in enumerate(_entries(doc, "inclusion", 3, where)):
        w = f"{where}.inclusion[{k}]"
        if not (0 <= _int(a, w) < h.dim and 0 <= _int(b, w) < g.dim):
            raise ParseError("index out of range", w)
        inc[a][b] = inc[a].get(b, 0) + q(c, w)
    return cone_dgla(h, inc, g)


def dump_cone(cone) -> dict:
    inc = [[k, j, q_out(c)] for k, v in enumerate(cone.inc) for j, c in sorted(v.items()) if c]
    return {"kind": "cone", "h": dump_dgla(cone.h), "g": dump_dgla(cone.g), "inclusion": inc}


def _load_base(doc, where):
    b = _get(doc, "base", where)
    m, D = _int(_get(b, "m", f"{where}.base"), f"{where}.base.m"), _int(_get(b, "D", f"{where}.base"), f"{where}.base.D")
    if m < 0 or D < 0:
        raise ParseError("m and D must be non-negative", f"{where}.base")
    return weil_base(m, D)


def load_algebroid(doc: dict, where: str = "$") -> Algebroid:
    base = _load_base(doc, where)
    degrees = [_int(d, f"{where}.degrees[{k}]") for k, d in enumerate(_get(doc, "degrees", where))]
    r = len(degrees)
    anchor = [[base.zero()] * base.m for _ in range(r)]
    for k, (g, i, f) in enumerate(_entries(doc, "anchor", 3, where)):
        w = f"{where}.anchor[{k}]"
        if not (0 <= _int(g, w) < r and 0 <= _int(i, w) < base.m):
            raise ParseError("index out of range", w)
        anchor[g][i] = anchor[g][i] + weil_in(base, f, w)
    br: dict = {}
    for k, (a, b, l, f) in enumerate(_entries(doc, "brackets", 4, where)):
        w = f"{where}.brackets[{k}]"
        if not all(0 <= _int(v, w) < r for v in (a, b, l)):
            raise ParseError("index out of range", w)
        br.setdefault((a, b), {})[l] = weil_in(base, f, w)
    diff: dict = {}
    for k, (a, l, f) in enumerate(_entries(doc, "diff", 3, where)):
        w = f"{where}.diff[{k}]"
        if not all(0 <= _int(v, w) < r for v in (a, l)):
            raise ParseError("index out of range", w)
        diff.setdefault(a, {})[l] = weil_in(base, f, w)
    labels = _get(doc, "labels", where, None, required=False)
    return Algebroid.from_table(base, degrees, {k: v for k, v in enumerate(anchor)}, br, diff, labels)


def dump_algebroid(A: Algebroid) -> dict:
    anchor = [[k, i, weil_out(f)] for k, row in enumerate(A.anchor) for i, f in enumerate(row) if f]
    brackets = []
    for (a, b), v in sorted(A.bracket.items()):
        if (b, a) in A.bracket and b < a:
            continue
        brackets.extend([a, b, l, weil_out(f)] for l, f in sorted(v.items()) if f)
    diff = [[a, l, weil_out(f)] for a, v in enumerate(A.diff) for l, f in sorted(v.items()) if f]
    return {
        "kind": "algebroid", "base": {"m": A.base.m, "D": A.base.D}, "degrees": list(A.degrees),
        "labels": list(A.labels), "anchor": anchor, "brackets": brackets, "diff": diff,
    }


def _points(x, where):
    if not isinstance(x, list) or not all(isinstance(p, (str, int)) and not isinstance(p, bool) for p in x):
        raise ParseError("expected a list of point names", where)
    return frozenset(x)


def _sorted_points(W) -> list:
    return sorted(W, key=lambda p: (isinstance(p, str), p))


def load_cover(doc: dict, where: str = "$") -> CoverDatum:
    opens = [_points(o, f"{where}.opens[{k}]") for k, o in enumerate(_get(doc, "opens", where))]
    ps = _get(doc, "presheaf", where)
    w = f"{where}.presheaf"
    kind = _get(ps, "type", w)
    if kind == "atoms":
        atoms = []
        for k, a in enumerate(_entries(ps, "atoms", 3, w)):
            atoms.append((_points(a[0], f"{w}.atoms[{k}][0]"), _points(a[1], f"{w}.atoms[{k}][1]"),
                          _int(a[2], f"{w}.atoms[{k}][2]")))
        diff = [(_int(s, f"{w}.differential[{k}]"), _int(t, f"{w}.differential[{k}]"), q(c, f"{w}.differential[{k}]"))
                for k, (s, t, c) in enumerate(_entries(ps, "differential", 3, w))]
        F = AtomPresheaf(atoms, {}, diff)
    elif kind == "components":
        edges = [tuple(e) for e in _entries(ps, "edges", 2, w)]
        F = ComponentPresheaf(edges)
    elif kind == "constant":
        F = ConstantPresheaf(load_dgla(_get(ps, "algebra", w), f"{w}.algebra"))
    else:
        raise ParseError(f"unknown presheaf type {kind!r}", f"{w}.type")
    return CoverDatum(opens, F)


def dump_cover(C: CoverDatum) -> dict:
    F = C.presheaf
    if isinstance(F, AtomPresheaf):
        if F.twist:
            raise ValueError("twisted atom presheaves have no document form")
        ps = {"type": "atoms", "atoms": [[_sorted_points(lo), _sorted_points(hi), d] for lo, hi, d in F.atoms],
              "differential": [[s, t, q_out(c)] for s, t, c in F.differential]}
    elif isinstance(F, ComponentPresheaf):
        ps = {"type": "components", "edges": [list(e) for e in F.edges]}
    elif isinstance(F, ConstantPresheaf):
        ps = {"type": "constant", "algebra": dump_dgla(F.g)}
    else:
        raise ValueError(f"{type(F).__name__} has no document form")
    return {"kind": "cover", "opens": [_sorted_points(o) for o in C.opens], "presheaf": ps}


def load_family_data(doc: dict, where: str = "$") -> tuple:
    cover = load_cover(_get(doc, "cover", where), f"{where}.cover")
    base = _load_base(doc, where)
    raw = _get(doc, "lifts", where)
    if not isinstance(raw, list) or len(raw) != base.m:
        raise ParseError(f"expected one lift list per coordinate ({base.m})", f"{where}.lifts")
    lifts = []
    for p, rows in enumerate(raw):
        per: dict = {}
        for k, row in enumerate(rows):
            w = f"{where}.lifts[{p}][{k}]"
            if not isinstance(row, list) or len(row) != 5 or not isinstance(row[0], list):
                raise ParseError("expected [exponents, i, j, section, c]", w)
            e = tuple(_int(v, w) for v in row[0])
            if len(e) != base.m:
                raise ParseError(f"exponent needs {base.m} entries", w)
            i, j, s = (_int(v, w) for v in row[1:4])
            cell = per.setdefault(e, {}).setdefault((i, j), {})
            cell[s] = cell.get(s, 0) + q(row[4], w)
        lifts.append(per)
    return cover, base, lifts


def dump_family_data(cover, base, lifts) -> dict:
    rows = []
    for per in lifts:
        out = []
        for e in sorted(per):
            for (i, j) in sorted(per[e]):
                out.extend([list(e), i, j, s, q_out(c)] for s, c in sorted(per[e][(i, j)].items()) if c)
        rows.append(out)
    return {"kind": "family", "cover": dump_cover(cover), "base": {"m": base.m, "D": base.D}, "lifts": rows}


LOADERS = {
    "dgla": (load_dgla, dump_dgla),
    "cone": (load_cone, dump_cone),
    "algebroid": (load_algebroid, dump_algebroid),
    "cover": (load_cover, dump_cover),
    "family": (load_family_data, lambda data: dump_family_data(*data)),
}


def parse_text(text: str):
    """Parse a document; returns ``(kind, object)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, f"line {e.lineno}, column {e.colno}") from None
    kind = _get(doc, "kind", "$")
    if kind not in LOADERS:
        raise ParseError(f"unknown kind {kind!r}", "$.kind")
    return kind, LOADERS[kind][0](doc)


def serialize(kind: str, obj) -> dict:
    return LOADERS[kind][1](obj)


# ----------------------------------------------------------------------------
# bundled examples


def example_names() -> list:
    return sorted(p.name[:-5] for p in resources.files("dgdeform.data").iterdir() if p.name.endswith(".json"))


def example_text(name: str) -> str:
    return resources.files("dgdeform.data").joinpath(f"{name}.json").read_text()


# ----------------------------------------------------------------------------
# commands


class Report:
    def __init__(self, command: str, params: dict):
        self.command = command
        self.params = params
        self.dims: dict = {}
        self.checks: list = []
        self.lines: list = []
        self.timings: dict = {}

    def check(self, name: str, ok: bool, witness=None):
        entry = {"name": name, "pass": bool(ok)}
        if witness is not None:
            entry["witness"] = witness
        self.checks.append(entry)
        return ok

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)


def _expect(kind, allowed, command):
    if kind not in allowed:
        want = " or ".join(allowed)
        art = "an" if want[0] in "aeiou" else "a"
        raise ParseError(f"command {command!r} needs {art} {want} document, got {kind!r}", "$.kind")


def _labels(g, m):
    return [g.labels[i] for i in m]


def cmd_check(kind, obj, a, rep):
    if kind == "dgla":
        r = check_dgla(obj)
    elif kind == "algebroid":
        r = check_algebroid(obj)
    elif kind == "cover":
        r = check_cover(obj)
    elif kind == "cone":
        rep.check("ideal embedding", True)
        return
    else:
        F = split_family(*obj)
        for name, ok in F.report.items():
            rep.check(name, ok)
        return
    if r.passed:
        rep.check("axioms", True)
    for f in r.failures:
        wit = f[1] if isinstance(f[1], (tuple, list)) else (f[1],)
        rep.check(f[0], False, [str(w) for w in wit])


def cmd_homology(kind, obj, a, rep):
    _expect(kind, ["dgla"], "homology")
    lo, hi = a.window or (0, 3)
    t = lie_homology(obj, a.N, (lo, hi), strict=not a.loose)
    rep.dims["homology"] = {str(i): t.dims[i] for i in range(lo, hi + 1)}
    rep.dims["filtered"] = {str(i): list(t.filtered[i]) for i in range(lo, hi + 1)}
    rep.lines.append("H^Lie dims (" + ",".join(str(t.dims[i]) for i in range(lo, hi + 1)) + ")")


def cmd_ce(kind, obj, a, rep):
    _expect(kind, ["dgla"], "ce")
    r = check_ce(obj, a.N)
    for name in ("d^2 = 0", "coassociative", "cocommutative", "coproduct is a chain map"):
        f = r.first(name)
        rep.check(name, f is None, list(f[1]) if f else None)
    span = a.N * (max(map(abs, obj.degrees), default=0) + 1)
    lo, hi = a.window or (-span, span)
    ce = ce_complex(obj, a.N, (lo, hi), check=False)
    rep.dims["chains"] = {str(p): n for p in range(lo, hi + 1) if (n := len(ce.labels(p)))}


def cmd_mc(kind, obj, a, rep):
    _expect(kind, ["cone"], "mc")
    cm = ConnectingMorphism(obj, a.N)
    res = cm.residual()
    first = next(iter(res), None)
    rep.check("Maurer-Cartan residual of c1 vanishes", not res,
              _labels(obj.X, first) if first is not None else None)
    rep.dims["coalgebra"] = len(cm.A.basis)


def cmd_connecting(kind, obj, a, rep):
    _expect(kind, ["cone"], "connecting")
    cm = ConnectingMorphism(obj, a.N)
    if cm.residual():
        raise NotMaurerCartan("c1 fails the Maurer-Cartan equation")
    bad = check_coalgebra_map(cm.A, cm.c, obj.h)
    rep.check("c is a coalgebra chain map", not bad, _labels(obj.X, bad[0]) if bad else None)
    filtered = all(len(k) <= len(m) for m in cm.U.basis for k in cm.c(m))
    rep.check("c preserves the filtration", filtered)
    rep.check("c is unital", cm.c(()) == {(): 1})


def cmd_envelope(kind, obj, a, rep):
    _expect(kind, ["dgla"], "envelope")
    U = env_truncated(obj, a.N)
    gr = [0] * (a.N + 1)
    for m in U.basis:
        gr[len(m)] += 1
    sym = symmetric_power_dims(obj.degrees, a.N)
    rep.dims["gr"] = gr
    rep.dims["symmetric"] = sym
    rep.check("gr U matches symmetric powers", gr == sym)


def cmd_pbw(kind, obj, a, rep):
    _expect(kind, ["algebroid"], "pbw")
    r = pbw_check(obj, a.N)
    rep.dims["gr"] = r.gr_dims
    rep.dims["symmetric"] = r.sym_dims
    rep.check("PBW", r.holds)
    rep.lines.append(r.summary())


def cmd_ks(kind, obj, a, rep):
    _expect(kind, ["algebroid"], "ks")
    r = ks_exponential(obj, a.n)
    for k in range(a.n + 1):
        rep.check(f"kappa(d^{k}) ~ P_{k}(alpha)", r.cohomologous[k])
        rep.check(f"P_{k} is the exponential series coefficient", r.series_match[k])


def cmd_thom_sullivan(kind, obj, a, rep):
    _expect(kind, ["cover"], "thom-sullivan")
    if not a.D_given:
        a.D = max(obj.size, 1)
    ch, M = rgamma(obj, a.D, a.P)
    N = normalize(ch.module)
    rep.dims["model"] = {f"{n},{q_}": d for (n, q_), d in sorted(M.dims.items())}
    rep.dims["cohomology"] = {str(t): d for t, d in sorted(M.cohomology_dims().items())}
    rep.dims["normalized cohomology"] = {str(t): d for t, d in sorted(N.cohomology_dims().items())}
    rep.check("H(Omega) = H(N)", M.cohomology_dims() == N.cohomology_dims())
    I = M.integration_matrix(N)
    rep.check("integration is a chain map", M.complex.is_chain_map(I, N.complex))
    ok, wit = True, None
    if a.D >= N.bound() + 1:
        for t, slots in sorted(N.slots.items()):
            for k, (p, _q, v) in enumerate(slots):
                tt, w = M.whitney(p, v)
                if I.apply({(tt, i): c for i, c in w.items()}) != {(t, k): 1}:
                    ok, wit = False, [t, k]
                    break
        rep.check("integral of Whitney lift is the identity", ok, wit)
    if ch.module.has_bracket():
        import random

        T = TSDGLA(ch.module, a.D)
        r = T.check(samples=a.samples, rng=random.Random(a.seed))
        rep.check("bracket axioms", r.passed, list(map(str, r.failures[0][1])) if r.failures else None)


def cmd_cech(kind, obj, a, rep):
    _expect(kind, ["cover"], "cech")
    lv = obj.size + 1
    ch = cech_cosimplicial(obj, lv)
    N = normalize(ch.module)
    rep.dims["normalized"] = {str(p): d for p, d in sorted(N.dims_by_level().items())}
    rep.dims["cohomology"] = {str(t): d for t, d in sorted(N.cohomology_dims().items())}
    if not obj.presheaf.graded:
        rep.dims["augmentation quasi-isomorphism"] = augmentation_is_quasi_iso(obj, lv)


def _family(obj, a):
    cover, base, lifts = obj
    F = split_family(cover, base, lifts, a.D)
    a.D = F.model.D
    return F


def cmd_family(kind, obj, a, rep):
    _expect(kind, ["family"], "family")
    F = _family(obj, a)
    for name, ok in F.report.items():
        rep.check(name, ok)
    ks = family_ks(F, a.n)
    rep.dims["kappa1"] = [{str(k): q_out(c) for k, c in sorted(v.items())} for v in ks.kappa1]
    rep.dims["classical"] = [{str(k): q_out(c) for k, c in sorted(v.items())} for v in ks.classical]
    rep.check("kappa1 = -classical class", all(
        k1 == {i: -c for i, c in cl.items()} for k1, cl in zip(ks.kappa1, ks.classical)))
    for I, ok in sorted(ks.symbols.items()):
        rep.check(f"symbol of d^{list(I)} is (-1)^{len(I)} times the product of classical classes", ok)


def cmd_universal(kind, obj, a, rep):
    _expect(kind, ["family"], "universal")
    F = _family(obj, a)
    r = universal_dual_check(F, a.n)
    rep.dims["hypotheses"] = dict(r.hypotheses)
    rep.dims["stages"] = [
        {"n": s.k, "diff": s.diff_dim, "filtered": s.filtered_dim, "rank": s.rank, "symbol rank": s.symbol_rank}
        for s in r.stages
    ]
    if r.hypothesis_failure:
        raise HypothesisFailure("hypotheses fail: " + ", ".join(r.failed))
    for s in r.stages:
        rep.check(f"kappa^<={s.k} bijective", s.bijective,
                  None if s.bijective else {"rank": s.rank, "diff": s.diff_dim, "filtered": s.filtered_dim})


DISPATCH = {
    "check": cmd_check, "homology": cmd_homology, "ce": cmd_ce, "mc": cmd_mc, "envelope": cmd_envelope,
    "connecting": cmd_connecting, "pbw": cmd_pbw, "ks": cmd_ks, "thom-sullivan": cmd_thom_sullivan,
    "cech": cmd_cech, "family": cmd_family, "universal": cmd_universal,
}

HYPOTHESIS = (HypothesisFailure, NotStabilized)
TRUNCATION = (TruncationTooSmall, CapExceeded, DegreeCapExceeded, ValidityExceeded)
REJECTED = (CocycleFailure, InconsistentRestrictions, NotARefinement, NotAnIdeal, NotMaurerCartan, AxiomFailure)


# ----------------------------------------------------------------------------
# output


def _window(s: str) -> tuple:
    try:
        lo, hi = (int(x) for x in s.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("window must be lo:hi") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dgdeform", description="Exact computations with dg Lie algebras, "
                                 "algebroids, covers and families.")
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--input", help="path to a JSON document")
    src.add_argument("--example", help="name of a bundled example (see --list-examples)")
    ap.add_argument("--list-examples", action="store_true")
    ap.add_argument("--command", choices=COMMANDS)
    ap.add_argument("--N", type=int, default=3, help="filtration / truncation order")
    ap.add_argument("--D", type=int, default=None, help="polynomial degree cap for forms")
    ap.add_argument("--P", type=int, default=None, help="stored simplicial level cap")
    ap.add_argument("--n", type=int, default=3, help="order of Kodaira-Spencer maps")
    ap.add_argument("--window", type=_window, default=None, help="degree window lo:hi")
    ap.add_argument("--format", choices=["text", "json"], default="text")
    ap.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    ap.add_argument("--samples", type=int, default=3, help="sample size for sampled checks (0 = all)")
    ap.add_argument("--loose", action="store_true", help="report homology of the truncation without exactness check")
    ap.add_argument("--timings", action="store_true", help="include wall-clock timings (not reproducible)")
    return ap


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    out = [f"command: {doc['command']}"]
    params = doc.get("params", {})
    if params:
        out.append("params: " + ", ".join(f"{k}={params[k]}" for k in sorted(params)))
    if "error" in doc:
        e = doc["error"]
        out.append(f"error ({e['type']}): {e['message']}")
        if e.get("witness") is not None:
            out.append(f"witness: {json.dumps(e['witness'], sort_keys=True)}")
    for k in sorted(doc.get("dims", {})):
        out.append(f"{k}: {json.dumps(doc['dims'][k], sort_keys=True)}")
    for c in doc.get("checks", []):
        line = f"[{'PASS' if c['pass'] else 'FAIL'}] {c['name']}"
        if "witness" in c:
            line += f"  witness={json.dumps(c['witness'], sort_keys=True)}"
        out.append(line)
    out.extend(doc.get("lines", []))
    if "timings" in doc:
        out.append("timings: " + json.dumps(doc["timings"], sort_keys=True))
    return "\n".join(out) + "\n"


def run(argv=None) -> tuple[int, str]:
    """Run one job; returns ``(exit code, rendered report)``."""
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return (EXIT_USAGE if e.code else EXIT_OK), ""
    if a.list_examples:
        return EXIT_OK, "\n".join(example_names()) + "\n"
    if not a.command or not (a.input or a.example):
        return EXIT_USAGE, "need --command and one of --input/--example\n"
    a.D_given = a.D is not None
    params = {"N": a.N, "D": a.D, "P": a.P, "n": a.n, "seed": a.seed,
              "window": f"{a.window[0]}:{a.window[1]}" if a.window else None,
              "input": a.example and f"example:{a.example}" or Path(a.input).name}
    params = {k: v for k, v in params.items() if v is not None}
    rep = Report(a.command, params)
    a.params = params
    doc: dict = {"command": a.command, "params": params}
    code = EXIT_OK
    t0 = time.perf_counter()
    try:
        if a.example:
            if a.example not in example_names():
                raise ParseError(f"no bundled example {a.example!r}", "--example")
            text = example_text(a.example)
        else:
            try:
                text = Path(a.input).read_text()
            except OSError as e:
                raise ParseError(e.strerror or "cannot read", a.input) from None
        kind, obj = parse_text(text)
        rep.timings["parse"] = time.perf_counter() - t0
        DISPATCH[a.command](kind, obj, a, rep)
        if a.D is not None:
            params["D"] = a.D
        if not rep.passed:
            code = EXIT_CHECK
    except ParseError as e:
        code = EXIT_PARSE
        doc["error"] = {"type": "ParseError", "message": str(e), "witness": e.witness}
    except HYPOTHESIS as e:
        code = EXIT_HYPOTHESIS
        doc["error"] = {"type": type(e).__name__, "message": str(e), "witness": None}
    except TRUNCATION as e:
        code = EXIT_TRUNCATION
        doc["error"] = {"type": type(e).__name__, "message": str(e), "witness": None}
    except REJECTED as e:
        code = EXIT_REJECTED
        wit = getattr(e, "witness", None)
        doc["error"] = {"type": type(e).__name__, "message": str(e),
                        "witness": list(wit) if isinstance(wit, tuple) else wit}
    rep.timings["total"] = time.perf_counter() - t0
    doc["dims"] = rep.dims
    doc["checks"] = rep.checks
    if rep.lines:
        doc["lines"] = rep.lines
    if a.timings:
        doc["timings"] = {k: round(v, 4) for k, v in rep.timings.items()}
    return code, render(doc, a.format)


def main(argv=None) -> int:
    code, text = run(argv)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
