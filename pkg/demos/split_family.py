"""A one-parameter family on a two-open cover, from Cech data to universality.

Fiber: two opens meeting in a point, with one section on the overlap, so
H^0 = 0 and H^1 = 1.  The family is glued by x times that section.

Run: python demos/split_family.py
"""

from dgdeform.algebroid import weil_base
from dgdeform.cech import AtomPresheaf, CoverDatum, cech_cohomology, global_lie_homology
from dgdeform.kodaira import family_ks, split_family, universal_dual_check

fs = frozenset
cover = CoverDatum([fs("ac"), fs("bc")], AtomPresheaf([(fs("c"), fs("c"), 0)]))
print("Cech cohomology:", cech_cohomology(cover))

r = global_lie_homology(cover, 4, 2)
print("dim F_n H_0 for n = 0..4:", list(r.filtration.values()))
print("gr_n vs S^n H^1:", list(r.graded.values()), list(r.symmetric.values()))

F = split_family(cover, weil_base(1, 3), [{(0,): {(0, 1): {0: 1}}}])
print("family invariants:", F.report)

ks = family_ks(F, 3)
print("kappa^1 class:", [{k: str(c) for k, c in v.items()} for v in ks.kappa1],
      " classical class:", [{k: str(c) for k, c in v.items()} for v in ks.classical])
print("symbols with sign (-1)^n:", ks.symbols)

rep = universal_dual_check(F, 3)
print("hypotheses:", rep.hypotheses)
for s in rep.stages:
    print(f"  n={s.k}: dim Diff<=n = {s.diff_dim}, dim F_n H_0 = {s.filtered_dim}, rank = {s.rank}, bijective = {s.bijective}")
