"""Lie homology of a few small algebras, with the arity filtration.

Run: python demos/lie_homology_tour.py
"""

from dgdeform.dgla import abelian, heisenberg, lie_homology, sl2, two_dim_nonabelian
from dgdeform.envelope import env_truncated, symmetric_power_dims

algebras = {
    "sl2": sl2(),
    "[x,y]=y": two_dim_nonabelian(),
    "heisenberg": heisenberg(),
    "abelian(3)": abelian(3),
}

for name, g in algebras.items():
    top = g.dim
    t = lie_homology(g, top, (0, top))
    dims = [t.dims[i] for i in range(top + 1)]
    print(f"{name:12s} H_0..H_{top} = {dims}")
    for i in range(top + 1):
        if t.dims[i]:
            # F_k H_i: classes represented by chains of arity <= k
            print(f"{'':12s}   F_k H_{i}: {t.filtered[i]}")

# the enveloping algebra grows like the symmetric algebra
g = sl2()
U = env_truncated(g, 4)
print("gr U(sl2) dims  ", U.graded_dims())
print("S(sl2) dims     ", symmetric_power_dims(g.degrees, 4))
