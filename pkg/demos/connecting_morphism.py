"""The connecting morphism of an ideal, on the 2-dim algebra [x, y] = y.

The ideal spanned by y gives a cone X; c_1 sends a word of X to h and its
Maurer-Cartan residual must vanish, after which c lifts to a coalgebra map.

Run: python demos/connecting_morphism.py
"""

from dgdeform.dgla import check_coalgebra_map, two_dim_nonabelian
from dgdeform.envelope import ConnectingMorphism, cone_dgla, sub_dgla

g = two_dim_nonabelian()
h, inc = sub_dgla(g, [{1: 1}])
cone = cone_dgla(h, inc, g)
X = cone.X
print("cone generators:", list(zip(X.labels, X.degrees)))

cm = ConnectingMorphism(cone, 3)
for w in [(0,), (1,), (2, 0), (1, 1, 0), (1, 2, 0)]:
    word = " ".join(X.labels[i] for i in w)
    val = {h.labels[k]: str(c) for k, c in cm.c1_word(w).items()}
    print(f"c1({word}) = {val}")

print("MC residual vanishes:", cm.residual() == {})
print("c is a coalgebra chain map:", check_coalgebra_map(cm.A, cm.c, h) == [])
