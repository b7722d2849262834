"""Kodaira-Spencer values of a rank-1 toy algebroid against Schur polynomials.

A = O gamma + O e over Q[x]/x^4, with d gamma = a(x) e and [gamma, e] = c(x) e.
kappa(d^n) is compared with P_n(alpha_1, ..., alpha_n), where the P_n come from
exp(sum alpha_p t^p / p!) = sum P_n t^n / n!.

Run: python demos/schur_classes.py
"""

from dgdeform.algebroid import ks_exponential, ks_toy, weil_base
from dgdeform.envelope import schur

base = weil_base(1, 3)
A = ks_toy(base, {(0,): 1, (1,): 2}, {(1,): 1})

for n in range(4):
    # key: multiplicities (n_1, n_2, ...) of alpha_1, alpha_2, ...
    terms = {k: str(v) for k, v in schur(n).items()}
    print(f"P_{n}:", terms)

r = ks_exponential(A, 3)
for n in range(4):
    print(f"n={n}: kappa(d^n) ~ P_n: {r.cohomologous[n]}   P_n = series coefficient: {r.series_match[n]}")
