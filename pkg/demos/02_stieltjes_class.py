"""Build a q-perturbation and a family of densities sharing every q-moment.

Run:  python3 demos/02_stieltjes_class.py
"""
from fractions import Fraction

from qstieltjes import (NumericContext, QParam, equivalent, make_q_exponential, required_precision,
                        verify_class)

q = QParam(Fraction(1, 2))
K = 12
ctx = NumericContext("float", required_precision(K, q), "1e-25")
print("working precision for K =", K, ":", ctx.precision_bits, "bits")

f = make_q_exponential(2, q, ctx)
rep = verify_class(f, K, [-1, Fraction(-1, 2), 0, Fraction(1, 2), 1])
h = rep.perturbation

sn = h.sup_norm
print("sup |h~| =", ctx.decimal(sn.value, 20),
      "(attained)" if sn.attained_index is not None else "(limit, never attained)")

print("\northogonality residuals  sum_j h(q^-j) f(q^-j) q^{-j(k+1)}")
for c in h.orthogonality[::3]:
    print(f"  k={c.k:2}  residual {ctx.decimal(c.residual, 3):>10}  "
          f"max term {ctx.decimal(c.max_term, 3):>10}  product oracle {ctx.decimal(c.product_oracle, 1)}")

print("\nmembers at the lattice point 1 (index 0):")
for m in rep.members:
    print(f"  eps = {str(m.epsilon):>5}:  f_eps(1) = {ctx.decimal(m.handle(0), 20)}")

a, b = rep.members[0].handle, rep.members[-1].handle
print("\neps = -1 vs eps = 1 equivalent on the lattice?", bool(equivalent(a, b)))
print("moment tables agree for k <= %d?" % K, all(bool(c) for c in rep.comparisons))
print("overall:", "PASS" if rep.ok else "FAIL")
