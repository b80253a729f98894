"""q-exponential densities: moments, and where determinacy switches.

Run:  python3 demos/01_moments_and_determinacy.py
"""
from fractions import Fraction

from qstieltjes import NumericContext, QParam, classify_q_exponential, make_q_exponential, moment_table

q = QParam(Fraction(1, 2))
ctx = NumericContext("float", 256, "1e-30")

# lam = 2 sits exactly on the boundary lam(1-q) = 1
f = make_q_exponential(2, q, ctx)
print("window", f.window.n_lo, "..", f.window.n_hi, " mass", ctx.decimal(f.mass, 20))
table = moment_table(f, 8)
for k in range(9):
    print(f"  m_{k} = {ctx.decimal(table[k], 25):>28}   +- {ctx.decimal(table.certificates[k].bound, 3)}")
# closed form [k]_q! q^{-k(k+1)/2} lam^{-k}: 1, 1, 3, 21, 315, 9765, ...

print()
for lam in (Fraction(1), Fraction(2), Fraction(2001, 1000), Fraction(3)):
    rep = classify_q_exponential(lam, q)
    print(f"lam = {str(lam):>9}: {rep.verdict.value:22} {rep.rationale}")

# the same lam can land on either side when q moves
print()
for qv in (Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)):
    rep = classify_q_exponential(5, QParam(qv))
    print(f"lam = 5, q = {qv}: {rep.verdict.value}")
