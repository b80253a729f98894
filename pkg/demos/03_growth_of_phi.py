"""Maximum modulus of phi(z) = prod_{j>=1}(1 + z q^j) along r = q^-m.

ln M(r) grows like ln^2 r / (2 ln(1/q)); the deviations from the two
envelopes below settle down as m grows.

Run:  python3 demos/03_growth_of_phi.py
"""
from fractions import Fraction

from qstieltjes import NumericContext, QParam
from qstieltjes.growth import lemma2_lower_bound_check, zeng_envelope_check

q = QParam(Fraction(1, 2))
ctx = NumericContext("float", 256, "1e-30")

z = zeng_envelope_check(q, range(10, 61), ctx)
l2 = lemma2_lower_bound_check(q, range(10, 61), ctx)

print(f"{'m':>3} {'ln M':>14} {'upper envelope dev':>20} {'lower bound dev':>18}")
for i in range(0, len(z.ms), 5):
    print(f"{z.ms[i]:3} {float(z.log_M[i]):14.4f} {float(z.deviations[i]):20.12f} "
          f"{float(l2.deviations[i]):18.12f}")

print("\nspread of envelope deviation, m in [10,35]:", f"{float(z.spread(10, 35)):.3e}")
print("spread of envelope deviation, m in [35,60]:", f"{float(z.spread(35, 60)):.3e}")
print("inf of lower-bound deviation:", f"{float(l2.min_deviation):.6f}")

# CSV for plotting elsewhere; the CLI gives the same with `identities --suite zeng`
print("\n" + "\n".join(z.to_csv().split("\n")[:3]))
