"""
Moments and the Hankel matrix
=============================

The weight x^alpha exp(-x - t/x) on (0, inf) has moments that are Bessel K
values.  Two are integrated, the rest follow from a three term recurrence.
"""

import mpmath as mp

from sphankel import PrecisionContext, WeightParams, build_system, compute_moment_table, spot_check_moment
from sphankel.hankel import kernel_diagonal, orthonormality_residual, rayleigh_lower_bound

p = WeightParams("0.5", "1")
ctx = PrecisionContext(256)

# mu_0 .. mu_10 from two quadratures and the recurrence
table = compute_moment_table(p, 10, ctx)
for k in range(0, 11, 2):
    print(f"mu_{k:<2d} = {mp.nstr(table[k], 30)}")

# a high moment by direct quadrature, no recurrence involved
direct = spot_check_moment(p, 10, ctx)
with mp.workprec(256):
    print("relative gap at k=10:", mp.nstr(abs(direct / table[10] - 1), 3))

# H_8 = (mu_{j+k}): Cholesky gives the orthonormal polynomials
sys_ = build_system(p, 8, ctx)
print("max |C H C^T - I| =", mp.nstr(orthonormality_residual(sys_), 3))

# the circle kernel diagonal bounds the smallest eigenvalue from below
print("Rayleigh lower bound:", mp.nstr(rayleigh_lower_bound(kernel_diagonal(sys_)), 15))
