"""
Certified smallest eigenvalue
=============================

H_N is ill conditioned like (2N)!, so the eigenvalue is computed at a
precision that grows with N and accepted only when a richer run agrees.
"""

import mpmath as mp

from sphankel import PrecisionContext, WeightParams, build_system, precision_policy, smallest_eigenvalue

p = WeightParams(0, 1)

for N in (5, 10, 20, 40):
    bits = precision_policy(N, p)
    cert = smallest_eigenvalue(build_system(p, N, PrecisionContext(bits)))
    lo, hi = cert.enclosure.lo, cert.enclosure.hi
    with mp.workprec(bits):
        width = (hi - lo) / cert.lambda_min
    print(f"N={N:3d}  bits={bits:4d}  lambda={mp.nstr(cert.lambda_min, 17)}  rel width={mp.nstr(width, 2)}")

# the 2x2 Hilbert-like case at t = 0 has lambda = (3 - sqrt 5)/2
cert = smallest_eigenvalue(build_system(WeightParams(0, 0), 1, PrecisionContext(200)))
with mp.workprec(200):
    print("t=0, N=1:", mp.nstr(cert.lambda_min, 30), "vs", mp.nstr((3 - mp.sqrt(5)) / 2, 30))
