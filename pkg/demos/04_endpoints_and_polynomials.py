"""
Endpoints and polynomial asymptotics
====================================

The support [a_N, b_N] of the equilibrium measure solves a pair of
algebraic equations.  The truncated expansion tracks it, and the full
outer asymptotic form tracks P_N left of the support.
"""

import mpmath as mp

from sphankel import PrecisionContext, WeightParams, build_system, precision_policy
from sphankel.asymptotics import endpoint_expansion, kernel_window_check, pn_full, pn_simplified, solve_endpoints_exact
from sphankel.hankel import evaluate_orthonormal

ctx = PrecisionContext(192)
p = WeightParams(0, 1)

# exact endpoints against the expansion
for N in (10, 100, 1000, 10000):
    ep = solve_endpoints_exact(p, N, ctx)
    e = endpoint_expansion(p, N, ctx=ctx)
    print(f"N={N:6d}  a={mp.nstr(ep.a, 10)}  expansion={mp.nstr(e.a_N, 10)}  b={mp.nstr(ep.b, 12)}")

# P_N(-1): exact, full outer form, simplified form
for N in (10, 20, 40):
    s = build_system(p, N, PrecisionContext(precision_policy(N, p)))
    ep = solve_endpoints_exact(p, N)
    with mp.workprec(256):
        exact = evaluate_orthonormal(s, N, -1)
        print(
            f"N={N:3d}  exact/full={mp.nstr(exact / pn_full(-1, p, N, ep), 6)}  "
            f"exact/simplified={mp.nstr(exact / pn_simplified(-1, p, N, ep), 6)}"
        )

# circle kernel on the top window N - sqrt(N) .. N
s = build_system(p, 40, PrecisionContext(precision_policy(40, p)))
rep = kernel_window_check(s)
print("window", rep["indices"][0], "..", rep["indices"][-1], "sign ok:", rep["sign_ok"], "min ratio:", mp.nstr(rep["min_ratio"], 5))
