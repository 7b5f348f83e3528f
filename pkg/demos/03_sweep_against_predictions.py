"""
Sweep against the large-N predictions
=====================================

The exact lambda_N next to both asymptotic forms.  The log of the ratio
stays close to 2 at t = 1, while at t = 0 the Szego form closes in.
"""

import mpmath as mp

from sphankel.cli import RunConfig, run_sweep

for alpha, t in (("0", "1"), ("0", "0")):
    rows, errors = run_sweep(RunConfig(alpha=alpha, t=t, n_list=(10, 20, 40, 60), timing=False))
    print(f"alpha={alpha} t={t}")
    for r in rows:
        logs = [mp.nstr(abs(mp.log(mp.mpf(r[c]))), 4) if r[c] else "-" for c in ("ratio_proof", "ratio_theorem")]
        print(f"  N={r['N']:>3}  lambda={r['lambda_exact']}  |log ratio| proof={logs[0]} theorem={logs[1]}")
