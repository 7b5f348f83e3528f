"""Certified smallest eigenvalue of a Hankel moment matrix.

The dense matrix is reduced to symmetric tridiagonal form by Householder
similarity transforms, and the smallest eigenvalue is isolated by bisection on
Sturm counts.  The condition number of ``H_N`` grows like ``(2N)!`` so all of
this runs at a precision chosen by :func:`precision_policy`; a result is only
accepted once a run 64 bits richer reproduces it, otherwise precision doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
from mpmath import mpf

from .errors import EscalationCeilingError, PrecisionInsufficientError
from .hankel import HankelSystem, assemble, kernel_diagonal, rayleigh_lower_bound
from .moments import MomentTable, WeightParams, compute_moment_table
from .numerics import Interval, PrecisionContext

__all__ = [
    "TridiagonalForm",
    "EigenCertificate",
    "tridiagonalize",
    "sturm_count",
    "smallest_eigenvalue",
    "precision_policy",
    "CERT_REL_WIDTH_BITS",
    "DEFAULT_MAX_BITS",
]

CERT_REL_WIDTH_BITS = 48
CHECK_EXTRA_BITS = 64
DEFAULT_MAX_BITS = 1 << 15


@dataclass(frozen=True)
class TridiagonalForm:
    """Symmetric tridiagonal matrix: ``diag`` a_0..a_N, ``offdiag`` b_1..b_N."""

    diag: tuple
    offdiag: tuple
    bits: int

    @property
    def order(self):
        return len(self.diag)


@dataclass(frozen=True)
class EigenCertificate:
    lambda_min: mpf
    enclosure: Interval
    bits_used: int
    escalations: int


def precision_policy(N: int, p: WeightParams) -> int:
    """Working bits for ``H_N``.

    ``128 + ceil(2(N+1) log2(2N+alpha+2)) + ceil(6 sqrt(N+1))``: the middle term
    follows ``log2 mu_{2N}`` (the largest eigenvalue), the last the decay of the
    smallest one.  Escalation covers any shortfall.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    alpha = float(p.alpha)
    return 128 + math.ceil(2 * (N + 1) * math.log2(2 * N + alpha + 2)) + math.ceil(6 * math.sqrt(N + 1))


def tridiagonalize(sys: HankelSystem, ctx: PrecisionContext | None = None) -> TridiagonalForm:
    """Householder reduction of ``H_N`` to a similar symmetric tridiagonal matrix."""
    bits = sys.bits if ctx is None else ctx.bits
    n = sys.N + 1
    with mp.workprec(bits):
        A = [[+v for v in row] for row in sys.dense()]
        off = []
        for k in range(n - 2):
            x = [A[i][k] for i in range(k + 1, n)]
            norm = mp.sqrt(mp.fdot(x, x))
            if norm == 0:
                off.append(mpf(0))
                continue
            alpha = -norm if x[0] > 0 else norm
            v = list(x)
            v[0] -= alpha
            vv = mp.fdot(v, v)
            m = n - k - 1
            S = [row[k + 1 :] for row in A[k + 1 :]]
            p = [2 * mp.fdot(S[i], v) / vv for i in range(m)]
            K = mp.fdot(p, v) / vv
            q = [p[i] - K * v[i] for i in range(m)]
            for i in range(m):
                vi, qi = v[i], q[i]
                row = A[k + 1 + i]
                for j in range(i + 1):
                    row[k + 1 + j] -= vi * q[j] + qi * v[j]
            for i in range(m):
                for j in range(i + 1, m):
                    A[k + 1 + i][k + 1 + j] = A[k + 1 + j][k + 1 + i]
            off.append(alpha)
        if n >= 2:
            off.append(A[n - 1][n - 2])
        diag = tuple(A[i][i] for i in range(n))
    return TridiagonalForm(diag, tuple(off), bits)


def sturm_count(T: TridiagonalForm, x) -> int:
    """Number of eigenvalues of ``T`` strictly below ``x`` (negative LDL^T pivots)."""
    with mp.workprec(T.bits):
        x = mpf(x)
        tiny = mp.ldexp(mpf(1), -T.bits)
        count = 0
        d = T.diag[0] - x
        for i in range(len(T.diag)):
            if i:
                d = (T.diag[i] - x) - T.offdiag[i - 1] ** 2 / d
            if d == 0:
                # shift off an exact eigenvalue by one ulp of the local scale
                d = tiny * (abs(T.diag[i]) + abs(x) + (abs(T.offdiag[i - 1]) if i else 0))
            if d < 0:
                count += 1
        return count


def _bisect(T: TridiagonalForm, lo, hi, rel_bits):
    with mp.workprec(T.bits):
        target = mp.ldexp(mpf(1), -rel_bits)
        while hi - lo > target * lo:
            mid = mp.sqrt(lo * hi) if lo > 0 and hi > 2 * lo else (lo + hi) / 2
            if mid <= lo or mid >= hi:
                break
            if sturm_count(T, mid) >= 1:
                hi = mid
            else:
                lo = mid
        return lo, hi


def _single_run(sys: HankelSystem):
    """Enclose the smallest eigenvalue at ``sys.bits``; None if the run is unusable."""
    T = tridiagonalize(sys)
    bound = rayleigh_lower_bound(kernel_diagonal(sys))
    with mp.workprec(sys.bits):
        lo = max(mpf(0), bound * (1 - mp.ldexp(mpf(1), -8)))
        hi = min(T.diag)
        if sturm_count(T, lo) != 0:
            return None
        bump = 0
        while sturm_count(T, hi) == 0:
            # lambda_min == min(diag) to working accuracy
            hi = hi * (1 + mp.ldexp(mpf(1), -(sys.bits // 2) + bump))
            bump += 4
            if bump > sys.bits // 2:
                return None
        # bisect well past the certificate width; run-to-run agreement decides what is trusted
        lo, hi = _bisect(T, lo, hi, max(CERT_REL_WIDTH_BITS, sys.bits // 2))
        return (lo + hi) / 2, lo, hi, bound


def smallest_eigenvalue(
    sys: HankelSystem,
    ctx: PrecisionContext | None = None,
    *,
    moments: MomentTable | None = None,
    max_bits: int = DEFAULT_MAX_BITS,
) -> EigenCertificate:
    """Smallest eigenvalue of ``H_N`` with a relative enclosure of ``2**-48``.

    Bisection runs on ``[max(0, bound (1 - 2**-8)), min diag T]`` where ``bound``
    is the Rayleigh lower bound, down to a relative width of
    ``2**-max(48, bits/2)``.  The whole computation, moments included, is
    repeated 64 bits higher.  The enclosure is the union of both runs'
    brackets; if it is wider than ``2**-48`` relative, precision doubles and
    both runs are redone.  ``lambda_min`` is the higher precision midpoint.

    Parameters
    ----------
    sys : HankelSystem
        Supplies the weight parameters, ``N`` and the first run's factorisation.
    ctx : PrecisionContext, optional
        Starting precision; defaults to ``sys.bits``.
    moments : MomentTable, optional
        A higher precision table to round from instead of recomputing moments.
    max_bits : int
        Escalation ceiling.

    Raises
    ------
    EscalationCeilingError
        When agreement needs more than ``max_bits``.
    """
    bits = sys.bits if ctx is None else ctx.bits
    escalations = 0
    history = []

    def system_at(b):
        if b == sys.bits:
            return sys
        K = max(2 * sys.N, 2)
        if moments is not None and moments.bits >= b and moments.K >= 2 * sys.N:
            table = moments.restrict(b, K)
        else:
            table = compute_moment_table(sys.params, K, PrecisionContext(b))
        return assemble(table, sys.N)

    while True:
        runs = []
        for b in (bits, bits + CHECK_EXTRA_BITS):
            try:
                runs.append(_single_run(system_at(b)))
            except PrecisionInsufficientError:
                runs.append(None)
        history.append((bits, [r[0] if r else None for r in runs]))
        if all(runs):
            (_, lo1, hi1, _), (l2, lo2, hi2, _) = runs
            with mp.workprec(bits + CHECK_EXTRA_BITS):
                # the enclosure covers both runs, so its width measures their disagreement
                lo, hi = min(lo1, lo2), max(hi1, hi2)
                if hi - lo <= mp.ldexp(l2, -CERT_REL_WIDTH_BITS):
                    return EigenCertificate(l2, Interval(lo, hi), bits, escalations)
        if 2 * bits + CHECK_EXTRA_BITS > max_bits:
            raise EscalationCeilingError(
                f"no agreement for N={sys.N} below {max_bits} bits",
                {"N": sys.N, "history": history},
            )
        bits *= 2
        escalations += 1
