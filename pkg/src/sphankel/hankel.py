"""Hankel matrix of moments, its Cholesky factor and the orthonormal polynomials.

With ``H = L L^T`` the rows of ``C = L^{-1}`` are the coefficient vectors of the
orthonormal polynomials: ``C H C^T = I`` and ``C`` is lower triangular with a
positive diagonal.  From ``C`` we get the circle kernel

    K_jk = int_{-pi}^{pi} P_j(e^{i phi}) P_k(e^{-i phi}) d phi = 2 pi sum_m c_jm c_km

and the lower bound ``lambda_min >= 2 pi / sum_k K_kk = 1 / trace(H^{-1})``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import mpmath as mp
from mpmath import mpf

from .errors import DomainError, PrecisionInsufficientError
from .moments import MomentTable, WeightParams, compute_moment_table
from .numerics import PrecisionContext, decimal_digits, to_decimal_string

__all__ = [
    "HankelSystem",
    "KernelDiagonal",
    "assemble",
    "build_system",
    "orthonormal_coeffs",
    "kernel_diagonal",
    "kernel_diagonal_circle",
    "kernel_matrix",
    "rayleigh_lower_bound",
    "evaluate_orthonormal",
    "orthonormality_residual",
    "dump_coefficients_json",
]

# a pivot below this many ulps of its diagonal entry is rounding noise
PIVOT_NOISE_ULPS = 2**8


@dataclass(frozen=True)
class HankelSystem:
    """``H_N = (mu_{j+k})_{j,k=0..N}`` with its factorisation.

    The matrix is kept as its defining moments; :meth:`dense` materialises it.
    """

    params: WeightParams
    N: int
    moments: MomentTable
    bits: int
    cholesky: tuple
    poly_coeffs: tuple

    @property
    def order(self) -> int:
        return self.N + 1

    def entry(self, j, k):
        return self.moments[j + k]

    def dense(self):
        n = self.N + 1
        return [[self.moments[j + k] for k in range(n)] for j in range(n)]


@dataclass(frozen=True)
class KernelDiagonal:
    kvals: tuple
    bits: int = 53

    def __post_init__(self):
        if any(not k > 0 for k in self.kvals):
            raise DomainError("kernel diagonal entries must be positive")


def _cholesky(moments: MomentTable, N: int, bits: int):
    n = N + 1
    noise = mp.ldexp(mpf(PIVOT_NOISE_ULPS), -bits)
    L = [[mpf(0)] * (i + 1) for i in range(n)]
    for i in range(n):
        for j in range(i + 1):
            s = moments[i + j] - mp.fdot(L[i][:j], L[j][:j])
            if i == j:
                if not s > noise * moments[2 * i]:
                    raise PrecisionInsufficientError(
                        f"Cholesky pivot {i} is {mp.nstr(s, 5)} "
                        f"(diagonal {mp.nstr(moments[2 * i], 5)}) at {bits} bits",
                        i,
                        s,
                    )
                L[i][i] = mp.sqrt(s)
            else:
                L[i][j] = s / L[j][j]
    return L


def _inverse_lower(L):
    n = len(L)
    C = [[mpf(0)] * (i + 1) for i in range(n)]
    for k in range(n):
        inv = 1 / L[k][k]
        C[k][k] = inv
        for j in range(k):
            # row k of L times column j of C, restricted to the nonzero band
            s = mp.fdot([L[k][m] for m in range(j, k)], [C[m][j] for m in range(j, k)])
            C[k][j] = -s * inv
    return C


def assemble(moments: MomentTable, N: int, ctx: PrecisionContext | None = None) -> HankelSystem:
    """Factor ``H_N`` built from ``moments`` at ``ctx.bits`` (default: table bits).

    Raises
    ------
    PrecisionInsufficientError
        If a Cholesky pivot is non-positive or indistinguishable from rounding
        noise; the exception carries the pivot index and value.
    """
    if N < 0:
        raise DomainError("N must be >= 0")
    if moments.K < 2 * N:
        raise DomainError(f"need moments up to index {2 * N}, table has K={moments.K}")
    bits = moments.bits if ctx is None else ctx.bits
    with mp.workprec(bits):
        L = _cholesky(moments, N, bits)
        C = _inverse_lower(L)
    return HankelSystem(
        moments.params,
        N,
        moments,
        bits,
        tuple(tuple(r) for r in L),
        tuple(tuple(r) for r in C),
    )


def build_system(params: WeightParams, N: int, ctx: PrecisionContext) -> HankelSystem:
    """Compute moments and factor ``H_N`` in one go."""
    table = compute_moment_table(params, max(2 * N, 2), ctx)
    return assemble(table, N, ctx)


def orthonormal_coeffs(sys: HankelSystem):
    """Triangular array ``c[k][j]``: coefficient of ``z**j`` in the k-th orthonormal polynomial."""
    return sys.poly_coeffs


def evaluate_orthonormal(sys: HankelSystem, k: int, z):
    """Horner evaluation of the k-th orthonormal polynomial at real or complex ``z``."""
    with mp.workprec(sys.bits):
        acc = mpf(0)
        for c in reversed(sys.poly_coeffs[k]):
            acc = acc * z + c
        return acc


def orthonormality_residual(sys: HankelSystem) -> mpf:
    """``max |C H C^T - I|`` computed by direct multiplication."""
    n = sys.N + 1
    C = sys.poly_coeffs
    with mp.workprec(sys.bits):
        # G = C H, row by row
        G = [
            [mp.fdot(C[k], [sys.moments[j + s] for j in range(k + 1)]) for s in range(n)]
            for k in range(n)
        ]
        worst = mpf(0)
        for k in range(n):
            for m in range(k + 1):
                v = mp.fdot(G[k][: m + 1], C[m])
                worst = max(worst, abs(v - (1 if k == m else 0)))
        return worst


def kernel_diagonal(sys: HankelSystem) -> KernelDiagonal:
    """``K_kk = 2 pi sum_j c_kj**2`` (Parseval on the unit circle)."""
    with mp.workprec(sys.bits):
        two_pi = 2 * mp.pi
        return KernelDiagonal(tuple(two_pi * mp.fdot(row, row) for row in sys.poly_coeffs), sys.bits)


def _circle_values(sys: HankelSystem, nodes: int):
    # P_k(e^{i phi_m}) for all k, m by Horner on each node
    phis = [2 * mp.pi * m / nodes for m in range(nodes)]
    zs = [mp.expj(p) for p in phis]
    vals = []
    for row in sys.poly_coeffs:
        out = []
        for z in zs:
            acc = mp.mpc(0)
            for c in reversed(row):
                acc = acc * z + c
            out.append(acc)
        vals.append(out)
    return vals


def kernel_matrix(sys: HankelSystem, *, indices=None, route: str = "circle"):
    """Circle kernel ``K_jk`` for ``j, k`` in ``indices`` (default: all ``0..N``).

    ``route="circle"`` integrates ``P_j(e^{i phi}) P_k(e^{-i phi})`` with the
    trapezoidal rule on ``8(N+1)`` nodes, exact for trigonometric polynomials of
    this degree.  ``route="parseval"`` uses ``2 pi sum_m c_jm c_km``.
    Returns a dict keyed by ``(j, k)``.
    """
    idx = list(range(sys.N + 1)) if indices is None else list(indices)
    out = {}
    with mp.workprec(sys.bits):
        if route == "parseval":
            C = sys.poly_coeffs
            for j in idx:
                for k in idx:
                    m = min(j, k) + 1
                    out[j, k] = 2 * mp.pi * mp.fdot(C[j][:m], C[k][:m])
            return out
        if route != "circle":
            raise ValueError(f"unknown route {route!r}")
        nodes = 8 * (sys.N + 1)
        vals = _circle_values(sys, nodes)
        w = 2 * mp.pi / nodes
        for j in idx:
            for k in idx:
                # P_k has real coefficients, so P_k(e^{-i phi}) = conj(P_k(e^{i phi}))
                s = mp.fsum(vals[j][m] * mp.conj(vals[k][m]) for m in range(nodes))
                out[j, k] = w * s.real
        return out


def kernel_diagonal_circle(sys: HankelSystem) -> KernelDiagonal:
    """Kernel diagonal by circle quadrature; independent of :func:`kernel_diagonal`."""
    nodes = 8 * (sys.N + 1)
    with mp.workprec(sys.bits):
        vals = _circle_values(sys, nodes)
        w = 2 * mp.pi / nodes
        return KernelDiagonal(tuple(w * mp.fsum(abs(v) ** 2 for v in row) for row in vals), sys.bits)


def rayleigh_lower_bound(kd: KernelDiagonal) -> mpf:
    """``2 pi / sum_k K_kk``, a lower bound for the smallest eigenvalue."""
    with mp.workprec(kd.bits):
        return 2 * mp.pi / mp.fsum(kd.kvals)


def dump_coefficients_json(sys: HankelSystem) -> str:
    """Coefficient triangle and kernel diagonal as decimal strings."""
    digits = decimal_digits(sys.bits)
    kd = kernel_diagonal(sys)
    a, t = sys.params.label()
    doc = {
        "alpha": a,
        "t": t,
        "N": sys.N,
        "bits": sys.bits,
        "coefficients": [[to_decimal_string(c, digits) for c in row] for row in sys.poly_coeffs],
        "kernel_diagonal": [to_decimal_string(k, digits) for k in kd.kvals],
    }
    return json.dumps(doc, indent=1) + "\n"
