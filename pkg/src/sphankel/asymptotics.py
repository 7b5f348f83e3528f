"""Large-N predictions: Coulomb-fluid endpoints, polynomial and eigenvalue asymptotics.

The equilibrium support ``[a, b]`` of the charge density in the potential
``v(x) = x - alpha log x + t/x`` is fixed by

    (a + b)/2 - t/sqrt(ab) - alpha = 2N
    1 - t (a + b) / (2 (ab)^{3/2}) - alpha/sqrt(ab) = 0

and everything else (the orthonormal polynomial at ``z < a``, the smallest
eigenvalue, the circle kernel near the top of the spectrum) is written in
terms of ``a``, ``b``, ``N``, ``alpha`` and ``t``.

Every evaluator here is restricted to real arguments left of the support,
where all radicals take their positive real value once ``sqrt(z - a)`` is
continued through the upper half plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp
from mpmath import mpf

from .errors import DomainError, HardEdgeError
from .moments import WeightParams
from .numerics import EndpointPair, PrecisionContext, newton_solve_2d, to_mpf

__all__ = [
    "EndpointExpansion",
    "LambdaPrediction",
    "ScaledVariable",
    "VARIANTS",
    "endpoint_system",
    "endpoint_residuals",
    "endpoints_t0_closed",
    "solve_endpoints_exact",
    "endpoint_expansion",
    "pn_full",
    "pn_simplified",
    "perron",
    "lambda_prediction",
    "kernel_diag_asymptotic",
    "kernel_window",
    "kernel_window_check",
]

VARIANTS = ("proof", "theorem", "t0-alpha", "t0-szego")

# evaluators are cheap; 128 bits keeps e^{-4 sqrt N} far from underflow worries
_DEFAULT_CTX = PrecisionContext(128)


@dataclass(frozen=True)
class EndpointExpansion:
    """Truncated large-N series for the support endpoints."""

    a_N: mpf
    b_N: mpf
    order_used: int
    includes_quartic_a_term: bool


@dataclass(frozen=True)
class LambdaPrediction:
    value: mpf
    variant: str

    def __post_init__(self):
        if not self.value > 0:
            raise DomainError(f"prediction must be positive, got {self.value}")


@dataclass(frozen=True)
class ScaledVariable:
    """``eta = -z/(b - a)``, the natural small parameter left of the support."""

    eta: mpf
    z: mpf

    @classmethod
    def from_z(cls, z, endpoints: EndpointPair):
        z = to_mpf(z)
        return cls(-z / (endpoints.b - endpoints.a), z)


def _ctx(ctx):
    return _DEFAULT_CTX if ctx is None else ctx


# ---------------------------------------------------------------------------
# Endpoints
# ---------------------------------------------------------------------------


def endpoint_system(p: WeightParams, N: int):
    """Residual map and analytic Jacobian of the endpoint equations in ``(a, b)``."""
    alpha, t = p.alpha_mpf, p.t_mpf
    n2 = 2 * N

    def F(a, b):
        g = mp.sqrt(a * b)
        return (
            (a + b) / 2 - t / g - alpha - n2,
            1 - t * (a + b) / (2 * g**3) - alpha / g,
        )

    def J(a, b):
        g = mp.sqrt(a * b)
        g3 = g**3
        s = a + b
        return (
            (mpf(1) / 2 + t / (2 * a * g), mpf(1) / 2 + t / (2 * b * g)),
            (
                (-t / 2 + 3 * t * s / (4 * a) + alpha * b / 2) / g3,
                (-t / 2 + 3 * t * s / (4 * b) + alpha * a / 2) / g3,
            ),
        )

    return F, J


def endpoint_residuals(p: WeightParams, N: int, a, b, ctx: PrecisionContext | None = None):
    """Both endpoint-equation residuals at ``(a, b)``; the first is divided by ``2N + alpha``."""
    with mp.workprec(_ctx(ctx).bits):
        F, _ = endpoint_system(p, N)
        r1, r2 = F(to_mpf(a), to_mpf(b))
        return r1 / (2 * N + p.alpha_mpf), r2


def endpoints_t0_closed(p: WeightParams, N: int, ctx: PrecisionContext | None = None) -> EndpointPair:
    """At ``t = 0`` the system collapses to ``a + b = 4N + 2 alpha``, ``ab = alpha**2``."""
    if p.t != 0:
        raise DomainError("closed form needs t = 0")
    if p.alpha == 0:
        raise HardEdgeError("t = 0 and alpha = 0: a = 0, b = 4N")
    if p.alpha < 0:
        raise DomainError("t = 0 needs alpha > 0 for an interior support")
    with mp.workprec(_ctx(ctx).bits):
        alpha = p.alpha_mpf
        half = 2 * N + alpha
        root = mp.sqrt(half**2 - alpha**2)
        # a = alpha^2 / (half + root) avoids cancellation in half - root
        return EndpointPair(alpha**2 / (half + root), half + root)


def solve_endpoints_exact(p: WeightParams, N: int, ctx: PrecisionContext | None = None) -> EndpointPair:
    """Newton solution of the endpoint equations, started from :func:`endpoint_expansion`.

    Raises
    ------
    HardEdgeError
        For ``t = 0, alpha = 0`` (then ``a = 0`` and ``b = 4N``).
    DomainError
        For ``N < 1`` or ``t = 0`` with ``alpha < 0``.
    NewtonError
        If the iteration fails.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if p.t == 0 and p.alpha == 0:
        raise HardEdgeError("t = 0 and alpha = 0: a = 0, b = 4N")
    if p.t == 0 and p.alpha < 0:
        raise DomainError("t = 0 needs alpha > 0 for an interior support")
    ctx = _ctx(ctx)
    with mp.workprec(ctx.bits):
        if p.t == 0:
            # the printed expansion's alpha^2/6 is a poor start here; use alpha^2/(2(2N+alpha))
            s = 2 * N + p.alpha_mpf
            start = (p.alpha_mpf**2 / (2 * s), 2 * s)
        else:
            e = endpoint_expansion(p, N, include_quartic=False, ctx=ctx)
            start = (e.a_N, e.b_N)
        F, J = endpoint_system(p, N)
        a, b = newton_solve_2d(F, J, start, ctx, scale=(2 * N + abs(p.alpha_mpf) + 1, 1))
    return EndpointPair(a, b)


def endpoint_expansion(
    p: WeightParams, N: int, include_quartic: bool = False, ctx: PrecisionContext | None = None
) -> EndpointExpansion:
    """Truncated series for ``a_N`` and ``b_N`` with ``s = 2N + alpha``.

    ``a_N = t^{2/3}/(2 s^{1/3}) + alpha t^{1/3}/(3 s^{2/3}) + alpha^2/(6 s)``
    ``[+ 5 alpha^3/(81 t^{1/3} s^{4/3})]`` and
    ``b_N = 2 s + 3 t^{2/3}/(2 s^{1/3}) - alpha t^{1/3}/s^{2/3} - alpha^2/(6 s)``.
    """
    if include_quartic and p.t == 0:
        raise DomainError("the quartic a-term divides by t^(1/3); needs t > 0")
    with mp.workprec(_ctx(ctx).bits):
        alpha, t = p.alpha_mpf, p.t_mpf
        s = 2 * N + alpha
        if not s > 0:
            raise DomainError("need 2N + alpha > 0")
        t13 = mp.cbrt(t)
        t23 = t13**2
        s13 = mp.cbrt(s)
        a = t23 / (2 * s13) + alpha * t13 / (3 * s13**2) + alpha**2 / (6 * s)
        if include_quartic:
            a += 5 * alpha**3 / (81 * t13 * s13**4)
        b = 2 * s + 3 * t23 / (2 * s13) - alpha * t13 / s13**2 - alpha**2 / (6 * s)
    return EndpointExpansion(a, b, 4 if include_quartic else 3, bool(include_quartic))


# ---------------------------------------------------------------------------
# Orthonormal polynomial asymptotics
# ---------------------------------------------------------------------------


def pn_full(z, p: WeightParams, N: int, endpoints: EndpointPair, ctx: PrecisionContext | None = None) -> mpf:
    """Uniform large-N form of the orthonormal polynomial at real ``z < a``.

    With ``ra = sqrt(a - z)``, ``rb = sqrt(b - z)`` and ``S = -ra rb`` (the
    value of ``sqrt((z-a)(z-b))`` continued from ``z > b``)::

        (-1)^N / sqrt(2 pi (b-a)) * ((ra + rb)/sqrt(b-a))^{2N}
          * [r^{1/4} + r^{-1/4}],   r = (b-z)/(a-z)
          * exp(-alpha/2 log[(2ab - (a+b)z + 2 sqrt(ab) ra rb) / (ra+rb)^2])
          * exp(t/(2z) + t S/(2z sqrt(ab)) + z/2 - S/2)

    The ``t`` terms are dropped when ``t = 0`` (their limit is zero even on the
    hard edge, where ``sqrt(ab) = 0``).
    """
    with mp.workprec(_ctx(ctx).bits):
        z = to_mpf(z)
        a, b = to_mpf(endpoints.a), to_mpf(endpoints.b)
        if not z < a:
            raise DomainError(f"pn_full needs z < a = {mp.nstr(a, 8)}, got z = {mp.nstr(z, 8)}")
        alpha, t = p.alpha_mpf, p.t_mpf
        ra, rb = mp.sqrt(a - z), mp.sqrt(b - z)
        S = -ra * rb
        gab = mp.sqrt(a * b)
        sign = -1 if N % 2 else 1
        val = sign / mp.sqrt(2 * mp.pi * (b - a)) * ((ra + rb) / mp.sqrt(b - a)) ** (2 * N)
        r = (b - z) / (a - z)
        val *= mp.root(r, 4) + 1 / mp.root(r, 4)
        if alpha != 0:
            val *= mp.exp(-alpha / 2 * mp.log((2 * a * b - (a + b) * z + 2 * gab * ra * rb) / (ra + rb) ** 2))
        expo = z / 2 - S / 2
        if t != 0:
            expo += t / (2 * z) + t * S / (2 * z * gab)
        return val * mp.exp(expo)


def pn_simplified(z, p: WeightParams, N: int, endpoints: EndpointPair, ctx: PrecisionContext | None = None) -> mpf:
    """Small-``|z|/(b-a)`` form of the orthonormal polynomial for real ``z < 0``::

        (-1)^N/sqrt(2 pi) (-z)^{-alpha/2-1/4} (b-a)^{-1/4} e^{z/2 + t/(2z)}
          * exp{[(2N+alpha)(b-a)^{-1/2} + (b-a)^{1/2}/2 - (b-a)^{1/2} t/(2z sqrt(ab))] (-z)^{1/2}}
    """
    with mp.workprec(_ctx(ctx).bits):
        z = to_mpf(z)
        if not z < 0:
            raise DomainError(f"pn_simplified needs z < 0, got {z}")
        a, b = to_mpf(endpoints.a), to_mpf(endpoints.b)
        alpha, t = p.alpha_mpf, p.t_mpf
        w = b - a
        sw = mp.sqrt(w)
        sign = -1 if N % 2 else 1
        coef = (2 * N + alpha) / sw + sw / 2
        pre = mp.power(-z, -alpha / 2 - mpf(1) / 4) * mp.power(w, -mpf(1) / 4)
        expo = z / 2
        if t != 0:
            coef -= sw * t / (2 * z * mp.sqrt(a * b))
            expo += t / (2 * z)
        return sign / mp.sqrt(2 * mp.pi) * pre * mp.exp(expo + coef * mp.sqrt(-z))


def perron(z, N: int, ctx: PrecisionContext | None = None) -> mpf:
    """Classical Laguerre (``alpha = t = 0``) asymptotic ``(-1)^N/(2 sqrt pi) (-zN)^{-1/4} e^{z/2 + 2 sqrt(-zN)}``."""
    with mp.workprec(_ctx(ctx).bits):
        z = to_mpf(z)
        if not z < 0:
            raise DomainError("perron needs z < 0")
        sign = -1 if N % 2 else 1
        return sign / (2 * mp.sqrt(mp.pi)) * mp.power(-z * N, -mpf(1) / 4) * mp.exp(z / 2 + 2 * mp.sqrt(-z * N))


# ---------------------------------------------------------------------------
# Smallest eigenvalue and kernel
# ---------------------------------------------------------------------------


def _bracket(p: WeightParams, N: int, a_N, shift):
    alpha, t = p.alpha_mpf, p.t_mpf
    return mp.sqrt(4 * N + 2 * alpha) + t / (2 * mp.sqrt(a_N)) - shift * t


def lambda_prediction(
    p: WeightParams, N: int, variant: str = "proof", ctx: PrecisionContext | None = None
) -> LambdaPrediction:
    """Large-N prediction of the smallest eigenvalue of ``H_N``.

    Variants
    --------
    proof
        ``8 pi^{3/2} [sqrt(4N+2alpha) + t/(2 sqrt a_N) - t/2]^{1/2}
        exp[1 + t - 2 sqrt(4N+2alpha) - t/sqrt(a_N)]``
    theorem
        The same with ``- 2t`` in the bracket.
    t0-alpha
        ``2^{13/4} pi^{3/2} e (2N+alpha)^{1/4} exp[-2^{3/2} sqrt(2N+alpha)]`` (t = 0).
    t0-szego
        ``2^{7/2} pi^{3/2} e N^{1/4} exp[-4 sqrt N]`` (t = 0, alpha = 0 classical case).

    ``a_N`` is the four-term expansion including the ``alpha^3`` correction.
    """
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    if N < 1:
        raise DomainError("N must be >= 1")
    general = variant in ("proof", "theorem")
    if general and p.t == 0:
        raise DomainError(f"variant {variant!r} needs t > 0; use t0-alpha or t0-szego")
    if not general and p.t != 0:
        raise DomainError(f"variant {variant!r} is the t = 0 form")
    with mp.workprec(_ctx(ctx).bits):
        alpha, t = p.alpha_mpf, p.t_mpf
        if variant == "t0-alpha":
            s = 2 * N + alpha
            v = mp.power(2, mpf(13) / 4) * mp.pi**1.5 * mp.e * mp.root(s, 4) * mp.exp(-mp.power(2, 1.5) * mp.sqrt(s))
        elif variant == "t0-szego":
            v = mp.power(2, 3.5) * mp.pi**1.5 * mp.e * mp.root(N, 4) * mp.exp(-4 * mp.sqrt(N))
        else:
            a_N = endpoint_expansion(p, N, include_quartic=True, ctx=ctx).a_N
            br = _bracket(p, N, a_N, mpf(1) / 2 if variant == "proof" else 2)
            if not br > 0:
                raise DomainError(f"bracket is non-positive ({mp.nstr(br, 6)}) for N={N}")
            v = 8 * mp.pi**1.5 * mp.sqrt(br) * mp.exp(1 + t - 2 * mp.sqrt(4 * N + 2 * alpha) - t / mp.sqrt(a_N))
        return LambdaPrediction(v, variant)


def kernel_window(N: int, omega=1):
    """Indices ``mu`` with ``N - omega sqrt(N) <= mu <= N``."""
    lo = mp.ceil(N - omega * mp.sqrt(N))
    return list(range(max(int(lo), 0), N + 1))


def kernel_diag_asymptotic(p: WeightParams, N_total: int, mu: int, omega=1, ctx: PrecisionContext | None = None) -> mpf:
    """Diagonal circle kernel ``K_{mu mu}`` near the top of the spectrum::

        pi^{-1/2} (4N+2alpha)^{-1/2} [sqrt(4N+2alpha) + t/(2 sqrt a_N) - t/2]^{-1/2}
          * e^{-1 - t + t/sqrt(a_N)} exp[2 sqrt(4 mu + 2 alpha)]

    valid for ``mu`` in :func:`kernel_window`.  At ``t = 0`` the ``t`` terms are dropped.
    """
    if mu not in kernel_window(N_total, omega):
        raise DomainError(f"mu={mu} outside [N - omega sqrt N, N] for N={N_total}")
    with mp.workprec(_ctx(ctx).bits):
        alpha, t = p.alpha_mpf, p.t_mpf
        four = 4 * N_total + 2 * alpha
        if t == 0:
            br = mp.sqrt(four)
            tail = mpf(-1)
        else:
            a_N = endpoint_expansion(p, N_total, include_quartic=True, ctx=ctx).a_N
            br = _bracket(p, N_total, a_N, mpf(1) / 2)
            tail = -1 - t + t / mp.sqrt(a_N)
        return mp.exp(tail + 2 * mp.sqrt(4 * mu + 2 * alpha)) / (mp.sqrt(mp.pi * four) * mp.sqrt(br))


def kernel_window_check(sys, omega=1):
    """Compare the exact circle kernel with the rank-one sign pattern on the window.

    Returns a dict with ``indices``, ``sign_ok`` (every ``K_{mu nu}`` has sign
    ``(-1)^{mu+nu}``), ``min_ratio`` (smallest ``|K_{mu nu}| / sqrt(K_mu mu K_nu nu)``)
    and ``diag_ratios`` (exact over asymptotic diagonal for each index).
    """
    from .hankel import kernel_matrix

    idx = kernel_window(sys.N, omega)
    K = kernel_matrix(sys, indices=idx)
    sign_ok = True
    ratios = []
    with mp.workprec(sys.bits):
        for j in idx:
            for k in idx:
                want = 1 if (j + k) % 2 == 0 else -1
                if mp.sign(K[j, k]) != want:
                    sign_ok = False
                if j != k:
                    ratios.append(abs(K[j, k]) / mp.sqrt(K[j, j] * K[k, k]))
        diag = {k: K[k, k] / kernel_diag_asymptotic(sys.params, sys.N, k, omega) for k in idx}
    return {
        "indices": idx,
        "sign_ok": sign_ok,
        "min_ratio": min(ratios) if ratios else mpf(1),
        "diag_ratios": diag,
    }
