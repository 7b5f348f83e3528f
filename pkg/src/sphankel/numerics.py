"""Arbitrary precision plumbing: precision contexts, quadrature, Newton, identities.

Every routine here takes an explicit :class:`PrecisionContext` and performs its
arithmetic inside ``mpmath.workprec`` so callers never have to touch the
global mpmath precision themselves.  Results are returned as ``mpf`` values
rounded to ``ctx.bits``.

Two quadrature engines are provided:

* :func:`integrate_halfline` -- double-exponential (exp-sinh) rule on
  ``(0, inf)`` for integrands with exponential decay and at most an integrable
  algebraic singularity at the origin.
* :func:`integrate_finite_sqrt_weight` -- integrals against the Chebyshev
  kernel ``1/sqrt((b-x)(x-a))``, made periodic by ``x = m + r sin(theta)`` and
  summed with the equispaced trapezoidal rule.

Both certify a result by agreement of two successive refinement levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath as mp
from mpmath import mpf

from .errors import DomainError, NewtonError, QuadratureError

__all__ = [
    "PrecisionContext",
    "Interval",
    "EndpointPair",
    "QuadResult",
    "IdentityReport",
    "IDENTITIES",
    "integrate_halfline",
    "halfline_quadrature",
    "integrate_finite_sqrt_weight",
    "sqrt_weight_quadrature",
    "verify_identity_suite",
    "newton_solve_2d",
    "to_mpf",
    "to_decimal_string",
    "decimal_digits",
]

GUARD_BITS = 32


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision for all multiprecision arithmetic.

    Parameters
    ----------
    bits : int
        Mantissa bits of the binary floating point format (>= 64).
    quad_tolerance_exponent : int, optional
        Quadrature targets a relative error of ``2**-quad_tolerance_exponent``.
        Defaults to ``bits - 32``; must not exceed ``bits - 16``.
    """

    bits: int
    quad_tolerance_exponent: int = None  # type: ignore[assignment]

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 64:
            raise DomainError(f"bits must be an integer >= 64, got {self.bits!r}")
        if self.quad_tolerance_exponent is None:
            object.__setattr__(self, "quad_tolerance_exponent", self.bits - 32)
        q = self.quad_tolerance_exponent
        if int(q) != q or q < 1:
            raise DomainError(f"quad_tolerance_exponent must be a positive integer, got {q!r}")
        if q > self.bits - 16:
            raise DomainError(
                f"quad_tolerance_exponent={q} unreachable at {self.bits} bits (limit bits-16)"
            )

    @property
    def tolerance(self) -> mpf:
        """Target relative error ``2**-quad_tolerance_exponent`` as an mpf."""
        return mp.ldexp(mpf(1), -self.quad_tolerance_exponent)

    def raised(self, extra_bits: int) -> "PrecisionContext":
        """Context with ``extra_bits`` more mantissa and the same tolerance margin."""
        return PrecisionContext(self.bits + extra_bits, self.quad_tolerance_exponent + extra_bits)


@dataclass(frozen=True)
class Interval:
    lo: mpf
    hi: mpf

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self):
        return self.hi - self.lo

    def __contains__(self, x):
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class EndpointPair:
    """Support ``[a, b]`` of an equilibrium density, ``0 < a < b``."""

    a: mpf
    b: mpf

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise DomainError(f"endpoints must satisfy 0 < a < b, got a={self.a}, b={self.b}")


@dataclass
class QuadResult:
    """Outcome of a refinement-certified quadrature.

    ``errors[k]`` is ``|estimates[k] - estimates[k-1]|`` (so ``errors[0]`` is None).
    """

    value: mpf
    error: mpf
    estimates: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    nodes: int = 0
    scale: mpf = None


def to_mpf(x) -> mpf:
    """Convert ints, floats, strings, Fractions or mpf to mpf at current precision.

    Fractions are divided at the working precision, so ``Fraction(7, 10)`` becomes
    the correctly rounded binary value of 0.7 rather than the double ``0.7``.
    """
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    return mpf(x)


def _check_finite_real(v, what):
    if isinstance(v, mp.mpc) or not mp.isfinite(v):
        raise DomainError(f"{what} evaluated to a non-finite or complex value: {v}")
    return v


# ---------------------------------------------------------------------------
# Double-exponential rule on the half line
# ---------------------------------------------------------------------------


def halfline_quadrature(
    f: Callable[[mpf], mpf],
    ctx: PrecisionContext,
    *,
    center=1,
    width=None,
    base_step=0.5,
    max_level: int = 12,
    min_level: int = 2,
) -> QuadResult:
    """Integrate ``f`` over ``(0, inf)`` with the exp-sinh transformation.

    The substitution ``x = center * exp(width * sinh(s))`` maps the half line to
    the real line; the trapezoidal rule in ``s`` then converges geometrically in
    the number of nodes.  ``center`` should sit near the bulk of the integrand
    (for moments, the saddle point) and ``width`` should be comparable to the
    integrand's spread in ``log x``.

    Returns a :class:`QuadResult` with the full refinement history.

    Raises
    ------
    QuadratureError
        If two successive levels have not agreed to the target tolerance by
        ``max_level``.
    """
    prec = ctx.bits + GUARD_BITS
    with mp.workprec(prec):
        c = to_mpf(center)
        w = mp.pi / 2 if width is None else to_mpf(width)
        if not (c > 0 and w > 0):
            raise DomainError("center and width must be positive")
        h0 = to_mpf(base_step)
        tol = ctx.tolerance
        tail_tol = mp.ldexp(tol, -12)
        u_cap = 64 * prec

        def term(s):
            u = w * mp.sinh(s)
            if abs(u) > u_cap:
                return None
            x = c * mp.exp(u)
            try:
                fx = f(x)
            except ZeroDivisionError:
                raise DomainError(f"integrand has a pole at x = {mp.nstr(x, 10)}") from None
            _check_finite_real(fx, "integrand")
            return fx * x * w * mp.cosh(s)

        # walk outward at the coarse step to fix the truncation window
        t0 = term(mpf(0))
        peak = abs(t0)
        level_sum = t0
        limits = []
        for direction in (1, -1):
            j, small = 0, 0
            while True:
                j += 1
                v = term(direction * j * h0)
                if v is None:
                    break
                level_sum += v
                peak = max(peak, abs(v))
                small = small + 1 if abs(v) <= tail_tol * peak else 0
                if small >= 2:
                    break
            limits.append(j)
        j_hi, j_lo = limits
        nodes = 1 + j_hi + j_lo

        estimates = [h0 * level_sum]
        errors = [None]
        total = level_sum
        h = h0
        for level in range(1, max_level + 1):
            h = h / 2
            # new nodes are the odd multiples of h inside the window
            k_hi = 2 ** level * j_hi
            k_lo = 2 ** level * j_lo
            new = mpf(0)
            for k in range(-k_lo + 1, k_hi, 2):
                v = term(k * h)
                if v is not None:
                    new += v
                    nodes += 1
            total += new
            est = h * total
            err = abs(est - estimates[-1])
            estimates.append(est)
            errors.append(err)
            if level >= min_level and err <= tol * abs(est):
                with mp.workprec(ctx.bits):
                    return QuadResult(+est, +err, estimates, errors, nodes)
        raise QuadratureError(
            f"half-line quadrature did not reach 2^-{ctx.quad_tolerance_exponent} "
            f"after {max_level} levels",
            estimates[-2:],
        )


def integrate_halfline(f, ctx, **kwargs) -> mpf:
    """Value of ``int_0^inf f(x) dx``; see :func:`halfline_quadrature`."""
    return halfline_quadrature(f, ctx, **kwargs).value


# ---------------------------------------------------------------------------
# Chebyshev-kernel integrals on [a, b]
# ---------------------------------------------------------------------------


def sqrt_weight_quadrature(
    g: Callable[[mpf], mpf],
    endpoints: EndpointPair,
    ctx: PrecisionContext,
    *,
    initial_nodes: int = 16,
    max_level: int = 14,
) -> QuadResult:
    """Integrate ``g(x) / sqrt((b-x)(x-a))`` over ``[a, b]``.

    With ``x = (a+b)/2 + (b-a)/2 sin(theta)`` the integral becomes half the
    integral of ``g(m + r sin theta)`` over a full period, which the
    equispaced trapezoidal rule integrates with geometric convergence when
    ``g`` is analytic on a neighbourhood of ``[a, b]``.

    Convergence is measured against ``int |g| / sqrt(...)`` so integrals that
    happen to vanish do not stall the refinement.
    """
    if initial_nodes % 4:
        raise ValueError("initial_nodes must be a multiple of 4")
    prec = ctx.bits + GUARD_BITS
    with mp.workprec(prec):
        a, b = to_mpf(endpoints.a), to_mpf(endpoints.b)
        m, r = (a + b) / 2, (b - a) / 2
        tol = ctx.tolerance

        def gval(x):
            try:
                v = g(x)
            except ZeroDivisionError:
                raise DomainError(f"g has a pole at x = {mp.nstr(x, 10)}") from None
            return _check_finite_real(v, "g")

        # theta_j = 2 pi j / M; sin is symmetric about pi/2 so only
        # j in [-M/4, M/4] is needed, interior nodes counted twice
        M = initial_nodes
        ends = gval(a) + gval(b)
        ends_abs = abs(gval(a)) + abs(gval(b))
        inner = mpf(0)
        inner_abs = mpf(0)
        for j in range(-M // 4 + 1, M // 4):
            v = gval(m + r * mp.sin(2 * mp.pi * j / M))
            inner += v
            inner_abs += abs(v)
        nodes = M // 2 + 1

        def estimate(M):
            return mp.pi / M * (ends + 2 * inner), mp.pi / M * (ends_abs + 2 * inner_abs)

        est, scale = estimate(M)
        estimates, errors = [est], [None]
        for _ in range(max_level):
            M *= 2
            for j in range(-M // 4 + 1, M // 4, 2):
                v = gval(m + r * mp.sin(2 * mp.pi * j / M))
                inner += v
                inner_abs += abs(v)
                nodes += 1
            est, scale = estimate(M)
            err = abs(est - estimates[-1])
            estimates.append(est)
            errors.append(err)
            if err <= tol * scale:
                with mp.workprec(ctx.bits):
                    return QuadResult(+est, +err, estimates, errors, nodes, +scale)
        raise QuadratureError(
            f"sqrt-weight quadrature did not reach 2^-{ctx.quad_tolerance_exponent} "
            f"with {M} nodes",
            estimates[-2:],
        )


def integrate_finite_sqrt_weight(g, endpoints, ctx, **kwargs) -> mpf:
    """Value of ``int_a^b g(x) / sqrt((b-x)(x-a)) dx``."""
    return sqrt_weight_quadrature(g, endpoints, ctx, **kwargs).value


# ---------------------------------------------------------------------------
# Appendix identities
# ---------------------------------------------------------------------------


def _pole_branch_sqrt(t, a, b):
    # sqrt((t-a)(t-b)) continued analytically off [a, b]; behaves like t at infinity
    root = mp.sqrt((t - a) * (t - b))
    return root if t > b else -root


def _a5_closed(a, b, t):
    sab = mp.sqrt(a * b)
    num = (sab + mp.sqrt((t + a) * (t + b))) ** 2 - t**2
    return mp.pi / sab * mp.log(num / (mp.sqrt(a) + mp.sqrt(b)) ** 2)


# name -> (integrand g(x; t), closed form F(a, b, t))
IDENTITIES = {
    "A1": (lambda x, t: mpf(1), lambda a, b, t: +mp.pi),
    "A2": (lambda x, t: x, lambda a, b, t: mp.pi * (a + b) / 2),
    "A3": (lambda x, t: 1 / x**2, lambda a, b, t: (a + b) * mp.pi / (2 * (a * b) ** 1.5)),
    "A4": (lambda x, t: 1 / (x + t), lambda a, b, t: mp.pi / mp.sqrt((t + a) * (t + b))),
    "A5": (lambda x, t: mp.log(x + t) / x, _a5_closed),
    "B1": (
        lambda x, t: 1 / (x * (x - t)),
        lambda a, b, t: -mp.pi / t * (1 / mp.sqrt(a * b) + 1 / _pole_branch_sqrt(t, a, b)),
    ),
}


@dataclass
class IdentityReport:
    """Relative residuals |quadrature - closed form| per identity."""

    endpoints: EndpointPair
    t_shift: mpf
    b1_shift: mpf
    residuals: dict
    quadrature: dict
    closed_form: dict
    tolerance: mpf

    @property
    def passed(self) -> bool:
        return all(r <= self.tolerance for r in self.residuals.values())

    def failures(self):
        return [k for k, r in self.residuals.items() if r > self.tolerance]


def verify_identity_suite(endpoints: EndpointPair, t_shift, ctx: PrecisionContext, *, b1_shift=None):
    """Check A1-A5 and B1 by quadrature against their closed forms.

    Parameters
    ----------
    endpoints : EndpointPair
    t_shift : real
        Shift used by A4/A5 (pole at ``-t_shift``, must be > 0) and, unless
        ``b1_shift`` is given, the pole of B1 (must lie outside ``[a, b]``
        and differ from 0).
    b1_shift : real, optional
        Separate pole position for B1, e.g. to place it left of the interval.

    Residuals are ``|Q - C| / max(|C|, S)`` where ``S`` is the trapezoidal sum
    of ``|g|``, which keeps integrals that nearly vanish well posed.
    """
    with mp.workprec(ctx.bits + GUARD_BITS):
        a, b = to_mpf(endpoints.a), to_mpf(endpoints.b)
        t = to_mpf(t_shift)
        tb = t if b1_shift is None else to_mpf(b1_shift)
    if not t > 0:
        raise DomainError(f"A4: t_shift must be > 0 (pole -t_shift left of [a,b]), got {t_shift}")
    if tb == 0 or a <= tb <= b:
        raise DomainError(f"B1: pole {tb} must lie outside [{a}, {b}] and be nonzero")

    shifts = {"A4": t, "A5": t, "B1": tb}
    residuals, quad, closed = {}, {}, {}
    for name, (g, closed_form) in IDENTITIES.items():
        s = shifts.get(name, t)
        res = sqrt_weight_quadrature(lambda x: g(x, s), endpoints, ctx)
        with mp.workprec(ctx.bits + GUARD_BITS):
            c = closed_form(a, b, s)
            scale = max(abs(c), res.scale)
            residuals[name] = abs(res.value - c) / scale
        quad[name], closed[name] = res.value, c
    return IdentityReport(endpoints, t, tb, residuals, quad, closed, ctx.tolerance)


# ---------------------------------------------------------------------------
# Newton iteration in two unknowns
# ---------------------------------------------------------------------------


def newton_solve_2d(F, jacobian, start, ctx: PrecisionContext, *, scale=(1, 1), max_iter=64):
    """Solve ``F(x, y) = 0`` by Newton's method with an analytic Jacobian.

    Parameters
    ----------
    F : callable (x, y) -> (f1, f2)
    jacobian : callable (x, y) -> ((df1/dx, df1/dy), (df2/dx, df2/dy))
    start : (x0, y0)
    scale : (s1, s2)
        Natural magnitudes of the two residual components; convergence means
        ``|f_i| <= 2**-quad_tolerance_exponent * s_i``.

    Returns
    -------
    (x, y) as mpf at ``ctx.bits``.

    Raises
    ------
    NewtonError
        On a singular Jacobian, a non-finite iterate, ``max_iter`` exhaustion,
        or when the final steps fail to shrink quadratically.
    """
    with mp.workprec(ctx.bits + GUARD_BITS):
        x, y = to_mpf(start[0]), to_mpf(start[1])
        s1, s2 = to_mpf(scale[0]), to_mpf(scale[1])
        tol = ctx.tolerance
        noise = mp.ldexp(mpf(1), -(ctx.bits // 2))
        trace = [(x, y)]
        steps = []
        for _ in range(max_iter):
            try:
                f1, f2 = F(x, y)
                if isinstance(f1, mp.mpc) or isinstance(f2, mp.mpc):
                    raise ValueError("complex residual")
            except (ValueError, ZeroDivisionError) as exc:
                raise NewtonError(f"residual undefined at iterate ({x}, {y}): {exc}", trace)
            if not (mp.isfinite(f1) and mp.isfinite(f2)):
                raise NewtonError("non-finite residual", trace)
            if abs(f1) <= tol * s1 and abs(f2) <= tol * s2:
                _check_quadratic(steps, noise, trace)
                with mp.workprec(ctx.bits):
                    return +x, +y
            (j11, j12), (j21, j22) = jacobian(x, y)
            det = j11 * j22 - j12 * j21
            if det == 0 or not mp.isfinite(det):
                raise NewtonError("singular Jacobian", trace)
            dx = (-f1 * j22 + f2 * j12) / det
            dy = (-f2 * j11 + f1 * j21) / det
            x, y = x + dx, y + dy
            trace.append((x, y))
            steps.append(max(abs(dx) / max(abs(x), 1), abs(dy) / max(abs(y), 1)))
        raise NewtonError(f"no convergence in {max_iter} iterations", trace)


def _check_quadratic(steps, noise, trace):
    # every step above the noise floor among the last three must at least halve
    tail = [s for s in steps[-3:]]
    for prev, cur in zip(tail, tail[1:]):
        if cur > noise and cur > prev / 2:
            raise NewtonError("steps did not shrink quadratically near the root", trace)


# ---------------------------------------------------------------------------
# Decimal serialisation
# ---------------------------------------------------------------------------


def decimal_digits(bits: int) -> int:
    """Significant decimal digits used to serialise a ``bits``-bit value.

    ``ceil(0.302 * bits)``, raised where needed to the ``ceil(bits log10 2) + 1``
    digits that guarantee an exact binary round trip.
    """
    return max(math.ceil(bits * 0.302), math.ceil(bits * math.log10(2)) + 1)


def to_decimal_string(x, digits: int, rounding: str = "nearest") -> str:
    """Exact conversion of a binary mpf to ``digits`` significant decimal digits.

    ``rounding`` is ``"nearest"`` (ties to even), ``"floor"`` or ``"ceil"``.
    Directed rounding lets enclosures survive serialisation.
    """
    x = mpf(x) if not isinstance(x, mpf) else x
    if not mp.isfinite(x):
        raise DomainError(f"cannot serialise non-finite value {x}")
    if x == 0:
        return "0." + "0" * (digits - 1) + "e+0"
    sign = -1 if x < 0 else 1
    man, exp = x.man_exp
    man = abs(man)
    num, den = (man << exp, 1) if exp >= 0 else (man, 1 << -exp)
    e10 = len(str(num)) - len(str(den))
    # normalise so that 10**e10 <= num/den < 10**(e10+1)
    while _ge_pow10(num, den, e10 + 1):
        e10 += 1
    while not _ge_pow10(num, den, e10):
        e10 -= 1
    shift = digits - 1 - e10
    if shift >= 0:
        n, d = num * 10**shift, den
    else:
        n, d = num, den * 10 ** (-shift)
    q, rem = divmod(n, d)
    mode = rounding
    if sign < 0 and rounding in ("floor", "ceil"):
        mode = "ceil" if rounding == "floor" else "floor"
    if rem:
        if mode == "ceil":
            q += 1
        elif mode == "nearest":
            if 2 * rem > d or (2 * rem == d and q % 2):
                q += 1
        elif mode != "floor":
            raise ValueError(f"unknown rounding mode {rounding!r}")
    if q >= 10**digits:
        q //= 10
        e10 += 1
    s = str(q)
    body = s[0] + "." + s[1:] if digits > 1 else s + "."
    return ("-" if sign < 0 else "") + body + f"e{e10:+d}"


def _ge_pow10(num, den, e):
    if e >= 0:
        return num >= den * 10**e
    return num * 10 ** (-e) >= den
