"""Moments of the singularly perturbed Laguerre weight ``x**alpha exp(-x - t/x)``.

For ``t > 0`` the k-th moment is ``2 t**((alpha+k+1)/2) K_{alpha+k+1}(2 sqrt(t))``.
No Bessel function is ever evaluated here.  Instead the two seeds
``mu_0, mu_1`` come from direct quadrature and the rest follow from

    mu_{k+1} = (alpha + k + 1) mu_k + t mu_{k-1},

which is the Bessel recurrence in the order variable after rescaling (and also
follows from integrating ``d/dx [x**(alpha+k+1) w(x)]`` over the half line).
Both terms on the right are positive, so the forward direction is stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath as mp
from mpmath import mpf

from .errors import DomainError, SaddleAbsentError
from .numerics import (
    GUARD_BITS,
    PrecisionContext,
    decimal_digits,
    halfline_quadrature,
    to_decimal_string,
    to_mpf,
)

__all__ = [
    "WeightParams",
    "MomentTable",
    "Saddle",
    "weight_eval",
    "potential_derivatives",
    "compute_moment_table",
    "spot_check_moment",
    "cache_filename",
]

SEED_GUARD_BITS = 64
SLOW_ALPHA = Fraction(-95, 100)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, mpf):
        man, exp = x.man_exp
        return Fraction(man) * Fraction(2) ** exp
    return Fraction(str(x))


def _format_param(x: Fraction) -> str:
    """Shortest decimal spelling of a rational when it terminates, else ``p/q``."""
    d = x.denominator
    k = 0
    while d % 2 == 0:
        d //= 2
        k += 1
    j = 0
    while d % 5 == 0:
        d //= 5
        j += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    places = max(k, j)
    if places == 0:
        return str(x.numerator)
    scaled = x * 10**places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}".rstrip("0").rstrip(".")


@dataclass(frozen=True)
class WeightParams:
    """Parameters ``(alpha, t)`` of ``w(x) = x**alpha exp(-x - t/x)``.

    Stored as exact rationals (floats are read through their shortest repr, so
    ``0.7`` means 7/10) and converted to mpf at whatever precision is active.
    """

    alpha: Fraction
    t: Fraction

    def __init__(self, alpha, t=0):
        a, tt = _as_fraction(alpha), _as_fraction(t)
        if not a > -1:
            raise DomainError(f"alpha must exceed -1, got {alpha}")
        if tt < 0:
            raise DomainError(f"t must be non-negative, got {t}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "t", tt)

    @property
    def alpha_mpf(self) -> mpf:
        return to_mpf(self.alpha)

    @property
    def t_mpf(self) -> mpf:
        return to_mpf(self.t)

    def label(self) -> tuple[str, str]:
        return _format_param(self.alpha), _format_param(self.t)

    def __repr__(self):
        a, t = self.label()
        return f"WeightParams(alpha={a}, t={t})"


def weight_eval(x, p: WeightParams) -> mpf:
    """``x**alpha * exp(-x - t/x)`` at the current mpmath precision."""
    x = to_mpf(x)
    if not x > 0:
        raise DomainError(f"weight is defined for x > 0, got {x}")
    t = p.t_mpf
    if t and mp.mag(t) - mp.mag(x) > mp.mp.prec + 64:
        # exp(-t/x) is far below anything representable relative to 1
        return mpf(0)
    return x ** p.alpha_mpf * mp.exp(-x - t / x)


@dataclass(frozen=True)
class Saddle:
    v: mpf
    dv: mpf
    d2v: mpf
    x0: mpf


def potential_derivatives(x, p: WeightParams, k: int = 0) -> Saddle:
    """Exponent ``v(x) = x + t/x - (alpha+k) log x`` of the k-th moment integrand.

    Returns ``v``, ``v'``, ``v''`` at ``x`` together with the stationary point
    ``x0 = (alpha + k + sqrt((alpha+k)**2 + 4t)) / 2``, the positive root of
    ``x**2 - (alpha+k) x - t``.

    Raises
    ------
    SaddleAbsentError
        When ``t == 0`` and ``alpha + k <= 0``: the integrand is then monotone.
    """
    x = to_mpf(x)
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    nu = p.alpha_mpf + k
    t = p.t_mpf
    v = x + t / x - nu * mp.log(x)
    dv = 1 - t / x**2 - nu / x
    d2v = 2 * t / x**3 + nu / x**2
    if t == 0 and nu <= 0:
        raise SaddleAbsentError(f"no stationary point for alpha+k={nu} at t=0")
    x0 = (nu + mp.sqrt(nu**2 + 4 * t)) / 2
    resid = 1 - t / x0**2 - nu / x0
    assert abs(resid) <= mp.ldexp(1, -(mp.mp.prec - 8)) * (1 + abs(nu) / x0 + t / x0**2)
    return Saddle(v, dv, d2v, x0)


def _moment_integrand(p: WeightParams, k: int):
    alpha, t = p.alpha_mpf, p.t_mpf
    nu = alpha + k
    if t:
        return lambda x: x**nu * mp.exp(-x - t / x)
    return lambda x: x**nu * mp.exp(-x)


def _quadrature_frame(p: WeightParams, k: int):
    """Center and log-width for the exp-sinh map of the k-th moment integrand."""
    nu = p.alpha_mpf + k
    t = p.t_mpf
    if t == 0 and nu <= 0:
        return mpf(1), mp.pi / 2
    x0 = (nu + mp.sqrt(nu**2 + 4 * t)) / 2
    # curvature of the integrand in log x at the saddle
    curv = x0 + t / x0
    width = min(mp.pi / 2, 2 / mp.sqrt(curv))
    return x0, width


def spot_check_moment(p: WeightParams, k: int, ctx: PrecisionContext) -> mpf:
    """The k-th moment by direct quadrature, independent of any recurrence.

    The exp-sinh map is centred at the integrand's saddle, so high moments
    (a narrow peak near ``x = alpha + k``) cost about as much as low ones.
    """
    if k < 0:
        raise DomainError("moment index must be >= 0")
    with mp.workprec(ctx.bits + GUARD_BITS):
        center, width = _quadrature_frame(p, k)
        f = _moment_integrand(p, k)
    return halfline_quadrature(f, ctx, center=center, width=width).value


@dataclass(frozen=True)
class MomentTable:
    """``mu_0 .. mu_K`` at ``bits`` of precision.

    ``seed_method`` is ``"quadrature"`` (t > 0) or ``"gamma"`` (t treated as 0).
    ``achieved_bits`` estimates the relative accuracy actually reached.
    """

    params: WeightParams
    values: tuple
    bits: int
    seed_method: str
    achieved_bits: int
    flags: tuple = field(default=())

    @property
    def K(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k):
        return self.values[k]

    def extend(self, K: int) -> "MomentTable":
        """Continue the recurrence up to index ``K`` (no new quadrature)."""
        if K <= self.K:
            return self
        with mp.workprec(self.bits + SEED_GUARD_BITS):
            alpha, t = self.params.alpha_mpf, self.params.t_mpf
            if self.seed_method == "gamma":
                t = mpf(0)
            vals = list(self.values)
            for k in range(self.K, K):
                vals.append((alpha + k + 1) * vals[k] + t * vals[k - 1])
        with mp.workprec(self.bits):
            vals = tuple(+v for v in vals)
        return MomentTable(self.params, vals, self.bits, self.seed_method, self.achieved_bits, self.flags)

    def restrict(self, bits: int, K: int | None = None) -> "MomentTable":
        """The first ``K+1`` values rounded to ``bits`` (at most the table's own)."""
        if bits > self.bits:
            raise DomainError(f"cannot raise a {self.bits}-bit table to {bits} bits")
        K = self.K if K is None else K
        src = self.extend(K)
        with mp.workprec(bits):
            vals = tuple(+v for v in src.values[: K + 1])
        return MomentTable(
            self.params, vals, bits, self.seed_method, min(self.achieved_bits, bits), self.flags
        )

    def recurrence_residuals(self) -> list:
        """Relative residuals of the three-term relation for ``1 <= k <= K-1``."""
        with mp.workprec(self.bits + 16):
            alpha, t = self.params.alpha_mpf, self.params.t_mpf
            if self.seed_method == "gamma":
                t = mpf(0)
            mu = self.values
            return [
                abs(mu[k + 1] - (alpha + k + 1) * mu[k] - t * mu[k - 1]) / mu[k + 1]
                for k in range(1, self.K)
            ]

    # -- serialisation ---------------------------------------------------

    def to_json(self) -> str:
        digits = decimal_digits(self.bits)
        a, t = self.params.label()
        doc = {
            "alpha": a,
            "t": t,
            "bits": self.bits,
            "K": self.K,
            "values": [to_decimal_string(v, digits) for v in self.values],
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MomentTable":
        doc = json.loads(text)
        params = WeightParams(Fraction(doc["alpha"]), Fraction(doc["t"]))
        bits = int(doc["bits"])
        with mp.workprec(bits):
            vals = tuple(mpf(s) for s in doc["values"])
        if len(vals) != int(doc["K"]) + 1:
            raise DomainError("moment file K does not match number of values")
        method, flags = _seed_policy(params, bits)
        return cls(params, vals, bits, method, bits, flags)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "MomentTable":
        return cls.from_json(Path(path).read_text())


def cache_filename(p: WeightParams, bits: int, K: int) -> str:
    a, t = p.label()
    return f"mom_a{a}_t{t}_b{bits}_K{K}.json".replace("/", "over")


def _seed_policy(p: WeightParams, bits: int):
    flags = []
    if p.alpha < SLOW_ALPHA:
        flags.append("alpha-near-minus-one")
    if p.t == 0:
        return "gamma", tuple(flags)
    if p.t < Fraction(1, 2 ** (bits // 2)):
        flags.append("t-below-threshold-treated-as-zero")
        return "gamma", tuple(flags)
    return "quadrature", tuple(flags)


def compute_moment_table(p: WeightParams, K: int, ctx: PrecisionContext) -> MomentTable:
    """Moments ``mu_0 .. mu_K`` of ``w(x) = x**alpha exp(-x - t/x)``.

    For ``t > 0`` the seeds ``mu_0, mu_1`` are integrated with 64 guard bits and
    the remaining values generated by the forward recurrence.  For ``t = 0``
    (or ``t < 2**(-bits/2)``, flagged) the gamma recurrence
    ``mu_{k+1} = (alpha+k+1) mu_k`` starting from ``Gamma(alpha+1)`` is used.
    """
    if K < 2:
        raise DomainError("K must be at least 2")
    method, flags = _seed_policy(p, ctx.bits)
    seed_ctx = ctx.raised(SEED_GUARD_BITS)
    work = seed_ctx.bits + GUARD_BITS
    if method == "gamma":
        with mp.workprec(work):
            seeds = [mp.gamma(p.alpha_mpf + 1)]
            seeds.append((p.alpha_mpf + 1) * seeds[0])
        seed_err_bits = work - 2
    else:
        seeds = []
        worst = mpf(0)
        for k in (0, 1):
            with mp.workprec(work):
                center, width = _quadrature_frame(p, k)
                f = _moment_integrand(p, k)
            res = halfline_quadrature(f, seed_ctx, center=center, width=width)
            seeds.append(res.value)
            with mp.workprec(work):
                worst = max(worst, res.error / res.value)
        seed_err_bits = seed_ctx.quad_tolerance_exponent
        if worst > 0:
            seed_err_bits = max(seed_err_bits, int(-mp.log(worst, 2)))
    # relative error of the forward recurrence grows at most like K
    achieved = min(ctx.bits, seed_err_bits - math.ceil(math.log2(K + 1)))
    table = MomentTable(p, tuple(seeds), seed_ctx.bits, method, achieved, flags).extend(K)
    with mp.workprec(ctx.bits):
        vals = tuple(+v for v in table.values)
    return MomentTable(p, vals, ctx.bits, method, achieved, flags)
