import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from sphankel.errors import DomainError, NewtonError, QuadratureError
from sphankel.numerics import (
    IDENTITIES,
    EndpointPair,
    Interval,
    PrecisionContext,
    decimal_digits,
    halfline_quadrature,
    integrate_finite_sqrt_weight,
    integrate_halfline,
    newton_solve_2d,
    sqrt_weight_quadrature,
    to_decimal_string,
    verify_identity_suite,
)

CTX = PrecisionContext(256)

# 2 K_1(2), independent 40-digit Bessel evaluation
TWO_K1_OF_2 = "0.27973176363304485456919761407082205"


@pytest.fixture(autouse=True)
def _high_precision():
    # closed-form reference values must be formed at more than working precision
    with mp.workprec(320):
        yield


def close(x, y, ctx=CTX, slack=16):
    with mp.workprec(ctx.bits):
        return abs(x - y) <= slack * ctx.tolerance * abs(y)


class TestPrecisionContext:
    def test_defaults(self):
        assert CTX.quad_tolerance_exponent == 224

    @pytest.mark.parametrize("bits", [63, 0, 100.5])
    def test_rejects_small_or_fractional_bits(self, bits):
        with pytest.raises(DomainError):
            PrecisionContext(bits)

    def test_rejects_unreachable_tolerance(self):
        with pytest.raises(DomainError):
            PrecisionContext(128, 120)
        PrecisionContext(128, 112)

    def test_raised_keeps_margin(self):
        r = PrecisionContext(128).raised(64)
        assert (r.bits, r.quad_tolerance_exponent) == (192, 160)

    def test_interval_and_endpoints(self):
        with pytest.raises(DomainError):
            Interval(mpf(2), mpf(1))
        with pytest.raises(DomainError):
            EndpointPair(mpf(0), mpf(1))
        assert mpf("1.5") in Interval(mpf(1), mpf(2))


class TestHalfline:
    def test_exponential(self):
        assert close(integrate_halfline(lambda x: mp.exp(-x), CTX), mpf(1))

    def test_bessel_moment(self):
        v = integrate_halfline(lambda x: mp.exp(-x - 1 / x), CTX)
        with mp.workprec(256):
            assert abs(v - mpf(TWO_K1_OF_2)) < mpf(10) ** -34

    def test_endpoint_singularity(self):
        v = integrate_halfline(lambda x: mp.exp(-x) / mp.sqrt(x), CTX)
        assert close(v, mp.sqrt(mp.pi))

    def test_error_sequence_shrinks(self):
        res = halfline_quadrature(lambda x: x**3 * mp.exp(-x), CTX, center=3)
        assert close(res.value, mpf(6))
        errs = [e for e in res.errors if e]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_nonconvergence_carries_estimates(self):
        # a jump defeats the spectral convergence of the trapezoidal rule
        f = lambda x: mp.exp(-x) if x < 1 else mpf(0)  # noqa: E731
        with pytest.raises(QuadratureError) as exc:
            halfline_quadrature(f, CTX, max_level=4)
        assert len(exc.value.estimates) == 2


class TestSqrtWeight:
    def test_printed_closed_forms(self):
        assert close(integrate_finite_sqrt_weight(lambda x: mpf(1), EndpointPair(mpf(1), mpf(3)), CTX), mp.pi)
        assert close(integrate_finite_sqrt_weight(lambda x: x, EndpointPair(mpf(1), mpf(3)), CTX), 2 * mp.pi)
        v = integrate_finite_sqrt_weight(lambda x: 1 / x**2, EndpointPair(mpf(1), mpf(4)), CTX)
        assert close(v, 5 * mp.pi / 16)

    def test_nonfinite_integrand_is_domain_error(self):
        with pytest.raises(DomainError):
            integrate_finite_sqrt_weight(lambda x: 1 / (x - 2), EndpointPair(mpf(1), mpf(3)), CTX)

    @settings(max_examples=15, deadline=None)
    @given(
        a=st.floats(0.01, 10),
        w=st.floats(0.01, 50),
        n=st.integers(0, 6),
    )
    def test_polynomial_moments(self, a, w, n):
        # int x^n / sqrt((b-x)(x-a)) = pi sum_j C(1/2 choose ...) via Chebyshev: compare with mpmath quad
        ctx = PrecisionContext(128)
        ep = EndpointPair(mpf(a), mpf(a) + mpf(w))
        got = sqrt_weight_quadrature(lambda x: x**n, ep, ctx).value
        with mp.workprec(160):
            c, h = (ep.a + ep.b) / 2, (ep.b - ep.a) / 2
            want = mp.quad(lambda th: (c + h * mp.cos(th)) ** n, [0, mp.pi])
        assert close(got, want, ctx, slack=2**20)


class TestIdentitySuite:
    def test_reference_instance(self):
        rep = verify_identity_suite(EndpointPair(mpf(1), mpf(2)), 3, CTX)
        assert rep.passed, rep.residuals
        assert set(rep.residuals) == set(IDENTITIES)

    def test_b1_pole_left_of_support(self):
        rep = verify_identity_suite(EndpointPair(mpf(1), mpf(2)), 3, CTX, b1_shift=mpf("-0.5"))
        assert rep.residuals["B1"] <= rep.tolerance

    def test_b1_pole_between_origin_and_a(self):
        rep = verify_identity_suite(EndpointPair(mpf(1), mpf(2)), 3, CTX, b1_shift=mpf("0.5"))
        assert rep.residuals["B1"] <= rep.tolerance

    def test_pole_inside_support(self):
        with pytest.raises(DomainError, match="B1"):
            verify_identity_suite(EndpointPair(mpf(1), mpf(2)), mpf("1.5"), CTX)

    def test_nonpositive_shift_names_a4(self):
        with pytest.raises(DomainError, match="A4"):
            verify_identity_suite(EndpointPair(mpf(1), mpf(2)), -1, CTX, b1_shift=5)

    @settings(max_examples=8, deadline=None)
    @given(a=st.floats(0.05, 5), w=st.floats(0.1, 20), ts=st.floats(0.05, 10))
    def test_random_instances(self, a, w, ts):
        ctx = PrecisionContext(128)
        rep = verify_identity_suite(EndpointPair(mpf(a), mpf(a) + mpf(w)), ts, ctx, b1_shift=-ts)
        assert rep.passed, rep.failures()


class TestNewton:
    def test_affine(self):
        x, y = newton_solve_2d(
            lambda x, y: (x - 1, y - 2), lambda x, y: ((1, 0), (0, 1)), (mpf("0.9"), mpf("2.1")), CTX
        )
        assert (x, y) == (1, 2)

    def test_quadratic_root(self):
        x, y = newton_solve_2d(
            lambda x, y: (x * x - 2, x * y - 1),
            lambda x, y: ((2 * x, 0), (y, x)),
            (1, 1),
            CTX,
        )
        with mp.workprec(256):
            assert abs(x - mp.sqrt(2)) < mpf(2) ** -220
            assert abs(y - 1 / mp.sqrt(2)) < mpf(2) ** -220

    def test_divergence_carries_trace(self):
        # atan has a bounded basin; from far out Newton overshoots without end
        with pytest.raises(NewtonError) as exc:
            newton_solve_2d(
                lambda x, y: (mp.atan(x), y),
                lambda x, y: ((1 / (1 + x * x), 0), (0, 1)),
                (mpf(10), mpf(0)),
                CTX,
                max_iter=20,
            )
        assert len(exc.value.trace) > 1

    def test_singular_jacobian(self):
        with pytest.raises(NewtonError, match="singular"):
            newton_solve_2d(lambda x, y: (x + y - 1, x + y - 2), lambda x, y: ((1, 1), (1, 1)), (0, 0), CTX)


class TestDecimal:
    def test_format(self):
        with mp.workprec(64):
            assert to_decimal_string(mpf(720), 5) == "7.2000e+2"
            assert to_decimal_string(mpf(1) / 3, 4, "floor") == "3.333e-1"
            assert to_decimal_string(mpf(1) / 3, 4, "ceil") == "3.334e-1"
            assert to_decimal_string(-mpf(1) / 3, 4, "floor") == "-3.334e-1"

    def test_digit_count_never_below_pinned_rule(self):
        for bits in (64, 128, 256, 1000, 1736, 4096):
            assert decimal_digits(bits) >= -(-bits * 302 // 1000)

    @settings(max_examples=200, deadline=None)
    @given(
        man=st.integers(1, 2**300),
        exp=st.integers(-2000, 2000),
        bits=st.sampled_from([64, 113, 256, 1024, 1736]),
        neg=st.booleans(),
    )
    def test_round_trip(self, man, exp, bits, neg):
        with mp.workprec(bits):
            x = mp.ldexp(mpf(-man if neg else man), exp)
            s = to_decimal_string(x, decimal_digits(bits))
            assert mpf(s) == x

    @settings(max_examples=100, deadline=None)
    @given(man=st.integers(1, 2**200), exp=st.integers(-300, 300), digits=st.integers(2, 30))
    def test_directed_rounding_brackets(self, man, exp, digits):
        with mp.workprec(256):
            x = mp.ldexp(mpf(man), exp)
        with mp.workprec(400):
            lo = mpf(to_decimal_string(x, digits, "floor"))
            hi = mpf(to_decimal_string(x, digits, "ceil"))
            assert lo <= x <= hi
