from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qplancherel._precision import mpctx, to_fraction
from qplancherel.errors import DomainError, NSmall, PrecisionExhausted, ScaleOverflow
from qplancherel.ismail_masson import (
    LogComplex,
    ScalingParams,
    decomposition_sums,
    e_factor,
    f_factor,
    hn_direct,
    hn_normalized,
    normalization_log,
    normalized_terms,
    nu_n_log,
    nu_n_strip,
    prefactor_log,
    s_of,
    sinh_xi_n,
)
from qplancherel.qseries import QContext, qbinomial, qpoch_infinite

# log-magnitude of the strip prefactor at tau=-1/2, theta=0, z=2, q=1/2, n=8,
# from exact Fraction arithmetic at 256 bits
PREFACTOR_LOG_N8 = "17.87759442825110237181141639689086730279"

POINTS = [
    ("0.5", "1/2", "0", (2, 0)),
    ("0.5", "0", "1/3", (1, 1)),
    ("0.3", "-1/2", "surd:0,1,2,1", ("0.5", "0.2")),
    ("0.7", "surd:0,-1,2,2", "2/5", ("1.5", "-0.5")),
    ("0.5", "surd:1,-1,2,1", "surd:-1,1,2,1", (2, 0)),
]


def make(q, tau, theta, z, bits=128):
    z = (Fraction(z[0]), Fraction(z[1]))
    return ScalingParams(tau, theta, z, QContext(Fraction(q), bits))


@pytest.fixture
def strip():
    return make("0.5", "-1/2", "1/3", (2, 0))


class TestScaling:
    def test_rejects_zero_z(self):
        with pytest.raises(DomainError):
            make("0.5", "0", "0", (0, 0))

    def test_s_examples(self):
        mp = mpctx(128)
        assert s_of(make("0.5", "0", "0", (1, 0))) == mp.mpf(0.5)
        assert s_of(make("0.5", "1", "0", (1, 0))) == 1

    def test_s_with_log_q_minus_pi(self):
        hi = mpctx(400)
        q = to_fraction(hi.exp(-hi.pi))
        s = s_of(ScalingParams("0", "1", 1, QContext(q, 128)))
        assert abs(s - complex(0.5, -1)) < 1e-35

    @pytest.mark.parametrize("tau, sigma_side", [("1/3", 1), ("0", 0), ("-1/3", -1)])
    def test_sigma_strip_language(self, tau, sigma_side):
        p = make("0.5", tau, "0", (1, 0))
        diff = p.sigma - 0.5
        assert (diff > 0) - (diff < 0) == sigma_side


class TestLogComplex:
    def test_multiply_and_power(self):
        mp = mpctx(128)
        a = LogComplex.make(mp, 2, 0, Fraction(1, 3))
        b = LogComplex.make(mp, -0.5, 0, Fraction(1, 4))
        c = a * b
        assert c.log_mag == 1.5 and c.exact_turns == Fraction(-5, 12)
        assert (a ** 3).exact_turns == 0 and (a ** 3).log_mag == 6

    def test_inverse_cancels(self, strip):
        f = prefactor_log(strip, 30)
        g = f * f.inverse()
        assert g.log_mag == 0 and g.turns == 0

    def test_overflow_guard(self):
        mp = mpctx(64)
        with pytest.raises(ScaleOverflow):
            LogComplex.make(mp, 10 ** 7, 0).to_complex()

    def test_round_trip(self):
        mp = mpctx(128)
        w = mp.mpc(-3, 0.5)
        assert abs(LogComplex.from_complex(mp, w).to_complex() - w) < mp.mpf(2) ** -120


class TestSinhXi:
    def test_examples(self):
        assert sinh_xi_n(make("0.5", "0", "0", (1, 0)), 0) == 0
        assert sinh_xi_n(make("0.5", "0", "0", (2, 0)), 0) == 0.75

    def test_magnitude(self):
        # q^{-10/2} z / 2 dominates: (32*2 - 1/64)/2
        v = sinh_xi_n(make("0.5", "0", "0", (2, 0)), 10)
        assert abs(v - (32 - 1 / 128)) < 1e-30

    def test_overflow(self):
        with pytest.raises(ScaleOverflow):
            sinh_xi_n(make("0.5", "1", "0", (2, 0)), 3 * 10 ** 6)


class TestDirect:
    def setup_method(self):
        self.ctx = QContext(Fraction(1, 2), 128)
        self.mp = self.ctx.mp

    def test_low_degrees(self):
        mp, ctx = self.mp, self.ctx
        x = mp.mpc(0.3, -1.2)
        e = x + mp.sqrt(x * x + 1)
        assert hn_direct(x, 0, ctx) == 1
        assert abs(hn_direct(x, 1, ctx) - 2 * x) < mp.mpf(2) ** -120
        want = e ** 2 + e ** -2 - (1 + ctx.qm) / ctx.qm
        assert abs(hn_direct(x, 2, ctx) - want) < mp.mpf(2) ** -118

    def test_degree_cap(self):
        with pytest.raises(DomainError):
            hn_direct(0.5, 65, self.ctx)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-50, 50), st.integers(0, 30))
    def test_real_in_real_out(self, x, n):
        v = hn_direct(x, n, self.ctx)
        assert abs(v.imag) <= self.mp.mpf(2) ** (-128 + 12) * max(1, abs(v.real))

    def test_branch_free(self):
        # h_n is a polynomial in sinh xi, so values on both sides of the cut agree
        mp = self.mp
        a = hn_direct(mp.mpc(0, 3) + mp.mpf(2) ** -100, 7, self.ctx)
        b = hn_direct(mp.mpc(0, 3) - mp.mpf(2) ** -100, 7, self.ctx)
        assert abs(a - b) <= mp.mpf(2) ** -80 * abs(a)


class TestNormalized:
    def test_degree_zero(self, strip):
        assert hn_normalized(strip, 0).value == 1

    @pytest.mark.parametrize("point", POINTS)
    def test_matches_direct_at_double_precision(self, point):
        p = make(*point, bits=256)
        mp = p.ctx.mp
        for n in range(0, 21):
            direct = hn_direct(sinh_xi_n(p, n), n, p.ctx)
            via = hn_normalized(p, n).value * normalization_log(p, n).to_complex()
            assert abs(direct - via) <= mp.mpf(2) ** -200 * abs(direct)

    def test_large_tau_close_to_one(self):
        v = hn_normalized(make("0.5", "4", "1/3", (1, 0)), 10).value
        assert abs(v - 1) < 1e-10

    @pytest.mark.parametrize("point", POINTS[1:])
    def test_term_majorant(self, point):
        p = make(*point)
        mp, ctx = p.ctx.mp, p.ctx
        tau = p.tau.value(128)
        absz = abs(p.z_at(mp))
        for n in (5, 40, 333):
            terms = normalized_terms(p, n, range(0, n + 1, max(1, n // 25)))
            for k, t in terms.items():
                bound = ctx.qm ** (k * k + k * tau * n) * absz ** (-2 * k) / ctx.qq_inf
                assert abs(t) <= bound * (1 + mp.mpf(2) ** -100)

    def test_rational_phase_period(self):
        a = hn_normalized(make("0.5", "-1/3", "2/7", (2, 0)), 500).value
        b = hn_normalized(make("0.5", "-1/3", "-12/7", (2, 0)), 500).value
        assert a == b

    def test_rational_phase_unit(self):
        p = make("0.5", "0", "1/3", (1, 0))
        mp = p.ctx.mp
        for k, t in normalized_terms(p, 9, range(10)).items():
            plain = qbinomial(9, k, p.ctx) * p.ctx.qm ** (k * k)
            assert abs(abs(t) - plain) <= mp.mpf(2) ** -120 * plain

    def test_tail_relative_to_scale(self):
        r = hn_normalized(make("0.5", "-1/2", "surd:0,1,2,1", (2, 0)), 5000)
        assert r.tail_bound <= r.scale * QContext(0.5).tol

    def test_window_equals_full_sum(self, strip):
        mp = strip.ctx.mp
        n = 120
        full = mp.fsum(normalized_terms(strip, n, range(n + 1)).values())
        window = hn_normalized(strip, n)
        assert abs(full - window.value) <= window.tail_bound + mp.mpf(2) ** -110 * window.scale

    def test_short_decimal_theta_fails_loudly(self):
        p = make("0.5", "-1/2", "dec:1.41421356:irrational", (2, 0))
        with pytest.raises(PrecisionExhausted):
            hn_normalized(p, 1000)


class TestDecomposition:
    @pytest.mark.parametrize("point", [POINTS[2], POINTS[3], POINTS[4], ("0.5", "-1/2", "1/3", (2, 0))])
    def test_split_sums_back(self, point):
        p = make(*point)
        mp = p.ctx.mp
        for n in (4, 11, 60, 501):
            s1, s2, side = decomposition_sums(p, n)
            norm = hn_normalized(p, n)
            assert abs(s1 + s2 - norm.value) <= mp.mpf(2) ** -110 * max(1, norm.scale)
            assert side.m == p.tau.floor_affine(-n) and side.M == side.m // 2

    def test_side_data(self, strip):
        _, _, side = decomposition_sums(strip, 40)
        assert (side.m, side.m1) == (20, 13)
        assert side.c_n == 0 and abs(side.d_n - strip.ctx.convert(Fraction(1, 3))) < 1e-36
        assert all(abs(v) <= 1 for v in side.e.values())
        assert all(abs(v) <= 1 for v in side.f.values())

    def test_factor_deviation(self, strip):
        ctx = strip.ctx
        q = ctx.qm
        pq3 = qpoch_infinite(-q ** 3, ctx).upper
        c = 7 * pq3 ** 2 / ((1 - q) ** 2 * ctx.qq_inf)
        for n in (40, 41, 120):
            M = strip.tau.floor_affine(-n) // 2
            nu = nu_n_strip(strip, n)
            for k in range(nu):
                assert abs(e_factor(n, M, k, ctx) - 1) <= c * q ** (nu + 2)
                if k >= 1:
                    assert abs(f_factor(n, M, k, ctx) - 1) <= c * q ** (nu + 2)

    def test_outside_strip(self):
        with pytest.raises(DomainError):
            decomposition_sums(make("0.5", "1/2", "0", (1, 0)), 10)
        with pytest.raises(DomainError):
            decomposition_sums(make("0.5", "-1/2", "0", (1, 0)), 1)


class TestPrefactor:
    def test_degree_zero(self, strip):
        f = prefactor_log(strip, 0, 0)
        assert abs(f.log_mag + strip.ctx.mp.log(strip.ctx.qq_inf)) < 1e-35
        assert f.turns == 0

    def test_reference_log_magnitude(self):
        f = prefactor_log(make("0.5", "-1/2", "0", (2, 0)), 8)
        assert abs(f.log_mag - mpctx(128).mpf(PREFACTOR_LOG_N8)) < 1e-35

    def test_needs_strip(self):
        with pytest.raises(DomainError):
            prefactor_log(make("0.5", "0", "0", (2, 0)), 8)


class TestNu:
    def test_examples(self, strip):
        assert nu_n_strip(strip, 40) == 5
        assert nu_n_log(strip, 200) == 1

    def test_small(self, strip):
        with pytest.raises(NSmall):
            nu_n_strip(strip, 3)
        with pytest.raises(NSmall):
            nu_n_log(strip, 100)
        with pytest.raises(DomainError):
            nu_n_log(strip, 1)

    @settings(max_examples=100, deadline=None)
    @given(st.fractions(Fraction(-99, 100), Fraction(-1, 100)), st.integers(1, 10 ** 6))
    def test_strip_nu_below_quarter(self, tau, n):
        p = make("0.5", str(tau), "0", (1, 0))
        try:
            nu = nu_n_strip(p, n)
        except NSmall:
            return
        assert 1 <= nu < Fraction(n, 4)
