import math
from fractions import Fraction

import pytest

from qplancherel.asymptotics import (
    REGIME_FIELDS,
    Arithmetic,
    RegimeId,
    arithmetic,
    assembled_bound_regime2,
    classify,
    error_bound,
    find_threshold,
    main_term,
    progression,
    verify,
)
from qplancherel.errors import AmbiguousFloor, DomainError
from qplancherel.ismail_masson import ScalingParams, decomposition_sums
from qplancherel.numtheory import chi, frac_floor
from qplancherel.qseries import QContext, qpoch_finite, ramanujan_Aq, theta

# regime-2 bound at q=1/2, z=2, n=12 from exact Fractions (40-term sums, 400 factors)
REGIME2_BOUND_N12 = "0.5203377125291729363482342169889006098444"
# q^5 + q^25 2^10 + q^12.5 / 2^10 at q = 1/2
REGIME4_BRACE_NU5 = "0.03128068616551904357612714787587216016031"

SQRT2 = "surd:0,1,2,1"


def make(tau, theta_, z=(2, 0), q=Fraction(1, 2), bits=128):
    return ScalingParams(tau, theta_, z, QContext(q, bits))


class TestClassify:
    @pytest.mark.parametrize("tau, th, want", [
        ("1/4", SQRT2, 1), ("1/4", "0", 1), ("0", "1/3", 2), ("0", SQRT2, 3),
        ("-1/2", "1/3", 4), ("-1/2", SQRT2, 5), ("surd:0,-1,2,2", "1/3", 6),
        ("surd:1,-1,2,1", "surd:-1,1,2,1", 7), ("dec:-0.5", "1/5", 4),
    ])
    def test_table(self, tau, th, want):
        assert classify(make(tau, th)) == want

    @pytest.mark.parametrize("tau", ["-1", "-3/2", "surd:-1,-1,2,1"])
    def test_rejects_tau_at_or_below_minus_one(self, tau):
        with pytest.raises(DomainError):
            classify(make(tau, "0"))

    def test_decimal_zero_is_ambiguous(self):
        with pytest.raises(AmbiguousFloor):
            classify(make("dec:0.000:irrational", "0"))


class TestArithmetic:
    @pytest.mark.parametrize("tau, th, n, kw", [
        ("1/2", "0", 5, {}), ("0", "1/3", 7, {}), ("0", SQRT2, 985, {}),
        ("-1/2", "1/3", 33, {}), ("-1/2", SQRT2, 985, {}),
        ("surd:0,-1,2,2", "1/3", 577, {}), ("surd:1,-1,2,1", "surd:-1,1,2,1", 985, {}),
    ])
    def test_fields_match_regime(self, tau, th, n, kw):
        p = make(tau, th)
        a = arithmetic(p, n, **kw)
        r = int(classify(p))
        assert a.populated() == REGIME_FIELDS[r]

    def test_regime4_values(self):
        a = arithmetic(make("-1/2", "1/3"), 33)
        assert (a.m, a.lam, a.m1, a.lam1, a.nu_n) == (16, Fraction(1, 2), 11, Fraction(0), 4)

    def test_non_hit_rejected(self):
        with pytest.raises(DomainError):
            arithmetic(make("0", SQRT2), 100)

    def test_hit_residuals(self):
        a = arithmetic(make("surd:1,-1,2,1", "surd:-1,1,2,1"), 5741)
        assert a.m == a.m1 and abs(a.a_n) < 5741 ** -0.9 and abs(a.a_n - a.b_n) < 1e-30

    def test_progression(self):
        assert progression("1/3", Fraction(1, 3), 13) == [1, 4, 7, 10, 13]
        with pytest.raises(DomainError):
            progression(SQRT2, 0, 10)

    def test_missing_fields_rejected(self):
        with pytest.raises(DomainError):
            main_term(4, make("-1/2", "1/3"), 10, Arithmetic(m=5))


class TestMainTerm:
    def test_regime1(self):
        assert main_term(1, make("1/3", "1/5"), 9, Arithmetic())[0] == 1

    def test_regime2_real(self):
        p = make("0", "1/3")
        val, _ = main_term(2, p, 3, arithmetic(p, 3))
        assert val.imag == 0
        assert abs(val - ramanujan_Aq(0.25, p.ctx).value) < 1e-36

    @pytest.mark.parametrize("n", [40, 42, 41, 43])
    def test_regime4_half_tau(self, n):
        p = make("-1/2", "0")
        ctx = p.ctx
        m, lam = frac_floor(Fraction(n, 2))
        want = theta(-4 * ctx.qm ** (chi(m) + lam), ctx).value
        got, _ = main_term(4, p, n, arithmetic(p, n))
        assert abs(got - want) < 1e-35

    def test_regime2_and_3_formulas_agree(self):
        # rational theta through regime 2, a decimal stand-in through regime 3 with beta = lambda
        p2 = make("0", "1/3")
        p3 = make("0", "dec:0.33333333333333333333333333333333333333333333:irrational")
        for n in range(1, 10):
            a2 = arithmetic(p2, n)
            a3 = Arithmetic(m=a2.m, beta=a2.lam, gamma_n=0, nu_n=0, rho=0.9)
            assert main_term(2, p2, n, a2)[0] == main_term(3, p3, n, a3)[0]


class TestBounds:
    def test_regime1_ratio(self):
        p = make("1/2", "0")
        a = Arithmetic()
        for n in (1, 7, 30):
            r = error_bound(1, p, n, a) / error_bound(1, p, n + 2, a)
            assert abs(r - 2) < 1e-35

    def test_regime2_reference(self):
        p = make("0", "1/3")
        b = error_bound(2, p, 12, arithmetic(p, 12))
        assert abs(b - p.ctx.mp.mpf(REGIME2_BOUND_N12)) < 1e-33

    def test_regime4_brace(self):
        from qplancherel.qseries import qpoch_infinite
        p = make("-1/2", "1/3")
        ctx, q = p.ctx, p.ctx.qm
        a = arithmetic(p, 40)
        assert a.nu_n == 5
        pre = 14 * qpoch_infinite(-q ** 3, ctx).upper ** 2 * theta(4, ctx.sqrt_base()).upper / ((1 - q) ** 2 * ctx.qq_inf)
        assert abs(error_bound(4, p, 40, a) / pre - ctx.mp.mpf(REGIME4_BRACE_NU5)) < 1e-33

    def test_assembled_regime2(self):
        p = make("0", "1/3")
        for n in range(1, 80):
            r = verify(p, n)
            assert r.abs_diff <= assembled_bound_regime2(p, n) + r.tolerance
            if n % 2 == 0:
                assert assembled_bound_regime2(p, n) <= r.bound


class TestVerify:
    def test_regime1_example(self):
        r = verify(make("1/2", "0"), 20)
        assert r.passed and r.abs_diff <= r.bound
        assert not r.n_small

    def test_regime2_explicit_sum(self):
        p = make("0", "1/3", bits=256)
        ctx = p.ctx
        mp, q = ctx.mp, ctx.qm
        n = 13
        w = -mp.expjpi(mp.mpf(2) / 3) / 4
        want = mp.fsum(q ** (k * k) * w ** k * qpoch_finite(q, ctx, n) /
                       (qpoch_finite(q, ctx, k) * qpoch_finite(q, ctx, n - k)) for k in range(n + 1))
        r = verify(p, n)
        assert r.arithmetic.lam == Fraction(1, 3)
        assert abs(r.exact - want) < mp.mpf(2) ** -240
        assert r.passed

    @pytest.mark.parametrize("tau, th, ns", [
        ("-1/2", "1/3", [8, 9, 77, 200]),
        ("-1/2", SQRT2, [408, 5741]),
        ("surd:0,-1,2,2", "1/3", [239, 8119]),
        ("surd:1,-1,2,1", "surd:-1,1,2,1", [985, 13860]),
    ])
    def test_strip_two_routes(self, tau, th, ns):
        p = make(tau, th)
        for n in ns:
            r = verify(p, n, cross_check=True)
            assert abs(r.exact - r.cross_check) <= 2 * r.tolerance
            assert r.passed

    def test_cross_check_is_decomposition(self):
        p = make("-1/2", "1/3")
        r = verify(p, 50, cross_check=True)
        assert r.cross_check == decomposition_sums(p, 50)[2].normalized

    def test_n_small_flag(self):
        p = make("-1/2", SQRT2)
        r = verify(p, 99, arithmetic(p, 99))
        assert r.n_small and r.passed and r.arithmetic.nu_n == 0

    def test_larger_constants_never_flip(self):
        cases = [(make("0", "1/3"), range(1, 40)), (make("-1/2", "1/3"), range(8, 60)),
                 (make("0", SQRT2), [408, 985, 2378])]
        for p, ns in cases:
            reg = int(classify(p))
            for n in ns:
                a = arithmetic(p, n)
                base = verify(p, n, a)
                bumped = verify(p, n, a, constant={2: 3, 3: 48, 4: 14}[reg] * 10)
                assert bumped.bound >= base.bound
                assert bumped.passed or not base.passed

    def test_regime1_decay_slope(self):
        p = make("1/4", "1/3", z=(1, 1))
        ns = list(range(20, 61, 4))
        ys = [float(p.ctx.mp.log(verify(p, n).abs_diff)) for n in ns]
        mx, my = sum(ns) / len(ns), sum(ys) / len(ys)
        slope = sum((x - mx) * (y - my) for x, y in zip(ns, ys)) / sum((x - mx) ** 2 for x in ns)
        want = 0.25 * math.log(0.5)
        assert abs(slope - want) <= 0.1 * abs(want)


class TestThreshold:
    def test_regime1_first_n(self):
        n0, reps = find_threshold(make("1/2", "1/3"), None, range(1, 30))
        assert n0 == 1
        assert [r.n for r in reps] == list(range(1, 30))

    def test_empty_pass_set(self):
        p = make("1/2", "1/3")
        n0, _ = find_threshold(p, None, range(1, 10), constant=0)
        assert n0 is None

    def test_ascending_required(self):
        with pytest.raises(DomainError):
            find_threshold(make("1/2", "0"), None, [5, 3])

    def test_regime_ids(self):
        assert [int(r) for r in RegimeId] == list(range(1, 8))
