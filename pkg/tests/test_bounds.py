import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfnorm import bounds
from selfnorm.bounds import (
    TABLE1,
    HolderPair,
    WeightParam,
    ar_bound,
    ar_rate,
    baseline_bound,
    cbg_threshold,
    exp_tail_bound,
    hermite_margin,
    idla_bounds,
    idla_cn,
    idla_dn,
    kearns_saul_phi,
    learning_phi,
    learning_phi_inverse,
    learning_threshold,
    missing_factor_bound,
    pab_discriminant,
    pqv_ratio_bound,
    ratio_tail_bound,
    weight_b,
    weight_c,
)

A_GRID = np.linspace(0.125 + 1e-6, 10.0, 2000)

admissible = st.floats(min_value=0.125 + 1e-6, max_value=10.0)


class TestWeights:
    def test_table1(self):
        for a, c in TABLE1:
            assert weight_c(a) == pytest.approx(c, abs=1e-12)

    def test_special_values(self):
        assert weight_c(9 / 55) == pytest.approx(10.0, abs=1e-12)
        assert weight_c(25 / 96) == pytest.approx(3.0, abs=1e-12)
        assert weight_c(500.0) == pytest.approx(1 / 1000, rel=0.01)

    def test_b_values(self):
        assert weight_b(1 / 3) == pytest.approx(2 / 3, abs=1e-12)
        assert weight_b(9 / 16) == pytest.approx(9 / 16, abs=1e-12)
        assert 0.5 < weight_b(100.0) < 0.5002

    def test_domain_errors(self):
        for a in (0.125, 0.1, -1.0):
            with pytest.raises(ValueError):
                weight_c(a)
            with pytest.raises(ValueError):
                weight_b(a)

    @given(admissible)
    def test_b_is_a_times_c(self, a):
        assert abs(weight_b(a) - a * weight_c(a)) < 1e-12

    @given(admissible)
    def test_b_above_half_c_positive(self, a):
        assert weight_c(a) > 0.0
        assert weight_b(a) > 0.5

    def test_c_strictly_convex_on_grid(self):
        a1, a3 = A_GRID[:-2], A_GRID[2:]
        mid = (a1 + a3) / 2.0
        c = np.vectorize(weight_c)
        assert np.all(c(mid) < (c(a1) + c(a3)) / 2.0)

    def test_weight_param(self):
        wp = WeightParam.make(1 / 3)
        assert (wp.a, wp.c) == (1 / 3, 2.0)
        assert wp.b == pytest.approx(2 / 3, abs=1e-15)


class TestHermite:
    def test_zero_at_origin(self):
        for a in (0.13, 1 / 3, 9 / 16, 5.0):
            assert hermite_margin(0.0, a) == 0.0

    def test_frozen_values(self):
        assert hermite_margin(1.0, 1 / 3) == pytest.approx(0.032357442440508405, abs=1e-12)
        assert hermite_margin(-2.0, 9 / 16) == pytest.approx(0.08106306637659258, abs=1e-12)

    @given(st.floats(min_value=-50.0, max_value=50.0), st.sampled_from([0.13, 0.2, 1 / 3, 9 / 16, 1.0, 2.0, 10.0]))
    def test_nonnegative(self, x, a):
        assert hermite_margin(x, a) >= -1e-12

    def test_domain_error(self):
        with pytest.raises(ValueError):
            hermite_margin(1.0, 0.125)


class TestDiscriminant:
    def test_vanishes_at_b_of_a(self):
        for a in np.linspace(0.13, 10.0, 500):
            assert abs(pab_discriminant(a, weight_b(a))) < 1e-10

    def test_sign_away_from_root(self):
        b = weight_b(1 / 3)
        assert pab_discriminant(1 / 3, b) == pytest.approx(0.0, abs=1e-12)
        assert pab_discriminant(1 / 3, 0.8) < 0.0
        assert pab_discriminant(1 / 3, 0.6) > 0.0

    def test_negative_above_root(self):
        for a in np.linspace(0.13, 10.0, 200):
            for eps in (1e-3, 0.1):
                assert pab_discriminant(a, weight_b(a) + eps) < 0.0

    def test_preconditions(self):
        with pytest.raises(ValueError):
            pab_discriminant(0.1, 0.8)
        with pytest.raises(ValueError):
            pab_discriminant(1 / 3, 0.4)
        with pytest.raises(ValueError):
            pab_discriminant(1 / 3, 1 - 1 / 3)


class TestTailBounds:
    def test_exp_tail_values(self):
        assert exp_tail_bound(3.0, 3.0, 9 / 16) == pytest.approx(2 * math.exp(-8 / 3), abs=1e-15)
        assert exp_tail_bound(3.0, 3.0, 1 / 3) == pytest.approx(2 * math.exp(-9 / 2), abs=1e-15)
        # tiny x: raw bound 2, capped at 1
        assert exp_tail_bound(1e-12, 1.0, 1 / 3) == 1.0

    def test_exp_tail_matches_special_forms(self):
        for x, y in ((0.5, 1.0), (3.0, 3.0), (2.0, 7.0)):
            assert exp_tail_bound(x, y, 9 / 16) == pytest.approx(
                min(1.0, 2 * math.exp(-8 * x * x / (9 * y))), abs=1e-15
            )
            assert exp_tail_bound(x, y, 1 / 3) == pytest.approx(
                min(1.0, 2 * math.exp(-3 * x * x / (2 * y))), abs=1e-15
            )

    def test_ratio_values(self):
        assert ratio_tail_bound(1.0, 1.0, 9 / 16) == pytest.approx(0.8222245810143749, abs=1e-12)
        assert ratio_tail_bound(2.0, 1.0, 1 / 3) == pytest.approx(0.004957504353332717, abs=1e-15)
        assert ratio_tail_bound(1e-12, 1.0, 1 / 3) == 1.0

    def test_pqv_ratio_values(self):
        # c(9/16) = 1 collapses the two ratio forms
        assert pqv_ratio_bound(1.0, 1.0, 9 / 16) == ratio_tail_bound(1.0, 1.0, 9 / 16)
        assert pqv_ratio_bound(1.0, 1.0, 1 / 3) == 1.0  # raw 2e^{-3/8} > 1
        assert pqv_ratio_bound(3.0, 1.0, 1 / 3) == pytest.approx(0.06843623662333207, abs=1e-12)

    def test_input_validation(self):
        for fn in (exp_tail_bound, ratio_tail_bound, pqv_ratio_bound):
            with pytest.raises(ValueError):
                fn(0.0, 1.0, 1 / 3)
            with pytest.raises(ValueError):
                fn(1.0, -1.0, 1 / 3)
            with pytest.raises(ValueError):
                fn(1.0, 1.0, 0.1)


class TestBaselines:
    def test_improved_dominates_bt2008(self):
        for x in (0.5, 1.0, 2.0, 5.0):
            for y in (0.5, 1.0, 10.0):
                assert baseline_bound("IMPROVED", x, y) <= baseline_bound("BT2008", x, y)

    def test_azuma_idla(self):
        assert baseline_bound("AZUMA_IDLA", 0.2, 100) == pytest.approx(
            2 * math.exp(-1.5), abs=1e-15
        )

    def test_gauss_ar_root(self):
        # independent bisection oracle for h(y) = x^2
        def solve(x):
            h = lambda y: (1 + y) * math.log1p(y) - y
            lo, hi = 0.0, 100.0
            for _ in range(200):
                mid = (lo + hi) / 2
                if h(mid) < x * x:
                    lo = mid
                else:
                    hi = mid
            return (lo + hi) / 2

        yx = solve(0.4)
        assert yx == pytest.approx(0.6168213117040653, abs=1e-9)
        assert yx <= 2 * 0.4
        expected = min(1.0, 2 * math.exp(-100 * 0.16 / (2 * (1 + yx))))
        assert baseline_bound("GAUSS_AR", 0.4, 100) == pytest.approx(expected, rel=1e-9)

    def test_gauss_ar_linear_bound_small_x(self):
        # y_x <= 2x whenever 0 < x < 1/2
        for x in (0.05, 0.2, 0.4, 0.49):
            got = baseline_bound("GAUSS_AR", x, 100)
            relaxed = min(1.0, 2 * math.exp(-100 * x * x / (2 * (1 + 2 * x))))
            assert got <= relaxed + 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            baseline_bound("NOPE", 1.0, 1.0)
        with pytest.raises(ValueError):
            baseline_bound("BT2008", -1.0, 1.0)
        with pytest.raises(ValueError):
            baseline_bound("AZUMA_IDLA", 1.0, 0)


class TestMissingFactor:
    def test_p2(self):
        scale, bound = missing_factor_bound(1.0, 2.0)
        assert scale == pytest.approx(math.sqrt(1.5), abs=1e-15)
        assert bound == pytest.approx((2 / 3) ** (1 / 3) * math.exp(-0.5), abs=1e-12)

    def test_holder_pair(self):
        hp = HolderPair.make(2.0)
        assert hp.q == 2.0
        assert hp.B == pytest.approx(2 / 3, abs=1e-15)
        assert hp.C == pytest.approx(0.8735804647362989, abs=1e-12)
        assert abs(1 / hp.p + 1 / hp.q - 1.0) < 1e-15

    def test_limit_direction(self):
        h10, h100 = HolderPair.make(10.0), HolderPair.make(100.0)
        assert 2 / 3 <= h10.B < h100.B < 1.0
        assert h10.C < h100.C < 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            missing_factor_bound(1.0, 1.5)
        with pytest.raises(ValueError):
            missing_factor_bound(0.0, 2.0)


class TestKearnsSaul:
    def test_values(self):
        assert kearns_saul_phi(0.5) == 0.5
        assert kearns_saul_phi(0.5 + 1e-12) == 0.5
        assert kearns_saul_phi(1 / 3) == pytest.approx(1 / (3 * math.log(2)), abs=1e-14)
        assert kearns_saul_phi(0.01) == pytest.approx(0.98 / math.log(99), abs=1e-14)

    @given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
    def test_range(self, p):
        assert 0.0 <= kearns_saul_phi(p) <= 0.5 + 1e-15

    def test_validation(self):
        for p in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                kearns_saul_phi(p)


class TestArBound:
    def test_rate_reductions(self):
        assert ar_rate(1 / 3, 0.5) == pytest.approx(3.0, abs=1e-12)
        assert ar_rate(9 / 16, 0.5) == pytest.approx(2.0, abs=1e-12)
        d = ar_rate(9 / 16, 1 / 3)
        assert d == pytest.approx(16 / 3, abs=1e-12)
        assert 9 / 16 * d == pytest.approx(3.0, abs=1e-12)

    def test_bound_special_forms(self):
        n = 50
        for x in (0.2, 0.5, 1.0):
            assert ar_bound(x, n, 0.5, 1 / 3) == pytest.approx(
                min(1.0, 2 * math.exp(-n * x * x / 4)), abs=1e-15
            )
        for x in (0.5, 1.5, math.sqrt(3)):
            assert ar_bound(x, n, 1 / 3, 9 / 16) == pytest.approx(
                min(1.0, 2 * math.exp(-n * x * x / 27)), abs=1e-15
            )

    def test_edges(self):
        assert ar_bound(0.0, 10, 0.5, 1 / 3) == 1.0
        with pytest.raises(ValueError):
            ar_bound(1.0001, 10, 0.5, 1 / 3)  # beyond sqrt(a d(a)) = 1
        with pytest.raises(ValueError):
            ar_bound(0.5, 0, 0.5, 1 / 3)
        with pytest.raises(ValueError):
            ar_rate(1 / 3, 0.6)


class TestIdlaConstants:
    def test_third_closed_form(self):
        for n in (1, 2, 5, 10, 100, 10_000):
            expected = (10 * n * n + 33 * n + 29) / (6.0 * (n + 1) ** 2)
            assert idla_cn(n, 1 / 3) == pytest.approx(expected, rel=1e-12)
        assert idla_cn(1, 1 / 3) == pytest.approx(3.0, abs=1e-12)

    def test_quarter_closed_form(self):
        # direct expansion of the defining formula with c(25/96) = 3:
        # (2n+1)/(n+1) + (4n+6)/(n+1)^2 = (2n^2 + 7n + 7)/(n+1)^2
        for n in (1, 2, 5, 10, 100, 10_000):
            expected = (2 * n * n + 7 * n + 7) / float(n + 1) ** 2
            assert idla_cn(n, 25 / 96) == pytest.approx(expected, rel=1e-12)

    def test_sweep_caps(self):
        ns = np.arange(1, 1_000_001, dtype=float)
        c = 2.0
        cn = (2 * ns + 1) / (ns + 1) * (3 + c) / 6 + (ns * (1 + c) + 2 * c) / (ns + 1) ** 2
        assert np.all(cn <= 3.0 + 1e-12)
        assert np.all(cn + (ns + 2) / (3 * ns) <= 4.0 + 1e-12)

    def test_dn(self):
        assert idla_dn(10, 1 / 3) == pytest.approx(idla_cn(10, 1 / 3) + 12 / 30, abs=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            idla_cn(10, 0.6)  # above 9/16
        with pytest.raises(ValueError):
            idla_cn(0, 1 / 3)
        idla_cn(10, 9 / 16)  # closed endpoint accepted

    def test_bounds_remark_caps(self):
        # c_n <= 3 and d_n <= 4 at a = 1/3, so the exact bound is at least as
        # sharp as the remark's simplified forms
        for n in (1, 10, 100):
            for x in (0.1, 0.5, 1.0):
                scaled, sqrt_scaled = idla_bounds(x, n, 1 / 3)
                assert scaled <= min(1.0, 2 * math.exp(-n * x * x / 2)) + 1e-15
        for x in (1.0, 2.0, 4.0):
            _, sqrt_scaled = idla_bounds(x, 100, 1 / 3)
            relaxed = (2 / x) ** (2 / 3) * math.exp(-x * x / 12)
            assert sqrt_scaled <= min(1.0, relaxed) + 1e-15


class TestLearning:
    def test_threshold_values(self):
        assert learning_threshold(100, 1 / 3, 0.2, 1.0) == pytest.approx(
            math.sqrt(-2 * math.log(0.2) / 100), abs=1e-15
        )
        assert learning_threshold(100, 1 / 3, 0.2, 0.0) == pytest.approx(
            0.10358371533640798, abs=1e-12
        )
        assert learning_threshold(100, 1 / 3, 1.0, 0.5) == 0.0

    def test_threshold_shrinks_with_vbar(self):
        full = learning_threshold(100, 1 / 3, 0.2, 1.0)
        for v in (0.0, 0.3, 0.9):
            assert learning_threshold(100, 1 / 3, 0.2, v) < full

    def test_phi_inverse_value(self):
        # closed-form evaluation; the quoted 0.220 is not reproduced by the
        # stated formula and is deliberately not asserted
        got = learning_phi_inverse(0.0, 100, 1 / 3, 0.2)
        assert got == pytest.approx(0.11486752393651311, abs=1e-10)

    def test_floor(self):
        # m(1/3) = 6, so delta = 0.2 needs n >= 2 ln 5, i.e. n >= 4
        assert bounds.learning_m(1 / 3) == pytest.approx(6.0, abs=1e-12)
        with pytest.raises(ValueError):
            learning_phi_inverse(0.0, 3, 1 / 3, 0.2)
        learning_phi_inverse(0.0, 4, 1 / 3, 0.2)

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.01, max_value=0.99),
    )
    @settings(max_examples=200)
    def test_phi_roundtrip(self, r, delta):
        inv = learning_phi_inverse(r, 100, 1 / 3, delta)
        assert learning_phi(inv, 100, 1 / 3, delta) == pytest.approx(r, abs=1e-10)

    def test_increasing_in_r(self):
        grid = np.linspace(0.0, 1.0, 101)
        inv = [learning_phi_inverse(r, 100, 1 / 3, 0.2) for r in grid]
        cbg = [cbg_threshold(r, 100, 0.2) for r in grid]
        assert all(b > a for a, b in zip(inv, inv[1:]))
        assert all(b > a for a, b in zip(cbg, cbg[1:]))

    def test_cbg_values(self):
        assert cbg_threshold(0.0, 100, 0.2) == pytest.approx(0.9748980723967956, abs=1e-12)
        # effective horizon: 36 log(3/delta) for r_hat = 0
        assert 36 * math.log(3 / 0.2) <= 98.0
        assert cbg_threshold(0.0, 10**9, 0.2) < 1e-6

    def test_validation(self):
        with pytest.raises(ValueError):
            learning_threshold(100, 0.6, 0.2, 1.0)
        with pytest.raises(ValueError):
            learning_threshold(100, 1 / 3, 0.0, 1.0)
        with pytest.raises(ValueError):
            learning_threshold(100, 1 / 3, 0.2, 1.5)
        with pytest.raises(ValueError):
            cbg_threshold(-0.1, 100, 0.2)
