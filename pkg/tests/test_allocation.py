import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from anoma_feedback import (
    AllocationMethod,
    ConvergenceError,
    SicUser,
    SystemParams,
    alpha_anoma_bound,
    alpha_anoma_exact,
    alpha_for_variant,
    alpha_noma,
    check_theorem,
    g_denominator,
    quartic_residual,
    rate_strong,
    rate_weak,
)
from anoma_feedback.allocation import (
    bound_alpha_values,
    exact_alpha_values,
    noma_alpha_values,
)

# closed-form and root-find values frozen from 40-digit evaluations
ALPHA_NOMA_21 = 0.16084952830141510
ALPHA_Z1_21 = 0.24396078054371139
ALPHA_EXACT_21 = 0.23329888735969309
ALPHA_EXACT_11 = 0.35721229173673494
ALPHA_NOMA_11 = 0.23166247903553998
G0_21 = 12.433981132056603


class TestNoma:
    def test_value(self, sync_params):
        result = alpha_noma(2.0, 1.0, sync_params)
        assert_allclose(result.alpha, ALPHA_NOMA_21, rtol=1e-14)
        assert result.method is AllocationMethod.NOMA
        assert result.sic_user is SicUser.USER1

    def test_symmetric_in_gains(self, sync_params):
        a = alpha_noma(2.0, 1.0, sync_params)
        b = alpha_noma(1.0, 2.0, sync_params)
        assert a.alpha == b.alpha
        assert b.sic_user is SicUser.USER2

    def test_equal_gains(self, sync_params):
        result = alpha_noma(1.0, 1.0, sync_params)
        assert_allclose(result.alpha, ALPHA_NOMA_11, rtol=1e-14)
        # ties hand SIC to user 1
        assert result.sic_user is SicUser.USER1
        assert_allclose(result.maxmin_rate, np.log2(np.sqrt(11.0)), rtol=1e-14)

    def test_equalizes_synchronous_rates(self, sync_params):
        rng = np.random.default_rng(5)
        for _ in range(50):
            h1, h2 = rng.exponential(2.0), rng.exponential(1.0)
            result = alpha_noma(h1, h2, sync_params)
            rs = rate_strong(max(h1, h2), result.alpha, sync_params)
            rw = rate_weak(min(h1, h2), result.alpha, sync_params)
            assert_allclose(rs, rw, rtol=1e-10)

    def test_zero_gain_degenerates(self, sync_params):
        result = alpha_noma(0.0, 1.0, sync_params)
        assert result.alpha == 0.0
        assert result.maxmin_rate == 0.0

    def test_rejects_negative_gain(self, sync_params):
        with pytest.raises(ValueError):
            alpha_noma(-0.1, 1.0, sync_params)


class TestBounds:
    def test_z05_value(self, params):
        result = alpha_anoma_bound(2.0, 1.0, params, 0.5)
        # g = sqrt((3 - 1.25)^2 + 4*(20 + 1.25)) + (3 - 1.25) = 10 exactly
        assert_allclose(result.alpha, 0.2, rtol=1e-14)
        assert result.method is AllocationMethod.ANOMA_Z05

    def test_z1_value(self, params):
        result = alpha_anoma_bound(2.0, 1.0, params, 1.0)
        assert_allclose(result.alpha, ALPHA_Z1_21, rtol=1e-14)
        assert result.method is AllocationMethod.ANOMA_Z1

    def test_z0_is_synchronous(self, params, sync_params):
        bound = alpha_anoma_bound(2.0, 1.0, params, 0.0)
        assert bound.alpha == alpha_noma(2.0, 1.0, sync_params).alpha
        assert bound.method is AllocationMethod.NOMA

    def test_no_offset_collapses_any_z(self, sync_params):
        for z in (0.25, 0.5, 1.0):
            bound = alpha_anoma_bound(2.0, 1.0, sync_params, z)
            assert bound.alpha == alpha_noma(2.0, 1.0, sync_params).alpha

    def test_intermediate_z_with_offset_has_no_tag(self, params):
        with pytest.raises(ValueError):
            alpha_anoma_bound(2.0, 1.0, params, 0.3)

    def test_z_out_of_range(self, params):
        with pytest.raises(ValueError):
            alpha_anoma_bound(2.0, 1.0, params, 1.5)

    def test_g_denominator_decreasing_in_z(self, params):
        assert_allclose(g_denominator(0.0, 2.0, 1.0, params), G0_21, rtol=1e-14)
        values = [g_denominator(x, 2.0, 1.0, params) for x in (0.0, 0.5, 1.0)]
        assert values[0] > values[1] > values[2]
        # alpha = 2*min/g, so a falling denominator means a rising coefficient
        assert_allclose(2.0 * 1.0 / values[1], 0.2, rtol=1e-14)

    def test_g_denominator_constant_without_offset(self, sync_params):
        values = {g_denominator(x, 2.0, 1.0, sync_params) for x in (0.0, 0.5, 1.0)}
        assert len(values) == 1


class TestExact:
    def test_values(self, params):
        assert_allclose(alpha_anoma_exact(2.0, 1.0, params).alpha,
                        ALPHA_EXACT_21, atol=1e-9)
        assert_allclose(alpha_anoma_exact(1.0, 1.0, params).alpha,
                        ALPHA_EXACT_11, atol=1e-9)

    def test_equalizes_rates(self, params):
        result = alpha_anoma_exact(3.0, 0.4, params, tol=1e-12)
        rs = rate_strong(3.0, result.alpha, params)
        rw = rate_weak(0.4, result.alpha, params)
        assert_allclose(rs, rw, rtol=1e-11)
        assert_allclose(result.maxmin_rate, rs, rtol=1e-12)

    def test_vectorized_matches_scalar(self, params):
        rng = np.random.default_rng(9)
        h1 = rng.exponential(2.0, 30)
        h2 = rng.exponential(1.0, 30)
        vec = exact_alpha_values(h1, h2, params)
        for k in range(30):
            scalar = alpha_anoma_exact(h1[k], h2[k], params).alpha
            assert_allclose(vec[k], scalar, atol=1e-9)

    def test_quartic_residual_small_at_root(self, params):
        rng = np.random.default_rng(13)
        h1 = rng.exponential(2.0, 200)
        h2 = rng.exponential(1.0, 200)
        alphas = exact_alpha_values(h1, h2, params)
        assert np.max(quartic_residual(alphas, h1, h2, params)) < 1e-10

    def test_quartic_residual_large_off_root(self, params):
        root = alpha_anoma_exact(2.0, 1.0, params).alpha
        assert quartic_residual(root + 0.1, 2.0, 1.0, params) > 1e-3

    def test_zero_gain(self, params):
        result = alpha_anoma_exact(0.0, 5.0, params)
        assert result.alpha == 0.0

    def test_exhausted_budget_raises(self, params):
        # four bisection steps cannot reach a 1e-30 rate gap
        with pytest.raises(ConvergenceError) as err:
            alpha_anoma_exact(2.0, 1.0, params, tol=1e-30, max_iter=4)
        lo, hi = err.value.bracket
        assert 0.0 <= lo <= hi <= 1.0


class TestTheoremChain:
    def test_chain_at_reference_point(self, params):
        chk = check_theorem(2.0, 1.0, params)
        assert chk.chain_holds
        assert chk.alpha_noma < chk.alpha_lower < chk.alpha_exact < chk.alpha_upper

    def test_collapse_without_offset(self, sync_params):
        chk = check_theorem(2.0, 1.0, sync_params)
        assert chk.chain_holds
        spread = max(chk.alpha_lower, chk.alpha_exact, chk.alpha_upper) - \
            min(chk.alpha_lower, chk.alpha_exact, chk.alpha_upper)
        assert spread <= 1e-12
        assert_allclose(chk.alpha_noma, chk.alpha_exact, atol=1e-12)

    # subnormal-scale gains underflow s^2 inside the closed form, so the
    # property covers exact zero plus physical magnitudes
    _gain = st.one_of(st.just(0.0), st.floats(1e-6, 50.0))

    @settings(max_examples=60, deadline=None)
    @given(h1=_gain, h2=_gain, tau=st.floats(0.0, 0.95),
           power=st.floats(0.1, 100.0))
    def test_chain_holds_everywhere(self, h1, h2, tau, power):
        chk = check_theorem(h1, h2, SystemParams(power, tau))
        assert chk.chain_holds

    def test_bound_gap_grows_with_offset(self):
        # the z-term scales with q_factor, so tau = 0.5 separates the
        # bounds the most
        gaps = []
        for tau in (0.1, 0.3, 0.5):
            chk = check_theorem(2.0, 1.0, SystemParams(10.0, tau))
            gaps.append(chk.alpha_upper - chk.alpha_lower)
        assert gaps[0] < gaps[1] < gaps[2]


class TestVariantDispatch:
    def test_matches_scalar_solvers(self, params, sync_params):
        h1 = np.array([2.0, 0.5, 1.0])
        h2 = np.array([1.0, 3.0, 1.0])
        got = alpha_for_variant(h1, h2, params, AllocationMethod.NOMA)
        assert_allclose(got, noma_alpha_values(h1, h2, 10.0), rtol=0)
        got = alpha_for_variant(h1, h2, params, AllocationMethod.ANOMA_Z05)
        assert_allclose(got, bound_alpha_values(h1, h2, params, 0.5), rtol=0)
        got = alpha_for_variant(h1, h2, params, AllocationMethod.ANOMA_EXACT)
        assert_allclose(got, exact_alpha_values(h1, h2, params), rtol=0)

    def test_alpha_in_unit_interval(self, params):
        rng = np.random.default_rng(21)
        h1 = rng.exponential(2.0, 500)
        h2 = rng.exponential(1.0, 500)
        for variant in AllocationMethod:
            alphas = alpha_for_variant(h1, h2, params, variant)
            assert np.all(alphas >= 0.0)
            assert np.all(alphas <= 1.0)

    def test_strong_user_gets_minority_share(self, params):
        # the SIC user decodes interference-free, so max-min fairness
        # always gives it less than half the power
        rng = np.random.default_rng(22)
        h1 = rng.exponential(2.0, 200) + 1e-6
        h2 = rng.exponential(1.0, 200) + 1e-6
        for variant in AllocationMethod:
            alphas = alpha_for_variant(h1, h2, params, variant)
            assert np.all(alphas < 0.5)
