import math

import numpy as np
import pytest

from helpers import mc_bstar
from posauction import (
    AllocProbInput,
    BayesSetting,
    Power,
    SlotCurve,
    Uniform,
    alloc_prob,
    best_response_scan,
    bstar_binomial,
    bstar_derivative,
    bstar_integral,
    check_auxiliary_lemmas,
    check_lemma1,
    check_lemma2,
    check_ode,
    expected_utility,
    myerson_expected_payment,
    truthful_utility_onedim,
    truthful_win_probability,
)


class TestSetting:
    def test_rejects_too_few_agents(self, uniform01):
        with pytest.raises(ValueError):
            BayesSetting(n=2, curve=SlotCurve([2.0, 1.0]), dist=uniform01)

    def test_accepts_boundary(self, uniform01):
        BayesSetting(n=3, curve=SlotCurve([2.0, 1.0]), dist=uniform01)


class TestBstar:
    def test_analytic_two_agents_one_slot(self, setting_2_1):
        for v in np.linspace(0.05, 1.0, 9):
            assert abs(bstar_integral(1, float(v), setting_2_1) - v / 2.0) < 1e-9

    def test_zero_value(self, setting_3_2):
        assert bstar_integral(1, 0.0, setting_3_2) == 0.0
        assert bstar_binomial(2, 0.0, setting_3_2) == 0.0

    def test_analytic_three_agents_two_slots(self, setting_3_2):
        # slot 1: (b1-b2) E[2nd of 3 | v top] + b2 E[3rd] = (b1-b2) 2v/3 + b2 v/3
        # slot 2: b2 E[3rd | v second] = b2 v/2
        for v in (0.25, 0.6, 0.95):
            b1 = bstar_integral(1, v, setting_3_2)
            b2 = bstar_integral(2, v, setting_3_2)
            assert abs(b1 - ((2.0 - 1.0) * 2 * v / 3 + 1.0 * v / 3)) < 1e-9
            assert abs(b2 - v / 2.0) < 1e-9

    def test_binomial_example(self, setting_2_1):
        assert abs(bstar_binomial(1, 0.8, setting_2_1) - 0.4) < 1e-9

    def test_monte_carlo_oracle(self, setting_3_2):
        for j in (1, 2):
            mean, se = mc_bstar(j, 0.6, setting_3_2, 1_000_000, seed=20260810 + j)
            exact = bstar_integral(j, 0.6, setting_3_2)
            assert abs(mean - exact) <= 3.0 * se

    @pytest.mark.parametrize("dist", [Uniform(1.0), Power(1.0, 2.0)])
    @pytest.mark.parametrize("n,k", [(3, 2), (5, 3), (6, 4)])
    def test_binomial_matches_integral(self, dist, n, k):
        curve = SlotCurve(np.linspace(2.0, 1.0, k))
        setting = BayesSetting(n=n, curve=curve, dist=dist)
        for v in np.linspace(0.1, 1.0, 7):
            for j in range(1, k + 1):
                a = bstar_integral(j, float(v), setting)
                b = bstar_binomial(j, float(v), setting)
                assert abs(a - b) < 1e-7

    def test_position_validation(self, setting_3_2):
        with pytest.raises(ValueError):
            bstar_integral(0, 0.5, setting_3_2)
        with pytest.raises(ValueError):
            bstar_integral(3, 0.5, setting_3_2)


class TestBstarDerivative:
    def test_analytic_slope(self, setting_2_1):
        for v in (0.2, 0.5, 0.9):
            assert abs(bstar_derivative(1, v, setting_2_1) - 0.5) < 1e-9

    def test_matches_finite_difference(self, setting_4_2):
        h = 1e-4
        for j in (1, 2):
            fd = (
                bstar_integral(j, 0.5 + h, setting_4_2)
                - bstar_integral(j, 0.5 - h, setting_4_2)
            ) / (2 * h)
            assert abs(bstar_derivative(j, 0.5, setting_4_2) - fd) < 1e-6

    def test_linear_in_curve(self, uniform01):
        s1 = BayesSetting(n=4, curve=SlotCurve([2.0, 1.0]), dist=uniform01)
        s2 = BayesSetting(n=4, curve=SlotCurve([4.0, 2.0]), dist=uniform01)
        for j in (1, 2):
            d1 = bstar_derivative(j, 0.6, s1)
            d2 = bstar_derivative(j, 0.6, s2)
            assert abs(d2 - 2.0 * d1) < 1e-10

    def test_undefined_at_zero(self, setting_2_1):
        with pytest.raises(ValueError):
            bstar_derivative(1, 0.0, setting_2_1)


class TestAllocProb:
    def test_top_slot(self, uniform01):
        assert abs(alloc_prob(1, 2, [0.5, 0.3], uniform01) - 0.25) < 1e-12

    def test_second_slot(self, uniform01):
        assert abs(alloc_prob(2, 2, [0.5, 0.5], uniform01) - 0.5) < 1e-12

    def test_probabilities_sum_to_one(self, uniform01):
        n, k = 5, 3
        for v in (0.2, 0.55, 0.9):
            x = np.full(k, v)
            total = sum(alloc_prob(s, n - 1, x, uniform01) for s in range(1, k + 1))
            lose = sum(
                math.comb(n - 1, r) * (1 - v) ** r * v ** (n - 1 - r)
                for r in range(k, n)
            )
            assert abs(total + lose - 1.0) < 1e-9

    def test_simulation_agreement(self, uniform01):
        n, k, v = 4, 2, 0.55
        rng = np.random.Generator(np.random.Philox(key=[101, 0]))
        opponents = uniform01.sample(rng, (1_000_000, n - 1))
        above = (opponents > v).sum(axis=1)
        for s in range(1, k + 1):
            p_hat = float((above == s - 1).mean())
            p = alloc_prob(s, n - 1, np.full(k, v), uniform01)
            se = math.sqrt(p * (1 - p) / 1_000_000)
            assert abs(p_hat - p) <= 3.0 * se

    def test_independent_of_trailing_coordinates(self, uniform01):
        base = np.array([0.8, 0.6, 0.4])
        changed = np.array([0.8, 0.6, 0.05])
        for s in (1, 2):
            assert alloc_prob(s, 4, base, uniform01) == alloc_prob(s, 4, changed, uniform01)

    def test_index_constraint(self, uniform01):
        with pytest.raises(ValueError):
            alloc_prob(3, 1, [0.5, 0.5, 0.5], uniform01)

    def test_input_type_validation(self):
        with pytest.raises(ValueError):
            AllocProbInput(np.array([0.2, 0.5]))
        AllocProbInput(np.array([0.5, 0.2]))


class TestExpectedUtility:
    def test_truthful_matches_onedim_form(self, setting_4_2):
        for v in (0.3, 0.6, 0.85):
            direct = expected_utility(np.full(2, v), v, setting_4_2)
            onedim = truthful_utility_onedim(v, setting_4_2)
            assert abs(direct - onedim) < 1e-7

    def test_analytic_two_agent_case(self, setting_2_1):
        got = expected_utility([0.5], 0.5, setting_2_1)
        assert abs(got - 0.125) < 1e-9

    def test_zero_report_wins_nothing(self, setting_3_2):
        assert expected_utility([0.0, 0.0], 0.7, setting_3_2) == 0.0


class TestMyerson:
    def test_zero(self, setting_2_1):
        assert myerson_expected_payment(0.0, setting_2_1) == 0.0

    def test_analytic_quadratic(self, setting_2_1):
        for v in (0.3, 0.5, 0.8):
            got = myerson_expected_payment(v, setting_2_1)
            assert abs(got - v * v / 2) < 1e-8

    def test_payment_identity(self, setting_4_2):
        # sum_s P_s(v) b*_s(v) equals the Myerson expected payment
        for v in np.linspace(0.1, 0.95, 9):
            v = float(v)
            lhs = sum(
                truthful_win_probability(s, v, setting_4_2) * setting_4_2.bstar(s, v)
                for s in (1, 2)
            )
            assert abs(lhs - myerson_expected_payment(v, setting_4_2)) < 1e-7

    def test_expected_allocation_monotone(self, setting_4_2):
        vs = np.linspace(0.0, 1.0, 33)
        betas = setting_4_2.curve.betas
        weighted = [
            sum(betas[s - 1] * truthful_win_probability(s, float(v), setting_4_2)
                for s in (1, 2))
            for v in vs
        ]
        assert np.all(np.diff(weighted) >= -1e-12)


class TestLemma1:
    def test_small_cases(self, setting_3_2):
        assert check_lemma1(1, 0.5, setting_3_2, 1e-3) < 1e-4
        assert check_lemma1(2, 0.5, setting_3_2, 1e-3) < 1e-4

    def test_analytic_case_tight(self, setting_2_1):
        assert check_lemma1(1, 0.7, setting_2_1, 1e-3) < 1e-5

    def test_last_position(self, setting_4_2):
        assert check_lemma1(2, 0.4, setting_4_2, 1e-3) < 1e-4

    def test_second_order_convergence(self, setting_4_2):
        r1 = check_lemma1(1, 0.5, setting_4_2, 2e-2)
        r2 = check_lemma1(1, 0.5, setting_4_2, 1e-2)
        assert 2.5 < r1 / r2 < 6.0


class TestLemma2:
    def test_grid_minimum(self, setting_3_2):
        vs = np.linspace(0.1, 0.9, 10)
        for j in (1, 2):
            assert check_lemma2(j, vs, vs, setting_3_2, 1e-3) >= -1e-4

    def test_single_slot_reduces_to_density(self, setting_2_1):
        vs = np.linspace(0.2, 0.8, 5)
        got = check_lemma2(1, vs, vs, setting_2_1, 1e-3)
        # cross derivative is beta_1 * f(x) = 1 for uniform[0,1]
        assert got >= -1e-6
        assert abs(got - 1.0) < 1e-3

    def test_scales_with_curve(self, uniform01):
        lo = BayesSetting(n=3, curve=SlotCurve([1.0, 1e-3]), dist=uniform01)
        vs = np.linspace(0.3, 0.7, 4)
        # the slot-2 cross difference is proportional to beta_2
        got = check_lemma2(2, vs, vs, lo, 1e-3)
        assert -1e-6 <= got < 1e-2


class TestOde:
    @pytest.mark.parametrize("dist", [Uniform(1.0), Power(1.0, 2.0)])
    @pytest.mark.parametrize("n,k", [(3, 1), (3, 2), (4, 2), (5, 3)])
    def test_residuals(self, dist, n, k):
        setting = BayesSetting(n=n, curve=SlotCurve(np.linspace(2.0, 1.0, k)), dist=dist)
        for j in range(1, k + 1):
            for v in np.linspace(0.15, 0.9, 5):
                assert check_ode(j, float(v), setting) < 1e-6

    def test_analytic_case_exact(self, setting_2_1):
        assert check_ode(1, 0.5, setting_2_1) < 1e-8

    def test_undefined_at_zero(self, setting_2_1):
        with pytest.raises(ValueError):
            check_ode(1, 0.0, setting_2_1)


class TestAuxiliaryLemmas:
    def test_paired_identity(self, setting_4_2):
        x = np.full(4, 0.5)
        assert check_auxiliary_lemmas(1, 3, x, setting_4_2, 1e-4) < 1e-6

    def test_single_slot_identity(self, setting_4_2):
        x = np.full(4, 0.5)
        assert check_auxiliary_lemmas(1, 4, x, setting_4_2, 1e-4, ell=3) < 1e-6

    def test_all_valid_combinations(self, setting_4_2):
        for v in (0.3, 0.5, 0.7):
            for m in range(2, 6):
                for j in range(1, m):
                    x = np.full(max(j + 1, m), v)
                    assert check_auxiliary_lemmas(j, m, x, setting_4_2, 1e-4) < 1e-6
                    for ell in range(j + 2, m + 1):
                        x = np.full(max(ell, m), v)
                        r = check_auxiliary_lemmas(j, m, x, setting_4_2, 1e-4, ell=ell)
                        assert r < 1e-6

    def test_negative_control_non_truthful_tail(self, setting_4_2):
        x = np.array([0.5, 0.8, 0.5, 0.5])
        assert check_auxiliary_lemmas(1, 3, x, setting_4_2, 1e-4) > 1e-2

    def test_second_order_convergence(self, setting_4_2):
        # perturb the evaluation point off the symmetric center so the third
        # derivative term is non-trivial
        x = np.array([0.62, 0.62, 0.62, 0.62])
        r1 = check_auxiliary_lemmas(1, 3, x, setting_4_2, 4e-2)
        r2 = check_auxiliary_lemmas(1, 3, x, setting_4_2, 2e-2)
        assert 2.5 < r1 / r2 < 6.0

    def test_constraint_validation(self, setting_4_2):
        x = np.full(4, 0.5)
        with pytest.raises(ValueError):
            check_auxiliary_lemmas(2, 2, x, setting_4_2, 1e-4)
        with pytest.raises(ValueError):
            check_auxiliary_lemmas(1, 4, x, setting_4_2, 1e-4, ell=2)


class TestBestResponseScan:
    def test_equilibrium_has_no_profitable_deviation(self, setting_3_2):
        grid = np.linspace(0.0, 1.0, 50)
        for v in (0.25, 0.5, 0.8):
            assert best_response_scan(v, setting_3_2, grid) <= 1e-4

    def test_single_slot_analytic(self, setting_2_1):
        grid = np.linspace(0.0, 1.0, 101)
        assert best_response_scan(0.6, setting_2_1, grid) <= 1e-6

    def test_scaled_table_is_detected(self, setting_3_2):
        grid = np.linspace(0.0, 1.0, 50)
        half = lambda j, t: 0.5 * setting_3_2.bstar(j, t)
        assert best_response_scan(0.5, setting_3_2, grid, bid_fn=half) > 1e-2

    def test_empty_grid_rejected(self, setting_3_2):
        with pytest.raises(ValueError):
            best_response_scan(0.5, setting_3_2, [])
