"""Gumbel-linked pair model and the Gaussian-tail bound machinery.

The independent oracle for the tail integral is the standard library's
erfc; derived probability values were evaluated from the completed-square
reductions before the build and frozen below.
"""

import math

import numpy as np
import pytest

from simulstop.bivariate import BivariateScenario, joint_survival, prob_equal
from simulstop.errors import ConfigError
from simulstop.gumbel import (
    GumbelScenario,
    erfc_bound_h,
    erfc_bound_optimize,
    gaussian_tail,
    gumbel_covariance_constant,
    gumbel_joint_survival,
    gumbel_prob_equal,
    gumbel_prob_equal_dominated,
    neg_cov_condition,
)


def tail_oracle(x: float) -> float:
    """int_x^inf e^{-u^2} du through the standard library."""
    return math.sqrt(math.pi) / 2.0 * math.erfc(x)


class TestSurvival:
    def test_delta_zero_reduces_exactly(self):
        gs = GumbelScenario.from_constants(1, 2, 3, 0.0)
        assert float(gumbel_joint_survival(gs, 1, 2)) == float(
            joint_survival(gs.base, 1, 2)
        )
        assert abs(gumbel_joint_survival(gs, 1, 2) - math.exp(-11)) < 1e-15

    def test_at_origin(self):
        gs = GumbelScenario.from_constants(1, 1, 1, 0.7)
        assert gumbel_joint_survival(gs, 0, 0) == 1.0

    def test_delta_one_direct_substitution(self):
        gs = GumbelScenario.from_constants(1, 1, 1, 1.0)
        assert abs(gumbel_joint_survival(gs, 1, 1) - math.exp(-4)) < 1e-15

    def test_reduction_on_random_battery(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            r = rng.uniform(0.3, 3.0, size=3)
            s, t = rng.uniform(0.0, 2.0, size=2)
            gs = GumbelScenario.from_constants(*r, 0.0)
            assert abs(gumbel_joint_survival(gs, s, t) - joint_survival(gs.base, s, t)) < 1e-12

    def test_marginal_invariant_in_delta(self):
        for delta in (0.0, 0.3, 1.0):
            gs = GumbelScenario.from_constants(1.3, 0.8, 0.5, delta)
            assert float(gumbel_joint_survival(gs, 0.9, 0.0)) == math.exp(-0.9 * 1.8)

    def test_delta_domain(self):
        with pytest.raises(ConfigError):
            GumbelScenario.from_constants(1, 1, 1, 1.2)


class TestProbEqual:
    def test_delta_zero_matches_base(self):
        gs = GumbelScenario.from_constants(1, 1, 1, 0.0)
        assert float(gumbel_prob_equal(gs)) == float(prob_equal(gs.base))
        assert abs(gumbel_prob_equal(gs) - 1 / 3) < 1e-12

    def test_no_common_shock(self):
        gs = GumbelScenario.from_constants(1, 1, 0, 1.0)
        assert abs(gumbel_prob_equal(gs)) < 1e-15

    def test_delta_one_unit_rates(self):
        # lambda3 e^{9/4} int_{3/2}^inf e^{-u^2} du, frozen from the oracle run
        gs = GumbelScenario.from_constants(1, 1, 1, 1.0)
        assert abs(gumbel_prob_equal(gs) - 0.2849976548947547) < 1e-12
        closed = math.exp(9 / 4) * tail_oracle(1.5)
        assert abs(gumbel_prob_equal(gs) - closed) < 1e-12

    def test_monotone_in_delta(self):
        gs0 = GumbelScenario.from_constants(2, 1.5, 1, 0.0)
        vals = [
            float(gumbel_prob_equal(GumbelScenario(gs0.base, d)))
            for d in np.linspace(0, 1, 6)
        ]
        assert np.all(np.diff(vals) < 0)


class TestDominated:
    def test_inequality(self):
        for rates, delta in (((1, 1, 1), 1.0), ((2, 3, 5), 0.5)):
            value, mo = gumbel_prob_equal_dominated(*rates, delta)
            assert value <= mo
            assert mo == rates[2] / sum(rates)

    def test_matches_generic_quadrature(self):
        value, _ = gumbel_prob_equal_dominated(1.4, 0.6, 2.0, 0.8)
        generic = float(gumbel_prob_equal(GumbelScenario.from_constants(1.4, 0.6, 2.0, 0.8)))
        assert abs(value - generic) < 1e-11

    def test_continuity_at_zero(self):
        value, mo = gumbel_prob_equal_dominated(1, 1, 1, 1e-6)
        assert abs(value - mo) < 1e-4

    def test_rejects_delta_zero(self):
        with pytest.raises(ConfigError):
            gumbel_prob_equal_dominated(1, 1, 1, 0.0)


class TestCovariance:
    def test_boundary_case_negative(self):
        # c1 = c2 = 2 sits exactly on 5 c1 c2 = 4 (c1 + c2 + 1)
        cov = gumbel_covariance_constant(2, 2, 1)
        assert cov < 0
        assert abs(cov - (-0.018134094727585565)) < 1e-12

    def test_large_ratios_negative(self):
        assert gumbel_covariance_constant(10, 10, 1) < 0

    def test_common_shock_dominates_positive(self):
        assert gumbel_covariance_constant(0.1, 0.1, 1) > 0

    def test_condition_table(self):
        assert neg_cov_condition(2, 2) is True    # 20 >= 20
        assert neg_cov_condition(1, 1) is False   # 5 < 12
        assert neg_cov_condition(4, 1) is False   # 20 < 24

    def test_condition_implies_negative(self):
        rng = np.random.default_rng(31)
        for _ in range(6):
            c1, c2 = rng.uniform(1.5, 6.0, size=2)
            if neg_cov_condition(c1, c2):
                assert gumbel_covariance_constant(c1, c2, 1.0) < 0


class TestErfcBound:
    def test_tail_against_stdlib(self):
        for x in (1.0, 1.5, 2.5, 5.0, 8.0):
            assert abs(gaussian_tail(x) - tail_oracle(x)) < 1e-14

    def test_h_at_five_fourths(self):
        assert erfc_bound_h(1.0, 1.25) > 0
        assert abs(erfc_bound_h(1.0, 1.25) - 0.0007417563773613189) < 1e-12

    def test_h_with_zero_ell(self):
        for x in np.linspace(1.0, 6.0, 13):
            assert erfc_bound_h(float(x), 0.0) > 0

    def test_critical_ell_solves_h1(self):
        rep = erfc_bound_optimize()
        assert abs(erfc_bound_h(1.0, rep.ell)) < 1e-9

    def test_critical_ell_against_formula(self):
        # ell* = 2 / (e * int_1^inf e^{-u^2} du) - 4, with the tail from erfc
        rep = erfc_bound_optimize()
        formula = 2.0 / (math.e * tail_oracle(1.0)) - 4.0
        assert abs(rep.ell - formula) < 1e-8

    def test_maximizer_and_maximum(self):
        rep = erfc_bound_optimize()
        assert abs(rep.x_star - 1.2043) < 1e-3
        assert abs(rep.h_max - 0.00131266) < 1e-5
        assert rep.feasible

    def test_inequality_on_grid(self):
        """Gaussian tail <= 8x/(16x^2+5) e^{-x^2} across [1, 10]."""
        for x in np.linspace(1.0, 10.0, 501):
            x = float(x)
            bound = 8 * x / (16 * x * x + 5) * math.exp(-x * x)
            assert tail_oracle(x) <= bound + 1e-15

    def test_report_with_supplied_ell(self):
        rep = erfc_bound_optimize(ell=1.25)
        assert rep.ell == 1.25
        assert rep.feasible
        assert rep.h_max > 0
