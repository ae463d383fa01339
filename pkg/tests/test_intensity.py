"""Intensity models, state paths, compensators, and the OU path generator."""

import math

import numpy as np
import pytest

from simulstop.errors import ConfigError, HorizonExceededError
from simulstop.intensity import (
    CompensatorCurve,
    IntensityModel,
    StatePath,
    SummedCompensator,
    compensator_at,
    simulate_ou_path,
    validate_divergence,
)
from simulstop.quadrature import integrate_interval


def identity_path(horizon=10.0, step=1e-3, interpolation="linear"):
    grid = np.linspace(0.0, horizon, int(round(horizon / step)) + 1)
    return StatePath(grid=grid, values=grid.copy(), interpolation=interpolation)


class TestCompensatorAt:
    def test_constant(self):
        c = CompensatorCurve(IntensityModel.constant(2.0))
        assert compensator_at(c, 3.0) == 6.0

    def test_path_driven_linear_shape(self):
        c = CompensatorCurve(IntensityModel.path_driven(lambda x: x), identity_path(4.0))
        assert abs(compensator_at(c, 2.0) - 2.0) < 1e-9

    def test_proportional(self):
        base = IntensityModel.constant(4.0)
        c = CompensatorCurve(IntensityModel.proportional(base, 0.5))
        assert compensator_at(c, 1.0) == 2.0

    def test_horizon_exceeded(self):
        c = CompensatorCurve(IntensityModel.path_driven(lambda x: 1.0), identity_path(2.0))
        with pytest.raises(HorizonExceededError):
            compensator_at(c, 2.5)

    def test_rate_and_compensator_are_consistent(self):
        """A'(s) equals rate(s): central differences on a curved shape."""
        c = CompensatorCurve(
            IntensityModel.path_driven(lambda x: 1 + math.sin(x) ** 2),
            identity_path(6.0, 1e-3),
        )
        for s in (0.5, 1.7, 3.14, 5.0):
            h = 1e-7
            fd = (c.compensator_at(s + h) - c.compensator_at(s - h)) / (2 * h)
            assert abs(fd - c.rate_at(s)) < 1e-5


class TestStatePath:
    def test_grid_must_start_at_zero(self):
        with pytest.raises(ConfigError):
            StatePath(grid=np.array([1.0, 2.0]), values=np.array([0.0, 0.0]))

    def test_grid_strictly_increasing(self):
        with pytest.raises(ConfigError):
            StatePath(grid=np.array([0.0, 1.0, 1.0]), values=np.zeros(3))

    def test_csv_round_trip(self, tmp_path):
        path = simulate_ou_path(1.0, 0.3, 0.4, 1.0, 2.0, 0.01, seed=11)
        file = tmp_path / "path.csv"
        path.to_csv(file)
        back = StatePath.from_csv(file)
        np.testing.assert_array_equal(back.grid, path.grid)
        np.testing.assert_array_equal(back.values, path.values)

    def test_csv_requires_header(self, tmp_path):
        file = tmp_path / "bad.csv"
        file.write_text("0.0,1.0\n1.0,2.0\n")
        with pytest.raises(ConfigError):
            StatePath.from_csv(file)

    def test_value_interpolation_modes(self):
        grid = np.array([0.0, 1.0, 2.0])
        values = np.array([0.0, 2.0, 2.0])
        lin = StatePath(grid=grid, values=values)
        left = StatePath(grid=grid, values=values, interpolation="const-left")
        assert lin.value_at(0.5) == 1.0
        assert left.value_at(0.5) == 0.0


class TestOuPath:
    def test_noiseless_decay(self):
        path = simulate_ou_path(1.0, 0.0, 0.0, 1.0, 1.0, 1e-3, seed=3)
        assert abs(path.value_at(1.0) - math.exp(-1.0)) < 2e-4

    def test_seed_determinism(self):
        a = simulate_ou_path(0.8, 0.1, 0.5, 0.0, 2.0, 0.01, seed=99)
        b = simulate_ou_path(0.8, 0.1, 0.5, 0.0, 2.0, 0.01, seed=99)
        np.testing.assert_array_equal(a.values, b.values)

    def test_stationary_mean(self):
        """Terminal ensemble average approaches mu (independent oracle)."""
        theta, mu, sigma = 1.0, 0.7, 0.5
        terminals = np.array(
            [
                simulate_ou_path(theta, mu, sigma, mu + 1.0, 8.0, 0.05, seed=s).values[-1]
                for s in range(10_000)
            ]
        )
        se = terminals.std(ddof=1) / math.sqrt(terminals.size)
        assert abs(terminals.mean() - mu) < 3 * se

    def test_rejects_bad_step(self):
        with pytest.raises(ConfigError):
            simulate_ou_path(1.0, 0.0, 0.1, 0.0, 1.0, 2.0, seed=1)


class TestDivergence:
    def test_positive_constant_passes(self):
        assert validate_divergence(CompensatorCurve(IntensityModel.constant(1.0))).divergent

    def test_zero_constant_flagged(self):
        diag = validate_divergence(CompensatorCurve(IntensityModel.constant(0.0)))
        assert not diag.divergent
        assert "non-divergent" in diag.message

    def test_zero_tail_flagged(self):
        c = CompensatorCurve(
            IntensityModel.path_driven(lambda x: 1.0 if x < 5.0 else 0.0),
            identity_path(10.0, 0.01),
        )
        diag = validate_divergence(c)
        assert not diag.divergent
        assert "near-zero-tail" in diag.flags


class TestInvariants:
    def test_starts_at_zero_and_nondecreasing(self):
        rng = np.random.default_rng(5)
        path = identity_path(8.0, 1e-2)
        models = [
            IntensityModel.constant(float(rng.uniform(0.1, 3))),
            IntensityModel.proportional(IntensityModel.constant(2.0), float(rng.uniform(0.2, 2))),
            IntensityModel.path_driven(lambda x: 0.3 + math.sin(x) ** 2),
            IntensityModel.path_driven(lambda x: max(0.0, math.cos(x))),
        ]
        for m in models:
            c = CompensatorCurve(m, path if m.is_path_driven else None)
            assert c.compensator_at(0.0) == 0.0
            times = np.sort(rng.uniform(0, 8.0, size=40))
            vals = c.compensator_at(times)
            assert np.all(np.diff(vals) >= -1e-15)

    def test_additivity_against_quadrature(self):
        """A(s+t) - A(s) matches direct quadrature of the rate within 1e-9."""
        cases = [
            CompensatorCurve(IntensityModel.constant(1.7)),
            CompensatorCurve(
                IntensityModel.path_driven(lambda x: 0.2 + 0.5 * x + x * x),
                identity_path(6.0, 1e-3),
            ),
        ]
        for c in cases:
            for s, t in ((0.3, 1.1), (2.0, 0.7), (0.0, 4.0)):
                direct = integrate_interval(c.rate_at, s, s + t, tol=1e-12).value
                assert abs((c.compensator_at(s + t) - c.compensator_at(s)) - direct) < 1e-9

    def test_grid_refinement_halves_error_const_left(self):
        """Left-rectangle compensators converge at first order in the step."""
        errs = []
        for step in (0.02, 0.01, 0.005):
            p = identity_path(2.0, step, interpolation="const-left")
            c = CompensatorCurve(IntensityModel.path_driven(lambda x: x), p)
            errs.append(abs(c.compensator_at(2.0) - 2.0))
        assert 1.7 < errs[0] / errs[1] < 2.3
        assert 1.7 < errs[1] / errs[2] < 2.3

    def test_linear_interpolation_exact_for_linear_rates(self):
        p = identity_path(2.0, 0.25)
        c = CompensatorCurve(IntensityModel.path_driven(lambda x: 3.0 * x), p)
        assert abs(c.compensator_at(2.0) - 6.0) < 1e-12


class TestInverse:
    def test_constant_inverse(self):
        c = CompensatorCurve(IntensityModel.constant(2.0))
        assert c.inverse(1.0) == 0.5

    def test_path_inverse_matches_analytic(self):
        c = CompensatorCurve(IntensityModel.path_driven(lambda x: x), identity_path(10.0, 1e-3))
        zs = np.array([0.5, 2.0, 8.0])
        np.testing.assert_allclose(c.inverse_array(zs), np.sqrt(2 * zs), atol=1e-9)

    def test_inverse_beyond_horizon(self):
        c = CompensatorCurve(IntensityModel.path_driven(lambda x: 1.0), identity_path(2.0, 0.01))
        with pytest.raises(HorizonExceededError):
            c.inverse(5.0)

    def test_zero_rate_never_fires(self):
        c = CompensatorCurve(IntensityModel.constant(0.0))
        assert c.inverse(1.0) == math.inf


class TestSummedCompensator:
    def test_sum_and_level(self):
        s = SummedCompensator(
            [
                CompensatorCurve(IntensityModel.constant(2.0)),
                CompensatorCurve(IntensityModel.constant(2.0)),
            ]
        )
        assert s.compensator_at(1.0) == 4.0
        assert s.time_to_level(8.0) == 2.0
