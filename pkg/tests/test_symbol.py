"""Tests for symbol evaluation, monotonicity and inversion."""
import numpy as np
import pytest

from app.models.errors import NotMonotoneError, RangeError
from app.services.symbol import (
    CosineSymbol, MonotonicityClass, QuotientSymbol, classify_monotonicity, invert, invert_many
)


class TestCosineSymbol:
    def test_laplacian_values(self, laplacian):
        assert laplacian.evaluate(0.0) == pytest.approx(0.0, abs=1e-15)
        assert laplacian.evaluate(np.pi / 2) == pytest.approx(2.0, abs=1e-15)
        assert laplacian.evaluate(np.pi) == pytest.approx(4.0, abs=1e-15)

    def test_bilaplacian_is_squared_laplacian(self, laplacian, bilaplacian):
        theta = np.linspace(0.0, np.pi, 101)
        assert np.allclose(bilaplacian.evaluate(theta), laplacian.evaluate(theta) ** 2, atol=1e-13)

    def test_scalar_returns_float(self, laplacian):
        assert isinstance(laplacian.evaluate(1.0), float)
        assert isinstance(laplacian.derivative(1.0), float)

    def test_array_shape_kept(self, bilaplacian):
        theta = np.linspace(0.0, np.pi, 6).reshape(2, 3)
        assert bilaplacian.evaluate(theta).shape == (2, 3)
        assert bilaplacian.derivative(theta).shape == (2, 3)

    def test_derivative_matches_difference_quotient(self, bilaplacian):
        theta = np.linspace(0.1, 3.0, 25)
        step = 1e-6
        quotient = (bilaplacian.evaluate(theta + step) - bilaplacian.evaluate(theta - step)) / (2 * step)
        assert np.allclose(bilaplacian.derivative(theta), quotient, atol=1e-7)

    def test_even_and_periodic(self, bilaplacian):
        theta = np.random.default_rng(2).uniform(-np.pi, np.pi, 200)
        assert np.allclose(bilaplacian.evaluate(-theta), bilaplacian.evaluate(theta), rtol=0, atol=1e-13)
        assert np.allclose(bilaplacian.evaluate(theta + 2 * np.pi), bilaplacian.evaluate(theta), rtol=0, atol=1e-12)

    def test_constant_symbol(self):
        constant = CosineSymbol((3.0,))
        assert constant.degree == 0
        assert np.allclose(constant.evaluate(np.linspace(0, np.pi, 5)), 3.0)

    def test_rejects_empty_and_non_finite(self):
        with pytest.raises(ValueError):
            CosineSymbol(())
        with pytest.raises(ValueError, match="finite"):
            CosineSymbol((1.0, np.nan))


class TestQuotientSymbol:
    def test_preconditioned_quotient_is_laplacian(self, laplacian):
        quotient = QuotientSymbol(CosineSymbol((4.0, -1.0, -1.0)), CosineSymbol((3.0, 1.0)))
        theta = np.linspace(0.0, np.pi, 200)
        assert np.allclose(quotient.evaluate(theta), laplacian.evaluate(theta), atol=1e-14)
        assert np.allclose(quotient.derivative(theta), laplacian.derivative(theta), atol=1e-12)


class TestMonotonicity:
    def test_increasing(self, laplacian, bilaplacian):
        assert classify_monotonicity(laplacian) is MonotonicityClass.INCREASING
        assert classify_monotonicity(bilaplacian) is MonotonicityClass.INCREASING

    def test_decreasing(self):
        assert classify_monotonicity(CosineSymbol((2.0, 1.0))) is MonotonicityClass.DECREASING

    def test_non_monotone(self):
        assert classify_monotonicity(CosineSymbol((0.0, 0.0, 1.0))) is MonotonicityClass.NON_MONOTONE

    def test_constant_is_not_monotone(self):
        assert classify_monotonicity(CosineSymbol((1.0,))) is MonotonicityClass.NON_MONOTONE

    def test_quotient(self):
        quotient = QuotientSymbol(CosineSymbol((4.0, -1.0, -1.0)), CosineSymbol((3.0, 1.0)))
        assert classify_monotonicity(quotient) is MonotonicityClass.INCREASING


class TestInvert:
    def test_midpoint(self, laplacian):
        assert invert(laplacian, 2.0, MonotonicityClass.INCREASING) == pytest.approx(np.pi / 2, abs=1e-13)

    def test_bilaplacian_midpoint(self, bilaplacian):
        assert invert(bilaplacian, 4.0, MonotonicityClass.INCREASING) == pytest.approx(np.pi / 2, abs=1e-13)

    def test_decreasing(self):
        symbol = CosineSymbol((2.0, 1.0))
        assert invert(symbol, 2.0, MonotonicityClass.DECREASING) == pytest.approx(np.pi / 2, abs=1e-13)

    def test_round_trip_many(self, laplacian):
        theta = np.linspace(0.05, np.pi - 0.05, 40)
        xi, clamped = invert_many(laplacian, laplacian.evaluate(theta), MonotonicityClass.INCREASING)
        assert np.allclose(xi, theta, atol=1e-12)
        assert not clamped.any()

    def test_interior_values_off_the_first_midpoint(self, laplacian):
        for y, expected in ((1.0, np.pi / 3), (3.0, 2 * np.pi / 3)):
            assert invert(laplacian, y, MonotonicityClass.INCREASING) == pytest.approx(expected, abs=1e-13)

    def test_seventh_of_pi(self, laplacian):
        assert invert(laplacian, 0.1980623, MonotonicityClass.INCREASING) == pytest.approx(0.4487990, abs=1e-6)
        exact = laplacian.evaluate(np.pi / 7)
        assert invert(laplacian, exact, MonotonicityClass.INCREASING) == pytest.approx(np.pi / 7, abs=1e-13)

    @pytest.mark.parametrize("coeffs, cls", [
        ((6.0, -4.0, 1.0), MonotonicityClass.INCREASING),
        ((2.0, 1.0), MonotonicityClass.DECREASING),
    ])
    def test_round_trip_random(self, coeffs, cls):
        symbol = CosineSymbol(coeffs)
        theta = np.random.default_rng(1000).uniform(0.0, np.pi, 1000)
        y = symbol.evaluate(theta)
        xi, _ = invert_many(symbol, y, cls)
        residual = np.abs(symbol.evaluate(xi) - y)
        assert np.all(residual <= 1e-13 * np.maximum(1.0, np.abs(y)))
        steep = np.abs(symbol.derivative(theta)) >= 1e-2
        assert np.max(np.abs(xi - theta)[steep]) <= 1e-12

    def test_endpoints(self, laplacian):
        xi, clamped = invert_many(laplacian, [0.0, 4.0], MonotonicityClass.INCREASING)
        assert xi[0] == pytest.approx(0.0, abs=1e-6)
        assert xi[1] == pytest.approx(np.pi, abs=1e-6)
        assert not clamped.any()

    def test_clamps_within_slack(self, laplacian):
        xi, clamped = invert_many(laplacian, [4.0 + 1e-10, -1e-10], MonotonicityClass.INCREASING)
        assert xi[0] == np.pi
        assert xi[1] == 0.0
        assert clamped.all()

    def test_out_of_range(self, laplacian):
        with pytest.raises(RangeError):
            invert(laplacian, 4.1, MonotonicityClass.INCREASING)

    def test_non_monotone(self):
        with pytest.raises(NotMonotoneError):
            invert(CosineSymbol((0.0, 0.0, 1.0)), 0.5, MonotonicityClass.NON_MONOTONE)

    def test_non_finite(self, laplacian):
        with pytest.raises(ValueError, match="non-finite"):
            invert_many(laplacian, [np.inf], MonotonicityClass.INCREASING)
