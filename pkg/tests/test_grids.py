"""Tests for standard and perfect grids."""
import numpy as np
import pytest

from app.models.errors import SizeMismatchError
from app.services.eigensolve import eig_banded, solve_family
from app.services.grids import (
    Grid, bilaplacian_perfect_grid, grid_error, grid_error_rows, perfect_grid, standard_grid
)
from app.services.operators import build_toeplitz
from app.services.symbol import CosineSymbol, MonotonicityClass

from tests.factories import neumann_grid

INCREASING = MonotonicityClass.INCREASING


class TestStandardGrid:
    def test_points(self):
        grid = standard_grid(3)
        assert np.allclose(grid.points, [np.pi / 4, np.pi / 2, 3 * np.pi / 4], atol=1e-15)
        assert grid.h == 0.25

    def test_order_one(self):
        assert standard_grid(1).points[0] == pytest.approx(np.pi / 2)

    def test_rejects_order_zero(self):
        with pytest.raises(ValueError):
            standard_grid(0)

    def test_doubling_grids_nest_exactly(self):
        for n1 in (3, 10, 100):
            coarse = standard_grid(n1).points
            for k in (2, 3, 4):
                fine = standard_grid(2 ** (k - 1) * (n1 + 1) - 1).points
                assert np.array_equal(fine[2 ** (k - 1) - 1::2 ** (k - 1)], coarse)

    def test_size_checked(self):
        with pytest.raises(SizeMismatchError):
            Grid(3, np.zeros(2))


class TestPerfectGrid:
    def test_dirichlet_is_standard(self, laplacian):
        n = 32
        perfect = perfect_grid(eig_banded(build_toeplitz(laplacian, n)), laplacian, INCREASING)
        assert np.max(np.abs(perfect.points - standard_grid(n).points)) <= 1e-12
        assert not perfect.clamped.any()

    def test_neumann_order_three(self, laplacian, neumann_family):
        perfect = perfect_grid(solve_family(neumann_family, 3), laplacian, INCREASING)
        assert np.allclose(perfect.points, [np.pi / 7, 3 * np.pi / 7, 5 * np.pi / 7], atol=1e-12)
        error = grid_error(perfect, standard_grid(3))
        assert error.values[0] == pytest.approx(-3 * np.pi / 28, abs=1e-12)
        scaled = grid_error(perfect, standard_grid(3), scaled=True)
        assert scaled.values[0] == pytest.approx(-3 * np.pi / 7, abs=1e-12)

    @pytest.mark.parametrize("n", [10, 100])
    def test_neumann_closed_form(self, laplacian, neumann_family, n):
        perfect = perfect_grid(solve_family(neumann_family, n), laplacian, INCREASING)
        theta = standard_grid(n).points
        assert np.max(np.abs(perfect.points - neumann_grid(n))) <= 1e-12
        error = grid_error(perfect, standard_grid(n)).values
        assert np.max(np.abs(error - (theta - np.pi) / (2 * n + 1))) <= 1e-12

    def test_decreasing_symbol(self):
        symbol = CosineSymbol((2.0, 1.0))
        n = 20
        perfect = perfect_grid(eig_banded(build_toeplitz(symbol, n)), symbol, MonotonicityClass.DECREASING)
        assert np.max(np.abs(perfect.points - standard_grid(n).points)) <= 1e-12

    def test_bilaplacian_closed_form(self, bilaplacian):
        spectrum = eig_banded(build_toeplitz(bilaplacian, 50))
        numeric = perfect_grid(spectrum, bilaplacian, INCREASING)
        closed = bilaplacian_perfect_grid(spectrum)
        assert np.max(np.abs(numeric.points - closed.points)) <= 1e-10


class TestGridError:
    def test_size_mismatch(self):
        with pytest.raises(SizeMismatchError):
            grid_error(standard_grid(3), standard_grid(4))

    def test_rows(self, laplacian, neumann_family):
        perfect = perfect_grid(solve_family(neumann_family, 3), laplacian, INCREASING)
        rows = grid_error_rows(perfect, standard_grid(3))
        assert [row[0] for row in rows] == [1, 2, 3]
        j, theta, xi, error, scaled = rows[1]
        assert theta == pytest.approx(np.pi / 2)
        assert error == pytest.approx(xi - theta)
        assert scaled == pytest.approx(4 * error)
