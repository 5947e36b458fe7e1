"""Tests for resampling, grid assembly and the matrix-less approximation."""
import numpy as np
import pytest

from app.models.errors import InsufficientSamplesError, KindMismatchError, SizeMismatchError
from app.models.schemas import ExpansionConfig, ExpansionKind
from app.services.eigensolve import solve_family
from app.services.expansion import ExpansionTable
from app.services.extrapolate import (
    ErrorReport, approximate_spectrum, assemble_grid, error_report, log_magnitude,
    predict_nested, resample, stencil_size, unmasked_targets
)
from app.services.grids import Grid, standard_grid
from app.services.symbol import MonotonicityClass

from tests.factories import affine_table, neumann_eigenvalues, neumann_grid

GRID = ExpansionKind.GRID
EIGENVALUE = ExpansionKind.EIGENVALUE


def table_from_rows(n1: int, rows, masks: dict | None = None, kind=GRID) -> ExpansionTable:
    theta = standard_grid(n1).points
    D = np.vstack([row(theta) for row in rows])
    config = ExpansionConfig(n1=n1, alpha=len(rows), masks=masks or {}, kind=kind)
    return ExpansionTable(config, theta, D, np.zeros(n1, dtype=bool))


class TestStencilSize:
    def test_sizes(self):
        assert [stencil_size(4, k) for k in range(1, 5)] == [5, 4, 3, 2]
        assert stencil_size(1, 1) == 2


class TestResample:
    def test_identity_on_nodes(self):
        table = table_from_rows(40, [np.sin, np.cos, lambda t: t ** 3])
        assert np.max(np.abs(resample(table, standard_grid(40)) - table.D)) <= 1e-15

    def test_affine_reproduction(self):
        table = affine_table(100, 4)
        target = standard_grid(1000)
        expected = np.vstack([(target.points - np.pi) / 2 ** k for k in range(1, 5)])
        assert np.max(np.abs(resample(table, target) - expected)) <= 1e-13

    def test_polynomial_reproduction(self):
        rows = [lambda t: t ** 3 - t, lambda t: t ** 2, lambda t: 2 * t + 1]
        table = table_from_rows(50, rows)
        target = standard_grid(777)
        resampled = resample(table, target)
        for k, row in enumerate(rows):
            assert np.max(np.abs(resampled[k] - row(target.points))) <= 1e-12

    def test_masked_samples_are_ignored(self):
        table = affine_table(30, 2, masks={1: [1]})
        D = table.D.copy()
        D[0, 0] = 1e6
        table = ExpansionTable(table.config, table.theta1, D, table.auto_masked)
        target = standard_grid(301)
        assert np.max(np.abs(resample(table, target)[0] - (target.points - np.pi) / 2)) <= 1e-12

    def test_auto_masked_nan_is_ignored(self):
        table = affine_table(30, 2)
        D = table.D.copy()
        D[:, 4] = np.nan
        auto = np.zeros(30, dtype=bool)
        auto[4] = True
        table = ExpansionTable(table.config, table.theta1, D, auto)
        assert np.isfinite(resample(table, standard_grid(301))).all()

    def test_insufficient_samples(self):
        table = affine_table(3, 1, masks={1: [1, 2]})
        with pytest.raises(InsufficientSamplesError):
            resample(table, standard_grid(7))

    def test_target_outside_interval(self):
        with pytest.raises(ValueError, match=r"\[0, π\]"):
            resample(affine_table(10, 1), Grid(2, [0.5, 4.0]))


class TestAssembleGrid:
    def test_zero_table_gives_standard_grid(self):
        target = standard_grid(50)
        grid = assemble_grid(np.zeros((3, 50)), target, 3)
        assert np.array_equal(grid.points, target.points)

    def test_power_series(self):
        target = standard_grid(9)
        rows = np.vstack([np.full(9, 1.0), np.full(9, 2.0)])
        grid = assemble_grid(rows, target, 2)
        assert np.allclose(grid.points, target.points + 0.1 + 2 * 0.01, atol=1e-15)

    def test_clamps_into_interval(self):
        target = standard_grid(4)
        grid = assemble_grid(np.full((1, 4), -100.0), target, 1)
        assert grid.points[0] == 0.0
        assert grid.clamped[0]

    def test_beta_range(self):
        with pytest.raises(ValueError, match="beta"):
            assemble_grid(np.zeros((2, 5)), standard_grid(5), 3)
        with pytest.raises(ValueError, match="beta"):
            assemble_grid(np.zeros((2, 5)), standard_grid(5), 0)

    def test_size_checked(self):
        with pytest.raises(SizeMismatchError):
            assemble_grid(np.zeros((1, 4)), standard_grid(5), 1)


class TestApproximateSpectrum:
    def test_neumann_with_exact_rows(self, laplacian):
        n = 1000
        approx = approximate_spectrum(laplacian, affine_table(100, 4), n, 4, GRID)
        assert np.max(np.abs(approx.xi_tilde - neumann_grid(n))) <= 3.2e-14 * np.pi
        assert np.max(np.abs(approx.lambda_tilde - neumann_eigenvalues(n))) <= 1e-10

    def test_kind_mismatch(self, laplacian):
        with pytest.raises(KindMismatchError):
            approximate_spectrum(laplacian, affine_table(10, 1), 20, 1, EIGENVALUE)

    def test_eigenvalue_method(self, laplacian):
        table = table_from_rows(20, [lambda t: np.ones_like(t)], kind=EIGENVALUE)
        approx = approximate_spectrum(laplacian, table, 39, 1, EIGENVALUE)
        theta = standard_grid(39).points
        assert np.array_equal(approx.xi_tilde, theta)
        assert np.allclose(approx.lambda_tilde, laplacian.evaluate(theta) + 1 / 40, atol=1e-14)

    def test_rows(self, laplacian):
        approx = approximate_spectrum(laplacian, affine_table(10, 2), 21, 2, GRID)
        rows = approx.rows()
        assert len(rows) == 21
        assert rows[0][0] == 1
        assert rows[-1][2] == pytest.approx(approx.xi_tilde[-1])


class TestErrorReport:
    def test_dirichlet_zero_table(self, laplacian, dirichlet_family):
        table = table_from_rows(10, [np.zeros_like])
        approx = approximate_spectrum(laplacian, table, 50, 1, GRID)
        report = error_report(approx, solve_family(dirichlet_family, 50), laplacian, MonotonicityClass.INCREASING)
        assert report.max_over(report.grid_error_tilde) <= 1e-11
        assert report.max_over(report.lambda_error_tilde) <= 1e-11
        assert len(report.rows()[0]) == 14

    def test_size_mismatch(self, laplacian, dirichlet_family):
        approx = approximate_spectrum(laplacian, affine_table(10, 1), 20, 1, GRID)
        with pytest.raises(SizeMismatchError):
            error_report(approx, solve_family(dirichlet_family, 21), laplacian, MonotonicityClass.INCREASING)

    def test_max_over_mask(self):
        values = np.array([-5.0, 1.0, 2.0])
        assert ErrorReport.max_over(values) == 5.0
        assert ErrorReport.max_over(values, np.array([False, True, True])) == 2.0

    def test_log_magnitude_floor(self):
        logs = log_magnitude(np.array([0.0, -100.0]))
        assert np.isfinite(logs[0])
        assert logs[1] == pytest.approx(2.0)


class TestUnmaskedTargets:
    def test_masked_near_origin(self):
        table = affine_table(10, 3, masks={2: [1, 2], 3: [1, 2, 3]})
        assert unmasked_targets(table, 109, 1).all()
        keep = unmasked_targets(table, 109, 3)
        assert not keep[:30].any()
        assert keep[39:].all()

    def test_beta_two_uses_row_two_masks(self):
        table = affine_table(10, 3, masks={2: [1, 2], 3: [1, 2, 3]})
        keep = unmasked_targets(table, 109, 2)
        assert not keep[:20].any()
        assert keep[29:].all()


class TestPredictNested:
    def test_neumann_levels(self, laplacian):
        table = affine_table(100, 4)
        for level in (1, 3, 5):
            prediction = predict_nested(table, laplacian, level)
            n = prediction.order
            expected = neumann_grid(n)[prediction.indices - 1]
            assert np.max(np.abs(prediction.xi_tilde - expected)) <= 1e-10

    def test_auto_masked_columns_are_nan(self, laplacian):
        table = affine_table(10, 2)
        D = table.D.copy()
        D[:, 0] = np.nan
        auto = np.zeros(10, dtype=bool)
        auto[0] = True
        prediction = predict_nested(ExpansionTable(table.config, table.theta1, D, auto), laplacian, 2)
        assert np.isnan(prediction.xi_tilde[0])
        assert np.isnan(prediction.lambda_tilde[0])
        assert np.isfinite(prediction.xi_tilde[1:]).all()

    def test_rejects_level_zero(self, laplacian):
        with pytest.raises(ValueError):
            predict_nested(affine_table(10, 1), laplacian, 0)
