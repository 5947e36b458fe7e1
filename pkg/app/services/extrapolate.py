"""Carry an expansion table from its base grid to any order n and approximate the spectrum there."""
import logging
from dataclasses import dataclass

import numpy as np

from app.models.errors import (
    InsufficientSamplesError, KindMismatchError, NotMonotoneError, SizeMismatchError
)
from app.models.schemas import ExpansionKind
from app.services.eigensolve import Spectrum
from app.services.expansion import ExpansionTable
from app.services.grids import Grid, paired_eigenvalues, perfect_grid, standard_grid
from app.services.symbol import MonotonicityClass, Symbol

logger = logging.getLogger(__name__)

LOG_FLOOR = np.finfo(float).tiny


def stencil_size(alpha: int, k: int) -> int:
    """Row k uses degree p_k = max(1, α − k + 1), so p_k + 1 nodes."""
    return max(1, alpha - k + 1) + 1


def _lagrange(nodes: np.ndarray, values: np.ndarray, targets: np.ndarray, size: int) -> np.ndarray:
    """Local Lagrange interpolation on windows of `size` nodes around each target."""
    count = nodes.size
    size = min(size, count)
    start = np.clip(np.searchsorted(nodes, targets) - size // 2, 0, count - size)
    window = start[:, None] + np.arange(size)[None, :]
    x = nodes[window]
    y = values[window]

    offdiag = ~np.eye(size, dtype=bool)
    gaps = np.where(offdiag, x[:, :, None] - x[:, None, :], 1.0)
    reach = np.where(offdiag, targets[:, None, None] - x[:, None, :], 1.0)
    basis = np.prod(reach, axis=2) / np.prod(gaps, axis=2)
    return np.sum(basis * y, axis=1)


def resample(table: ExpansionTable, target: Grid) -> np.ndarray:
    """α × n array of the expansion rows evaluated on the target grid."""
    if np.any(target.points < 0.0) or np.any(target.points > np.pi):
        raise ValueError("Target grid must lie in [0, π]")

    rows = np.empty((table.alpha, target.n))
    for k in range(1, table.alpha + 1):
        usable = table.usable(k)
        if np.count_nonzero(usable) < 2:
            raise InsufficientSamplesError(
                f"Row {k} has {np.count_nonzero(usable)} unmasked base samples, need at least 2"
            )
        rows[k - 1] = _lagrange(
            table.theta1[usable], table.D[k - 1, usable], target.points,
            stencil_size(table.alpha, k)
        )
    return rows


def _power_series(rows: np.ndarray, h: float, beta: int) -> np.ndarray:
    """Σ_{k=1..β} rows[k]·h^k in Horner order."""
    acc = np.zeros(rows.shape[1])
    for k in reversed(range(beta)):
        acc = h * (rows[k] + acc)
    return acc


def _check_beta(beta: int, alpha: int) -> None:
    if not 1 <= beta <= alpha:
        raise ValueError(f"beta must lie in 1..{alpha}, got {beta}")


def assemble_grid(resampled: np.ndarray, target: Grid, beta: int) -> Grid:
    _check_beta(beta, resampled.shape[0])
    if resampled.shape[1] != target.n:
        raise SizeMismatchError(f"Resampled rows have {resampled.shape[1]} columns for order {target.n}")
    raw = target.points + _power_series(resampled, target.h, beta)
    points = np.clip(raw, 0.0, np.pi)
    clamped = points != raw
    if clamped.any():
        logger.warning("Clamped %d approximate grid point(s) into [0, π]", int(clamped.sum()))
    return Grid(target.n, points, clamped)


@dataclass(frozen=True, eq=False)
class SpectrumApproximation:
    n: int
    beta: int
    method: ExpansionKind
    theta: np.ndarray
    xi_tilde: np.ndarray
    lambda_tilde: np.ndarray
    clamped: np.ndarray

    def rows(self) -> list[tuple[int, float, float, float]]:
        """Rows (j, theta, xi_tilde, lambda_tilde)."""
        return [
            (j, float(t), float(x), float(v))
            for j, t, x, v in zip(range(1, self.n + 1), self.theta, self.xi_tilde, self.lambda_tilde)
        ]


def approximate_spectrum(
    symbol: Symbol,
    table: ExpansionTable,
    n: int,
    beta: int,
    method: ExpansionKind
) -> SpectrumApproximation:
    """
    Matrix-less approximation of the spectrum of A_n, in grid-index order.

    The grid method samples f on ξ̃ = θ + Σ d̃_k h^k; the eigenvalue method adds
    Σ c̃_k h^k to f(θ) and reports θ itself as the grid.
    """
    if method is not table.kind:
        raise KindMismatchError(f"A {table.kind.value} table cannot drive the {method.value} method")
    _check_beta(beta, table.alpha)

    theta = standard_grid(n)
    resampled = resample(table, theta)
    if method is ExpansionKind.GRID:
        xi = assemble_grid(resampled, theta, beta)
        return SpectrumApproximation(
            n, beta, method, theta.points, xi.points,
            np.asarray(symbol.evaluate(xi.points)), xi.clamped
        )
    values = symbol.evaluate(theta.points) + _power_series(resampled, theta.h, beta)
    return SpectrumApproximation(
        n, beta, method, theta.points, theta.points, values, np.zeros(n, dtype=bool)
    )


ERROR_COLUMNS = (
    "j", "theta", "xi", "xi_tilde", "lambda", "lambda_tilde",
    "grid_error", "grid_error_tilde", "lambda_error_theta", "lambda_error_tilde",
    "log10_grid_error", "log10_grid_error_tilde", "log10_lambda_error_theta", "log10_lambda_error_tilde",
)


def log_magnitude(values: np.ndarray) -> np.ndarray:
    return np.log10(np.maximum(np.abs(values), LOG_FLOOR))


@dataclass(frozen=True, eq=False)
class ErrorReport:
    """
    Per-index diagnostics against an exact spectrum.

    grid_error          E^ξ = ξ − θ
    grid_error_tilde    Ẽ^ξ = ξ − ξ̃
    lambda_error_theta  E^{λ,θ} = λ − f(θ)
    lambda_error_tilde  Ẽ^λ = λ − λ̃ for the approximation's method
    """

    approximation: SpectrumApproximation
    xi: np.ndarray
    exact: np.ndarray
    grid_error: np.ndarray
    grid_error_tilde: np.ndarray
    lambda_error_theta: np.ndarray
    lambda_error_tilde: np.ndarray

    def rows(self) -> list[tuple]:
        approx = self.approximation
        columns = (
            np.arange(1, approx.n + 1), approx.theta, self.xi, approx.xi_tilde,
            self.exact, approx.lambda_tilde,
            self.grid_error, self.grid_error_tilde, self.lambda_error_theta, self.lambda_error_tilde,
            log_magnitude(self.grid_error), log_magnitude(self.grid_error_tilde),
            log_magnitude(self.lambda_error_theta), log_magnitude(self.lambda_error_tilde),
        )
        return [(int(row[0]), *map(float, row[1:])) for row in zip(*columns)]

    @staticmethod
    def max_over(values: np.ndarray, mask: np.ndarray | None = None) -> float:
        picked = np.abs(values if mask is None else values[mask])
        return float(np.max(picked, initial=0.0))


def error_report(
    approx: SpectrumApproximation,
    exact: Spectrum,
    symbol: Symbol,
    cls: MonotonicityClass
) -> ErrorReport:
    if exact.n != approx.n:
        raise SizeMismatchError(f"Exact spectrum has order {exact.n}, approximation has {approx.n}")
    if not cls.is_monotone:
        raise NotMonotoneError("Grid diagnostics need a monotone symbol")

    xi = perfect_grid(exact, symbol, cls).points
    values = paired_eigenvalues(exact, cls)
    return ErrorReport(
        approximation=approx,
        xi=xi,
        exact=values,
        grid_error=xi - approx.theta,
        grid_error_tilde=xi - approx.xi_tilde,
        lambda_error_theta=values - symbol.evaluate(approx.theta),
        lambda_error_tilde=values - approx.lambda_tilde,
    )


def unmasked_targets(table: ExpansionTable, n: int, beta: int) -> np.ndarray:
    """
    Target indices whose nearest base node feeds every row k ≤ β.

    Diagnostics report maxima over these indices only.
    """
    _check_beta(beta, table.alpha)
    n1 = table.config.n1
    theta = standard_grid(n).points
    nearest = np.clip(np.rint(theta * (n1 + 1) / np.pi).astype(int), 1, n1) - 1
    keep = np.ones(n, dtype=bool)
    for k in range(1, beta + 1):
        keep &= table.usable(k)[nearest]
    return keep


@dataclass(frozen=True, eq=False)
class NestedPrediction:
    order: int
    indices: np.ndarray
    theta: np.ndarray
    xi_tilde: np.ndarray
    lambda_tilde: np.ndarray

    def rows(self) -> list[tuple[int, float, float, float]]:
        """Rows (j, theta, xi_tilde, lambda_tilde) on the shared indices of the predicted order."""
        return [
            (int(j), float(t), float(x), float(v))
            for j, t, x, v in zip(self.indices, self.theta, self.xi_tilde, self.lambda_tilde)
        ]


def predict_nested(table: ExpansionTable, symbol: Symbol, level: int) -> NestedPrediction:
    """
    Predict the doubling order n_m = 2^{m−1}(n₁ + 1) − 1 on its shared indices
    directly from the base samples, with every row of the table and no resampling.
    Auto-masked base columns come out as NaN.
    """
    if level < 1:
        raise ValueError(f"Level must be at least 1, got {level}")
    n1 = table.config.n1
    order = 2 ** (level - 1) * (n1 + 1) - 1
    h = 1.0 / (order + 1)
    correction = _power_series(table.D, h, table.alpha)
    theta = table.theta1
    if table.kind is ExpansionKind.GRID:
        xi = np.clip(theta + correction, 0.0, np.pi)
        values = np.asarray(symbol.evaluate(np.nan_to_num(xi)))
        values = np.where(np.isnan(correction), np.nan, values)
        xi = np.where(np.isnan(correction), np.nan, xi)
    else:
        xi = theta.copy()
        values = symbol.evaluate(theta) + correction
    return NestedPrediction(order, 2 ** (level - 1) * np.arange(1, n1 + 1), theta, xi, values)
