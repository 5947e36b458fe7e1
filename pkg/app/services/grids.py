"""Standard and perfect sampling grids on [0, π] and the errors between them."""
from dataclasses import dataclass

import numpy as np

from app.models.errors import SizeMismatchError
from app.services.eigensolve import Spectrum
from app.services.symbol import MonotonicityClass, Symbol, invert_many


@dataclass(frozen=True, eq=False)
class Grid:
    n: int
    points: np.ndarray
    clamped: np.ndarray | None = None

    def __post_init__(self):
        points = np.array(self.points, dtype=float).ravel()
        if points.size != self.n:
            raise SizeMismatchError(f"Grid of order {self.n} got {points.size} points")
        clamped = np.zeros(self.n, dtype=bool) if self.clamped is None else np.array(self.clamped, dtype=bool)
        points.setflags(write=False)
        clamped.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "clamped", clamped)

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(1, self.n + 1)


@dataclass(frozen=True, eq=False)
class GridError:
    n: int
    values: np.ndarray
    scaled: bool = False


def standard_grid(n: int) -> Grid:
    if n < 1:
        raise ValueError(f"Grid order must be at least 1, got {n}")
    # j·π before the division keeps nested doubling grids bit-identical.
    return Grid(n, (np.arange(1, n + 1) * np.pi) / (n + 1))


def paired_eigenvalues(spectrum: Spectrum, cls: MonotonicityClass) -> np.ndarray:
    """Eigenvalues in grid-index order: ascending, or reversed for a decreasing symbol."""
    if cls is MonotonicityClass.DECREASING:
        return spectrum.values[::-1]
    return spectrum.values


def perfect_grid(spectrum: Spectrum, symbol: Symbol, cls: MonotonicityClass) -> Grid:
    xi, clamped = invert_many(symbol, paired_eigenvalues(spectrum, cls), cls)
    return Grid(spectrum.n, xi, clamped)


def bilaplacian_perfect_grid(spectrum: Spectrum) -> Grid:
    """Closed-form inverse of (2 − 2cos θ)²: ξ = arccos((2 − √λ)/2)."""
    values = np.clip(spectrum.values, 0.0, 16.0)
    clamped = values != spectrum.values
    return Grid(spectrum.n, np.arccos((2.0 - np.sqrt(values)) / 2.0), clamped)


def grid_error(perfect: Grid, standard: Grid, scaled: bool = False) -> GridError:
    if perfect.n != standard.n:
        raise SizeMismatchError(f"Grids of order {perfect.n} and {standard.n} cannot be compared")
    values = perfect.points - standard.points
    if scaled:
        values = values / standard.h
    return GridError(standard.n, values, scaled)


def grid_error_rows(perfect: Grid, standard: Grid) -> list[tuple[int, float, float, float, float]]:
    """Rows (j, theta, xi, error, scaled_error)."""
    raw = grid_error(perfect, standard).values
    scaled = raw / standard.h
    return [
        (int(j), float(t), float(x), float(e), float(s))
        for j, t, x, e, s in zip(standard.indices, standard.points, perfect.points, raw, scaled)
    ]
