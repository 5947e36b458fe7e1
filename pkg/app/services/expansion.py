"""
Sampled expansion functions on a base grid.

A family is solved exactly at the doubling orders n_k = 2^{k-1}(n₁ + 1) − 1,
whose standard grids nest: index j_k = 2^{k-1} j₁ at level k sits on the same
angle as j₁ at level 1. The errors at those shared angles, seen as polynomials
in h_k without a constant term, give the expansion rows through one small
Vandermonde solve per base index.
"""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from app.models.errors import NotMonotoneError, SingularSystemError, SizeMismatchError
from app.models.schemas import ExpansionConfig, ExpansionKind
from app.services.eigensolve import BISECTION_REL_WIDTH, Spectrum, solve_family
from app.services.grids import paired_eigenvalues, perfect_grid, standard_grid
from app.services.operators import OperatorFamily
from app.services.symbol import MonotonicityClass, Symbol, classify_monotonicity

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class LevelSchedule:
    n1: int
    alpha: int

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(2 ** (k - 1) * (self.n1 + 1) - 1 for k in range(1, self.alpha + 1))

    @property
    def steps(self) -> tuple[float, ...]:
        return tuple(1.0 / (n + 1) for n in self.orders)

    def shared_indices(self, k: int) -> np.ndarray:
        """1-based indices j_k of level k that sit on the base grid."""
        return 2 ** (k - 1) * np.arange(1, self.n1 + 1)


def schedule(config: ExpansionConfig) -> LevelSchedule:
    return LevelSchedule(config.n1, config.alpha)


def level_errors(
    spectrum: Spectrum,
    symbol: Symbol,
    cls: MonotonicityClass,
    theta1: np.ndarray,
    indices: np.ndarray,
    kind: ExpansionKind
) -> tuple[np.ndarray, np.ndarray]:
    """One row of the error matrix plus its clamp flags."""
    pick = indices - 1
    if kind is ExpansionKind.GRID:
        grid = perfect_grid(spectrum, symbol, cls)
        return grid.points[pick] - theta1, grid.clamped[pick]
    values = paired_eigenvalues(spectrum, cls)[pick]
    return values - symbol.evaluate(theta1), np.zeros(theta1.size, dtype=bool)


def error_matrix(
    family: OperatorFamily,
    symbol: Symbol,
    levels: LevelSchedule,
    kind: ExpansionKind,
    spectra: Sequence[Spectrum] | None = None,
    rel_width: float = BISECTION_REL_WIDTH
) -> tuple[np.ndarray, np.ndarray]:
    """
    (E, clamped), both α × n₁.

    For the grid kind E[k, j] = ξ_{j_k, n_k} − θ_{j₁, n₁}; for the eigenvalue kind
    E[k, j] = λ_{j_k}(A_{n_k}) − f(θ_{j₁, n₁}). Precomputed level spectra may be
    passed in, otherwise every level is solved here.
    """
    cls = classify_monotonicity(symbol)
    if kind is ExpansionKind.GRID and not cls.is_monotone:
        raise NotMonotoneError("The grid expansion needs a monotone symbol")

    if spectra is not None and len(spectra) != levels.alpha:
        raise SizeMismatchError(f"Expected {levels.alpha} level spectra, got {len(spectra)}")

    theta1 = standard_grid(levels.n1).points
    errors = np.empty((levels.alpha, levels.n1))
    clamped = np.zeros((levels.alpha, levels.n1), dtype=bool)
    for k, n_k in enumerate(levels.orders, start=1):
        spectrum = spectra[k - 1] if spectra is not None else solve_family(family, n_k, rel_width)
        if spectrum.n != n_k:
            raise SizeMismatchError(f"Level {k} spectrum has order {spectrum.n}, expected {n_k}")
        errors[k - 1], clamped[k - 1] = level_errors(
            spectrum, symbol, cls, theta1, levels.shared_indices(k), kind
        )
    return errors, clamped


def vandermonde(levels: LevelSchedule) -> np.ndarray:
    h = np.asarray(levels.steps)
    return h[:, None] ** np.arange(1, levels.alpha + 1)[None, :]


@dataclass(frozen=True, eq=False)
class ExpansionTable:
    config: ExpansionConfig
    theta1: np.ndarray
    D: np.ndarray
    auto_masked: np.ndarray
    clamp_flags: np.ndarray | None = None

    def __post_init__(self):
        flags = self.clamp_flags
        if flags is None:
            flags = np.broadcast_to(np.asarray(self.auto_masked, dtype=bool), self.D.shape)
        flags = np.array(flags, dtype=bool)
        if flags.shape != self.D.shape:
            raise SizeMismatchError(f"Clamp flags of shape {flags.shape} do not match D {self.D.shape}")
        object.__setattr__(self, "clamp_flags", flags)

    @property
    def alpha(self) -> int:
        return self.config.alpha

    @property
    def kind(self) -> ExpansionKind:
        return self.config.kind

    def usable(self, k: int) -> np.ndarray:
        """Base columns that feed row k downstream."""
        keep = ~self.auto_masked
        masked = np.fromiter(self.config.masked(k), dtype=int)
        keep[masked - 1] = False
        return keep

    def row_max(self) -> list[float]:
        return [
            float(np.max(np.abs(self.D[k - 1, self.usable(k)]), initial=0.0))
            for k in range(1, self.alpha + 1)
        ]


def solve_expansion(
    errors: np.ndarray,
    matrix: np.ndarray,
    config: ExpansionConfig,
    clamped: np.ndarray | None = None
) -> ExpansionTable:
    """D = V \\ E column by column; columns with a clamped inversion at any level become NaN."""
    errors = np.asarray(errors, dtype=float)
    matrix = np.asarray(matrix, dtype=float)
    shape = (config.alpha, config.n1)
    if errors.shape != shape or matrix.shape != (config.alpha, config.alpha):
        raise SizeMismatchError(
            f"Expected E of shape {shape} and V of shape {(config.alpha, config.alpha)}, "
            f"got {errors.shape} and {matrix.shape}"
        )

    auto_masked = np.zeros(config.n1, dtype=bool) if clamped is None else np.any(clamped, axis=0)
    if auto_masked.any():
        logger.warning(
            "Auto-masked base indices %s after clamped inversions",
            (np.flatnonzero(auto_masked) + 1).tolist()
        )

    # Column equilibration: powers of h span many decades.
    scale = np.max(np.abs(matrix), axis=0)
    if np.any(scale == 0.0):
        raise SingularSystemError("Vandermonde matrix has a zero column")
    live = ~auto_masked
    D = np.full(shape, np.nan)
    if live.any():
        try:
            D[:, live] = scipy.linalg.solve(matrix / scale, errors[:, live]) / scale[:, None]
        except np.linalg.LinAlgError as e:
            raise SingularSystemError(f"Vandermonde system is singular: {e}") from e

        residual = np.max(np.abs(matrix @ D[:, live] - errors[:, live]), axis=0)
        bound = RESIDUAL_TOL * np.maximum(np.max(np.abs(errors[:, live]), axis=0), np.finfo(float).tiny)
        if np.any(residual > bound):
            worst = int(np.argmax(residual / bound))
            logger.warning(
                "Vandermonde residual %.3e exceeds %.3e in %d column(s)",
                float(residual[worst]), float(bound[worst]), int(np.sum(residual > bound))
            )

    flags = np.zeros(shape, dtype=bool) if clamped is None else np.asarray(clamped, dtype=bool)
    return ExpansionTable(config, standard_grid(config.n1).points, D, auto_masked, flags)


def compute_table(
    family: OperatorFamily,
    config: ExpansionConfig,
    spectra: Sequence[Spectrum] | None = None,
    rel_width: float = BISECTION_REL_WIDTH
) -> ExpansionTable:
    levels = schedule(config)
    errors, clamped = error_matrix(family, family.symbol, levels, config.kind, spectra, rel_width)
    return solve_expansion(errors, vandermonde(levels), config, clamped)
