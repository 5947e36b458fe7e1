"""
Eigenvalues of banded symmetric matrices and symmetric-definite banded pencils.

Everything rests on one engine: the number of negative pivots in a banded
LDLᵀ factorization of A − σB equals the number of eigenvalues below σ
(Sylvester's law of inertia). Counts are evaluated for a whole vector of
shifts per sweep, and every eigenvalue index is bisected on its own bracket.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from app.models.errors import (
    ConvergenceError, NotPositiveDefiniteError, SizeError, SizeMismatchError
)
from app.models.schemas import FamilyKind
from app.services.operators import BandedSymmetricMatrix, OperatorFamily, materialize

logger = logging.getLogger(__name__)

BISECTION_REL_WIDTH = 1e-16
MAX_BISECTIONS = 200
MAX_BRACKET_EXPANSIONS = 64
DENSE_ORACLE_CAP = 512
PIVOT_GUARD = np.finfo(float).eps ** 2


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if np.any(np.diff(values) < 0):
            raise ValueError("Spectrum values must be sorted ascending")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.n


def _padded(matrix: BandedSymmetricMatrix, width: int) -> np.ndarray:
    bands = np.zeros((width + 1, matrix.n))
    bands[:matrix.bandwidth + 1] = matrix.bands
    return bands


def _identity_bands(width: int, n: int) -> np.ndarray:
    bands = np.zeros((width + 1, n))
    bands[0] = 1.0
    return bands


def _negative_pivots(
    a_bands: np.ndarray,
    b_bands: np.ndarray,
    shifts: np.ndarray,
    scale: np.ndarray
) -> np.ndarray:
    """
    Count negative pivots of LDLᵀ(A − σB) for every σ in shifts.

    The active Schur complement is a sliding (w × w) window, w = bandwidth + 1,
    kept as its lower triangle of per-shift vectors.
    """
    w, n = a_bands.shape
    guard = np.maximum(PIVOT_GUARD * scale, np.finfo(float).tiny)
    zeros = np.zeros_like(shifts)

    def entry(row: int, col: int) -> np.ndarray:
        if row >= n:
            return zeros
        k = row - col
        return a_bands[k, col] - shifts * b_bands[k, col]

    window = [[entry(r, c) for c in range(r + 1)] for r in range(w)]
    counts = np.zeros(shifts.shape, dtype=np.int64)

    for i in range(n):
        d = window[0][0]
        d = np.where(np.abs(d) < guard, np.where(d < 0, -guard, guard), d)
        counts += d < 0

        inv = 1.0 / d
        multipliers = [window[r][0] * inv for r in range(1, w)]
        updated = [
            [window[r][c] - multipliers[r - 1] * window[c][0] for c in range(1, r + 1)]
            for r in range(1, w)
        ]
        updated.append([entry(i + w, i + 1 + c) for c in range(w)])
        window = updated

    return counts


def _count_below(
    a_matrix: BandedSymmetricMatrix,
    b_matrix: BandedSymmetricMatrix | None,
    shifts: ArrayLike
) -> np.ndarray:
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    if b_matrix is None:
        width = a_matrix.bandwidth
        b_bands = _identity_bands(width, a_matrix.n)
        b_norm = 1.0
    else:
        width = max(a_matrix.bandwidth, b_matrix.bandwidth)
        b_bands = _padded(b_matrix, width)
        b_norm = b_matrix.norm_inf()
    scale = a_matrix.norm_inf() + np.abs(shifts) * b_norm
    return _negative_pivots(_padded(a_matrix, width), b_bands, shifts, scale)


def inertia_count(matrix: BandedSymmetricMatrix, shift: float) -> int:
    """Number of eigenvalues strictly below shift."""
    return int(_count_below(matrix, None, [shift])[0])


def inertia_count_pencil(
    a_matrix: BandedSymmetricMatrix,
    b_matrix: BandedSymmetricMatrix,
    shift: float
) -> int:
    """Number of generalized eigenvalues of A x = λ B x strictly below shift."""
    _check_pencil_orders(a_matrix, b_matrix)
    return int(_count_below(a_matrix, b_matrix, [shift])[0])


def _bisect_spectrum(count, n: int, lo: float, hi: float, rel_width: float) -> np.ndarray:
    width_tol = rel_width * max(1.0, abs(lo), abs(hi))
    lower = np.full(n, lo)
    upper = np.full(n, hi)
    index = np.arange(1, n + 1)

    for sweep in range(MAX_BISECTIONS):
        mid = 0.5 * (lower + upper)
        active = (upper - lower > width_tol) & (mid > lower) & (mid < upper)
        if not active.any():
            logger.debug("Bisection of %d eigenvalues finished after %d sweeps", n, sweep)
            return np.sort(0.5 * (lower + upper))

        idx = np.flatnonzero(active)
        shifts, inverse = np.unique(mid[idx], return_inverse=True)
        below = count(shifts)[inverse]
        hit = below >= index[idx]
        upper[idx[hit]] = mid[idx[hit]]
        lower[idx[~hit]] = mid[idx[~hit]]

    raise ConvergenceError(f"Bisection did not converge within {MAX_BISECTIONS} sweeps")


def eig_banded(
    matrix: BandedSymmetricMatrix,
    rel_width: float = BISECTION_REL_WIDTH
) -> Spectrum:
    lo, hi = matrix.gershgorin_bounds()
    pad = 1e-10 * max(1.0, abs(lo), abs(hi))
    values = _bisect_spectrum(
        lambda shifts: _count_below(matrix, None, shifts),
        matrix.n, lo - pad, hi + pad, rel_width
    )
    return Spectrum(values)


def _check_pencil_orders(a_matrix: BandedSymmetricMatrix, b_matrix: BandedSymmetricMatrix) -> None:
    if a_matrix.n != b_matrix.n:
        raise SizeMismatchError(f"Pencil orders differ: {a_matrix.n} and {b_matrix.n}")


def eig_pencil(
    a_matrix: BandedSymmetricMatrix,
    b_matrix: BandedSymmetricMatrix,
    rel_width: float = BISECTION_REL_WIDTH
) -> Spectrum:
    _check_pencil_orders(a_matrix, b_matrix)
    try:
        factor = scipy.linalg.cholesky_banded(b_matrix.bands, lower=True)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(f"B is not positive definite: {e}") from e

    # Cholesky pivots bound λ_min(B) from above, so the first radius may be short.
    b_estimate = float(np.min(factor[0]) ** 2)
    radius = a_matrix.norm_inf() / b_estimate + 1.0
    n = a_matrix.n
    for _ in range(MAX_BRACKET_EXPANSIONS):
        counts = _count_below(a_matrix, b_matrix, [-radius, radius])
        if counts[0] == 0 and counts[1] == n:
            break
        radius *= 4.0
    else:
        raise ConvergenceError("Could not bracket the pencil spectrum")

    values = _bisect_spectrum(
        lambda shifts: _count_below(a_matrix, b_matrix, shifts),
        n, -radius, radius, rel_width
    )
    return Spectrum(values)


def eig_dense_oracle(matrix: ArrayLike) -> Spectrum:
    """Dense LAPACK reference, independent of the inertia bisection."""
    dense = np.asarray(matrix, dtype=float)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {dense.shape}")
    if dense.shape[0] > DENSE_ORACLE_CAP:
        raise SizeError(f"Dense oracle is capped at order {DENSE_ORACLE_CAP}, got {dense.shape[0]}")
    scale = max(1.0, float(np.max(np.abs(dense), initial=0.0)))
    if not np.allclose(dense, dense.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError("Dense oracle needs a symmetric matrix")
    return Spectrum(np.linalg.eigvalsh(dense))


def eig_pencil_dense_oracle(a_dense: ArrayLike, b_dense: ArrayLike) -> Spectrum:
    """Reference for A x = λ B x through the symmetrised L⁻¹ A L⁻ᵀ."""
    a_dense = np.asarray(a_dense, dtype=float)
    try:
        lower = scipy.linalg.cholesky(np.asarray(b_dense, dtype=float), lower=True)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(f"B is not positive definite: {e}") from e
    half = scipy.linalg.solve_triangular(lower, a_dense, lower=True)
    reduced = scipy.linalg.solve_triangular(lower, half.T, lower=True)
    return eig_dense_oracle(0.5 * (reduced + reduced.T))


def solve_family(
    family: OperatorFamily,
    n: int,
    rel_width: float = BISECTION_REL_WIDTH
) -> Spectrum:
    """Exact spectrum of A_n for any family."""
    operator = materialize(family, n)
    if family.kind is FamilyKind.PENCIL:
        return eig_pencil(*operator, rel_width=rel_width)
    return eig_banded(operator, rel_width=rel_width)
