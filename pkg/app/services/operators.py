"""Banded symmetric matrices generated by symbols, and the families built from them."""
import logging
from dataclasses import dataclass, field

import numpy as np

from app.models.errors import CorrectionIndexError
from app.models.schemas import FamilyKind, FamilySpec
from app.services.symbol import MONOTONICITY_SAMPLES, CosineSymbol, QuotientSymbol, Symbol

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BandedSymmetricMatrix:
    """Lower band storage: bands[k, j] holds A[j + k, j]; unused tails are zero."""

    bands: np.ndarray

    def __post_init__(self):
        bands = np.array(self.bands, dtype=float, ndmin=2)
        n = bands.shape[1]
        if n < 1:
            raise ValueError("Matrix order must be at least 1")
        if bands.shape[0] > n:
            raise ValueError(f"Bandwidth {bands.shape[0] - 1} exceeds n - 1 = {n - 1}")
        for k in range(1, bands.shape[0]):
            bands[k, n - k:] = 0.0
        bands.setflags(write=False)
        object.__setattr__(self, "bands", bands)

    @property
    def n(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(self.bands[0].sum())

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n, self.n))
        for k in range(self.bandwidth + 1):
            idx = np.arange(self.n - k)
            dense[idx + k, idx] = self.bands[k, :self.n - k]
            dense[idx, idx + k] = self.bands[k, :self.n - k]
        return dense

    def _off_diagonal_sums(self) -> np.ndarray:
        radius = np.zeros(self.n)
        for k in range(1, self.bandwidth + 1):
            band = np.abs(self.bands[k, :self.n - k])
            radius[k:] += band
            radius[:self.n - k] += band
        return radius

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.bands[0]) + self._off_diagonal_sums()))

    def gershgorin_bounds(self) -> tuple[float, float]:
        radius = self._off_diagonal_sums()
        return float(np.min(self.bands[0] - radius)), float(np.max(self.bands[0] + radius))


@dataclass(frozen=True)
class SparseCorrection:
    """Symmetric sparse edit given by 1-based (row, column, value) triples with row >= column."""

    entries: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        normalized = []
        for i, j, value in self.entries:
            i, j = int(i), int(j)
            if i < j:
                i, j = j, i
            normalized.append((i, j, float(value)))
        object.__setattr__(self, "entries", tuple(normalized))

    @property
    def offset(self) -> int:
        return max((i - j for i, j, _ in self.entries), default=0)

    @property
    def max_index(self) -> int:
        return max((i for i, _, _ in self.entries), default=0)


def build_toeplitz(symbol: CosineSymbol, n: int) -> BandedSymmetricMatrix:
    if n < 1:
        raise ValueError(f"Matrix order must be at least 1, got {n}")

    width = min(symbol.degree, n - 1)
    if width < symbol.degree:
        logger.warning(
            "Order %d is too small for a degree-%d symbol; bands beyond %d are dropped",
            n, symbol.degree, width
        )

    bands = np.zeros((width + 1, n))
    for k in range(width + 1):
        bands[k, :n - k] = symbol.coeffs[k]
    return BandedSymmetricMatrix(bands)


def apply_correction(
    matrix: BandedSymmetricMatrix,
    correction: SparseCorrection
) -> BandedSymmetricMatrix:
    n = matrix.n
    for i, j, _ in correction.entries:
        if not 1 <= j <= i <= n:
            raise CorrectionIndexError(f"Correction entry ({i}, {j}) lies outside an order-{n} matrix")

    width = max(matrix.bandwidth, correction.offset)
    bands = np.zeros((width + 1, n))
    bands[:matrix.bandwidth + 1] = matrix.bands
    for i, j, value in correction.entries:
        bands[i - j, j - 1] += value
    if width > matrix.bandwidth:
        logger.info("Correction widened the band from %d to %d", matrix.bandwidth, width)
    return BandedSymmetricMatrix(bands)


def _check_nonnegative(b: CosineSymbol) -> None:
    samples = b.evaluate(np.linspace(0.0, np.pi, MONOTONICITY_SAMPLES))
    if np.min(samples) < -1e-12 or np.max(samples) <= 0.0:
        raise ValueError("Pencil denominator b must be non-negative and not identically zero")


@dataclass(frozen=True)
class OperatorFamily:
    kind: FamilyKind
    f: CosineSymbol | None = None
    correction: SparseCorrection = field(default_factory=SparseCorrection)
    a: CosineSymbol | None = None
    b: CosineSymbol | None = None

    def __post_init__(self):
        if self.kind is FamilyKind.PENCIL:
            if self.a is None or self.b is None:
                raise ValueError("A pencil family needs both a and b")
            _check_nonnegative(self.b)
        elif self.f is None:
            raise ValueError(f"A {self.kind.value} family needs a symbol f")

    @classmethod
    def toeplitz(cls, f: CosineSymbol) -> "OperatorFamily":
        return cls(FamilyKind.TOEPLITZ, f=f)

    @classmethod
    def corrected(cls, f: CosineSymbol, correction: SparseCorrection) -> "OperatorFamily":
        return cls(FamilyKind.CORRECTED, f=f, correction=correction)

    @classmethod
    def pencil(cls, a: CosineSymbol, b: CosineSymbol) -> "OperatorFamily":
        return cls(FamilyKind.PENCIL, a=a, b=b)

    @classmethod
    def from_spec(cls, spec: FamilySpec) -> "OperatorFamily":
        if spec.kind is FamilyKind.PENCIL:
            return cls.pencil(CosineSymbol(tuple(spec.a)), CosineSymbol(tuple(spec.b)))
        f = CosineSymbol(tuple(spec.f))
        if spec.kind is FamilyKind.CORRECTED:
            entries = tuple((int(i), int(j), v) for i, j, v in spec.correction)
            return cls.corrected(f, SparseCorrection(entries))
        return cls.toeplitz(f)

    @property
    def symbol(self) -> Symbol:
        """The symbol describing the eigenvalue distribution of the family."""
        if self.kind is FamilyKind.PENCIL:
            return QuotientSymbol(self.a, self.b)
        return self.f


def materialize(
    family: OperatorFamily,
    n: int
) -> BandedSymmetricMatrix | tuple[BandedSymmetricMatrix, BandedSymmetricMatrix]:
    if family.kind is FamilyKind.PENCIL:
        return build_toeplitz(family.a, n), build_toeplitz(family.b, n)
    matrix = build_toeplitz(family.f, n)
    if family.kind is FamilyKind.CORRECTED:
        matrix = apply_correction(matrix, family.correction)
    return matrix
