"""Spectral symbols: real cosine polynomials and quotients of them.

A symbol f(θ) = f̂₀ + 2 Σ f̂_k cos(kθ) is stored by its coefficient list and
evaluated on [0, π]. Monotone symbols can be inverted, which is what turns an
exact spectrum into its perfect sampling grid.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from app.models.errors import NotMonotoneError, RangeError

logger = logging.getLogger(__name__)

MONOTONICITY_SAMPLES = 4096
BRACKET_WIDTH = 1e-13
NEWTON_STEPS = 4
CLAMP_SLACK = 1e-8


class MonotonicityClass(str, Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    NON_MONOTONE = "non-monotone"

    @property
    def is_monotone(self) -> bool:
        return self is not MonotonicityClass.NON_MONOTONE


def _finish(values: np.ndarray, theta: ArrayLike) -> float | np.ndarray:
    return float(values) if np.ndim(theta) == 0 else values


@dataclass(frozen=True)
class CosineSymbol:
    coeffs: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("A symbol needs at least one coefficient")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError(f"Symbol coefficients must be finite, got {coeffs}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def derivative_scale(self) -> float:
        return max(abs(c) for c in self.coeffs) * self.degree ** 2

    def evaluate(self, theta: ArrayLike) -> float | np.ndarray:
        """Clenshaw recurrence on Σ a_k T_k(cos θ) with a_0 = f̂₀, a_k = 2f̂_k."""
        x = np.cos(np.asarray(theta, dtype=float))
        b1 = np.zeros_like(x)
        b2 = np.zeros_like(x)
        for c in reversed(self.coeffs[1:]):
            b1, b2 = 2.0 * c + 2.0 * x * b1 - b2, b1
        return _finish(self.coeffs[0] + x * b1 - b2, theta)

    def derivative(self, theta: ArrayLike) -> float | np.ndarray:
        t = np.asarray(theta, dtype=float)
        k = np.arange(1, len(self.coeffs), dtype=float)
        weights = k * np.asarray(self.coeffs[1:])
        return _finish(-2.0 * (np.sin(np.multiply.outer(t, k)) @ weights), theta)


@dataclass(frozen=True)
class QuotientSymbol:
    """f = a / b for the symmetric-definite pencil (T_n(a), T_n(b))."""

    numerator: CosineSymbol
    denominator: CosineSymbol

    @property
    def derivative_scale(self) -> float:
        theta = np.linspace(0.0, np.pi, MONOTONICITY_SAMPLES)
        return float(np.max(np.abs(self.derivative(theta))))

    def evaluate(self, theta: ArrayLike) -> float | np.ndarray:
        return self.numerator.evaluate(theta) / self.denominator.evaluate(theta)

    def derivative(self, theta: ArrayLike) -> float | np.ndarray:
        a = self.numerator.evaluate(theta)
        b = self.denominator.evaluate(theta)
        da = self.numerator.derivative(theta)
        db = self.denominator.derivative(theta)
        return (da * b - a * db) / (b * b)


Symbol = Union[CosineSymbol, QuotientSymbol]


def classify_monotonicity(symbol: Symbol) -> MonotonicityClass:
    theta = np.linspace(0.0, np.pi, MONOTONICITY_SAMPLES)
    slope = np.asarray(symbol.derivative(theta))
    tol = 1e-12 * (1.0 + symbol.derivative_scale)

    if np.all(slope >= -tol) and np.any(slope > tol):
        return MonotonicityClass.INCREASING
    if np.all(slope <= tol) and np.any(slope < -tol):
        return MonotonicityClass.DECREASING
    return MonotonicityClass.NON_MONOTONE


def _bisect(symbol: Symbol, y: np.ndarray, sign: float, inclusive: bool) -> tuple[np.ndarray, np.ndarray]:
    """Shrink [0, π] brackets around the left (or, inclusive, right) end of the solution set."""
    lo = np.zeros_like(y)
    hi = np.full_like(y, np.pi)
    active = hi - lo > BRACKET_WIDTH
    while active.any():
        mid = 0.5 * (lo + hi)
        residual = sign * (symbol.evaluate(mid) - y)
        right = residual <= 0 if inclusive else residual < 0
        lo = np.where(active & right, mid, lo)
        hi = np.where(active & ~right, mid, hi)
        nxt = 0.5 * (lo + hi)
        active = (hi - lo > BRACKET_WIDTH) & (nxt != lo) & (nxt != hi)
    return lo, hi


def invert_many(
    symbol: Symbol,
    values: ArrayLike,
    cls: MonotonicityClass
) -> tuple[np.ndarray, np.ndarray]:
    """
    Solve f(ξ) = y for every y in values.

    Returns the angles and a mask of the values that fell (within the clamp
    slack) outside the symbol range and were mapped to the nearest endpoint.
    """
    if not cls.is_monotone:
        raise NotMonotoneError("Only monotone symbols can be inverted")

    y = np.atleast_1d(np.asarray(values, dtype=float))
    if not np.all(np.isfinite(y)):
        raise ValueError("Cannot invert non-finite values")

    increasing = cls is MonotonicityClass.INCREASING
    sign = 1.0 if increasing else -1.0
    f_left = float(symbol.evaluate(0.0))
    f_right = float(symbol.evaluate(np.pi))
    low, high = min(f_left, f_right), max(f_left, f_right)
    slack = CLAMP_SLACK * (1.0 + abs(f_right - f_left))

    outside = (low - y > slack) | (y - high > slack)
    if outside.any():
        bad = y[outside][0]
        raise RangeError(f"Value {bad!r} lies outside the symbol range [{low!r}, {high!r}]")

    below = y < low
    above = y > high
    target = np.clip(y, low, high)

    left, _ = _bisect(symbol, target, sign, inclusive=False)
    _, right = _bisect(symbol, target, sign, inclusive=True)
    lo = np.minimum(left, right)
    hi = np.maximum(left, right)
    xi = 0.5 * (lo + hi)

    tol = 1e-12 * (1.0 + symbol.derivative_scale)
    for _ in range(NEWTON_STEPS):
        slope = np.asarray(symbol.derivative(xi))
        usable = np.abs(slope) > tol
        step = (symbol.evaluate(xi) - target) / np.where(usable, slope, 1.0)
        candidate = xi - step
        keep = usable & (candidate >= lo) & (candidate <= hi)
        xi = np.where(keep, candidate, xi)

    low_end, high_end = (0.0, np.pi) if increasing else (np.pi, 0.0)
    xi = np.where(below, low_end, xi)
    xi = np.where(above, high_end, xi)
    clamped = below | above
    if clamped.any():
        logger.warning("Clamped %d value(s) to the symbol range endpoints", int(clamped.sum()))
    return xi, clamped


def invert(symbol: Symbol, y: float, cls: MonotonicityClass) -> float:
    xi, _ = invert_many(symbol, [y], cls)
    return float(xi[0])
