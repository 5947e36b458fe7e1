"""Shared fixtures: the symbols and families used across the suites."""
import pytest

from app.services.operators import OperatorFamily, SparseCorrection
from app.services.symbol import CosineSymbol


@pytest.fixture
def laplacian() -> CosineSymbol:
    return CosineSymbol((2.0, -1.0))


@pytest.fixture
def bilaplacian() -> CosineSymbol:
    return CosineSymbol((6.0, -4.0, 1.0))


@pytest.fixture
def dirichlet_family(laplacian) -> OperatorFamily:
    return OperatorFamily.toeplitz(laplacian)


@pytest.fixture
def neumann_family(laplacian) -> OperatorFamily:
    """Laplacian with first diagonal entry 1; ξ_j = (j − ½)π / (n + ½) exactly."""
    return OperatorFamily.corrected(laplacian, SparseCorrection(((1, 1, -1.0),)))


@pytest.fixture
def pencil_family() -> OperatorFamily:
    return OperatorFamily.pencil(CosineSymbol((4.0, -1.0, -1.0)), CosineSymbol((3.0, 1.0)))
