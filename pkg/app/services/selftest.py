"""Small-scale invariant suites, run by the `selftest` command."""
import logging
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from app.models.errors import ChecksumError
from app.models.schemas import ExpansionConfig, ExpansionKind, SelfTestReport, SuiteResult
from app.services.artifacts import table_from_text, table_to_text
from app.services.eigensolve import eig_banded, eig_dense_oracle, eig_pencil, eig_pencil_dense_oracle
from app.services.expansion import ExpansionTable, schedule, solve_expansion, vandermonde
from app.services.extrapolate import resample
from app.services.grids import bilaplacian_perfect_grid, grid_error, perfect_grid, standard_grid
from app.services.operators import (
    BandedSymmetricMatrix, OperatorFamily, SparseCorrection, build_toeplitz, materialize
)
from app.services.symbol import CosineSymbol, MonotonicityClass

logger = logging.getLogger(__name__)


def _random_banded(rng: np.random.Generator) -> BandedSymmetricMatrix:
    n = int(rng.integers(1, 129))
    bandwidth = int(rng.integers(0, min(4, n - 1) + 1))
    return BandedSymmetricMatrix(rng.standard_normal((bandwidth + 1, n)))


def oracle_suite(seed: int, cases: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        matrix = _random_banded(rng)
        banded = eig_banded(matrix).values
        dense = eig_dense_oracle(matrix.to_dense()).values
        worst = max(worst, float(np.max(np.abs(banded - dense))))
    return SuiteResult(
        name="banded-vs-dense", passed=worst <= 1e-10, residual=worst, tolerance=1e-10,
        detail=f"{cases} random banded matrices"
    )


def pencil_suite() -> SuiteResult:
    a, b = materialize(OperatorFamily.pencil(CosineSymbol((4.0, -1.0, -1.0)), CosineSymbol((3.0, 1.0))), 64)
    banded = eig_pencil(a, b).values
    dense = eig_pencil_dense_oracle(a.to_dense(), b.to_dense()).values
    worst = float(np.max(np.abs(banded - dense)))
    inside = bool(np.all((banded > 0.0) & (banded < 4.0)))
    return SuiteResult(
        name="pencil-vs-dense", passed=worst <= 1e-9 and inside, residual=worst, tolerance=1e-9,
        detail="eigenvalues inside (0, 4)" if inside else "eigenvalues escaped (0, 4)"
    )


def null_grid_suite() -> SuiteResult:
    symbol = CosineSymbol((2.0, -1.0))
    n = 64
    perfect = perfect_grid(eig_banded(build_toeplitz(symbol, n)), symbol, MonotonicityClass.INCREASING)
    worst = float(np.max(np.abs(grid_error(perfect, standard_grid(n)).values)))
    return SuiteResult(name="dirichlet-null-grid", passed=worst <= 1e-12, residual=worst, tolerance=1e-12)


def closed_form_grid_suite() -> SuiteResult:
    symbol = CosineSymbol((2.0, -1.0))
    family = OperatorFamily.corrected(symbol, SparseCorrection(((1, 1, -1.0),)))
    n = 10
    perfect = perfect_grid(eig_banded(materialize(family, n)), symbol, MonotonicityClass.INCREASING)
    theta = standard_grid(n)
    expected = (theta.points - np.pi) / (2 * n + 1)
    worst = float(np.max(np.abs(grid_error(perfect, theta).values - expected)))
    return SuiteResult(name="neumann-dirichlet-grid", passed=worst <= 1e-12, residual=worst, tolerance=1e-12)


def bilaplacian_grid_suite() -> SuiteResult:
    symbol = CosineSymbol((6.0, -4.0, 1.0))
    spectrum = eig_banded(build_toeplitz(symbol, 50))
    numeric = perfect_grid(spectrum, symbol, MonotonicityClass.INCREASING).points
    closed = bilaplacian_perfect_grid(spectrum).points
    worst = float(np.max(np.abs(numeric - closed)))
    return SuiteResult(
        name="bilaplacian-closed-form", passed=worst <= 1e-10, residual=worst, tolerance=1e-10,
        detail="numeric inversion against arccos((2 - sqrt(lambda))/2)"
    )


def vandermonde_suite() -> SuiteResult:
    config = ExpansionConfig(n1=10, alpha=4)
    levels = schedule(config)
    theta = standard_grid(config.n1).points
    g = np.vstack([np.cos(i * theta) + i for i in range(1, config.alpha + 1)])
    h = np.asarray(levels.steps)
    errors = sum(np.outer(h ** i, g[i - 1]) for i in range(1, config.alpha + 1))
    table = solve_expansion(errors, vandermonde(levels), config)
    worst = float(np.max(np.abs(table.D - g)))
    return SuiteResult(name="vandermonde-exactness", passed=worst <= 1e-10, residual=worst, tolerance=1e-10)


def _affine_table(n1: int, alpha: int) -> ExpansionTable:
    theta = standard_grid(n1).points
    D = np.vstack([(theta - np.pi) / 2 ** k for k in range(1, alpha + 1)])
    return ExpansionTable(ExpansionConfig(n1=n1, alpha=alpha), theta, D, np.zeros(n1, dtype=bool))


def resample_suite() -> SuiteResult:
    table = _affine_table(50, 3)
    on_nodes = float(np.max(np.abs(resample(table, standard_grid(50)) - table.D)))
    target = standard_grid(401)
    expected = np.vstack([(target.points - np.pi) / 2 ** k for k in range(1, 4)])
    affine = float(np.max(np.abs(resample(table, target) - expected)))
    worst = max(on_nodes, affine)
    return SuiteResult(
        name="resample-reproduction", passed=on_nodes <= 1e-15 and affine <= 1e-13, residual=worst,
        tolerance=1e-13, detail=f"nodes {on_nodes:.1e}, affine {affine:.1e}"
    )


def checksum_suite() -> SuiteResult:
    text = table_to_text(_affine_table(8, 2))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "table.txt"
        # Flip one digit in the body.
        position = text.rindex("ok") - 3
        digit = "1" if text[position] != "1" else "2"
        path.write_text(text[:position] + digit + text[position + 1:], encoding="utf-8")
        try:
            table_from_text(path.read_text(encoding="utf-8"))
        except ChecksumError as e:
            return SuiteResult(name="table-checksum", passed=True, residual=0.0, tolerance=0.0, detail=str(e))
    return SuiteResult(
        name="table-checksum", passed=False, residual=1.0, tolerance=0.0,
        detail="corrupted table was accepted"
    )


def run_selftest(seed: int, cases: int) -> SelfTestReport:
    suites: list[tuple[str, Callable[[], SuiteResult]]] = [
        ("banded-vs-dense", lambda: oracle_suite(seed, cases)),
        ("pencil-vs-dense", pencil_suite),
        ("dirichlet-null-grid", null_grid_suite),
        ("neumann-dirichlet-grid", closed_form_grid_suite),
        ("bilaplacian-closed-form", bilaplacian_grid_suite),
        ("vandermonde-exactness", vandermonde_suite),
        ("resample-reproduction", resample_suite),
        ("table-checksum", checksum_suite),
    ]
    results = []
    for name, suite in suites:
        try:
            result = suite()
        except Exception as e:
            logger.exception("Suite %s raised", name)
            result = SuiteResult(name=name, passed=False, residual=float("inf"), tolerance=0.0, detail=str(e))
        logger.info("%s: %s (residual %.3e)", name, "pass" if result.passed else "FAIL", result.residual)
        results.append(result)
    return SelfTestReport(passed=all(r.passed for r in results), suites=results)
