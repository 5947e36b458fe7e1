"""Closed forms and hand-built tables shared by the suites."""
import numpy as np

from app.models.schemas import ExpansionConfig, ExpansionKind
from app.services.expansion import ExpansionTable
from app.services.grids import standard_grid


def neumann_grid(n: int) -> np.ndarray:
    """Perfect grid of the Laplacian with a Neumann left end."""
    j = np.arange(1, n + 1)
    return (j - 0.5) * np.pi / (n + 0.5)


def neumann_eigenvalues(n: int) -> np.ndarray:
    return 2.0 - 2.0 * np.cos(neumann_grid(n))


def affine_table(n1: int, alpha: int, masks: dict | None = None) -> ExpansionTable:
    """Exact grid-expansion rows d_k = (θ − π)/2^k of the Neumann-Dirichlet Laplacian."""
    theta = standard_grid(n1).points
    D = np.vstack([(theta - np.pi) / 2 ** k for k in range(1, alpha + 1)])
    config = ExpansionConfig(n1=n1, alpha=alpha, masks=masks or {}, kind=ExpansionKind.GRID)
    return ExpansionTable(config, theta, D, np.zeros(n1, dtype=bool))
