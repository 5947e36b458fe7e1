"""One experiment's family, symbol and the spectra and tables computed for it so far."""
import logging

from app.models.errors import SizeError
from app.models.schemas import ExpansionConfig, ExpansionKind, ExperimentConfig
from app.services.eigensolve import BISECTION_REL_WIDTH, Spectrum, solve_family
from app.services.expansion import (
    ExpansionTable, error_matrix, schedule, solve_expansion, vandermonde
)
from app.services.extrapolate import (
    ErrorReport, NestedPrediction, SpectrumApproximation, approximate_spectrum, error_report,
    predict_nested, unmasked_targets
)
from app.services.operators import OperatorFamily
from app.services.symbol import classify_monotonicity

logger = logging.getLogger(__name__)


class Experiment:
    def __init__(
        self,
        config: ExperimentConfig,
        rel_width: float = BISECTION_REL_WIDTH,
        validation_cap: int = 8191
    ):
        self.config = config
        self.family = OperatorFamily.from_spec(config.family)
        self.symbol = self.family.symbol
        self.monotonicity = classify_monotonicity(self.symbol)
        self.rel_width = rel_width
        self.validation_cap = validation_cap
        self._spectra: dict[int, Spectrum] = {}
        self._tables: dict[tuple[ExpansionKind, int], ExpansionTable] = {}

    def expansion_config(self, kind: ExpansionKind, alpha: int | None = None) -> ExpansionConfig:
        alpha = alpha or self.config.alpha
        masks = {k: v for k, v in self.config.masks.items() if k <= alpha}
        return ExpansionConfig(n1=self.config.n1, alpha=alpha, masks=masks, kind=kind)

    def level_orders(self, alpha: int | None = None) -> tuple[int, ...]:
        return schedule(self.expansion_config(ExpansionKind.GRID, alpha)).orders

    def missing_orders(self, orders) -> list[int]:
        return [n for n in dict.fromkeys(orders) if n not in self._spectra]

    def solve(self, n: int) -> Spectrum:
        """Exact spectrum without touching the cache; safe to call from worker threads."""
        logger.info("Solving %s at n=%d", self.config.name, n)
        return solve_family(self.family, n, self.rel_width)

    def store(self, n: int, spectrum: Spectrum) -> None:
        self._spectra[n] = spectrum

    def spectrum(self, n: int) -> Spectrum:
        if n not in self._spectra:
            self._spectra[n] = self.solve(n)
        return self._spectra[n]

    def validation_spectrum(self, n: int) -> Spectrum:
        if n > self.validation_cap:
            raise SizeError(f"Order {n} exceeds the validation cap {self.validation_cap}")
        return self.spectrum(n)

    def use_table(self, table: ExpansionTable) -> None:
        self._tables[(table.kind, table.alpha)] = table

    def table(self, kind: ExpansionKind, alpha: int | None = None) -> ExpansionTable:
        config = self.expansion_config(kind, alpha)
        key = (kind, config.alpha)
        if key not in self._tables:
            levels = schedule(config)
            spectra = [self.spectrum(n) for n in levels.orders]
            errors, clamped = error_matrix(self.family, self.symbol, levels, kind, spectra)
            self._tables[key] = solve_expansion(errors, vandermonde(levels), config, clamped)
        return self._tables[key]

    def approximate(self, kind: ExpansionKind, n: int, beta: int) -> SpectrumApproximation:
        return approximate_spectrum(self.symbol, self.table(kind), n, beta, kind)

    def report(self, kind: ExpansionKind, n: int, beta: int) -> ErrorReport:
        return error_report(
            self.approximate(kind, n, beta), self.validation_spectrum(n), self.symbol, self.monotonicity
        )

    def unmasked(self, kind: ExpansionKind, n: int, beta: int):
        return unmasked_targets(self.table(kind), n, beta)

    def predict(self, kind: ExpansionKind, level: int | None = None) -> NestedPrediction:
        """Nested prediction at a doubling level; defaults to the first level past the solved ones."""
        table = self.table(kind)
        return predict_nested(table, self.symbol, level or table.alpha + 1)
