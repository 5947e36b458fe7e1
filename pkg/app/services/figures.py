"""
Figure data series and their static SVG renderings.

Every figure is a list of panels of named series. The CSV form is long format
(panel, series, index, x, y) and always carries every point; thinning only
affects the SVG.
"""
import html
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from app.models.errors import ConfigError
from app.models.schemas import ExpansionKind, FamilyKind
from app.services.experiment import Experiment
from app.services.extrapolate import log_magnitude, resample
from app.services.grids import Grid, grid_error, grid_error_rows, perfect_grid, standard_grid

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("panel", "series", "index", "x", "y")
GRID_ERROR_COLUMNS = ("j", "theta", "xi", "error", "scaled_error")
GRID_ERROR_LEVELS = 4

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
PANEL_WIDTH = 560
PANEL_HEIGHT = 400
MARGIN_LEFT = 72
MARGIN_RIGHT = 20
MARGIN_TOP = 44
MARGIN_BOTTOM = 56
CURVE_SAMPLES = 257


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    index: np.ndarray | None = None
    style: str = "line"  # line, dashed or markers
    thin: bool = True

    def indices(self) -> np.ndarray:
        return np.arange(1, len(self.x) + 1) if self.index is None else self.index


@dataclass
class Panel:
    title: str
    x_label: str
    y_label: str
    series: list[Series] = field(default_factory=list)


@dataclass
class Figure:
    name: str
    title: str
    panels: list[Panel]

    def rows(self) -> list[tuple]:
        rows = []
        for number, panel in enumerate(self.panels, start=1):
            for series in panel.series:
                for i, x, y in zip(series.indices(), series.x, series.y):
                    rows.append((number, series.label, int(i), float(x), float(y)))
        return rows


def _bounds(values: list[np.ndarray]) -> tuple[float, float]:
    finite = np.concatenate([v[np.isfinite(v)] for v in values]) if values else np.empty(0)
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        pad = 0.5 * max(abs(lo), 1.0)
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _render_panel(panel: Panel, left: float, thinning: int) -> list[str]:
    plot_w = PANEL_WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    x_lo, x_hi = _bounds([np.asarray(s.x, dtype=float) for s in panel.series])
    y_lo, y_hi = _bounds([np.asarray(s.y, dtype=float) for s in panel.series])
    origin_x = left + MARGIN_LEFT

    def sx(x):
        return origin_x + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        '<g class="panel">',
        f'<rect x="{origin_x:.2f}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333" stroke-width="1"/>',
        f'<text x="{origin_x + plot_w / 2:.2f}" y="{MARGIN_TOP - 16}" text-anchor="middle" '
        f'font-size="14">{html.escape(panel.title)}</text>',
        f'<text x="{origin_x + plot_w / 2:.2f}" y="{PANEL_HEIGHT - 12}" text-anchor="middle" '
        f'font-size="12">{html.escape(panel.x_label)}</text>',
        f'<text x="{left + 16:.2f}" y="{MARGIN_TOP + plot_h / 2:.2f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 {left + 16:.2f} {MARGIN_TOP + plot_h / 2:.2f})">{html.escape(panel.y_label)}</text>',
    ]
    for tick in np.linspace(x_lo, x_hi, 5):
        parts.append(
            f'<text x="{sx(tick):.2f}" y="{MARGIN_TOP + plot_h + 16}" text-anchor="middle" '
            f'font-size="10">{tick:.3g}</text>'
        )
    for tick in np.linspace(y_lo, y_hi, 5):
        parts.append(
            f'<text x="{origin_x - 6:.2f}" y="{sy(tick) + 3:.2f}" text-anchor="end" '
            f'font-size="10">{tick:.3g}</text>'
        )

    for number, series in enumerate(panel.series):
        color = PALETTE[number % len(PALETTE)]
        stride = thinning if series.thin else 1
        x = np.asarray(series.x, dtype=float)[::stride]
        y = np.asarray(series.y, dtype=float)[::stride]
        keep = np.isfinite(x) & np.isfinite(y)
        x, y = x[keep], y[keep]
        if series.style == "markers":
            parts.extend(
                f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="none" stroke="{color}"/>'
                for a, b in zip(x, y)
            )
        elif x.size:
            points = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
            dash = ' stroke-dasharray="6 4"' if series.style == "dashed" else ""
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.2"{dash}/>'
            )
        legend_y = MARGIN_TOP + 14 + 14 * number
        parts.append(
            f'<text x="{origin_x + 8:.2f}" y="{legend_y}" font-size="10" fill="{color}">'
            f'{html.escape(series.label)}</text>'
        )
    parts.append("</g>")
    return parts


def render_svg(figure: Figure, thinning: int = 1) -> str:
    width = PANEL_WIDTH * len(figure.panels)
    body = []
    for number, panel in enumerate(figure.panels):
        body.extend(_render_panel(panel, number * PANEL_WIDTH, thinning))
    content = "\n".join(body)
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_HEIGHT}" viewBox="0 0 {width} {PANEL_HEIGHT}">
<title>{html.escape(figure.title)}</title>
<rect width="100%" height="100%" fill="white"/>
{content}
</svg>
"""


def _row_label(prefix: str, k: int) -> str:
    return f"{prefix}_{k}"


def _table_series(experiment: Experiment, kind: ExpansionKind, alpha: int | None = None) -> list[Series]:
    table = experiment.table(kind, alpha)
    prefix = "d" if kind is ExpansionKind.GRID else "c"
    series = []
    for k in range(1, table.alpha + 1):
        usable = table.usable(k)
        series.append(Series(
            _row_label(prefix, k), table.theta1[usable], table.D[k - 1, usable],
            index=np.flatnonzero(usable) + 1
        ))
    return series


def nested_grids(experiment: Experiment) -> Figure:
    n1 = 3
    panel = Panel("Nested standard grids", "theta", "level k")
    for k in (1, 2, 4):
        n = 2 ** (k - 1) * (n1 + 1) - 1
        grid = standard_grid(n)
        panel.series.append(Series(f"n={n}", grid.points, np.full(n, float(k)), style="markers", thin=False))
        shared = 2 ** (k - 1) * np.arange(1, n1 + 1)
        panel.series.append(Series(
            f"shared n={n}", grid.points[shared - 1], np.full(n1, float(k)), index=shared, style="markers", thin=False
        ))
    return Figure("nested-grids", "Doubling hierarchy with shared indices", [panel])


def symbol_samples(experiment: Experiment) -> Figure:
    n = 3
    curve = np.linspace(0.0, np.pi, CURVE_SAMPLES)
    theta = standard_grid(n)
    spectrum = experiment.spectrum(n)
    panel = Panel(f"Symbol sampling, n={n}", "theta", "f")
    panel.series.append(Series("f", curve, experiment.symbol.evaluate(curve), thin=False))
    panel.series.append(Series("f(theta)", theta.points, experiment.symbol.evaluate(theta.points), style="markers", thin=False))
    if experiment.monotonicity.is_monotone:
        xi = perfect_grid(spectrum, experiment.symbol, experiment.monotonicity)
        panel.series.append(Series("lambda at xi", xi.points, experiment.symbol.evaluate(xi.points), style="markers", thin=False))
    return Figure("symbol-samples", "Standard and perfect sampling", [panel])


def grid_error_levels(experiment: Experiment) -> list[tuple[Grid, Grid]]:
    """(perfect, standard) grids for the first doubling orders above n1."""
    levels = []
    for k in range(1, GRID_ERROR_LEVELS + 1):
        n = 2 ** (k - 1) * (experiment.config.n1 + 1) - 1
        perfect = perfect_grid(experiment.spectrum(n), experiment.symbol, experiment.monotonicity)
        levels.append((perfect, standard_grid(n)))
    return levels


def grid_error_tables(experiment: Experiment) -> dict[int, list[tuple]]:
    """Per-order rows (j, theta, xi, error, scaled_error)."""
    return {standard.n: grid_error_rows(perfect, standard) for perfect, standard in grid_error_levels(experiment)}


def grid_errors(experiment: Experiment) -> Figure:
    raw = Panel("Grid errors", "theta", "xi - theta")
    scaled = Panel("Scaled grid errors", "theta", "(xi - theta)/h")
    for perfect, standard in grid_error_levels(experiment):
        n = standard.n
        raw.series.append(Series(f"n={n}", standard.points, grid_error(perfect, standard).values))
        scaled.series.append(Series(f"n={n}", standard.points, grid_error(perfect, standard, scaled=True).values))
    return Figure("grid-errors", "Perfect grid against the standard grid", [raw, scaled])


def expansion(experiment: Experiment) -> Figure:
    panel = Panel(
        f"Expansion rows, n1={experiment.config.n1}, alpha={experiment.config.alpha}", "theta", "d_k"
    )
    panel.series = _table_series(experiment, ExpansionKind.GRID)
    return Figure("expansion", "Sampled grid-error expansion", [panel])


def expansion_orders(experiment: Experiment) -> Figure:
    panels = []
    for alpha in sorted({min(2, experiment.config.alpha), experiment.config.alpha}):
        panel = Panel(f"alpha={alpha}", "theta", "d_k")
        panel.series = _table_series(experiment, ExpansionKind.GRID, alpha)
        panels.append(panel)
    return Figure("expansion-orders", "Expansion rows for two orders", panels)


def _first_target(experiment: Experiment) -> int:
    if not experiment.config.targets:
        raise ConfigError("This figure needs at least one target order")
    return experiment.config.targets[0]


def resampled(experiment: Experiment) -> Figure:
    n = _first_target(experiment)
    table = experiment.table(ExpansionKind.GRID)
    theta = standard_grid(n)
    rows = resample(table, theta)
    curves = Panel(f"Resampled rows, n={n}", "theta", "d_k")
    for k in range(1, table.alpha + 1):
        usable = table.usable(k)
        curves.series.append(Series(
            _row_label("d", k), table.theta1[usable], table.D[k - 1, usable],
            index=np.flatnonzero(usable) + 1, style="markers", thin=False
        ))
        curves.series.append(Series(f"resampled d_{k}", theta.points, rows[k - 1], style="dashed"))
    panels = [curves]

    if n <= experiment.validation_cap:
        errors = Panel(f"Grid errors, n={n}", "theta", "log10 error")
        report = experiment.report(ExpansionKind.GRID, n, experiment.config.beta_list[0])
        errors.series.append(Series("|xi - theta|", theta.points, log_magnitude(report.grid_error)))
        for beta in experiment.config.beta_list:
            report = experiment.report(ExpansionKind.GRID, n, beta)
            errors.series.append(Series(f"beta={beta}", theta.points, log_magnitude(report.grid_error_tilde)))
        panels.append(errors)
    return Figure("resampled", "Expansion carried to a target order", panels)


def eigenvalue_errors(experiment: Experiment) -> Figure:
    n = _first_target(experiment)
    theta = standard_grid(n).points
    panels = []
    if n > experiment.validation_cap:
        logger.warning("n=%d exceeds the validation cap %d; plotting approximations only", n, experiment.validation_cap)
        for kind in (ExpansionKind.EIGENVALUE, ExpansionKind.GRID):
            panel = Panel(f"{kind.value} method, n={n}", "theta", "lambda_tilde")
            for beta in experiment.config.beta_list:
                approx = experiment.approximate(kind, n, beta)
                panel.series.append(Series(f"beta={beta}", theta, approx.lambda_tilde))
            panels.append(panel)
        return Figure("eigenvalue-errors", "Approximate eigenvalues", panels)

    for kind, title in ((ExpansionKind.EIGENVALUE, "Eigenvalue expansion"), (ExpansionKind.GRID, "Grid expansion")):
        panel = Panel(f"{title}, n={n}", "theta", "log10 error")
        report = experiment.report(kind, n, experiment.config.beta_list[0])
        panel.series.append(Series("|lambda - f(theta)|", theta, log_magnitude(report.lambda_error_theta)))
        for beta in experiment.config.beta_list:
            report = experiment.report(kind, n, beta)
            panel.series.append(Series(f"beta={beta}", theta, log_magnitude(report.lambda_error_tilde)))
        panels.append(panel)
    return Figure("eigenvalue-errors", "Eigenvalue approximation errors", panels)


def pencil_symbols(experiment: Experiment) -> Figure:
    curve = np.linspace(0.0, np.pi, CURVE_SAMPLES)
    panel = Panel("Symbols", "theta", "value")
    family = experiment.family
    if family.kind is FamilyKind.PENCIL:
        panel.series.append(Series("a", curve, family.a.evaluate(curve), thin=False))
        panel.series.append(Series("b", curve, family.b.evaluate(curve), thin=False))
        panel.series.append(Series("f = a/b", curve, experiment.symbol.evaluate(curve), thin=False))
    else:
        panel.series.append(Series("f", curve, experiment.symbol.evaluate(curve), thin=False))
    return Figure("pencil-symbols", "Pencil symbols", [panel])


def expansion_compare(experiment: Experiment) -> Figure:
    left = Panel("Eigenvalue expansion", "theta", "c_k")
    left.series = _table_series(experiment, ExpansionKind.EIGENVALUE)
    right = Panel("Grid expansion", "theta", "d_k")
    right.series = _table_series(experiment, ExpansionKind.GRID)
    return Figure("expansion-compare", "Eigenvalue and grid expansions", [left, right])


FIGURES: dict[str, Callable[[Experiment], Figure]] = {
    "nested-grids": nested_grids,
    "symbol-samples": symbol_samples,
    "grid-errors": grid_errors,
    "expansion": expansion,
    "expansion-orders": expansion_orders,
    "resampled": resampled,
    "eigenvalue-errors": eigenvalue_errors,
    "pencil-symbols": pencil_symbols,
    "expansion-compare": expansion_compare,
}


def figure_names() -> list[str]:
    return list(FIGURES)


def build_figure(name: str, experiment: Experiment) -> Figure:
    if name not in FIGURES:
        raise ConfigError(f"Unknown figure {name!r}. Available: {', '.join(FIGURES)}")
    logger.info("Building figure %s", name)
    return FIGURES[name](experiment)
