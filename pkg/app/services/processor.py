import asyncio
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Awaitable, Callable

from app import __version__
from app.config import get_settings
from app.models.errors import StageError, ToleranceExceededError
from app.models.schemas import (
    ApproximationSummary, ExpansionKind, ExpansionSummary, ExperimentConfig, OutputFormat,
    RunManifest, RunStatus, SelfTestReport, StageTiming
)
from app.services.artifacts import load_table, save_table, write_csv, write_text
from app.services.eigensolve import Spectrum
from app.services.expansion import ExpansionTable
from app.services.experiment import Experiment
from app.services.extrapolate import ERROR_COLUMNS
from app.services.figures import CSV_COLUMNS, GRID_ERROR_COLUMNS, build_figure, grid_error_tables, render_svg
from app.services.selftest import run_selftest
from app.utils.helpers import (
    config_hash, generate_run_id, save_manifest, update_run_progress, utcnow
)

logger = logging.getLogger(__name__)

APPROX_COLUMNS = ("j", "theta", "xi_tilde", "lambda_tilde")
SUMMARY_COLUMNS = ("n", "beta", "method", "max_xi_error", "max_lambda_error", "max_raw_error")


def table_name(kind: ExpansionKind) -> str:
    return f"table-{kind.value}.txt"


class ExperimentRunner:
    """Runs the expand / approx / exact / figures / selftest pipelines and keeps the run manifest."""

    def __init__(self):
        self.settings = get_settings()
        self._executor: ThreadPoolExecutor | None = None

    @property
    def executor(self) -> ThreadPoolExecutor:
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.settings.max_workers)
        return self._executor

    def experiment(self, config: ExperimentConfig) -> Experiment:
        return Experiment(config, self.settings.bisection_rel_width, self.settings.validation_cap)

    async def _blocking(self, fn: Callable[..., Any], *args) -> Any:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self.executor, fn, *args)

    async def start(self, out_dir: Path, command: str, config: ExperimentConfig | None) -> RunManifest:
        now = utcnow()
        manifest = RunManifest(
            run_id=generate_run_id(),
            command=command,
            status=RunStatus.PENDING,
            message="Run created",
            config_hash=config_hash(config) if config is not None else "",
            tool_version=__version__,
            created_at=now,
            updated_at=now
        )
        await save_manifest(out_dir, manifest)
        return manifest

    async def finish(self, out_dir: Path, message: str = "Run complete") -> None:
        await update_run_progress(out_dir, RunStatus.COMPLETED, 100, message)

    async def fail(self, out_dir: Path, error: Exception) -> None:
        await update_run_progress(out_dir, RunStatus.FAILED, 100, "Run failed", error=str(error))

    async def _stage(
        self,
        out_dir: Path,
        stage: str,
        status: RunStatus,
        progress: int,
        work: Callable[[], Awaitable[Any]]
    ) -> Any:
        await update_run_progress(out_dir, status, progress, f"{stage}...")
        logger.info("Stage %s started", stage)
        started = time.perf_counter()
        try:
            result = await work()
        except StageError:
            raise
        except Exception as e:
            raise StageError(stage, e) from e
        seconds = time.perf_counter() - started
        logger.info("Stage %s finished in %.2fs", stage, seconds)
        await update_run_progress(
            out_dir, status, progress, f"{stage} done", timing=StageTiming(stage=stage, seconds=seconds)
        )
        return result

    async def solve_orders(self, experiment: Experiment, orders) -> None:
        """Solve the uncached orders concurrently on the worker pool."""
        missing = experiment.missing_orders(orders)
        spectra: list[Spectrum] = await asyncio.gather(
            *(self._blocking(experiment.solve, n) for n in missing)
        )
        for n, spectrum in zip(missing, spectra):
            experiment.store(n, spectrum)

    async def run_expand(self, experiment: Experiment, out_dir: Path) -> list[ExpansionSummary]:
        config = experiment.config

        async def expand() -> list[ExpansionSummary]:
            await self.solve_orders(experiment, experiment.level_orders())
            summaries = []
            for kind in config.kinds:
                table: ExpansionTable = await self._blocking(experiment.table, kind)
                path = await save_table(out_dir / table_name(kind), table)
                prediction = await self._blocking(experiment.predict, kind)
                nested = await write_csv(
                    out_dir / f"nested-{kind.value}-n{prediction.order}.csv", APPROX_COLUMNS, prediction.rows()
                )
                await update_run_progress(
                    out_dir, RunStatus.EXPANDING, 30, f"Wrote {path.name}", outputs=[path.name, nested.name]
                )
                summaries.append(ExpansionSummary(
                    kind=kind,
                    n1=table.config.n1,
                    alpha=table.alpha,
                    row_max=table.row_max(),
                    auto_masked=[int(j) + 1 for j in table.auto_masked.nonzero()[0]],
                    nested_order=prediction.order
                ))
            return summaries

        return await self._stage(out_dir, "expand", RunStatus.EXPANDING, 10, expand)

    async def load_tables(self, experiment: Experiment, out_dir: Path) -> None:
        """Reuse table artifacts already in the output directory when they match the config."""
        for kind in experiment.config.kinds:
            path = out_dir / table_name(kind)
            if not path.exists():
                continue
            table = await load_table(path)
            if table.config == experiment.expansion_config(kind):
                experiment.use_table(table)
                logger.info("Reusing %s", path.name)
            else:
                logger.warning("Ignoring %s: it was built for a different configuration", path.name)

    async def run_approx(
        self,
        experiment: Experiment,
        out_dir: Path,
        targets: list[int] | None = None,
        betas: list[int] | None = None,
        validate: bool = False
    ) -> list[ApproximationSummary]:
        config = experiment.config
        targets = targets or config.targets
        betas = betas or config.beta_list

        async def approximate() -> list[ApproximationSummary]:
            await self.load_tables(experiment, out_dir)
            await self.solve_orders(experiment, experiment.level_orders())
            summaries = []
            outputs = []
            for n in targets:
                for kind in config.kinds:
                    for beta in betas:
                        approx = await self._blocking(experiment.approximate, kind, n, beta)
                        path = await write_csv(
                            out_dir / f"approx-{kind.value}-n{n}-b{beta}.csv", APPROX_COLUMNS, approx.rows()
                        )
                        outputs.append(path.name)
                        summaries.append(ApproximationSummary(n=n, beta=beta, method=kind))
            await update_run_progress(out_dir, RunStatus.APPROXIMATING, 60, "Approximations written", outputs=outputs)
            return summaries

        summaries = await self._stage(out_dir, "approximate", RunStatus.APPROXIMATING, 40, approximate)
        if validate:
            summaries = await self._stage(
                out_dir, "validate", RunStatus.VALIDATING, 70,
                lambda: self._validate(experiment, out_dir, summaries)
            )
        return summaries

    async def _validate(
        self,
        experiment: Experiment,
        out_dir: Path,
        summaries: list[ApproximationSummary]
    ) -> list[ApproximationSummary]:
        orders = [s.n for s in summaries if s.n <= self.settings.validation_cap]
        skipped = sorted({s.n for s in summaries} - set(orders))
        if skipped:
            logger.warning("Skipping validation above the cap %d: %s", self.settings.validation_cap, skipped)
        await self.solve_orders(experiment, orders)

        validated = []
        outputs = []
        for summary in summaries:
            if summary.n > self.settings.validation_cap:
                validated.append(summary)
                continue
            kind, n, beta = summary.method, summary.n, summary.beta
            report = await self._blocking(experiment.report, kind, n, beta)
            mask = experiment.unmasked(kind, n, beta)
            path = await write_csv(out_dir / f"errors-{kind.value}-n{n}-b{beta}.csv", ERROR_COLUMNS, report.rows())
            outputs.append(path.name)
            validated.append(ApproximationSummary(
                n=n, beta=beta, method=kind,
                max_xi_error=report.max_over(report.grid_error_tilde, mask),
                max_lambda_error=report.max_over(report.lambda_error_tilde, mask),
                max_raw_error=report.max_over(report.lambda_error_theta, mask),
            ))

        path = await write_csv(
            out_dir / "summary.csv", SUMMARY_COLUMNS,
            [
                (s.n, s.beta, s.method.value, *(
                    float("nan") if v is None else v
                    for v in (s.max_xi_error, s.max_lambda_error, s.max_raw_error)
                ))
                for s in validated
            ]
        )
        outputs.append(path.name)
        await update_run_progress(out_dir, RunStatus.VALIDATING, 90, "Validation written", outputs=outputs)
        self._check_tolerance(experiment, validated)
        return validated

    def _check_tolerance(self, experiment: Experiment, summaries: list[ApproximationSummary]) -> None:
        tolerance = experiment.config.tolerance
        if tolerance is None:
            return
        for s in summaries:
            if s.method is ExpansionKind.GRID and s.beta == experiment.config.alpha and s.max_lambda_error is not None:
                if s.max_lambda_error > tolerance:
                    raise ToleranceExceededError(
                        f"n={s.n}: max eigenvalue error {s.max_lambda_error:.3e} exceeds {tolerance:.3e}"
                    )

    async def run_exact(self, experiment: Experiment, out_dir: Path, orders: list[int]) -> dict[int, Spectrum]:
        async def exact() -> dict[int, Spectrum]:
            await self.solve_orders(experiment, orders)
            outputs = []
            for n in orders:
                values = experiment.spectrum(n).values
                path = await write_csv(
                    out_dir / f"exact-n{n}.csv", ("j", "lambda"),
                    [(j, v) for j, v in enumerate(values, start=1)]
                )
                outputs.append(path.name)
            await update_run_progress(out_dir, RunStatus.VALIDATING, 90, "Spectra written", outputs=outputs)
            return {n: experiment.spectrum(n) for n in orders}

        return await self._stage(out_dir, "exact", RunStatus.VALIDATING, 10, exact)

    async def run_figures(self, experiment: Experiment, out_dir: Path, which: list[str]) -> list[Path]:
        formats = set(experiment.config.outputs.formats)

        async def figures() -> list[Path]:
            await self.solve_orders(experiment, experiment.level_orders())
            written = []
            for name in which:
                figure = await self._blocking(build_figure, name, experiment)
                if OutputFormat.CSV in formats:
                    written.append(await write_csv(out_dir / f"figure-{name}.csv", CSV_COLUMNS, figure.rows()))
                    if name == "grid-errors":
                        tables = await self._blocking(grid_error_tables, experiment)
                        for n, rows in tables.items():
                            written.append(await write_csv(out_dir / f"grid-error-n{n}.csv", GRID_ERROR_COLUMNS, rows))
                if OutputFormat.SVG in formats:
                    svg = render_svg(figure, experiment.config.thinning)
                    written.append(await write_text(out_dir / f"figure-{name}.svg", svg))
                await update_run_progress(
                    out_dir, RunStatus.PLOTTING, 50, f"Figure {name} written",
                    outputs=[p.name for p in written]
                )
            return written

        return await self._stage(out_dir, "figures", RunStatus.PLOTTING, 10, figures)

    async def run_selftest(self, out_dir: Path) -> SelfTestReport:
        async def selftest() -> SelfTestReport:
            report = await self._blocking(run_selftest, self.settings.selftest_seed, self.settings.selftest_cases)
            await write_text(out_dir / "selftest.json", report.model_dump_json(indent=2) + "\n")
            await update_run_progress(out_dir, RunStatus.TESTING, 90, "Self-test written", outputs=["selftest.json"])
            return report

        return await self._stage(out_dir, "selftest", RunStatus.TESTING, 10, selftest)


experiment_runner = ExperimentRunner()
