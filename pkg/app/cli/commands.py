import argparse
import logging
import sys
from pathlib import Path
from typing import Awaitable, Callable

from pydantic import ValidationError

from app.config import get_settings
from app.models.errors import ConfigError, SpectralError, StageError
from app.models.schemas import ExperimentConfig
from app.services.experiment import Experiment
from app.services.figures import figure_names
from app.services.presets import preset_names, resolve_config
from app.services.processor import experiment_runner
from app.utils.helpers import format_float, sanitize_filename

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


class CommandError(Exception):
    """Raised by command handlers; carries the process exit code."""

    def __init__(self, exit_code: int, detail: str):
        self.exit_code = exit_code
        self.detail = detail
        super().__init__(detail)


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _name_list(text: str) -> list[str]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    return figure_names() if names == ["all"] else names


def _add_experiment_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", help=f"Built-in experiment: {', '.join(preset_names())}")
    parser.add_argument("--config", type=Path, help="Experiment file (JSON)")
    parser.add_argument("--out", type=Path, help="Output directory (default: <outputs.directory or output_dir>/<name>)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgrid",
        description="Matrix-less eigenvalue approximation through perfect-grid expansions"
    )
    parser.add_argument("--log-level", default=None, help="Override PGRID_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    expand = sub.add_parser("expand", help="Compute expansion tables on the base grid")
    _add_experiment_options(expand)

    approx = sub.add_parser("approx", help="Approximate spectra at target orders")
    _add_experiment_options(approx)
    approx.add_argument("--n", type=_int_list, help="Target orders, e.g. 1000,4095")
    approx.add_argument("--beta", type=_int_list, help="Expansion truncations, e.g. 1,2,3")
    approx.add_argument("--validate", action="store_true", help="Compare against exact spectra")

    exact = sub.add_parser("exact", help="Exact spectra by inertia bisection (CSV on stdout)")
    _add_experiment_options(exact)
    exact.add_argument("--n", type=_int_list, required=True, help="Orders to solve")

    figures = sub.add_parser("figures", help="Write figure data and SVG plots")
    _add_experiment_options(figures)
    figures.add_argument(
        "--which", type=_name_list, default=figure_names(),
        help=f"Comma-separated figure names or 'all': {', '.join(figure_names())}"
    )

    selftest = sub.add_parser("selftest", help="Run the invariant suites")
    selftest.add_argument("--out", type=Path, help="Output directory")
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    return resolve_config(args.preset, args.config)


def _experiment(config: ExperimentConfig) -> Experiment:
    try:
        return experiment_runner.experiment(config)
    except ValueError as e:
        raise ConfigError(f"Invalid family: {e}") from e


def _out_dir(args: argparse.Namespace, name: str, config: ExperimentConfig | None = None) -> Path:
    if args.out is not None:
        return args.out
    settings = get_settings()
    root = settings.output_path
    if config is not None and config.outputs.directory:
        root = settings.base_dir / config.outputs.directory
    return root / sanitize_filename(name)


async def _run(
    out_dir: Path,
    command: str,
    config: ExperimentConfig | None,
    body: Callable[[], Awaitable[int]]
) -> int:
    await experiment_runner.start(out_dir, command, config)
    try:
        code = await body()
    except Exception as e:
        await experiment_runner.fail(out_dir, e)
        raise
    await experiment_runner.finish(out_dir)
    return code


async def handle_expand(args: argparse.Namespace) -> int:
    config = _config(args)
    out_dir = _out_dir(args, config.name, config)
    experiment = _experiment(config)

    async def body() -> int:
        for summary in await experiment_runner.run_expand(experiment, out_dir):
            row_max = ", ".join(f"{v:.3e}" for v in summary.row_max)
            print(f"{summary.kind.value}: n1={summary.n1} alpha={summary.alpha} row max |.| = [{row_max}]")
            if summary.auto_masked:
                print(f"  auto-masked base indices: {summary.auto_masked}")
            if summary.nested_order is not None:
                print(f"  nested prediction written for n={summary.nested_order}")
        return EXIT_OK

    return await _run(out_dir, "expand", config, body)


def _check_targets(config: ExperimentConfig, targets: list[int] | None, betas: list[int] | None) -> None:
    small = [n for n in targets or [] if n < config.n1]
    if small:
        raise ConfigError(f"targets {small} are below n1 = {config.n1}")
    bad = [b for b in betas or [] if not 1 <= b <= config.alpha]
    if bad:
        raise ConfigError(f"beta values {bad} outside 1..{config.alpha}")
    if not (targets or config.targets):
        raise ConfigError("No target orders: pass --n or set targets in the config")


async def handle_approx(args: argparse.Namespace) -> int:
    config = _config(args)
    _check_targets(config, args.n, args.beta)
    out_dir = _out_dir(args, config.name, config)
    experiment = _experiment(config)

    async def body() -> int:
        summaries = await experiment_runner.run_approx(experiment, out_dir, args.n, args.beta, args.validate)
        for s in summaries:
            if s.max_lambda_error is None:
                print(f"n={s.n} beta={s.beta} {s.method.value}: written")
            else:
                print(
                    f"n={s.n} beta={s.beta} {s.method.value}: max |xi err| {s.max_xi_error:.3e}, "
                    f"max |lambda err| {s.max_lambda_error:.3e}, raw {s.max_raw_error:.3e}"
                )
        return EXIT_OK

    return await _run(out_dir, "approx", config, body)


async def handle_exact(args: argparse.Namespace) -> int:
    config = _config(args)
    out_dir = _out_dir(args, config.name, config)
    experiment = _experiment(config)

    async def body() -> int:
        spectra = await experiment_runner.run_exact(experiment, out_dir, args.n)
        print("n,j,lambda")
        for n, spectrum in spectra.items():
            for j, value in enumerate(spectrum.values, start=1):
                print(f"{n},{j},{format_float(value)}")
        return EXIT_OK

    return await _run(out_dir, "exact", config, body)


async def handle_figures(args: argparse.Namespace) -> int:
    config = _config(args)
    unknown = [name for name in args.which if name not in figure_names()]
    if unknown:
        raise ConfigError(f"Unknown figures {unknown}. Available: {', '.join(figure_names())}")
    out_dir = _out_dir(args, config.name, config)
    experiment = _experiment(config)

    async def body() -> int:
        if not args.which:
            return EXIT_OK
        for path in await experiment_runner.run_figures(experiment, out_dir, args.which):
            print(path)
        return EXIT_OK

    return await _run(out_dir, "figures", config, body)


async def handle_selftest(args: argparse.Namespace) -> int:
    out_dir = _out_dir(args, "selftest")

    async def body() -> int:
        report = await experiment_runner.run_selftest(out_dir)
        for suite in report.suites:
            status = "PASS" if suite.passed else "FAIL"
            print(f"{status} {suite.name}: residual {suite.residual:.3e} (tolerance {suite.tolerance:.1e}) {suite.detail}")
        return EXIT_OK if report.passed else EXIT_VALIDATION

    return await _run(out_dir, "selftest", None, body)


HANDLERS: dict[str, Callable[[argparse.Namespace], Awaitable[int]]] = {
    "expand": handle_expand,
    "approx": handle_approx,
    "exact": handle_exact,
    "figures": handle_figures,
    "selftest": handle_selftest,
}


async def dispatch(args: argparse.Namespace) -> int:
    try:
        return await HANDLERS[args.command](args)
    except (ConfigError, ValidationError) as e:
        raise CommandError(EXIT_CONFIG, str(e)) from e
    except StageError as e:
        code = EXIT_CONFIG if isinstance(e.cause, ConfigError) else EXIT_VALIDATION
        raise CommandError(code, str(e)) from e
    except SpectralError as e:
        raise CommandError(EXIT_VALIDATION, str(e)) from e


def print_error(detail: str) -> None:
    print(f"error: {detail}", file=sys.stderr)
