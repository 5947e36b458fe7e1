"""Built-in experiments and experiment-file loading."""
from pathlib import Path

from pydantic import ValidationError

from app.models.errors import ConfigError
from app.models.schemas import ExperimentConfig, FamilyKind, FamilySpec

LAPLACIAN = [2.0, -1.0]
BILAPLACIAN = [6.0, -4.0, 1.0]


def _laplacian_nd() -> ExperimentConfig:
    # Neumann condition at the left end: first diagonal entry 1 instead of 2.
    return ExperimentConfig(
        name="laplacian-nd",
        family=FamilySpec(kind=FamilyKind.CORRECTED, f=LAPLACIAN, correction=[(1, 1, -1.0)]),
        n1=100,
        alpha=4,
        targets=[1000],
        tolerance=1e-10,
    )


def _dirichlet() -> ExperimentConfig:
    return ExperimentConfig(
        name="dirichlet",
        family=FamilySpec(kind=FamilyKind.TOEPLITZ, f=LAPLACIAN),
        n1=100,
        alpha=1,
        targets=[100, 500],
        tolerance=1e-11,
    )


def _bilaplacian() -> ExperimentConfig:
    return ExperimentConfig(
        name="bilaplacian",
        family=FamilySpec(kind=FamilyKind.TOEPLITZ, f=BILAPLACIAN),
        n1=100,
        alpha=3,
        masks={2: [1, 2], 3: [1, 2, 3]},
        targets=[4095],
        thinning=50,
    )


def _preconditioned() -> ExperimentConfig:
    return ExperimentConfig(
        name="preconditioned",
        family=FamilySpec(kind=FamilyKind.PENCIL, a=[4.0, -1.0, -1.0], b=[3.0, 1.0]),
        n1=100,
        alpha=4,
        targets=[4095],
        thinning=50,
    )


PRESETS = {
    "laplacian-nd": _laplacian_nd,
    "dirichlet": _dirichlet,
    "bilaplacian": _bilaplacian,
    "preconditioned": _preconditioned,
}

ALIASES = {"precond": "preconditioned"}


def preset_names() -> list[str]:
    return sorted(PRESETS) + sorted(ALIASES)


def get_preset(name: str) -> ExperimentConfig:
    key = ALIASES.get(name, name)
    if key not in PRESETS:
        raise ConfigError(f"Unknown preset {name!r}. Available: {', '.join(preset_names())}")
    return PRESETS[key]()


def parse_config(text: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config: {e}") from e


def load_config(path: Path) -> ExperimentConfig:
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"))


def resolve_config(preset: str | None, config_path: Path | None) -> ExperimentConfig:
    if (preset is None) == (config_path is None):
        raise ConfigError("Give exactly one of --preset or --config")
    return get_preset(preset) if preset is not None else load_config(config_path)

