from datetime import datetime
from enum import Enum

from pydantic import BaseModel, Field, field_validator, model_validator


class FamilyKind(str, Enum):
    TOEPLITZ = "toeplitz"
    CORRECTED = "corrected"
    PENCIL = "pencil"


class ExpansionKind(str, Enum):
    GRID = "grid"
    EIGENVALUE = "eigenvalue"


class OutputFormat(str, Enum):
    CSV = "csv"
    SVG = "svg"


class RunStatus(str, Enum):
    PENDING = "pending"
    EXPANDING = "expanding"
    APPROXIMATING = "approximating"
    VALIDATING = "validating"
    PLOTTING = "plotting"
    TESTING = "testing"
    COMPLETED = "completed"
    FAILED = "failed"


class FamilySpec(BaseModel):
    kind: FamilyKind
    f: list[float] = []
    correction: list[tuple[int, int, float]] = []
    a: list[float] = []
    b: list[float] = []

    @model_validator(mode="after")
    def check_symbols(self) -> "FamilySpec":
        if self.kind is FamilyKind.PENCIL:
            if not self.a or not self.b:
                raise ValueError("pencil families need coefficient lists a and b")
        elif not self.f:
            raise ValueError(f"{self.kind.value} families need a coefficient list f")
        if self.correction and self.kind is not FamilyKind.CORRECTED:
            raise ValueError("only corrected families take a correction")
        return self


def _check_masks(masks: dict[int, list[int]], n1: int, alpha: int) -> dict[int, list[int]]:
    cleaned = {}
    for k, indices in masks.items():
        if not 1 <= k <= alpha:
            raise ValueError(f"mask level {k} outside 1..{alpha}")
        bad = [j for j in indices if not 1 <= j <= n1]
        if bad:
            raise ValueError(f"mask indices {bad} for level {k} outside 1..{n1}")
        cleaned[k] = sorted(set(indices))
    return dict(sorted(cleaned.items()))


class ExpansionConfig(BaseModel):
    n1: int = Field(ge=1)
    alpha: int = Field(ge=1, le=8)
    masks: dict[int, list[int]] = {}
    kind: ExpansionKind = ExpansionKind.GRID

    @model_validator(mode="after")
    def check_masks(self) -> "ExpansionConfig":
        self.masks = _check_masks(self.masks, self.n1, self.alpha)
        return self

    def masked(self, k: int) -> set[int]:
        return set(self.masks.get(k, []))


class OutputSpec(BaseModel):
    directory: str | None = Field(default=None, description="Run root; relative paths resolve against base_dir")
    formats: list[OutputFormat] = Field(
        default_factory=lambda: [OutputFormat.CSV, OutputFormat.SVG],
        min_length=1
    )


class ExperimentConfig(BaseModel):
    name: str
    family: FamilySpec
    n1: int = Field(default=100, ge=1)
    alpha: int = Field(default=3, ge=1, le=8)
    masks: dict[int, list[int]] = {}
    kinds: list[ExpansionKind] = Field(
        default_factory=lambda: [ExpansionKind.GRID, ExpansionKind.EIGENVALUE],
        min_length=1
    )
    targets: list[int] = []
    beta_list: list[int] = []
    outputs: OutputSpec = Field(default_factory=OutputSpec)
    thinning: int = Field(default=1, ge=1, description="Plot-only index stride")
    tolerance: float | None = Field(
        default=None,
        description="Largest accepted grid-method eigenvalue error at beta = alpha when validating"
    )

    @model_validator(mode="after")
    def check_experiment(self) -> "ExperimentConfig":
        self.masks = _check_masks(self.masks, self.n1, self.alpha)
        small = [n for n in self.targets if n < self.n1]
        if small:
            raise ValueError(f"targets {small} are below n1 = {self.n1}")
        if not self.beta_list:
            self.beta_list = list(range(1, self.alpha + 1))
        bad = [b for b in self.beta_list if not 1 <= b <= self.alpha]
        if bad:
            raise ValueError(f"beta values {bad} outside 1..{self.alpha}")
        return self

    @field_validator("kinds")
    @classmethod
    def unique_kinds(cls, kinds: list[ExpansionKind]) -> list[ExpansionKind]:
        return list(dict.fromkeys(kinds))


class StageTiming(BaseModel):
    stage: str
    seconds: float


class ExpansionSummary(BaseModel):
    kind: ExpansionKind
    n1: int
    alpha: int
    row_max: list[float]
    auto_masked: list[int] = []
    nested_order: int | None = None


class ApproximationSummary(BaseModel):
    n: int
    beta: int
    method: ExpansionKind
    max_xi_error: float | None = None
    max_lambda_error: float | None = None
    max_raw_error: float | None = None


class SuiteResult(BaseModel):
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""


class SelfTestReport(BaseModel):
    passed: bool
    suites: list[SuiteResult]


class RunManifest(BaseModel):
    run_id: str
    command: str
    status: RunStatus
    progress: int = Field(ge=0, le=100, default=0)
    message: str = ""
    config_hash: str = ""
    tool_version: str
    created_at: datetime
    updated_at: datetime
    timings: list[StageTiming] = []
    outputs: list[str] = []
    error: str | None = None
