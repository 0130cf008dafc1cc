from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator, model_validator


# --------------------
# Report models
# --------------------
class AssumptionReport(BaseModel):
    name: str
    passed: bool
    constants: dict[str, float] = {}
    violations: list[str] = []
    warnings: list[str] = []


class ValidationSummary(BaseModel):
    passed: bool
    reports: list[AssumptionReport]


# --------------------
# Experiment config sections
# --------------------
class MollifierSection(BaseModel):
    beta: float = 0.2
    alpha: float = 1.1
    delta: float = Field(0.01, gt=0.0)


class SigmaSection(BaseModel):
    matrix: list[list[float]] = [[1.0, 0.0], [0.0, 1.0]]
    profile: Literal["constant", "cosine"] = "constant"
    frequency: float = 1.0

    @field_validator("matrix")
    @classmethod
    def _two_by_two(cls, v: list[list[float]]) -> list[list[float]]:
        if len(v) != 2 or any(len(row) != 2 for row in v):
            raise ValueError("sigma matrix must be 2x2")
        return v


class NoiseSection(BaseModel):
    seed: int = Field(20240601, ge=0)
    sigma: SigmaSection = SigmaSection()


class GridSection(BaseModel):
    L: float = Field(8.0, gt=0.0)
    M: int = 256
    gradient: Literal["spectral", "central"] = "spectral"
    shift: Literal["fourier", "bilinear"] = "fourier"
    cells_per_bandwidth: float = Field(6.0, gt=0.0)

    @field_validator("M")
    @classmethod
    def _grid_rule(cls, v: int) -> int:
        if v < 8:
            raise ValueError(f"grid rule: M must be >= 8, got {v}")
        if v & (v - 1):
            raise ValueError(f"grid rule: M must be a power of two, got {v}")
        return v


class TableSection(BaseModel):
    margin: float = Field(4.0, ge=2.0)
    min_points: int = 256
    tail_tolerance: float = Field(1e-10, gt=0.0)


class PDESection(BaseModel):
    dt: float = Field(1e-2, gt=0.0)
    T: float = Field(0.25, gt=0.0)
    cfl: float = Field(0.5, gt=0.0)
    negative_floor: float = Field(1e-6, ge=0.0)
    boundary_tolerance: float = Field(1e-8, gt=0.0)
    c3_tilde: float | None = None


class ParticleSection(BaseModel):
    dt: float = Field(1e-3, gt=0.0)
    N: int = Field(1000, ge=1)
    drift: Literal["direct", "mesh"] = "direct"


class GaussianComponent(BaseModel):
    weight: float = Field(1.0, gt=0.0)
    mean: list[float] = [0.0, 0.0]
    cov: list[list[float]] = [[1.0, 0.0], [0.0, 1.0]]


class Rho0Section(BaseModel):
    kind: Literal["gaussian", "mixture", "decay_profile"] = "gaussian"
    mean: list[float] = [0.0, 0.0]
    cov: list[list[float]] = [[1.0, 0.0], [0.0, 1.0]]
    components: list[GaussianComponent] = []
    c3_tilde: float | None = None

    @model_validator(mode="after")
    def _kind_fields(self) -> "Rho0Section":
        if self.kind == "mixture" and not self.components:
            raise ValueError("rho0.kind=mixture needs at least one component")
        if self.kind == "decay_profile" and self.c3_tilde is None:
            raise ValueError("rho0.kind=decay_profile needs c3_tilde")
        return self


class SweepSection(BaseModel):
    Ns: list[int] = [250, 500, 1000, 2000, 4000]
    seeds: int = Field(8, ge=1)
    snapshots: int = Field(32, ge=2)

    @field_validator("Ns")
    @classmethod
    def _increasing(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("sweep.Ns must not be empty")
        if any(b <= a for a, b in zip(v, v[1:], strict=False)):
            raise ValueError("sweep.Ns must be strictly increasing")
        if v[0] < 1:
            raise ValueError("sweep.Ns entries must be >= 1")
        return v


class InfoSection(BaseModel):
    f_rel_floor: float = 1e-14
    g_abs_floor: float = 1e-30
    g_rel_floor: float = 1e-14
    support_tolerance: float = 0.25
    kr_samples: int = Field(2048, ge=1, le=2048)
    kr_repeats: int = Field(2, ge=1)


class OutputSection(BaseModel):
    directory: str = "runs/default"


class ExperimentConfig(BaseModel):
    mollifier: MollifierSection = MollifierSection()
    noise: NoiseSection = NoiseSection()
    grid: GridSection = GridSection()
    table: TableSection = TableSection()
    pde: PDESection = PDESection()
    particles: ParticleSection = ParticleSection()
    rho0: Rho0Section = Rho0Section()
    sweep: SweepSection = SweepSection()
    infometrics: InfoSection = InfoSection()
    output: OutputSection = OutputSection()
    workers: int = Field(1, ge=1)


# --------------------
# Results API models
# --------------------
class RunIndexItem(BaseModel):
    name: str
    kind: str | None = None
    error: str | None = None


class RunIndexOut(BaseModel):
    runs: list[RunIndexItem]


class TraceRowOut(BaseModel):
    t: float
    H: float
    I: float  # noqa: E741
    l1: float
    kr_lo: float
    kr_hi: float
    qv_cum: float


class RateSummaryOut(BaseModel):
    Ns: list[int]
    sup_H: list[float]
    sup_H_floored: list[float]
    exit_fractions: list[float]
    slope: float | None
    slope_ci: list[float | None]
    targets: dict[str, float]
    h_floor: float
    metadata: dict[str, Any] = {}
