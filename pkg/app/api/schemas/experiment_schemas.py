import hashlib
import json
from typing import Any, Dict, List, Literal, Optional, get_args

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, field_validator, model_validator

from app.api.schemas.generator_schemas import GeneratorSpec
from app.services.sobolev_grid import GridDomain

ExperimentId = Literal[
    "sup-construct",
    "sup-construct-dual",
    "normality-scan",
    "mollifier-rate",
    "boundary-chart-audit",
    "pushin-audit",
    "prop35-demo",
    "extrapolation-demo",
    "renorm-audit",
]

EXPERIMENTS = get_args(ExperimentId)

# descriptive names accepted on the command line
EXPERIMENT_ALIASES = {"dominant-demo": "prop35-demo"}


class DomainParams(BaseModel):
    kind: Literal["interval", "torus", "rectangle"] = "torus"
    n: int = Field(default=128, ge=4)
    h: Optional[float] = Field(default=None, gt=0)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_spacing(self):
        # h is informational on the unit domain; reject a value the grid cannot have
        if self.h is not None and abs(self.h - self.to_domain().h) > 1e-9 * self.h:
            raise ValueError(f"h={self.h} does not match n={self.n} on the unit {self.kind}")
        return self

    def to_domain(self) -> GridDomain:
        if self.kind == "interval":
            return GridDomain.interval(self.n)
        if self.kind == "torus":
            return GridDomain.torus(self.n)
        return GridDomain.rectangle(self.n)


class OrderParams(BaseModel):
    k: int = Field(default=1, ge=0)
    p: float = Field(default=2.0, gt=1.0)

    model_config = ConfigDict(extra="forbid")


class SchemeParams(BaseModel):
    family: Literal["mollifier", "resolvent"] = "mollifier"
    n_min: int = Field(default=4, ge=1)
    n_max: Optional[int] = Field(default=None, ge=1)
    tol: float = 1e-6

    model_config = ConfigDict(extra="forbid")

    @field_validator("tol")
    def check_tol(cls, value):
        if not 1e-12 <= value <= 1e-2:
            raise ValueError(f"tol must lie in [1e-12, 1e-2], got {value}")
        return value

    @model_validator(mode="after")
    def check_range(self):
        if self.n_max is not None and self.n_max < self.n_min:
            raise ValueError(f"n_max={self.n_max} is below n_min={self.n_min}")
        return self


class ExperimentParams(BaseModel):
    """Experiment-specific knobs; an unset field falls back to the handler default."""

    samples: Optional[PositiveInt] = None
    eps: Optional[List[PositiveFloat]] = None
    deltas: Optional[List[PositiveFloat]] = None
    indices: Optional[List[PositiveInt]] = None
    orders: Optional[List[PositiveInt]] = None
    generator: Optional[GeneratorSpec] = None

    model_config = ConfigDict(extra="forbid")

    @field_validator("eps")
    def check_eps(cls, value):
        if value is not None and any(eps >= 1.0 for eps in value):
            raise ValueError("every eps must lie in (0, 1)")
        return value

    def get(self, name: str, default: Any = None) -> Any:
        value = getattr(self, name)
        return default if value is None else value


class ExperimentConfig(BaseModel):
    experiment: ExperimentId
    domain: Optional[DomainParams] = None
    order: OrderParams = Field(default_factory=OrderParams)
    scheme: SchemeParams = Field(default_factory=SchemeParams)
    seed: int = Field(default=0, ge=0)
    out: Optional[str] = None
    params: ExperimentParams = Field(default_factory=ExperimentParams)

    model_config = ConfigDict(extra="forbid")

    @field_validator("experiment", mode="before")
    def resolve_alias(cls, value):
        return EXPERIMENT_ALIASES.get(value, value) if isinstance(value, str) else value

    def domain_or(self, kind: str, n: int) -> DomainParams:
        return self.domain if self.domain is not None else DomainParams(kind=kind, n=n)

    def canonical(self) -> str:
        return json.dumps(self.model_dump(exclude={"out"}, by_alias=True), sort_keys=True, separators=(",", ":"))

    @property
    def run_id(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()[:12]


class CaseResult(BaseModel):
    case: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    measured: Optional[float] = None
    gap: Optional[float] = None
    passed: bool
    witness: Optional[Any] = None
    # plot-ready grid functions, written next to the report
    artifacts: Dict[str, Any] = Field(default_factory=dict, exclude=True)

    @field_validator("passed", mode="before")
    def plain_bool(cls, value):
        return bool(value) if isinstance(value, np.bool_) else value

    @model_validator(mode="after")
    def fail_carries_witness(self):
        if not self.passed and self.witness is None:
            raise ValueError(f"failing case {self.case} carries no witness")
        return self


class ReportRow(BaseModel):
    run_id: str
    experiment: str
    row: int = Field(ge=0)
    case: str
    seed: int
    parameters: Dict[str, Any] = Field(default_factory=dict)
    measured: Optional[float] = None
    gap: Optional[float] = None
    status: Literal["PASS", "FAIL"]
    witness: Optional[Any] = None

    model_config = ConfigDict(from_attributes=True)

    @model_validator(mode="after")
    def fail_carries_witness(self):
        if self.status == "FAIL" and self.witness is None:
            raise ValueError("a FAIL row must carry a witness")
        return self


class RunSummary(BaseModel):
    run_id: str
    experiment: str
    passed: int = Field(alias="pass")
    fail: int
    worst_gap: Optional[float] = None
    seed: int
    wall_time: float

    model_config = ConfigDict(populate_by_name=True)


class ExperimentTally(BaseModel):
    passed: int = Field(default=0, alias="pass")
    fail: int = 0
    worst_gap: Optional[float] = None
    runs: List[str] = Field(default_factory=list)

    model_config = ConfigDict(populate_by_name=True)


class MergeSummary(BaseModel):
    status: Literal["PASS", "FAIL"]
    experiments: Dict[str, ExperimentTally]
    witnesses: List[Dict[str, Any]] = Field(default_factory=list)
