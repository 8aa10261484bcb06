from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.services.extrapolation import (
    ExtrapolationSpace,
    GeneratorMatrix,
    multiplication_generator,
    neumann_laplacian_1d,
)
from app.services.ordered_space import NormSpec, OrderedSpaceSpec


class GeneratorSpec(BaseModel):
    """Serialized generator: {"n", "h", "kind", "m", "lambda"}."""

    kind: Literal["neumann_laplacian", "multiplication"]
    n: Optional[int] = Field(default=None, ge=3)
    h: Optional[float] = Field(default=None, gt=0)
    m: Optional[List[float]] = None
    lambda_: Optional[float] = Field(default=None, alias="lambda")

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    @model_validator(mode="after")
    def check_kind_fields(self):
        if self.kind == "neumann_laplacian":
            if self.n is None:
                raise ValueError("a Neumann Laplacian needs n")
            if self.h is None:
                self.h = 1.0 / (self.n - 1)
        else:
            if not self.m:
                raise ValueError("a multiplication generator needs m")
            if self.n is not None and self.n != len(self.m):
                raise ValueError(f"n={self.n} does not match len(m)={len(self.m)}")
            self.n = len(self.m)
        return self

    def build(self) -> GeneratorMatrix:
        if self.kind == "neumann_laplacian":
            return neumann_laplacian_1d(self.n, self.h)
        return multiplication_generator(self.m)

    def space(self, p: float = 2.0) -> ExtrapolationSpace:
        generator = self.build()
        return ExtrapolationSpace.build(OrderedSpaceSpec.standard(generator.size, NormSpec.lp(p)),
                                        generator, self.lambda_)
