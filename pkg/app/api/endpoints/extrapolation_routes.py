import math
from typing import List

import numpy as np

from app.api.router import ExperimentRouter, run_case
from app.api.schemas.experiment_schemas import CaseResult, ExperimentConfig
from app.api.schemas.generator_schemas import GeneratorSpec
from app.services.extrapolation import (
    ExtrapolationSpace,
    extrapolation_cone_contains,
    extrapolation_norm,
    lambda_equivalence,
    multiplication_example_check,
    multiplication_generator,
    neumann_laplacian_1d,
    resolvent,
    semigroup,
    theorem41_sup,
)
from app.services.ordered_space import OrderedSpaceSpec

EXAMPLE_M = (0.0, 1.0, 3.0)
RESOLVENT_POINTS = (1.0, 2.0)
STRONG_INDICES = tuple(2 ** j for j in range(1, 9))
DEFAULT_GENERATOR = GeneratorSpec(kind="neumann_laplacian", n=64, lambda_=1.0)


class ExtrapolationRoutes:
    def __init__(self):
        self.router = ExperimentRouter()

        @self.router.experiment("extrapolation-demo")
        def extrapolation_demo(config: ExperimentConfig) -> List[CaseResult]:
            spec = config.params.get("generator", DEFAULT_GENERATOR)
            space = spec.space(config.order.p)
            rng = np.random.default_rng(config.seed)
            tol = config.scheme.tol
            results = [
                run_case("example value", {"m": list(EXAMPLE_M)}, self.example_value),
                run_case("multiplication identity", {"m": list(EXAMPLE_M)},
                         lambda: self.identity_case("multiplication identity", EXAMPLE_M, config)),
            ]
            for index in range(2):
                m = rng.uniform(0.0, 5.0, 4)
                results.append(run_case(f"multiplication random {index}", {"m": m.tolist()},
                                        lambda: self.identity_case(f"multiplication random {index}", m, config)))
            results += [
                run_case("resolvent positivity", {}, self.neumann_resolvents),
                run_case("cone compatibility", {"samples": 1000}, lambda: self.cone_compatibility(space, rng)),
                run_case("lambda equivalence", {"lambda": space.lam},
                         lambda: self.equivalence_case(space, rng)),
                run_case("strong convergence", {"indices": list(STRONG_INDICES)},
                         lambda: self.strong_convergence(space, rng)),
                run_case("resolvent sup", {"tol": tol}, lambda: self.sup_case(space, rng, tol)),
            ]
            if spec.kind == "neumann_laplacian":
                results.append(run_case("semigroup mean", {"t": 1e3}, lambda: self.semigroup_mean(space, rng)))
            return results

    @staticmethod
    def example_value() -> CaseResult:
        generator = multiplication_generator(EXAMPLE_M)
        space = ExtrapolationSpace.build(OrderedSpaceSpec.standard(3), generator, 1.0)
        value = extrapolation_norm(space, np.ones(3))
        gap = abs(value - math.sqrt(21.0) / 4.0)
        passed = gap <= 1e-12
        return CaseResult(case="example value", parameters={"x": [1, 1, 1], "p": 2.0},
                          measured=value, gap=gap, passed=passed,
                          witness=None if passed else {"x": [1.0, 1.0, 1.0], "m": list(EXAMPLE_M)})

    @staticmethod
    def identity_case(case: str, m, config: ExperimentConfig) -> CaseResult:
        m = np.asarray(m, dtype=float)
        report = multiplication_example_check(m, config.order.p, np.ones(m.size), seed=config.seed)
        return CaseResult(case=case, parameters={"m": m.tolist(), "p": config.order.p, **report.details},
                          measured=report.measured, passed=report.passed, witness=report.witness)

    @staticmethod
    def neumann_resolvents() -> CaseResult:
        n = 64
        generator = neumann_laplacian_1d(n, 1.0 / (n - 1))
        first, second = (resolvent(generator, mu) for mu in RESOLVENT_POINTS)
        lowest = float(min(first.min(), second.min()))
        mu, nu = RESOLVENT_POINTS
        residual = float(np.max(np.abs(first - second - (nu - mu) * first @ second)))
        passed = lowest >= -1e-12 and residual <= 1e-9
        witness = None
        if not passed:
            row, column = np.unravel_index(int(np.argmin(np.minimum(first, second))), first.shape)
            witness = {"entry": [int(row), int(column)], "lowest": lowest, "residual": residual}
        return CaseResult(case="resolvent positivity", parameters={"n": n, "mu": list(RESOLVENT_POINTS)},
                          measured=lowest, gap=residual, passed=passed, witness=witness)

    @staticmethod
    def cone_compatibility(space: ExtrapolationSpace, rng: np.random.Generator) -> CaseResult:
        mismatches = []
        for _ in range(1000):
            x = rng.standard_normal(space.base.dim)
            if rng.uniform() < 0.25:
                x = np.abs(x)
            if extrapolation_cone_contains(space, x) != bool(np.all(x >= 0)):
                mismatches.append(x.tolist())
        return CaseResult(case="cone compatibility", parameters={"samples": 1000},
                          measured=float(len(mismatches)), passed=not mismatches,
                          witness=mismatches[0] if mismatches else None)

    @staticmethod
    def equivalence_case(space: ExtrapolationSpace, rng: np.random.Generator) -> CaseResult:
        samples = [rng.standard_normal(space.base.dim) for _ in range(100)]
        report = lambda_equivalence(space, space.lam + 1.0, samples)
        return CaseResult(case="lambda equivalence", parameters=report.details, measured=report.measured,
                          gap=report.details["rho"] - report.measured, passed=report.passed,
                          witness=report.witness)

    @staticmethod
    def strong_convergence(space: ExtrapolationSpace, rng: np.random.Generator) -> CaseResult:
        """||n (n - A)^{-1} x - x|| strictly decreasing and below ||Ax|| / 256."""
        A = space.generator.matrix
        indices = [n for n in STRONG_INDICES if n > space.generator.lambda0]
        witness = None
        worst = 0.0
        for _ in range(10):
            x = rng.standard_normal(space.base.dim)
            errors = [float(np.linalg.norm(n * resolvent(space.generator, n) @ x - x)) for n in indices]
            envelope = float(np.linalg.norm(A @ x)) / indices[-1]
            decreasing = all(b < a for a, b in zip(errors, errors[1:])) or not np.any(A @ x)
            if not decreasing or errors[-1] > envelope * (1.0 + 1e-9):
                witness = {"x": x.tolist(), "errors": errors, "envelope": envelope}
            worst = max(worst, errors[-1])
        return CaseResult(case="strong convergence", parameters={"indices": indices},
                          measured=worst, passed=witness is None, witness=witness)

    @staticmethod
    def sup_case(space: ExtrapolationSpace, rng: np.random.Generator, tol: float) -> CaseResult:
        worst, witness = 0.0, None
        for _ in range(5):
            z = rng.standard_normal(space.base.dim)
            gap = float(np.max(np.abs(theorem41_sup(space, z, tol).value - np.abs(z))))
            if gap > worst:
                worst, witness = gap, z.tolist()
        passed = worst <= 10.0 * tol
        return CaseResult(case="resolvent sup", parameters={"tol": tol}, measured=worst, gap=worst,
                          passed=passed, witness=None if passed else witness)

    @staticmethod
    def semigroup_mean(space: ExtrapolationSpace, rng: np.random.Generator) -> CaseResult:
        x = rng.standard_normal(space.base.dim)
        limit = semigroup(space.generator, 1e3) @ x
        gap = float(np.max(np.abs(limit - x.mean())))
        passed = gap <= 1e-6
        return CaseResult(case="semigroup mean", parameters={"t": 1e3}, measured=float(limit.mean()),
                          gap=gap, passed=passed, witness=None if passed else x.tolist())
