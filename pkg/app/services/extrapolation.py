"""Extrapolation norms of positive matrix semigroup generators.

The extrapolated cone is the closure of the base cone under the weaker norm
||(lambda - A)^{-1} x||. In finite dimensions that closure is the base cone
itself, so ``extrapolation_cone_contains`` reduces to base-cone membership;
the collapse is a property of the model, not an approximation.
"""
import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from scipy import linalg

from app.core.errors import (
    DimensionMismatchError,
    PositivityError,
    PreconditionError,
    SingularSystemError,
)
from app.services.ordered_space import CheckReport, NormSpec, OrderedSpaceSpec, cone_contains
from app.services.span_lattice import ApproximationScheme, SupremumResult, constructive_sup

logger = logging.getLogger(__name__)

POSITIVITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    matrix: np.ndarray
    lambda0: float
    certified: bool
    kind: Literal["neumann_laplacian", "multiplication", "custom"] = "custom"

    @classmethod
    def build(cls, matrix, lambda0: Optional[float] = None, kind: str = "custom") -> "GeneratorMatrix":
        """Checks lambda0 against the spectrum and certifies resolvent positivity at two points."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"generator must be square, got shape {matrix.shape}")
        bound = float(np.max(np.linalg.eigvals(matrix).real))
        lambda0 = bound + 0.5 if lambda0 is None else float(lambda0)
        if lambda0 <= bound:
            raise PreconditionError(f"lambda0={lambda0} does not exceed the spectral bound {bound:.6g}",
                                    witness={"spectral_bound": bound})
        off_diagonal = matrix - np.diag(np.diag(matrix))
        certified = bool(np.all(off_diagonal >= 0.0))
        generator = cls(matrix, lambda0, False, kind)
        if certified:
            for mu in (lambda0, max(2.0 * lambda0 + 1.0, lambda0 + 1.0)):
                inverse = _solve(matrix, mu)
                if np.min(inverse) < -POSITIVITY_TOL:
                    certified = False
        return cls(matrix, lambda0, certified, kind) if certified else generator

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _solve(matrix: np.ndarray, mu: float) -> np.ndarray:
    system = mu * np.eye(matrix.shape[0]) - matrix
    try:
        return linalg.solve(system, np.eye(matrix.shape[0]))
    except linalg.LinAlgError as e:
        logger.error(f"Resolvent system singular at mu={mu}: {e}")
        raise SingularSystemError(f"mu - A is singular at mu={mu}")


def resolvent(gen: GeneratorMatrix, mu: float) -> np.ndarray:
    if mu <= gen.lambda0:
        raise PreconditionError(f"resolvent needs mu > lambda0 = {gen.lambda0}, got {mu}")
    inverse = _solve(gen.matrix, float(mu))
    if gen.certified and np.min(inverse) < -POSITIVITY_TOL:
        raise PositivityError(f"resolvent at mu={mu} has a negative entry {np.min(inverse):.3e}")
    return inverse


def neumann_laplacian_1d(n: int, h: float) -> GeneratorMatrix:
    """Second differences with reflecting end rows; rows sum to zero."""
    if n < 3:
        raise PreconditionError(f"Neumann Laplacian needs n >= 3, got {n}")
    if h <= 0:
        raise PreconditionError(f"grid spacing must be positive, got {h}")
    matrix = (np.diag(np.full(n - 1, 1.0), 1) + np.diag(np.full(n - 1, 1.0), -1)
              - np.diag(np.r_[1.0, np.full(n - 2, 2.0), 1.0])) / h ** 2
    return GeneratorMatrix.build(matrix, kind="neumann_laplacian")


def multiplication_generator(m) -> GeneratorMatrix:
    m = np.asarray(m, dtype=float).ravel()
    if np.any(m < 0):
        raise PreconditionError("multiplication generator needs m >= 0", witness=m.tolist())
    return GeneratorMatrix.build(np.diag(-m), kind="multiplication")


def semigroup(gen: GeneratorMatrix, t: float) -> np.ndarray:
    if t < 0:
        raise PreconditionError(f"semigroup time must be nonnegative, got {t}")
    return linalg.expm(t * gen.matrix)


@dataclass(frozen=True, eq=False)
class ExtrapolationSpace:
    base: OrderedSpaceSpec
    generator: GeneratorMatrix
    lam: float

    @classmethod
    def build(cls, base: OrderedSpaceSpec, generator: GeneratorMatrix,
              lam: Optional[float] = None) -> "ExtrapolationSpace":
        if base.dim != generator.size:
            raise DimensionMismatchError(f"generator of size {generator.size} on a space of dimension {base.dim}")
        lam = generator.lambda0 + 1.0 if lam is None else float(lam)
        if lam <= generator.lambda0:
            raise PreconditionError(f"lambda={lam} must exceed lambda0={generator.lambda0}")
        return cls(base, generator, lam)

    @property
    def resolvent_matrix(self) -> np.ndarray:
        return resolvent(self.generator, self.lam)


def extrapolation_norm(space: ExtrapolationSpace, x) -> float:
    x = space.base.check_vector(x)
    return space.base.norm(space.resolvent_matrix @ x)


def extrapolation_cone_contains(space: ExtrapolationSpace, x) -> bool:
    return cone_contains(space.base.cone, space.base.check_vector(x))


def _operator_bound(matrix: np.ndarray, norm: NormSpec) -> float:
    # interpolation between the weighted l1 and l-infinity operator norms
    if norm.kind != "lp":
        raise PreconditionError("operator bounds are available for weighted lp base norms only")
    p = norm.p
    weights = np.ones(matrix.shape[0]) if norm.weights is None else norm.weights
    scaled = (weights[:, None] ** (1.0 / p)) * matrix / (weights[None, :] ** (1.0 / p))
    one = np.max(np.sum(np.abs(scaled), axis=0))
    infinity = np.max(np.sum(np.abs(scaled), axis=1))
    return float(one ** (1.0 / p) * infinity ** (1.0 - 1.0 / p))


def lambda_equivalence(space: ExtrapolationSpace, other_lambda: float, samples: Sequence) -> CheckReport:
    """Measured ratios ||x||_lam / ||x||_other against the resolvent-identity bound rho."""
    other = ExtrapolationSpace.build(space.base, space.generator, other_lambda)
    identity = np.eye(space.base.dim)
    rho = max(
        _operator_bound(identity + (other.lam - space.lam) * space.resolvent_matrix, space.base.norm),
        _operator_bound(identity + (space.lam - other.lam) * other.resolvent_matrix, space.base.norm),
    )
    ratios, witness = [], None
    for x in samples:
        denominator = extrapolation_norm(other, x)
        if denominator > 0:
            ratio = extrapolation_norm(space, x) / denominator
            ratios.append(ratio)
            if witness is None and not 1.0 / rho - 1e-12 <= ratio <= rho + 1e-12:
                witness = np.asarray(x, dtype=float).tolist()
    low, high = (min(ratios), max(ratios)) if ratios else (1.0, 1.0)
    passed = witness is None
    return CheckReport("lambda_equivalence", passed, high, witness,
                       details={"rho": rho, "min_ratio": low, "max_ratio": high,
                                "lambda": space.lam, "other_lambda": other.lam})


def resolvent_scheme(gen: GeneratorMatrix, n_max: int = 2 ** 40) -> ApproximationScheme:
    """J = id and R_n = n (n - A)^{-1}, indexed by powers of two above lambda0."""
    n_min = 1
    while n_min <= gen.lambda0:
        n_min *= 2
    return ApproximationScheme(np.eye(gen.size), lambda n: n * resolvent(gen, float(n)),
                               n_min, n_max, f"resolvent-{gen.kind}")


def theorem41_sup(space: ExtrapolationSpace, z, tol: float) -> SupremumResult:
    """sup{-z, z} through the resolvent scheme, settled by constructive_sup."""
    return constructive_sup(resolvent_scheme(space.generator), space.base, z, tol)


resolvent_sup = theorem41_sup


def multiplication_example_check(m, p: float, mu_weights, samples: int = 100, seed: int = 0) -> CheckReport:
    """||x||_{-1} at lambda = 1 against sum(mu |x|^p / (1 + m)^p)^(1/p), plus cone and semigroup checks."""
    m = np.asarray(m, dtype=float).ravel()
    mu_weights = np.asarray(mu_weights, dtype=float).ravel()
    if m.shape != mu_weights.shape:
        raise DimensionMismatchError("m and the measure weights must have one length")
    generator = multiplication_generator(m)
    base = OrderedSpaceSpec.standard(m.size, NormSpec.lp(p, mu_weights))
    space = ExtrapolationSpace.build(base, generator, 1.0)
    rng = np.random.default_rng(seed)
    worst, witness = 0.0, None
    cone_agrees, cone_witness = True, None
    for _ in range(samples):
        x = rng.standard_normal(m.size)
        if rng.uniform() < 0.25:
            x = np.abs(x)
        closed_form = float(np.sum(mu_weights * np.abs(x) ** p / (1.0 + m) ** p) ** (1.0 / p))
        error = abs(extrapolation_norm(space, x) - closed_form) / max(closed_form, 1.0)
        if error > worst:
            worst, witness = error, x.tolist()
        if extrapolation_cone_contains(space, x) != bool(np.all(x >= 0)):
            if cone_agrees:
                cone_witness = x.tolist()
            cone_agrees = False
    semigroup_positive = all(np.min(semigroup(generator, t)) >= 0.0 for t in (0.1, 1.0, 10.0))
    passed = worst <= 1e-12 and cone_agrees and semigroup_positive
    if worst <= 1e-12:
        witness = cone_witness if not cone_agrees else {"m": m.tolist()}
    return CheckReport("multiplication_example", passed, worst, None if passed else witness,
                       {"cone_agrees": cone_agrees, "semigroup_positive": semigroup_positive})
