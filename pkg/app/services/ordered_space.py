"""Finite-dimensional ordered spaces: polyhedral cones, norms and lattice oracles."""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import nnls

from app.clients.lp_client import LP_TOLERANCE, LinearProgramClient
from app.core.errors import (
    DegenerateConeError,
    DimensionMismatchError,
    PreconditionError,
)
from app.services.sobolev_grid import (
    GridDomain,
    GridFunction,
    negative_sobolev_dual,
    sobolev_operator,
)

logger = logging.getLogger(__name__)

CONE_TOL = 1e-10
SUPREMUM_AGREEMENT = 1e-8
SUPREMUM_DIRECTIONS = 64
FACE_SAMPLES = 512

NormKind = Literal["lp", "sobolev", "dual_sobolev"]


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    measured: float
    witness: Optional[list] = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))

    def __bool__(self) -> bool:
        return self.passed


@dataclass(frozen=True, eq=False)
class PolyhedralCone:
    """The cone {x : ineq @ x >= 0}; pointed by construction."""

    dim: int
    ineq: np.ndarray

    def __post_init__(self):
        ineq = np.atleast_2d(np.asarray(self.ineq, dtype=float))
        if self.dim < 1:
            raise PreconditionError(f"dimension must be positive, got {self.dim}")
        if ineq.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"inequality system has {ineq.shape[1]} columns for a cone of dimension {self.dim}"
            )
        # the lineality space {x : ineq @ x = 0} is trivial iff the system has full column rank
        if np.linalg.matrix_rank(ineq) < self.dim:
            raise DegenerateConeError(
                "cone is not pointed: the inequality system leaves a nonzero line invariant"
            )
        object.__setattr__(self, "ineq", ineq)

    @classmethod
    def standard(cls, dim: int) -> "PolyhedralCone":
        return cls(dim, np.eye(dim))

    @property
    def is_standard(self) -> bool:
        ineq = self.ineq
        if ineq.shape[0] != self.dim:
            return False
        nonzero = ineq != 0
        if not np.all(nonzero.sum(axis=1) == 1) or np.any(ineq[nonzero] < 0):
            return False
        return len(set(np.argmax(nonzero, axis=1))) == self.dim

    def contains(self, x) -> bool:
        return cone_contains(self, x)


@dataclass(frozen=True, eq=False)
class NormSpec:
    """A norm on R^dim: weighted lp, discrete W^{k,p} or discrete W^{-k,p}."""

    kind: NormKind = "lp"
    p: float = 2.0
    k: int = 0
    weights: Optional[np.ndarray] = None
    domain: Optional[GridDomain] = None

    def __post_init__(self):
        if self.kind == "lp":
            # p = 1 is admitted for lp norms only
            if not 1.0 <= self.p < np.inf:
                raise PreconditionError(f"lp norm needs p in [1, inf), got {self.p}")
            if self.weights is not None:
                weights = np.asarray(self.weights, dtype=float).ravel()
                if np.any(weights <= 0):
                    raise PreconditionError("norm weights must be strictly positive")
                object.__setattr__(self, "weights", weights)
            return
        if self.kind not in ("sobolev", "dual_sobolev"):
            raise PreconditionError(f"unknown norm kind {self.kind!r}")
        if self.domain is None:
            raise PreconditionError(f"{self.kind} norm needs a grid domain")
        if not 1.0 < self.p < np.inf:
            raise PreconditionError(f"p must lie in (1, inf), got {self.p}")
        if self.k < (1 if self.kind == "dual_sobolev" else 0):
            raise PreconditionError(f"invalid order k={self.k} for a {self.kind} norm")
        sobolev_operator(self.domain, self.k)

    @classmethod
    def lp(cls, p: float = 2.0, weights=None) -> "NormSpec":
        return cls("lp", p=p, weights=weights)

    @classmethod
    def sobolev(cls, domain: GridDomain, k: int = 1, p: float = 2.0) -> "NormSpec":
        return cls("sobolev", p=p, k=k, domain=domain)

    @classmethod
    def dual_sobolev(cls, domain: GridDomain, k: int = 1, p: float = 2.0) -> "NormSpec":
        return cls("dual_sobolev", p=p, k=k, domain=domain)

    @property
    def size(self) -> Optional[int]:
        if self.domain is not None:
            return self.domain.size
        return None if self.weights is None else self.weights.size

    def _check(self, x: np.ndarray):
        if self.size is not None and x.shape[-1] != self.size:
            raise DimensionMismatchError(f"vector of length {x.shape[-1]} for a norm on R^{self.size}")

    def evaluate(self, x):
        """Norm of a vector, or of every row of a (..., dim) batch."""
        x = np.asarray(x, dtype=float)
        self._check(x)
        if self.kind == "lp":
            weights = 1.0 if self.weights is None else self.weights
            values = np.sum(weights * np.abs(x) ** self.p, axis=-1) ** (1.0 / self.p)
        elif self.kind == "sobolev":
            batch = x.reshape(-1, x.shape[-1])
            residual = sobolev_operator(self.domain, self.k) @ batch.T
            values = (self.domain.cell_volume * np.sum(np.abs(residual) ** self.p, axis=0)) ** (1.0 / self.p)
            values = values.reshape(x.shape[:-1])
        else:
            batch = x.reshape(-1, x.shape[-1])
            values = np.array([negative_sobolev_dual(GridFunction(self.domain, row), self.k, self.p).value
                               for row in batch]).reshape(x.shape[:-1])
        return float(values) if np.ndim(values) == 0 else values

    __call__ = evaluate

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check(x)
        value = self.evaluate(x)
        if value == 0.0:
            return np.zeros_like(x)
        if self.kind == "lp":
            weights = 1.0 if self.weights is None else self.weights
            return weights * np.sign(x) * np.abs(x) ** (self.p - 1.0) / value ** (self.p - 1.0)
        op = sobolev_operator(self.domain, self.k)
        volume = self.domain.cell_volume
        if self.kind == "sobolev":
            residual = op @ x
            return volume * (op.T @ (np.sign(residual) * np.abs(residual) ** (self.p - 1.0))) / value ** (self.p - 1.0)
        # Danskin: the gradient of a dual norm is the normalized maximizer
        maximizer = negative_sobolev_dual(GridFunction(self.domain, x), self.k, self.p).maximizer
        q = self.p / (self.p - 1.0)
        test_norm = (volume * np.sum(np.abs(op @ maximizer) ** q)) ** (1.0 / q)
        return volume * maximizer / test_norm


@dataclass(frozen=True, eq=False)
class OrderedSpaceSpec:
    dim: int
    cone: PolyhedralCone
    norm: NormSpec

    def __post_init__(self):
        if self.cone.dim != self.dim:
            raise DimensionMismatchError(f"cone of dimension {self.cone.dim} in a space of dimension {self.dim}")
        if self.norm.size is not None and self.norm.size != self.dim:
            raise DimensionMismatchError(f"norm acts on R^{self.norm.size}, space is R^{self.dim}")

    @classmethod
    def standard(cls, dim: int, norm: Optional[NormSpec] = None) -> "OrderedSpaceSpec":
        return cls(dim, PolyhedralCone.standard(dim), norm or NormSpec.lp())

    @classmethod
    def on_grid(cls, norm: NormSpec) -> "OrderedSpaceSpec":
        return cls.standard(norm.domain.size, norm)

    def norm_of(self, x) -> float:
        return self.norm(self.check_vector(x))

    def check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(f"expected a vector of length {self.dim}, got shape {x.shape}")
        return x


def positive_part(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=float), 0.0)


def negative_part(x) -> np.ndarray:
    return np.maximum(-np.asarray(x, dtype=float), 0.0)


def modulus(x) -> np.ndarray:
    return np.abs(np.asarray(x, dtype=float))


def cone_contains(cone: PolyhedralCone, x) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != (cone.dim,):
        raise DimensionMismatchError(f"vector of shape {x.shape} tested against a cone in R^{cone.dim}")
    return bool(np.all(cone.ineq @ x >= -CONE_TOL))


def interior_point(cone: PolyhedralCone, lp_client: Optional[LinearProgramClient] = None) -> Optional[np.ndarray]:
    """A point with ineq @ x > 0, or None when the cone has empty interior."""
    lp_client = lp_client or LinearProgramClient()
    m, d = cone.ineq.shape
    # variables (x, t): maximize t subject to ineq @ x >= t, |x_i| <= 1, t <= 1
    A_ub = np.hstack([-cone.ineq, np.ones((m, 1))])
    solution = lp_client.maximize(np.r_[np.zeros(d), 1.0], A_ub=A_ub, b_ub=np.zeros(m),
                                  bounds=[(-1.0, 1.0)] * d + [(None, 1.0)])
    if solution[-1] <= LP_TOLERANCE:
        return None
    return solution[:d]


def extreme_rays(cone: PolyhedralCone) -> np.ndarray:
    """Unit extreme rays, one per row, found from (dim - 1)-subsets of active inequalities."""
    rays = []
    for rows in combinations(range(cone.ineq.shape[0]), cone.dim - 1):
        active = cone.ineq[list(rows)] if rows else np.zeros((0, cone.dim))
        kernel = null_space(active) if rows else np.eye(cone.dim)
        if kernel.shape[1] != 1:
            continue
        ray = kernel[:, 0]
        if np.all(cone.ineq @ ray >= -CONE_TOL):
            pass
        elif np.all(cone.ineq @ -ray >= -CONE_TOL):
            ray = -ray
        else:
            continue
        ray = ray / np.linalg.norm(ray)
        if not any(np.allclose(ray, seen, atol=1e-9) for seen in rays):
            rays.append(ray)
    return np.array(rays).reshape(-1, cone.dim)


def dual_cone(cone: PolyhedralCone, lp_client: Optional[LinearProgramClient] = None) -> PolyhedralCone:
    """The dual wedge {f : f . x >= 0 on the cone}, written with the extreme rays as inequalities."""
    if interior_point(cone, lp_client) is None:
        raise DegenerateConeError("cone has empty interior, so its dual wedge contains a line")
    return PolyhedralCone(cone.dim, extreme_rays(cone))


def supremum_oracle(space: OrderedSpaceSpec, x, y, lp_client: Optional[LinearProgramClient] = None,
                    seed: int = 0, directions: int = SUPREMUM_DIRECTIONS) -> Optional[np.ndarray]:
    """sup{x, y} in the space's order, or None when no unique least upper bound is found."""
    x = space.check_vector(x)
    y = space.check_vector(y)
    cone = space.cone
    if cone.is_standard:
        return np.maximum(x, y)
    lp_client = lp_client or LinearProgramClient()
    rng = np.random.default_rng(seed)
    A = cone.ineq
    A_ub = np.vstack([-A, -A])
    b_ub = np.concatenate([-A @ x, -A @ y])
    bounds = [(None, None)] * space.dim
    candidates = []
    for _ in range(directions):
        # c = A^T w with w > 0 keeps the objective bounded below on the upper bounds
        objective = A.T @ rng.uniform(0.5, 1.5, A.shape[0])
        candidates.append(lp_client.minimize(objective, A_ub=A_ub, b_ub=b_ub, bounds=bounds))
    first = candidates[0]
    if all(np.max(np.abs(c - first)) <= SUPREMUM_AGREEMENT for c in candidates[1:]):
        return first
    logger.debug("Supremum oracle found incomparable minimal upper bounds")
    return None


def riesz_decompose(x, y, w, tol: float = CONE_TOL):
    """Splits 0 <= w <= x + y as w1 + w2 with 0 <= w1 <= x and 0 <= w2 <= y."""
    x, y, w = (np.asarray(v, dtype=float) for v in (x, y, w))
    if not x.shape == y.shape == w.shape:
        raise DimensionMismatchError("riesz_decompose needs vectors of one length")
    if np.any(x < -tol) or np.any(y < -tol) or np.any(w < -tol) or np.any(w > x + y + tol):
        raise PreconditionError("riesz_decompose needs x, y >= 0 and 0 <= w <= x + y",
                                witness={"x": x.tolist(), "y": y.tolist(), "w": w.tolist()})
    first = np.minimum(w, x)
    return first, w - first


def normality_constant_lower_bound(space: OrderedSpaceSpec, witnesses: Sequence) -> float:
    """max ||x|| / ||y|| over witnesses 0 <= x <= y; 0.0 for an empty list."""
    best = 0.0
    for x, y in witnesses:
        x = space.check_vector(x)
        y = space.check_vector(y)
        if not (cone_contains(space.cone, x) and cone_contains(space.cone, y - x)):
            raise PreconditionError("normality witness violates 0 <= x <= y",
                                    witness={"x": x.tolist(), "y": y.tolist()})
        denominator = space.norm(y)
        if denominator == 0.0:
            raise PreconditionError("normality witness has y = 0", witness={"y": y.tolist()})
        best = max(best, space.norm(x) / denominator)
    return best


def decomposition_constant_estimate(space: OrderedSpaceSpec, samples: Sequence, seed: int = 0) -> float:
    """max span_norm(x) / ||x|| over the nonzero samples."""
    from app.services.span_lattice import span_norm

    best = 0.0
    for x in samples:
        x = space.check_vector(x)
        size = space.norm(x)
        if size == 0.0:
            continue
        best = max(best, span_norm(space, x, seed=seed).value / size)
    return best


@dataclass(frozen=True)
class FaceCheck:
    is_face: bool
    witness: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.is_face


def _in_generated_cone(generators: np.ndarray, z: np.ndarray) -> bool:
    _, residual = nnls(generators.T, z)
    return residual <= 1e-9 * (1.0 + np.linalg.norm(z))


def is_face(image_generators: Sequence, ambient: PolyhedralCone, sample_size: int = FACE_SAMPLES,
            directions: int = 4, seed: int = 0,
            lp_client: Optional[LinearProgramClient] = None) -> FaceCheck:
    """Sampled search for 0 <= z <= g with g generated and z not generated.

    For each sampled g the order interval [0, g] is a polytope; its vertices
    are reached by LPs with random objectives and tested for membership in the
    generated cone by nonnegative least squares.
    """
    generators = np.asarray(image_generators, dtype=float).reshape(-1, ambient.dim)
    for g in generators:
        if not cone_contains(ambient, g):
            raise PreconditionError("generator lies outside the ambient cone", witness=g.tolist())
    if generators.shape[0] == 0:
        return FaceCheck(True)
    lp_client = lp_client or LinearProgramClient()
    rng = np.random.default_rng(seed)
    samples = list(generators) + [generators.sum(axis=0)]
    while len(samples) < sample_size:
        samples.append(rng.uniform(0.0, 1.0, generators.shape[0]) @ generators)
    A = ambient.ineq
    A_ub = np.vstack([-A, A])
    bounds = [(None, None)] * ambient.dim
    for g in samples[:max(sample_size, 1)]:
        b_ub = np.concatenate([np.zeros(A.shape[0]), A @ g])
        for objective in rng.standard_normal((directions, ambient.dim)):
            vertex = lp_client.minimize(objective, A_ub=A_ub, b_ub=b_ub, bounds=bounds)
            if not _in_generated_cone(generators, vertex):
                return FaceCheck(False, (vertex, g))
    return FaceCheck(True)


def is_lattice_ideal(J, ambient: PolyhedralCone, sample_size: int = FACE_SAMPLES, seed: int = 0,
                     lp_client: Optional[LinearProgramClient] = None) -> FaceCheck:
    """Whether the image of the standard cone under a positive J is a face of the ambient cone."""
    J = np.asarray(J, dtype=float)
    if J.shape[0] != ambient.dim:
        raise DimensionMismatchError(f"map with {J.shape[0]} rows into a cone in R^{ambient.dim}")
    return is_face(J.T, ambient, sample_size=sample_size, seed=seed, lp_client=lp_client)


def lattice_hom_check(J, domain: OrderedSpaceSpec, samples: Sequence) -> CheckReport:
    """max ||J|x| - |Jx|||_inf over the samples; passes at 1e-10."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[1] != domain.dim:
        raise DimensionMismatchError(f"map of shape {J.shape} on a space of dimension {domain.dim}")
    worst, witness = 0.0, None
    for x in samples:
        x = domain.check_vector(x)
        defect = float(np.max(np.abs(np.abs(J @ x) - J @ np.abs(x)))) if J.size else 0.0
        if defect > worst:
            worst, witness = defect, x.tolist()
    passed = worst <= 1e-10
    return CheckReport("lattice_hom", passed, worst, None if passed else witness)
