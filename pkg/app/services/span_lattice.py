"""Span norms, the lattice renorming and constructive suprema along approximation schemes."""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from app.core.errors import (
    ConvergenceError,
    DimensionMismatchError,
    PreconditionError,
)
from app.services.ordered_space import (
    CheckReport,
    OrderedSpaceSpec,
    cone_contains,
    negative_part,
    positive_part,
)
from app.services.sobolev_grid import (
    GridDomain,
    approx_identity_with_boundary,
    mollifier_matrix,
)

logger = logging.getLogger(__name__)

SPAN_STARTS = 8
SPAN_MAX_ITER = 5000
RENORM_EXACT_DIM = 16
CAUCHY_WINDOW = 3


@dataclass(frozen=True, eq=False)
class SpanNormResult:
    value: float
    positive: np.ndarray
    negative: np.ndarray

    @property
    def decomposition(self):
        return self.positive, self.negative


def _require_standard(space: OrderedSpaceSpec, operation: str):
    if not space.cone.is_standard:
        raise PreconditionError(f"{operation} is implemented for the standard cone only")


def span_norm(space: OrderedSpaceSpec, x, seed: int = 0, starts: int = SPAN_STARTS,
              max_iter: int = SPAN_MAX_ITER, shortcut: bool = True) -> SpanNormResult:
    """inf ||x+ + s|| + ||x- + s|| over s >= 0, by bound-constrained quasi-Newton multi-start.

    With ``shortcut`` a cone element returns its own norm without running the optimizer.
    """
    _require_standard(space, "span_norm")
    x = space.check_vector(x)
    if not np.any(x):
        return SpanNormResult(0.0, np.zeros(space.dim), np.zeros(space.dim))
    if shortcut and cone_contains(space.cone, x):
        return SpanNormResult(space.norm(x), x.copy(), np.zeros(space.dim))

    norm = space.norm
    plus, minus = positive_part(x), negative_part(x)

    def objective(s):
        upper, lower = plus + s, minus + s
        value = norm(upper) + norm(lower)
        return value, norm.gradient(upper) + norm.gradient(lower)

    rng = np.random.default_rng(seed)
    scale = float(np.max(np.abs(x)))
    initial = [np.zeros(space.dim)] + [rng.uniform(0.0, scale, space.dim) for _ in range(starts - 1)]
    best_value, best_shift, converged = np.inf, None, False
    for start in initial:
        result = minimize(objective, start, jac=True, method="L-BFGS-B",
                          bounds=[(0.0, None)] * space.dim,
                          options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-12})
        converged = converged or bool(result.success)
        shift = np.maximum(result.x, 0.0)
        value = norm(plus + shift) + norm(minus + shift)
        # ties go to the lowest start index
        if value < best_value - 1e-12 * max(abs(best_value), 1.0) or best_shift is None:
            best_value, best_shift = value, shift
    if not converged:
        logger.error(f"span_norm did not converge; best value {best_value}")
        raise ConvergenceError("span norm minimization did not converge", best_value=float(best_value))
    positive, negative = plus + best_shift, minus + best_shift
    return SpanNormResult(float(norm(positive) + norm(negative)), positive, negative)


@dataclass(frozen=True, eq=False)
class RenormResult:
    value: float
    bound: str
    vertex: np.ndarray

    @property
    def exact(self) -> bool:
        return self.bound == "EXACT"


def _box_vertices(magnitude: np.ndarray) -> np.ndarray:
    dim = magnitude.size
    masks = (np.arange(2 ** dim)[:, None] >> np.arange(dim)) & 1
    return masks * magnitude


def renorm_value(space: OrderedSpaceSpec, x, seed: int = 0, restarts: int = 32) -> RenormResult:
    """sup{||w|| : 0 <= w <= |x|}; the maximum of a convex function over a box sits at a vertex."""
    _require_standard(space, "renorm_value")
    magnitude = np.abs(space.check_vector(x))
    if not np.any(magnitude):
        return RenormResult(0.0, "EXACT", np.zeros(space.dim))
    if space.dim <= RENORM_EXACT_DIM:
        vertices = _box_vertices(magnitude)
        values = np.atleast_1d(space.norm(vertices))
        best = int(np.argmax(values))
        return RenormResult(float(values[best]), "EXACT", vertices[best])

    rng = np.random.default_rng(seed)
    best_value, best_vertex = -np.inf, None
    for _ in range(restarts):
        mask = rng.integers(0, 2, space.dim).astype(bool)
        value = space.norm(mask * magnitude)
        improved = True
        while improved:
            improved = False
            for i in range(space.dim):
                mask[i] = not mask[i]
                candidate = space.norm(mask * magnitude)
                if candidate > value:
                    value, improved = candidate, True
                else:
                    mask[i] = not mask[i]
        if value > best_value:
            best_value, best_vertex = value, mask * magnitude
    return RenormResult(float(best_value), "LOWER_BOUND", best_vertex)


def renorm_bounds_check(space: OrderedSpaceSpec, x, M: float, C: float) -> CheckReport:
    """||x|| <= 2M |||x||| and |||x||| <= 2M^2 C ||x||, with slack in the details."""
    x = space.check_vector(x)
    size = space.norm(x)
    renorm = renorm_value(space, x).value
    lower_slack = 2.0 * M * renorm - size
    upper_slack = 2.0 * M ** 2 * C * size - renorm
    passed = lower_slack >= -1e-12 * max(size, 1.0) and upper_slack >= -1e-12 * max(renorm, 1.0)
    return CheckReport(
        "renorm_bounds",
        passed,
        min(lower_slack, upper_slack),
        None if passed else x.tolist(),
        {"norm": size, "renorm": renorm, "lower_slack": lower_slack, "upper_slack": upper_slack,
         "M": M, "C": C},
    )


def _min_entry(op) -> float:
    if sp.issparse(op):
        return float(op.min()) if op.nnz else 0.0
    return float(np.min(op))


@dataclass(frozen=True, eq=False)
class ApproximationScheme:
    """An embedding J: X -> Z and operators R_n: Z -> X indexed geometrically from n_min."""

    embedding: Any
    approximation: Callable[[int], Any]
    n_min: int
    n_max: int
    name: str = "scheme"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.n_min < 1 or self.n_max < self.n_min:
            raise PreconditionError(f"invalid index range {self.n_min}..{self.n_max}")

    @property
    def domain_dim(self) -> int:
        return self.embedding.shape[1]

    @property
    def codomain_dim(self) -> int:
        return self.embedding.shape[0]

    def indices(self) -> list:
        indices, n = [], self.n_min
        while n <= self.n_max:
            indices.append(n)
            n *= 2
        return indices

    def operator(self, n: int):
        if n not in self._cache:
            self._cache[n] = self.approximation(n)
        return self._cache[n]

    def transpose(self) -> "ApproximationScheme":
        return ApproximationScheme(self.embedding.T, lambda n: self.operator(n).T,
                                   self.n_min, self.n_max, f"{self.name}-dual")

    def validate(self, samples: Sequence, tol: float) -> CheckReport:
        """J and every R_n positive; ||J R_n z - z|| non-increasing until below tol."""
        if _min_entry(self.embedding) < 0.0:
            return CheckReport("scheme_validation", False, _min_entry(self.embedding),
                               details={"reason": "J is not positive"})
        samples = [np.asarray(z, dtype=float) for z in samples]
        history, reached = [], False
        for n in self.indices():
            op = self.operator(n)
            if _min_entry(op) < 0.0:
                return CheckReport("scheme_validation", False, _min_entry(op),
                                   details={"reason": f"R_{n} is not positive"})
            errors = [float(np.max(np.abs(self.embedding @ (op @ z) - z))) for z in samples]
            history.append(max(errors) if errors else 0.0)
            if history[-1] <= tol:
                reached = True
                break
        monotone = all(b <= a * (1.0 + 1e-9) + 1e-15 for a, b in zip(history, history[1:]))
        return CheckReport("scheme_validation", reached and monotone, history[-1] if history else 0.0,
                           details={"errors": history, "monotone": monotone, "reached": reached})


def mollifier_scheme(domain: GridDomain, n_min: int = 4, n_max: int = 2 ** 32) -> ApproximationScheme:
    """Convolution with rho_{1/n} on a torus; R_n = mollify o push-in on domains with boundary.

    The index runs past the grid resolution: once the kernel no longer reaches
    a neighbouring node, R_n is exact on the grid.
    """
    identity = sp.identity(domain.size, format="csr")
    if domain.periodic:
        extent = float(domain.extent[0])

        def approximation(n):
            return mollifier_matrix(domain, extent / n, allow_unresolved=True)
    else:
        def approximation(n):
            return approx_identity_with_boundary(domain, max(n, 2), allow_unresolved=True).matrix
    return ApproximationScheme(identity, approximation, n_min, n_max, f"mollifier-{domain.kind}")


@dataclass(frozen=True, eq=False)
class SupremumResult:
    value: np.ndarray
    index: int
    increments: list


def _cauchy_limit(embedding, operators, z: np.ndarray, tol: float, label: str) -> SupremumResult:
    previous, increments, streak = None, [], 0
    for n, op in operators:
        current = np.asarray(embedding @ np.abs(op @ z)).ravel()
        if previous is not None:
            increment = float(np.max(np.abs(current - previous)))
            increments.append(increment)
            streak = streak + 1 if increment <= tol else 0
            logger.debug(f"{label}: n={n} increment={increment:.3e}")
            if streak >= CAUCHY_WINDOW:
                return SupremumResult(current, n, increments)
        previous = current
    logger.error(f"{label} did not settle within the index range")
    raise ConvergenceError(f"{label} sequence did not settle within the index range",
                           best_value=increments[-1] if increments else None,
                           diagnostics=increments)


def _verify_upper_bound(s: np.ndarray, z: np.ndarray, tol: float, space: Optional[OrderedSpaceSpec], label: str):
    slack = s + tol
    if space is not None:
        ok = cone_contains(space.cone, slack - z) and cone_contains(space.cone, slack + z)
    else:
        ok = bool(np.all(slack - z >= -1e-10) and np.all(slack + z >= -1e-10))
    if not ok:
        raise ConvergenceError(f"{label} limit is not an upper bound of +-z", witness=z.tolist())


def constructive_sup(scheme: ApproximationScheme, space_Z: OrderedSpaceSpec, z, tol: float) -> SupremumResult:
    """s = lim J|R_n z| with Cauchy detection; checks +-z <= s + tol afterwards."""
    z = np.asarray(z, dtype=float)
    if z.shape != (scheme.codomain_dim,) or space_Z.dim != scheme.codomain_dim:
        raise DimensionMismatchError(f"z of shape {z.shape} for a scheme into R^{scheme.codomain_dim}")
    if not np.any(z):
        return SupremumResult(np.zeros_like(z), scheme.n_min, [])
    result = _cauchy_limit(scheme.embedding, ((n, scheme.operator(n)) for n in scheme.indices()),
                           z, tol, "constructive supremum")
    _verify_upper_bound(result.value, z, tol, space_Z, "constructive supremum")
    return result


def constructive_sup_dual(scheme: ApproximationScheme, x_dual, tol: float) -> SupremumResult:
    """s' = lim J'|R_n' x'| in the dual order, with J', R_n' the transposes."""
    x_dual = np.asarray(x_dual, dtype=float)
    if x_dual.shape != (scheme.domain_dim,):
        raise DimensionMismatchError(f"covector of shape {x_dual.shape} for a scheme on R^{scheme.domain_dim}")
    if not np.any(x_dual):
        return SupremumResult(np.zeros_like(x_dual), scheme.n_min, [])
    dual = scheme.transpose()
    result = _cauchy_limit(dual.embedding, ((n, dual.operator(n)) for n in dual.indices()),
                           x_dual, tol, "dual constructive supremum")
    _verify_upper_bound(result.value, x_dual, tol, None, "dual constructive supremum")
    return result


def cone_norm_coincidence_check(space: OrderedSpaceSpec, increasing_chain: Sequence, limit) -> CheckReport:
    """On positive differences limit - x_j the span norm and the norm agree to 1e-7."""
    limit = space.check_vector(limit)
    chain = [space.check_vector(x) for x in increasing_chain]
    for earlier, later in zip(chain, chain[1:]):
        if not cone_contains(space.cone, later - earlier):
            raise PreconditionError("chain is not increasing", witness=(later - earlier).tolist())
    worst, witness = 0.0, None
    for x in chain:
        difference = limit - x
        if not cone_contains(space.cone, difference):
            raise PreconditionError("chain element is not below the limit", witness=difference.tolist())
        gap = abs(span_norm(space, difference, shortcut=False).value - space.norm(difference))
        if gap > worst:
            worst, witness = gap, difference.tolist()
    passed = worst <= 1e-7
    return CheckReport("cone_norm_coincidence", passed, worst, None if passed else witness)
