"""Grid discretizations of Sobolev spaces and the boundary machinery built on them.

Grid functions live on uniform grids over an interval, a torus or a rectangle.
Norms use forward differences, the pairing between a function and a functional
is ``<f, g>_h = h^d * sum(f * g)``, and every operator below is assembled as a
scipy sparse matrix so it can be applied to batches of grid functions.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Literal, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.optimize import minimize
from scipy.sparse.linalg import splu

from app.core.errors import (
    ChartContainmentError,
    ChartCoverError,
    ConvergenceError,
    DimensionMismatchError,
    PreconditionError,
)

logger = logging.getLogger(__name__)

DomainKind = Literal["interval", "torus", "rectangle"]

BOUNDARY_TOL = 1e-12
DUAL_GAP_TOL = 1e-4
POU_SHRINK = 0.9
CHART_CHECKS = (2, 4, 8, 16, 32)
CHART_SAMPLES = 10_000


@dataclass(frozen=True)
class GridDomain:
    kind: DomainKind
    n: int
    bounds: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("interval", "torus", "rectangle"):
            raise PreconditionError(f"unknown domain kind {self.kind!r}")
        if self.n < 4:
            raise PreconditionError(f"a grid needs at least 4 points per axis, got n={self.n}")
        bounds = tuple(float(b) for b in self.bounds)
        expected = 4 if self.kind == "rectangle" else 2
        if len(bounds) != expected:
            raise PreconditionError(f"{self.kind} takes {expected} bounds, got {len(bounds)}")
        if any(hi <= lo for lo, hi in zip(bounds[0::2], bounds[1::2])):
            raise PreconditionError(f"empty extent in bounds {bounds}")
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def interval(cls, n: int, a: float = 0.0, b: float = 1.0) -> "GridDomain":
        return cls("interval", n, (a, b))

    @classmethod
    def torus(cls, n: int, period: float = 1.0) -> "GridDomain":
        return cls("torus", n, (0.0, period))

    @classmethod
    def rectangle(cls, n: int, a1: float = 0.0, b1: float = 1.0,
                  a2: float = 0.0, b2: float = 1.0) -> "GridDomain":
        return cls("rectangle", n, (a1, b1, a2, b2))

    @property
    def dim(self) -> int:
        return 2 if self.kind == "rectangle" else 1

    @property
    def periodic(self) -> bool:
        return self.kind == "torus"

    @property
    def lows(self) -> np.ndarray:
        return np.array(self.bounds[0::2])

    @property
    def highs(self) -> np.ndarray:
        return np.array(self.bounds[1::2])

    @property
    def extent(self) -> np.ndarray:
        return self.highs - self.lows

    @property
    def spacing(self) -> tuple:
        cells = self.n if self.periodic else self.n - 1
        return tuple(float(e) / cells for e in self.extent)

    @property
    def h(self) -> float:
        return min(self.spacing)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n ** self.dim

    @property
    def measure(self) -> float:
        return float(np.prod(self.extent))

    def axis_nodes(self, axis: int = 0) -> np.ndarray:
        return self.lows[axis] + self.spacing[axis] * np.arange(self.n)

    @property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*[self.axis_nodes(a) for a in range(self.dim)], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def boundary_mask(self) -> np.ndarray:
        if self.periodic:
            return np.zeros(self.size, dtype=bool)
        index = np.indices(self.shape).reshape(self.dim, -1)
        return np.any((index == 0) | (index == self.n - 1), axis=0)

    def distance_to_boundary(self, points) -> np.ndarray:
        """Signed distance to the box boundary; negative outside, inf on a torus."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.periodic:
            return np.full(points.shape[0], np.inf)
        return np.minimum(points - self.lows, self.highs - points).min(axis=1)

    def contains(self, points, tol: float = BOUNDARY_TOL) -> np.ndarray:
        """Membership in the closed domain."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.periodic:
            return np.ones(points.shape[0], dtype=bool)
        return np.all((points >= self.lows - tol) & (points <= self.highs + tol), axis=1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size != self.domain.size:
            raise DimensionMismatchError(
                f"grid function has {values.size} values, domain has {self.domain.size} nodes"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, domain: GridDomain, fn) -> "GridFunction":
        return cls(domain, fn(*domain.nodes.T))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.domain, values)


# --- difference operators and norms -------------------------------------------------

def _forward_difference(size: int, h: float, periodic: bool) -> sp.csr_matrix:
    if periodic:
        d = sp.diags([-np.ones(size), np.ones(size - 1), np.ones(1)],
                     [0, 1, -(size - 1)], shape=(size, size))
    else:
        d = sp.diags([-np.ones(size - 1), np.ones(size - 1)], [0, 1], shape=(size - 1, size))
    return (d / h).tocsr()


def _axis_difference(n: int, h: float, periodic: bool, order: int) -> sp.csr_matrix:
    op = sp.identity(n, format="csr")
    size = n
    for _ in range(order):
        d = _forward_difference(size, h, periodic)
        op = d @ op
        size = d.shape[0]
    return op.tocsr()


def multi_indices(dim: int, k: int) -> list:
    indices = [alpha for alpha in product(range(k + 1), repeat=dim) if sum(alpha) <= k]
    return sorted(indices, key=lambda alpha: (sum(alpha), alpha))


def difference_operator(domain: GridDomain, alpha: Sequence[int]) -> sp.csr_matrix:
    """D^alpha as a sparse matrix; non-periodic axes shrink by one node per order."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != domain.dim:
        raise DimensionMismatchError(f"multi-index {alpha} does not match dimension {domain.dim}")
    if max(alpha) > domain.n - 2:
        raise PreconditionError(f"difference order {max(alpha)} too large for n={domain.n}")
    ops = [_axis_difference(domain.n, domain.spacing[axis], domain.periodic, order)
           for axis, order in enumerate(alpha)]
    op = ops[0]
    for other in ops[1:]:
        op = sp.kron(op, other, format="csr")
    return op


@lru_cache(maxsize=64)
def sobolev_operator(domain: GridDomain, k: int) -> sp.csr_matrix:
    """All D^alpha with |alpha| <= k stacked into one matrix L."""
    if k < 0:
        raise PreconditionError(f"order must be nonnegative, got k={k}")
    if k > domain.n - 2:
        raise PreconditionError(f"order k={k} too large for a grid with n={domain.n}")
    return sp.vstack([difference_operator(domain, alpha) for alpha in multi_indices(domain.dim, k)],
                     format="csr")


@lru_cache(maxsize=64)
def _gram_factor(domain: GridDomain, k: int):
    op = sobolev_operator(domain, k)
    return splu((op.T @ op).tocsc())


def sobolev_norm(f: GridFunction, k: int, p: float) -> float:
    if not 1.0 <= p < np.inf:
        raise PreconditionError(f"p must lie in [1, inf), got {p}")
    residual = sobolev_operator(f.domain, k) @ f.values
    return float((f.domain.cell_volume * np.sum(np.abs(residual) ** p)) ** (1.0 / p))


@dataclass(frozen=True)
class DualNormResult:
    value: float
    maximizer: np.ndarray
    lower: float
    upper: float

    @property
    def gap(self) -> float:
        return (self.upper - self.lower) / self.upper if self.upper > 0 else 0.0


def _dual_ascent(domain: GridDomain, k: int, b: np.ndarray, p: float, start: np.ndarray):
    """Maximizes <f, b> / ||L f||_q through its convex Fenchel form.

    Returns (lower, upper, f): the ratio at the final iterate, the p-norm of a
    feasible dual certificate v with L^T v = b, and the iterate itself.
    """
    q = p / (p - 1.0)
    op = sobolev_operator(domain, k)

    def objective(f):
        residual = op @ f
        magnitude = np.abs(residual)
        grad = op.T @ (np.sign(residual) * magnitude ** (q - 1.0)) - b
        return float(np.sum(magnitude ** q) / q - f @ b), grad

    result = minimize(objective, start, jac=True, method="L-BFGS-B",
                      options={"maxiter": 20000, "maxcor": 30, "ftol": 1e-15, "gtol": 1e-12})
    f = result.x
    residual = op @ f
    norm_q = np.linalg.norm(residual, ord=q)
    lower = float(f @ b / norm_q) if norm_q > 0 else 0.0
    certificate = np.sign(residual) * np.abs(residual) ** (q - 1.0)
    certificate = certificate + op @ _gram_factor(domain, k).solve(b - op.T @ certificate)
    upper = float(np.linalg.norm(certificate, ord=p))
    logger.debug(f"dual ascent finished after {result.nit} iterations: lower={lower} upper={upper}")
    return lower, upper, f


def negative_sobolev_dual(g: GridFunction, k: int, p: float,
                          method: Literal["auto", "ascent"] = "auto") -> DualNormResult:
    """W^{-k,p} norm of g together with a maximizing test function."""
    if k < 1:
        raise PreconditionError(f"negative order needs k >= 1, got k={k}")
    if not 1.0 < p < np.inf:
        raise PreconditionError(f"p must lie in (1, inf), got {p}")
    domain = g.domain
    weight = domain.cell_volume
    scale = float(np.linalg.norm(g.values))
    if scale == 0.0:
        return DualNormResult(0.0, np.zeros(domain.size), 0.0, 0.0)
    b = g.values / scale
    exact = _gram_factor(domain, k).solve(b)
    if p == 2.0 and method == "auto":
        value = np.sqrt(max(float(exact @ b), 0.0))
        total = np.sqrt(weight) * scale * value
        return DualNormResult(float(total), exact, float(total), float(total))

    start = exact if method == "auto" else np.zeros(domain.size)
    lower, upper, f = _dual_ascent(domain, k, b, p, start)
    factor = weight ** (1.0 / p) * scale
    if upper <= 0.0 or upper - lower > DUAL_GAP_TOL * upper:
        logger.error(f"Dual norm ascent stalled: lower={lower} upper={upper}")
        raise ConvergenceError(
            "negative Sobolev norm ascent did not close the duality gap",
            best_value=factor * lower,
            diagnostics=[factor * lower, factor * upper],
        )
    return DualNormResult(factor * lower, f, factor * lower, factor * upper)


def negative_sobolev_norm(g: GridFunction, k: int, p: float) -> float:
    return negative_sobolev_dual(g, k, p).value


# --- mollifiers ---------------------------------------------------------------------

def bump_profile(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        values = np.exp(-1.0 / (1.0 - t ** 2))
    return np.where(np.abs(t) < 1.0, values, 0.0)


@lru_cache(maxsize=None)
def bump_normalization(dim: int) -> float:
    if dim == 1:
        mass, _ = integrate.quad(lambda t: float(bump_profile(t)), -1.0, 1.0)
    else:
        radial, _ = integrate.quad(lambda r: r * float(bump_profile(r)), 0.0, 1.0)
        mass = 2.0 * np.pi * radial
    return 1.0 / mass


@dataclass(frozen=True)
class Mollifier:
    scale: float
    dim: int = 1

    def __post_init__(self):
        if self.scale <= 0:
            raise PreconditionError(f"mollifier scale must be positive, got {self.scale}")

    def __call__(self, radii) -> np.ndarray:
        radii = np.asarray(radii, dtype=float)
        return bump_normalization(self.dim) * self.scale ** (-self.dim) * bump_profile(radii / self.scale)

    def discrete_weights(self, domain: GridDomain):
        """Grid offsets inside the support and weights renormalized to sum 1."""
        spacing = np.asarray(domain.spacing)
        reach = [int(np.ceil(self.scale / h)) for h in spacing]
        mesh = np.meshgrid(*[np.arange(-m, m + 1) for m in reach], indexing="ij")
        offsets = np.stack([m.ravel() for m in mesh], axis=1)
        radii = np.sqrt(((offsets * spacing) ** 2).sum(axis=1))
        weights = self(radii) * domain.cell_volume
        keep = weights > 0
        offsets, weights = offsets[keep], weights[keep]
        return offsets, weights / weights.sum()


@lru_cache(maxsize=128)
def mollifier_matrix(domain: GridDomain, delta: float, allow_unresolved: bool = False) -> sp.csr_matrix:
    """Convolution with rho_delta: circular on a torus, zero extension otherwise.

    With ``allow_unresolved`` the scale may drop below 2h; at delta <= h the
    kernel keeps only its centre weight and the matrix is the identity.
    """
    if not allow_unresolved and delta < 2.0 * domain.h * (1.0 - 1e-12):
        raise PreconditionError(
            f"mollifier scale {delta:.6g} is below the resolvable 2h = {2.0 * domain.h:.6g}"
        )
    offsets, weights = Mollifier(delta, domain.dim).discrete_weights(domain)
    index = np.indices(domain.shape).reshape(domain.dim, -1).T
    flat = np.arange(domain.size)
    rows, cols, data = [], [], []
    for offset, weight in zip(offsets, weights):
        target = index + offset
        if domain.periodic:
            target = np.mod(target, domain.n)
            valid = np.ones(domain.size, dtype=bool)
        else:
            valid = np.all((target >= 0) & (target < domain.n), axis=1)
        rows.append(flat[valid])
        cols.append(np.ravel_multi_index(tuple(target[valid].T), domain.shape))
        data.append(np.full(int(valid.sum()), weight))
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(domain.size, domain.size),
    )


def mollify(f: GridFunction, delta: float) -> GridFunction:
    return f.with_values(mollifier_matrix(f.domain, float(delta)) @ f.values)


# --- affine charts and the partition of unity ---------------------------------------

def smoothstep(t) -> np.ndarray:
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t ** 3 * (t * (6.0 * t - 15.0) + 10.0)


def _falloff(t) -> np.ndarray:
    # 1 on [0, 1/2], 0 from 1 on
    return 1.0 - smoothstep(2.0 * np.asarray(t) - 1.0)


@dataclass(frozen=True, eq=False)
class BoundaryChart:
    """Affine compressions A_n(x) = B_n x + b_n around a point of the closed domain.

    Local coordinates are z = frame @ (x - center); the last local axis is the
    inward normal for boundary charts. Interior charts compress concentrically,
    boundary charts compress only along the normal towards the anchor
    c = (0, ..., 0, r/4).
    """

    center: np.ndarray
    frame: np.ndarray
    radius: float
    half_width: float = 0.0
    interior: bool = True
    graph: Literal["flat", "wedge"] = "flat"
    checked: tuple = ()

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def anchor(self) -> np.ndarray:
        anchor = np.zeros(self.dim)
        if not self.interior:
            anchor[-1] = self.radius / 4.0
        return anchor

    def scale(self, n: int) -> np.ndarray:
        if n < 2:
            raise PreconditionError(f"chart index must be >= 2, got n={n}")
        factor = 1.0 - 1.0 / n
        if self.interior:
            return np.full(self.dim, factor)
        scale = np.ones(self.dim)
        scale[-1] = factor
        return scale

    def to_local(self, x) -> np.ndarray:
        return (np.atleast_2d(np.asarray(x, dtype=float)) - self.center) @ self.frame.T

    def to_global(self, z) -> np.ndarray:
        return np.atleast_2d(z) @ self.frame + self.center

    def forward(self, x, n: int) -> np.ndarray:
        z = self.to_local(x)
        return self.to_global(self.scale(n) * (z - self.anchor) + self.anchor)

    def inverse(self, x, n: int) -> np.ndarray:
        z = self.to_local(x)
        return self.to_global((z - self.anchor) / self.scale(n) + self.anchor)

    def affine_parts(self, n: int):
        """(B_n, b_n) in global coordinates."""
        b = self.forward(np.zeros(self.dim), n)[0]
        return self.frame.T @ np.diag(self.scale(n)) @ self.frame, b

    def _axis_ratios(self, z: np.ndarray) -> np.ndarray:
        if self.interior:
            return np.linalg.norm(z, axis=1, keepdims=True) / self.radius
        normal = np.abs(z[:, -1:] - self.radius / 4.0) / (self.radius / 2.0)
        if self.dim == 1:
            return normal
        return np.hstack([np.abs(z[:, :-1]) / self.half_width, normal])

    def in_neighbourhood(self, x, closed: bool = False) -> np.ndarray:
        ratios = self._axis_ratios(self.to_local(x)).max(axis=1)
        return ratios <= 1.0 + BOUNDARY_TOL if closed else ratios < 1.0

    def bump(self, x) -> np.ndarray:
        """Smooth bump, positive exactly on the neighbourhood shrunk by POU_SHRINK."""
        return np.prod(_falloff(self._axis_ratios(self.to_local(x)) / POU_SHRINK), axis=1)

    def sample_closure(self, domain: GridDomain, count: int, rng: np.random.Generator) -> np.ndarray:
        """Points of closure(domain & V), including points on both boundaries."""
        d = self.dim
        marked = count // 10
        if self.interior:
            directions = rng.standard_normal((count, d))
            directions /= np.linalg.norm(directions, axis=1, keepdims=True)
            radii = self.radius * rng.uniform(0.0, 1.0, count) ** (1.0 / d)
            radii[:marked] = self.radius
            z = directions * radii[:, None]
        else:
            z = np.empty((count, d))
            z[:, :-1] = rng.uniform(-self.half_width, self.half_width, (count, d - 1))
            z[:, -1] = rng.uniform(-self.radius / 4.0, 3.0 * self.radius / 4.0, count)
            z[:marked, -1] = 3.0 * self.radius / 4.0
            if d > 1:
                z[marked:2 * marked, 0] = self.half_width * rng.choice([-1.0, 1.0], marked)
            floor = np.abs(z[:, 0]) if self.graph == "wedge" else np.zeros(count)
            z[:, -1] = np.maximum(z[:, -1], floor)
            z[2 * marked:3 * marked, -1] = floor[2 * marked:3 * marked]
        return np.clip(self.to_global(z), domain.lows, domain.highs)


def containment_violations(chart: BoundaryChart, domain: GridDomain, n: int,
                           samples: int = CHART_SAMPLES, seed: int = 0) -> np.ndarray:
    """Sampled points p of closure(domain & V) with A_n(p) outside the open domain."""
    rng = np.random.default_rng(seed)
    points = chart.sample_closure(domain, samples, rng)
    images = chart.forward(points, n)
    inside = domain.distance_to_boundary(images) > BOUNDARY_TOL
    return points[~inside]


def build_boundary_chart(domain: GridDomain, x0, radius: Optional[float] = None,
                         half_width: Optional[float] = None, checks: Sequence[int] = CHART_CHECKS,
                         samples: int = CHART_SAMPLES, seed: int = 0) -> BoundaryChart:
    if domain.periodic:
        raise PreconditionError("a torus has no boundary to chart")
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != domain.dim:
        raise DimensionMismatchError(f"chart center has {x0.size} coordinates, domain has {domain.dim}")
    if not domain.contains(x0)[0]:
        raise PreconditionError(f"chart center {x0.tolist()} lies outside the closed domain")
    lows, highs, extent = domain.lows, domain.highs, domain.extent
    at_low = np.isclose(x0, lows, rtol=0.0, atol=BOUNDARY_TOL)
    at_high = np.isclose(x0, highs, rtol=0.0, atol=BOUNDARY_TOL)
    active = at_low | at_high

    if not active.any():
        depth = float(domain.distance_to_boundary(x0)[0])
        r = 0.8 * depth if radius is None else float(radius)
        if not 0.0 < r < depth:
            raise PreconditionError(f"interior chart radius {r} must lie in (0, {depth})")
        chart = BoundaryChart(center=x0, frame=np.eye(domain.dim), radius=r)
    else:
        normal = at_low.astype(float) - at_high.astype(float)
        normal /= np.linalg.norm(normal)
        corner = int(active.sum()) > 1
        r = float(extent[active].min()) if radius is None else float(radius)
        if not 0.0 < 0.75 * r < extent[active].min():
            raise PreconditionError(f"boundary chart radius {r} reaches the opposite side")
        if domain.dim == 1:
            width = 0.0
            frame = normal.reshape(1, 1)
        else:
            if corner:
                width = r / 8.0 if half_width is None else float(half_width)
            else:
                tangential = ~active
                room = float(np.minimum(x0 - lows, highs - x0)[tangential].min())
                width = 0.6 * room if half_width is None else float(half_width)
                if not 0.0 < width < room:
                    raise PreconditionError(
                        f"chart half-width {width} reaches another part of the boundary (room {room})"
                    )
            tangent = np.array([normal[1], -normal[0]])
            frame = np.vstack([tangent, normal])
        chart = BoundaryChart(center=x0, frame=frame, radius=r, half_width=width, interior=False,
                              graph="wedge" if corner else "flat")

    for n in checks:
        offending = containment_violations(chart, domain, n, samples=samples, seed=seed)
        if offending.size:
            logger.error(f"Chart at {x0.tolist()} violates containment for n={n}")
            raise ChartContainmentError(
                f"closure of A_{n}(domain & V) leaves the domain for the chart at {x0.tolist()}",
                offending=offending[:5].tolist(),
            )
    return BoundaryChart(chart.center, chart.frame, chart.radius, chart.half_width,
                         chart.interior, chart.graph, tuple(checks))


@lru_cache(maxsize=16)
def chart_cover(domain: GridDomain) -> tuple:
    """The committed finite cover of the closed domain."""
    if domain.periodic:
        raise PreconditionError("a torus has no boundary to chart")
    lows, highs, extent = domain.lows, domain.highs, domain.extent
    if domain.dim == 1:
        middle = 0.5 * (lows + highs)
        return (
            build_boundary_chart(domain, lows),
            build_boundary_chart(domain, highs),
            build_boundary_chart(domain, middle, radius=0.4 * float(extent[0])),
        )
    charts = [build_boundary_chart(domain, corner) for corner in product(*zip(lows, highs))]
    for axis in (0, 1):
        other = 1 - axis
        for side in (lows[axis], highs[axis]):
            for fraction in (0.2, 0.5, 0.8):
                point = np.empty(2)
                point[axis] = side
                point[other] = lows[other] + fraction * extent[other]
                charts.append(build_boundary_chart(domain, point))
    for fx, fy in product((0.25, 0.5, 0.75), repeat=2):
        center = lows + np.array([fx, fy]) * extent
        charts.append(build_boundary_chart(domain, center, radius=0.24 * float(extent.min())))
    return tuple(charts)


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    charts: tuple

    def bumps(self, points) -> np.ndarray:
        return np.vstack([chart.bump(points) for chart in self.charts])

    def weights(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        bumps = self.bumps(points)
        total = bumps.sum(axis=0)
        uncovered = total <= 0.0
        if uncovered.any():
            witness = points[np.flatnonzero(uncovered)[0]].tolist()
            logger.error(f"Chart cover misses point {witness}")
            raise ChartCoverError(f"point {witness} is not covered by any chart", witness=witness)
        return bumps / total


def partition_of_unity(domain: GridDomain, charts: Optional[Sequence[BoundaryChart]] = None,
                       samples: int = CHART_SAMPLES, seed: int = 0) -> PartitionOfUnity:
    """Normalized bumps; checks the cover on nodes, random points and boundary points."""
    pou = PartitionOfUnity(tuple(chart_cover(domain) if charts is None else charts))
    rng = np.random.default_rng(seed)
    interior = domain.lows + rng.uniform(0.0, 1.0, (samples, domain.dim)) * domain.extent
    boundary = domain.lows + rng.uniform(0.0, 1.0, (samples, domain.dim)) * domain.extent
    axes = rng.integers(0, domain.dim, samples)
    sides = np.where(rng.uniform(size=samples) < 0.5, domain.lows[axes], domain.highs[axes])
    boundary[np.arange(samples), axes] = sides
    pou.weights(np.vstack([domain.nodes, interior, boundary]))
    return pou


@lru_cache(maxsize=16)
def _default_partition(domain: GridDomain) -> PartitionOfUnity:
    return partition_of_unity(domain)


# --- push-in operators --------------------------------------------------------------

def _interpolation(domain: GridDomain, points: np.ndarray):
    """Column indices and (bi)linear weights of off-grid points; clamps to the closed domain."""
    lower, frac = [], []
    for axis in range(domain.dim):
        t = (points[:, axis] - domain.lows[axis]) / domain.spacing[axis]
        i0 = np.clip(np.floor(t), 0, domain.n - 2).astype(int)
        lower.append(i0)
        frac.append(np.clip(t - i0, 0.0, 1.0))
    cols, weights = [], []
    for corner in product((0, 1), repeat=domain.dim):
        index = np.zeros(points.shape[0], dtype=int)
        weight = np.ones(points.shape[0])
        for axis, step in enumerate(corner):
            index = index * domain.n + lower[axis] + step
            weight = weight * (frac[axis] if step else 1.0 - frac[axis])
        cols.append(index)
        weights.append(weight)
    return np.stack(cols, axis=1), np.stack(weights, axis=1)


@dataclass(frozen=True, eq=False)
class PushInOperator:
    domain: GridDomain
    n: int
    matrix: sp.csr_matrix
    support_mask: np.ndarray

    def apply(self, f: GridFunction) -> GridFunction:
        if f.domain != self.domain:
            raise DimensionMismatchError("grid function lives on another grid")
        return f.with_values(self.matrix @ f.values)

    __call__ = apply

    @property
    def support_distance(self) -> float:
        if not self.support_mask.any():
            return np.inf
        return float(self.domain.distance_to_boundary(self.domain.nodes[self.support_mask]).min())


@lru_cache(maxsize=256)
def pushin_operator(domain: GridDomain, n: int) -> PushInOperator:
    """S_n f = sum_y (h_y f) o A_{y,n}^{-1}, with its support mask K_n on the grid."""
    if domain.periodic:
        raise PreconditionError("push-in operators need a domain with boundary")
    if n < 2:
        raise PreconditionError(f"push-in index must be >= 2, got n={n}")
    pou = _default_partition(domain)
    nodes = domain.nodes
    support = np.zeros(domain.size, dtype=bool)
    rows, cols, data = [], [], []
    for index, chart in enumerate(pou.charts):
        preimages = chart.inverse(nodes, n)
        reach = domain.contains(preimages) & chart.in_neighbourhood(preimages, closed=True)
        support |= reach
        if not reach.any():
            continue
        points = preimages[reach]
        weight = pou.weights(points)[index]
        active = weight > 0.0
        if not active.any():
            continue
        node_ids = np.flatnonzero(reach)[active]
        icols, iweights = _interpolation(domain, points[active])
        rows.append(np.repeat(node_ids, icols.shape[1]))
        cols.append(icols.ravel())
        data.append((weight[active][:, None] * iweights).ravel())
    if rows:
        matrix = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(domain.size, domain.size))
    else:
        matrix = sp.csr_matrix((domain.size, domain.size))
    return PushInOperator(domain, n, matrix, support)


@dataclass(frozen=True, eq=False)
class BoundaryApproximation:
    domain: GridDomain
    n: int
    delta: float
    matrix: sp.csr_matrix
    pushin: PushInOperator

    def apply(self, f: GridFunction) -> GridFunction:
        return f.with_values(self.matrix @ f.values)

    __call__ = apply


@lru_cache(maxsize=256)
def approx_identity_with_boundary(domain: GridDomain, n: int,
                                  allow_unresolved: bool = False) -> BoundaryApproximation:
    """R_n = mollify(., delta_n) o S_n with delta_n = dist(K_n, boundary) / 3."""
    pushin = pushin_operator(domain, n)
    if not pushin.support_mask.any():
        raise PreconditionError(f"push-in support is empty for n={n}")
    delta = pushin.support_distance / 3.0
    if not allow_unresolved and delta < 2.0 * domain.h:
        raise PreconditionError(
            f"grid too coarse for n={n}: delta_n = {delta:.4g} < 2h = {2.0 * domain.h:.4g}",
            witness={"n": n, "delta": delta, "h": domain.h},
        )
    smoothing = mollifier_matrix(domain, float(delta), allow_unresolved=True)
    return BoundaryApproximation(domain, n, delta, (smoothing @ pushin.matrix).tocsr(), pushin)


# --- positive dominants in W_0^{k,p} on an interval ---------------------------------

def _iterated_integral(values: np.ndarray, h: float, times: int) -> np.ndarray:
    for _ in range(times):
        values = h * np.concatenate(([0.0], np.cumsum(values)))
    return values


def positive_dominant_w0(f: GridFunction, k: int, p: float = 2.0, tol: float = 1e-8) -> GridFunction:
    """A positive g in discrete W_0^{k,p} with g >= f.

    f_0 integrates |D^k f| k times from the left end, f_1 from the right end;
    smooth cutoffs glue them into g = u_0 f_0 + u_1 f_1.
    """
    domain = f.domain
    if domain.kind != "interval":
        raise PreconditionError("positive dominants are built on an interval")
    if not 1 <= k <= domain.n - 2:
        raise PreconditionError(f"order k={k} out of range for n={domain.n}")
    if not 1.0 < p < np.inf:
        raise PreconditionError(f"p must lie in (1, inf), got {p}")
    values = f.values
    edges = np.concatenate([values[:k], values[-k:]])
    if np.max(np.abs(edges)) > tol:
        raise PreconditionError(f"f does not vanish to order {k - 1} at the endpoints",
                                witness=edges.tolist())
    h = domain.h
    difference = _axis_difference(domain.n, h, False, k)
    left = _iterated_integral(np.abs(difference @ values), h, k)
    right = _iterated_integral(np.abs(difference @ values[::-1]), h, k)[::-1]
    t = (domain.axis_nodes(0) - domain.lows[0]) / domain.extent[0]
    u0 = 1.0 - smoothstep((t - 0.5) / 0.25)
    u1 = smoothstep((t - 0.25) / 0.25)
    return f.with_values(u0 * left + u1 * right)
