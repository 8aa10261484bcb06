from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from app.core.errors import ConvergenceError, DimensionMismatchError, PreconditionError
from app.services.ordered_space import NormSpec, OrderedSpaceSpec, PolyhedralCone
from app.services.sobolev_grid import GridDomain
import app.services.span_lattice as span_lattice
from app.services.span_lattice import (
    ApproximationScheme,
    constructive_sup,
    constructive_sup_dual,
    cone_norm_coincidence_check,
    mollifier_scheme,
    renorm_bounds_check,
    renorm_value,
    span_norm,
)


@pytest.fixture
def euclidean_space():
    return OrderedSpaceSpec.standard(6)


@pytest.fixture
def identity_scheme():
    return ApproximationScheme(np.eye(3), lambda n: np.eye(3), n_min=1, n_max=64, name="identity")


def test_span_norm_of_zero(euclidean_space):
    result = span_norm(euclidean_space, np.zeros(6))

    assert result.value == 0.0


def test_span_norm_of_positive_vector_is_its_norm(euclidean_space):
    x = np.arange(1.0, 7.0)

    result = span_norm(euclidean_space, x)

    assert result.value == pytest.approx(np.linalg.norm(x))
    np.testing.assert_array_equal(result.negative, np.zeros(6))


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0])
def test_span_norm_lies_between_norm_and_split_sum(p):
    # Arrange
    space = OrderedSpaceSpec.standard(6, NormSpec.lp(p))
    rng = np.random.default_rng(11)

    for x in rng.standard_normal((10, 6)):
        # Act
        result = span_norm(space, x)

        # Assert
        positive, negative = result.decomposition
        np.testing.assert_allclose(positive - negative, x, atol=1e-9)
        assert np.all(positive >= 0) and np.all(negative >= 0)
        assert space.norm(x) - 1e-9 <= result.value
        assert result.value <= space.norm(np.maximum(x, 0)) + space.norm(np.maximum(-x, 0)) + 1e-9


def test_span_norm_of_l1_vector_is_its_norm():
    space = OrderedSpaceSpec.standard(4, NormSpec.lp(1.0))
    x = np.array([1.0, -2.0, 0.5, -0.25])

    assert span_norm(space, x).value == pytest.approx(3.75, abs=1e-9)


def test_span_norm_needs_standard_cone():
    space = OrderedSpaceSpec(2, PolyhedralCone(2, [[1, 0], [1, 1]]), NormSpec.lp())

    with pytest.raises(PreconditionError):
        span_norm(space, [1.0, -1.0])


def test_span_norm_dimension_mismatch(euclidean_space):
    with pytest.raises(DimensionMismatchError):
        span_norm(euclidean_space, [1.0, -1.0])


def test_renorm_of_monotone_norm_is_the_norm(euclidean_space):
    x = np.array([1.0, -2.0, 0.0, 3.0, -0.5, 1.0])

    result = renorm_value(euclidean_space, x)

    assert result.exact
    assert result.value == pytest.approx(np.linalg.norm(x))
    np.testing.assert_array_equal(result.vertex, np.abs(x))


def test_renorm_above_exhaustive_dimension_is_a_lower_bound():
    space = OrderedSpaceSpec.standard(20)
    x = np.random.default_rng(5).standard_normal(20)

    result = renorm_value(space, x)

    assert result.bound == "LOWER_BOUND"
    assert result.value == pytest.approx(np.linalg.norm(x))


def test_renorm_dominates_positive_and_modulus_for_sobolev_norm():
    # Arrange
    domain = GridDomain.interval(8)
    space = OrderedSpaceSpec.on_grid(NormSpec.sobolev(domain, k=1, p=2))
    x = np.random.default_rng(6).standard_normal(8)

    # Act
    result = renorm_value(space, x)

    # Assert
    assert result.exact
    assert result.value >= space.norm(np.abs(x)) - 1e-12
    assert result.value >= space.norm(np.maximum(x, 0)) - 1e-12
    assert np.all(result.vertex <= np.abs(x))


def test_renorm_bounds_hold_for_euclidean_norm(euclidean_space):
    x = np.array([1.0, -1.0, 2.0, 0.0, -3.0, 0.5])

    report = renorm_bounds_check(euclidean_space, x, M=1.0, C=1.0)

    assert report.passed
    assert report.details["renorm"] == pytest.approx(np.linalg.norm(x))


def test_renorm_bounds_fail_with_too_small_constant(euclidean_space):
    x = np.array([1.0, -1.0, 2.0, 0.0, -3.0, 0.5])

    report = renorm_bounds_check(euclidean_space, x, M=0.1, C=1.0)

    assert not report.passed
    assert report.witness == x.tolist()
    assert report.details["lower_slack"] < 0


def test_scheme_indices_double_from_n_min():
    scheme = ApproximationScheme(np.eye(2), lambda n: np.eye(2), n_min=4, n_max=40)

    assert scheme.indices() == [4, 8, 16, 32]


def test_scheme_rejects_empty_range():
    with pytest.raises(PreconditionError):
        ApproximationScheme(np.eye(2), lambda n: np.eye(2), n_min=8, n_max=4)


def test_scheme_caches_operators():
    approximation = MagicMock(return_value=np.eye(2))
    scheme = ApproximationScheme(np.eye(2), approximation, n_min=1, n_max=8)

    scheme.operator(4)
    scheme.operator(4)

    approximation.assert_called_once_with(4)


def test_identity_scheme_validates(identity_scheme):
    report = identity_scheme.validate([np.ones(3)], tol=1e-12)

    assert report.passed
    assert report.details["errors"] == [0.0]


def test_scheme_with_negative_operator_fails_validation():
    scheme = ApproximationScheme(np.eye(2), lambda n: -np.eye(2), n_min=1, n_max=4)

    report = scheme.validate([np.ones(2)], tol=1e-6)

    assert not report.passed
    assert report.details["reason"] == "R_1 is not positive"


def test_mollifier_scheme_on_torus_validates():
    domain = GridDomain.torus(64)
    scheme = mollifier_scheme(domain, n_min=4, n_max=2 ** 10)
    z = np.sin(2 * np.pi * domain.nodes[:, 0])

    report = scheme.validate([z], tol=1e-12)

    assert report.passed
    assert report.details["monotone"]


def test_constructive_sup_on_torus_is_the_modulus():
    # Arrange
    domain = GridDomain.torus(32)
    scheme = mollifier_scheme(domain, n_min=4, n_max=2 ** 12)
    space = OrderedSpaceSpec.on_grid(NormSpec.sobolev(domain, k=0, p=2))
    z = np.random.default_rng(8).standard_normal(domain.size)

    # Act
    result = constructive_sup(scheme, space, z, tol=1e-6)

    # Assert
    np.testing.assert_allclose(result.value, np.abs(z), atol=1e-5)
    assert result.index <= 2 ** 12
    assert len(result.increments) >= 3


def test_constructive_sup_dual_is_the_modulus():
    domain = GridDomain.torus(32)
    scheme = mollifier_scheme(domain, n_min=4, n_max=2 ** 12)
    x_dual = np.random.default_rng(9).standard_normal(domain.size)

    result = constructive_sup_dual(scheme, x_dual, tol=1e-6)

    np.testing.assert_allclose(result.value, np.abs(x_dual), atol=1e-5)


def test_constructive_sup_of_zero(identity_scheme):
    result = constructive_sup(identity_scheme, OrderedSpaceSpec.standard(3), np.zeros(3), tol=1e-6)

    np.testing.assert_array_equal(result.value, np.zeros(3))
    assert result.increments == []


def test_constructive_sup_reports_a_sequence_that_never_settles():
    scheme = ApproximationScheme(np.eye(2), lambda n: n * np.eye(2), n_min=1, n_max=16)

    with pytest.raises(ConvergenceError) as error:
        constructive_sup(scheme, OrderedSpaceSpec.standard(2), np.array([1.0, -1.0]), tol=1e-6)

    assert error.value.diagnostics == [1.0, 2.0, 4.0, 8.0]
    assert error.value.best_value == 8.0


def test_constructive_sup_dimension_mismatch(identity_scheme):
    with pytest.raises(DimensionMismatchError):
        constructive_sup(identity_scheme, OrderedSpaceSpec.standard(3), np.ones(2), tol=1e-6)


def test_cone_norm_coincidence_on_increasing_chain(euclidean_space):
    limit = np.ones(6)
    chain = [t * limit for t in (0.0, 0.5, 0.9)]

    report = cone_norm_coincidence_check(euclidean_space, chain, limit)

    assert report.passed
    assert report.measured == pytest.approx(0.0, abs=1e-12)


def test_cone_norm_coincidence_rejects_decreasing_chain(euclidean_space):
    limit = np.ones(6)

    with pytest.raises(PreconditionError):
        cone_norm_coincidence_check(euclidean_space, [0.9 * limit, 0.5 * limit], limit)


def test_cone_norm_coincidence_runs_the_optimizer(euclidean_space):
    limit = np.ones(6)
    chain = [t * limit for t in (0.0, 0.5)]

    with patch.object(span_lattice, "minimize", wraps=span_lattice.minimize) as optimizer:
        report = cone_norm_coincidence_check(euclidean_space, chain, limit)

    assert report.passed
    assert optimizer.call_count == 2 * span_lattice.SPAN_STARTS


def test_span_norm_shortcut_skips_the_optimizer(euclidean_space):
    x = np.arange(1.0, 7.0)

    with patch.object(span_lattice, "minimize", wraps=span_lattice.minimize) as optimizer:
        shortcut = span_norm(euclidean_space, x)
        optimized = span_norm(euclidean_space, x, shortcut=False)

    assert optimizer.call_count == span_lattice.SPAN_STARTS
    assert optimized.value == pytest.approx(shortcut.value, rel=1e-9)


@pytest.mark.parametrize("alpha", [2.0, 10.0])
def test_span_norm_is_positively_homogeneous(alpha):
    space = OrderedSpaceSpec.standard(4)
    rng = np.random.default_rng(21)

    for x in rng.standard_normal((8, 4)):
        base = span_norm(space, x).value

        assert span_norm(space, alpha * x).value == pytest.approx(alpha * base, rel=1e-7, abs=1e-9)


@pytest.mark.parametrize("space", [
    OrderedSpaceSpec.standard(6),
    OrderedSpaceSpec.standard(5, NormSpec.lp(3.0)),
    OrderedSpaceSpec.on_grid(NormSpec.sobolev(GridDomain.interval(8), k=1, p=2)),
], ids=["l2", "l3", "sobolev"])
def test_renorm_depends_only_on_the_modulus(space):
    rng = np.random.default_rng(22)

    for x in rng.standard_normal((10, space.dim)):
        value = renorm_value(space, x).value

        assert renorm_value(space, -x).value == value
        assert renorm_value(space, np.abs(x)).value == value


@pytest.mark.parametrize("space", [
    OrderedSpaceSpec.standard(6),
    OrderedSpaceSpec.on_grid(NormSpec.sobolev(GridDomain.interval(8), k=1, p=2)),
], ids=["l2", "sobolev"])
def test_renorm_satisfies_the_triangle_inequality(space):
    rng = np.random.default_rng(23)

    for x, y in rng.standard_normal((20, 2, space.dim)):
        combined = renorm_value(space, x + y).value

        assert combined <= renorm_value(space, x).value + renorm_value(space, y).value + 1e-8
