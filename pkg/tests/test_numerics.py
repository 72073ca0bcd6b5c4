import numpy as np
import pytest

from utils.errors import QuadratureFailure, TooCloseToBoundary
from utils.numerics import (QuadratureRule, abs_integral, adaptive_quad, composite_gauss_legendre,
                            fd_divergence, fd_gradient, fd_jacobian, gauss_legendre, integrate, make_grid,
                            mapped_gauss_legendre, monte_carlo_measure, partition_boxes, polar_ball_rule,
                            spawn_generators, tensor_gauss_legendre, trapezoid_rule)


@pytest.mark.parametrize('n', [1, 3, 6, 10])
def test_gauss_legendre_is_exact_to_degree_2n_minus_1(n):
    x, w = gauss_legendre(n, -1.0, 2.0)
    degree = 2 * n - 1
    exact = (2.0 ** (degree + 1) - (-1.0) ** (degree + 1)) / (degree + 1)
    assert np.isclose(w @ x ** degree, exact, rtol=1e-12)


def test_mapped_gauss_legendre_broadcasts_intervals():
    lo = np.array([[0.0, 1.0], [2.0, 3.0]])
    nodes, weights = mapped_gauss_legendre(5, lo, lo + 0.5)
    assert nodes.shape == (2, 2, 5)
    assert np.allclose(weights.sum(axis=-1), 0.5)
    assert np.all((nodes > lo[..., None]) & (nodes < lo[..., None] + 0.5))


def test_tensor_rule_integrates_polynomial_on_box():
    rule = tensor_gauss_legendre([[0.0, 1.0], [-1.0, 2.0]], 4)
    assert rule.size == 16
    assert np.isclose(rule.measure, 3.0)
    value = integrate(lambda p: p[:, 0] ** 3 * p[:, 1] ** 2, rule)
    assert np.isclose(value, 0.25 * 3.0, rtol=1e-12)


def test_trapezoid_rule_needs_two_nodes():
    assert np.isclose(trapezoid_rule([[0.0, 2.0]], 11).measure, 2.0)
    with pytest.raises(ValueError):
        trapezoid_rule([[0.0, 1.0]], 1)


def test_quadrature_rule_rejects_mismatched_sizes():
    with pytest.raises(ValueError):
        QuadratureRule('gauss-legendre', np.zeros((3, 2)), np.ones(2))


def test_composite_rule_over_partition():
    boxes = partition_boxes([[0.0, 0.5, 1.0], [0.0, 1.0]])
    assert len(boxes) == 2
    rule = composite_gauss_legendre(boxes, 3)
    assert np.isclose(rule.measure, 1.0)
    masked = rule.masked(lambda p: p[:, 0] < 0.5)
    assert np.isclose(masked.measure, 0.5)


@pytest.mark.parametrize('dimension, volume', [(2, np.pi * 0.25), (3, 4.0 / 3.0 * np.pi * 0.125)])
def test_polar_ball_rule_measure(dimension, volume):
    rule = polar_ball_rule(dimension, 8, 12, radius=0.5, center=np.ones(dimension))
    assert np.isclose(rule.measure, volume, rtol=1e-12)
    assert np.all(np.linalg.norm(rule.nodes - 1.0, axis=1) < 0.5)


def test_adaptive_quad_value():
    value, error = adaptive_quad(np.sin, 0.0, np.pi)
    assert np.isclose(value, 2.0, rtol=1e-12)
    assert error < 1e-10


def test_adaptive_quad_raises_when_not_converged():
    with pytest.raises(QuadratureFailure):
        adaptive_quad(lambda t: np.sin(1000.0 * t) * np.exp(-t), 0.0, 100.0, limit=2)


def test_abs_integral_splits_at_sign_changes():
    assert np.isclose(abs_integral(np.sin, 0.0, 2.0 * np.pi), 4.0, rtol=1e-12)
    assert np.isclose(abs_integral(lambda t: t ** 2 - 0.25, 0.0, 1.0), 0.25, rtol=1e-12)


def test_abs_integral_of_a_constant_integrand():
    assert np.isclose(abs_integral(lambda t: 2.0, 0.0, 3.0), 6.0, rtol=1e-14)
    assert np.isclose(abs_integral(lambda t: np.float64(-0.5), -1.0, 1.0), 1.0, rtol=1e-14)


def test_monte_carlo_measure_of_disk():
    estimate, stderr = monte_carlo_measure(lambda p: np.sum(p ** 2, axis=1) <= 1.0, [[-1, 1], [-1, 1]],
                                           200_000, seed=3)
    assert abs(estimate - np.pi) <= 4.0 * stderr
    with pytest.raises(ValueError):
        monte_carlo_measure(lambda p: p[:, 0] > 0, [[0, 1]], 10)


def test_monte_carlo_is_reproducible():
    first = monte_carlo_measure(lambda p: p[:, 0] > p[:, 1], [[0, 1], [0, 1]], 5000, seed=11)
    second = monte_carlo_measure(lambda p: p[:, 0] > p[:, 1], [[0, 1], [0, 1]], 5000, seed=11)
    assert first == second


def test_spawned_generators_are_independent_and_reproducible():
    a1, b1 = spawn_generators(7, 2)
    a2, _ = spawn_generators(7, 2)
    assert np.array_equal(a1.random(4), a2.random(4))
    assert not np.array_equal(spawn_generators(7, 2)[0].random(4), b1.random(4))


def test_central_differences_are_exact_on_quadratics(rng):
    pts = rng.uniform(-0.5, 0.5, size=(20, 2))
    grad = fd_gradient(lambda p: p[:, 0] ** 2 + 3.0 * p[:, 0] * p[:, 1], pts, 1e-3)
    expected = np.column_stack([2 * pts[:, 0] + 3 * pts[:, 1], 3 * pts[:, 0]])
    assert np.allclose(grad, expected, atol=1e-9)

    def field(p):
        return np.column_stack([p[:, 0] * p[:, 1], p[:, 1] ** 2])

    jac = fd_jacobian(field, pts, 1e-3)
    assert jac.shape == (20, 2, 2)
    assert np.allclose(jac[:, 0, 1], pts[:, 0], atol=1e-9)
    assert np.allclose(fd_divergence(field, pts, 1e-3), 3 * pts[:, 1], atol=1e-9)


def test_central_differences_converge_at_second_order():
    pts = np.array([[0.3, -0.2], [0.1, 0.4], [-0.5, 0.25]])
    exact = np.column_stack([np.cos(pts[:, 0]) * np.exp(pts[:, 1]), np.sin(pts[:, 0]) * np.exp(pts[:, 1])])
    errors = []
    for step in (1e-1, 5e-2, 2.5e-2):
        grad = fd_gradient(lambda p: np.sin(p[:, 0]) * np.exp(p[:, 1]), pts, step)
        errors.append(np.max(np.abs(grad - exact)))
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(np.abs(rates - 2.0) < 0.1)


def test_single_point_gradient_keeps_shape():
    assert fd_gradient(lambda p: p[:, 0], np.array([0.1, 0.2]), 1e-4).shape == (2,)


def test_stencil_must_stay_inside_bounds():
    with pytest.raises(TooCloseToBoundary):
        fd_gradient(lambda p: p[:, 0], [[0.99, 0.0]], 0.05, bounds=[[-1, 1], [-1, 1]])


def test_make_grid_node_and_cell_centred():
    grid = make_grid([[-1, 1], [0, 1]], (5, 3))
    assert grid.shape == (5, 3)
    assert grid.nodes.shape == (15, 2)
    assert np.allclose(grid.spacing, [0.5, 0.5])
    assert np.allclose(grid.nodes[1], [-1.0, 0.5])

    centred = make_grid([[0, 1], [0, 1]], 4, predicate=lambda p: p[:, 0] > 0.5, cell_centered=True)
    assert np.isclose(centred.cell_volume, 1.0 / 16.0)
    assert centred.active_nodes.shape == (8, 2)
    assert np.isclose(centred.nodes[:, 0].min(), 0.125)
