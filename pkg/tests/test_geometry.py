import numpy as np
import pytest

from utils.errors import OrderingViolation, WrongDimension
from utils.geometry import (alpha_star, break_planes, in_triangle, make_domain, omega0_rule, overlap_predicate,
                            q_rule, region_measures, star_regions)
from utils.numerics import monte_carlo_measure


@pytest.mark.parametrize('args', [
    (1.0, 1.0, 0.5),
    (1.0, 0.4, 0.5),
    (1.0, -0.1, -0.2),
    (float('nan'), 0.5, 0.5),
])
def test_make_domain_rejects_bad_ordering(args):
    with pytest.raises(OrderingViolation):
        make_domain(*args)


def test_make_domain_3d_needs_ordered_c():
    with pytest.raises(OrderingViolation):
        make_domain(1.0, 0.5, 0.4, None, dimension=3)
    with pytest.raises(OrderingViolation):
        make_domain(1.0, 0.5, 0.4, 0.45, dimension=3)
    with pytest.raises(WrongDimension):
        make_domain(1.0, 0.5, 0.4, 0.3, dimension=4)


def test_domain_measures(domain2d, domain3d):
    assert np.isclose(domain2d.measure_q, 4.0)
    assert np.isclose(domain2d.measure_p, 1.4)
    assert np.isclose(domain2d.measure_omega0, 2.6)
    assert np.isclose(domain3d.measure_omega0, 7.0)
    assert domain2d.to_dict() == {'dimension': 2, 'L': 1.0, 'a': 0.7, 'b': 0.5}
    assert domain3d.to_dict()['c'] == 0.5


def test_alpha_star_vanishes_for_square_hole():
    assert alpha_star(make_domain(1.0, 0.5, 0.5)) == 0.0
    assert alpha_star(make_domain(2.0, 1.2, 1.2)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(WrongDimension):
        alpha_star(make_domain(1.0, 0.5, 0.5, 0.5, dimension=3))


def test_alpha_star_gives_tangent_line(rng, random_domain):
    for _ in range(10):
        domain = random_domain(rng, 2)
        L, a, b = domain.L, domain.a, domain.b
        alpha = alpha_star(domain)
        first, _ = star_regions(domain)
        normal = np.array([alpha, L - a]) / np.hypot(alpha, L - a)
        distance = abs(normal @ (first.center_array - np.array([a, b])))
        assert distance == pytest.approx(first.radius, abs=1e-8 * L)


def test_in_triangle_includes_boundary():
    pts = np.array([[0.25, 0.25], [0.5, 0.0], [1.0, 1.0]])
    assert in_triangle(pts, (0, 0), (1, 0), (0, 1)).tolist() == [True, True, False]


def test_star_regions_are_mirror_images(domain2d, rng):
    first, second = star_regions(domain2d)
    pts = rng.uniform(-1, 1, size=(4000, 2))
    assert np.array_equal(first.contains(pts), second.contains(-pts))
    assert first.radius == pytest.approx(0.15)
    assert np.allclose(first.center, (-0.85, 0.85))
    assert first.diameter == pytest.approx(2.0 * np.sqrt(2.0))


@pytest.mark.parametrize('dimension', [2, 3])
def test_star_regions_cover_the_perforated_domain(dimension, rng, random_domain):
    domain = random_domain(rng, dimension)
    first, second = star_regions(domain)
    pts = rng.uniform(-domain.L, domain.L, size=(20000, dimension))
    live = domain.in_omega0(pts)
    assert np.all(first.contains(pts[live]) | second.contains(pts[live]))
    assert not np.any(first.contains(pts[~live]))


@pytest.mark.parametrize('dimension', [2, 3])
def test_region_measures_match_monte_carlo(dimension, rng, random_domain):
    for k in range(3):
        domain = random_domain(rng, dimension)
        sigma, gamma = region_measures(domain)
        first, _ = star_regions(domain)
        estimate, stderr = monte_carlo_measure(first.contains, domain.bounds, 200_000, seed=k)
        assert abs(estimate - sigma) <= 3.5 * stderr
        estimate, stderr = monte_carlo_measure(overlap_predicate(domain), domain.bounds, 200_000, seed=k + 10)
        assert abs(estimate - gamma) <= 3.5 * stderr


@pytest.mark.parametrize('dimension', [2, 3])
def test_omega0_rule_resolves_region_indicators(dimension, rng, random_domain):
    domain = random_domain(rng, dimension)
    rule = omega0_rule(domain, 4)
    assert rule.measure == pytest.approx(domain.measure_omega0, rel=1e-12)
    first, _ = star_regions(domain)
    sigma, gamma = region_measures(domain)
    assert rule.masked(first.contains).measure == pytest.approx(sigma, rel=1e-10)
    assert rule.masked(overlap_predicate(domain)).measure == pytest.approx(gamma, rel=1e-10)


@pytest.mark.parametrize('dimension', [2, 3])
def test_refined_omega0_rule_integrates_the_same_polynomials(dimension, domain2d, domain3d):
    domain = domain2d if dimension == 2 else domain3d
    e = np.eye(dimension)
    refine = [(e[1], 0.3), (e[1], -0.3), (e[0], 0.85), (e[0], 5.0), (np.ones(dimension) / np.sqrt(dimension), 0.2)]
    plain, refined = omega0_rule(domain, 4), omega0_rule(domain, 4, refine)
    assert refined.size > plain.size
    assert refined.measure == pytest.approx(domain.measure_omega0, rel=1e-12)
    first, _ = star_regions(domain)
    assert refined.masked(first.contains).measure == pytest.approx(region_measures(domain)[0], rel=1e-10)

    def poly(p):
        return p[:, 0] ** 2 * p[:, 1] ** 4 + p[:, 1] ** 3 + 1.0

    assert refined.weights @ poly(refined.nodes) == pytest.approx(plain.weights @ poly(plain.nodes), rel=1e-10)


def test_q_rule_covers_outer_box(domain3d):
    rule = q_rule(domain3d, 2)
    assert rule.measure == pytest.approx(8.0)
    assert rule.size == 4 ** 3 * 2 ** 3


def test_break_planes_hold_axis_planes_and_interfaces(domain2d):
    planes = break_planes(domain2d)
    axis_planes = [(tuple(n), c) for n, c in planes if np.count_nonzero(n) == 1]
    assert ((1.0, 0.0), 0.7) in axis_planes
    assert ((0.0, 1.0), -0.5) in axis_planes
    vertex, corner = np.array([0.7, 0.5]), np.array([1.0, 1.0])
    assert any(np.isclose(n @ vertex, c) and np.isclose(n @ corner, c) for n, c in planes)
