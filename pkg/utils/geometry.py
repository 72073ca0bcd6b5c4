"""
Outer box Q, inner box P, the perforated domain Q minus P and its cover by two
regions that are star-shaped with respect to a ball.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from utils.errors import OrderingViolation, WrongDimension
from utils.numerics import QuadratureRule, composite_gauss_legendre, mapped_gauss_legendre, partition_boxes

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Domain:
    """Half-side L of the outer box and half-sides (a, b[, c]) of the inner box."""

    dimension: int
    L: float
    a: float
    b: float
    c: float | None = None

    @property
    def half_sides(self):
        sides = (self.a, self.b) if self.dimension == 2 else (self.a, self.b, self.c)
        return np.array(sides, dtype=float)

    @property
    def bounds(self):
        return np.array([[-self.L, self.L]] * self.dimension)

    @property
    def measure_q(self):
        return (2.0 * self.L) ** self.dimension

    @property
    def measure_p(self):
        return float(np.prod(2.0 * self.half_sides))

    @property
    def measure_omega0(self):
        return 2.0 ** self.dimension * (self.L ** self.dimension - float(np.prod(self.half_sides)))

    def in_q(self, points, tol=BOUNDARY_TOL):
        """Membership in the closed outer box."""
        return np.all(np.abs(points) <= self.L + tol, axis=-1)

    def in_p(self, points, tol=BOUNDARY_TOL):
        """Membership in the closed inner box."""
        return np.all(np.abs(points) <= self.half_sides + tol, axis=-1)

    def in_omega0(self, points):
        return self.in_q(points) & ~self.in_p(points)

    def to_dict(self):
        data = {'dimension': self.dimension, 'L': self.L, 'a': self.a, 'b': self.b}
        if self.dimension == 3:
            data['c'] = self.c
        return data


def make_domain(L, a, b, c=None, dimension=2):
    """
    Build a validated domain.

    Args:
        L (float): Half-side of the outer box
        a, b (float): Half-sides of the inner box
        c (float, optional): Third half-side, required in 3d and ignored in 2d
        dimension (int): 2 or 3

    Returns:
        Domain: The validated configuration

    Raises:
        OrderingViolation: Unless L > a >= b (>= c) > 0
        WrongDimension: For a dimension other than 2 or 3
    """
    if dimension not in (2, 3):
        raise WrongDimension(f'dimension must be 2 or 3, got {dimension}')
    values = [L, a, b] + ([c] if dimension == 3 else [])
    if any(v is None for v in values):
        raise OrderingViolation('half-side c is required in 3d')
    values = [float(v) for v in values]
    if not all(np.isfinite(v) and v > 0 for v in values):
        raise OrderingViolation(f'all half-sides must be finite and positive, got {values}')
    if not values[0] > values[1]:
        raise OrderingViolation(f'need L > a, got L={values[0]}, a={values[1]}')
    if any(values[i] < values[i + 1] for i in range(1, len(values) - 1)):
        raise OrderingViolation(f'need a >= b >= c, got {values[1:]}')
    return Domain(dimension, *values[:3], values[3] if dimension == 3 else None)


def alpha_star(domain):
    """
    Drop of the tangent line from the vertex (a, b) to the upper-left disk at x = L.

    Raises:
        WrongDimension: The construction exists only in 2d
    """
    if domain.dimension != 2:
        raise WrongDimension('alpha_star is defined only in 2d')
    L, a, b = domain.L, domain.a, domain.b
    s = L + a - 2.0 * b
    bracket = (L + 3.0 * a) * s - (L - a) * np.sqrt(s ** 2 + 8.0 * a * (L + a))
    return max(0.0, (L - a) / (8.0 * a * (L + a)) * bracket)


def region_measures(domain):
    """Closed-form measure of each star region and of their overlap."""
    L = domain.L
    if domain.dimension == 2:
        a, b = domain.a, domain.b
        alpha = alpha_star(domain)
        sigma = 3 * L ** 2 - (a + b) * L - a * b + (L - a) * alpha / 2
        gamma = (L - a) * alpha + 2 * (L - a) * (L - b)
        return sigma, gamma
    a, b, c = domain.half_sides
    s1, s2, s3 = a + b + c, a * b + a * c + b * c, a * b * c
    sigma = 7 * L ** 3 - s1 * L ** 2 - s2 * L - s3
    gamma = 6 * L ** 3 - 2 * s1 * L ** 2 - 2 * s2 * L + 6 * s3
    return float(sigma), float(gamma)


def _cross2(u, v):
    return float(u[0] * v[1] - u[1] * v[0])


def in_triangle(points, p1, p2, p3, tol=BOUNDARY_TOL):
    """Half-plane test for a closed triangle; boundary points count as inside."""
    pts = np.asarray(points, dtype=float)
    verts = [np.asarray(p, dtype=float) for p in (p1, p2, p3)]
    orient = np.sign(_cross2(verts[1] - verts[0], verts[2] - verts[0]))
    if orient == 0:
        orient = 1.0
    inside = np.ones(pts.shape[:-1], dtype=bool)
    for i in range(3):
        u, v = verts[i], verts[(i + 1) % 3]
        edge = v - u
        side = edge[0] * (pts[..., 1] - u[1]) - edge[1] * (pts[..., 0] - u[0])
        inside &= orient * side >= -tol * max(1.0, float(np.hypot(*edge)))
    return inside


@dataclass(frozen=True)
class StarRegion:
    """A subregion of the perforated domain, star-shaped with respect to a ball."""

    name: str
    dimension: int
    center: tuple
    radius: float
    measure: float
    diameter: float
    slab: tuple
    predicate: Callable = field(compare=False, repr=False)

    def contains(self, points):
        return np.asarray(self.predicate(np.asarray(points, dtype=float)), dtype=bool)

    @property
    def center_array(self):
        return np.array(self.center, dtype=float)


def _region_predicates_2d(domain):
    L, a, b = domain.L, domain.a, domain.b
    alpha = alpha_star(domain)

    def omega1(points):
        x, y = points[..., 0], points[..., 1]
        tri = in_triangle(points, (a, b), (L, b), (L, b - alpha))
        return domain.in_omega0(points) & ((x < -a) | (y > b) | tri)

    def omega2(points):
        return omega1(-np.asarray(points))

    return omega1, omega2


def _region_predicates_3d(domain):
    half = domain.half_sides

    def omega1(points):
        return domain.in_omega0(points) & np.any(points > half, axis=-1)

    def omega2(points):
        return domain.in_omega0(points) & np.any(points < -half, axis=-1)

    return omega1, omega2


def star_regions(domain):
    """
    The two star regions covering the perforated domain.

    Returns:
        tuple: (StarRegion, StarRegion), mirror images through the origin
    """
    L, d = domain.L, domain.dimension
    sigma, _ = region_measures(domain)
    radius = (L - domain.a) / 2.0
    diameter = 2.0 * np.sqrt(d) * L
    if d == 2:
        center = np.array([-(L + domain.a) / 2.0, (L + domain.a) / 2.0])
        slab = ((-L, -domain.a), (-L, L))
        omega1, omega2 = _region_predicates_2d(domain)
    else:
        center = (L + domain.half_sides) / 2.0
        slab = ((domain.a, L), (-L, L), (-L, L))
        omega1, omega2 = _region_predicates_3d(domain)
    mirrored = tuple(tuple(sorted((-hi, -lo))) for lo, hi in slab)
    first = StarRegion('omega1', d, tuple(center), radius, sigma, diameter, slab, omega1)
    second = StarRegion('omega2', d, tuple(-center), radius, sigma, diameter, mirrored, omega2)
    return first, second


def overlap_predicate(domain):
    """Indicator of the doubly illuminated region (intersection of both star regions)."""
    first, second = star_regions(domain)
    return lambda points: first.contains(points) & second.contains(points)


def break_planes(domain):
    """
    Hyperplanes (normal, offset) with normal . x = offset across which region
    indicators, the cutoff gradient or the model data may jump.
    """
    d, L = domain.dimension, domain.L
    half = domain.half_sides
    planes = []
    eye = np.eye(d)
    for i in range(d):
        for value in (-half[i], 0.0, half[i]):
            planes.append((eye[i].copy(), float(value)))
    signs = [np.array(s, dtype=float) for s in np.ndindex(*(2,) * d)]
    signs = [1.0 - 2.0 * s for s in signs]
    if d == 2:
        a, b = half
        for s in signs:
            planes.append((np.array([(b - L) * s[0], (L - a) * s[1]]), L * (b - a)))
        alpha = alpha_star(domain)
        if alpha > 0:
            normal = np.array([alpha, L - a])
            offset = alpha * a + (L - a) * b
            planes.append((normal, offset))
            planes.append((normal.copy(), -offset))
    else:
        a, b, c = half
        seen = set()
        for s in signs:
            for normal, offset in (
                    (np.array([0.0, (L - c) * s[1], (b - L) * s[2]]), L * (b - c)),
                    (np.array([(c - L) * s[0], 0.0, (L - a) * s[2]]), L * (c - a)),
                    (np.array([(L - b) * s[0], (a - L) * s[1], 0.0]), L * (a - b))):
                key = tuple(np.round(normal, 14)) + (round(offset, 14),)
                if key not in seen:
                    seen.add(key)
                    planes.append((normal, offset))
    return planes


def _triangle_rule(p1, p2, p3, n):
    """Collapsed-coordinate Gauss-Legendre rule on a triangle."""
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    u, wu = mapped_gauss_legendre(n, 0.0, 1.0)
    v, wv = mapped_gauss_legendre(n, 0.0, 1.0)
    uu, vv = np.meshgrid(u, v, indexing='ij')
    nodes = p1 + uu[..., None] * (p2 - p1) + (uu * vv)[..., None] * (p3 - p2)
    area2 = abs(_cross2(p2 - p1, p3 - p2))
    weights = np.outer(wu, wv) * uu * area2
    return nodes.reshape(-1, 2), weights.ravel()


def _split_cell(cell, diagonal, n):
    corners = [np.array([x, y]) for x in cell[0] for y in cell[1]]
    p, q = (np.asarray(v, dtype=float) for v in diagonal)
    others = [c for c in corners if not (np.allclose(c, p) or np.allclose(c, q))]
    parts = [_triangle_rule(p, q, o, n) for o in others]
    return np.concatenate([x for x, _ in parts]), np.concatenate([w for _, w in parts])


def _axis_cuts(planes, d):
    """Offsets of the axis-aligned planes, per axis."""
    cuts = [set() for _ in range(d)]
    for normal, offset in planes:
        normal = np.asarray(normal, dtype=float)
        axis = int(np.argmax(np.abs(normal)))
        if np.count_nonzero(np.abs(normal) > 1e-12) == 1:
            cuts[axis].add(float(offset) / float(normal[axis]))
    return cuts


def _subdivide(box, cuts):
    breaks = [[lo, *sorted(c for c in axis_cuts if lo < c < hi), hi] for (lo, hi), axis_cuts in zip(box, cuts)]
    return partition_boxes(breaks)


def omega0_rule(domain, n, refine=()):
    """
    Composite Gauss-Legendre rule on the perforated domain.

    In 2d the corner cells are split along the cutoff interfaces and the two
    tangent triangles are integrated as triangles, so region indicators are
    resolved by the cell structure rather than by masking. Axis-aligned planes in
    ``refine`` further subdivide the rectangular cells.
    """
    L = domain.L
    half = domain.half_sides
    cuts = _axis_cuts(refine, domain.dimension)
    if domain.dimension == 3:
        breaks = [[-L, -h, h, L] for h in half]
        boxes = [cell for box in partition_boxes(breaks)
                 if not np.all(np.abs(box.mean(axis=1)) < half) for cell in _subdivide(box, cuts)]
        return composite_gauss_legendre(boxes, n, region='omega0')

    a, b = half
    alpha = alpha_star(domain)
    y_breaks = sorted({-L, -b, b, L} | ({-b + alpha, b - alpha} if 0 < alpha < b else set()))
    diagonals = {}
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            cell = ((min(sx * a, sx * L), max(sx * a, sx * L)), (min(sy * b, sy * L), max(sy * b, sy * L)))
            diagonals[cell] = ((sx * a, sy * b), (sx * L, sy * L))
    if 0 < alpha < b:
        diagonals[((a, L), (b - alpha, b))] = ((a, b), (L, b - alpha))
        diagonals[((-L, -a), (-b, -b + alpha))] = ((-a, -b), (-L, -b + alpha))
    nodes, weights = [], []
    for box in partition_boxes([[-L, -a, a, L], y_breaks]):
        if np.all(np.abs(box.mean(axis=1)) < half):
            continue
        key = tuple((float(lo), float(hi)) for lo, hi in box)
        if key in diagonals:
            x, w = _split_cell(box, diagonals[key], n)
        else:
            rule = composite_gauss_legendre(_subdivide(box, cuts), n)
            x, w = rule.nodes, rule.weights
        nodes.append(x)
        weights.append(w)
    return QuadratureRule('gauss-legendre', np.concatenate(nodes), np.concatenate(weights), 'omega0')


def q_rule(domain, n):
    """Composite Gauss-Legendre rule on Q with cells split at 0 and the inner half-sides."""
    L = domain.L
    breaks = [[-L, -h, 0.0, h, L] for h in domain.half_sides]
    return composite_gauss_legendre(partition_boxes(breaks), n, region='Q')
