"""
Upper bounds for the Bogovskii constant of the perforated domain, the split of a
zero-mean datum over the two star regions, and numerical evaluation of the
Bogovskii field on a star region.

The field is evaluated in its line-integral form around the evaluation point x:

    W(x) = sum_e w_e e sum_i C(p-2, i) M_i(omega, e) M_i(g, e)

with M_i(omega, e) = int rho^i omega(x + rho e) drho over the chord of the ball and
M_i(g, e) = int sigma^(d-1-i) g(x - sigma e) dsigma, where p is the exponent of t
in the kernel. Directions are restricted to the cone of rays that meet the ball.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np

from utils.errors import NotZeroMean, WrongDimension
from utils.fields import FieldExpr, ScalarField, zero_field
from utils.geometry import break_planes, omega0_rule, region_measures, star_regions
from utils.mollifier import Mollifier, OPERATOR_PUBLISHED, operator_coefficients
from utils.numerics import fd_divergence, gauss_legendre, make_grid, mapped_gauss_legendre
from utils.validator import make_issue

logger = logging.getLogger(__name__)

EXPONENTS = ('paper', 'dimensional')


def starshaped_bound(measure, diameter, r, d):
    """
    Published bound for the Bogovskii constant of a domain star-shaped with respect to a ball.

    Args:
        measure (float): Measure of the domain
        diameter (float): Its diameter
        r (float): Radius of the ball
        d (int): Dimension

    Returns:
        float: The bound
    """
    if not (measure > 0 and diameter > 0 and r > 0):
        raise ValueError('measure, diameter and radius must be positive')
    ratio = diameter / r
    if d == 2:
        s = np.sqrt(measure) / r
        bracket = 129.35 + 71.93 * s + 11.34 * s ** 2 + 2.0 * ratio ** 2 * (13.79 + 3.64 * s) ** 2
        return 2.0 * np.sqrt(bracket)
    if d == 3:
        s = np.sqrt(measure) / r ** 1.5
        bracket = 327.23 + 157.92 * s + 19.23 * s ** 2 + 3.0 * ratio ** 2 * (22.4 + 5.58 * s) ** 2
        return np.sqrt(6.0) * np.sqrt(bracket)
    raise WrongDimension(f'bound defined for d in (2, 3), got {d}')


def starshaped_bound_from_constants(measure, diameter, r, constants):
    """
    The same assembly with computed operator constants in place of the published ones.

    Args:
        constants (DuranConstants): Constants from ``mollifier.duran_constants``
    """
    d = constants.dimension
    coef = operator_coefficients(constants)
    s = np.sqrt(measure) / r ** (d / 2.0)
    first = 0.0
    for k in range(d):
        for j in range(d):
            key = 'diag' if k == j else 'off'
            first += (coef[f'T1_A_{key}'] + coef[f'T1_At_{key}'] * s) ** 2
    second = d * d * (coef['T2_B'] + coef['T2_Bt'] * s) ** 2
    return float(np.sqrt(2.0 * (first + (diameter / r) ** 2 * second)))


def jensen_factor(domain, measure_omega0=None, gamma=None):
    """sqrt(2 (1 + 2 |Omega0| / gamma)), the factor bounding alpha_g + beta_g by ||g||."""
    if measure_omega0 is None:
        measure_omega0 = domain.measure_omega0
    if gamma is None:
        _, gamma = region_measures(domain)
    return float(np.sqrt(2.0 * (1.0 + 2.0 * measure_omega0 / gamma)))


def closed_form_M(domain):
    L, a = domain.L, domain.a
    sigma, gamma = region_measures(domain)
    w = L - a
    if domain.dimension == 2:
        b = domain.b
        s = np.sqrt(sigma) / w
        factor = 2.0 * np.sqrt(2.0 * (1.0 + 8.0 * (L ** 2 - a * b) / gamma))
        bracket = (129.35 + 143.86 * s + 45.36 * s ** 2
                   + 64.0 * L ** 2 / w ** 2 * (13.79 + 7.28 * s) ** 2)
        return float(factor * np.sqrt(bracket))
    b, c = domain.b, domain.c
    s = np.sqrt(sigma) / w ** 1.5
    factor = np.sqrt(12.0 * (1.0 + 16.0 * (L ** 3 - a * b * c) / gamma))
    bracket = (327.23 + 445.17 * s + 153.85 * s ** 2
               + 144.0 * L ** 2 / w ** 2 * (22.4 + 15.79 * s) ** 2)
    return float(factor * np.sqrt(bracket))


@dataclass(frozen=True)
class BogovskiiBound:
    dimension: int
    sigma: float
    gamma: float
    r: float
    delta: float
    measure_omega0: float
    jensen: float
    starshaped: tuple
    starshaped_computed: float | None
    M: float
    M_composed: float

    @property
    def relative_gap(self):
        return abs(self.M - self.M_composed) / self.M

    def to_dict(self):
        data = {
            'dimension': self.dimension, 'sigma': self.sigma, 'gamma': self.gamma, 'r': self.r,
            'delta': self.delta, 'measure_omega0': self.measure_omega0, 'jensen_factor': self.jensen,
            'starshaped_bound': list(self.starshaped), 'M': self.M, 'M_composed': self.M_composed,
            'M_relative_gap': self.relative_gap,
        }
        if self.starshaped_computed is not None:
            data['starshaped_bound_computed_constants'] = self.starshaped_computed
            data['M_computed_constants'] = self.jensen * self.starshaped_computed
        return data


def bound_M(domain, constants=None):
    """
    Closed-form bound M of the Bogovskii constant of the perforated domain.

    Also composes it from the Jensen factor and the star-shaped bound of each region;
    the two agree to rounding in 2d and to the rounding of the published 3d
    coefficients (relative gap below 2e-3).

    Args:
        domain (Domain): Validated domain
        constants (DuranConstants, optional): Computed constants for the extra bound

    Returns:
        BogovskiiBound: Inputs, per-region bounds and M
    """
    d = domain.dimension
    sigma, gamma = region_measures(domain)
    first, second = star_regions(domain)
    per_region = tuple(starshaped_bound(reg.measure, reg.diameter, reg.radius, d) for reg in (first, second))
    jensen = jensen_factor(domain)
    computed = None
    if constants is not None:
        computed = starshaped_bound_from_constants(sigma, first.diameter, first.radius, constants)
    bound = BogovskiiBound(d, float(sigma), float(gamma), first.radius, first.diameter, domain.measure_omega0,
                           jensen, per_region, computed, closed_form_M(domain), jensen * max(per_region))
    logger.info('M = %.6g (composed %.6g, gap %.2e)', bound.M, bound.M_composed, bound.relative_gap)
    return bound


def operator_report(constants):
    """Computed operator coefficients next to the published ones."""
    coef = operator_coefficients(constants)
    published = OPERATOR_PUBLISHED[constants.dimension]
    return {name: {'computed': value, 'paper_bound': published[name], 'margin': 1.0 - value / published[name]}
            for name, value in coef.items()}


@dataclass(frozen=True)
class DatumSplit:
    """g = g1 + g2 with g1 supported in the first star region and g2 in the second."""

    g1: ScalarField
    g2: ScalarField
    alpha: float
    beta: float
    mean_omega1: float
    mean_overlap: float
    mean_omega2_only: float
    norm_g: float
    overlap_measure: float
    jensen: float

    @property
    def jensen_holds(self):
        return self.alpha + self.beta <= self.jensen * self.norm_g * (1.0 + 1e-12)

    def to_dict(self):
        return {
            'alpha_g': self.alpha, 'beta_g': self.beta, 'norm_g': self.norm_g,
            'mean_omega1': self.mean_omega1, 'mean_overlap': self.mean_overlap,
            'mean_omega2_only': self.mean_omega2_only, 'overlap_measure': self.overlap_measure,
            'jensen_factor': self.jensen, 'jensen_holds': self.jensen_holds,
        }


def split_datum(g, domain, rule=None, n=16, tol=1e-8):
    """
    Split a zero-mean datum over the two star regions.

    Args:
        g (ScalarField or callable): Datum on the perforated domain
        domain (Domain): Domain
        rule (QuadratureRule, optional): Rule on the perforated domain; ``omega0_rule(domain, n)`` by default
        tol (float): Relative tolerance of the zero-mean check

    Returns:
        DatumSplit: The two parts with their norms and means

    Raises:
        NotZeroMean: When |int g| > tol ||g|| sqrt|Omega0|
    """
    rule = rule or omega0_rule(domain, n)
    first, second = star_regions(domain)
    x, w = rule.nodes, rule.weights
    values = np.asarray(g(x), dtype=float)
    total = float(w @ values)
    norm = float(np.sqrt(w @ values ** 2))
    if abs(total) > tol * norm * np.sqrt(rule.measure):
        raise NotZeroMean(f'datum has mean {total:.3e} against norm {norm:.3e}')

    in1, in2 = first.contains(x), second.contains(x)
    both, only2 = in1 & in2, in2 & ~in1
    gamma = float(np.sum(w[both]))
    m1 = float(w[in1] @ values[in1])
    m_star = float(w[both] @ values[both])
    m2 = float(w[only2] @ values[only2])
    alpha2 = float(w[in1] @ values[in1] ** 2) - 2.0 * m1 * m_star / gamma + m1 ** 2 / gamma
    beta2 = float(w[only2] @ values[only2] ** 2) + m2 ** 2 / gamma

    def g1(p):
        inside = first.contains(p)
        overlap = inside & second.contains(p)
        return np.where(inside, g(p) - np.where(overlap, m1 / gamma, 0.0), 0.0)

    def g2(p):
        inside = second.contains(p)
        overlap = inside & first.contains(p)
        return np.where(inside, np.where(overlap, -m2 / gamma, g(p)), 0.0)

    breaks = tuple(getattr(g, 'breaks', ())) + tuple(break_planes(domain))
    refinements = tuple(getattr(g, 'refinements', ()))
    support = domain.bounds
    split = DatumSplit(
        ScalarField(g1, domain.dimension, 'g1', support, breaks, refinements),
        ScalarField(g2, domain.dimension, 'g2', support, breaks, refinements),
        float(np.sqrt(max(alpha2, 0.0))), float(np.sqrt(max(beta2, 0.0))),
        m1, m_star, m2, norm, gamma, jensen_factor(domain, rule.measure, gamma))
    logger.debug('split datum: alpha %.6g beta %.6g norm %.6g', split.alpha, split.beta, norm)
    return split


@dataclass(frozen=True)
class BogovskiiParams:
    """Node counts and switches of the field evaluation."""

    exponent: str = 'dimensional'
    angular_nodes: int = 12
    polar_nodes: int = 16
    azimuth_nodes: int = 24
    radial_nodes: int = 16
    sigma_nodes: int = 8
    split_directions: bool = True
    restrict_support: bool = True
    unrestricted_refine: int = 8
    workers: int = 1
    chunk_size: int = 64

    def power(self, d):
        """Exponent of t in the kernel."""
        if self.exponent == 'paper':
            return 3
        if self.exponent == 'dimensional':
            return d + 1
        raise ValueError(f'unknown exponent setting {self.exponent!r}; use one of {EXPONENTS}')


# irrational pole: no rational grid point lies on the frame's singular ray
_POLE = np.array([1.0, np.sqrt(2.0), np.sqrt(3.0)]) / np.sqrt(6.0)
_POLE_T1 = np.cross(_POLE, [0.0, 0.0, 1.0]) / np.linalg.norm(np.cross(_POLE, [0.0, 0.0, 1.0]))
_POLE_T2 = np.cross(_POLE, _POLE_T1)


def _orthonormal_frame(axis):
    """
    Tangent frame of ``axis`` obtained by the minimal rotation of a fixed pole frame.

    The frame varies smoothly with the axis away from the antipode of the pole, so
    the azimuthal nodes do not jump between neighbouring evaluation points.
    """
    c = float(axis @ _POLE)
    if c < -1.0 + 1e-10:
        return _POLE_T1.copy(), -_POLE_T2
    v = np.cross(_POLE, axis)

    def rotate(t):
        vt = np.cross(v, t)
        return t + vt + np.cross(v, vt) / (1.0 + c)

    t1 = rotate(_POLE_T1)
    t1 -= (t1 @ axis) * axis
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(axis, t1)


def _unique_planes(planes, seen):
    """Normalized planes, dropping repeats (n.x = c and -n.x = -c are the same plane)."""
    out = []
    for normal, offset in planes:
        size = float(np.linalg.norm(normal))
        if size == 0:
            continue
        normal = np.asarray(normal, dtype=float) / size
        offset = float(offset) / size
        pivot = normal[np.argmax(np.abs(normal) > 1e-12)]
        key = tuple(np.round(np.sign(pivot) * np.append(normal, offset), 12))
        if key not in seen:
            seen.add(key)
            out.append((normal, offset))
    return out


class BogovskiiIntegrator:
    """
    Bogovskii field of a scalar datum on one star region.

    The datum must carry a support box; its break planes split the line integrals
    and, in 2d, their pairwise intersections split the direction integral. Its
    refinement planes split the line integrals only, and in 2d the direction
    integral where they meet the support box.
    """

    def __init__(self, g, region, params=None, support=None):
        self.g = g
        self.region = region
        self.params = params or BogovskiiParams()
        self.dimension = d = region.dimension
        self.center = region.center_array
        self.radius = region.radius
        self.mollifier = Mollifier(d, region.radius, tuple(region.center))
        self.power = self.params.power(d)
        self.binomial = np.array([comb(self.power - 2, i) for i in range(self.power - 1)], dtype=float)
        box = support if support is not None else getattr(g, 'support', None)
        if box is None:
            raise ValueError('the datum needs a support box')
        self.support = np.asarray(box, dtype=float).reshape(d, 2)
        seen = set()
        breaks = _unique_planes(getattr(g, 'breaks', ()), seen)
        refinements = _unique_planes(getattr(g, 'refinements', ()), seen)
        self.normals = np.array([n for n, _ in breaks]).reshape(-1, d)
        self.offsets = np.array([c for _, c in breaks])
        self.refine_normals = np.array([n for n, _ in refinements]).reshape(-1, d)
        self.refine_offsets = np.array([c for _, c in refinements])
        self.cut_normals = np.vstack([self.normals, self.refine_normals])
        self.cut_offsets = np.concatenate([self.offsets, self.refine_offsets])
        self.vertices = self._vertices() if d == 2 else None

    def _vertices(self):
        box = self.support
        corners = [np.array([x, y]) for x in box[0] for y in box[1]]
        edges = [np.array([1.0, 0.0])] * 2 + [np.array([0.0, 1.0])] * 2
        edge_offsets = [box[0, 0], box[0, 1], box[1, 0], box[1, 1]]
        normals = list(self.normals) + edges
        offsets = list(self.offsets) + edge_offsets
        slack = 1e-12 * max(1.0, float(np.max(np.abs(box))))
        points = corners

        def meet(n1, c1, n2, c2):
            matrix = np.array([n1, n2])
            if abs(np.linalg.det(matrix)) < 1e-12:
                return
            v = np.linalg.solve(matrix, np.array([c1, c2]))
            if np.all(v >= box[:, 0] - slack) and np.all(v <= box[:, 1] + slack):
                points.append(v)

        for i in range(len(normals)):
            for j in range(i + 1, len(normals)):
                meet(normals[i], offsets[i], normals[j], offsets[j])
        # refinement planes only matter where the field is cut off
        for normal, offset in zip(self.refine_normals, self.refine_offsets):
            for edge, edge_offset in zip(edges, edge_offsets):
                meet(normal, offset, edge, edge_offset)
        return np.unique(np.round(np.array(points), 13), axis=0)

    def _directions_2d(self, x):
        p = self.params
        u = x - self.center
        dist = float(np.linalg.norm(u))
        toward = np.arctan2(-u[1], -u[0]) if dist > 0 else 0.0
        restricted = p.restrict_support and dist > self.radius
        half = np.arcsin(self.radius / dist) if restricted else np.pi
        edges = [toward + np.linspace(-half, half, (4 if restricted else 8) + 1)]
        if p.split_directions:
            angles = []
            offset = x - self.vertices
            far = np.linalg.norm(offset, axis=1) > 1e-13
            angles.append(np.arctan2(offset[far, 1], offset[far, 0]))
            if self.normals.size:
                tangent = np.column_stack([-self.normals[:, 1], self.normals[:, 0]])
                angles.append(np.arctan2(tangent[:, 1], tangent[:, 0]))
                angles.append(np.arctan2(-tangent[:, 1], -tangent[:, 0]))
            rel = np.angle(np.exp(1j * (np.concatenate(angles) - toward)))
            edges.append(toward + rel[np.abs(rel) < half])
        edges = np.unique(np.concatenate(edges))
        n = p.angular_nodes * (1 if p.restrict_support else p.unrestricted_refine)
        theta, weights = mapped_gauss_legendre(n, edges[:-1], edges[1:])
        theta, weights = theta.ravel(), weights.ravel()
        return np.column_stack([np.cos(theta), np.sin(theta)]), weights

    def _directions_3d(self, x):
        p = self.params
        u = x - self.center
        dist = float(np.linalg.norm(u))
        axis = -u / dist if dist > 0 else np.array([0.0, 0.0, 1.0])
        refine = 1 if p.restrict_support else p.unrestricted_refine
        if p.restrict_support and dist > self.radius:
            mu_lo, n_mu = np.sqrt(1.0 - (self.radius / dist) ** 2), p.polar_nodes
        else:
            mu_lo, n_mu = -1.0, 2 * p.polar_nodes
        mu, w_mu = gauss_legendre(n_mu * refine, mu_lo, 1.0)
        n_psi = p.azimuth_nodes * refine
        psi = 2.0 * np.pi * np.arange(n_psi) / n_psi
        t1, t2 = _orthonormal_frame(axis)
        mm, pp = np.meshgrid(mu, psi, indexing='ij')
        ss = np.sqrt(np.clip(1.0 - mm ** 2, 0.0, None))
        e = (mm[..., None] * axis + ss[..., None] * (np.cos(pp)[..., None] * t1 + np.sin(pp)[..., None] * t2))
        weights = np.outer(w_mu, np.full(n_psi, 2.0 * np.pi / n_psi))
        return e.reshape(-1, 3), weights.ravel()

    def _mollifier_moments(self, x, e):
        u = x - self.center
        if self.params.restrict_support:
            ue = e @ u
            disc = ue ** 2 - (u @ u - self.radius ** 2)
            root = np.sqrt(np.clip(disc, 0.0, None))
            lo = np.clip(-ue - root, 0.0, None)
            hi = np.where(disc > 0, np.clip(-ue + root, 0.0, None), lo)
        else:
            lo = np.zeros(e.shape[0])
            hi = np.full(e.shape[0], np.linalg.norm(u) + self.radius)
        n = self.params.radial_nodes * (1 if self.params.restrict_support else self.params.unrestricted_refine)
        rho, w = mapped_gauss_legendre(n, lo, hi)
        values = self.mollifier.eval((x + rho[..., None] * e[:, None, :]).reshape(-1, self.dimension))
        values = w * values.reshape(rho.shape)
        return np.stack([np.sum(values * rho ** i, axis=1) for i in range(self.power - 1)], axis=1)

    def _sigma_edges(self, x, e):
        box = self.support
        with np.errstate(divide='ignore', invalid='ignore'):
            t_hi = (x - box[:, 0]) / e
            t_lo = (x - box[:, 1]) / e
        flat = np.abs(e) < 1e-300
        inside = (x >= box[:, 0]) & (x <= box[:, 1])
        lo = np.where(flat, np.where(inside, -np.inf, np.inf), np.minimum(t_lo, t_hi))
        hi = np.where(flat, np.where(inside, np.inf, -np.inf), np.maximum(t_lo, t_hi))
        s_lo = np.maximum(0.0, np.max(lo, axis=1))
        s_hi = np.maximum(np.min(hi, axis=1), s_lo)
        if not self.cut_offsets.size:
            return np.column_stack([s_lo, s_hi])
        with np.errstate(divide='ignore', invalid='ignore'):
            cuts = (x @ self.cut_normals.T - self.cut_offsets) / (e @ self.cut_normals.T)
        cuts = np.where(np.isfinite(cuts), cuts, s_lo[:, None])
        cuts = np.clip(cuts, s_lo[:, None], s_hi[:, None])
        return np.sort(np.column_stack([s_lo, cuts, s_hi]), axis=1)

    def _datum_moments(self, x, e):
        d = self.dimension
        edges = self._sigma_edges(x, e)
        sigma, w = mapped_gauss_legendre(self.params.sigma_nodes, edges[:, :-1], edges[:, 1:])
        live = w > 0
        values = np.zeros(sigma.shape)
        if np.any(live):
            pts = x - sigma[..., None] * e[:, None, None, :]
            values[live] = self.g(pts[live])
        values *= w
        return np.stack([np.sum(values * sigma ** (d - 1 - i), axis=(1, 2)) for i in range(self.power - 1)],
                        axis=1)

    def point(self, x):
        x = np.asarray(x, dtype=float)
        if self.dimension == 2:
            e, w = self._directions_2d(x)
        else:
            e, w = self._directions_3d(x)
        omega = self._mollifier_moments(x, e)
        reach = np.any(omega != 0.0, axis=1)
        if not np.any(reach):
            return np.zeros(self.dimension)
        e, w, omega = e[reach], w[reach], omega[reach]
        datum = self._datum_moments(x, e)
        radial = np.sum(self.binomial * omega * datum, axis=1)
        return (w * radial) @ e

    def _chunk(self, points):
        return np.array([self.point(x) for x in points]).reshape(-1, self.dimension)

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        size = max(1, int(self.params.chunk_size))
        chunks = [pts[i:i + size] for i in range(0, pts.shape[0], size)]
        if not chunks:
            return np.zeros((0, self.dimension))
        if self.params.workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.params.workers) as pool:
                parts = list(pool.map(self._chunk, chunks))
        else:
            parts = [self._chunk(c) for c in chunks]
        return np.concatenate(parts, axis=0)


def bogovskii_field(g, region, points, params=None, support=None):
    """
    Evaluate the Bogovskii field of ``g`` on ``region`` at (n, d) points.

    Args:
        g (ScalarField): Datum with zero mean on the region and a support box
        region (StarRegion): Region with its ball
        points (array-like): Evaluation points, anywhere in space
        params (BogovskiiParams, optional): Node counts and switches

    Returns:
        ndarray: (n, d) field values
    """
    return BogovskiiIntegrator(g, region, params, support)(points)


def bogovskii_expr(g, region, params=None, name='W', fd_step=1e-5):
    return FieldExpr(name, region.dimension, BogovskiiIntegrator(g, region, params), None, region.name, fd_step)


def _bump(t):
    return np.where(np.abs(t) < 1.0, (1.0 - t ** 2) ** 4, 0.0)


def _bump_derivative(t):
    return np.where(np.abs(t) < 1.0, -8.0 * t * (1.0 - t ** 2) ** 3, 0.0)


def manufactured_datum(box, coefficients):
    """
    g = div(F) for F = coefficients * prod_k bump((x_k - m_k) / h_k), supported in ``box``.

    Returns:
        ScalarField: The datum, with the box faces as break planes
    """
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    mid = box.mean(axis=1)
    half = 0.5 * (box[:, 1] - box[:, 0])
    coefficients = np.asarray(coefficients, dtype=float)

    def fn(p):
        t = (p - mid) / half
        bumps = _bump(t)
        out = np.zeros(p.shape[0])
        for k in range(d):
            others = np.prod(np.delete(bumps, k, axis=1), axis=1)
            out += coefficients[k] * _bump_derivative(t[:, k]) / half[k] * others
        return out

    eye = np.eye(d)
    breaks = [(eye[k].copy(), float(v)) for k in range(d) for v in box[k]]
    return ScalarField(fn, d, 'manufactured', box, breaks)


@dataclass(frozen=True)
class ManufacturedResult:
    region: str
    exponent: str
    resolution: int
    error: float
    step: float

    def to_dict(self):
        return {'region': self.region, 'exponent': self.exponent, 'resolution': self.resolution,
                'relative_error': self.error, 'fd_step': self.step}


def manufactured_divergence_error(region, params=None, resolution=33, seed=0, step=None, shrink=0.15):
    """
    Relative L2 error between the finite-difference divergence of W and g for a
    manufactured g = div(F), F compactly supported inside the region's slab.

    The evaluation grid is cell-centred on the slab.
    """
    params = params or BogovskiiParams()
    d = region.dimension
    slab = np.asarray(region.slab, dtype=float)
    width = slab[:, 1] - slab[:, 0]
    box = np.column_stack([slab[:, 0] + shrink * width, slab[:, 1] - shrink * width])
    coefficients = np.random.default_rng(seed).normal(size=d)
    g = manufactured_datum(box, coefficients)
    W = BogovskiiIntegrator(g, region, params)
    grid = make_grid(slab, resolution, cell_centered=True)
    step = step or 1e-4 * float(np.max(np.abs(slab)))
    divergence = fd_divergence(W, grid.nodes, step)
    target = g(grid.nodes)
    error = float(np.linalg.norm(divergence - target) / np.linalg.norm(target))
    logger.info('manufactured divergence on %s (%s exponent): relative error %.3e',
                region.name, params.exponent, error)
    return ManufacturedResult(region.name, params.exponent, int(resolution), error, step)


def select_exponent(domain, params=None, resolution=17, seed=0):
    """
    Run the manufactured-divergence check with both kernel exponents on the first
    star region and keep the one with the smaller error (the dimensional one on ties).

    Returns:
        dict: Errors per setting and the selected setting
    """
    params = params or BogovskiiParams()
    region, _ = star_regions(domain)
    coincide = domain.dimension == 2
    errors = {}
    for exponent in ('dimensional', 'paper'):
        if coincide and errors:
            # both settings give the same kernel in 2d
            errors[exponent] = errors['dimensional']
            continue
        trial = replace(params, exponent=exponent)
        errors[exponent] = manufactured_divergence_error(region, trial, resolution, seed).error
    selected = min(errors, key=lambda k: (errors[k], k != 'dimensional'))
    logger.info('kernel exponent errors %s, selected %s', errors, selected)
    return {'errors': errors, 'selected': selected, 'resolution': resolution, 'coincide': coincide}


@dataclass
class A3Result:
    field: FieldExpr
    split: DatumSplit | None
    g_norm: float
    removed_mean: float
    issues: list = field(default_factory=list)

    def to_dict(self):
        data = {'g_norm': self.g_norm, 'removed_mean': self.removed_mean, 'issues': self.issues}
        if self.split is not None:
            data['split'] = self.split.to_dict()
        return data


def field_A3(A2, domain, params=None, n=16, mean_tol=1e-6, extra_breaks=(), refinements=(), rule_refine=()):
    """
    Correction field with divergence -div A2 on the perforated domain.

    The datum g = -div A2 is integrated with the perforated-domain rule, its
    residual mean (flux quadrature error) is removed and reported, and the
    Bogovskii fields of both parts of its split are added.

    Args:
        A2 (FieldExpr): Localized extension
        domain (Domain): Domain
        params (BogovskiiParams, optional): Field evaluation settings
        n (int): Gauss-Legendre nodes per cell of the perforated-domain rule
        mean_tol (float): Relative size of the removed mean above which a warning is issued
        extra_breaks (sequence): Planes where the datum may jump besides the domain ones
        refinements (sequence): Planes that only subdivide the line integrals
        rule_refine (sequence): Axis-aligned planes subdividing the perforated-domain rule

    Returns:
        A3Result: The field and the split diagnostics
    """
    params = params or BogovskiiParams()
    d = domain.dimension
    rule = omega0_rule(domain, n, rule_refine)

    def raw(p):
        return np.where(domain.in_omega0(p), -A2.divergence(p), 0.0)

    values = raw(rule.nodes)
    mean = float(rule.weights @ values)
    g_norm = float(np.sqrt(rule.weights @ values ** 2))
    issues = []
    if g_norm == 0.0:
        return A3Result(zero_field(d, 'A3', 'omega0'), None, 0.0, 0.0, issues)

    shift = mean / rule.measure
    relative = abs(mean) / (g_norm * np.sqrt(rule.measure))
    if relative > mean_tol:
        issues.append(make_issue('divergence_mean', f'removed mean {mean:.3e} from -div A2 '
                                 f'({relative:.2e} relative)', 'warning', value=relative, limit=mean_tol))

    def centred(p):
        return np.where(domain.in_omega0(p), -A2.divergence(p) - shift, 0.0)

    breaks = tuple(break_planes(domain)) + tuple(extra_breaks)
    g = ScalarField(centred, d, 'g', domain.bounds, breaks, refinements)
    split = split_datum(g, domain, rule=rule, tol=1e-9)
    first, second = star_regions(domain)
    W1 = BogovskiiIntegrator(split.g1, first, params)
    W2 = BogovskiiIntegrator(split.g2, second, params)
    A3 = FieldExpr('A3', d, lambda p: W1(p) + W2(p), None, 'omega0', 1e-4 * domain.L)
    logger.info('A3 built: ||g|| %.6g, removed mean %.3e', g_norm, mean)
    return A3Result(A3, split, g_norm, mean, issues)
