"""
Per-face boundary data on the outer box, their admissibility checks, the
convex-combination extension A1 and the shipped inflow-outflow models.

Faces are numbered 1: x=L, 2: y=L, 3: x=-L, 4: y=-L and, in 3d, 5: z=L, 6: z=-L.
Face coordinates are the tangential coordinates in increasing axis order.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from utils.errors import DataParseError, ValidationFailed, WrongDimension
from utils.fields import FieldExpr
from utils.numerics import mapped_gauss_legendre
from utils.validator import check, make_issue, status_from_issues

logger = logging.getLogger(__name__)

FACE_AXES = {
    2: {1: (0, 1.0), 2: (1, 1.0), 3: (0, -1.0), 4: (1, -1.0)},
    3: {1: (0, 1.0), 2: (1, 1.0), 3: (0, -1.0), 4: (1, -1.0), 5: (2, 1.0), 6: (2, -1.0)},
}

ANALYTIC_TOL = 1e-8
GRID_TOL = 1e-4


def tangential_axes(dimension, face):
    normal, _ = FACE_AXES[dimension][face]
    return tuple(i for i in range(dimension) if i != normal)


class FaceDatum:
    """
    Vector datum on one face, as a callable of the face coordinates.

    Args:
        fn (callable): (n, d-1) face coordinates -> (n, d) vectors
        dimension (int): Space dimension d
        jacobian (callable, optional): (n, d-1) -> (n, d, d-1) derivatives
        jumps (tuple): (local axis, value) pairs where the datum may jump
    """

    is_grid = False

    def __init__(self, fn, dimension, jacobian=None, jumps=()):
        self._fn = fn
        self.dimension = dimension
        self._jacobian = jacobian
        self.jumps = tuple((int(m), float(v)) for m, v in jumps)

    def __call__(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return np.asarray(self._fn(coords), dtype=float).reshape(coords.shape[0], self.dimension)

    @property
    def has_jacobian(self):
        return self._jacobian is not None

    def jacobian(self, coords, step):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        n, m = coords.shape
        if self._jacobian is not None:
            return np.asarray(self._jacobian(coords), dtype=float).reshape(n, self.dimension, m)
        jac = np.empty((n, self.dimension, m))
        for k in range(m):
            offset = np.zeros(m)
            offset[k] = step
            jac[:, :, k] = (self(coords + offset) - self(coords - offset)) / (2.0 * step)
        return jac

    def scaled(self, factor):
        jac = None if self._jacobian is None else (lambda c: factor * self._jacobian(c))
        return FaceDatum(lambda c: factor * self._fn(c), self.dimension, jac, self.jumps)

    def plus(self, other):
        jac = None
        if self.has_jacobian and other.has_jacobian:
            jac = lambda c: self._jacobian(c) + other._jacobian(c)  # noqa: E731
        return FaceDatum(lambda c: self(c) + other(c), self.dimension, jac, self.jumps + other.jumps)


def _trapezoid_weights(x):
    w = np.zeros_like(x)
    w[1:] += 0.5 * np.diff(x)
    w[:-1] += 0.5 * np.diff(x)
    return w


class GridFace(FaceDatum):
    """Face datum sampled on a tensor grid, evaluated by multilinear interpolation."""

    is_grid = True

    def __init__(self, axes, values):
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        self.values = np.asarray(values, dtype=float)
        dimension = self.values.shape[-1]
        interpolator = RegularGridInterpolator(self.axes, self.values, method='linear',
                                               bounds_error=False, fill_value=None)
        super().__init__(interpolator, dimension)

    def nodes_and_weights(self):
        mesh = np.meshgrid(*self.axes, indexing='ij')
        weights = np.meshgrid(*[_trapezoid_weights(a) for a in self.axes], indexing='ij')
        return (np.stack([m.ravel() for m in mesh], axis=1),
                np.prod(np.stack([w.ravel() for w in weights], axis=1), axis=1),
                self.values.reshape(-1, self.dimension))


@dataclass(frozen=True)
class BoundaryDatum:
    """Face data on every face of the outer box, keyed by face number."""

    dimension: int
    L: float
    faces: dict
    name: str = 'datum'
    params: dict = field(default_factory=dict)
    notes: tuple = ()
    regularizer: object = field(default=None, compare=False, repr=False)

    @property
    def is_grid(self):
        return any(face.is_grid for face in self.faces.values())

    def face_index(self, points):
        """Face number of each boundary point (nearest face when on an edge)."""
        pts = np.atleast_2d(points)
        axis = np.argmax(np.abs(pts), axis=1)
        positive = pts[np.arange(pts.shape[0]), axis] > 0
        lookup = {(k, s > 0): i for i, (k, s) in FACE_AXES[self.dimension].items()}
        return np.array([lookup[(int(k), bool(p))] for k, p in zip(axis, positive)], dtype=int)

    def evaluate(self, points):
        """Datum at points of the boundary of the outer box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros_like(pts)
        index = self.face_index(pts)
        for face, datum in self.faces.items():
            sel = index == face
            if np.any(sel):
                out[sel] = datum(pts[sel][:, tangential_axes(self.dimension, face)])
        return out

    def break_planes(self):
        """Hyperplanes carried by declared face jumps (the extension inherits them)."""
        planes = []
        for face, datum in self.faces.items():
            tangential = tangential_axes(self.dimension, face)
            for local, value in datum.jumps:
                normal = np.zeros(self.dimension)
                normal[tangential[local]] = 1.0
                planes.append((normal, value))
        return planes

    def regularized(self, pieces):
        """
        The datum with its oscillating wake damped near the singular line, or None
        when the datum has no wake.

        Args:
            pieces (int): Half-waves of the wake kept undamped

        Returns:
            WakeRegularization or None
        """
        return None if self.regularizer is None else self.regularizer(int(pieces))

    def scaled(self, factor):
        regularizer = None
        if self.regularizer is not None:
            regularizer = lambda pieces: self.regularizer(pieces).mapped(lambda h: h.scaled(factor))  # noqa: E731
        return BoundaryDatum(self.dimension, self.L, {i: f.scaled(factor) for i, f in self.faces.items()},
                             f'{factor}*{self.name}', dict(self.params), self.notes, regularizer)

    def plus(self, other):
        faces = {i: f.plus(other.faces[i]) for i, f in self.faces.items()}
        regularizer = None
        if self.regularizer is not None and other.regularizer is None:
            regularizer = lambda pieces: self.regularizer(pieces).mapped(lambda h: h.plus(other))  # noqa: E731
        elif other.regularizer is not None and self.regularizer is None:
            regularizer = lambda pieces: other.regularizer(pieces).mapped(self.plus)  # noqa: E731
        return BoundaryDatum(self.dimension, self.L, faces, f'{self.name}+{other.name}', {},
                             self.notes + other.notes, regularizer)


@dataclass(frozen=True)
class WakeRegularization:
    """
    A datum whose wake is damped to zero for |x_axis| <= delta, with the planes
    between consecutive half-waves of the wake.

    ``planes`` split line integrals; ``rule_planes`` (every full wave) subdivide
    area rules.
    """

    datum: BoundaryDatum
    axis: int
    delta: float
    planes: tuple
    rule_planes: tuple

    def mapped(self, transform):
        return WakeRegularization(transform(self.datum), self.axis, self.delta, self.planes, self.rule_planes)

    def distance(self, points):
        """Distance to the singular line."""
        return np.abs(np.atleast_2d(points)[:, self.axis])

    def to_dict(self):
        return {'axis': self.axis, 'delta': self.delta, 'half_waves': len(self.planes) // 2}


@dataclass
class ValidationReport:
    """Admissibility measurements of a boundary datum."""

    edge_mismatch: float
    total_flux: float
    vertex_max: float | None
    tol: float
    face_jumps: dict = field(default_factory=dict)
    issues: list = field(default_factory=list)

    @property
    def status(self):
        return status_from_issues(self.issues)

    @property
    def passed(self):
        return self.status != 'Failed'

    def to_dict(self):
        return {
            'edge_mismatch': self.edge_mismatch,
            'total_flux': self.total_flux,
            'vertex_max': self.vertex_max,
            'tol': self.tol,
            'face_jumps': dict(self.face_jumps),
            'issues': list(self.issues),
            'status': self.status,
        }


def _embed(dimension, face, coords, L):
    normal, sign = FACE_AXES[dimension][face]
    pts = np.zeros((coords.shape[0], dimension))
    pts[:, normal] = sign * L
    pts[:, list(tangential_axes(dimension, face))] = coords
    return pts


def _near_jump(datum, coords, eps):
    near = np.zeros(coords.shape[0], dtype=bool)
    for local, value in datum.jumps:
        near |= np.abs(coords[:, local] - value) < eps
    return near


def _edge_mismatch(h, samples):
    d, L = h.dimension, h.L
    worst = 0.0
    eps = 1e-9 * L
    for i, (ki, si) in FACE_AXES[d].items():
        for j, (kj, sj) in FACE_AXES[d].items():
            if j <= i or ki == kj:
                continue
            free = [m for m in range(d) if m not in (ki, kj)]
            t = np.linspace(-L, L, samples) if free else np.zeros(1)
            pts = np.zeros((t.shape[0], d))
            pts[:, ki], pts[:, kj] = si * L, sj * L
            if free:
                pts[:, free[0]] = t
            ci = pts[:, tangential_axes(d, i)]
            cj = pts[:, tangential_axes(d, j)]
            keep = ~(_near_jump(h.faces[i], ci, eps) | _near_jump(h.faces[j], cj, eps))
            if np.any(keep):
                diff = h.faces[i](ci[keep]) - h.faces[j](cj[keep])
                worst = max(worst, float(np.max(np.linalg.norm(diff, axis=1))))
    return worst


def _face_rule(datum, L, m, n):
    """Composite Gauss-Legendre rule on a face, split at declared jumps."""
    axes = []
    for local in range(m):
        cuts = sorted({-L, L} | {v for k, v in datum.jumps if k == local and -L < v < L})
        nodes, weights = mapped_gauss_legendre(n, np.array(cuts[:-1]), np.array(cuts[1:]))
        axes.append((nodes.ravel(), weights.ravel()))
    mesh = np.meshgrid(*[x for x, _ in axes], indexing='ij')
    wmesh = np.meshgrid(*[w for _, w in axes], indexing='ij')
    return (np.stack([g.ravel() for g in mesh], axis=1),
            np.prod(np.stack([g.ravel() for g in wmesh], axis=1), axis=1))


def _total_flux(h, n):
    d, L = h.dimension, h.L
    total = 0.0
    for face, (normal, sign) in FACE_AXES[d].items():
        datum = h.faces[face]
        if datum.is_grid:
            coords, weights, values = datum.nodes_and_weights()
        else:
            coords, weights = _face_rule(datum, L, d - 1, n)
            values = datum(coords)
        total += sign * float(weights @ values[:, normal])
    return total


def _vertex_max(h):
    d, L = h.dimension, h.L
    worst = 0.0
    for face in FACE_AXES[d]:
        corners = np.array(np.meshgrid(*[[-L, L]] * (d - 1), indexing='ij')).reshape(d - 1, -1).T
        worst = max(worst, float(np.max(np.linalg.norm(h.faces[face](corners), axis=1))))
    return worst


def _face_jumps(h, samples):
    d, L = h.dimension, h.L
    eps = 1e-9 * L
    jumps = {}
    for face, datum in h.faces.items():
        for local, value in datum.jumps:
            others = np.linspace(-L, L, samples)[:, None] if d == 3 else np.zeros((1, 0))
            coords = np.zeros((others.shape[0], d - 1))
            if d == 3:
                coords[:, 1 - local] = others[:, 0]
            below, above = coords.copy(), coords.copy()
            below[:, local] = value - eps
            above[:, local] = value + eps
            size = float(np.max(np.linalg.norm(datum(below) - datum(above), axis=1)))
            jumps[f'face{face}@{value:+.6g}'] = size
    return jumps


def validate(h, domain, tol=None, samples=64, flux_nodes=64):
    """
    Check edge continuity, zero total flux and (3d) vertex vanishing.

    Args:
        h (BoundaryDatum): Datum to check
        domain (Domain): Domain whose outer box carries the datum
        tol (float, optional): Pass threshold; 1e-8 for analytic data, 1e-4 for grid data
        samples (int): Sample points per edge
        flux_nodes (int): Gauss-Legendre nodes per face axis and piece

    Returns:
        ValidationReport: Measurements and issues; never raises
    """
    if h.dimension != domain.dimension:
        raise WrongDimension(f'datum is {h.dimension}d, domain is {domain.dimension}d')
    if tol is None:
        tol = GRID_TOL if h.is_grid else ANALYTIC_TOL
    edge = _edge_mismatch(h, samples)
    flux = _total_flux(h, flux_nodes)
    vertex = _vertex_max(h) if h.dimension == 3 else None
    jumps = _face_jumps(h, samples)

    issues = []
    issues += check(edge, tol, 'edge_continuity', f'face data differ by {edge:.3e} on shared edges')
    issues += check(abs(flux), tol, 'zero_flux', f'total boundary flux is {flux:.3e}')
    if vertex is not None:
        issues += check(vertex, tol, 'vertex_vanishing', f'datum reaches {vertex:.3e} at a vertex')
    for name, size in jumps.items():
        if size > tol:
            issues.append(make_issue('face_jump', f'datum jumps by {size:.6g} at {name}', 'warning', value=size))
    for note in h.notes:
        issues.append(make_issue('regularity', note, 'warning'))
    report = ValidationReport(edge, flux, vertex, tol, jumps, issues)
    logger.info('validated %s: edge %.2e, flux %.2e, status %s', h.name, edge, flux, report.status)
    return report


def face_h1_norms(h, n=32):
    """
    H1 norm of each face datum, by composite Gauss-Legendre split at declared jumps.

    Derivatives are analytic where supplied and central differences (step 1e-5 L)
    otherwise. For data whose derivative is not square integrable the values
    depend on the rule.
    """
    d, L = h.dimension, h.L
    norms = {}
    for face, datum in h.faces.items():
        coords, weights = _face_rule(datum, L, d - 1, n)
        values = datum(coords)
        jac = datum.jacobian(coords, 1e-5 * L)
        density = np.sum(values ** 2, axis=1) + np.sum(jac ** 2, axis=(1, 2))
        norms[face] = float(np.sqrt(weights @ density))
    return norms


def _extension_terms(dimension):
    """
    Terms of the convex-combination extension: (sign, factors, face, args).

    A factor (axis, s) is (L + s x_axis) / (2L); an argument is an axis index or
    the constant '+L' / '-L'.
    """
    X, Y, Z = 0, 1, 2
    terms = [
        (1.0, [(X, 1.0)], 1, None),
        (1.0, [(X, -1.0)], 3, None),
    ]
    for face, ys in ((2, 1.0), (4, -1.0)):
        terms += [
            (1.0, [(Y, ys)], face, None),
            (-1.0, [(Y, ys), (X, 1.0)], face, {X: '+L'}),
            (-1.0, [(Y, ys), (X, -1.0)], face, {X: '-L'}),
        ]
    if dimension == 3:
        for face, zs in ((5, 1.0), (6, -1.0)):
            terms += [
                (1.0, [(Z, zs)], face, None),
                (-1.0, [(Z, zs), (X, 1.0)], face, {X: '+L'}),
                (-1.0, [(Z, zs), (X, -1.0)], face, {X: '-L'}),
                (-1.0, [(Z, zs), (Y, 1.0)], face, {Y: '+L'}),
                (-1.0, [(Z, zs), (Y, -1.0)], face, {Y: '-L'}),
            ]
    return terms


def _apply_terms(h, points, with_jacobian):
    d, L = h.dimension, h.L
    n = points.shape[0]
    value = np.zeros((n, d))
    jac = np.zeros((n, d, d)) if with_jacobian else None
    for sign, factors, face, frozen in _extension_terms(d):
        tangential = tangential_axes(d, face)
        frozen = frozen or {}
        coords = np.empty((n, d - 1))
        for m, axis in enumerate(tangential):
            if axis in frozen:
                coords[:, m] = L if frozen[axis] == '+L' else -L
            else:
                coords[:, m] = points[:, axis]
        datum = h.faces[face]
        hv = datum(coords)
        weights = [(L + s * points[:, axis]) / (2.0 * L) for axis, s in factors]
        w = sign * np.prod(weights, axis=0)
        value += w[:, None] * hv
        if with_jacobian:
            for k, (axis, s) in enumerate(factors):
                others = np.prod([weights[i] for i in range(len(factors)) if i != k], axis=0) \
                    if len(factors) > 1 else np.ones(n)
                jac[:, :, axis] += (sign * s / (2.0 * L) * others)[:, None] * hv
            free = [(m, axis) for m, axis in enumerate(tangential) if axis not in frozen]
            if free:
                face_jac = datum.jacobian(coords, 1e-5 * L)
                for m, axis in free:
                    jac[:, :, axis] += w[:, None] * face_jac[:, :, m]
    return value, jac


def extend_A1(h, domain, strict=True, tol=None):
    """
    Convex-combination extension of the face data to the closed outer box.

    Args:
        h (BoundaryDatum): Admissible datum
        domain (Domain): Domain of the datum
        strict (bool): Raise when validation fails; ``False`` builds the field anyway
        tol (float, optional): Validation threshold

    Returns:
        FieldExpr: A1 with its analytic Jacobian (face derivatives by central
        differences where the datum supplies none)

    Raises:
        ValidationFailed: When ``strict`` and the datum is not admissible
    """
    report = validate(h, domain, tol)
    if not report.passed:
        if strict:
            raise ValidationFailed(f'boundary datum {h.name} is not admissible', report)
        logger.warning('building A1 for non-admissible datum %s', h.name)

    def fn(points):
        return _apply_terms(h, points, False)[0]

    def jacobian(points):
        return _apply_terms(h, points, True)[1]

    return FieldExpr('A1', h.dimension, fn, jacobian, region='Q')


def evaluate_A1(h, points):
    """A1 and its Jacobian in one pass, without validation."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return _apply_terms(h, pts, True)


def _constant_face(dimension, vector):
    vector = np.asarray(vector, dtype=float)
    return FaceDatum(lambda c: np.tile(vector, (c.shape[0], 1)), dimension,
                     lambda c: np.zeros((c.shape[0], dimension, dimension - 1)))


def constant_datum(dimension, L, vector, name='constant'):
    """The same constant vector on every face."""
    faces = {i: _constant_face(dimension, vector) for i in FACE_AXES[dimension]}
    return BoundaryDatum(dimension, float(L), faces, name, {'vector': list(map(float, vector))})


def zero_datum(dimension, L):
    return constant_datum(dimension, L, np.zeros(dimension), name='zero')


def datum_from_field(fn, jacobian, dimension, L, name='trace', params=None):
    """
    Trace of a vector field defined on the closed box.

    Args:
        fn (callable): (n, d) points -> (n, d) values
        jacobian (callable): (n, d) points -> (n, d, d) derivatives
    """
    faces = {}
    for face in FACE_AXES[dimension]:
        tangential = list(tangential_axes(dimension, face))

        def face_fn(c, face=face):
            return fn(_embed(dimension, face, c, L))

        def face_jac(c, face=face, tangential=tangential):
            return jacobian(_embed(dimension, face, c, L))[:, :, tangential]

        faces[face] = FaceDatum(face_fn, dimension, face_jac)
    return BoundaryDatum(dimension, float(L), faces, name, dict(params or {}))


def turbulent_profile(y, b, alpha, tau):
    """tau |y|^alpha sin(pi b / sqrt|y|) for 0 < |y| < b and 0 elsewhere."""
    y = np.asarray(y, dtype=float)
    u = np.abs(y)
    inside = (u > 0) & (u < b)
    safe = np.where(inside, u, 1.0)
    return np.where(inside, tau * safe ** alpha * np.sin(np.pi * b / np.sqrt(safe)), 0.0)


def turbulent_profile_derivative(y, b, alpha, tau):
    """Derivative of the turbulent profile, set to 0 at y = 0 and outside |y| < b."""
    y = np.asarray(y, dtype=float)
    u = np.abs(y)
    inside = (u > 0) & (u < b)
    safe = np.where(inside, u, 1.0)
    phase = np.pi * b / np.sqrt(safe)
    du = tau * (alpha * safe ** (alpha - 1.0) * np.sin(phase)
                - 0.5 * np.pi * b * safe ** (alpha - 1.5) * np.cos(phase))
    return np.where(inside, np.sign(y) * du, 0.0)


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2), 30.0 * t ** 2 * (1.0 - t) ** 2


def damped_turbulent_profile(y, b, alpha, tau, delta):
    """
    The turbulent profile multiplied by a C2 step that is 0 for |y| <= delta and
    1 for |y| >= 2 delta, with its derivative.

    Returns:
        tuple: (values, derivatives)
    """
    y = np.asarray(y, dtype=float)
    step, dstep = _smoothstep((np.abs(y) - delta) / delta)
    value = turbulent_profile(y, b, alpha, tau)
    slope = turbulent_profile_derivative(y, b, alpha, tau)
    return value * step, slope * step + value * dstep * np.sign(y) / delta


def _wake_levels(b, pieces, stride=1):
    delta = (b / pieces) ** 2
    levels = {b ** 2 / k ** 2 for k in range(1, pieces + 1, stride)} | {delta, 2.0 * delta}
    return delta, sorted(v for v in levels if v < b)


def model_turbulent2d(L, b, lam, alpha, tau):
    """
    Couette inflow with an oscillating wake on the outflow face.

    Args:
        L (float): Half-side of the outer box
        b (float): Half-height of the wake, b < L
        lam (float): Shear rate of the Couette profile
        alpha (float): Decay exponent of the wake amplitude
        tau (float): Wake intensity

    Returns:
        BoundaryDatum: The 2d model
    """
    if not (lam > 0 and tau > 0 and alpha > 0 and 0 < b < L):
        raise ValueError('need lam, tau, alpha > 0 and 0 < b < L')
    L, b = float(L), float(b)

    def outflow(c):
        y = c[:, 0]
        return np.column_stack([lam * (y + L), turbulent_profile(y, b, alpha, tau)])

    def outflow_jac(c):
        y = c[:, 0]
        return np.stack([np.full_like(y, lam), turbulent_profile_derivative(y, b, alpha, tau)], axis=1)[:, :, None]

    def inflow(c):
        y = c[:, 0]
        return np.column_stack([lam * (y + L), np.zeros_like(y)])

    def inflow_jac(c):
        y = c[:, 0]
        return np.stack([np.full_like(y, lam), np.zeros_like(y)], axis=1)[:, :, None]

    faces = {
        1: FaceDatum(outflow, 2, outflow_jac, jumps=((0, -b), (0, b))),
        2: _constant_face(2, (2.0 * lam * L, 0.0)),
        3: FaceDatum(inflow, 2, inflow_jac),
        4: _constant_face(2, (0.0, 0.0)),
    }
    notes = ()
    if alpha <= 1.0:
        notes = ('outflow wake derivative is not square integrable near y = 0 for alpha <= 1; '
                 'H1 quantities of the datum depend on the quadrature',)
    params = {'L': L, 'b': b, 'lam': float(lam), 'alpha': float(alpha), 'tau': float(tau)}

    def regularize(pieces):
        if pieces < 1:
            raise ValueError('the wake needs at least one undamped half-wave')
        delta, levels = _wake_levels(b, pieces)
        _, rule_levels = _wake_levels(b, pieces, stride=2)

        def damped(c):
            return np.column_stack([lam * (c[:, 0] + L), damped_turbulent_profile(c[:, 0], b, alpha, tau, delta)[0]])

        def damped_jac(c):
            y = c[:, 0]
            slope = damped_turbulent_profile(y, b, alpha, tau, delta)[1]
            return np.stack([np.full_like(y, lam), slope], axis=1)[:, :, None]

        damped_faces = dict(faces)
        damped_faces[1] = FaceDatum(damped, 2, damped_jac, jumps=((0, -b), (0, b)))
        datum = BoundaryDatum(2, L, damped_faces, 'turbulent2d-damped', {**params, 'delta': delta}, notes)
        normal = np.array([0.0, 1.0])
        planes = tuple((normal, s * v) for v in levels for s in (1.0, -1.0))
        rule_planes = tuple((normal, s * v) for v in rule_levels for s in (1.0, -1.0))
        return WakeRegularization(datum, 1, delta, planes, rule_planes)

    return BoundaryDatum(2, L, faces, 'turbulent2d', params, notes, regularize)


LAMINAR_VARIANTS = ('verbatim', 'edge_vanishing')


def model_laminar3d(L, variant='edge_vanishing'):
    """
    Poiseuille-type inflow and a recentring outflow; walls carry zero velocity.

    ``verbatim`` uses the inflow profile 2L^2 - y^2 - z^2, which does not vanish on
    the wall edges; ``edge_vanishing`` replaces it by 2(L^2 - y^2)(L^2 - z^2)/L^2,
    which keeps the centre value 2L^2 and is continuous across every edge.
    """
    if not L > 0:
        raise ValueError('need L > 0')
    if variant not in LAMINAR_VARIANTS:
        raise ValueError(f'unknown laminar3d variant {variant!r}')
    L = float(L)
    L2, L4 = L ** 2, L ** 4

    if variant == 'verbatim':
        def profile(y, z):
            return 2 * L2 - y ** 2 - z ** 2

        def profile_grad(y, z):
            return -2 * y, -2 * z
    else:
        def profile(y, z):
            return 2 * (L2 - y ** 2) * (L2 - z ** 2) / L2

        def profile_grad(y, z):
            return -4 * y * (L2 - z ** 2) / L2, -4 * z * (L2 - y ** 2) / L2

    def outflow(c):
        y, z = c[:, 0], c[:, 1]
        wall = (y ** 2 - L2) * (z ** 2 - L2) / L4
        return np.column_stack([profile(y, z), y * wall, z * wall])

    def outflow_jac(c):
        y, z = c[:, 0], c[:, 1]
        py, pz = profile_grad(y, z)
        jac = np.empty((c.shape[0], 3, 2))
        jac[:, 0, 0], jac[:, 0, 1] = py, pz
        jac[:, 1, 0] = (3 * y ** 2 - L2) * (z ** 2 - L2) / L4
        jac[:, 1, 1] = 2 * y * z * (y ** 2 - L2) / L4
        jac[:, 2, 0] = 2 * y * z * (z ** 2 - L2) / L4
        jac[:, 2, 1] = (y ** 2 - L2) * (3 * z ** 2 - L2) / L4
        return jac

    def inflow(c):
        y, z = c[:, 0], c[:, 1]
        zero = np.zeros_like(y)
        return np.column_stack([profile(y, z), zero, zero])

    def inflow_jac(c):
        y, z = c[:, 0], c[:, 1]
        py, pz = profile_grad(y, z)
        jac = np.zeros((c.shape[0], 3, 2))
        jac[:, 0, 0], jac[:, 0, 1] = py, pz
        return jac

    faces = {i: _constant_face(3, (0.0, 0.0, 0.0)) for i in (2, 4, 5, 6)}
    faces[1] = FaceDatum(outflow, 3, outflow_jac)
    faces[3] = FaceDatum(inflow, 3, inflow_jac)
    return BoundaryDatum(3, L, faces, 'laminar3d', {'L': L, 'variant': variant})


def model_solenoidal2d(L, scale=1.0):
    """Trace of the divergence-free field scale * (y, x)."""
    def fn(p):
        return scale * p[:, ::-1]

    def jac(p):
        return np.tile(scale * np.array([[0.0, 1.0], [1.0, 0.0]]), (p.shape[0], 1, 1))

    return datum_from_field(fn, jac, 2, L, 'solenoidal2d', {'L': float(L), 'scale': float(scale)})


def model_solenoidal3d(L, scale=1.0):
    """Trace of scale * (2y(x^2 - L^2), -2x(y^2 - L^2), 0) / L^2, divergence-free and zero at the vertices."""
    L2 = float(L) ** 2

    def fn(p):
        x, y = p[:, 0], p[:, 1]
        return scale / L2 * np.column_stack([2 * y * (x ** 2 - L2), -2 * x * (y ** 2 - L2), np.zeros_like(x)])

    def jac(p):
        x, y = p[:, 0], p[:, 1]
        out = np.zeros((p.shape[0], 3, 3))
        out[:, 0, 0], out[:, 0, 1] = 4 * x * y, 2 * (x ** 2 - L2)
        out[:, 1, 0], out[:, 1, 1] = -2 * (y ** 2 - L2), -4 * x * y
        return scale / L2 * out

    return datum_from_field(fn, jac, 3, L, 'solenoidal3d', {'L': float(L), 'scale': float(scale)})


@dataclass(frozen=True)
class ModelSpec:
    name: str
    dimensions: tuple
    defaults: dict
    description: str


MODELS = {
    'turbulent2d': ModelSpec('turbulent2d', (2,), {'lam': 3.0, 'alpha': 0.1, 'tau': 10.0, 'b': None},
                             'Couette inflow, oscillating wake outflow (b defaults to the inner half-side)'),
    'laminar3d': ModelSpec('laminar3d', (3,), {'variant': 'edge_vanishing'},
                           'Poiseuille inflow, recentring outflow; variants edge_vanishing (default) | verbatim'),
    'solenoidal2d': ModelSpec('solenoidal2d', (2,), {'scale': 1.0}, 'trace of scale * (y, x)'),
    'solenoidal3d': ModelSpec('solenoidal3d', (3,), {'scale': 1.0},
                              'trace of a divergence-free cubic field vanishing at the vertices'),
    'zero': ModelSpec('zero', (2, 3), {}, 'h = 0 on every face'),
}


def build_model(name, domain, params=None):
    """
    Instantiate a shipped model on a domain.

    Args:
        name (str): Key of ``MODELS``
        domain (Domain): Target domain
        params (dict, optional): Overrides of the model defaults

    Returns:
        BoundaryDatum: The model datum
    """
    if name not in MODELS:
        raise DataParseError(f'unknown model {name!r}; available: {", ".join(sorted(MODELS))}')
    spec = MODELS[name]
    if domain.dimension not in spec.dimensions:
        raise WrongDimension(f'model {name} is defined in {spec.dimensions}d, domain is {domain.dimension}d')
    unknown = set(params or {}) - set(spec.defaults)
    if unknown:
        raise DataParseError(f'unknown parameters for {name}: {sorted(unknown)}')
    p = {**spec.defaults, **(params or {})}
    L = domain.L
    if name == 'turbulent2d':
        b = domain.b if p['b'] is None else float(p['b'])
        return model_turbulent2d(L, b, float(p['lam']), float(p['alpha']), float(p['tau']))
    if name == 'laminar3d':
        return model_laminar3d(L, p['variant'])
    if name == 'solenoidal2d':
        return model_solenoidal2d(L, float(p['scale']))
    if name == 'solenoidal3d':
        return model_solenoidal3d(L, float(p['scale']))
    return zero_datum(domain.dimension, L)


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_face_csv(path, dimension, L):
    """
    Read sampled face data.

    The CSV has one row per sample: face number, the d-1 face coordinates and the
    d vector components. An optional header row is skipped. Every face must be
    sampled on a full tensor grid spanning [-L, L] in each face coordinate.

    Raises:
        DataParseError: On unreadable files, wrong column counts, non-finite
            values, missing faces or incomplete grids
    """
    columns = 1 + (dimension - 1) + dimension
    try:
        with open(path, encoding='utf-8') as handle:
            first = handle.readline()
        skip = 0 if _is_number(first.split(',')[0]) else 1
        table = np.genfromtxt(path, delimiter=',', skip_header=skip, dtype=float, invalid_raise=True)
    except (OSError, ValueError) as exc:
        raise DataParseError(f'cannot read face data {path}: {exc}') from exc
    table = np.atleast_2d(table)
    if table.size == 0 or table.shape[1] != columns:
        raise DataParseError(f'face data {path} must have {columns} columns')
    if not np.all(np.isfinite(table)):
        raise DataParseError(f'face data {path} contains non-numeric or non-finite entries')

    faces = {}
    for face in FACE_AXES[dimension]:
        rows = table[table[:, 0] == face]
        if rows.shape[0] == 0:
            raise DataParseError(f'face data {path} has no samples on face {face}')
        coords = rows[:, 1:dimension]
        axes = [np.unique(coords[:, m]) for m in range(dimension - 1)]
        shape = tuple(len(a) for a in axes)
        if rows.shape[0] != int(np.prod(shape)) or any(len(a) < 2 for a in axes):
            raise DataParseError(f'face {face} of {path} is not a full tensor grid')
        if any(abs(a[0] + L) > 1e-9 * L or abs(a[-1] - L) > 1e-9 * L for a in axes):
            raise DataParseError(f'face {face} of {path} does not span [-L, L]')
        order = np.lexsort(coords.T[::-1])
        values = rows[order, dimension:].reshape(shape + (dimension,))
        faces[face] = GridFace(axes, values)
    return BoundaryDatum(dimension, float(L), faces, f'grid:{path}', {'path': str(path)})
