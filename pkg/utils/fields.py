"""Evaluable scalar and vector fields carried between pipeline stages."""
import threading

import numpy as np

from utils.numerics import fd_jacobian

DEFAULT_FD_STEP = 1e-5


class FieldExpr:
    """
    Vector field on a declared region with an optional analytic Jacobian.

    Evaluation takes (n, d) points and returns (n, d) values. The number of
    points evaluated so far is tracked in ``evaluations``.
    """

    def __init__(self, name, dimension, fn, jacobian=None, region='Q', fd_step=DEFAULT_FD_STEP):
        self.name = name
        self.dimension = dimension
        self.region = region
        self.fd_step = fd_step
        self._fn = fn
        self._jacobian = jacobian
        self._evaluations = 0
        self._lock = threading.Lock()

    def __repr__(self):
        return f'FieldExpr({self.name!r}, d={self.dimension}, region={self.region!r})'

    @property
    def evaluations(self):
        return self._evaluations

    @property
    def has_jacobian(self):
        return self._jacobian is not None

    def _count(self, n):
        with self._lock:
            self._evaluations += n

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self._count(pts.shape[0])
        return np.asarray(self._fn(pts), dtype=float).reshape(pts.shape[0], self.dimension)

    def jacobian(self, points, step=None):
        """J[n, a, b] = dF_a/dx_b, analytic when available, central differences otherwise."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self._jacobian is not None:
            return np.asarray(self._jacobian(pts), dtype=float).reshape(pts.shape[0], self.dimension, self.dimension)
        return fd_jacobian(self, pts, step or self.fd_step)

    def divergence(self, points, step=None):
        return np.trace(self.jacobian(points, step), axis1=1, axis2=2)

    def scaled(self, factor, name=None):
        jac = None if self._jacobian is None else (lambda p: factor * self._jacobian(p))
        return FieldExpr(name or f'{factor}*{self.name}', self.dimension,
                         lambda p: factor * self._fn(p), jac, self.region, self.fd_step)

    def plus(self, other, name=None):
        jac = None
        if self.has_jacobian and other.has_jacobian:
            jac = lambda p: self._jacobian(p) + other._jacobian(p)  # noqa: E731
        return FieldExpr(name or f'{self.name}+{other.name}', self.dimension,
                         lambda p: self._fn(p) + other._fn(p), jac, self.region, self.fd_step)


def zero_field(dimension, name='zero', region='Q'):
    return FieldExpr(name, dimension, lambda p: np.zeros((p.shape[0], dimension)),
                     lambda p: np.zeros((p.shape[0], dimension, dimension)), region)


class ScalarField:
    """
    Scalar field extended by zero outside ``support`` (a box).

    ``breaks`` lists hyperplanes (normal, offset) across which the field may jump;
    line integrals split there. ``refinements`` are planes that only subdivide
    line integrals, for fields that oscillate but stay smooth across them.
    """

    def __init__(self, fn, dimension, name='g', support=None, breaks=(), refinements=()):
        self.name = name
        self.dimension = dimension
        self._fn = fn
        self.support = None if support is None else np.asarray(support, dtype=float).reshape(dimension, 2)
        self.breaks = tuple((np.asarray(n, dtype=float), float(c)) for n, c in breaks)
        self.refinements = tuple((np.asarray(n, dtype=float), float(c)) for n, c in refinements)

    def __repr__(self):
        return f'ScalarField({self.name!r}, d={self.dimension})'

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.asarray(self._fn(pts), dtype=float).reshape(pts.shape[0])
        if self.support is not None:
            inside = np.all((pts >= self.support[:, 0]) & (pts <= self.support[:, 1]), axis=1)
            values = np.where(inside, values, 0.0)
        return values

    def masked(self, predicate, name=None):
        return ScalarField(lambda p: np.where(predicate(p), self._fn(p), 0.0), self.dimension,
                           name or self.name, self.support, self.breaks, self.refinements)

    def scaled(self, factor, name=None):
        return ScalarField(lambda p: factor * self._fn(p), self.dimension,
                           name or f'{factor}*{self.name}', self.support, self.breaks, self.refinements)

    def plus(self, other, name=None):
        support = None
        if self.support is not None and other.support is not None:
            support = np.column_stack([np.minimum(self.support[:, 0], other.support[:, 0]),
                                       np.maximum(self.support[:, 1], other.support[:, 1])])
        return ScalarField(lambda p: self(p) + other(p), self.dimension,
                           name or f'{self.name}+{other.name}', support, self.breaks + other.breaks,
                           self.refinements + other.refinements)
