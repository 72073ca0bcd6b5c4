"""Shared numerical kernels: quadrature rules, Monte-Carlo, finite differences and grids."""
import itertools
import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate as sp_integrate
from scipy.special import roots_legendre

from utils.errors import QuadratureFailure, TooCloseToBoundary

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def _legendre(n):
    x, w = roots_legendre(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def mapped_gauss_legendre(n, lo, hi):
    """
    Gauss-Legendre nodes and weights mapped onto one or many intervals.

    Args:
        n (int): Nodes per interval
        lo (float or ndarray): Left ends, any shape S
        hi (float or ndarray): Right ends, same shape as ``lo``

    Returns:
        tuple: (nodes, weights), each of shape S + (n,)
    """
    x, w = _legendre(n)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def gauss_legendre(n, lo=-1.0, hi=1.0):
    """Gauss-Legendre rule with ``n`` nodes on ``[lo, hi]``."""
    return mapped_gauss_legendre(n, float(lo), float(hi))


def _as_points(points):
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    return np.atleast_2d(pts), single


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights over a declared region; masking drops nodes without renormalizing."""

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    region: str = 'box'

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.asarray(self.weights, dtype=float).ravel()
        if nodes.shape[0] != weights.shape[0]:
            raise ValueError('nodes and weights must have the same length')
        object.__setattr__(self, 'nodes', nodes)
        object.__setattr__(self, 'weights', weights)

    @property
    def dimension(self):
        return self.nodes.shape[1]

    @property
    def size(self):
        return self.weights.shape[0]

    @property
    def measure(self):
        return float(np.sum(self.weights))

    def masked(self, predicate, region=None):
        keep = np.asarray(predicate(self.nodes), dtype=bool)
        return QuadratureRule(self.kind, self.nodes[keep], self.weights[keep],
                              region or f'{self.region}|masked')


def _tensor(axes, kind, region):
    node_grids = np.meshgrid(*[x for x, _ in axes], indexing='ij')
    weight_grids = np.meshgrid(*[w for _, w in axes], indexing='ij')
    nodes = np.stack([g.ravel() for g in node_grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in weight_grids], axis=1), axis=1)
    return QuadratureRule(kind, nodes, weights, region)


def _box_counts(bounds, n):
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    counts = np.broadcast_to(np.asarray(n, dtype=int), (bounds.shape[0],))
    if np.any(counts < 1):
        raise ValueError('node count must be positive')
    return bounds, counts


def tensor_gauss_legendre(bounds, n, region='box'):
    """
    Tensor Gauss-Legendre rule on an axis-aligned box.

    Args:
        bounds (array-like): (d, 2) lower and upper bounds per axis
        n (int or sequence): Nodes per axis

    Returns:
        QuadratureRule: Rule of kind ``gauss-legendre``
    """
    bounds, counts = _box_counts(bounds, n)
    axes = [gauss_legendre(k, lo, hi) for k, (lo, hi) in zip(counts, bounds)]
    return _tensor(axes, 'gauss-legendre', region)


def trapezoid_rule(bounds, n, region='box'):
    """Tensor trapezoid rule with ``n`` equispaced nodes per axis, ends included."""
    bounds, counts = _box_counts(bounds, n)
    axes = []
    for k, (lo, hi) in zip(counts, bounds):
        if k < 2:
            raise ValueError('trapezoid rule needs at least two nodes per axis')
        x = np.linspace(lo, hi, k)
        w = np.full(k, (hi - lo) / (k - 1))
        w[[0, -1]] *= 0.5
        axes.append((x, w))
    return _tensor(axes, 'trapezoid', region)


def partition_boxes(breaks):
    """
    Boxes of the tensor partition defined by sorted breakpoints per axis.

    Args:
        breaks (sequence): One increasing sequence of breakpoints per axis

    Returns:
        list: (d, 2) arrays, one per cell
    """
    intervals = [list(zip(b[:-1], b[1:])) for b in breaks]
    return [np.array(cell, dtype=float) for cell in itertools.product(*intervals)]


def composite_gauss_legendre(boxes, n, region='union'):
    """Concatenate tensor Gauss-Legendre rules over a list of disjoint boxes."""
    rules = [tensor_gauss_legendre(box, n) for box in boxes]
    return QuadratureRule('gauss-legendre', np.concatenate([r.nodes for r in rules]),
                          np.concatenate([r.weights for r in rules]), region)


def polar_ball_rule(dimension, n_radial, n_angular, radius=1.0, center=None):
    """
    Product rule on a disk or ball: Gauss-Legendre in radius, trapezoid in azimuth,
    and Gauss-Legendre in the polar cosine for d = 3.
    """
    center = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)
    rho, w_rho = gauss_legendre(n_radial, 0.0, radius)
    phi = 2.0 * np.pi * np.arange(n_angular) / n_angular
    w_phi = np.full(n_angular, 2.0 * np.pi / n_angular)
    if dimension == 2:
        r, p = np.meshgrid(rho, phi, indexing='ij')
        w = np.outer(w_rho * rho, w_phi)
        nodes = np.stack([r * np.cos(p), r * np.sin(p)], axis=-1).reshape(-1, 2)
    elif dimension == 3:
        mu, w_mu = gauss_legendre(n_angular, -1.0, 1.0)
        r, m, p = np.meshgrid(rho, mu, phi, indexing='ij')
        s = np.sqrt(1.0 - m ** 2)
        w = (w_rho * rho ** 2)[:, None, None] * w_mu[None, :, None] * w_phi[None, None, :]
        nodes = np.stack([r * s * np.cos(p), r * s * np.sin(p), r * m], axis=-1).reshape(-1, 3)
    else:
        raise ValueError('dimension must be 2 or 3')
    return QuadratureRule('ball', nodes + center, w.ravel(), 'ball')


def integrate(f, rule):
    """
    Weighted sum of ``f`` over the nodes of a rule.

    Args:
        f (callable): Maps (n, d) points to (n,) or (n, m) values
        rule (QuadratureRule): Quadrature rule

    Returns:
        float or ndarray: Integral value(s)
    """
    values = np.asarray(f(rule.nodes), dtype=float)
    if values.ndim == 1:
        return float(rule.weights @ values)
    return np.tensordot(rule.weights, values, axes=(0, 0))


def adaptive_quad(f, lo, hi, rtol=1e-10, limit=200, points=None):
    """
    Adaptive 1d quadrature; non-convergence raises instead of warning.

    Returns:
        tuple: (value, absolute error estimate)
    """
    with warnings.catch_warnings():
        warnings.simplefilter('error', sp_integrate.IntegrationWarning)
        try:
            value, abserr = sp_integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=rtol,
                                              limit=limit, points=points)
        except sp_integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f'adaptive quadrature on [{lo}, {hi}] did not converge: {exc}') from exc
    logger.debug('adaptive quad on [%g, %g]: %.12g (err %.2e)', lo, hi, value, abserr)
    return value, abserr


def abs_integral(f, lo, hi, n_scan=512, n_nodes=24, bisect_steps=60):
    """
    Integral of |f| over [lo, hi] by Gauss-Legendre on the pieces between sign changes.

    Sign changes are located on a uniform scan and refined by vectorized bisection,
    so each piece carries a smooth integrand.
    """
    t = np.linspace(lo, hi, n_scan + 1)
    v = np.broadcast_to(np.asarray(f(t), dtype=float), t.shape)
    s = np.sign(v)
    cuts = [np.array([lo, hi]), t[1:-1][s[1:-1] == 0]]
    change = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if change.size:
        left, right, f_left = t[change].copy(), t[change + 1].copy(), v[change].copy()
        for _ in range(bisect_steps):
            mid = 0.5 * (left + right)
            f_mid = np.asarray(f(mid), dtype=float)
            same = np.sign(f_mid) == np.sign(f_left)
            left = np.where(same, mid, left)
            f_left = np.where(same, f_mid, f_left)
            right = np.where(same, right, mid)
        cuts.append(0.5 * (left + right))
    edges = np.unique(np.concatenate(cuts))
    nodes, weights = mapped_gauss_legendre(n_nodes, edges[:-1], edges[1:])
    values = np.abs(np.broadcast_to(np.asarray(f(nodes.ravel()), dtype=float), nodes.size)).reshape(nodes.shape)
    return float(np.sum(weights * values))


def monte_carlo_measure(predicate, bounds, n, seed=0, chunk=1 << 18):
    """
    Monte-Carlo measure of the set described by ``predicate`` inside a box.

    Args:
        predicate (callable): Maps (m, d) points to booleans
        bounds (array-like): (d, 2) bounding box
        n (int): Number of samples, at least 1000
        seed (int): Seed of the generator

    Returns:
        tuple: (estimate, binomial standard error)
    """
    if n < 1000:
        raise ValueError('Monte-Carlo needs at least 1000 samples')
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    volume = float(np.prod(bounds[:, 1] - bounds[:, 0]))
    rng = np.random.default_rng(seed)
    hits, remaining = 0, int(n)
    while remaining > 0:
        m = min(chunk, remaining)
        pts = rng.uniform(bounds[:, 0], bounds[:, 1], size=(m, bounds.shape[0]))
        hits += int(np.count_nonzero(predicate(pts)))
        remaining -= m
    p = hits / n
    return volume * p, volume * np.sqrt(p * (1.0 - p) / n)


def spawn_generators(seed, count):
    """Independent generators derived from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _check_clearance(pts, step, bounds):
    if bounds is None:
        return
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(bounds))))
    if np.any(pts - step < bounds[:, 0] - slack) or np.any(pts + step > bounds[:, 1] + slack):
        raise TooCloseToBoundary(f'stencil of half-width {step:g} leaves the evaluation box')


def _stencil(pts, step):
    n, d = pts.shape
    offsets = step * np.eye(d)
    return np.concatenate([pts[:, None, :] + offsets, pts[:, None, :] - offsets], axis=1).reshape(-1, d)


def fd_gradient(f, points, step, bounds=None):
    """
    Central-difference gradient of a scalar field.

    Args:
        f (callable): Maps (m, d) points to (m,) values
        points (array-like): One point (d,) or many (n, d)
        step (float): Half-width of the stencil
        bounds (array-like, optional): Box the stencil must stay inside

    Returns:
        ndarray: (d,) or (n, d) gradient
    """
    pts, single = _as_points(points)
    _check_clearance(pts, step, bounds)
    n, d = pts.shape
    values = np.asarray(f(_stencil(pts, step)), dtype=float).reshape(n, 2 * d)
    grad = (values[:, :d] - values[:, d:]) / (2.0 * step)
    return grad[0] if single else grad


def fd_jacobian(field, points, step, bounds=None):
    """Central-difference Jacobian J[n, a, b] = dF_a/dx_b of a vector field."""
    pts, single = _as_points(points)
    _check_clearance(pts, step, bounds)
    n, d = pts.shape
    values = np.asarray(field(_stencil(pts, step)), dtype=float).reshape(n, 2 * d, -1)
    jac = np.swapaxes((values[:, :d, :] - values[:, d:, :]) / (2.0 * step), 1, 2)
    return jac[0] if single else jac


def fd_divergence(field, points, step, bounds=None):
    """Central-difference divergence of a vector field."""
    jac = fd_jacobian(field, points, step, bounds)
    return np.trace(jac, axis1=-2, axis2=-1)


@dataclass(frozen=True)
class Grid:
    """Structured grid over a box with an optional mask."""

    bounds: np.ndarray
    shape: tuple
    axes: tuple
    nodes: np.ndarray
    mask: np.ndarray
    cell_centered: bool = False

    @property
    def spacing(self):
        counts = np.array(self.shape)
        extent = self.bounds[:, 1] - self.bounds[:, 0]
        return extent / counts if self.cell_centered else extent / (counts - 1)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def active_nodes(self):
        return self.nodes[self.mask]


def make_grid(bounds, resolution, predicate=None, cell_centered=False):
    """
    Build a structured grid in C order (last axis fastest).

    Args:
        bounds (array-like): (d, 2) box
        resolution (int or sequence): Nodes (or cells) per axis
        predicate (callable, optional): Mask predicate over nodes
        cell_centered (bool): Place nodes at cell centres instead of cell corners

    Returns:
        Grid: The grid with its mask
    """
    bounds, counts = _box_counts(bounds, resolution)
    axes = []
    for k, (lo, hi) in zip(counts, bounds):
        if cell_centered:
            axes.append(lo + (np.arange(k) + 0.5) * (hi - lo) / k)
        else:
            axes.append(np.linspace(lo, hi, k))
    mesh = np.meshgrid(*axes, indexing='ij')
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    mask = np.ones(nodes.shape[0], dtype=bool) if predicate is None else np.asarray(predicate(nodes), dtype=bool)
    return Grid(bounds, tuple(int(k) for k in counts), tuple(axes), nodes, mask, cell_centered)
