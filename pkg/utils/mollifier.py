"""
The radial exponential bump mollifier, its normalization and the norms of its
derivatives and first moments that enter the Bogovskii constant bounds.

All norms are computed once on the unit ball and scaled by exact powers of r.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from utils.errors import WrongDimension
from utils.numerics import abs_integral, adaptive_quad

logger = logging.getLogger(__name__)

# profile values below exp(-700) are flushed to zero
SUPPORT_EPS = 1.0 / 700.0
SPHERE_AREA = {2: 2.0 * np.pi, 3: 4.0 * np.pi}
# published approximations of the normalization constant
ELL_PUBLISHED = {2: 2.14357, 3: 2.26712}


def profile(s):
    """
    f(s) = exp(1/(s-1)) for s < 1 and its first two derivatives in s.

    Returns:
        tuple: (f, f', f''), each zero outside the unit ball
    """
    s = np.asarray(s, dtype=float)
    inside = s < 1.0 - SUPPORT_EPS
    t = np.where(inside, s - 1.0, -1.0)
    f = np.where(inside, np.exp(1.0 / t), 0.0)
    f1 = -f / t ** 2
    f2 = f * (1.0 / t ** 4 + 2.0 / t ** 3)
    return f, f1, f2


@lru_cache(maxsize=None)
def normalization_constant(d):
    """Constant making the scaled bump a unit-mass density."""
    if d not in SPHERE_AREA:
        raise WrongDimension(f'mollifier defined for d in (2, 3), got {d}')
    radial, _ = adaptive_quad(lambda t: t ** (d - 1) * np.exp(1.0 / (t * t - 1.0)) if t < 1 else 0.0,
                              0.0, 1.0, rtol=1e-12)
    return 1.0 / (SPHERE_AREA[d] * radial)


@dataclass(frozen=True)
class Mollifier:
    """omega(x) = ell / r^d * f(|x - center|^2 / r^2), supported in the closed ball."""

    dimension: int
    radius: float
    center: tuple = None

    def __post_init__(self):
        if self.dimension not in SPHERE_AREA:
            raise WrongDimension(f'mollifier defined for d in (2, 3), got {self.dimension}')
        if not self.radius > 0:
            raise ValueError('radius must be positive')
        if self.center is None:
            object.__setattr__(self, 'center', (0.0,) * self.dimension)

    @property
    def ell(self):
        return normalization_constant(self.dimension)

    def _local(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        zeta = (pts - np.asarray(self.center)) / self.radius
        f, f1, f2 = profile(np.sum(zeta ** 2, axis=1))
        return zeta, f, f1, f2

    def _scale(self, order):
        return self.ell / self.radius ** (self.dimension + order)

    def eval(self, points):
        _, f, _, _ = self._local(points)
        return self._scale(0) * f

    def eval_partial(self, points, j):
        zeta, _, f1, _ = self._local(points)
        return self._scale(1) * 2.0 * zeta[:, j] * f1

    def eval_partial2(self, points, j):
        zeta, _, f1, f2 = self._local(points)
        return self._scale(2) * (2.0 * f1 + 4.0 * zeta[:, j] ** 2 * f2)

    def eval_moment(self, points, k):
        """(x_k - center_k) * omega."""
        zeta, f, _, _ = self._local(points)
        return self._scale(-1) * zeta[:, k] * f

    def eval_moment_partial(self, points, k, j):
        zeta, f, f1, _ = self._local(points)
        return self._scale(0) * ((k == j) * f + 2.0 * zeta[:, k] * zeta[:, j] * f1)

    def eval_moment_partial2(self, points, k, j):
        zeta, _, f1, f2 = self._local(points)
        zj2 = zeta[:, j] ** 2
        if k == j:
            return self._scale(1) * zeta[:, j] * (6.0 * f1 + 4.0 * zj2 * f2)
        return self._scale(1) * zeta[:, k] * (2.0 * f1 + 4.0 * zj2 * f2)


@dataclass(frozen=True)
class NormEntry:
    name: str
    kind: str
    exponent: object
    bounds: tuple
    off_axis: bool
    description: str

    def r_exponent(self, d):
        return self.exponent(d) if callable(self.exponent) else self.exponent


# integrands in a meridian plane: zj along the differentiation axis, zk transverse
def _w(zj, zk, f, f1, f2):
    return f


def _xw(zj, zk, f, f1, f2):
    return zj * f


def _dw(zj, zk, f, f1, f2):
    return 2.0 * zj * f1


def _dxw_diag(zj, zk, f, f1, f2):
    return f + 2.0 * zj ** 2 * f1


def _dxw_off(zj, zk, f, f1, f2):
    return 2.0 * zk * zj * f1


def _d2w(zj, zk, f, f1, f2):
    return 2.0 * f1 + 4.0 * zj ** 2 * f2


def _d2xw_diag(zj, zk, f, f1, f2):
    return zj * (6.0 * f1 + 4.0 * zj ** 2 * f2)


def _d2xw_off(zj, zk, f, f1, f2):
    return zk * (2.0 * f1 + 4.0 * zj ** 2 * f2)


INTEGRANDS = {
    'w_L1': _w, 'xw_L1': _xw, 'dw_L1': _dw, 'dw_Linf': _dw,
    'dxw_diag_L1': _dxw_diag, 'dxw_diag_Linf': _dxw_diag,
    'dxw_off_L1': _dxw_off, 'dxw_off_Linf': _dxw_off,
    'd2w_L1': _d2w, 'd2xw_diag_L1': _d2xw_diag, 'd2xw_off_L1': _d2xw_off,
}

NORM_ENTRIES = (
    NormEntry('w_L1', 'L1', 0, (1.0, 1.0), False, '||omega||_L1'),
    NormEntry('xw_L1', 'L1', 1, (0.31, 0.28), False, '||x_k omega||_L1'),
    NormEntry('dw_L1', 'L1', -1, (1.91, 2.12), False, '||d_j omega||_L1'),
    NormEntry('dw_Linf', 'Linf', lambda d: -(d + 1), (1.72, 1.82), False, '||d_j omega||_Linf'),
    NormEntry('dxw_diag_L1', 'L1', 0, (1.18, 1.16), False, '||d_k (x_k omega)||_L1'),
    NormEntry('dxw_diag_Linf', 'Linf', lambda d: -d, (1.19, 1.26), False, '||d_k (x_k omega)||_Linf'),
    NormEntry('dxw_off_L1', 'L1', 0, (0.64, 0.64), True, '||d_j (x_k omega)||_L1, k != j'),
    NormEntry('dxw_off_Linf', 'Linf', lambda d: -d, (0.67, 0.71), True, '||d_j (x_k omega)||_Linf, k != j'),
    NormEntry('d2w_L1', 'L1', -2, (8.75, 10.22), False, '||d_j^2 omega||_L1'),
    NormEntry('d2xw_diag_L1', 'L1', -1, (6.98, 7.29), False, '||d_k^2 (x_k omega)||_L1'),
    NormEntry('d2xw_off_L1', 'L1', -1, (3.08, 3.22), True, '||d_j^2 (x_k omega)||_L1, k != j'),
)
ENTRY_BY_NAME = {entry.name: entry for entry in NORM_ENTRIES}


def _meridian(integrand, d, rho, theta):
    """Integrand times the angular Jacobian, with the transverse factor folded in for 3d."""
    f, f1, f2 = profile(rho * rho)
    zj, zk = rho * np.cos(theta), rho * np.sin(theta)
    values = integrand(zj, zk, f, f1, f2)
    return values * (rho if d == 2 else rho ** 2 * np.sin(theta))


def _l1_unit(entry, d, n_nodes, rtol):
    integrand = INTEGRANDS[entry.name]
    theta_max = 2.0 * np.pi if d == 2 else np.pi
    if d == 2:
        azimuth = 1.0
    else:
        # |cos psi| integrates to 4 over the azimuth for transverse moments
        azimuth = 4.0 if entry.off_axis else 2.0 * np.pi

    def radial(rho):
        return abs_integral(lambda th: _meridian(integrand, d, rho, th), 0.0, theta_max, n_nodes=n_nodes)

    value, _ = adaptive_quad(radial, 0.0, 1.0, rtol=rtol)
    return azimuth * value


def _linf_unit(entry, n_samples):
    integrand = INTEGRANDS[entry.name]

    def magnitude(rho, theta):
        f, f1, f2 = profile(rho * rho)
        return np.abs(integrand(rho * np.cos(theta), rho * np.sin(theta), f, f1, f2))

    rho = np.linspace(0.0, 1.0, n_samples)
    theta = np.linspace(0.0, np.pi, n_samples)
    rr, tt = np.meshgrid(rho, theta, indexing='ij')
    grid = magnitude(rr, tt)
    i, j = np.unravel_index(np.argmax(grid), grid.shape)
    best_r, best_t, best = rho[i], theta[j], float(grid[i, j])
    dr, dt = rho[1] - rho[0], theta[1] - theta[0]
    for _ in range(4):
        res = minimize_scalar(lambda x: -float(magnitude(x, best_t)), method='bounded',
                              bounds=(max(0.0, best_r - dr), min(1.0, best_r + dr)), options={'xatol': 1e-12})
        if -res.fun > best:
            best, best_r = -res.fun, res.x
        res = minimize_scalar(lambda x: -float(magnitude(best_r, x)), method='bounded',
                              bounds=(max(0.0, best_t - dt), min(np.pi, best_t + dt)), options={'xatol': 1e-12})
        if -res.fun > best:
            best, best_t = -res.fun, res.x
    logger.debug('sup of %s at rho=%.6f theta=%.6f: %.12g', entry.name, best_r, best_t, best)
    return best


@lru_cache(maxsize=None)
def _unit_ball_norms(d, n_nodes, n_samples, rtol, workers):
    ell = normalization_constant(d)

    def compute(entry):
        if entry.kind == 'L1':
            return entry.name, ell * _l1_unit(entry, d, n_nodes, rtol)
        return entry.name, ell * _linf_unit(entry, n_samples)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(compute, NORM_ENTRIES))
    else:
        results = [compute(entry) for entry in NORM_ENTRIES]
    return tuple(results)


def unit_ball_norms(d, n_nodes=24, n_samples=1000, rtol=1e-10, workers=1):
    """Norm values for r = 1, keyed by entry name."""
    if d not in SPHERE_AREA:
        raise WrongDimension(f'mollifier defined for d in (2, 3), got {d}')
    return dict(_unit_ball_norms(d, n_nodes, n_samples, rtol, workers))


@dataclass(frozen=True)
class NormValue:
    name: str
    computed: float
    paper_bound: float
    exponent: float
    description: str = ''

    @property
    def margin(self):
        """Relative distance below the published bound; negative when exceeded."""
        return 1.0 - self.computed / self.paper_bound


@dataclass(frozen=True)
class NormTable:
    dimension: int
    radius: float
    ell: float
    entries: dict = field(default_factory=dict)

    def value(self, name):
        return self.entries[name].computed

    def rows(self):
        return [self.entries[entry.name] for entry in NORM_ENTRIES]


def norm_table(d, r, n_nodes=24, n_samples=1000, rtol=1e-10, workers=1):
    """
    Every mollifier norm for dimension ``d`` and radius ``r``.

    Raises:
        QuadratureFailure: When the adaptive radial quadrature does not converge
    """
    if not r > 0:
        raise ValueError('radius must be positive')
    unit = unit_ball_norms(d, n_nodes, n_samples, rtol, workers)
    entries = {}
    for entry in NORM_ENTRIES:
        exponent = entry.r_exponent(d)
        scale = r ** exponent
        entries[entry.name] = NormValue(entry.name, unit[entry.name] * scale,
                                        entry.bounds[d - 2] * scale, exponent, entry.description)
    return NormTable(d, float(r), normalization_constant(d), entries)


DURAN_BOUNDS = {
    2: {'A_diag': 7.29, 'A_off': 3.39, 'At_diag': 1.19, 'At_off': 0.66, 'B': 9.75, 'Bt': 1.82},
    3: {'A_diag': 7.57, 'A_off': 3.5, 'At_diag': 1.21, 'At_off': 0.68, 'B': 11.2, 'Bt': 1.97},
}


def _duran_exponents(d):
    return {'A_diag': 0.0, 'A_off': 0.0, 'At_diag': -d / 2.0, 'At_off': -d / 2.0,
            'B': -1.0, 'Bt': -(d / 2.0 + 1.0)}


def _assemble_duran(norm, r):
    return {
        'A_diag': norm('xw_L1') / r + r * norm('d2xw_diag_L1'),
        'A_off': norm('xw_L1') / r + r * norm('d2xw_off_L1'),
        'At_diag': np.sqrt(norm('dxw_diag_L1') * norm('dxw_diag_Linf')),
        'At_off': np.sqrt(norm('dxw_off_L1') * norm('dxw_off_Linf')),
        'B': norm('w_L1') / r + r * norm('d2w_L1'),
        'Bt': np.sqrt(norm('dw_L1') * norm('dw_Linf')),
    }


@dataclass(frozen=True)
class DuranConstants:
    """
    Constants of the two Calderon-Zygmund-type operator bounds, per family.

    ``published`` holds the published bounds; ``consistent`` the same formulas applied
    to the published norm bounds. A computed value above ``published`` but within
    ``consistent`` indicates rounding in the published value.
    """

    dimension: int
    radius: float
    values: dict
    published: dict
    consistent: dict
    exponents: dict

    def pair(self, family, k, j):
        return self.values[f'{family}_diag' if k == j else f'{family}_off']


def duran_constants(d, r, table=None):
    """Assemble the operator constants from the mollifier norms at radius ``r``."""
    table = table or norm_table(d, r)
    values = {k: float(v) for k, v in _assemble_duran(table.value, r).items()}
    bound_table = {name: ENTRY_BY_NAME[name].bounds[d - 2] * r ** ENTRY_BY_NAME[name].r_exponent(d)
                   for name in ENTRY_BY_NAME}
    consistent = {k: float(v) for k, v in _assemble_duran(bound_table.__getitem__, r).items()}
    exponents = _duran_exponents(d)
    published = {k: v * r ** exponents[k] for k, v in DURAN_BOUNDS[d].items()}
    return DuranConstants(d, float(r), values, published, consistent, exponents)


def operator_coefficients(constants):
    """
    Dimensionless coefficients of the operator bounds: for the first operator
    2^((d-1)/2) A and 2^(d/2) A~ r^(d/2); for the second 2^((d-1)/2) B r and
    2^(d/2) B~ r^(d/2+1).
    """
    d, r = constants.dimension, constants.radius
    v = constants.values
    c1, c2 = 2.0 ** ((d - 1) / 2.0), 2.0 ** (d / 2.0)
    return {
        'T1_A_diag': c1 * v['A_diag'],
        'T1_A_off': c1 * v['A_off'],
        'T1_At_diag': c2 * v['At_diag'] * r ** (d / 2.0),
        'T1_At_off': c2 * v['At_off'] * r ** (d / 2.0),
        'T2_B': c1 * v['B'] * r,
        'T2_Bt': c2 * v['Bt'] * r ** (d / 2.0 + 1.0),
    }


OPERATOR_PUBLISHED = {
    2: {'T1_A_diag': 10.31, 'T1_A_off': 4.8, 'T1_At_diag': 2.38, 'T1_At_off': 2.38, 'T2_B': 13.79, 'T2_Bt': 3.64},
    3: {'T1_A_diag': 15.14, 'T1_A_off': 7.0, 'T1_At_diag': 3.43, 'T1_At_off': 1.93, 'T2_B': 22.4, 'T2_Bt': 5.58},
}
