"""
Piecewise-affine cutoff equal to 0 on the inner box and 1 on the outer boundary,
with gradient of minimal sup-norm 1/(L - a).

Points are reflected into the positive orthant first; region labels are
0 (inside the inner box) and k = 1..d for the region where the ramp along axis
k - 1 is active. Ties on interfaces go to the lower label.
"""
import logging
from dataclasses import dataclass

import numpy as np

from utils.errors import OnInterface, OutsideQ

logger = logging.getLogger(__name__)

INTERFACE_TOL = 1e-12
UNCOVERED = -1


@dataclass(frozen=True)
class Cutoff:
    domain: object

    @property
    def lipschitz_constant(self):
        return 1.0 / (self.domain.L - self.domain.a)

    def _reflect(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.domain.dimension:
            raise ValueError(f'expected {self.domain.dimension}d points')
        if np.any(np.abs(pts) > self.domain.L + INTERFACE_TOL):
            raise OutsideQ('point outside the closed outer box')
        return np.abs(pts)

    def gamma(self, points):
        """Interface functions evaluated after reflection: one column (2d) or three (3d)."""
        p = self._reflect(points)
        L, half = self.domain.L, self.domain.half_sides
        if self.domain.dimension == 2:
            a, b = half
            x, y = p[:, 0], p[:, 1]
            return ((L - a) * y + (b - L) * x + L * (a - b))[:, None]
        a, b, c = half
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        g1 = (L - c) * y + (b - L) * z + L * (c - b)
        g2 = (L - a) * z + (c - L) * x + L * (a - c)
        g3 = (L - b) * x + (a - L) * y + L * (b - a)
        return np.column_stack([g1, g2, g3])

    def classify(self, points):
        """Region label per point."""
        p = self._reflect(points)
        labels = np.full(p.shape[0], UNCOVERED, dtype=int)
        inside = np.all(p <= self.domain.half_sides, axis=1)
        labels[inside] = 0
        g = self.gamma(p)
        if self.domain.dimension == 2:
            labels[~inside & (g[:, 0] <= 0)] = 1
            labels[~inside & (g[:, 0] > 0)] = 2
            return labels
        g1, g2, g3 = g.T
        rules = ((1, (g2 <= 0) & (g3 >= 0)), (2, (g1 >= 0) & (g3 <= 0)), (3, (g2 >= 0) & (g1 <= 0)))
        for label, region in rules:
            labels[(labels == UNCOVERED) & region] = label
        return labels

    def _ramps(self, p):
        L, half = self.domain.L, self.domain.half_sides
        return (p - half) / (L - half)

    def phi(self, points):
        """Cutoff value in [0, 1]."""
        p = self._reflect(points)
        labels = self.classify(p)
        ramps = self._ramps(p)
        out = np.zeros(p.shape[0])
        for k in range(1, self.domain.dimension + 1):
            sel = labels == k
            out[sel] = ramps[sel, k - 1]
        if np.any(labels == UNCOVERED):
            sel = labels == UNCOVERED
            out[sel] = np.max(ramps[sel], axis=1)
        return np.clip(out, 0.0, 1.0)

    def grad_phi(self, points, strict=True):
        """
        Piecewise-constant gradient.

        Args:
            points (array-like): (n, d) points of the closed outer box
            strict (bool): Raise on interfaces; otherwise use the label's one-sided value

        Raises:
            OnInterface: When ``strict`` and a point lies within 1e-12 of a region boundary
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        p = self._reflect(pts)
        labels = self.classify(p)
        if strict:
            near = self.interface_distance(p) <= INTERFACE_TOL
            if np.any(near):
                raise OnInterface(f'{int(np.count_nonzero(near))} point(s) on a cutoff interface')
        L, half = self.domain.L, self.domain.half_sides
        out = np.zeros_like(p)
        for k in range(1, self.domain.dimension + 1):
            sel = labels == k
            out[sel, k - 1] = np.sign(pts[sel, k - 1]) / (L - half[k - 1])
        return out

    def interface_distance(self, points):
        """Distance to the nearest surface across which the gradient jumps."""
        p = self._reflect(points)
        L, half = self.domain.L, self.domain.half_sides
        ramps = self._ramps(p)
        active = np.max(ramps, axis=1)
        dist = np.full(p.shape[0], np.inf)
        inner = active <= 0
        dist[inner] = np.min(half - p[inner], axis=1)
        outer = ~inner
        k = np.argmax(ramps, axis=1)
        rows = np.nonzero(outer)[0]
        dist[rows] = p[rows, k[rows]] - half[k[rows]]
        scale = 1.0 / (L - half)
        for j in range(self.domain.dimension):
            other = rows[k[rows] != j]
            kk = k[other]
            gap = ramps[other, kk] - np.maximum(ramps[other, j], 0.0)
            norm = np.sqrt(scale[kk] ** 2 + (scale[j] ** 2) * (ramps[other, j] > 0))
            dist[other] = np.minimum(dist[other], gap / norm)
        return dist


def classify(point, domain):
    return Cutoff(domain).classify(point)


def phi(point, domain):
    return Cutoff(domain).phi(point)


def grad_phi(point, domain):
    return Cutoff(domain).grad_phi(point)
