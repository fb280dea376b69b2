"""Planar geometry shared by the planners.

Points are small immutable values; polylines keep their vertices as a
``(n, 2)`` float array so projection can be done segment-wise in numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

PARALLEL_TOL = 1e-9

PointLike = Union["Point2", Sequence[float], np.ndarray]


@dataclass(frozen=True, slots=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    def __iter__(self):
        yield self.x
        yield self.y

    def __getitem__(self, i):
        return (self.x, self.y)[i]

    def __len__(self):
        return 2

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


def as_point(p: PointLike) -> Point2:
    if isinstance(p, Point2):
        return p
    return Point2(float(p[0]), float(p[1]))


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


def dist(a: PointLike, b: PointLike) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def dot(u: PointLike, v: PointLike) -> float:
    return u[0] * v[0] + u[1] * v[1]


def heading_line_intersection(
    p_e: PointLike, phi_e: float, p_n: PointLike, phi_n: float, tol: float = PARALLEL_TOL
) -> Optional[Point2]:
    """Intersect the infinite lines through ``p_e`` and ``p_n`` along their headings.

    Solved in parametric form ``p_e + t [cos phi_e, sin phi_e]`` so that
    vertical or horizontal headings need no special casing.  Returns ``None``
    for (near) parallel headings.
    """
    de = (math.cos(phi_e), math.sin(phi_e))
    dn = (math.cos(phi_n), math.sin(phi_n))
    denom = de[0] * dn[1] - de[1] * dn[0]
    if abs(denom) < tol:
        return None
    rx, ry = p_n[0] - p_e[0], p_n[1] - p_e[1]
    t = (rx * dn[1] - ry * dn[0]) / denom
    return Point2(p_e[0] + t * de[0], p_e[1] + t * de[1])


class Polyline:
    """Ordered vertex chain with arc-length bookkeeping."""

    def __init__(self, vertices: Iterable[PointLike]):
        v = np.array([[float(p[0]), float(p[1])] for p in vertices], dtype=float)
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("polyline needs at least 2 vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polyline vertices must be finite")
        seg = np.diff(v, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len == 0.0):
            raise ValueError("consecutive polyline vertices must be distinct")
        self.vertices = v
        self._seg = seg
        self._seg_len = seg_len
        self._cum = np.concatenate(([0.0], np.cumsum(seg_len)))
        self.vertices.setflags(write=False)

    def __len__(self):
        return self.vertices.shape[0]

    def __repr__(self):
        return f"Polyline({self.vertices.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, Polyline) and np.array_equal(self.vertices, other.vertices)

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    def project(self, p: PointLike) -> tuple[Point2, float]:
        """Closest point on the polyline and its arc-length position.

        Ties between segments resolve to the smaller arc length.
        """
        px, py = float(p[0]), float(p[1])
        a = self.vertices[:-1]
        t = ((px - a[:, 0]) * self._seg[:, 0] + (py - a[:, 1]) * self._seg[:, 1]) / self._seg_len**2
        t = np.clip(t, 0.0, 1.0)
        qx = a[:, 0] + t * self._seg[:, 0]
        qy = a[:, 1] + t * self._seg[:, 1]
        d2 = (qx - px) ** 2 + (qy - py) ** 2
        k = int(np.argmin(d2))
        s = float(self._cum[k] + t[k] * self._seg_len[k])
        return Point2(float(qx[k]), float(qy[k])), s

    def distance_to(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point in a ``(..., 2)`` array to the polyline."""
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 2)
        a = self.vertices[:-1]
        rx = flat[:, None, 0] - a[None, :, 0]
        ry = flat[:, None, 1] - a[None, :, 1]
        t = np.clip((rx * self._seg[:, 0] + ry * self._seg[:, 1]) / self._seg_len**2, 0.0, 1.0)
        d = np.hypot(rx - t * self._seg[:, 0], ry - t * self._seg[:, 1]).min(axis=1)
        return d.reshape(pts.shape[:-1])

    def point_at(self, s: float) -> Point2:
        s = min(max(s, 0.0), self.length)
        k = int(np.searchsorted(self._cum, s, side="right")) - 1
        k = min(max(k, 0), len(self._seg_len) - 1)
        t = (s - self._cum[k]) / self._seg_len[k]
        q = self.vertices[k] + t * self._seg[k]
        return Point2(float(q[0]), float(q[1]))

    def heading_at(self, s: float) -> float:
        s = min(max(s, 0.0), self.length)
        k = int(np.searchsorted(self._cum, s, side="right")) - 1
        k = min(max(k, 0), len(self._seg_len) - 1)
        return math.atan2(self._seg[k, 1], self._seg[k, 0])

    def signed_offset(self, p: PointLike) -> float:
        """Cross-track distance, positive to the left of the travel direction."""
        q, s = self.project(p)
        h = self.heading_at(s)
        return math.cos(h) * (p[1] - q.y) - math.sin(h) * (p[0] - q.x)

    def circle_intersection_ahead(self, center: PointLike, radius: float, s_from: float) -> Optional[float]:
        """Smallest arc length >= ``s_from`` whose point lies at ``radius`` from ``center``."""
        cx, cy = float(center[0]), float(center[1])
        k0 = int(np.searchsorted(self._cum, s_from, side="right")) - 1
        k0 = min(max(k0, 0), len(self._seg_len) - 1)
        for k in range(k0, len(self._seg_len)):
            a = self.vertices[k]
            d = self._seg[k]
            fx, fy = a[0] - cx, a[1] - cy
            qa = d[0] ** 2 + d[1] ** 2
            qb = 2.0 * (fx * d[0] + fy * d[1])
            qc = fx**2 + fy**2 - radius**2
            disc = qb * qb - 4.0 * qa * qc
            if disc < 0.0:
                continue
            root = math.sqrt(disc)
            t_lo = max((s_from - self._cum[k]) / self._seg_len[k], 0.0)
            for t in sorted(((-qb - root) / (2 * qa), (-qb + root) / (2 * qa))):
                if t_lo <= t <= 1.0:
                    return float(self._cum[k] + t * self._seg_len[k])
        return None
