"""Geometric primitives for the two supported closed surfaces.

Both backends work in embedding coordinates: a point on the sphere of
radius R is a 3-vector with |p| = R, a point on the flat square torus is
a 2-vector reduced into [0, period).  Every operation is a pure function
of immutable inputs, so unrestricted concurrent use is safe.

Edge quadrature is a fixed 3-point Gauss-Legendre rule mapped onto the
arc-length parameterization of the geodesic; its weights sum to the edge
length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousGeodesicError, ConfigurationError, DegenerateCellError

# 3-point Gauss-Legendre rule on [0, 1].
GL3_NODES = np.array([0.5 - np.sqrt(15.0) / 10.0, 0.5, 0.5 + np.sqrt(15.0) / 10.0])
GL3_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])

_ANTIPODAL_MARGIN = 1e-9


def _norm(v, axis=-1):
    return np.sqrt(np.sum(v * v, axis=axis))


@dataclass(frozen=True)
class TangentVector:
    """A vector attached to a point of the surface, in ambient components."""

    base: np.ndarray
    components: np.ndarray


def tangent_inner(x: TangentVector, y: TangentVector) -> float:
    """Riemannian inner product of two tangent vectors at the same point.

    Equals the ambient dot product for both backends.  Raises if the base
    points differ, which always signals a caller bug.
    """
    scale = 1.0 + float(_norm(np.asarray(x.base)))
    if np.asarray(x.base).shape != np.asarray(y.base).shape or not np.allclose(
        x.base, y.base, rtol=0.0, atol=1e-12 * scale
    ):
        raise ValueError("tangent vectors are attached to different base points")
    return float(np.dot(np.asarray(x.components), np.asarray(y.components)))


@dataclass(frozen=True)
class EdgeQuadrature:
    """Fixed-order quadrature along a geodesic edge.

    ``nodes`` are points on the edge, ``weights`` sum to ``length``.
    """

    length: float
    nodes: np.ndarray
    weights: np.ndarray


class Sphere:
    """Round sphere of radius R embedded in R^3."""

    kind = "sphere"
    dim = 3

    def __init__(self, radius: float = 1.0):
        if radius <= 0.0:
            raise ConfigurationError("sphere radius must be positive")
        self.radius = float(radius)

    def __repr__(self):
        return f"Sphere(radius={self.radius})"

    @property
    def total_area(self) -> float:
        return 4.0 * np.pi * self.radius**2

    def point(self, coords) -> np.ndarray:
        """Canonicalize coordinates: rescale onto the radius-R sphere."""
        p = np.asarray(coords, dtype=float)
        n = _norm(p)
        if np.any(n == 0.0):
            raise ValueError("zero vector cannot be projected to the sphere")
        return p * (self.radius / n)[..., None] if p.ndim > 1 else p * (self.radius / n)

    def random_points(self, n: int, rng) -> np.ndarray:
        v = rng.normal(size=(n, 3))
        return v * (self.radius / _norm(v))[:, None]

    def geodesic_distance(self, p, q):
        """Great-circle distance; broadcasts over leading dimensions.

        Antipodal pairs return exactly pi * radius.
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        cross = np.cross(p, q)
        return self.radius * np.arctan2(_norm(cross), np.sum(p * q, axis=-1))

    def unwrap(self, p, anchor):
        return np.asarray(p, dtype=float)

    def tangent(self, base, components) -> TangentVector:
        base = np.asarray(base, dtype=float)
        comp = np.asarray(components, dtype=float)
        size = _norm(comp)
        if abs(float(np.dot(comp, base))) > 1e-10 * size * self.radius + 1e-300:
            raise ValueError("components are not tangent to the sphere at base")
        return TangentVector(base, comp)

    # -- triangles ---------------------------------------------------------

    def triangle_area(self, a, b, c) -> float:
        """Area of the geodesic triangle (a, b, c) via L'Huilier's formula."""
        area = self._triangle_areas(
            np.asarray(a, dtype=float)[None],
            np.asarray(b, dtype=float)[None],
            np.asarray(c, dtype=float)[None],
        )
        return float(area[0])

    def _triangle_areas(self, p0, p1, p2, check: bool = True) -> np.ndarray:
        # Side central angles; arctan2 form is stable for small triangles.
        ang_a = self.geodesic_distance(p1, p2) / self.radius
        ang_b = self.geodesic_distance(p2, p0) / self.radius
        ang_c = self.geodesic_distance(p0, p1) / self.radius
        s = 0.5 * (ang_a + ang_b + ang_c)
        t = (
            np.tan(0.5 * s)
            * np.tan(0.5 * (s - ang_a))
            * np.tan(0.5 * (s - ang_b))
            * np.tan(0.5 * (s - ang_c))
        )
        if check:
            min_side = np.minimum(np.minimum(ang_a, ang_b), ang_c)
            if np.any(min_side <= 1e-12) or np.any(t <= 0.0):
                raise DegenerateCellError("degenerate spherical triangle")
        excess = 4.0 * np.arctan(np.sqrt(np.maximum(t, 0.0)))
        return excess * self.radius**2

    # -- edges -------------------------------------------------------------

    def geodesic_edge(self, a, b) -> EdgeQuadrature:
        """Quadrature rule along the minor great-circle arc from a to b."""
        length, nodes, weights = self._edge_rules(
            np.asarray(a, dtype=float)[None], np.asarray(b, dtype=float)[None]
        )
        return EdgeQuadrature(float(length[0]), nodes[0], weights[0])

    def _edge_rules(self, a, b):
        r = self.radius
        dots = np.sum(a * b, axis=-1)
        cross = np.cross(a, b)
        theta = np.arctan2(_norm(cross), dots)
        if np.any(theta <= 1e-12):
            raise DegenerateCellError("edge endpoints coincide")
        if np.any(theta >= np.pi - _ANTIPODAL_MARGIN):
            raise AmbiguousGeodesicError("antipodal endpoints admit no unique geodesic")
        # Orthonormal frame (a_hat, w_hat) spanning the arc plane.
        w = b - (dots / r**2)[..., None] * a
        w_hat = w / _norm(w)[..., None]
        ang = theta[..., None] * GL3_NODES  # (n, 3)
        nodes = (
            np.cos(ang)[..., None] * a[..., None, :]
            + np.sin(ang)[..., None] * (r * w_hat)[..., None, :]
        )
        length = r * theta
        weights = length[..., None] * GL3_WEIGHTS
        return length, nodes, weights

    def _left_conormals(self, a, b):
        """Unit conormal on the left cell side; constant along the edge.

        Faces store endpoints so that the left cell's outward direction is
        the right-hand normal of travel a -> b, which on the sphere is the
        negated pole of the edge's great circle.
        """
        pole = np.cross(a, b)
        n = _norm(pole)
        if np.any(n == 0.0):
            raise DegenerateCellError("edge endpoints are parallel")
        return -pole / n[..., None]

    def outward_conormal(self, cell_vertices, edge, q) -> TangentVector:
        """Outward unit conormal of the cell at point q on the given edge."""
        a, b = (np.asarray(p, dtype=float) for p in edge)
        q = np.asarray(q, dtype=float)
        pole = np.cross(a, b)
        npole = _norm(pole)
        if npole == 0.0:
            raise DegenerateCellError("edge endpoints are parallel")
        pole = pole / npole
        # q must lie on the great circle and inside the arc sector.
        if abs(float(np.dot(q, pole))) > 1e-9 * self.radius:
            raise ValueError("point is not on the edge's great circle")
        ang = lambda u, v: self.geodesic_distance(u, v) / self.radius
        if ang(a, q) + ang(q, b) > ang(a, b) + 1e-9:
            raise ValueError("point is outside the edge arc")
        opposite = self._opposite_vertex(cell_vertices, a, b)
        q_hat = q / self.radius
        trans = opposite - np.dot(opposite, q_hat) * q_hat
        side = float(np.dot(pole, trans))
        if abs(side) <= 1e-14 * self.radius:
            raise DegenerateCellError("cell is flat against the edge")
        n = -np.sign(side) * pole
        return TangentVector(q, n)

    def _opposite_vertex(self, cell_vertices, a, b):
        for v in np.asarray(cell_vertices, dtype=float):
            if (
                self.geodesic_distance(v, a) > 1e-9 * self.radius
                and self.geodesic_distance(v, b) > 1e-9 * self.radius
            ):
                return v
        raise DegenerateCellError("cell has no vertex off the edge")


class FlatTorus:
    """Flat square torus [0, P)^2 with the Euclidean metric."""

    kind = "flat_torus"
    dim = 2

    def __init__(self, period: float = 1.0):
        if period <= 0.0:
            raise ConfigurationError("torus period must be positive")
        self.period = float(period)

    def __repr__(self):
        return f"FlatTorus(period={self.period})"

    @property
    def total_area(self) -> float:
        return self.period**2

    def point(self, coords) -> np.ndarray:
        return np.mod(np.asarray(coords, dtype=float), self.period)

    def random_points(self, n: int, rng) -> np.ndarray:
        return rng.uniform(0.0, self.period, size=(n, 2))

    def wrapped_delta(self, d):
        """Reduce a coordinate difference into (-P/2, P/2]."""
        d = np.mod(np.asarray(d, dtype=float), self.period)
        return np.where(d > 0.5 * self.period, d - self.period, d)

    def unwrap(self, p, anchor):
        """Representative of p in the periodic copy nearest to anchor."""
        anchor = np.asarray(anchor, dtype=float)
        return anchor + self.wrapped_delta(np.asarray(p, dtype=float) - anchor)

    def geodesic_distance(self, p, q):
        d = self.wrapped_delta(np.asarray(q, dtype=float) - np.asarray(p, dtype=float))
        return _norm(d)

    def tangent(self, base, components) -> TangentVector:
        return TangentVector(
            np.asarray(base, dtype=float), np.asarray(components, dtype=float)
        )

    def triangle_area(self, a, b, c) -> float:
        """Planar area of the minimal-image triangle anchored at a."""
        a = np.asarray(a, dtype=float)
        u = self.wrapped_delta(np.asarray(b, dtype=float) - a)
        v = self.wrapped_delta(np.asarray(c, dtype=float) - a)
        area = 0.5 * abs(u[0] * v[1] - u[1] * v[0])
        if area <= 1e-14 * self.period**2:
            raise DegenerateCellError("degenerate planar triangle")
        return float(area)

    def _triangle_areas(self, p0, p1, p2, check: bool = True) -> np.ndarray:
        # Operates on unwrapped coordinates (mesh-internal use).
        u = p1 - p0
        v = p2 - p0
        area = 0.5 * np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
        if check and np.any(area <= 1e-14 * self.period**2):
            raise DegenerateCellError("degenerate planar triangle")
        return area

    def geodesic_edge(self, a, b) -> EdgeQuadrature:
        a = np.asarray(a, dtype=float)
        b = self.unwrap(b, a)
        length, nodes, weights = self._edge_rules(a[None], b[None])
        return EdgeQuadrature(float(length[0]), self.point(nodes[0]), weights[0])

    def _edge_rules(self, a, b):
        # Endpoints are expected in a common (unwrapped) frame.
        v = b - a
        length = _norm(v)
        if np.any(length <= 1e-14 * self.period):
            raise DegenerateCellError("edge endpoints coincide")
        nodes = a[..., None, :] + GL3_NODES[:, None] * v[..., None, :]
        weights = length[..., None] * GL3_WEIGHTS
        return length, nodes, weights

    def _left_conormals(self, a, b):
        """Right-hand normal of travel a -> b (unwrapped frame)."""
        v = b - a
        length = _norm(v)
        if np.any(length == 0.0):
            raise DegenerateCellError("edge endpoints coincide")
        t = v / length[..., None]
        return np.stack([t[..., 1], -t[..., 0]], axis=-1)

    def outward_conormal(self, cell_vertices, edge, q) -> TangentVector:
        a = np.asarray(edge[0], dtype=float)
        b = self.unwrap(edge[1], a)
        q = self.unwrap(q, a)
        v = b - a
        length = float(_norm(v))
        if length <= 1e-14 * self.period:
            raise DegenerateCellError("edge endpoints coincide")
        t = v / length
        rel = q - a
        along = float(np.dot(rel, t))
        perp = rel - along * t
        if _norm(perp) > 1e-9 * self.period or not -1e-9 <= along <= length + 1e-9:
            raise ValueError("point is not on the edge")
        n = np.array([t[1], -t[0]])
        opposite = self._opposite_vertex(cell_vertices, a, b)
        inward = opposite - 0.5 * (a + b)
        side = float(np.dot(n, inward))
        if abs(side) <= 1e-14 * self.period:
            raise DegenerateCellError("cell is flat against the edge")
        if side > 0.0:
            n = -n
        return TangentVector(self.point(q), n)

    def _opposite_vertex(self, cell_vertices, a, b):
        for v in np.asarray(cell_vertices, dtype=float):
            v = self.unwrap(v, a)
            if (
                _norm(v - a) > 1e-9 * self.period
                and _norm(v - b) > 1e-9 * self.period
            ):
                return v
        raise DegenerateCellError("cell has no vertex off the edge")
