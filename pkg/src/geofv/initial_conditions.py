"""Initial data profiles: one smooth and two bounded-variation datasets.

Every profile is a vectorized callable mapping an (n, dim) array of
points to n values.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

IC_KINDS = ("cosine_bell", "polar_cap_indicator", "column_step")


def cosine_bell(manifold, center, radius: float):
    """Smooth bump 0.5 * (1 + cos(pi * min(d/r, 1))) around ``center``."""
    center = np.asarray(center, dtype=float)
    if radius <= 0.0:
        raise ConfigurationError("cosine bell radius must be positive")

    def profile(points):
        d = manifold.geodesic_distance(points, center)
        return 0.5 * (1.0 + np.cos(np.pi * np.minimum(d / radius, 1.0)))

    return profile


def polar_cap_indicator(manifold, center, radius: float):
    """Indicator of the geodesic ball of the given radius around ``center``."""
    center = np.asarray(center, dtype=float)
    if radius <= 0.0:
        raise ConfigurationError("cap radius must be positive")

    def profile(points):
        return (manifold.geodesic_distance(points, center) < radius).astype(float)

    return profile


def column_step(manifold, x0: float = 0.0, width: float | None = None):
    """Indicator of a vertical strip of the torus starting at x0."""
    if manifold.kind != "flat_torus":
        raise ConfigurationError("column_step is defined on the flat torus only")
    period = manifold.period
    if width is None:
        width = 0.5 * period
    if not 0.0 < width < period:
        raise ConfigurationError("column width must lie in (0, period)")

    def profile(points):
        x = np.asarray(points, dtype=float)[..., 0]
        return (np.mod(x - x0, period) < width).astype(float)

    return profile


def make_initial_condition(kind: str, manifold, **params):
    if kind == "cosine_bell":
        return cosine_bell(manifold, params["center"], params["radius"])
    if kind == "polar_cap_indicator":
        return polar_cap_indicator(manifold, params["center"], params["radius"])
    if kind == "column_step":
        return column_step(
            manifold, params.get("x0", 0.0), params.get("width")
        )
    raise ConfigurationError(f"unknown initial condition {kind!r}")
