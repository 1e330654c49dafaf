"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid user-facing configuration (guards, ranges, unknown keys)."""


class DegenerateCellError(ValueError):
    """A triangle or edge collapsed below the geometric tolerance."""


class AmbiguousGeodesicError(ValueError):
    """Endpoints admit more than one minimizing geodesic (antipodal pair)."""


class MeshMismatchError(ValueError):
    """Two objects that must live on the same mesh do not."""
