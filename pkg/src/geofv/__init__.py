"""Finite volume transport on closed curved surfaces.

Monotone first-order finite volume schemes for scalar conservation laws
u_t + div(f(u, x)) = 0 on geodesic triangulations of the sphere and the
flat torus, with built-in certification of the discrete entropy
structure and a refinement harness for L1 convergence studies.
"""

from .diagnostics import (
    DiagnosticRecord,
    EntropyResidualReport,
    discrete_tv,
    entropy_residuals,
    l1_distance,
    l1_error_vs_function,
    total_mass,
)
from .errors import (
    AmbiguousGeodesicError,
    ConfigurationError,
    DegenerateCellError,
    MeshMismatchError,
)
from .flux import FluxModel, SphereRotation, TorusConstant, default_u_range
from .geometry import EdgeQuadrature, FlatTorus, Sphere, TangentVector, tangent_inner
from .harness import (
    ConvergenceTable,
    ExperimentConfig,
    ExperimentResult,
    exact_rotation_solution,
    fit_rate,
    parse_flat_config,
    reference_solution,
    run_experiment,
)
from .initial_conditions import (
    column_step,
    cosine_bell,
    make_initial_condition,
    polar_cap_indicator,
)
from .mesh import (
    Cell,
    Face,
    Mesh,
    ShapeRegularityReport,
    build_icosphere,
    build_sphere_triangulation,
    build_torus_mesh,
)
from .numflux import (
    SCHEMES,
    FaceFluxTable,
    FaceNormalFlux,
    FluxAxiomReport,
    face_flux,
    kruzkov_face_flux,
    verify_flux_axioms,
)
from .solver import (
    CflNumbers,
    RunResult,
    State,
    StepBreakdown,
    cfl_timestep,
    project_initial,
    run,
    step,
)

__version__ = "0.1.0"
