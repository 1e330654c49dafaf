"""Experiment driver: refinement sequences, error tables, fitted rates.

Configs are flat ``key = value`` text files with dotted keys (see
CONFIG_KEYS).  A study builds one mesh per level, projects the initial
data, runs to the final time under the CFL restriction, measures the L1
error against an exact solution (linear advection) or a fine-mesh
reference (Burgers), and fits the error-versus-h slope in log-log space.

Mesh levels mean: icosphere subdivision level on the sphere; nx = ny =
2**level on the torus.  Either way h halves per level.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (
    l1_error_vs_function,
    step_monitor,
    total_mass,
    write_diagnostics_csv,
)
from .errors import ConfigurationError
from .flux import FluxModel, SphereRotation, TorusConstant, default_u_range
from .geometry import FlatTorus, Sphere
from .initial_conditions import make_initial_condition
from .mesh import Mesh, build_icosphere, build_torus_mesh
from .numflux import SCHEMES, FaceFluxTable
from .solver import cfl_timestep, project_initial, run

SUMMARY_SCHEMA_VERSION = 1

CONFIG_KEYS = """\
manifold.kind            sphere | flat_torus
manifold.radius          sphere radius (default 1.0)
manifold.period          torus period (default 1.0)
mesh.levels              comma list, strictly increasing (e.g. 2,3,4,5)
flux.kind                linear_advection | burgers
flux.velocity.kind       sphere_rotation | torus_constant
flux.velocity.axis       rotation axis, e.g. 0,0,1
flux.velocity.omega      angular speed (sphere_rotation)
flux.velocity.vx/.vy     velocity components (torus_constant)
numflux.kind             rusanov | engquist_osher
ic.kind                  cosine_bell | polar_cap_indicator | column_step
ic.center                bell/cap center point
ic.radius                bell/cap radius
ic.x0 / ic.width         column_step placement (torus)
time.final               final time (> 0)
cfl.safety               CFL safety factor in (0, 1] (default 0.5)
entropy.check            true | false (default true)
entropy.c_grid_size      reference values per entropy check (default 9)
reference.level          fine level for Burgers reference runs
verify.samples           sample count for verify-flux (default 10000)
output.dir               output directory
seed                     RNG seed for verifications (default 0)
"""

_KNOWN_KEYS = {
    "manifold.kind", "manifold.radius", "manifold.period",
    "mesh.levels",
    "flux.kind", "flux.velocity.kind", "flux.velocity.axis",
    "flux.velocity.omega", "flux.velocity.vx", "flux.velocity.vy",
    "numflux.kind",
    "ic.kind", "ic.center", "ic.radius", "ic.x0", "ic.width",
    "time.final", "cfl.safety",
    "entropy.check", "entropy.c_grid_size",
    "reference.level", "verify.samples",
    "output.dir", "seed",
}


def parse_flat_config(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigurationError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _floats(text: str):
    return tuple(float(tok) for tok in text.split(","))


@dataclass
class ExperimentConfig:
    manifold_kind: str = "sphere"
    radius: float = 1.0
    period: float = 1.0
    levels: tuple = (2, 3, 4, 5)
    flux_kind: str = "linear_advection"
    velocity_kind: str = "sphere_rotation"
    axis: tuple = (0.0, 0.0, 1.0)
    omega: float = 1.0
    vx: float = 1.0
    vy: float = 0.0
    scheme: str = "rusanov"
    ic_kind: str = "cosine_bell"
    ic_center: tuple | None = None
    ic_radius: float | None = None
    ic_x0: float = 0.0
    ic_width: float | None = None
    t_final: float = 1.0
    safety: float = 0.5
    entropy_check: bool = True
    c_grid_size: int = 9
    reference_level: int | None = None
    verify_samples: int = 10000
    output_dir: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.manifold_kind not in ("sphere", "flat_torus"):
            raise ConfigurationError(f"unknown manifold {self.manifold_kind!r}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        levels = tuple(int(k) for k in self.levels)
        if len(levels) < 1 or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigurationError("mesh.levels must be strictly increasing")
        self.levels = levels
        if self.t_final <= 0.0:
            raise ConfigurationError("time.final must be positive")
        if self.flux_kind == "burgers" and self.reference_level is None:
            self.reference_level = max(levels) + 3

    # -- builders -------------------------------------------------------------

    def build_manifold(self):
        if self.manifold_kind == "sphere":
            return Sphere(self.radius)
        return FlatTorus(self.period)

    def build_mesh(self, manifold, level: int) -> Mesh:
        if self.manifold_kind == "sphere":
            return build_icosphere(manifold, level)
        n = 2**level
        return build_torus_mesh(manifold, n, n)

    def build_velocity(self):
        if self.velocity_kind == "sphere_rotation":
            return SphereRotation(self.axis, self.omega)
        if self.velocity_kind == "torus_constant":
            return TorusConstant(self.vx, self.vy)
        raise ConfigurationError(f"unknown velocity field {self.velocity_kind!r}")

    def build_initial(self, manifold):
        params = {}
        if self.ic_kind in ("cosine_bell", "polar_cap_indicator"):
            center = self.ic_center
            if center is None:
                center = (1.0, 0.0, 0.0) if manifold.kind == "sphere" else (0.5, 0.5)
            params["center"] = manifold.point(np.asarray(center, dtype=float))
            radius = self.ic_radius
            if radius is None:
                scale = manifold.radius if manifold.kind == "sphere" else manifold.period
                radius = scale / 3.0
            params["radius"] = radius
        else:
            params["x0"] = self.ic_x0
            params["width"] = self.ic_width
        return make_initial_condition(self.ic_kind, manifold, **params)

    def as_dict(self) -> dict:
        return {
            "manifold": self.manifold_kind,
            "radius": self.radius,
            "period": self.period,
            "levels": list(self.levels),
            "flux": self.flux_kind,
            "velocity": self.velocity_kind,
            "scheme": self.scheme,
            "ic": self.ic_kind,
            "t_final": self.t_final,
            "cfl_safety": self.safety,
            "entropy_check": self.entropy_check,
            "reference_level": self.reference_level,
            "seed": self.seed,
        }

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - _KNOWN_KEYS
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        get = raw.get
        if "manifold.kind" in raw:
            kw["manifold_kind"] = get("manifold.kind")
        if "manifold.radius" in raw:
            kw["radius"] = float(get("manifold.radius"))
        if "manifold.period" in raw:
            kw["period"] = float(get("manifold.period"))
        if "mesh.levels" in raw:
            kw["levels"] = tuple(int(tok) for tok in get("mesh.levels").split(","))
        if "flux.kind" in raw:
            kw["flux_kind"] = get("flux.kind")
        if "flux.velocity.kind" in raw:
            kw["velocity_kind"] = get("flux.velocity.kind")
        if "flux.velocity.axis" in raw:
            kw["axis"] = _floats(get("flux.velocity.axis"))
        if "flux.velocity.omega" in raw:
            kw["omega"] = float(get("flux.velocity.omega"))
        if "flux.velocity.vx" in raw:
            kw["vx"] = float(get("flux.velocity.vx"))
        if "flux.velocity.vy" in raw:
            kw["vy"] = float(get("flux.velocity.vy"))
        if "numflux.kind" in raw:
            kw["scheme"] = get("numflux.kind")
        if "ic.kind" in raw:
            kw["ic_kind"] = get("ic.kind")
        if "ic.center" in raw:
            kw["ic_center"] = _floats(get("ic.center"))
        if "ic.radius" in raw:
            kw["ic_radius"] = float(get("ic.radius"))
        if "ic.x0" in raw:
            kw["ic_x0"] = float(get("ic.x0"))
        if "ic.width" in raw:
            kw["ic_width"] = float(get("ic.width"))
        if "time.final" in raw:
            kw["t_final"] = float(get("time.final"))
        if "cfl.safety" in raw:
            kw["safety"] = float(get("cfl.safety"))
        if "entropy.check" in raw:
            value = get("entropy.check").lower()
            if value not in ("true", "false"):
                raise ConfigurationError("entropy.check must be true or false")
            kw["entropy_check"] = value == "true"
        if "entropy.c_grid_size" in raw:
            kw["c_grid_size"] = int(get("entropy.c_grid_size"))
        if "reference.level" in raw:
            kw["reference_level"] = int(get("reference.level"))
        if "verify.samples" in raw:
            kw["verify_samples"] = int(get("verify.samples"))
        if "output.dir" in raw:
            kw["output_dir"] = get("output.dir")
        if "seed" in raw:
            kw["seed"] = int(get("seed"))
        return cls(**kw)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls.from_mapping(parse_flat_config(text))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())


# -- rate fitting -------------------------------------------------------------


def fit_rate(hs, errors):
    """Least-squares slope of log(error) against log(h).

    Zero errors are flagged exact and excluded; the RMS residual of the
    fit is returned alongside the slope.
    """
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if hs.shape != errors.shape or hs.size < 3:
        raise ConfigurationError("rate fit needs at least 3 (h, error) rows")
    keep = errors > 0.0
    exact = [float(h) for h in hs[~keep]]
    if np.count_nonzero(keep) < 2:
        return float("nan"), float("nan"), exact
    x = np.log(hs[keep])
    y = np.log(errors[keep])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    residual = float(np.sqrt(np.mean((y - fitted) ** 2)))
    return float(slope), residual, exact


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    h: float
    tau: float
    l1_error: float
    wall_s: float


@dataclass
class ConvergenceTable:
    rows: list
    fitted_rate: float
    fit_residual: float
    exact_levels: list = field(default_factory=list)

    def errors(self):
        return [row.l1_error for row in self.rows]


# -- exact and reference solutions ---------------------------------------------


def _rodrigues(points, axis, angle):
    axis = np.asarray(axis, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    cross = np.cross(axis, points)
    axial = points @ axis
    return c * points + s * cross + (1.0 - c) * axial[..., None] * axis


def exact_rotation_solution(model: FluxModel, u0, t: float):
    """Entropy solution of linear advection along the built-in flows.

    Transport along a divergence-free flow leaves values constant on the
    characteristics, so u(t, x) = u0 at the time-t backward image of x.
    """
    if model.kind != "linear_advection":
        raise ConfigurationError("no exact solution for this flux model")
    velocity = model.velocity
    if velocity.kind == "sphere_rotation":

        def solution(points):
            back = _rodrigues(
                np.asarray(points, dtype=float), velocity.axis, -velocity.omega * t
            )
            return u0(back)

        return solution
    if velocity.kind == "torus_constant":
        period = model.manifold.period
        shift = np.array([velocity.vx, velocity.vy]) * t

        def solution(points):
            return u0(np.mod(np.asarray(points, dtype=float) - shift, period))

        return solution
    raise ConfigurationError(f"unknown velocity field {velocity.kind!r}")


@dataclass
class ReferenceSolution:
    """Fine-mesh run exposed as a pointwise-sampled function."""

    level: int
    mesh: Mesh
    state: object
    records: list
    u0_min: float
    u0_max: float

    def as_function(self):
        mesh = self.mesh
        values = self.state.values
        if mesh.manifold.kind == "flat_torus":
            period = mesh.manifold.period
            n = int(round(np.sqrt(mesh.num_cells / 2)))
            dx = period / n

            def sample(points):
                pts = np.mod(np.asarray(points, dtype=float), period)
                fi = pts[:, 0] / dx
                fj = pts[:, 1] / dx
                i = np.minimum(fi.astype(np.int64), n - 1)
                j = np.minimum(fj.astype(np.int64), n - 1)
                upper = (fj - j) > (fi - i)
                cid = 2 * (j * n + i) + upper
                return values[cid]

            return sample

        from scipy.spatial import cKDTree

        centers = mesh.cell_coords.mean(axis=1)
        norms = np.sqrt(np.sum(centers * centers, axis=-1))
        centers = centers * (mesh.manifold.radius / norms)[:, None]
        tree = cKDTree(centers)

        def sample(points):
            _, idx = tree.query(np.asarray(points, dtype=float))
            return values[idx]

        return sample


def _run_level(config: ExperimentConfig, manifold, level: int, entropy: bool):
    """Build, project, and advance one refinement level."""
    t0 = time.perf_counter()
    mesh = config.build_mesh(manifold, level)
    u0 = config.build_initial(manifold)
    state0 = project_initial(mesh, u0)
    model = FluxModel(
        manifold,
        config.flux_kind,
        config.build_velocity(),
        u_range=default_u_range(state0.values),
    )
    table = FaceFluxTable(mesh, model, config.scheme)
    cfl = cfl_timestep(mesh, model, config.safety)
    monitor = step_monitor(
        mesh,
        table,
        cfl_number=cfl.tau * cfl.sup_ratio * cfl.lipschitz,
        entropy=entropy,
        c_grid_size=config.c_grid_size,
        c_bounds=(float(state0.values.min()), float(state0.values.max())),
    )
    result = run(
        mesh,
        model,
        table,
        state0,
        config.t_final,
        cfl.tau,
        hooks=(monitor,),
        with_breakdown=entropy,
    )
    wall = time.perf_counter() - t0
    return {
        "level": level,
        "mesh": mesh,
        "model": model,
        "u0": u0,
        "state0": state0,
        "state": result.state,
        "records": [rec["record"] for rec in result.records],
        "cfl": cfl,
        "wall": wall,
    }


def reference_solution(config: ExperimentConfig, fine_level: int) -> ReferenceSolution:
    """Same scheme run at a strictly finer level, for fluxes with no
    closed-form solution.  Coarse-level errors are then measured against
    nearest-fine-cell point samples of this state."""
    if fine_level <= max(config.levels):
        raise ConfigurationError("reference level must exceed every study level")
    manifold = config.build_manifold()
    res = _run_level(config, manifold, fine_level, entropy=False)
    return ReferenceSolution(
        level=fine_level,
        mesh=res["mesh"],
        state=res["state"],
        records=res["records"],
        u0_min=float(res["state0"].values.min()),
        u0_max=float(res["state0"].values.max()),
    )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    table: ConvergenceTable
    levels: list  # per-level dicts from _run_level plus "l1_error"
    reference: ReferenceSolution | None
    summary: dict


def run_experiment(config: ExperimentConfig, output_dir=None) -> ExperimentResult:
    """Run the refinement study and assemble table, rate, and outputs.

    Per-level failures are recorded with an error marker in the summary;
    completed levels are still written out.
    """
    manifold = config.build_manifold()
    output_dir = output_dir or config.output_dir

    reference = None
    exact_at_final = None
    if config.flux_kind == "linear_advection":
        u0 = config.build_initial(manifold)
        model = FluxModel(manifold, config.flux_kind, config.build_velocity())
        exact_at_final = exact_rotation_solution(model, u0, config.t_final)
    else:
        fine = config.reference_level
        if fine is None:
            raise ConfigurationError("reference.level is required for this flux")
        reference = reference_solution(config, fine)
        exact_at_final = reference.as_function()

    levels = []
    failures = []
    for level in config.levels:
        try:
            res = _run_level(config, manifold, level, entropy=config.entropy_check)
            res["l1_error"] = l1_error_vs_function(
                res["mesh"], res["state"], exact_at_final
            )
            levels.append(res)
        except Exception as exc:  # record and continue with remaining levels
            failures.append({"level": level, "error": str(exc)})

    rows = [
        ConvergenceRow(
            level=res["level"],
            h=res["mesh"].h,
            tau=res["cfl"].tau,
            l1_error=res["l1_error"],
            wall_s=res["wall"],
        )
        for res in levels
    ]
    if len(rows) >= 3:
        rate, residual, exact_levels = fit_rate(
            [r.h for r in rows], [r.l1_error for r in rows]
        )
    else:
        rate, residual, exact_levels = float("nan"), float("nan"), []
    table = ConvergenceTable(rows, rate, residual, exact_levels)

    errors_list = table.errors()
    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "config": config.as_dict(),
        "rows": [
            {
                "level": r.level,
                "h": r.h,
                "tau": r.tau,
                "l1_error": r.l1_error,
                "wall_s": r.wall_s,
            }
            for r in rows
        ],
        "fitted_rate": rate,
        "fit_residual": residual,
        "errors_strictly_decreasing": all(
            b < a for a, b in zip(errors_list, errors_list[1:])
        )
        and len(errors_list) > 1,
        "tau_over_h": [res["cfl"].tau_over_h for res in levels],
        "entropy_violations_total": int(
            sum(rec.entropy_violations for res in levels for rec in res["records"])
        ),
        "mass_initial": [total_mass(res["mesh"], res["state0"]) for res in levels],
        "mass_final": [total_mass(res["mesh"], res["state"]) for res in levels],
        "failures": failures,
    }
    if failures:
        summary["error"] = "one or more levels failed"

    result = ExperimentResult(
        config=config,
        table=table,
        levels=levels,
        reference=reference,
        summary=summary,
    )
    if output_dir is not None:
        _write_outputs(result, output_dir)
    return result


def _write_outputs(result: ExperimentResult, output_dir):
    import os

    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, "convergence.csv")
    with open(path, "w") as fh:
        fh.write("level,h,tau,l1_error,wall_s\n")
        for r in result.table.rows:
            fh.write(f"{r.level},{r.h!r},{r.tau!r},{r.l1_error!r},{r.wall_s!r}\n")
    for res in result.levels:
        write_diagnostics_csv(
            os.path.join(output_dir, f"diagnostics-level{res['level']}.csv"),
            res["records"],
        )
    with open(os.path.join(output_dir, "summary.json"), "w") as fh:
        json.dump(result.summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
