"""Per-step certification: entropy inequalities, mass, bounds, variation.

The central assertable property is the per-face discrete entropy
inequality for the Kruzkov entropies U(u, c) = |u - c|: for every cell K,
face e and reference value c,

    |one_dim_updates[K,e] - c| - |u_K - c|
        + w_K * (F(u_K, u_Ke, c) - F(u_K, u_K, c))  <=  0

up to rounding, where F is the Kruzkov numerical entropy flux and w_K the
cell's tau * p_K / |K| factor.  The shifted form replaces the one
dimensional update by face_values[K,e] and is bounded by the shift term
D[K,e] = |face_values - c| - |one_dim_updates - c|; both forms are
evaluated and their algebraic identity is checked.

Tolerances are pure rounding allowances: 1e-10 times max(1, |a|_sup *
w_K) per cell, with |a|_sup the largest face flux magnitude on the value
range.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .numflux import FaceFluxTable
from .solver import State, StepBreakdown

DIAGNOSTIC_CSV_FIELDS = (
    "step",
    "time",
    "mass",
    "min",
    "max",
    "tv",
    "max_entropy_residual",
    "cfl_number",
)


@dataclass(frozen=True)
class EntropyResidualReport:
    """Residuals of one step over all (cell, face, c) entries.

    ``residuals``, ``shifted_residuals`` and ``shift`` have shape
    (num_cells, 3, len(c_grid)); the scalar summaries are what the
    per-step monitor keeps.
    """

    time_index: int
    c_grid: np.ndarray
    residuals: np.ndarray
    shifted_residuals: np.ndarray
    shift: np.ndarray  # per-entry D term; ~0 for divergence-free fields
    max_residual: float
    violations: int
    worst: tuple  # (cell, face slot, c index) of the largest residual
    max_shifted_residual: float
    shifted_violations: int
    max_shift: float
    identity_gap: float  # max |shifted - plain| residual mismatch
    tolerance_scale: float


def total_mass(mesh: Mesh, state: State) -> float:
    return float(mesh.cell_area @ state.values)


def discrete_tv(mesh: Mesh, state: State) -> float:
    """Discrete total variation: sum over faces of |e| * |jump across e|."""
    jump = state.values[mesh.face_left] - state.values[mesh.face_right]
    return float(mesh.face_length @ np.abs(jump))


def l1_distance(mesh: Mesh, s1: State, s2: State) -> float:
    """Area-weighted L1 distance between two states on the same mesh."""
    from .errors import MeshMismatchError

    if s1.values.shape != (mesh.num_cells,) or s2.values.shape != (mesh.num_cells,):
        raise MeshMismatchError("states do not match the mesh cell count")
    return float(mesh.cell_area @ np.abs(s1.values - s2.values))


def l1_error_vs_function(mesh: Mesh, state: State, exact, depth: int = 3) -> float:
    """Integral of |u_K - exact(x)| using the mesh cell quadrature."""
    total = 0.0
    for start, stop, nodes, weights in mesh.cell_quadrature_chunks(depth=depth):
        flat = nodes.reshape(-1, nodes.shape[-1])
        sampled = np.asarray(exact(flat), dtype=float).reshape(weights.shape)
        diff = np.abs(state.values[start:stop, None] - sampled)
        total += float(np.sum(weights * diff))
    return total


def default_c_grid(state: State, bounds=None, size: int = 9) -> np.ndarray:
    """Equispaced reference values spanning the data range."""
    if bounds is None:
        bounds = (float(state.values.min()), float(state.values.max()))
    return np.linspace(bounds[0], bounds[1], size)


def adaptive_c_grid(mesh: Mesh, state: State, bounds, size: int = 9) -> np.ndarray:
    """Default grid plus the two cell values at the largest face jump.

    The entropy inequalities are hardest near the data values themselves.
    """
    grid = default_c_grid(state, bounds, size)
    jump = np.abs(state.values[mesh.face_left] - state.values[mesh.face_right])
    worst = int(np.argmax(jump))
    extra = np.array(
        [state.values[mesh.face_left[worst]], state.values[mesh.face_right[worst]]]
    )
    return np.concatenate([grid, extra])


def entropy_residuals(
    mesh: Mesh,
    table: FaceFluxTable,
    state: State,
    breakdown: StepBreakdown,
    c_grid,
) -> EntropyResidualReport:
    """Evaluate both entropy-inequality forms for one completed step.

    ``state`` is the state the step advanced (the breakdown's source).
    """
    if breakdown.time_index != state.time_index:
        raise ValueError("breakdown does not belong to the given state")
    if table.mesh is not mesh:
        from .errors import MeshMismatchError

        raise MeshMismatchError("flux table was built for a different mesh")

    c = np.asarray(c_grid, dtype=float)[None, None, :]
    u = state.values
    u_k = u[:, None, None]
    u_n = u[table.cell_neighbor][:, :, None]
    alpha = table.cell_alpha[:, :, None]
    speed = table.cell_speed[:, :, None]
    w = breakdown.cell_cfl[:, None, None]
    tilde = breakdown.one_dim_updates[:, :, None]
    shifted = breakdown.face_values[:, :, None]

    flux_vs_neighbor = table.kruzkov(u_k, u_n, c, alpha=alpha, speed=speed)
    # With equal arguments both schemes return the face average exactly,
    # so F(u, u, c) collapses to a(u v c) - a(u ^ c).
    profile = table.model.profile
    flux_frozen = alpha * (profile(np.maximum(u_k, c)) - profile(np.minimum(u_k, c)))
    transport = w * (flux_vs_neighbor - flux_frozen)

    ent_tilde = np.abs(tilde - c)
    ent_state = np.abs(u_k - c)
    residual = ent_tilde - ent_state + transport

    shift = np.abs(shifted - c) - ent_tilde
    residual_shifted = np.abs(shifted - c) - ent_state + transport - shift

    lo, hi = table.model.u_range
    a_sup = float(np.abs(table.face_alpha).max()) * max(
        abs(table.model.profile(lo)), abs(table.model.profile(hi))
    )
    tol = 1e-10 * np.maximum(1.0, a_sup * breakdown.cell_cfl)[:, None, None]

    worst_flat = int(np.argmax(residual))
    return EntropyResidualReport(
        time_index=state.time_index,
        c_grid=np.asarray(c_grid, dtype=float),
        residuals=residual,
        shifted_residuals=residual_shifted,
        shift=shift,
        max_residual=float(residual.max()),
        violations=int(np.count_nonzero(residual > tol)),
        worst=tuple(int(k) for k in np.unravel_index(worst_flat, residual.shape)),
        max_shifted_residual=float(residual_shifted.max()),
        shifted_violations=int(np.count_nonzero(residual_shifted > tol)),
        max_shift=float(np.abs(shift).max()),
        identity_gap=float(np.abs(residual_shifted - residual).max()),
        tolerance_scale=float(tol.max()),
    )


@dataclass(frozen=True)
class DiagnosticRecord:
    """One step's bookkeeping row, serialized to CSV by the harness."""

    step: int
    time: float
    mass: float
    min: float
    max: float
    tv: float
    max_entropy_residual: float
    cfl_number: float
    entropy_violations: int = 0

    def csv_row(self) -> dict:
        return {
            "step": self.step,
            "time": repr(self.time),
            "mass": repr(self.mass),
            "min": repr(self.min),
            "max": repr(self.max),
            "tv": repr(self.tv),
            "max_entropy_residual": repr(self.max_entropy_residual),
            "cfl_number": repr(self.cfl_number),
        }


def step_monitor(
    mesh: Mesh,
    table: FaceFluxTable,
    cfl_number: float,
    entropy: bool = True,
    c_grid_size: int = 9,
    c_bounds=None,
):
    """Build a run hook that emits a DiagnosticRecord per step.

    ``c_bounds`` fixes the entropy reference-value span (normally the
    initial data range); the grid also tracks the current largest jump.
    """

    def hook(prev: State, new: State, breakdown, tau_step):
        if entropy and breakdown is not None:
            grid = adaptive_c_grid(mesh, prev, c_bounds, c_grid_size)
            report = entropy_residuals(mesh, table, prev, breakdown, grid)
            max_res = report.max_residual
            violations = report.violations + report.shifted_violations
        else:
            max_res = float("nan")
            violations = 0
        record = DiagnosticRecord(
            step=new.time_index,
            time=new.time,
            mass=total_mass(mesh, new),
            min=float(new.values.min()),
            max=float(new.values.max()),
            tv=discrete_tv(mesh, new),
            max_entropy_residual=max_res,
            cfl_number=cfl_number,
            entropy_violations=violations,
        )
        return {"record": record}

    return hook


def write_diagnostics_csv(path, records):
    """Write the per-step records (hook dicts or DiagnosticRecords)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=DIAGNOSTIC_CSV_FIELDS)
        writer.writeheader()
        for rec in records:
            if isinstance(rec, dict):
                rec = rec["record"]
            writer.writerow(rec.csv_row())
