"""Shared fixtures and hand-built oracles for the test suite."""

import numpy as np
import pytest

from geofv import (
    FlatTorus,
    Sphere,
    build_icosphere,
    build_sphere_triangulation,
    build_torus_mesh,
)


@pytest.fixture(scope="session")
def unit_sphere():
    return Sphere(1.0)


@pytest.fixture(scope="session")
def torus():
    return FlatTorus(1.0)


@pytest.fixture(scope="session")
def octant_mesh(unit_sphere):
    """The 8-cell octahedral sphere mesh (one cell per sign octant)."""
    vertices = np.array(
        [
            [1, 0, 0], [-1, 0, 0],
            [0, 1, 0], [0, -1, 0],
            [0, 0, 1], [0, 0, -1],
        ],
        dtype=float,
    )
    triangles = np.array(
        [
            [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
            [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
        ]
    )
    return build_sphere_triangulation(unit_sphere, vertices, triangles)


@pytest.fixture(scope="session")
def ico1(unit_sphere):
    return build_icosphere(unit_sphere, 1)


@pytest.fixture(scope="session")
def ico2(unit_sphere):
    return build_icosphere(unit_sphere, 2)


@pytest.fixture(scope="session")
def torus44(torus):
    return build_torus_mesh(torus, 4, 4)


def chain_upwind_oracle(mesh, state, nx):
    """Hand-built 1D upwind oracle for x-transport on the structured torus.

    With velocity (v, 0) the horizontal faces carry no flux, every lower
    triangle exchanges only with its own square's upper triangle across
    the diagonal, and every upper triangle receives from the previous
    column's lower triangle across the vertical face.  Writing the update
    out for both triangle types shows each pulls from one predecessor at
    the same weight lam = 2 * tau * v / dx, so the mesh dynamics equals
    periodic 1D upwind on 2 * nx interleaved half-cells ordered

        [U(0), L(0), U(1), L(1), ..., U(nx - 1), L(nx - 1)].

    Returns the chain values for a row-constant mesh state.
    """
    values = state.values
    chain = np.empty(2 * nx)
    for i in range(nx):
        chain[2 * i] = values[2 * i + 1]  # upper triangle of column i, row 0
        chain[2 * i + 1] = values[2 * i]  # lower triangle of column i, row 0
    return chain


def chain_upwind_step(chain, lam):
    """One step of periodic first-order upwind with weight lam."""
    return (1.0 - lam) * chain + lam * np.roll(chain, 1)


def chain_vs_mesh_error(mesh, state, chain, nx, ny):
    """Largest |mesh cell value - chain value| over every cell."""
    worst = 0.0
    for j in range(ny):
        for i in range(nx):
            sq = j * nx + i
            worst = max(worst, abs(state.values[2 * sq] - chain[2 * i + 1]))
            worst = max(worst, abs(state.values[2 * sq + 1] - chain[2 * i]))
    return worst
