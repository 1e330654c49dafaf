"""Geodesic triangulations: icosphere subdivision and structured tori.

A mesh is immutable after construction.  Cells are geodesic triangles,
every face is shared by exactly two cells (the surfaces are closed), and
all per-cell / per-face geometric quantities are cached as flat numpy
arrays because flux evaluation is the hot loop downstream.

Face orientation convention: each face stores its endpoints so that the
*left* cell traverses them in its own counterclockwise boundary order.
The stored conormal is then the left cell's outward unit conormal; the
right cell's conormal is its exact negative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateCellError
from .geometry import FlatTorus, Sphere

MAX_ICOSPHERE_LEVEL = 8
MAX_TORUS_CELLS_PER_AXIS = 4096

MESH_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Cell:
    """Read-only view of one triangular cell."""

    id: int
    vertices: np.ndarray  # vertex ids, (3,)
    points: np.ndarray  # vertex coordinates, (3, dim), cell-local frame
    area: float
    perimeter: float
    diameter: float
    faces: np.ndarray  # incident face ids, (3,)
    face_signs: np.ndarray  # +1 where this cell is the face's left cell


@dataclass(frozen=True)
class Face:
    """Read-only view of one face (geodesic edge between two cells)."""

    id: int
    vertices: np.ndarray  # endpoint vertex ids, (2,)
    points: np.ndarray  # endpoint coordinates, (2, dim), left-cell order
    length: float
    left: int
    right: int
    nodes: np.ndarray  # quadrature nodes, (3, dim)
    weights: np.ndarray  # quadrature weights, (3,), sum to length
    conormals: np.ndarray  # left-cell outward conormal per node, (3, dim)


@dataclass(frozen=True)
class ShapeRegularityReport:
    """Per-cell ratios h_K * p_K / |K| and the worst two-sided bound."""

    gamma2: float
    ratios: np.ndarray


class Mesh:
    def __init__(
        self,
        manifold,
        vertices,
        cell_vertices,
        cell_coords,
        face_vertices,
        face_coords,
        face_left,
        face_right,
        cell_faces,
        cell_face_sign,
    ):
        self.manifold = manifold
        self.vertices = np.asarray(vertices, dtype=float)
        self.cell_vertices = np.asarray(cell_vertices, dtype=np.int64)
        self.cell_coords = np.asarray(cell_coords, dtype=float)
        self.face_vertices = np.asarray(face_vertices, dtype=np.int64)
        self.face_coords = np.asarray(face_coords, dtype=float)
        self.face_left = np.asarray(face_left, dtype=np.int64)
        self.face_right = np.asarray(face_right, dtype=np.int64)
        self.cell_faces = np.asarray(cell_faces, dtype=np.int64)
        self.cell_face_sign = np.asarray(cell_face_sign, dtype=float)

        self._validate_topology()
        self._compute_geometry()
        self._quadrature_cache = {}

    # -- construction helpers ------------------------------------------------

    def _validate_topology(self):
        nc = self.cell_vertices.shape[0]
        nf = self.face_vertices.shape[0]
        if np.any(self.face_left == self.face_right):
            raise ValueError("face with identical cells on both sides")
        sides = np.zeros(nf, dtype=np.int64)
        lefts = np.zeros(nf, dtype=np.int64)
        np.add.at(sides, self.cell_faces.ravel(), 1)
        np.add.at(lefts, self.cell_faces.ravel(), (self.cell_face_sign.ravel() > 0))
        if np.any(sides != 2) or np.any(lefts != 1):
            raise ValueError("every face must be visited once per side")
        expected_chi = 2 if self.manifold.kind == "sphere" else 0
        chi = self.vertices.shape[0] - nf + nc
        if chi != expected_chi:
            raise ValueError(f"Euler characteristic {chi} != {expected_chi}")

    def _compute_geometry(self):
        m = self.manifold
        a, b = self.face_coords[:, 0], self.face_coords[:, 1]
        self.face_length, self.face_nodes, self.face_weights = m._edge_rules(a, b)
        conormal = m._left_conormals(a, b)
        self.face_conormals = np.repeat(conormal[:, None, :], 3, axis=1)
        if m.kind == "flat_torus":
            # Node coordinates are stored canonically for field evaluation.
            self.face_nodes = m.point(self.face_nodes)

        p0, p1, p2 = (self.cell_coords[:, k] for k in range(3))
        self.cell_area = m._triangle_areas(p0, p1, p2)
        self.cell_perimeter = self.face_length[self.cell_faces].sum(axis=1)
        d01 = m.geodesic_distance(p0, p1)
        d12 = m.geodesic_distance(p1, p2)
        d20 = m.geodesic_distance(p2, p0)
        self.cell_diameter = np.maximum(np.maximum(d01, d12), d20)
        self.h = float(self.cell_diameter.max())
        self._sup_ratio = float((self.cell_perimeter / self.cell_area).max())

        total = float(self.cell_area.sum())
        if abs(total - m.total_area) > 1e-6 * m.total_area:
            raise ValueError("cells do not tile the surface")

    # -- basic queries --------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cell_vertices.shape[0]

    @property
    def num_faces(self) -> int:
        return self.face_vertices.shape[0]

    def euler_characteristic(self) -> int:
        return self.num_vertices - self.num_faces + self.num_cells

    def cell(self, i: int) -> Cell:
        return Cell(
            id=i,
            vertices=self.cell_vertices[i],
            points=self.cell_coords[i],
            area=float(self.cell_area[i]),
            perimeter=float(self.cell_perimeter[i]),
            diameter=float(self.cell_diameter[i]),
            faces=self.cell_faces[i],
            face_signs=self.cell_face_sign[i],
        )

    def face(self, i: int) -> Face:
        return Face(
            id=i,
            vertices=self.face_vertices[i],
            points=self.face_coords[i],
            length=float(self.face_length[i]),
            left=int(self.face_left[i]),
            right=int(self.face_right[i]),
            nodes=self.face_nodes[i],
            weights=self.face_weights[i],
            conormals=self.face_conormals[i],
        )

    def sup_perimeter_area_ratio(self) -> float:
        """sup over cells of p_K / |K|; enters the time step restriction."""
        return self._sup_ratio

    def audit_shape_regularity(self) -> ShapeRegularityReport:
        ratios = self.cell_diameter * self.cell_perimeter / self.cell_area
        gamma2 = float(max(ratios.max(), (1.0 / ratios).max()))
        return ShapeRegularityReport(gamma2=gamma2, ratios=ratios)

    # -- cell quadrature -------------------------------------------------------

    def cell_quadrature_chunks(self, depth: int = 3, chunk: int = 4096):
        """Yield (start, stop, nodes, weights) blocks of the cell quadrature.

        Each cell is split 4-ways ``depth`` times (midpoints reprojected on
        the sphere) and integrated with the midpoint rule on the resulting
        sub-triangles.  Sub-areas are exact, so the rule reproduces the cell
        area and is exact for constants at any depth.  Chunking bounds peak
        memory on fine meshes.
        """
        m = self.manifold
        for start in range(0, self.num_cells, chunk):
            stop = min(start + chunk, self.num_cells)
            tri = self.cell_coords[start:stop][:, None, :, :]  # (n, 1, 3, dim)
            for _ in range(depth):
                a, b, c = tri[:, :, 0], tri[:, :, 1], tri[:, :, 2]
                ab = self._midpoint(a, b)
                bc = self._midpoint(b, c)
                ca = self._midpoint(c, a)
                tri = np.concatenate(
                    [
                        np.stack([a, ab, ca], axis=2),
                        np.stack([ab, b, bc], axis=2),
                        np.stack([ca, bc, c], axis=2),
                        np.stack([ab, bc, ca], axis=2),
                    ],
                    axis=1,
                )
            weights = m._triangle_areas(
                tri[:, :, 0], tri[:, :, 1], tri[:, :, 2], check=False
            )
            centers = tri.mean(axis=2)
            if m.kind == "sphere":
                norms = np.sqrt(np.sum(centers * centers, axis=-1))
                nodes = centers * (m.radius / norms)[..., None]
            else:
                nodes = m.point(centers)
            yield start, stop, nodes, weights

    def _midpoint(self, a, b):
        mid = 0.5 * (a + b)
        if self.manifold.kind == "sphere":
            norms = np.sqrt(np.sum(mid * mid, axis=-1))
            mid = mid * (self.manifold.radius / norms)[..., None]
        return mid

    # -- export ----------------------------------------------------------------

    def to_json_dict(self) -> dict:
        manifold = {"kind": self.manifold.kind}
        if self.manifold.kind == "sphere":
            manifold["radius"] = self.manifold.radius
        else:
            manifold["period"] = self.manifold.period
        return {
            "schema_version": MESH_SCHEMA_VERSION,
            "manifold": manifold,
            "h": self.h,
            "vertices": self.vertices.tolist(),
            "cells": self.cell_vertices.tolist(),
            "faces": [
                {
                    "id": i,
                    "vertices": self.face_vertices[i].tolist(),
                    "left": int(self.face_left[i]),
                    "right": int(self.face_right[i]),
                    "length": float(self.face_length[i]),
                }
                for i in range(self.num_faces)
            ],
        }

    def export_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


# -- sphere builders -------------------------------------------------------

_PHI = (1.0 + np.sqrt(5.0)) / 2.0

ICOSAHEDRON_VERTICES = np.array(
    [
        [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
        [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
        [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
    ],
    dtype=float,
)

ICOSAHEDRON_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def build_sphere_triangulation(sphere: Sphere, vertices, triangles) -> Mesh:
    """Assemble a mesh from sphere vertices and triangle vertex triples.

    Triangles are reoriented counterclockwise as seen from outside, faces
    are extracted from shared edges.
    """
    if sphere.kind != "sphere":
        raise ConfigurationError("use build_torus_mesh for the flat torus")
    vertices = sphere.point(np.asarray(vertices, dtype=float))
    triangles = np.asarray(triangles, dtype=np.int64)
    normals = np.cross(
        vertices[triangles[:, 1]] - vertices[triangles[:, 0]],
        vertices[triangles[:, 2]] - vertices[triangles[:, 0]],
    )
    outward = np.sum(normals * vertices[triangles].mean(axis=1), axis=-1)
    flip = outward < 0.0
    triangles = triangles.copy()
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    nc = triangles.shape[0]
    face_key = {}
    face_vertices = []
    face_left = []
    face_right = []
    cell_faces = np.empty((nc, 3), dtype=np.int64)
    cell_face_sign = np.empty((nc, 3), dtype=float)
    for ci in range(nc):
        v0, v1, v2 = triangles[ci]
        for slot, (a, b) in enumerate(((v0, v1), (v1, v2), (v2, v0))):
            key = (a, b) if a < b else (b, a)
            idx = face_key.get(key)
            if idx is None:
                idx = len(face_vertices)
                face_key[key] = idx
                face_vertices.append((a, b))
                face_left.append(ci)
                face_right.append(-1)
                cell_face_sign[ci, slot] = 1.0
            else:
                if face_vertices[idx] != (b, a):
                    raise ValueError("inconsistent triangle orientation at a face")
                if face_right[idx] != -1:
                    raise ValueError("face shared by more than two cells")
                face_right[idx] = ci
                cell_face_sign[ci, slot] = -1.0
            cell_faces[ci, slot] = idx
    face_vertices = np.asarray(face_vertices, dtype=np.int64)
    face_right = np.asarray(face_right, dtype=np.int64)
    if np.any(face_right < 0):
        raise ValueError("open boundary: surface is not closed")

    return Mesh(
        manifold=sphere,
        vertices=vertices,
        cell_vertices=triangles,
        cell_coords=vertices[triangles],
        face_vertices=face_vertices,
        face_coords=vertices[face_vertices],
        face_left=np.asarray(face_left, dtype=np.int64),
        face_right=face_right,
        cell_faces=cell_faces,
        cell_face_sign=cell_face_sign,
    )


def build_icosphere(sphere: Sphere, level: int) -> Mesh:
    """Icosahedron subdivided ``level`` times: 20 * 4**level cells.

    Each subdivision splits every triangle at its edge midpoints and
    reprojects the midpoints onto the sphere, giving a quasi-uniform
    family with bounded shape-regularity.
    """
    if not 0 <= int(level) <= MAX_ICOSPHERE_LEVEL:
        raise ConfigurationError(
            f"icosphere level must be in [0, {MAX_ICOSPHERE_LEVEL}]"
        )
    verts = [v / np.linalg.norm(v) for v in ICOSAHEDRON_VERTICES]
    tris = [tuple(t) for t in ICOSAHEDRON_FACES]
    for _ in range(int(level)):
        midpoint_of = {}

        def midpoint(ia, ib):
            key = (ia, ib) if ia < ib else (ib, ia)
            idx = midpoint_of.get(key)
            if idx is None:
                mid = verts[ia] + verts[ib]
                verts.append(mid / np.linalg.norm(mid))
                idx = len(verts) - 1
                midpoint_of[key] = idx
            return idx

        refined = []
        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        tris = refined
    vertices = sphere.radius * np.asarray(verts)
    return build_sphere_triangulation(sphere, vertices, np.asarray(tris))


# -- torus builder ----------------------------------------------------------


def build_torus_mesh(torus: FlatTorus, nx: int, ny: int) -> Mesh:
    """Structured triangulation of the flat torus: 2 * nx * ny cells.

    Each grid square (i, j) is split along the diagonal from its lower-left
    to its upper-right corner into a lower triangle L and an upper triangle
    U, with cell ids 2 * (j * nx + i) and 2 * (j * nx + i) + 1.  All face
    geometry is built on the unwrapped coordinates of the local grid patch,
    so the three oriented edge integrals of every cell cancel exactly.
    """
    nx, ny = int(nx), int(ny)
    if nx < 2 or ny < 2:
        raise ConfigurationError("torus mesh needs nx >= 2 and ny >= 2")
    if nx > MAX_TORUS_CELLS_PER_AXIS or ny > MAX_TORUS_CELLS_PER_AXIS:
        raise ConfigurationError(
            f"torus mesh is capped at {MAX_TORUS_CELLS_PER_AXIS} cells per axis"
        )
    p = torus.period
    dx, dy = p / nx, p / ny
    nsq = nx * ny

    sq = np.arange(nsq)
    i = sq % nx
    j = sq // nx
    i1 = (i + 1) % nx
    j1 = (j + 1) % ny
    vid = lambda ii, jj: jj * nx + ii

    gx, gy = np.meshgrid(np.arange(nx) * dx, np.arange(ny) * dy, indexing="xy")
    vertices = np.stack([gx.ravel(), gy.ravel()], axis=1)

    x0, x1 = i * dx, (i + 1) * dx
    y0, y1 = j * dy, (j + 1) * dy

    nc = 2 * nsq
    cell_vertices = np.empty((nc, 3), dtype=np.int64)
    cell_coords = np.empty((nc, 3, 2))
    lower, upper = 2 * sq, 2 * sq + 1
    cell_vertices[lower] = np.stack([vid(i, j), vid(i1, j), vid(i1, j1)], axis=1)
    cell_vertices[upper] = np.stack([vid(i, j), vid(i1, j1), vid(i, j1)], axis=1)
    cell_coords[lower] = np.stack(
        [np.stack([x0, y0], 1), np.stack([x1, y0], 1), np.stack([x1, y1], 1)], axis=1
    )
    cell_coords[upper] = np.stack(
        [np.stack([x0, y0], 1), np.stack([x1, y1], 1), np.stack([x0, y1], 1)], axis=1
    )

    # Face ids: horizontal = sq, vertical = nsq + sq, diagonal = 2 * nsq + sq.
    nf = 3 * nsq
    face_vertices = np.empty((nf, 2), dtype=np.int64)
    face_coords = np.empty((nf, 2, 2))
    face_left = np.empty(nf, dtype=np.int64)
    face_right = np.empty(nf, dtype=np.int64)

    horiz = sq
    face_vertices[horiz] = np.stack([vid(i, j), vid(i1, j)], axis=1)
    face_coords[horiz] = np.stack([np.stack([x0, y0], 1), np.stack([x1, y0], 1)], 1)
    face_left[horiz] = lower
    face_right[horiz] = 2 * (((j - 1) % ny) * nx + i) + 1

    vert = nsq + sq
    il = (i - 1) % nx  # the left cell of a vertical face sits one column back
    xv = (il + 1) * dx
    face_vertices[vert] = np.stack([vid(i, j), vid(i, j1)], axis=1)
    face_coords[vert] = np.stack([np.stack([xv, y0], 1), np.stack([xv, y1], 1)], 1)
    face_left[vert] = 2 * (j * nx + il)
    face_right[vert] = upper

    diag = 2 * nsq + sq
    face_vertices[diag] = np.stack([vid(i, j), vid(i1, j1)], axis=1)
    face_coords[diag] = np.stack([np.stack([x0, y0], 1), np.stack([x1, y1], 1)], 1)
    face_left[diag] = upper
    face_right[diag] = lower

    cell_faces = np.empty((nc, 3), dtype=np.int64)
    cell_face_sign = np.empty((nc, 3))
    # Lower triangle boundary: bottom, right vertical, diagonal.
    cell_faces[lower] = np.stack([horiz, nsq + j * nx + i1, diag], axis=1)
    cell_face_sign[lower] = [1.0, 1.0, -1.0]
    # Upper triangle boundary: diagonal, top, left vertical.
    cell_faces[upper] = np.stack([diag, j1 * nx + i, vert], axis=1)
    cell_face_sign[upper] = [1.0, -1.0, -1.0]

    return Mesh(
        manifold=torus,
        vertices=vertices,
        cell_vertices=cell_vertices,
        cell_coords=cell_coords,
        face_vertices=face_vertices,
        face_coords=face_coords,
        face_left=face_left,
        face_right=face_right,
        cell_faces=cell_faces,
        cell_face_sign=cell_face_sign,
    )
