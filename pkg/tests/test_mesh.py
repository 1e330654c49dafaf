import json

import numpy as np
import pytest

from geofv import (
    ConfigurationError,
    FlatTorus,
    Sphere,
    build_icosphere,
    build_torus_mesh,
)


class TestIcosphere:
    def test_level0_combinatorics(self, unit_sphere):
        m = build_icosphere(unit_sphere, 0)
        assert (m.num_cells, m.num_faces, m.num_vertices) == (20, 30, 12)
        assert m.euler_characteristic() == 2

    def test_level2_cell_count(self, ico2):
        assert ico2.num_cells == 320

    @pytest.mark.parametrize("level", [0, 1, 2, 3])
    def test_areas_tile_sphere(self, unit_sphere, level):
        m = build_icosphere(unit_sphere, level)
        assert m.cell_area.sum() == pytest.approx(4 * np.pi, rel=1e-10)

    def test_vertices_on_sphere(self, ico2):
        assert np.allclose(np.linalg.norm(ico2.vertices, axis=1), 1.0, atol=1e-14)

    def test_level_guard(self, unit_sphere):
        with pytest.raises(ConfigurationError):
            build_icosphere(unit_sphere, 9)

    def test_radius_scaling(self):
        big = Sphere(3.0)
        m = build_icosphere(big, 1)
        assert m.cell_area.sum() == pytest.approx(4 * np.pi * 9.0, rel=1e-10)

    def test_h_roughly_halves_per_level(self, unit_sphere):
        # The very first subdivision of the icosahedron is still curvature
        # dominated (ratio 0.57); from level 1 on the family is asymptotic.
        hs = [build_icosphere(unit_sphere, k).h for k in range(5)]
        assert all(b < a for a, b in zip(hs, hs[1:]))
        ratios = [b / a for a, b in zip(hs[1:], hs[2:])]
        assert all(0.45 <= r <= 0.55 for r in ratios)


class TestTorusMesh:
    def test_2x2(self, torus):
        m = build_torus_mesh(torus, 2, 2)
        assert m.num_cells == 8
        assert m.cell_area.sum() == pytest.approx(1.0, abs=1e-15)
        assert m.euler_characteristic() == 0

    def test_4x2_every_face_two_cells(self, torus):
        m = build_torus_mesh(torus, 4, 2)
        assert m.num_cells == 16
        counts = np.zeros(m.num_faces, dtype=int)
        for ci in range(m.num_cells):
            counts[m.cell_faces[ci]] += 1
        assert np.all(counts == 2)

    def test_guards(self, torus):
        with pytest.raises(ConfigurationError):
            build_torus_mesh(torus, 1, 4)
        with pytest.raises(ConfigurationError):
            build_torus_mesh(torus, 4, 8192)

    def test_period_scaling(self):
        m = build_torus_mesh(FlatTorus(2.0), 4, 4)
        assert m.cell_area.sum() == pytest.approx(4.0, abs=1e-14)

    def test_sup_ratio_hand_value(self, torus):
        # Right triangle with legs P/N: p = (2 + sqrt(2)) P / N,
        # |K| = P^2 / (2 N^2), so p/|K| = 2 N (2 + sqrt(2)) / P.
        m = build_torus_mesh(torus, 2, 2)
        expected = 2 * 2 * (2 + np.sqrt(2))
        assert m.sup_perimeter_area_ratio() == pytest.approx(expected, rel=1e-14)


class TestMeshInvariants:
    def test_every_face_visited_once_per_side(self, ico1):
        seen = np.zeros((ico1.num_faces, 2), dtype=int)
        for ci in range(ico1.num_cells):
            for f, s in zip(ico1.cell_faces[ci], ico1.cell_face_sign[ci]):
                seen[f, 0 if s > 0 else 1] += 1
        assert np.all(seen == 1)

    def test_face_sides_match_adjacency(self, torus44):
        for ci in range(torus44.num_cells):
            for f, s in zip(torus44.cell_faces[ci], torus44.cell_face_sign[ci]):
                owner = torus44.face_left[f] if s > 0 else torus44.face_right[f]
                assert owner == ci

    def test_perimeter_matches_vertex_distances(self, ico2):
        m = ico2
        p0, p1, p2 = (m.cell_coords[:, k] for k in range(3))
        d = (
            m.manifold.geodesic_distance(p0, p1)
            + m.manifold.geodesic_distance(p1, p2)
            + m.manifold.geodesic_distance(p2, p0)
        )
        assert np.allclose(m.cell_perimeter, d, rtol=1e-12)

    def test_diameter_is_max_vertex_distance(self, torus44):
        m = torus44
        expect = np.sqrt(0.25**2 + 0.25**2)
        assert np.allclose(m.cell_diameter, expect, atol=1e-15)
        assert m.h == pytest.approx(expect)

    def test_conormals_unit_and_antisymmetric(self, ico2, torus44):
        for m in (ico2, torus44):
            norms = np.linalg.norm(m.face_conormals, axis=-1)
            assert np.allclose(norms, 1.0, atol=1e-12)

    def test_face_weights_sum_to_length(self, ico2, torus44):
        for m in (ico2, torus44):
            assert np.allclose(
                m.face_weights.sum(axis=1), m.face_length, rtol=1e-14
            )

    def test_accessors(self, ico1):
        cell = ico1.cell(5)
        assert cell.id == 5
        assert cell.area == pytest.approx(ico1.cell_area[5])
        face = ico1.face(cell.faces[0])
        assert 5 in (face.left, face.right)


class TestShapeRegularity:
    def test_gamma2_at_least_one(self, ico1, torus44):
        for m in (ico1, torus44):
            assert m.audit_shape_regularity().gamma2 >= 1.0

    def test_gamma2_stable_across_levels(self, unit_sphere):
        gammas = [
            build_icosphere(unit_sphere, k).audit_shape_regularity().gamma2
            for k in range(1, 4)
        ]
        assert max(gammas) / min(gammas) < 2.0

    def test_sup_ratio_doubles_per_level(self, unit_sphere):
        ratios = [
            build_icosphere(unit_sphere, k).sup_perimeter_area_ratio()
            for k in range(1, 4)
        ]
        for a, b in zip(ratios, ratios[1:]):
            assert 1.7 <= b / a <= 2.3

    def test_ratios_match_audit(self, torus44):
        audit = torus44.audit_shape_regularity()
        by_hand = (
            torus44.cell_diameter * torus44.cell_perimeter / torus44.cell_area
        )
        assert np.allclose(audit.ratios, by_hand)


class TestCellQuadrature:
    @pytest.mark.parametrize("fixture", ["ico1", "torus44"])
    def test_weights_reproduce_cell_areas(self, fixture, request):
        m = request.getfixturevalue(fixture)
        total = np.empty(m.num_cells)
        for start, stop, nodes, weights in m.cell_quadrature_chunks(depth=3):
            total[start:stop] = weights.sum(axis=1)
        assert np.allclose(total, m.cell_area, rtol=1e-12)

    def test_chunking_covers_all_cells(self, ico1):
        seen = []
        for start, stop, nodes, weights in ico1.cell_quadrature_chunks(chunk=7):
            seen.extend(range(start, stop))
            assert nodes.shape[:2] == weights.shape
        assert seen == list(range(ico1.num_cells))

    def test_sphere_nodes_on_sphere(self, ico1):
        for _, _, nodes, _ in ico1.cell_quadrature_chunks(depth=2):
            assert np.allclose(np.linalg.norm(nodes, axis=-1), 1.0, atol=1e-13)


class TestJsonExport:
    def test_schema_and_roundtrip(self, tmp_path, ico1):
        path = tmp_path / "mesh.json"
        ico1.export_json(path)
        doc = json.loads(path.read_text())
        assert doc["schema_version"] == 1
        assert doc["manifold"] == {"kind": "sphere", "radius": 1.0}
        assert len(doc["vertices"]) == ico1.num_vertices
        assert len(doc["cells"]) == ico1.num_cells
        assert len(doc["faces"]) == ico1.num_faces
        face = doc["faces"][3]
        assert set(face) == {"id", "vertices", "left", "right", "length"}
        assert face["length"] == ico1.face_length[3]

    def test_export_is_deterministic(self, tmp_path, torus44):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        torus44.export_json(a)
        torus44.export_json(b)
        assert a.read_bytes() == b.read_bytes()
