import numpy as np
import pytest

from geofv import (
    AmbiguousGeodesicError,
    DegenerateCellError,
    FlatTorus,
    Sphere,
    tangent_inner,
)


class TestGeodesicDistance:
    def test_quarter_great_circle(self, unit_sphere):
        d = unit_sphere.geodesic_distance([0, 0, 1], [1, 0, 0])
        assert d == pytest.approx(np.pi / 2, abs=1e-15)

    def test_identity(self, unit_sphere, torus):
        assert unit_sphere.geodesic_distance([0, 0, 1], [0, 0, 1]) == 0.0
        assert torus.geodesic_distance([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_torus_wraparound(self, torus):
        assert torus.geodesic_distance([0.1, 0.0], [0.9, 0.0]) == pytest.approx(0.2)

    def test_antipodal_exact(self, unit_sphere):
        d = unit_sphere.geodesic_distance([0, 0, 1], [0, 0, -1])
        assert d == np.pi

    @pytest.mark.parametrize("which", ["sphere", "torus"])
    def test_metric_axioms_random(self, which, unit_sphere, torus):
        m = unit_sphere if which == "sphere" else torus
        rng = np.random.default_rng(3)
        p, q, r = (m.random_points(50, rng) for _ in range(3))
        dpq = m.geodesic_distance(p, q)
        assert np.allclose(dpq, m.geodesic_distance(q, p), atol=1e-14)
        assert np.all(dpq >= 0.0)
        assert np.all(
            m.geodesic_distance(p, r) <= dpq + m.geodesic_distance(q, r) + 1e-12
        )

    def test_radius_scales_distance(self):
        big = Sphere(2.5)
        d = big.geodesic_distance(big.point([0, 0, 1]), big.point([1, 0, 0]))
        assert d == pytest.approx(2.5 * np.pi / 2)


class TestPointCanonicalization:
    def test_sphere_renormalizes(self, unit_sphere):
        p = unit_sphere.point([3.0, 4.0, 0.0])
        assert np.linalg.norm(p) == pytest.approx(1.0, abs=1e-15)

    def test_torus_reduces_mod_period(self, torus):
        assert np.allclose(torus.point([1.25, -0.5]), [0.25, 0.5])

    def test_zero_vector_rejected(self, unit_sphere):
        with pytest.raises(ValueError):
            unit_sphere.point([0.0, 0.0, 0.0])


class TestTangentInner:
    def test_unit_vector(self, unit_sphere):
        x = unit_sphere.tangent([1, 0, 0], [0, 1, 0])
        assert tangent_inner(x, x) == 1.0

    def test_orthogonal(self, unit_sphere):
        x = unit_sphere.tangent([1, 0, 0], [0, 1, 0])
        y = unit_sphere.tangent([1, 0, 0], [0, 0, 1])
        assert tangent_inner(x, y) == 0.0

    def test_bilinear(self, torus):
        y = torus.tangent([0.2, 0.2], [0.3, -0.4])
        x = torus.tangent([0.2, 0.2], [0.6, -0.8])
        assert tangent_inner(x, y) == pytest.approx(2 * tangent_inner(y, y))

    def test_mismatched_base_points(self, unit_sphere):
        x = unit_sphere.tangent([1, 0, 0], [0, 1, 0])
        y = unit_sphere.tangent([0, 1, 0], [1, 0, 0])
        with pytest.raises(ValueError, match="base"):
            tangent_inner(x, y)

    def test_non_tangent_components_rejected(self, unit_sphere):
        with pytest.raises(ValueError):
            unit_sphere.tangent([1, 0, 0], [1.0, 1.0, 0.0])


class TestTriangleArea:
    def test_octant(self, unit_sphere):
        area = unit_sphere.triangle_area([1, 0, 0], [0, 1, 0], [0, 0, 1])
        assert area == pytest.approx(np.pi / 2, abs=1e-14)

    def test_repeated_vertex_is_degenerate(self, unit_sphere):
        with pytest.raises(DegenerateCellError):
            unit_sphere.triangle_area([1, 0, 0], [1, 0, 0], [0, 0, 1])

    def test_eight_octants_tile_sphere(self, unit_sphere):
        corners = np.array([1.0, -1.0])
        total = 0.0
        for sx in corners:
            for sy in corners:
                for sz in corners:
                    total += unit_sphere.triangle_area(
                        [sx, 0, 0], [0, sy, 0], [0, 0, sz]
                    )
        assert total == pytest.approx(4 * np.pi, abs=1e-12)

    def test_split_at_interior_point_is_additive(self, unit_sphere):
        rng = np.random.default_rng(11)
        for _ in range(25):
            a, b, c = unit_sphere.random_points(3, rng)
            w = rng.uniform(0.2, 0.6, size=3)
            p = unit_sphere.point(w[0] * a + w[1] * b + w[2] * c)
            whole = unit_sphere.triangle_area(a, b, c)
            parts = (
                unit_sphere.triangle_area(a, b, p)
                + unit_sphere.triangle_area(b, c, p)
                + unit_sphere.triangle_area(c, a, p)
            )
            assert parts == pytest.approx(whole, rel=1e-12)

    def test_torus_planar_area(self, torus):
        assert torus.triangle_area([0, 0], [0.2, 0], [0, 0.3]) == pytest.approx(0.03)

    def test_torus_minimal_image(self, torus):
        # Triangle straddling the seam: same shape as its unwrapped copy.
        area = torus.triangle_area([0.95, 0.1], [0.15, 0.1], [0.95, 0.3])
        assert area == pytest.approx(0.5 * 0.2 * 0.2)

    def test_equilateral_shape_ratio(self, torus):
        # h * p / |K| = 4 * sqrt(3) for any planar equilateral triangle.
        s = 0.2
        a, b, c = [0.1, 0.1], [0.1 + s, 0.1], [0.1 + s / 2, 0.1 + s * np.sqrt(3) / 2]
        area = torus.triangle_area(a, b, c)
        h = s
        p = 3 * s
        assert h * p / area == pytest.approx(4 * np.sqrt(3))


class TestGeodesicEdge:
    def test_quarter_arc_length(self, unit_sphere):
        edge = unit_sphere.geodesic_edge([1, 0, 0], [0, 1, 0])
        assert edge.length == pytest.approx(np.pi / 2, abs=1e-15)

    def test_weights_sum_to_length(self, unit_sphere, torus):
        rng = np.random.default_rng(5)
        for m in (unit_sphere, torus):
            pts = m.random_points(40, rng)
            for a, b in zip(pts[::2], pts[1::2]):
                edge = m.geodesic_edge(a, b)
                assert abs(edge.weights.sum() - edge.length) <= 1e-14 * edge.length

    def test_sphere_nodes_on_sphere_and_arc(self, unit_sphere):
        edge = unit_sphere.geodesic_edge([1, 0, 0], [0, 0, 1])
        assert np.allclose(np.linalg.norm(edge.nodes, axis=1), 1.0, atol=1e-14)
        pole = np.cross([1, 0, 0], [0, 0, 1])
        assert np.allclose(edge.nodes @ pole, 0.0, atol=1e-14)

    def test_torus_segment_nodes(self, torus):
        edge = torus.geodesic_edge([0.0, 0.0], [0.5, 0.0])
        assert edge.length == pytest.approx(0.5)
        assert np.all((edge.nodes[:, 0] > 0.0) & (edge.nodes[:, 0] < 0.5))
        assert np.allclose(edge.nodes[:, 1], 0.0)

    def test_antipodal_rejected(self, unit_sphere):
        with pytest.raises(AmbiguousGeodesicError):
            unit_sphere.geodesic_edge([1, 0, 0], [-1, 0, 0])

    def test_coincident_rejected(self, torus):
        with pytest.raises(DegenerateCellError):
            torus.geodesic_edge([0.4, 0.4], [0.4, 0.4])


class TestOutwardConormal:
    def test_octant_equator_edge(self, unit_sphere):
        cell = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
        q = unit_sphere.point([1, 1, 0])
        n = unit_sphere.outward_conormal(cell, (cell[0], cell[1]), q)
        assert np.allclose(n.components, [0, 0, -1], atol=1e-14)

    def test_unit_length(self, unit_sphere, ico1):
        n = unit_sphere.outward_conormal(
            ico1.cell_coords[0],
            (ico1.cell_coords[0][0], ico1.cell_coords[0][1]),
            ico1.cell_coords[0][0],
        )
        from geofv import tangent_inner

        assert tangent_inner(n, n) == pytest.approx(1.0, abs=1e-12)

    def test_two_sided_faces_negate(self, ico1, unit_sphere):
        # The stored left conormal and the right cell's own conormal are
        # exact negatives on every face.
        for fi in range(0, ico1.num_faces, 7):
            face = ico1.face(fi)
            q = unit_sphere.point(face.points.mean(axis=0))
            left = unit_sphere.outward_conormal(
                ico1.cell_coords[face.left], (face.points[0], face.points[1]), q
            )
            right = unit_sphere.outward_conormal(
                ico1.cell_coords[face.right], (face.points[0], face.points[1]), q
            )
            assert np.allclose(left.components, -right.components, atol=1e-12)
            assert np.allclose(left.components, face.conormals[0], atol=1e-12)

    def test_torus_known_normal(self, torus):
        cell = np.array([[0.0, 0.0], [0.25, 0.0], [0.25, 0.25]])
        n = torus.outward_conormal(cell, (cell[0], cell[1]), [0.1, 0.0])
        assert np.allclose(n.components, [0, -1], atol=1e-14)

    def test_point_off_edge_rejected(self, unit_sphere):
        cell = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
        with pytest.raises(ValueError, match="edge"):
            unit_sphere.outward_conormal(
                cell, (cell[0], cell[1]), unit_sphere.point([1, 0, 1])
            )
