import numpy as np
import pytest

from geofv import (
    ConfigurationError,
    FluxModel,
    SphereRotation,
    TorusConstant,
    build_icosphere,
    default_u_range,
)


@pytest.fixture
def rotation_model(unit_sphere):
    return FluxModel(
        unit_sphere, "linear_advection", SphereRotation((0, 0, 1), 1.0), (-2.0, 2.0)
    )


class TestEvalFlux:
    def test_rotation_at_equator(self, rotation_model):
        f = rotation_model.eval_flux(2.0, [1, 0, 0])
        assert np.allclose(f.components, [0, 2, 0], atol=1e-15)

    def test_zero_state_gives_zero_flux(self, unit_sphere, torus):
        for model in (
            FluxModel(unit_sphere, "linear_advection", SphereRotation(), (-1, 1)),
            FluxModel(torus, "burgers", TorusConstant(1.0, 0.5), (-1, 1)),
        ):
            x = [1, 0, 0] if model.manifold.kind == "sphere" else [0.3, 0.3]
            assert np.allclose(model.eval_flux(0.0, x).components, 0.0)

    def test_burgers_meets_linear_at_two(self, unit_sphere):
        linear = FluxModel(unit_sphere, "linear_advection", SphereRotation(), (-3, 3))
        burgers = FluxModel(unit_sphere, "burgers", SphereRotation(), (-3, 3))
        x = unit_sphere.point([1, 1, 1])
        assert np.allclose(
            linear.eval_flux(2.0, x).components, burgers.eval_flux(2.0, x).components
        )

    def test_output_is_tangent(self, rotation_model, unit_sphere):
        rng = np.random.default_rng(2)
        for x in unit_sphere.random_points(20, rng):
            f = rotation_model.eval_flux(1.3, x)
            size = np.linalg.norm(f.components)
            assert abs(np.dot(f.components, x)) <= 1e-10 * max(size, 1e-30)

    def test_finite_difference_matches_analytic_derivative(self, unit_sphere, torus):
        rng = np.random.default_rng(8)
        delta = 1e-5
        for model in (
            FluxModel(unit_sphere, "burgers", SphereRotation((0, 1, 0), 0.7), (-2, 2)),
            FluxModel(torus, "burgers", TorusConstant(0.4, -1.1), (-2, 2)),
        ):
            pts = model.manifold.random_points(10, rng)
            for x in pts:
                u = rng.uniform(-1.5, 1.5)
                fd = (
                    model.eval_flux(u + delta, x).components
                    - model.eval_flux(u - delta, x).components
                ) / (2 * delta)
                exact = model.eval_flux_du(u, x).components
                scale = max(np.linalg.norm(exact), 1.0)
                assert np.allclose(fd, exact, atol=1e-8 * scale)


class TestDivergence:
    def test_zero_everywhere(self, rotation_model, torus):
        assert rotation_model.eval_divergence(1.7, [0, 0, 1]) == 0.0
        tmodel = FluxModel(torus, "linear_advection", TorusConstant(2, 3), (-1, 1))
        assert tmodel.eval_divergence(-0.4, [0.1, 0.9]) == 0.0

    def test_doubling_omega_doubles_flux_not_divergence(self, unit_sphere):
        m1 = FluxModel(unit_sphere, "linear_advection", SphereRotation(omega=1.0), (-1, 1))
        m2 = FluxModel(unit_sphere, "linear_advection", SphereRotation(omega=2.0), (-1, 1))
        x = unit_sphere.point([1, 2, 2])
        assert np.allclose(
            2 * m1.eval_flux(1.0, x).components, m2.eval_flux(1.0, x).components
        )
        assert m2.eval_divergence(1.0, x) == 0.0

    def test_gauss_green_boundary_integral_vanishes(self, unit_sphere, torus):
        # Quadrature boundary integral of the frozen-u flux over random
        # cells; the 3-node rule resolves it to well below 1e-10 * |K| on
        # meshes at least this fine.
        meshes = [
            build_icosphere(unit_sphere, 4),
            __import__("geofv").build_torus_mesh(torus, 8, 8),
        ]
        models = [
            FluxModel(unit_sphere, "burgers", SphereRotation((1, 1, 1), 1.3), (-2, 2)),
            FluxModel(torus, "linear_advection", TorusConstant(0.8, -0.6), (-2, 2)),
        ]
        rng = np.random.default_rng(4)
        for mesh, model in zip(meshes, models):
            scale = model.lipschitz_bound() * 2.0
            for ci in rng.integers(0, mesh.num_cells, size=12):
                u = rng.uniform(-2, 2)
                total = 0.0
                for f, s in zip(mesh.cell_faces[ci], mesh.cell_face_sign[ci]):
                    v = model.velocity.velocity(mesh.face_nodes[f])
                    normal = np.sum(v * mesh.face_conormals[f], axis=-1)
                    total += s * float(model.profile(u)) * (
                        mesh.face_weights[f] @ normal
                    )
                assert abs(total) <= 1e-10 * mesh.cell_area[ci] * scale


class TestLipschitzBound:
    def test_rotation_linear(self, rotation_model):
        assert rotation_model.lipschitz_bound() == pytest.approx(1.0)

    def test_torus_linear(self, torus):
        model = FluxModel(torus, "linear_advection", TorusConstant(1.0, 0.0), (-9, 9))
        assert model.lipschitz_bound() == pytest.approx(1.0)

    def test_burgers_range_dependence(self, torus):
        model = FluxModel(torus, "burgers", TorusConstant(1.0, 0.0), (-2.0, 1.0))
        assert model.lipschitz_bound() == pytest.approx(2.0)

    def test_missing_range_rejected(self, torus):
        model = FluxModel(torus, "burgers", TorusConstant(1.0, 0.0))
        with pytest.raises(ConfigurationError):
            model.lipschitz_bound()

    def test_invalid_range_rejected(self, torus):
        with pytest.raises(ConfigurationError):
            FluxModel(torus, "burgers", TorusConstant(1.0, 0.0), (1.0, -1.0))

    def test_radius_scales_speed(self):
        from geofv import Sphere

        big = Sphere(2.0)
        model = FluxModel(big, "linear_advection", SphereRotation(omega=3.0), (0, 1))
        assert model.lipschitz_bound() == pytest.approx(6.0)


class TestDefaultURange:
    def test_margin_rule(self):
        lo, hi = default_u_range([0.0, 1.0])
        assert (lo, hi) == (-0.1, 1.1)

    def test_constant_data(self):
        lo, hi = default_u_range([2.0, 2.0])
        assert (lo, hi) == (2.0, 2.0)
