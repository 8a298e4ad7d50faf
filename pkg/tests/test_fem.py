import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from aoptenc.fem import (
    NegativeCurvatureError,
    SingularMatrixError,
    Trilinear,
    assemble_mass,
    assemble_stiffness,
    build_mesh,
    evaluation_matrix,
    factorize,
    function_space,
    locate,
    mollified_source_vector,
    mollifier_constant,
    mollifier_value,
    pcg,
    point_source_vector,
    sample_mass_inverse_gaussian,
    steihaug_pcg,
)
from aoptenc.fem.elements import basis_values, reference_mass, triangle_rule


def _spaces(n):
    mesh = build_mesh(n)
    return mesh, function_space(mesh, 1), function_space(mesh, 2)


class TestMesh:
    @pytest.mark.parametrize("n", [1, 3, 8])
    def test_counts(self, n):
        mesh, p1, p2 = _spaces(n)
        assert mesh.vertices.shape == ((n + 1) ** 2, 2)
        assert mesh.triangles.shape == (2 * n * n, 3)
        assert p1.dim == (n + 1) ** 2
        assert p2.dim == (2 * n + 1) ** 2

    def test_orientation_and_area(self):
        mesh = build_mesh(5)
        a = mesh.signed_areas()
        assert np.all(a > 0)
        assert a.sum() == pytest.approx(1.0, abs=1e-14)

    def test_p2_nodes_are_vertices_and_midpoints(self):
        mesh, _, p2 = _spaces(3)
        tri = mesh.vertices[mesh.triangles]
        nodes = p2.dof_coords[p2.cell_dofs]
        np.testing.assert_allclose(nodes[:, :3], tri)
        np.testing.assert_allclose(nodes[:, 3], 0.5 * (tri[:, 1] + tri[:, 2]))
        np.testing.assert_allclose(nodes[:, 5], 0.5 * (tri[:, 0] + tri[:, 1]))

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            build_mesh(0)
        with pytest.raises(ValueError):
            function_space(build_mesh(2), 3)


class TestQuadrature:
    @pytest.mark.parametrize("a,b", [(0, 0), (1, 0), (2, 3), (4, 3), (0, 7)])
    def test_monomials_exact(self, a, b):
        pts, w = triangle_rule()
        exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
        assert np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b) == pytest.approx(exact, rel=1e-13)

    @pytest.mark.parametrize("degree", [1, 2])
    def test_partition_of_unity(self, degree):
        pts, _ = triangle_rule()
        np.testing.assert_allclose(basis_values(degree, pts).sum(axis=1), 1.0, atol=1e-14)

    def test_reference_p1_mass(self):
        np.testing.assert_allclose(reference_mass(1), (np.ones((3, 3)) + np.eye(3)) / 24, atol=1e-15)


class TestAssembly:
    @pytest.mark.parametrize("degree", [1, 2])
    def test_mass_total_is_area(self, degree):
        space = function_space(build_mesh(4), degree)
        M = assemble_mass(space)
        one = np.ones(space.dim)
        assert one @ M @ one == pytest.approx(1.0, rel=1e-13)

    @pytest.mark.parametrize("degree", [1, 2])
    def test_stiffness_kernel_and_energy(self, degree):
        space = function_space(build_mesh(4), degree)
        K = assemble_stiffness(space)
        np.testing.assert_allclose(K @ np.ones(space.dim), 0.0, atol=1e-12)
        x = space.dof_coords[:, 0]
        assert x @ K @ x == pytest.approx(1.0, rel=1e-12)  # int |grad x|^2
        assert abs(K - K.T).max() < 1e-14

    def test_p2_mass_integrates_quadratics(self):
        space = function_space(build_mesh(3), 2)
        x, y = space.dof_coords.T
        M = assemble_mass(space)
        # int x^2 * y over the unit square = 1/6
        assert (x * x) @ M @ y == pytest.approx(1 / 6, rel=1e-12)


class TestTrilinear:
    def setup_method(self):
        _, self.p1, self.p2 = _spaces(3)
        self.tri = Trilinear(self.p1, self.p2)

    def test_apply_matches_matrix(self, rng):
        c, u = rng.standard_normal(self.p1.dim), rng.standard_normal(self.p2.dim)
        np.testing.assert_allclose(self.tri.apply(c, u), self.tri.matrix(c) @ u, atol=1e-13)

    def test_jacobian_matches_apply(self, rng):
        c, u = rng.standard_normal(self.p1.dim), rng.standard_normal(self.p2.dim)
        np.testing.assert_allclose(self.tri.jacobian(u) @ c, self.tri.apply(c, u), atol=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_project_is_adjoint_of_apply(self, seed):
        g = np.random.default_rng(seed)
        c, u, v = g.standard_normal(self.p1.dim), g.standard_normal(self.p2.dim), g.standard_normal(self.p2.dim)
        lhs = v @ self.tri.apply(c, u)
        rhs = c @ self.tri.project(u, v)
        assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-13)

    def test_constant_coefficient_is_mass(self):
        W = self.tri.matrix(np.ones(self.p1.dim))
        assert abs(W - assemble_mass(self.p2)).max() < 1e-14

    def test_integral_of_product(self):
        x = self.p1.dof_coords[:, 0]
        xs, ys = self.p2.dof_coords.T
        # int x * x * y = 1/6
        assert ys @ self.tri.apply(x, xs) == pytest.approx(1 / 6, rel=1e-12)


class TestPointwise:
    def test_evaluation_reproduces_quadratics(self, rng):
        space = function_space(build_mesh(4), 2)
        x, y = space.dof_coords.T
        f = 1 + 2 * x - y + 3 * x * y - x * x
        pts = rng.uniform(0, 1, (30, 2))
        E = evaluation_matrix(space, pts)
        exact = 1 + 2 * pts[:, 0] - pts[:, 1] + 3 * pts[:, 0] * pts[:, 1] - pts[:, 0] ** 2
        np.testing.assert_allclose(E @ f, exact, atol=1e-13)

    def test_locate_corners_and_edges(self):
        mesh = build_mesh(4)
        tri, ref = locate(mesh, [[0, 0], [1, 1], [0.25, 0.5], [1.0, 0.3]])
        assert np.all((tri >= 0) & (tri < 2 * 16))
        assert np.all(ref >= -1e-15) and np.all(ref.sum(axis=1) <= 1 + 1e-15)

    def test_outside_rejected(self):
        with pytest.raises(ValueError):
            locate(build_mesh(2), [[1.2, 0.5]])

    def test_point_source_sums_to_one(self):
        space = function_space(build_mesh(4), 2)
        assert point_source_vector(space, (0.31, 0.77)).sum() == pytest.approx(1.0)

    def test_mollifier_integrates_to_one(self):
        # polar tensor-product Gauss quadrature over the ball, independent of the load-vector rule
        t, wt = np.polynomial.legendre.leggauss(200)
        eps, c = 0.05, np.array([0.5, 0.5])
        r = 0.5 * eps * (1 + t)
        th = np.pi * (1 + t)
        R, TH = np.meshgrid(r, th, indexing="ij")
        pts = c + np.column_stack([(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()])
        W = np.outer(0.5 * eps * wt, np.pi * wt) * R
        assert np.sum(W.ravel() * mollifier_value(pts, c, eps)) == pytest.approx(1.0, abs=1e-6)

    def test_mollifier_center_value(self):
        eps = 1e-6  # the unnormalized bump would underflow here
        expected = np.exp(-1.0) / (2 * np.pi * mollifier_constant() * eps ** 2)
        assert mollifier_value([0.3, 0.3], [0.3, 0.3], eps) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("eps", [0.1, 0.01, 1e-6])
    def test_mollified_load_has_unit_mass(self, eps):
        space = function_space(build_mesh(8), 2)
        f = mollified_source_vector(space, (0.5, 0.5), eps)
        # coordinates near 1e-6 offset from a centre near 0.5 carry 1e-10 relative roundoff
        assert f.sum() == pytest.approx(1.0, rel=1e-10)

    def test_mollifier_constant(self):
        # K = int_0^1 r exp(-1/(1-r^2)) dr, by substitution s = 1 - r^2: (1/2) int_0^1 exp(-1/s) ds
        from scipy.special import exp1
        assert mollifier_constant() == pytest.approx(0.5 * (np.exp(-1.0) - exp1(1.0)), rel=1e-12)

    def test_mollifier_tends_to_point_source(self):
        space = function_space(build_mesh(6), 2)
        f = mollified_source_vector(space, (0.43, 0.61), 1e-5)
        np.testing.assert_allclose(f, point_source_vector(space, (0.43, 0.61)), atol=1e-6)

    def test_mollifier_support(self):
        assert mollifier_value([0.5, 0.5], [0.5, 0.5], 0.1) > 0
        assert mollifier_value([0.61, 0.5], [0.5, 0.5], 0.1) == 0.0


def _spd(rng, n=12):
    A = rng.standard_normal((n, n))
    return A @ A.T + n * np.eye(n)


class TestLinalg:
    def test_factorization_solves(self, rng):
        A = sp.random(20, 20, density=0.3, random_state=1) + 5 * sp.eye(20)
        b = rng.standard_normal(20)
        np.testing.assert_allclose(A @ factorize(A).solve(b), b, atol=1e-12)

    @pytest.mark.filterwarnings("ignore::scipy.linalg.LinAlgWarning")
    def test_singular_detected(self):
        with pytest.raises(SingularMatrixError):
            factorize(np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_pcg_converges_and_counts(self, rng):
        A = _spd(rng)
        b = rng.standard_normal(12)
        calls = []

        def apply(d):
            calls.append(1)
            return A @ d

        res = pcg(apply, lambda r: r / np.diag(A), b, rel_tol=1e-12)
        assert res.converged
        assert res.iterations == len(calls)
        np.testing.assert_allclose(res.x, np.linalg.solve(A, b), rtol=1e-9)

    def test_pcg_aux_accumulates_linear_image(self, rng):
        A = _spd(rng)
        G = rng.standard_normal((5, 12))
        b = rng.standard_normal(12)
        res = pcg(lambda d: (A @ d, G @ d), lambda r: r, b, rel_tol=1e-13, aux=True)
        np.testing.assert_allclose(res.aux, G @ res.x, atol=1e-10)

    def test_pcg_negative_curvature(self):
        with pytest.raises(NegativeCurvatureError):
            pcg(lambda d: -d, lambda r: r, np.ones(3))

    def test_steihaug_interior_matches_cg(self, rng):
        A = _spd(rng)
        b = rng.standard_normal(12)
        res = steihaug_pcg(lambda d: A @ d, lambda r: r, b, rel_tol=1e-12)
        assert res.status == "converged"
        np.testing.assert_allclose(res.x, np.linalg.solve(A, b), rtol=1e-9)

    @pytest.mark.parametrize("radius", [1e-3, 0.1])
    def test_steihaug_respects_radius(self, rng, radius):
        A = _spd(rng) - 20 * np.eye(12)  # indefinite
        P = np.diag(np.linspace(1, 2, 12))
        b = rng.standard_normal(12)
        res = steihaug_pcg(lambda d: A @ d, lambda r: np.linalg.solve(P, r), b, radius=radius)
        assert res.status in ("boundary", "negative_curvature")
        assert np.sqrt(res.x @ P @ res.x) == pytest.approx(radius, rel=1e-10)

    def test_mass_inverse_sampler_covariance(self):
        M = assemble_mass(function_space(build_mesh(2), 1))
        Z = sample_mass_inverse_gaussian(M, np.random.default_rng(3), size=40000)
        C = Z.T @ Z / Z.shape[0]
        Minv = np.linalg.inv(M.toarray())
        assert np.linalg.norm(C - Minv) / np.linalg.norm(Minv) < 0.05
