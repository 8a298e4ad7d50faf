import numpy as np
import pytest

from aoptenc.counters import SolveCounter
from aoptenc.fem import SingularMatrixError, assemble_mass
from aoptenc.helmholtz import (
    Geometry,
    HelmholtzModel,
    ObservationData,
    default_receivers,
    encode_data,
    generate_synthetic_data,
    medium,
    ten_source_positions,
    two_source_positions,
)

from conftest import KAPPA


@pytest.fixture(scope="module")
def model():
    return HelmholtzModel(4, KAPPA, Geometry(ten_source_positions()[:4], default_receivers()))


class TestGeometry:
    def test_presets(self):
        assert two_source_positions().shape == (2, 2)
        assert ten_source_positions().shape == (10, 2)
        r = default_receivers()
        assert r.shape == (20, 2)
        assert np.all((r >= 0) & (r <= 1))

    @pytest.mark.parametrize("sources", [np.zeros((0, 2)), [[1.5, 0.5]], [[0.1, 0.2, 0.3]]])
    def test_rejects(self, sources):
        with pytest.raises(ValueError):
            Geometry(sources, default_receivers())

    def test_unknown_source_model(self):
        with pytest.raises(ValueError):
            Geometry([[0.5, 0.5]], default_receivers(), source_model="gaussian")


class TestForward:
    def test_operator_symmetric(self, model):
        A = model.operator(np.ones(model.n_param))
        assert abs(A - A.T).max() < 1e-12

    def test_solution_satisfies_system(self, model, rng):
        m = 1 + 0.1 * rng.standard_normal(model.n_param)
        u = model.forward_solve(m, model.F[:, 0])
        np.testing.assert_allclose(model.operator(m) @ u, model.F[:, 0], atol=1e-10)

    def test_encoding_is_linear(self, model, rng):
        m = np.ones(model.n_param)
        w = rng.standard_normal(model.n_sources)
        single = model.forward_solve(m, model.F.T)  # rows: one source each
        np.testing.assert_allclose(model.forward_solve(m, model.encode_rhs(w)), w @ single, atol=1e-10)

    def test_encode_rhs_checks_length(self, model):
        with pytest.raises(ValueError):
            model.encode_rhs(np.ones(model.n_sources + 1))

    def test_counter_charges_each_rhs(self, model):
        c = SolveCounter()
        with c.phase("x"):
            model.factorize(np.ones(model.n_param), c).solve(np.ones((3, model.n_state)))
        assert c.counts["x"] == 3 and c.total == 3

    def test_singular_operator(self):
        # kappa^2 m = 0 leaves the Neumann Laplacian, singular on constants
        model = HelmholtzModel(2, 1.0, Geometry([[0.5, 0.5]], default_receivers()))
        with pytest.raises(SingularMatrixError):
            model.factorize(np.zeros(model.n_param))

    def test_plane_wave_convergence(self):
        # u = cos(pi x) solves -u'' - kappa^2 u = (pi^2 - kappa^2) cos(pi x) with zero Neumann data
        errs = []
        for n in (4, 8):
            mdl = HelmholtzModel(n, KAPPA, Geometry([[0.5, 0.5]], default_receivers()))
            x = mdl.state_space.dof_coords[:, 0]
            exact = np.cos(np.pi * x)
            rhs = assemble_mass(mdl.state_space) @ ((np.pi ** 2 - KAPPA ** 2) * exact)
            u = mdl.forward_solve(np.ones(mdl.n_param), rhs)
            errs.append(np.abs(u - exact).max())
        assert errs[1] < errs[0] / 6  # P2 nodal error drops like h^3


class TestData:
    def test_noiseless(self, model):
        m = medium(model, "medium1")
        d = generate_synthetic_data(model, m, 0.0, 1)
        np.testing.assert_array_equal(d.D, d.noiseless)
        u = model.forward_solve(m, model.F.T)
        np.testing.assert_allclose(d.D, (model.B @ u.T).T, atol=1e-12)

    def test_noise_level(self, model):
        m = medium(model, "medium2")
        d = generate_synthetic_data(model, m, 0.05, 3)
        rel = (d.D - d.noiseless) / np.max(np.abs(d.noiseless), axis=1, keepdims=True)
        assert 0.03 < rel.std() < 0.07

    def test_seeded(self, model):
        m = medium(model, "medium2")
        a, b = (generate_synthetic_data(model, m, 0.02, 9) for _ in range(2))
        np.testing.assert_array_equal(a.D, b.D)

    def test_encode_data(self, model, rng):
        d = generate_synthetic_data(model, np.ones(model.n_param), 0.0, 0)
        w = rng.standard_normal((2, model.n_sources))
        np.testing.assert_allclose(encode_data(d, w), w @ d.D)

    def test_csv_roundtrip(self, model, tmp_path):
        d = generate_synthetic_data(model, medium(model, "medium1"), 0.02, 5)
        path = tmp_path / "data.csv"
        d.to_csv(path, model.geometry.receivers)
        back, receivers = ObservationData.from_csv(path)
        np.testing.assert_array_equal(back.D, d.D)
        np.testing.assert_array_equal(receivers, model.geometry.receivers)
        assert back.seed == 5 and back.noise_pct == 0.02

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            ObservationData(np.array([[np.nan]]))


class TestMedia:
    def test_background_and_bumps(self, model):
        m1 = medium(model, "medium1")
        assert m1.min() >= 1.0 - 1e-15 and 1.0 < m1.max() <= 1.3
        m2 = medium(model, "medium2")
        assert m2.min() < 1.0 < m2.max()

    def test_custom_bumps(self, model):
        m = medium(model, bumps=[], background=2.0)
        np.testing.assert_array_equal(m, 2.0)
