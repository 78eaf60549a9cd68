import numpy as np
import pytest
from scipy import linalg

from markovtest.errors import InputError, SimulationError
from markovtest.sim_models import SimModel, ar1, companion_radius, iid_noise, paper_model, simulate


def batch_se(x, batches=50):
    """Standard error of a mean under serial dependence, by batch means."""
    means = np.array([b.mean(axis=0) for b in np.array_split(x, batches)])
    return means.std(axis=0, ddof=1) / np.sqrt(batches)


class TestPaperModels:
    def test_var_coefficients(self):
        m = paper_model(1)
        np.testing.assert_array_equal(m.params["A"][1], [[-0.5, 0.2, 0.2], [0.2, -0.5, 0.2], [0.2, 0.2, -0.5]])
        np.testing.assert_array_equal(m.params["A"][0][0], [0.5, -0.2, -0.2])
        assert m.noise_sd == 0.5
        assert m.order == 3 and m.d == 3

    def test_threshold_coefficients(self):
        m = paper_model(2)
        np.testing.assert_array_equal(np.diag(m.params["B"][2]), [0.25, 0.25, 0.25])
        # the one asymmetric entry of B1
        assert m.params["B"][0][2, 1] == -0.3

    def test_arch_coefficients(self):
        m = paper_model(3)
        np.testing.assert_array_equal(m.params["h"][1], [0.2, 0.8, 0.05, 0.1])
        np.testing.assert_array_equal(m.params["h"][0], [0.1, 0.6, 0.0, 0.35])
        np.testing.assert_array_equal(m.params["mix"], [[1, 0.2, 0.2], [0.2, 1, 0.2], [0.2, 0.2, 1]])

    def test_unknown_id(self):
        with pytest.raises(InputError):
            paper_model(4)

    def test_noise_as_variance(self):
        assert paper_model(1, noise_is_variance=True).noise_sd == pytest.approx(np.sqrt(0.5))

    def test_companion_radius_stable(self):
        assert companion_radius(paper_model(1).params["A"]) < 1


class TestSimulate:
    def test_zero_noise_stays_at_zero(self):
        m = paper_model(1)
        m.noise_sd = 0.0
        assert np.all(simulate(m, 50, rng=0).values == 0.0)

    def test_ar1_autocorrelation(self):
        x = simulate(ar1(0.5, 1.0), 100_000, rng=1).values[:, 0]
        x = x - x.mean()
        rho = np.dot(x[1:], x[:-1]) / np.dot(x, x)
        assert abs(rho - 0.5) < 0.02

    def test_var_covariance_solves_lyapunov(self):
        m = paper_model(1)
        x = simulate(m, 100_000, rng=2).values
        d, p = 3, 3
        C = np.zeros((d * p, d * p))
        C[:d] = np.hstack(m.params["A"])
        C[d:, :-d] = np.eye(d * (p - 1))
        Qn = np.zeros((d * p, d * p))
        Qn[:d, :d] = m.noise_sd**2 * np.eye(d)
        gamma = linalg.solve_discrete_lyapunov(C, Qn)[:d, :d]
        sample = np.cov(x, rowvar=False)
        assert np.linalg.norm(sample - gamma) / np.linalg.norm(gamma) < 0.05

    @pytest.mark.parametrize("model_id", [1, 2, 3])
    def test_stationarity_smoke(self, model_id):
        x = simulate(paper_model(model_id), 20_000, rng=10 + model_id).values
        a, b = x[:10_000], x[10_000:]
        se = np.sqrt(batch_se(a) ** 2 + batch_se(b) ** 2)
        assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) < 5 * se)

    def test_seed_determinism(self):
        a = simulate(paper_model(3), 300, rng=5).values
        b = simulate(paper_model(3), 300, rng=5).values
        assert a.tobytes() == b.tobytes()

    def test_threshold_regimes_both_occur(self):
        x = simulate(paper_model(2), 20_000, rng=6).values
        low = np.mean(x[:-1].sum(axis=1) <= 0)
        assert 0.2 <= low <= 0.8

    def test_burn_in_discards_prefix(self):
        full = simulate(paper_model(1), 300, burn_in=0, rng=7).values
        tail = simulate(paper_model(1), 100, burn_in=200, rng=7).values
        np.testing.assert_array_equal(full[200:], tail)

    def test_iid_noise_shape_and_scale(self):
        x = simulate(iid_noise(4, 2.0), 20_000, rng=8).values
        assert x.shape == (20_000, 4)
        np.testing.assert_allclose(x.std(axis=0), 2.0, rtol=0.03)

    def test_explosive_model(self):
        with pytest.warns(UserWarning, match="spectral radius"):
            m = SimModel("var3", {"A": [1.5 * np.eye(3), np.zeros((3, 3)), np.zeros((3, 3))]})
        with pytest.raises(SimulationError, match="step"):
            simulate(m, 5000, rng=0)

    def test_invalid_length(self):
        with pytest.raises(InputError):
            simulate(paper_model(1), 0)
