import numpy as np
import pytest

from helpers import fixed_mdn, linear_gaussian_mdn
from markovtest import generators as gen
from markovtest import mdn
from markovtest.errors import ConfigurationError, StageError
from markovtest.sim_models import ar1, iid_noise, simulate

FAST = mdn.MdnHyperParams(epochs=150, warmup=50, patience=50)


def gaussian_model(d, x_dim=1, sd=1.0):
    comps = [mdn.ContinuousComponent(fixed_mdn([1.0], [0.0], [sd], input_dim=x_dim + j)) for j in range(d)]
    return mdn.FactorizedConditionalModel(x_dim, comps)


class PointMass:
    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)

    def sample_rows(self, X, rng):
        return np.tile(self.c, (np.atleast_2d(X).shape[0], 1))


class TestCcfMc:
    def test_zero_frequency(self):
        out = gen.ccf_mc(gaussian_model(2), [0.3], np.zeros((1, 2)), 17, 0)
        assert out[0] == 1 + 0j

    def test_standard_normal(self):
        M = 10**6
        est = gen.ccf_mc(gaussian_model(1), [0.0], np.array([[1.0]]), M, 1)[0]
        assert abs(est.real - np.exp(-0.5)) < 3 / np.sqrt(M)
        assert abs(est.imag) < 3 / np.sqrt(M)

    def test_random_frequencies_gaussian_oracle(self):
        M = 10**6
        rng = np.random.default_rng(2)
        omegas = rng.standard_normal((10, 2))
        est = gen.ccf_mc(gaussian_model(2), [0.0], omegas, M, 3)
        truth = np.exp(-0.5 * np.sum(omegas**2, axis=1))
        assert np.all(np.abs(est - truth) < 3 / np.sqrt(M))

    def test_point_mass(self):
        c = np.array([0.7, -1.3])
        omegas = np.random.default_rng(4).standard_normal((5, 2))
        est = gen.ccf_mc(PointMass(c), [0.0], omegas, 3, 0)
        np.testing.assert_allclose(est, np.exp(1j * omegas @ c), rtol=0, atol=1e-15)

    def test_modulus_and_rows(self):
        model = mdn.FactorizedConditionalModel(1, [mdn.ContinuousComponent(linear_gaussian_mdn(0.5, 0.0, 1.0))])
        X = np.linspace(-3, 3, 7)[:, None]
        freqs = np.random.default_rng(5).standard_normal((4, 1)) * 3
        rows = gen.ccf_mc_rows(model, X, freqs, 50, 6)
        assert rows.shape == (7, 4)
        assert np.all(np.abs(rows) <= 1 + 1e-12)
        # chunked evaluation gives the same answer as one block
        np.testing.assert_array_equal(rows, gen.ccf_mc_rows(model, X, freqs, 50, 6, chunk_elems=1))

    def test_one_draw_shared_across_frequencies(self):
        model = gaussian_model(1)
        freqs = np.array([[0.4], [1.1]])
        both = gen.ccf_mc(model, [0.0], freqs, 200, 7)
        draws = model.sample_rows(np.zeros((200, 1)), np.random.default_rng(7))[:, 0]
        expected = [np.mean(np.exp(1j * w * draws)) for w in freqs[:, 0]]
        np.testing.assert_allclose(both, expected, rtol=0, atol=1e-13)

    def test_bad_m(self):
        with pytest.raises(ConfigurationError):
            gen.ccf_mc(gaussian_model(1), [0.0], np.ones((1, 1)), 0, 0)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            gen.ccf_mc(gaussian_model(2), [0.0], np.ones((1, 3)), 5, 0)


class TestLayout:
    def test_first_order(self):
        lay = gen.EmbeddingLayout(3, 1, (0, 1, 2))
        assert lay.target_columns == [0, 1, 2] and lay.new_block == [0, 1, 2]
        assert lay.forward_known == [] and lay.backward_known == []

    def test_embedded_with_subset(self):
        lay = gen.EmbeddingLayout(2, 3, (1,))
        assert lay.target_columns == [1, 3, 5]
        assert lay.new_block == [5]
        assert lay.forward_known == [3, 5]
        assert lay.backward_known == [0, 1, 2, 3]
        assert lay.first_block == [0, 1]


class TestPairCcf:
    def test_embedded_phase_reconstruction(self):
        # forward law of the new block is N(0,1); earlier blocks are copied from the point
        lay = gen.EmbeddingLayout(1, 2, (0,))
        pair = gen.GeneratorPair(1, gaussian_model(1, x_dim=2), gaussian_model(1, x_dim=2),
                                 lay.target_columns, lay.forward_known, lay.backward_known, 10**5)
        pts = np.array([[0.2, -0.4], [1.0, 0.5]])
        freqs = np.array([[0.3, 0.8]])
        fwd = pair.forward_ccf(pts, freqs, 0)
        truth = np.exp(1j * 0.3 * pts[:, 1]) * np.exp(-0.5 * 0.8**2)
        assert np.all(np.abs(fwd[:, 0] - truth) < 5 / np.sqrt(10**5))
        bwd = pair.backward_ccf(pts, freqs, 0)
        truth = np.exp(-0.5 * 0.3**2) * np.exp(1j * 0.8 * pts[:, 0])
        assert np.all(np.abs(bwd[:, 0] - truth) < 5 / np.sqrt(10**5))

    def test_missing_backward(self):
        lay = gen.EmbeddingLayout(1, 1, (0,))
        pair = gen.GeneratorPair(1, gaussian_model(1), None, lay.target_columns, [], [], 5)
        with pytest.raises(ConfigurationError):
            pair.backward_ccf(np.zeros((1, 1)), np.ones((1, 1)), 0)


def fit(Y, L=2, G=1, layout=None, seed=0, hp=FAST, **kw):
    Y = np.asarray(Y, dtype=float)
    layout = layout or gen.EmbeddingLayout(Y.shape[1], 1, tuple(range(Y.shape[1])))
    n = Y.shape[0] // L
    return gen.fit_generators(Y, ["continuous"] * Y.shape[1], layout, n, L, 20, hp, seed, G=G, **kw)


class TestFitGenerators:
    def test_one_pair_for_two_chunks(self):
        Y = simulate(ar1(0.5), 200, rng=0).values
        pairs, report = fit(Y)
        assert len(pairs) == 1 and pairs[0].chunk_index == 1
        assert report == {"forward": [1], "backward": [1]}

    def test_white_noise_mean_flat(self):
        Y = simulate(iid_noise(1), 1000, rng=1).values
        pairs, _ = fit(Y, hp=mdn.MdnHyperParams())
        grid = np.linspace(Y.min(), Y.max(), 25)[:, None]
        means = pairs[0].forward.components[0].mdn.mean(grid)
        assert np.ptp(means) < 0.1

    def test_ar1_mean_slope(self):
        Y = simulate(ar1(0.5), 1000, rng=2).values
        pairs, _ = fit(Y, hp=mdn.MdnHyperParams())
        m = pairs[0].forward.components[0].mdn.mean(np.array([[0.0], [1.0]]))
        assert abs((m[1] - m[0]) - 0.5) < 0.15

    def test_later_rows_never_read(self):
        # perturbing rows at or beyond l*n must leave generator l unchanged
        Y = simulate(ar1(0.5), 240, rng=3).values
        L, n = 3, 80
        base, _ = fit(Y, L=L, G=None, g_grid=(1, 2))
        for ell in (1, 2):
            Z = Y.copy()
            Z[ell * n:] = np.random.default_rng(ell).standard_normal(Z[ell * n:].shape) * 7
            other, _ = fit(Z, L=L, G=None, g_grid=(1, 2))
            for j in range(ell):
                assert other[j].forward.to_dict() == base[j].forward.to_dict()
                assert other[j].backward.to_dict() == base[j].backward.to_dict()
            if ell == 1:
                assert other[1].forward.to_dict() != base[1].forward.to_dict()

    def test_training_slices_logged(self, monkeypatch):
        seen = []
        original = gen._problems

        def logging_problems(Y, column_types, layout, stop, backward):
            seen.append((Y.shape[0], stop))
            return original(Y, column_types, layout, stop, backward)

        monkeypatch.setattr(gen, "_problems", logging_problems)
        Y = simulate(ar1(0.5), 300, rng=4).values
        fit(Y, L=3)
        assert seen == [(100, 100), (200, 200)]

    def test_subset_forward_full_backward(self):
        Y = simulate(iid_noise(3), 200, rng=5).values
        layout = gen.EmbeddingLayout(3, 1, (1,))
        pairs, _ = fit(Y, layout=layout)
        assert pairs[0].forward.response_dim == 1
        assert pairs[0].backward.response_dim == 3
        assert pairs[0].target_columns == [1]

    def test_deterministic(self):
        Y = simulate(ar1(0.5), 200, rng=6).values
        a, _ = fit(Y, seed=9)
        b, _ = fit(Y, seed=9)
        assert a[0].forward.to_dict() == b[0].forward.to_dict()

    def test_training_failure_labelled(self):
        Y = simulate(ar1(0.5), 30, rng=7).values
        with pytest.raises(StageError, match="fit_generators"):
            fit(Y, L=2)
