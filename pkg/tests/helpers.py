"""Hand-built models with known conditional laws, shared by several test files."""

import cmath
import math

import numpy as np

from markovtest import mdn, nn, statistic

# acceptance verdict lines keyed by criterion number, printed at session end
VERDICTS = {}


def inverse_softplus(v):
    return np.log(np.expm1(v))


def fixed_mdn(alpha, mu, sigma, input_dim=1, floor=nn.DEFAULT_SIGMA_FLOOR):
    """An MDN whose mixture ignores its input: weights alpha, means mu, sds sigma."""
    alpha, mu, sigma = (np.asarray(v, dtype=float) for v in (alpha, mu, sigma))
    G = alpha.size
    net = nn.init_network(input_dim, G, (4,), rng=0).zeros_like()
    arrays = net.arrays()
    arrays[-5] = np.log(alpha)
    arrays[-3] = mu.copy()
    arrays[-1] = inverse_softplus(sigma - floor)
    net = net.with_arrays(arrays)
    return mdn.UnivariateMdn(net, floor, np.zeros(input_dim), np.ones(input_dim), 0.0, 1.0)


def linear_gaussian_mdn(slope, intercept, sd, floor=nn.DEFAULT_SIGMA_FLOOR):
    """G=1 MDN with mean intercept + slope * x (x scalar) and constant sd, via a ReLU pair."""
    net = nn.init_network(1, 1, (2,), rng=0).zeros_like()
    arrays = net.arrays()
    arrays[0] = np.array([[1.0], [-1.0]])          # relu(x), relu(-x)
    arrays[2] = np.array([[slope, -slope]])         # h = slope * x
    arrays[6] = np.array([[1.0]])                   # mu = h + intercept
    arrays[7] = np.array([intercept])
    arrays[9] = inverse_softplus(np.array([sd - floor]))
    net = net.with_arrays(arrays)
    return mdn.UnivariateMdn(net, floor, np.zeros(1), np.ones(1), 0.0, 1.0)


class ConstantCcfPair:
    """Generator-pair stub whose CCFs are fixed complex constants."""

    def __init__(self, chunk_index, target_columns, phi, psi):
        self.chunk_index = chunk_index
        self.target_columns = list(target_columns)
        self.phi = complex(phi)
        self.psi = complex(psi)

    def forward_ccf(self, points, freqs, rng):
        return np.full((len(points), len(freqs)), self.phi)

    def backward_ccf(self, points, freqs, rng):
        return np.full((len(points), len(freqs)), self.psi)


class GaussianCcfPair:
    """True CCFs of an i.i.d. N(0, sd^2 I) series (both directions), optionally overridden."""

    def __init__(self, chunk_index, d, sd=1.0, forward=None, backward=None):
        self.chunk_index = chunk_index
        self.target_columns = list(range(d))
        self.sd = sd
        self._forward = forward
        self._backward = backward

    def _truth(self, points, freqs):
        cf = np.exp(-0.5 * self.sd**2 * np.sum(np.asarray(freqs) ** 2, axis=1))
        return np.broadcast_to(cf, (len(points), len(freqs))).astype(complex)

    def forward_ccf(self, points, freqs, rng):
        return self._forward(points, freqs) if self._forward else self._truth(points, freqs)

    def backward_ccf(self, points, freqs, rng):
        return self._backward(points, freqs) if self._backward else self._truth(points, freqs)


class PointCcfPair:
    """Stub whose CCFs depend on the conditioning point, to catch index slips."""

    def __init__(self, chunk_index, d):
        self.chunk_index = chunk_index
        self.target_columns = list(range(d))

    @staticmethod
    def phi(freq, x):
        return 0.6 * cmath.exp(0.3j * float(np.dot(freq, x)) + 0.1j * chunk_phase(x))

    @staticmethod
    def psi(freq, x):
        return 0.5 * cmath.exp(-0.7j * float(np.dot(freq, x)))

    def forward_ccf(self, points, freqs, rng):
        return np.array([[self.phi(f, x) * (1 + 0.1 * self.chunk_index) / 1.3 for f in freqs] for x in points])

    def backward_ccf(self, points, freqs, rng):
        return np.array([[self.psi(f, x) * (1 - 0.1 * self.chunk_index) for f in freqs] for x in points])


def chunk_phase(x):
    return float(np.sum(x))


def naive_terms(X, pairs, mu, nu, L, Q, variant="doubly_robust"):
    """Straight transcription of the cross-fitted display, 1-based indices."""
    T = X.shape[0]
    n = T // L

    def at(i):  # X_i with 1-based i
        return X[i - 1]

    phi_bar = [sum(cmath.exp(1j * float(np.dot(nu[b], at(i)))) for i in range(1, L * n + 1)) / (L * n)
               for b in range(len(nu))]
    out = {}
    for q in range(2, Q + 1):
        rows = []
        for ell in range(1, L):
            pair = pairs[ell - 1]
            for t in range(1, n - q + 2):
                row = []
                for b in range(len(mu)):
                    lead = at(ell * n + t + q - 1)
                    cond_f = at(ell * n + t + q - 2)
                    first = cmath.exp(1j * float(np.dot(mu[b], lead[pair.target_columns]))) \
                        - pair.forward_ccf(cond_f[None, :], mu[b:b + 1], None)[0, 0]
                    lag = at(ell * n + t - 1)
                    if variant == "plugin":
                        second = cmath.exp(1j * float(np.dot(nu[b], lag))) - phi_bar[b]
                    else:
                        second = cmath.exp(1j * float(np.dot(nu[b], lag))) \
                            - pair.backward_ccf(at(ell * n + t)[None, :], nu[b:b + 1], None)[0, 0]
                    row.append(first * second)
                rows.append(row)
        out[q] = np.array(rows)
    return out


def naive_statistic(terms, L, n):
    best = 0.0
    for q, z in terms.items():
        N = (L - 1) * (n - q + 1)
        for b in range(z.shape[1]):
            m = sum(z[:, b]) / N
            best = max(best, math.sqrt(N) * abs(m.real), math.sqrt(N) * abs(m.imag))
    return best


def naive_cov(z):
    lam = [[v.real for v in row] + [v.imag for v in row] for row in z]
    N, P = len(lam), len(lam[0])
    return np.array([[sum(lam[i][a] * lam[i][b] for i in range(N)) / N for b in range(P)] for a in range(P)])


def null_tensor(forward=None, backward=None, seed=11):
    """i.i.d. N(0, I_3) series with (some) true CCFs; about 10^4 terms per lag."""
    rng = np.random.default_rng(seed)
    L, n, Q, d = 2, 10_010, 5, 3
    X = rng.standard_normal((L * n, d))
    freqs = statistic.sample_frequencies(8, d, rng)
    pair = GaussianCcfPair(1, d, forward=forward, backward=backward)
    return statistic.statistic_terms(X, [pair], freqs, n, L, Q, rng=0)


def arbitrary_ccf(points, freqs):
    return 0.8 * np.exp(1j * np.tanh(points[:, :1]) * freqs[:, 0][None, :])
