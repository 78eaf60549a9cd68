"""Cross-fitted max-type statistic, its covariance and the multiplier bootstrap.

Indices follow the cross-fitted display literally.  With 0-based rows and
``j = l*n + u`` (``l = 1..L-1``, ``u = 0..n-q``) a term is

    {exp(i mu' Y[j+q-1]) - phi(mu | Y[j+q-2])} * {exp(i nu' Y[j-1]) - psi(nu | Y[j])}

so every chunk ``l`` needs forward residuals at rows ``l*n .. l*n+n-2`` and
backward residuals at the same rows; lag ``q`` just offsets the two.

A generator pair is anything with ``chunk_index``, ``target_columns`` and
``forward_ccf(points, freqs, rng)`` / ``backward_ccf(points, freqs, rng)``
returning ``P x B`` complex arrays; ``backward_ccf`` may be absent for the
plugin variant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractViolation, NumericalError

DOUBLY_ROBUST = "doubly_robust"
PLUGIN = "plugin"
VARIANTS = (DOUBLY_ROBUST, PLUGIN)


@dataclass(frozen=True)
class FrequencySet:
    mu: np.ndarray
    nu: np.ndarray

    @property
    def B(self) -> int:
        return self.mu.shape[0]


def sample_frequencies(B: int, d: int, rng, d_mu: Optional[int] = None) -> FrequencySet:
    """``B`` i.i.d. standard normal pairs; ``d_mu`` shrinks ``mu`` when only some columns are tested."""
    if B < 1 or d < 1:
        raise ConfigurationError("B and d must be positive")
    rng = np.random.default_rng(rng)
    mu = rng.standard_normal((B, d if d_mu is None else d_mu))
    nu = rng.standard_normal((B, d))
    return FrequencySet(mu, nu)


def empirical_cf(values, freqs) -> np.ndarray:
    """Mean over rows of exp(i freq' x), one entry per frequency row."""
    return np.exp(1j * (np.asarray(values) @ np.asarray(freqs).T)).mean(axis=0)


@dataclass
class TermsTensor:
    """Residual factors per chunk, from which every lag's terms are formed.

    ``forward[l]`` and ``backward[l]`` are ``(n-1) x B`` complex arrays for
    evaluation chunk ``l + 2`` (1-based), row ``u`` belonging to time ``(l+1)*n + u``.
    """

    n: int
    L: int
    Q: int
    forward: list
    backward: Optional[list]
    plugin: list
    phi_bar: np.ndarray

    @property
    def B(self) -> int:
        return self.phi_bar.shape[0]

    def N(self, q: int) -> int:
        return (self.L - 1) * (self.n - q + 1)

    def terms(self, q: int, variant: str = DOUBLY_ROBUST) -> np.ndarray:
        if not 2 <= q <= self.Q:
            raise ContractViolation(f"lag {q} outside 2..{self.Q}")
        second = self.plugin if variant == PLUGIN else self.backward
        if second is None:
            raise ConfigurationError("backward residuals were not computed")
        m = self.n - q + 1
        out = np.concatenate([f[q - 2:q - 2 + m] * s[:m] for f, s in zip(self.forward, second)])
        if out.shape[0] != self.N(q):
            raise ContractViolation("term count disagrees with (L-1)(n-q+1)")
        return out


def _seeds(rng, count):
    return np.random.default_rng(rng).integers(0, 2**63, size=count)


def statistic_terms(Y, pairs, freqs: FrequencySet, n: int, L: int, Q: int, rng,
                    need_backward: bool = True) -> TermsTensor:
    """Residual factors for all chunks ``l = 1..L-1`` of the (embedded) series ``Y``."""
    Y = np.asarray(Y, dtype=float)
    if len(pairs) != L - 1:
        raise ContractViolation(f"expected {L - 1} generator pairs, got {len(pairs)}")
    if Y.shape[0] < L * n:
        raise ContractViolation("series shorter than L * n")
    if Q < 2 or Q > n - 1:
        raise ConfigurationError(f"Q must lie in 2..n-1 = {n - 1}")
    Y = Y[:L * n]
    seeds = _seeds(rng, 2 * (L - 1))
    phi_bar = empirical_cf(Y, freqs.nu)
    forward, backward, plugin = [], [], []
    for idx, pair in enumerate(pairs):
        ell = idx + 1
        if getattr(pair, "chunk_index", ell) != ell:
            raise ContractViolation("generator pairs must be ordered by chunk index")
        rows = np.arange(ell * n, ell * n + n - 1)
        target = Y[:, list(pair.target_columns)]
        phi = pair.forward_ccf(Y[rows], freqs.mu, np.random.default_rng(seeds[2 * idx]))
        forward.append(np.exp(1j * (target[rows + 1] @ freqs.mu.T)) - phi)
        lead = np.exp(1j * (Y[rows - 1] @ freqs.nu.T))
        plugin.append(lead - phi_bar[None, :])
        if need_backward:
            psi = pair.backward_ccf(Y[rows], freqs.nu, np.random.default_rng(seeds[2 * idx + 1]))
            backward.append(lead - psi)
    return TermsTensor(n, L, Q, forward, backward if need_backward else None, plugin, phi_bar)


@dataclass(frozen=True)
class Aggregate:
    s_hat: float
    per_qb: np.ndarray  # 2B x (Q-1): sqrt(N_q) |Re|, then sqrt(N_q) |Im|
    argmax_q: int
    argmax_b: int
    argmax_part: str


def aggregate_statistic(terms: TermsTensor, variant: str = DOUBLY_ROBUST) -> Aggregate:
    """Max over lags, frequencies and real/imaginary parts of the scaled mean terms."""
    if terms.Q < 2 or terms.B < 1 or not terms.forward:
        raise ConfigurationError("empty terms tensor")
    B = terms.B
    per_qb = np.empty((2 * B, terms.Q - 1))
    for q in range(2, terms.Q + 1):
        mean = terms.terms(q, variant).mean(axis=0)
        scale = np.sqrt(terms.N(q))
        per_qb[:B, q - 2] = scale * np.abs(mean.real)
        per_qb[B:, q - 2] = scale * np.abs(mean.imag)
    row, col = np.unravel_index(int(np.argmax(per_qb)), per_qb.shape)
    return Aggregate(float(per_qb[row, col]), per_qb, int(col) + 2, int(row % B),
                     "real" if row < B else "imag")


def stacked_parts(z: np.ndarray) -> np.ndarray:
    """N x B complex -> N x 2B real (real parts then imaginary parts)."""
    return np.hstack([z.real, z.imag])


def covariance_q(terms: TermsTensor, q: int, variant: str = DOUBLY_ROBUST) -> np.ndarray:
    """Uncentered second-moment matrix of the stacked real/imaginary term rows."""
    lam = stacked_parts(terms.terms(q, variant))
    sigma = lam.T @ lam / lam.shape[0]
    return 0.5 * (sigma + sigma.T)


def psd_sqrt(sigma: np.ndarray):
    """Symmetric square root with eigenvalues clipped at zero; also the clipped negative mass."""
    try:
        vals, vecs = np.linalg.eigh(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    negative = float(-vals[vals < 0].sum())
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return root, negative


@dataclass(frozen=True)
class BootstrapResult:
    c_alpha: float
    maxima: np.ndarray
    warnings: tuple = ()


def bootstrap_critical(sigmas, alpha: float, n_boot: int, rng,
                       quantile_level: Optional[float] = None) -> BootstrapResult:
    """Quantile of max_q ||sigma_q^{1/2} Z_q||_inf over ``n_boot`` Gaussian draws.

    The default level is ``1 - alpha/2``; ``quantile_level`` overrides it.
    """
    if n_boot < 500:
        raise ConfigurationError("n_boot must be at least 500")
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("alpha must lie in (0, 1)")
    level = 1.0 - alpha / 2.0 if quantile_level is None else float(quantile_level)
    if not 0.0 < level < 1.0:
        raise ConfigurationError("quantile level must lie in (0, 1)")
    seeds = _seeds(rng, len(sigmas))
    maxima = np.zeros(n_boot)
    notes = []
    for i, sigma in enumerate(sigmas):
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ContractViolation("covariance blocks must be square")
        if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(sigma).max())):
            raise ContractViolation("covariance blocks must be symmetric")
        root, negative = psd_sqrt(sigma)
        trace = float(np.trace(sigma))
        if negative > 1e-6 * max(trace, 0.0):
            msg = f"block {i}: clipped negative eigenvalue mass {negative:.3g} (trace {trace:.3g})"
            notes.append(msg)
            warnings.warn(msg, stacklevel=2)
        z = np.random.default_rng(seeds[i]).standard_normal((n_boot, sigma.shape[0]))
        np.maximum(maxima, np.abs(z @ root).max(axis=1), out=maxima)
    c_alpha = float(np.quantile(maxima, level))
    return BootstrapResult(c_alpha, maxima, tuple(notes))


def p_value(s_hat: float, maxima: np.ndarray) -> float:
    """Two-sided-style p-value matched to the alpha/2 critical value convention."""
    r = int(np.sum(maxima >= s_hat))
    return min(1.0, 2.0 * (r + 1) / (maxima.size + 1))
