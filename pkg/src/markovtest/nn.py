"""Feed-forward trunk with three mixture-density heads, written against numpy.

The network maps an input ``x`` through ReLU hidden layers and a final linear
layer to a G-dimensional code ``h``.  Three parallel G x G affine heads turn
``h`` into mixture logits, component means and pre-softplus scales.  The
negative log-likelihood of the induced Gaussian mixture is differentiated by
hand; :func:`finite_diff_grad` is the independent check.

Internally every computation runs on a *stack* of K networks sharing one
architecture (arrays carry a leading K axis).  Training many small models in
one stack amortises numpy call overhead; each stacked model sees only its own
rows and its own optimizer moments, so results equal separate training.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .errors import ContractViolation, InputError, NumericalError, TrainingError

try:
    from . import _kernels
except ImportError:  # pragma: no cover - numba missing
    _kernels = None

LOG_2PI = float(np.log(2.0 * np.pi))
DEFAULT_SIGMA_FLOOR = 1e-3


@dataclass
class NetworkParams:
    """Weights of the trunk and the three heads.

    ``hidden`` holds the ReLU layers as ``(W, b)`` pairs with ``W`` of shape
    (units_out, units_in); ``trunk_out`` maps to the G-dimensional code and
    ``head_alpha``/``head_mu``/``head_sigma`` are G x G.  Gradients reuse
    this container.
    """

    input_dim: int
    hidden: list
    trunk_out: tuple
    head_alpha: tuple
    head_mu: tuple
    head_sigma: tuple

    @property
    def G(self) -> int:
        return self.trunk_out[0].shape[0]

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())

    def arrays(self) -> list:
        out = []
        for w, b in [*self.hidden, self.trunk_out, self.head_alpha, self.head_mu, self.head_sigma]:
            out += [w, b]
        return out

    def with_arrays(self, arrays) -> "NetworkParams":
        arrays = [np.asarray(a, dtype=float) for a in arrays]
        if len(arrays) != 2 * len(self.hidden) + 8:
            raise ContractViolation("parameter list has the wrong length")
        for old, new in zip(self.arrays(), arrays):
            if old.shape != new.shape:
                raise ContractViolation(f"shape mismatch {old.shape} vs {new.shape}")
        return _from_arrays(self.input_dim, len(self.hidden), arrays)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "NetworkParams":
        return self.with_arrays([fn(a) for a in self.arrays()])

    def zeros_like(self) -> "NetworkParams":
        return self.map(np.zeros_like)

    def copy(self) -> "NetworkParams":
        return self.map(np.array)

    def validate(self) -> None:
        prev = self.input_dim
        for w, b in self.hidden:
            if w.ndim != 2 or w.shape[1] != prev or b.shape != (w.shape[0],):
                raise ContractViolation("hidden layer dimensions do not chain")
            prev = w.shape[0]
        w, b = self.trunk_out
        if w.shape[1] != prev or b.shape != (w.shape[0],):
            raise ContractViolation("trunk output dimensions do not chain")
        G = w.shape[0]
        for w, b in (self.head_alpha, self.head_mu, self.head_sigma):
            if w.shape != (G, G) or b.shape != (G,):
                raise ContractViolation("heads must be G x G with a G bias")
        if not all(np.all(np.isfinite(a)) for a in self.arrays()):
            raise ContractViolation("non-finite network parameter")


def _from_arrays(input_dim: int, n_hidden: int, arrays) -> NetworkParams:
    pairs = [(arrays[2 * i], arrays[2 * i + 1]) for i in range(len(arrays) // 2)]
    return NetworkParams(input_dim, pairs[:n_hidden], *pairs[n_hidden:])


@dataclass
class HeadOutputs:
    alpha: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray


@dataclass
class Batch:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if self.inputs.shape[0] != self.targets.shape[0] or self.targets.shape[0] < 1:
            raise ContractViolation("batch needs n >= 1 matching input rows and targets")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise InputError("batch contains non-finite entries")


@dataclass
class AdamState:
    first_moment: NetworkParams
    second_moment: NetworkParams
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, net: NetworkParams, **kwargs) -> "AdamState":
        return cls(net.zeros_like(), net.zeros_like(), 0, **kwargs)


def init_network(input_dim: int, G: int, hidden_units=(20,), rng=None) -> NetworkParams:
    """He-uniform ReLU trunk, Glorot linear code layer, heads scaled by 0.1."""
    rng = np.random.default_rng(rng)
    hidden = []
    prev = input_dim
    for units in hidden_units:
        limit = np.sqrt(6.0 / prev)
        hidden.append((rng.uniform(-limit, limit, (units, prev)), np.zeros(units)))
        prev = units
    limit = np.sqrt(6.0 / (prev + G))
    trunk_out = (rng.uniform(-limit, limit, (G, prev)), np.zeros(G))
    limit = np.sqrt(3.0 / G)
    heads = [(0.1 * rng.uniform(-limit, limit, (G, G)), np.zeros(G)) for _ in range(3)]
    return NetworkParams(input_dim, hidden, trunk_out, *heads)


def softplus(z):
    return np.logaddexp(0.0, z)


def _lse(a, axis=-1):
    m = a.max(axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True))


# ---------------------------------------------------------------------------
# stacked core: arrays carry a leading model axis K, data is (K, n, d)


def _t(w):
    return np.ascontiguousarray(w.transpose(0, 2, 1))


def _forward(arrays, X, sigma_floor):
    n_layers = len(arrays) // 2 - 4
    acts = [X]
    pre = []
    a = X
    for i in range(n_layers):
        w, b = arrays[2 * i], arrays[2 * i + 1]
        z = a @ _t(w) + b[:, None, :]
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    j = 2 * n_layers
    h = a @ _t(arrays[j]) + arrays[j + 1][:, None, :]
    logits = h @ _t(arrays[j + 2]) + arrays[j + 3][:, None, :]
    mu = h @ _t(arrays[j + 4]) + arrays[j + 5][:, None, :]
    s = h @ _t(arrays[j + 6]) + arrays[j + 7][:, None, :]
    log_alpha = logits - _lse(logits)
    sigma = softplus(s) + sigma_floor
    return log_alpha, mu, sigma, (acts, pre, h, s)


def _component_logpdf(log_alpha, mu, sigma, y):
    resid = y[..., None] - mu
    z = resid / sigma
    return log_alpha - 0.5 * LOG_2PI - np.log(sigma) - 0.5 * z * z, resid


def _loss_grad(arrays, X, y, weights, sigma_floor):
    """Row log-likelihoods (K, n) and gradients of sum_k sum_i w_ki * (-loglik_ki)."""
    log_alpha, mu, sigma, (acts, pre, h, s) = _forward(arrays, X, sigma_floor)
    comp, resid = _component_logpdf(log_alpha, mu, sigma, y)
    lse = _lse(comp)
    gamma = np.exp(comp - lse)
    w = weights[..., None]
    d_logits = (np.exp(log_alpha) - gamma) * w
    inv_var = 1.0 / (sigma * sigma)
    d_mu = -gamma * resid * inv_var * w
    d_s = gamma * (1.0 / sigma - resid * resid * inv_var / sigma) * w * expit(s)

    n_layers = len(pre)
    j = 2 * n_layers
    grads = [None] * len(arrays)
    d_h = 0.0
    for slot, d in zip((j + 2, j + 4, j + 6), (d_logits, d_mu, d_s)):
        grads[slot] = d.transpose(0, 2, 1) @ h
        grads[slot + 1] = d.sum(axis=1)
        d_h = d_h + d @ arrays[slot]
    grads[j] = d_h.transpose(0, 2, 1) @ acts[-1]
    grads[j + 1] = d_h.sum(axis=1)
    d_a = d_h @ arrays[j]
    for i in range(n_layers - 1, -1, -1):
        d_z = d_a * (pre[i] > 0)
        grads[2 * i] = d_z.transpose(0, 2, 1) @ acts[i]
        grads[2 * i + 1] = d_z.sum(axis=1)
        if i > 0:
            d_a = d_z @ arrays[2 * i]
    return lse[..., 0], grads


def stacked_loss_grad(arrays, X, y, weights, sigma_floor, out=None):
    """Dispatch to the fused kernel for one hidden layer, numpy otherwise."""
    if len(arrays) == 10 and _kernels is not None:
        if out is None:
            out = [np.empty_like(a) for a in arrays]
        loglik = np.empty(y.shape)
        _kernels.loss_grad_h1(*arrays, X, y, np.ascontiguousarray(weights, dtype=float),
                              float(sigma_floor), *out, loglik)
        return loglik, out
    return _loss_grad(arrays, X, y, weights, sigma_floor)


def _single(net: NetworkParams):
    return [a[None] for a in net.arrays()]


def mixture_params(net: NetworkParams, X, sigma_floor: float = DEFAULT_SIGMA_FLOOR):
    """Row-wise ``(log_alpha, mu, sigma)``, each of shape (n, G)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != net.input_dim:
        raise ContractViolation(f"expected input dimension {net.input_dim}, got {X.shape[1]}")
    log_alpha, mu, sigma, _ = _forward(_single(net), X[None], sigma_floor)
    return log_alpha[0], mu[0], sigma[0]


def forward_heads(net: NetworkParams, x, sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> HeadOutputs:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != net.input_dim:
        raise ContractViolation(f"expected input of length {net.input_dim}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite network input")
    log_alpha, mu, sigma = mixture_params(net, x[None, :], sigma_floor)
    return HeadOutputs(np.exp(log_alpha[0]), mu[0], sigma[0])


def mixture_log_density(log_alpha, mu, sigma, y):
    """``log sum_g alpha_g N(y; mu_g, sigma_g^2)`` per row; ``y`` has shape (n,)."""
    comp, _ = _component_logpdf(log_alpha, mu, sigma, np.asarray(y, dtype=float))
    return _lse(comp)[..., 0]


def nll_and_grad(net: NetworkParams, batch: Batch, sigma_floor: float = DEFAULT_SIGMA_FLOOR):
    """Mean negative log-likelihood of ``batch`` and its exact gradient."""
    if batch.inputs.shape[1] != net.input_dim:
        raise ContractViolation("batch input dimension does not match the network")
    n = batch.targets.shape[0]
    loglik, grads = _loss_grad(
        _single(net), batch.inputs[None], batch.targets[None], np.full((1, n), 1.0 / n), sigma_floor
    )
    loss = -float(loglik.mean())
    if not np.isfinite(loss):
        bad = np.flatnonzero(~np.isfinite(loglik[0]))
        raise NumericalError(f"non-finite negative log-likelihood at row {int(bad[0]) if bad.size else -1}")
    return loss, net.with_arrays([g[0] for g in grads])


def nll(net: NetworkParams, batch: Batch, sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> float:
    log_alpha, mu, sigma = mixture_params(net, batch.inputs, sigma_floor)
    return -float(np.mean(mixture_log_density(log_alpha, mu, sigma, batch.targets)))


def adam_step(state: AdamState, net: NetworkParams, grads: NetworkParams):
    """One bias-corrected Adam update; returns ``(new_state, new_net)``."""
    params = net.arrays()
    g = grads.arrays()
    m = state.first_moment.arrays()
    v = state.second_moment.arrays()
    if not (len(params) == len(g) == len(m) == len(v)) or any(
        a.shape != b.shape for a, b in zip(params, g)
    ):
        raise ContractViolation("gradient shapes do not match the parameters")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_m, new_v, new_p = [], [], []
    for p, gi, mi, vi in zip(params, g, m, v):
        mi = b1 * mi + (1.0 - b1) * gi
        vi = b2 * vi + (1.0 - b2) * gi * gi
        new_m.append(mi)
        new_v.append(vi)
        new_p.append(p - state.learning_rate * (mi / c1) / (np.sqrt(vi / c2) + state.epsilon))
    new_state = AdamState(
        net.with_arrays(new_m), net.with_arrays(new_v), t,
        state.learning_rate, b1, b2, state.epsilon,
    )
    return new_state, net.with_arrays(new_p)


def finite_diff_grad(
    net: NetworkParams,
    batch: Batch,
    h: float = 1e-5,
    sigma_floor: float = DEFAULT_SIGMA_FLOOR,
    loss: Optional[Callable[[NetworkParams, Batch], float]] = None,
) -> NetworkParams:
    """Central differences of ``loss`` (default: the mixture NLL), one entry at a time."""
    if not (1e-7 <= h <= 1e-3):
        raise InputError("finite-difference step must lie in [1e-7, 1e-3]")
    if loss is None:
        def loss(n_, b_):
            return nll(n_, b_, sigma_floor)
    base = net.copy()
    arrays = base.arrays()
    out = [np.zeros_like(a) for a in arrays]
    for a, g in zip(arrays, out):
        flat = a.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss(base, batch)
            flat[i] = orig - h
            down = loss(base, batch)
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * h)
    return net.with_arrays(out)


# ---------------------------------------------------------------------------
# stacked training


@dataclass
class TrainSettings:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 500
    patience: int = 25
    min_delta: float = 1e-4
    batch_size: Optional[int] = None
    sigma_floor: float = DEFAULT_SIGMA_FLOOR
    # epochs before validation tracking starts; a tiny validation tail can
    # otherwise prefer the untrained network and stop training at once
    warmup: int = 0


class _Flat:
    """All stacked arrays living in one contiguous buffer."""

    def __init__(self, arrays):
        self.shapes = [a.shape for a in arrays]
        sizes = [a.size for a in arrays]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.buf = np.concatenate([a.ravel() for a in arrays])
        K = arrays[0].shape[0]
        # model index of every element, for per-model masked copies
        self.owner = np.concatenate(
            [np.repeat(np.arange(K), a.size // K) for a in arrays]
        )

    def views(self, buf=None):
        buf = self.buf if buf is None else buf
        return [
            buf[self.offsets[i]:self.offsets[i + 1]].reshape(s)
            for i, s in enumerate(self.shapes)
        ]

    def pack(self, arrays):
        return np.concatenate([a.ravel() for a in arrays])


def train_stack(arrays, X, y, train_w, val_w, settings: TrainSettings, rng=None):
    """Adam on K stacked mixture networks with per-model early stopping.

    ``X`` is (K, n, d), ``y`` (K, n); ``train_w``/``val_w`` are 0/1 row masks
    of shape (K, n).  Returns the parameter arrays that reached each model's
    best validation NLL and the per-model best NLL values.  Raises
    :class:`TrainingError` if an active model's loss becomes non-finite.
    """
    K, n = y.shape
    n_train = train_w.sum(axis=1)
    n_val = val_w.sum(axis=1)
    if np.any(n_train < 1) or np.any(n_val < 1):
        raise ContractViolation("every stacked model needs training and validation rows")
    train_scale = train_w / n_train[:, None]
    val_scale = val_w / n_val[:, None]

    flat = _Flat(arrays)
    params = flat.views()
    gbuf = np.zeros_like(flat.buf)
    grad_views = flat.views(gbuf)
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    best = flat.buf.copy()
    m = np.zeros_like(flat.buf)
    v = np.zeros_like(flat.buf)
    s = settings
    best_val = np.full(K, np.inf)
    wait = np.zeros(K, dtype=int)
    active = np.ones(K, dtype=bool)

    minibatch = s.batch_size is not None and s.batch_size < n
    if minibatch:
        rng = np.random.default_rng(rng)

    def evaluate(Xb, yb, wb):
        loglik, grads = stacked_loss_grad(params, Xb, yb, wb, s.sigma_floor, out=grad_views)
        if grads is not grad_views:
            for dst, src in zip(grad_views, grads):
                dst[...] = src
        return loglik

    def check(loglik, epoch):
        val = -(loglik * val_scale).sum(axis=1)
        bad = active & ~np.isfinite(val)
        if np.any(bad):
            raise TrainingError(f"non-finite validation loss in stacked model {int(np.flatnonzero(bad)[0])}")
        if epoch < s.warmup:
            return
        improved = active & (val < best_val - s.min_delta)
        if np.any(improved):
            np.copyto(best, flat.buf, where=improved[flat.owner])
            best_val[improved] = val[improved]
        wait[improved] = 0
        wait[active & ~improved] += 1
        active[:] &= wait < s.patience

    step = 0
    finished = False
    for epoch in range(s.epochs):
        if minibatch:
            order = rng.permutation(n)
            batches = [order[i:i + s.batch_size] for i in range(0, n, s.batch_size)]
        else:
            batches = [None]
        for bi, idx in enumerate(batches):
            if idx is None:
                check(evaluate(X, y, train_scale), epoch)
            else:
                if bi == 0:
                    log_alpha, mu, sigma, _ = _forward(params, X, s.sigma_floor)
                    check(mixture_log_density(log_alpha, mu, sigma, y), epoch)
                w_b = train_w[:, idx]
                cnt = np.maximum(w_b.sum(axis=1, keepdims=True), 1.0)
                evaluate(np.ascontiguousarray(X[:, idx]), np.ascontiguousarray(y[:, idx]), w_b / cnt)
            if not np.any(active):
                finished = True
                break
            g = gbuf
            if not np.all(np.isfinite(g)):
                if np.any(~np.isfinite(g) & active[flat.owner]):
                    raise TrainingError("non-finite gradient")
                g = np.where(np.isfinite(g), g, 0.0)
            step += 1
            m *= s.beta1
            m += (1.0 - s.beta1) * g
            v *= s.beta2
            v += (1.0 - s.beta2) * g * g
            c1 = 1.0 - s.beta1**step
            c2 = 1.0 - s.beta2**step
            flat.buf -= s.learning_rate * (m / c1) / (np.sqrt(v / c2) + s.epsilon)
        if finished:
            break
    if not finished:
        # epoch budget exhausted: the final parameters are a candidate too
        log_alpha, mu, sigma, _ = _forward(params, X, s.sigma_floor)
        val = -(mixture_log_density(log_alpha, mu, sigma, y) * val_scale).sum(axis=1)
        improved = active & np.isfinite(val) & (val < best_val - s.min_delta)
        if np.any(improved):
            np.copyto(best, flat.buf, where=improved[flat.owner])
            best_val[improved] = val[improved]
    return flat.views(best), best_val


def pad_network(net: NetworkParams, width: int) -> NetworkParams:
    """Widen the first layer to ``width`` inputs with zero weights on the extra columns."""
    extra = width - net.input_dim
    if extra < 0:
        raise ContractViolation("cannot pad a network to fewer inputs")
    arrays = net.arrays()
    arrays[0] = np.hstack([arrays[0], np.zeros((arrays[0].shape[0], extra))])
    return _from_arrays(width, len(net.hidden), arrays)


def stack_networks(nets) -> list:
    """Stack networks along a new leading axis, padding inputs to a common width."""
    width = max(net.input_dim for net in nets)
    nets = [pad_network(net, width) for net in nets]
    return [np.stack(parts) for parts in zip(*(net.arrays() for net in nets))]


def unstack_network(arrays, k: int, input_dim: int) -> NetworkParams:
    n_hidden = len(arrays) // 2 - 4
    out = [np.array(a[k]) for a in arrays]
    out[0] = np.ascontiguousarray(out[0][:, :input_dim])
    return _from_arrays(input_dim, n_hidden, out)
