"""Conditional density models built on the mixture network.

A :class:`FactorizedConditionalModel` writes ``f(y | x)`` as a product of
univariate factors ``f_j(y_j | x, y_1..y_{j-1})`` in natural column order, so
results depend on the column order of the response.  Continuous factors are
mixture density networks, binary factors are logistic regressions, and
``semicontinuous`` factors (zero-inflated) combine a logistic indicator for
``y_j != 0`` with a mixture network fit on the nonzero rows.

Fitting is batched: every network needed by a set of factorized models (and,
for G selection, every cross-validation fold) is trained in one stacked run
per distinct G.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import nn
from .errors import ConfigurationError, InputError, TrainingError

CONTINUOUS = "continuous"
BINARY = "binary"
SEMICONTINUOUS = "semicontinuous"
COLUMN_TYPES = (CONTINUOUS, BINARY, SEMICONTINUOUS)

PROB_CLAMP = 1e-6


@dataclass(frozen=True)
class MdnHyperParams:
    hidden_units: tuple = (20,)
    learning_rate: float = 1e-2
    epochs: int = 500
    patience: int = 100
    warmup: int = 100
    min_delta: float = 1e-4
    val_fraction: float = 0.1
    sigma_floor: float = nn.DEFAULT_SIGMA_FLOOR
    full_batch_max_rows: int = 4096
    batch_size: int = 256
    min_rows: int = 20

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["hidden_units"] = list(self.hidden_units)
        return d


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InputError("non-finite value passed to a density model")


def _standardizer(a):
    a = np.asarray(a, dtype=float)
    mean = a.mean(axis=0)
    std = a.std(axis=0)
    std = np.where(std > 1e-12 * np.maximum(1.0, np.abs(mean)), std, 1.0)
    return mean, std


@dataclass
class UnivariateMdn:
    """Mixture density network for a scalar response, with its standardizers."""

    net: nn.NetworkParams
    sigma_floor: float
    input_mean: np.ndarray
    input_std: np.ndarray
    target_mean: float
    target_std: float
    seed: Optional[int] = None

    @property
    def G(self) -> int:
        return self.net.G

    @property
    def input_dim(self) -> int:
        return self.net.input_dim

    def mixture(self, X):
        """``(alpha, mu, sigma)`` per row, in original target units."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Xs = (X - self.input_mean) / self.input_std
        log_alpha, mu, sigma = nn.mixture_params(self.net, Xs, self.sigma_floor)
        return (np.exp(log_alpha),
                mu * self.target_std + self.target_mean,
                sigma * self.target_std)

    def log_density_rows(self, y, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).reshape(-1)
        _check_finite(X, y)
        Xs = (X - self.input_mean) / self.input_std
        ys = (y - self.target_mean) / self.target_std
        log_alpha, mu, sigma = nn.mixture_params(self.net, Xs, self.sigma_floor)
        return nn.mixture_log_density(log_alpha, mu, sigma, ys) - np.log(self.target_std)

    def log_density(self, y: float, x) -> float:
        return float(self.log_density_rows([y], np.asarray(x, dtype=float)[None, :])[0])

    def mean(self, X):
        alpha, mu, _ = self.mixture(X)
        return np.sum(alpha * mu, axis=1)

    def sample_rows(self, X, rng) -> np.ndarray:
        """One draw per row of ``X``."""
        alpha, mu, sigma = self.mixture(X)
        rng = np.random.default_rng(rng)
        n = alpha.shape[0]
        u = rng.random(n)
        g = np.minimum((u[:, None] > np.cumsum(alpha, axis=1)).sum(axis=1), alpha.shape[1] - 1)
        rows = np.arange(n)
        return mu[rows, g] + sigma[rows, g] * rng.standard_normal(n)

    def sample(self, x, n: int, rng) -> np.ndarray:
        if n < 1:
            raise InputError("sample size must be positive")
        x = np.asarray(x, dtype=float).reshape(1, -1)
        _check_finite(x)
        return self.sample_rows(np.repeat(x, n, axis=0), rng)

    def to_dict(self) -> dict:
        return {
            "type": "mdn",
            "input_dim": self.net.input_dim,
            "n_hidden": len(self.net.hidden),
            "arrays": [a.tolist() for a in self.net.arrays()],
            "sigma_floor": self.sigma_floor,
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "G": self.G,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UnivariateMdn":
        arrays = [np.asarray(a, dtype=float) for a in d["arrays"]]
        net = nn._from_arrays(d["input_dim"], d["n_hidden"], arrays)
        net.validate()
        return cls(net, d["sigma_floor"], np.asarray(d["input_mean"], dtype=float),
                   np.asarray(d["input_std"], dtype=float), d["target_mean"],
                   d["target_std"], d.get("seed"))


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float

    def prob(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = X @ self.weights + self.bias
        p = 1.0 / (1.0 + np.exp(-z))
        return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)

    def log_prob_rows(self, y, X):
        y = np.asarray(y, dtype=float).reshape(-1)
        p = self.prob(X)
        return np.where(y > 0.5, np.log(p), np.log1p(-p))

    def sample_rows(self, X, rng):
        rng = np.random.default_rng(rng)
        p = self.prob(X)
        return (rng.random(p.shape[0]) < p).astype(float)

    def to_dict(self) -> dict:
        return {"type": "logistic", "weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.asarray(d["weights"], dtype=float), float(d["bias"]))


def fit_logistic(X, y, max_iter: int = 50, tol: float = 1e-8, ridge: float = 1e-8) -> LogisticModel:
    """Maximum likelihood logistic regression by Newton-Raphson.

    A tiny ridge keeps the Hessian invertible under separation; iterations
    stop once the Newton step falls below ``tol`` or after ``max_iter``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    Z = np.hstack([X, np.ones((X.shape[0], 1))])
    beta = np.zeros(Z.shape[1])
    penalty = ridge * np.eye(Z.shape[1])
    penalty[-1, -1] = 0.0
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-(Z @ beta)))
        grad = Z.T @ (y - p) - penalty @ beta * Z.shape[0]
        W = p * (1.0 - p)
        H = (Z * W[:, None]).T @ Z + penalty * Z.shape[0] + 1e-12 * np.eye(Z.shape[1])
        step = np.linalg.solve(H, grad)
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    return LogisticModel(beta[:-1].copy(), float(beta[-1]))


# ---------------------------------------------------------------------------
# factor components


@dataclass
class ContinuousComponent:
    mdn: UnivariateMdn
    kind: str = CONTINUOUS

    def log_density_rows(self, y, X):
        return self.mdn.log_density_rows(y, X)

    def sample_rows(self, X, rng):
        return self.mdn.sample_rows(X, rng)

    def to_dict(self):
        return {"kind": self.kind, "mdn": self.mdn.to_dict()}


@dataclass
class BinaryComponent:
    logistic: LogisticModel
    kind: str = BINARY

    def log_density_rows(self, y, X):
        return self.logistic.log_prob_rows(y, X)

    def sample_rows(self, X, rng):
        return self.logistic.sample_rows(X, rng)

    def to_dict(self):
        return {"kind": self.kind, "logistic": self.logistic.to_dict()}


@dataclass
class SemicontinuousComponent:
    """Zero-inflated factor: P(y != 0 | x) times a network density on the nonzero part."""

    indicator: LogisticModel
    mdn: UnivariateMdn
    kind: str = SEMICONTINUOUS

    def log_density_rows(self, y, X):
        y = np.asarray(y, dtype=float).reshape(-1)
        nonzero = y != 0.0
        out = self.indicator.log_prob_rows(nonzero.astype(float), X)
        if np.any(nonzero):
            X = np.atleast_2d(X)
            out[nonzero] += self.mdn.log_density_rows(y[nonzero], X[nonzero])
        return out

    def sample_rows(self, X, rng):
        rng = np.random.default_rng(rng)
        on = self.indicator.sample_rows(X, rng) > 0.5
        values = self.mdn.sample_rows(X, rng)
        return np.where(on, values, 0.0)

    def to_dict(self):
        return {"kind": self.kind, "indicator": self.indicator.to_dict(), "mdn": self.mdn.to_dict()}


def _component_from_dict(d):
    if d["kind"] == CONTINUOUS:
        return ContinuousComponent(UnivariateMdn.from_dict(d["mdn"]))
    if d["kind"] == BINARY:
        return BinaryComponent(LogisticModel.from_dict(d["logistic"]))
    if d["kind"] == SEMICONTINUOUS:
        return SemicontinuousComponent(LogisticModel.from_dict(d["indicator"]),
                                       UnivariateMdn.from_dict(d["mdn"]))
    raise InputError(f"unknown component kind {d['kind']!r}")


@dataclass
class FactorizedConditionalModel:
    """Joint conditional density of a d_y response as a chain of univariate factors."""

    x_dim: int
    components: list
    seed: Optional[int] = None

    @property
    def response_dim(self) -> int:
        return len(self.components)

    @property
    def column_types(self) -> list:
        return [c.kind for c in self.components]

    @property
    def G(self) -> list:
        """Mixture size per factor (None for purely binary factors)."""
        return [c.mdn.G if hasattr(c, "mdn") else None for c in self.components]

    def log_density_rows(self, Y, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.asarray(Y, dtype=float).reshape(X.shape[0], -1)
        _check_finite(X, Y)
        total = np.zeros(X.shape[0])
        for j, comp in enumerate(self.components):
            total += comp.log_density_rows(Y[:, j], np.hstack([X, Y[:, :j]]))
        return total

    def component_log_densities(self, y, x):
        x = np.asarray(x, dtype=float).reshape(1, -1)
        y = np.asarray(y, dtype=float).reshape(1, -1)
        _check_finite(x, y)
        return [float(c.log_density_rows(y[:, j], np.hstack([x, y[:, :j]]))[0])
                for j, c in enumerate(self.components)]

    def log_density_joint(self, y, x) -> float:
        return float(sum(self.component_log_densities(y, x)))

    def sample_rows(self, X, rng) -> np.ndarray:
        """Ancestral sampling, one joint draw per row of ``X``."""
        rng = np.random.default_rng(rng)
        inputs = np.atleast_2d(np.asarray(X, dtype=float))
        for comp in self.components:
            draw = comp.sample_rows(inputs, rng)
            inputs = np.hstack([inputs, draw[:, None]])
        return inputs[:, -self.response_dim:]

    def sample_joint(self, x, rng) -> np.ndarray:
        return self.sample_rows(np.asarray(x, dtype=float)[None, :], rng)[0]

    def to_dict(self) -> dict:
        return {"x_dim": self.x_dim, "seed": self.seed,
                "components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, d: dict) -> "FactorizedConditionalModel":
        return cls(d["x_dim"], [_component_from_dict(c) for c in d["components"]], d.get("seed"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "FactorizedConditionalModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# batched network fitting


@dataclass
class _Job:
    """One network to train: rows, masks over those rows, G and a seed."""

    X: np.ndarray
    y: np.ndarray
    train: np.ndarray
    val: np.ndarray
    G: int
    seed: Sequence[int]
    model: Optional[UnivariateMdn] = None
    fit_rows: Optional[np.ndarray] = field(default=None, repr=False)


def _split_train_val(rows: np.ndarray, val_fraction: float):
    """Hold out the trailing ``val_fraction`` of ``rows`` (in time order)."""
    n_val = max(1, int(np.ceil(val_fraction * rows.size)))
    return rows[:-n_val], rows[-n_val:]


def _make_job(X, y, fit_rows, G, seed, hp: MdnHyperParams) -> _Job:
    n = X.shape[0]
    train_rows, val_rows = _split_train_val(np.asarray(fit_rows), hp.val_fraction)
    train = np.zeros(n)
    val = np.zeros(n)
    train[train_rows] = 1.0
    val[val_rows] = 1.0
    return _Job(X, y, train, val, int(G), tuple(int(s) for s in seed), fit_rows=np.asarray(fit_rows))


def _run_jobs(jobs: list, hp: MdnHyperParams) -> None:
    """Train every job, one stacked run per G; fills ``job.model``."""
    by_g = {}
    for job in jobs:
        by_g.setdefault(job.G, []).append(job)
    for G in sorted(by_g):
        group = by_g[G]
        try:
            _train_group(group, hp, hp.learning_rate)
        except TrainingError:
            _train_group(group, hp, hp.learning_rate / 10.0)


def _train_group(group: list, hp: MdnHyperParams, lr: float) -> None:
    n_max = max(job.X.shape[0] for job in group)
    d_max = max(job.X.shape[1] for job in group)
    K = len(group)
    X = np.zeros((K, n_max, d_max))
    y = np.zeros((K, n_max))
    tw = np.zeros((K, n_max))
    vw = np.zeros((K, n_max))
    nets = []
    standardizers = []
    for k, job in enumerate(group):
        rows = job.train > 0
        in_mean, in_std = _standardizer(job.X[rows])
        out_mean, out_std = _standardizer(job.y[rows])
        standardizers.append((in_mean, in_std, float(out_mean), float(out_std)))
        n, d = job.X.shape
        X[k, :n, :d] = (job.X - in_mean) / in_std
        y[k, :n] = (job.y - out_mean) / out_std
        tw[k, :n] = job.train
        vw[k, :n] = job.val
        rng = np.random.default_rng(np.random.SeedSequence(job.seed))
        nets.append(nn.init_network(d, job.G, hp.hidden_units, rng))
    n_fit = int(tw.sum(axis=1).max())
    settings = nn.TrainSettings(
        learning_rate=lr,
        epochs=hp.epochs,
        patience=hp.patience,
        min_delta=hp.min_delta,
        batch_size=None if n_fit <= hp.full_batch_max_rows else hp.batch_size,
        sigma_floor=hp.sigma_floor,
        warmup=hp.warmup,
    )
    shuffle_seed = np.random.SeedSequence([*group[0].seed, 7919])
    arrays, _ = nn.train_stack(nn.stack_networks(nets), X, y, tw, vw, settings, rng=shuffle_seed)
    for k, job in enumerate(group):
        net = nn.unstack_network(arrays, k, job.X.shape[1])
        in_mean, in_std, out_mean, out_std = standardizers[k]
        job.model = UnivariateMdn(net, hp.sigma_floor, in_mean, in_std, out_mean, out_std,
                                  seed=int(job.seed[0]))


def _seed_root(rng) -> int:
    return int(np.random.default_rng(rng).integers(2**62))


def fit_univariate(X, y, hp: MdnHyperParams = MdnHyperParams(), rng=None, G: int = 1) -> UnivariateMdn:
    """Maximum likelihood fit keeping the parameters with the best validation NLL."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    _check_finite(X, y)
    if X.shape[0] != y.shape[0]:
        raise InputError("inputs and targets have different lengths")
    if y.shape[0] < hp.min_rows:
        raise ConfigurationError(f"need at least {hp.min_rows} rows to fit, got {y.shape[0]}")
    if G < 1:
        raise ConfigurationError("G must be at least 1")
    job = _make_job(X, y, np.arange(y.shape[0]), G, (_seed_root(rng), 0), hp)
    _run_jobs([job], hp)
    return job.model


def blocked_folds(n: int, folds: int) -> list:
    """Contiguous index blocks covering ``range(n)``."""
    return [b for b in np.array_split(np.arange(n), folds)]


def _cv_jobs(X, y, grid, folds, hp, root, tag):
    jobs = []
    blocks = blocked_folds(y.shape[0], folds)
    for G in grid:
        for f, block in enumerate(blocks):
            keep = np.setdiff1d(np.arange(y.shape[0]), block)
            job = _make_job(X, y, keep, G, (root, tag, f, G), hp)
            job.held_out = block
            jobs.append(job)
    return jobs


def _pick_g(jobs, grid):
    """Smallest G whose held-out NLL is within one paired standard error of the best.

    Every row is held out exactly once, so per-row losses of two grid values
    can be differenced; near-ties within that noise go to the smaller G.
    """
    rows = {}
    for job in jobs:
        held = job.held_out
        nll = -job.model.log_density_rows(job.y[held], job.X[held])
        rows.setdefault(job.G, {})[int(held[0])] = nll
    losses = {G: np.concatenate([parts[k] for k in sorted(parts)]) for G, parts in rows.items()}
    scores = {G: float(v.mean()) for G, v in losses.items()}
    best = min(sorted(grid), key=lambda g: scores[g])
    for G in sorted(grid):
        diff = losses[G] - losses[best]
        se = float(diff.std(ddof=1) / np.sqrt(diff.size)) if diff.size > 1 else 0.0
        if diff.mean() <= se:
            return G, scores
    return best, scores


def _check_grid(grid, folds):
    grid = [int(g) for g in grid]
    if not grid:
        raise ConfigurationError("G grid is empty")
    if min(grid) < 1:
        raise ConfigurationError("G grid values must be at least 1")
    if folds < 2:
        raise ConfigurationError("need at least two folds")
    return sorted(set(grid))


def select_g(X, y, grid=(1, 2, 3, 5, 8), folds: int = 4, hp: MdnHyperParams = MdnHyperParams(),
             rng=None) -> int:
    """Cross-validated G over contiguous folds, preferring the smaller G on near-ties."""
    grid = _check_grid(grid, folds)
    if len(grid) == 1:
        return grid[0]
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    _check_finite(X, y)
    jobs = _cv_jobs(X, y, grid, folds, hp, _seed_root(rng), 0)
    _run_jobs(jobs, hp)
    return _pick_g(jobs, grid)[0]


# ---------------------------------------------------------------------------
# factorized models


@dataclass
class FactorizedProblem:
    """Data for one factorized model: predictors, responses and column kinds."""

    x: np.ndarray
    y: np.ndarray
    column_types: list

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.y = np.asarray(self.y, dtype=float).reshape(self.x.shape[0], -1)
        _check_finite(self.x, self.y)
        if self.column_types is None:
            self.column_types = [CONTINUOUS] * self.y.shape[1]
        self.column_types = list(self.column_types)
        if len(self.column_types) != self.y.shape[1]:
            raise InputError("column_types must have one entry per response column")
        for j, kind in enumerate(self.column_types):
            if kind not in COLUMN_TYPES:
                raise InputError(f"column {j}: unknown column type {kind!r}")
            if kind == BINARY and not np.all(np.isin(self.y[:, j], (0.0, 1.0))):
                raise InputError(f"column {j} is declared binary but holds values other than 0/1")

    def component_data(self, j: int):
        """Predictors and target of factor ``j`` (network part only for semicontinuous)."""
        inputs = np.hstack([self.x, self.y[:, :j]])
        target = self.y[:, j]
        if self.column_types[j] == SEMICONTINUOUS:
            rows = target != 0.0
            return inputs[rows], target[rows]
        return inputs, target


def _network_components(problem: FactorizedProblem):
    return [j for j, kind in enumerate(problem.column_types) if kind != BINARY]


def select_g_factorized(problems: list, grid, folds: int, hp: MdnHyperParams, roots: list) -> list:
    """Per-problem list of chosen G (None for binary factors), all folds trained jointly."""
    grid = _check_grid(grid, folds)
    all_jobs = []
    owners = []
    for p, (problem, root) in enumerate(zip(problems, roots)):
        for j in _network_components(problem):
            X, y = problem.component_data(j)
            if len(grid) == 1:
                continue
            if y.shape[0] < hp.min_rows * folds / (folds - 1):
                raise ConfigurationError(
                    f"factor {j} has {y.shape[0]} rows, too few for {folds}-fold selection"
                )
            jobs = _cv_jobs(X, y, grid, folds, hp, root, j + 1)
            all_jobs += jobs
            owners.append((p, j, jobs))
    _run_jobs(all_jobs, hp)
    out = [[None] * len(problem.column_types) for problem in problems]
    for p, problem in enumerate(problems):
        for j in _network_components(problem):
            out[p][j] = grid[0]
    for p, j, jobs in owners:
        out[p][j] = _pick_g(jobs, grid)[0]
    return out


def fit_factorized_many(problems: list, hp: MdnHyperParams, roots: list, G_lists: list) -> list:
    """Fit several factorized models, sharing stacked training runs between them."""
    jobs = []
    plan = []
    for problem, root, G_list in zip(problems, roots, G_lists):
        entries = []
        for j, kind in enumerate(problem.column_types):
            if kind == BINARY:
                entries.append((kind, None, None))
                continue
            X, y = problem.component_data(j)
            if y.shape[0] < hp.min_rows:
                raise ConfigurationError(
                    f"factor {j} has {y.shape[0]} usable rows; at least {hp.min_rows} required"
                )
            G = G_list[j] if isinstance(G_list, (list, tuple)) else G_list
            if G is None or int(G) < 1:
                raise ConfigurationError("G must be at least 1")
            job = _make_job(X, y, np.arange(y.shape[0]), G, (root, 1000 + j), hp)
            jobs.append(job)
            entries.append((kind, job, None))
        plan.append(entries)
    _run_jobs(jobs, hp)
    models = []
    for problem, root, entries in zip(problems, roots, plan):
        comps = []
        for j, (kind, job, _) in enumerate(entries):
            inputs = np.hstack([problem.x, problem.y[:, :j]])
            if kind == BINARY:
                comps.append(BinaryComponent(fit_logistic(inputs, problem.y[:, j])))
            elif kind == CONTINUOUS:
                comps.append(ContinuousComponent(job.model))
            else:
                indicator = fit_logistic(inputs, (problem.y[:, j] != 0.0).astype(float))
                comps.append(SemicontinuousComponent(indicator, job.model))
        models.append(FactorizedConditionalModel(problem.x.shape[1], comps, seed=int(root)))
    return models


def fit_factorized(x_block, y_block, column_types=None, hp: MdnHyperParams = MdnHyperParams(),
                   rng=None, G=1, g_grid=None, folds: int = 4) -> FactorizedConditionalModel:
    """Fit ``f(y | x)`` factor by factor; with ``g_grid`` each factor's G is cross-validated."""
    problem = FactorizedProblem(x_block, y_block, column_types)
    root = _seed_root(rng)
    if g_grid is not None:
        G = select_g_factorized([problem], g_grid, folds, hp, [root])[0]
    return fit_factorized_many([problem], hp, [root], [G])[0]


def l2_density_error(model: UnivariateMdn, true_logpdf, x_points, y_grid) -> float:
    """Root mean over ``x_points`` of the integrated squared density difference.

    ``true_logpdf(y, x)`` must broadcast over a y-grid; the integral over
    ``y_grid`` uses the trapezoid rule.
    """
    x_points = np.atleast_2d(np.asarray(x_points, dtype=float))
    if x_points.shape[1] != model.input_dim:
        x_points = x_points.reshape(-1, model.input_dim)
    y_grid = np.asarray(y_grid, dtype=float)
    sq = []
    for x in x_points:
        X = np.repeat(x[None, :], y_grid.size, axis=0)
        diff = np.exp(model.log_density_rows(y_grid, X)) - np.exp(true_logpdf(y_grid, x))
        sq.append(np.trapezoid(diff * diff, y_grid))
    return float(np.sqrt(np.mean(sq)))
