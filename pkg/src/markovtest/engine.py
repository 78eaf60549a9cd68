"""End-to-end Markov property test and sequential order determination."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import statistic as st
from .errors import ConfigurationError, StageError
from .generators import EmbeddingLayout, fit_generators
from .mdn import MdnHyperParams
from .series import TimeSeries, chunk_indices, embed

# stream labels for seed derivation
_FIT, _FREQ, _MC, _BOOT = 1, 2, 3, 4


@dataclass(frozen=True)
class TestConfig:
    """Hyper-parameters of one test.  ``test_dims`` are 0-based column indices."""

    L: int = 3
    B: int = 1000
    M: int = 100
    Q: int = 10
    alpha: float = 0.05
    n_boot: int = 2000
    variant: str = st.DOUBLY_ROBUST
    g_grid: tuple = (1, 2, 3, 5, 8)
    folds: int = 4
    G: Optional[int] = None
    test_dims: Optional[tuple] = None
    seed: int = 0
    quantile_level: Optional[float] = None
    hp: MdnHyperParams = field(default_factory=MdnHyperParams)
    workers: int = 1

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        if self.L < 2:
            raise ConfigurationError("L must be at least 2")
        if self.Q < 2:
            raise ConfigurationError("Q must be at least 2")
        if self.B < 1:
            raise ConfigurationError("B must be at least 1")
        if self.M < 1:
            raise ConfigurationError("M must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("alpha must lie strictly between 0 and 1")
        if self.n_boot < 500:
            raise ConfigurationError("n_boot must be at least 500")
        if self.variant not in st.VARIANTS:
            raise ConfigurationError(f"variant must be one of {st.VARIANTS}")
        if self.G is not None and self.G < 1:
            raise ConfigurationError("G must be at least 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")

    def check_length(self, T: int) -> int:
        """Chunk length ``n`` for a series of length ``T``; raises if too short."""
        if T < self.L * (self.Q + 2):
            raise ConfigurationError(
                f"series of length {T} is too short: need T >= L*(Q+2) = {self.L * (self.Q + 2)}"
            )
        n = T // self.L
        if self.Q > n - 1:
            raise ConfigurationError(f"Q={self.Q} exceeds n-1={n - 1}")
        return n

    def echo(self) -> dict:
        return {"L": self.L, "B": self.B, "M": self.M, "Q": self.Q, "n_boot": self.n_boot,
                "seed": int(self.seed), "variant": "dr" if self.variant == st.DOUBLY_ROBUST else "plugin"}


@dataclass
class TestReport:
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    config: dict
    argmax: dict
    runtime_seconds: float
    k: int = 1
    top: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    per_qb: Optional[np.ndarray] = field(default=None, repr=False)

    __test__ = False

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "config": self.config,
            "argmax": self.argmax,
        }
        if timing:
            out["runtime_seconds"] = self.runtime_seconds
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2)


@dataclass
class OrderReport:
    per_k: list
    estimated_order: Union[int, str]

    def to_dict(self, timing: bool = True) -> dict:
        return {"per_k": [dict(r.to_dict(timing), k=r.k) for r in self.per_k],
                "estimated_order": self.estimated_order}

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2)


def _stream(seed: int, label: int, *more: int):
    return np.random.default_rng(np.random.SeedSequence([int(seed), label, *more]))


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _top(per_qb: np.ndarray, B: int, count: int = 5) -> list:
    flat = np.argsort(per_qb, axis=None)[::-1][:count]
    rows, cols = np.unravel_index(flat, per_qb.shape)
    return [{"q": int(c) + 2, "b": int(r % B), "part": "real" if r < B else "imag",
             "value": float(per_qb[r, c])} for r, c in zip(rows, cols)]


def run_test(series: TimeSeries, config: TestConfig = TestConfig(), k: int = 1) -> TestReport:
    """Test whether the k-lag embedding of ``series`` is first-order Markov.

    All randomness derives from ``config.seed``, so the report is a pure
    function of the series and the config.
    """
    start = time.perf_counter()
    if not isinstance(series, TimeSeries):
        series = TimeSeries(series)
    d = series.d
    test_dims = tuple(range(d)) if config.test_dims is None else tuple(int(j) for j in config.test_dims)
    if not test_dims or min(test_dims) < 0 or max(test_dims) >= d or len(set(test_dims)) != len(test_dims):
        raise ConfigurationError(f"test_dims must be distinct column indices in 0..{d - 1}")
    if k < 1:
        raise ConfigurationError("k must be at least 1")
    emb = _stage("embed", embed, series, k)
    n = config.check_length(emb.T)
    _stage("chunk", chunk_indices, emb.T, config.L, config.Q)
    layout = EmbeddingLayout(d, k, test_dims)
    Y = emb.values
    need_backward = config.variant == st.DOUBLY_ROBUST

    fit_root = int(np.random.SeedSequence([int(config.seed), _FIT]).generate_state(1, np.uint64)[0])
    pairs, G_report = _stage(
        "fit_generators", fit_generators, Y, emb.column_types, layout, n, config.L, config.M,
        config.hp, fit_root, G=config.G, g_grid=config.g_grid, folds=config.folds,
        backward=need_backward,
    )
    freqs = _stage("sample_frequencies", st.sample_frequencies, config.B, d * k,
                   _stream(config.seed, _FREQ), d_mu=len(test_dims) * k)
    terms = _stage("statistic_terms", st.statistic_terms, Y, pairs, freqs, n, config.L, config.Q,
                   _stream(config.seed, _MC), need_backward=need_backward)
    agg = _stage("aggregate_statistic", st.aggregate_statistic, terms, config.variant)
    sigmas = _stage("covariance", lambda: [st.covariance_q(terms, q, config.variant)
                                           for q in range(2, config.Q + 1)])
    boot = _stage("bootstrap", st.bootstrap_critical, sigmas, config.alpha, config.n_boot,
                  _stream(config.seed, _BOOT), quantile_level=config.quantile_level)

    echo = config.echo()
    echo["G"] = config.G if config.G is not None else G_report
    return TestReport(
        statistic=agg.s_hat,
        critical_value=boot.c_alpha,
        p_value=st.p_value(agg.s_hat, boot.maxima),
        reject=bool(agg.s_hat > boot.c_alpha),
        alpha=config.alpha,
        config=echo,
        argmax={"q": agg.argmax_q, "b": agg.argmax_b, "part": agg.argmax_part},
        runtime_seconds=time.perf_counter() - start,
        k=k,
        top=_top(agg.per_qb, config.B),
        warnings=list(boot.warnings),
        per_qb=agg.per_qb,
    )


def estimate_order(series: TimeSeries, config: TestConfig = TestConfig(), k_max: int = 5) -> OrderReport:
    """Test k = 1, 2, ... and stop at the first k that is not rejected."""
    if k_max < 1:
        raise ConfigurationError("k_max must be at least 1")
    if not isinstance(series, TimeSeries):
        series = TimeSeries(series)
    config.check_length(series.T - k_max + 1)
    reports = []
    for k in range(1, k_max + 1):
        report = run_test(series, config, k)
        reports.append(report)
        if not report.reject:
            return OrderReport(reports, k)
    return OrderReport(reports, f"> {k_max}")

