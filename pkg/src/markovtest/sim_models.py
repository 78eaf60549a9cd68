"""Data-generating processes for simulation studies.

The three order-3 trivariate models (VAR, threshold VAR and multivariate
ARCH) use the published coefficient matrices; ``Ar1`` and ``IidNoise`` are
small oracle processes.  Noise written as ``Normal(0, 0.5)`` is read as a
standard deviation of 0.5 unless ``noise_is_variance`` is set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, SimulationError
from .series import TimeSeries

DEFAULT_BURN_IN = 200

_A1 = np.array([[0.5, -0.2, -0.2], [-0.2, 0.5, -0.2], [-0.2, -0.2, 0.5]])
_A2 = np.array([[-0.5, 0.2, 0.2], [0.2, -0.5, 0.2], [0.2, 0.2, -0.5]])
_A3 = np.array([[0.4, -0.1, -0.1], [-0.1, 0.4, -0.1], [-0.1, -0.1, 0.4]])
_B1 = np.array([[0.3, -0.1, -0.1], [-0.1, 0.3, -0.1], [-0.1, -0.3, 0.3]])
_B2 = np.array([[-0.3, 0.1, 0.1], [0.1, -0.3, 0.1], [0.1, 0.1, -0.3]])
_B3 = np.array([[0.25, -0.05, -0.05], [-0.05, 0.25, -0.05], [-0.05, -0.05, 0.25]])
_ARCH_MIX = np.array([[1.0, 0.2, 0.2], [0.2, 1.0, 0.2], [0.2, 0.2, 1.0]])
# rows: variance intercept, then weights on squared lags 1, 2, 3
_ARCH_H = np.array([
    [0.1, 0.6, 0.0, 0.35],
    [0.2, 0.8, 0.05, 0.1],
    [0.1, 0.3, 0.0, 0.65],
])


def companion_radius(mats) -> float:
    """Spectral radius of the companion matrix of a VAR with lag matrices ``mats``."""
    d = mats[0].shape[0]
    p = len(mats)
    C = np.zeros((d * p, d * p))
    C[:d] = np.hstack(mats)
    C[d:, :-d] = np.eye(d * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(C))))


@dataclass
class SimModel:
    """A data-generating process.

    ``kind`` is one of ``var3``, ``threshold3``, ``arch3``, ``ar1`` or ``iid``;
    ``params`` holds the coefficient arrays for that kind.
    """

    kind: str
    params: dict = field(default_factory=dict)
    noise_sd: float = 0.5
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("var3", "threshold3", "arch3", "ar1", "iid"):
            raise InputError(f"unknown model kind {self.kind!r}")
        if self.kind in ("var3", "threshold3"):
            for key in ("A",) + (("B",) if self.kind == "threshold3" else ()):
                mats = self.params[key]
                if any(np.shape(m) != (3, 3) for m in mats):
                    raise InputError("paper models use 3 x 3 coefficient matrices")
                radius = companion_radius(mats)
                if radius >= 1.0:
                    warnings.warn(f"{key} companion spectral radius {radius:.3f} >= 1", stacklevel=2)

    @property
    def d(self) -> int:
        if self.kind == "ar1":
            return 1
        if self.kind == "iid":
            return int(self.params.get("d", 1))
        return 3

    @property
    def order(self) -> int:
        return {"var3": 3, "threshold3": 3, "arch3": 3, "ar1": 1, "iid": 0}[self.kind]


def paper_model(model_id: int, noise_is_variance: bool = False) -> SimModel:
    """Model 1 (VAR), 2 (threshold) or 3 (multivariate ARCH), all of order 3 in dimension 3."""
    sd = float(np.sqrt(0.5)) if noise_is_variance else 0.5
    if model_id == 1:
        return SimModel("var3", {"A": [_A1.copy(), _A2.copy(), _A3.copy()]}, sd, "Model 1: VAR")
    if model_id == 2:
        return SimModel("threshold3", {"A": [_A1.copy(), _A2.copy(), _A3.copy()],
                                       "B": [_B1.copy(), _B2.copy(), _B3.copy()]}, sd,
                        "Model 2: Threshold")
    if model_id == 3:
        return SimModel("arch3", {"mix": _ARCH_MIX.copy(), "h": _ARCH_H.copy()}, sd,
                        "Model 3: Multivariate ARCH")
    raise InputError(f"unknown paper model id {model_id!r}; expected 1, 2 or 3")


def ar1(a: float = 0.5, noise_sd: float = 1.0) -> SimModel:
    return SimModel("ar1", {"a": float(a)}, noise_sd, f"AR(1) a={a}")


def iid_noise(d: int = 3, sd: float = 1.0) -> SimModel:
    return SimModel("iid", {"d": int(d)}, sd, f"iid N(0, {sd}^2 I_{d})")


def simulate(model: SimModel, T: int, burn_in: int = DEFAULT_BURN_IN, rng=None) -> TimeSeries:
    """Iterate the recursion from a zero state for ``burn_in + T`` steps and keep the last ``T``."""
    if T < 1 or burn_in < 0:
        raise InputError("need T >= 1 and burn_in >= 0")
    rng = np.random.default_rng(rng)
    total = T + burn_in
    d = model.d
    eps = rng.standard_normal((total, d)) * model.noise_sd
    if model.kind == "iid":
        return TimeSeries(eps[burn_in:])

    x = np.zeros((total + 3, d))
    if model.kind == "ar1":
        a = model.params["a"]
        for t in range(3, total + 3):
            x[t] = a * x[t - 1] + eps[t - 3]
    elif model.kind == "var3":
        A1, A2, A3 = model.params["A"]
        for t in range(3, total + 3):
            x[t] = A1 @ x[t - 1] + A2 @ x[t - 2] + A3 @ x[t - 3] + eps[t - 3]
            _check_step(x[t], t - 3)
    elif model.kind == "threshold3":
        A = model.params["A"]
        B = model.params["B"]
        for t in range(3, total + 3):
            M = A if x[t - 1].sum() <= 0 else B
            x[t] = M[0] @ x[t - 1] + M[1] @ x[t - 2] + M[2] @ x[t - 3] + eps[t - 3]
            _check_step(x[t], t - 3)
    else:
        coef = model.params["h"]
        latent = np.zeros((total + 3, d))
        for t in range(3, total + 3):
            sq = latent[t - 3:t][::-1] ** 2  # lags 1, 2, 3
            h = coef[:, 0] + np.einsum("jl,lj->j", coef[:, 1:], sq)
            latent[t] = np.sqrt(h) * eps[t - 3]
            _check_step(latent[t], t - 3)
        x = latent @ model.params["mix"].T
    return TimeSeries(x[3 + burn_in:])


def _check_step(row, step):
    if not np.all(np.isfinite(row)) or np.max(np.abs(row)) > 1e100:
        raise SimulationError(f"simulated path overflowed at step {step}")
