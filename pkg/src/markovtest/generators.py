"""Forward and backward conditional generators and their Monte Carlo CCFs.

For a k-lag embedding ``Y_t = (X_t, ..., X_{t+k-1})`` only one block of the
next (or previous) embedded row is random; the rest is copied from the
conditioning row.  The forward model therefore learns the new block
``X_{t+k}`` (restricted to the tested columns) given ``Y_t`` and the
backward model learns ``X_{t-1}`` given ``Y_t``; CCFs of the full embedded
row combine a deterministic phase with the Monte Carlo part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import mdn
from .errors import ConfigurationError, StageError


def ccf_mc(model, x, freqs, M: int, rng) -> np.ndarray:
    """(1/M) sum_m exp(i w' Y_m) for every row w of ``freqs``, from one set of M draws."""
    if M < 1:
        raise ConfigurationError("M must be at least 1")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return ccf_mc_rows(model, x, freqs, M, rng)[0]


def ccf_mc_rows(model, X, freqs, M: int, rng, chunk_elems: int = 4_000_000) -> np.ndarray:
    """Row-wise :func:`ccf_mc`; returns ``P x B``.  Draws are made once per row."""
    if M < 1:
        raise ConfigurationError("M must be at least 1")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
    rng = np.random.default_rng(rng)
    P = X.shape[0]
    draws = model.sample_rows(np.repeat(X, M, axis=0), rng).reshape(P, M, -1)
    if draws.shape[2] != freqs.shape[1]:
        raise ConfigurationError(
            f"frequency dimension {freqs.shape[1]} does not match response dimension {draws.shape[2]}"
        )
    out = np.empty((P, freqs.shape[0]), dtype=complex)
    step = max(1, chunk_elems // max(1, M * freqs.shape[0]))
    for s in range(0, P, step):
        phase = draws[s:s + step] @ freqs.T
        out[s:s + step] = np.cos(phase).mean(axis=1) + 1j * np.sin(phase).mean(axis=1)
    return out


@dataclass
class GeneratorPair:
    """Generators trained on rows ``0 .. chunk_index * n - 1`` of the embedded series.

    ``target_columns`` are the columns of an embedded row entering the forward
    exponential; ``forward_known`` / ``backward_known`` are the columns of the
    conditioning row that reappear in the next / previous row.
    """

    chunk_index: int
    forward: mdn.FactorizedConditionalModel
    backward: Optional[mdn.FactorizedConditionalModel]
    target_columns: list
    forward_known: list
    backward_known: list
    M: int

    def forward_ccf(self, points, freqs, rng):
        freqs = np.asarray(freqs, dtype=float)
        split = len(self.forward_known)
        mc = ccf_mc_rows(self.forward, points, freqs[:, split:], self.M, rng)
        if split == 0:
            return mc
        return np.exp(1j * (points[:, self.forward_known] @ freqs[:, :split].T)) * mc

    def backward_ccf(self, points, freqs, rng):
        if self.backward is None:
            raise ConfigurationError("this pair has no backward generator")
        freqs = np.asarray(freqs, dtype=float)
        block = freqs.shape[1] - len(self.backward_known)
        mc = ccf_mc_rows(self.backward, points, freqs[:, :block], self.M, rng)
        if not self.backward_known:
            return mc
        return np.exp(1j * (points[:, self.backward_known] @ freqs[:, block:].T)) * mc


@dataclass(frozen=True)
class EmbeddingLayout:
    """Column bookkeeping for a k-lag embedding of a d-dimensional series."""

    d: int
    k: int
    test_dims: tuple

    @property
    def target_columns(self) -> list:
        return [b * self.d + j for b in range(self.k) for j in self.test_dims]

    @property
    def new_block(self) -> list:
        return [(self.k - 1) * self.d + j for j in self.test_dims]

    @property
    def forward_known(self) -> list:
        # tested columns of blocks 1..k-1 of the conditioning row
        return [b * self.d + j for b in range(1, self.k) for j in self.test_dims]

    @property
    def backward_known(self) -> list:
        return list(range(0, (self.k - 1) * self.d))

    @property
    def first_block(self) -> list:
        return list(range(self.d))


def _problems(Y, column_types, layout: EmbeddingLayout, stop: int, backward: bool):
    """Training pairs (Y[s-1], Y[s]) for s = 1 .. stop-1."""
    prev, cur = Y[:stop - 1], Y[1:stop]
    fwd = mdn.FactorizedProblem(prev, cur[:, layout.new_block],
                                [column_types[c] for c in layout.new_block])
    if not backward:
        return fwd, None
    bwd = mdn.FactorizedProblem(cur, prev[:, layout.first_block],
                                [column_types[c] for c in layout.first_block])
    return fwd, bwd


def fit_generators(Y, column_types: Sequence[str], layout: EmbeddingLayout, n: int, L: int,
                   M: int, hp: mdn.MdnHyperParams, seed_root: int, G=None,
                   g_grid=(1, 2, 3, 5, 8), folds: int = 4, backward: bool = True):
    """Generator pairs for l = 1..L-1, pair l seeing only rows ``0 .. l*n - 1``.

    ``G`` fixes the mixture size; otherwise each factor's G is chosen by
    blocked cross-validation on the l = 1 slice and reused for every l.
    Returns the pairs and the chosen G per factor.
    """
    Y = np.asarray(Y, dtype=float)
    problems = []
    for ell in range(1, L):
        problems.append(_problems(Y[:ell * n], column_types, layout, ell * n, backward))

    flat = []
    for fwd, bwd in problems:
        flat.append(fwd)
        if bwd is not None:
            flat.append(bwd)
    roots = [int(s) for s in np.random.SeedSequence([seed_root, 11]).generate_state(len(flat), np.uint64)]

    try:
        if G is not None:
            chosen = [[int(G)] * len(p.column_types) for p in flat[:2 if backward else 1]]
        else:
            first = [problems[0][0]] + ([problems[0][1]] if backward else [])
            sel_roots = [int(s) for s in
                         np.random.SeedSequence([seed_root, 12]).generate_state(len(first), np.uint64)]
            chosen = mdn.select_g_factorized(first, g_grid, folds, hp, sel_roots)
    except Exception as exc:
        raise StageError("select_g (chunk 1)", exc) from exc

    G_lists = []
    for _ in problems:
        G_lists.append(chosen[0])
        if backward:
            G_lists.append(chosen[1])
    try:
        models = mdn.fit_factorized_many(flat, hp, roots, G_lists)
    except Exception as exc:
        raise StageError("fit_generators", exc) from exc

    pairs = []
    step = 2 if backward else 1
    for idx in range(L - 1):
        fwd = models[step * idx]
        bwd = models[step * idx + 1] if backward else None
        pairs.append(GeneratorPair(idx + 1, fwd, bwd, layout.target_columns,
                                   layout.forward_known, layout.backward_known, M))
    G_report = {"forward": chosen[0]}
    if backward:
        G_report["backward"] = chosen[1]
    return pairs, G_report
