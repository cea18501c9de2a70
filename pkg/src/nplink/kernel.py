"""Total-variation kernel between datacubes and the non-parametric link estimator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .features import DEFAULT_LAMBDA, Datacube, PackedCubes, build_datacube, pair_features
from .graph import DEFAULT_LAG, DEFAULT_R_MAX, GraphSequence
from .lsh import LshIndex, LshParams, build_index

DEFAULT_BANDWIDTH = 0.8
DEFAULT_TOP_K = 100


@dataclass(frozen=True)
class CellPosterior:
    """Normal approximation N(p_hat, p_hat (1 - p_hat) / n) of a cell's link rate."""

    p_hat: float
    n: float

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise ValueError(f"p_hat={self.p_hat} outside [0, 1]")
        if self.n < 0:
            raise ValueError("n must be non-negative")

    @classmethod
    def from_counts(cls, n: float, n_plus: float) -> "CellPosterior":
        return cls(n_plus / n if n > 0 else 0.0, float(n))

    @property
    def variance(self) -> float:
        return self.p_hat * (1.0 - self.p_hat) / self.n if self.n > 0 else 0.0


@dataclass(frozen=True)
class KernelConfig:
    b: float = DEFAULT_BANDWIDTH
    top_k: int = DEFAULT_TOP_K
    lam: float = DEFAULT_LAMBDA
    use_lsh: bool = False
    lag: int = DEFAULT_LAG
    r_max: int = DEFAULT_R_MAX
    lsh: LshParams = field(default_factory=LshParams)

    def __post_init__(self):
        if not 0.0 < self.b < 1.0:
            raise ValueError("bandwidth b must lie in (0, 1)")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must lie in (0, 1)")
        if self.lag < 1 or self.r_max < 1:
            raise ValueError("lag and r_max must be >= 1")


def tv_normal(a: CellPosterior, b: CellPosterior) -> float:
    """Total variation distance between two cell posteriors.

    Zero-variance posteriors (``n == 0`` or ``p_hat`` in {0, 1}) are point masses
    at ``p_hat``; see :func:`nplink._kernels._pure.tv_posterior`.
    """
    return K.tv_posterior(a.p_hat, a.n, b.p_hat, b.n)


def datacube_distance(d1: Datacube, d2: Datacube, lam: float = DEFAULT_LAMBDA) -> float:
    """Sum of per-cell TV over the cells stored in either cube, smoothing the missing side."""
    return K.cube_distance(d1.keys, d1.n, d1.n_plus, d2.keys, d2.n, d2.n_plus, lam)


def kernel_weight(cfg: KernelConfig | float, D: float) -> float:
    b = cfg.b if isinstance(cfg, KernelConfig) else float(cfg)
    if D < 0:
        raise ValueError("distance must be non-negative")
    return b ** D


def estimate(query: Datacube, training: Sequence[tuple[Datacube, Datacube]], s: int,
             b: float = DEFAULT_BANDWIDTH, lam: float = DEFAULT_LAMBDA) -> float | None:
    """Kernel-weighted link rate of cell ``s`` over ``(source, target)`` cube pairs.

    Each pair contributes the smoothed counts of ``s`` in its target, weighted by
    ``b ** D(query, source)``. Returns None when no target has data for ``s``.
    """
    num = den = 0.0
    for source, target in training:
        w = b ** datacube_distance(query, source, lam)
        n, n_plus = K.smoothed(target.keys, target.n, target.n_plus, int(s), lam)
        num += w * n_plus
        den += w * n
    return num / den if den > 0 else None


class NonParametricPredictor:
    """Kernel-regression link predictor for the snapshot at ``T``.

    Only snapshots ``0..T-1`` of ``seq`` are read. Training examples pair the
    datacube of node ``i'`` at ``t'`` with its datacube at ``t' + 1`` for every
    ``t'`` in ``[1, T - 2]``; the query for node ``i`` is its datacube at
    ``T - 1``. The link probability of ``i -> j`` is the kernel-weighted ratio of
    linked to total pairs in the cell of ``(i, j)`` across training targets.
    """

    def __init__(self, seq: GraphSequence, T: int | None = None, cfg: KernelConfig | None = None,
                 index: LshIndex | None = None):
        self.cfg = cfg or KernelConfig()
        T = seq.T if T is None else T
        if not 3 <= T <= seq.T:
            raise ValueError(f"T={T} needs 3 <= T <= {seq.T} (two observed transitions)")
        self.T = T
        self.seq = seq.prefix(T)
        p, r_max = self.cfg.lag, self.cfg.r_max
        cubes = {(i, t): build_datacube(self.seq, i, t, p, r_max)
                 for t in range(1, T) for i in range(seq.n)}
        self._query_cubes = {i: cubes[(i, T - 1)] for i in range(seq.n)}
        entries = [(i, t) for t in range(1, T - 1) for i in range(seq.n)]
        self.sources = PackedCubes.pack([cubes[e] for e in entries])
        self.targets = PackedCubes.pack([cubes[(i, t + 1)] for i, t in entries])
        self._entry_of = {e: k for k, e in enumerate(entries)}

        tot_n: dict[int, float] = {}
        tot_p: dict[int, float] = {}
        for k, a, b in zip(self.targets.keys.tolist(), self.targets.n.tolist(), self.targets.n_plus.tolist()):
            tot_n[k] = tot_n.get(k, 0.0) + a
            tot_p[k] = tot_p.get(k, 0.0) + b
        self._prior = {k: tot_p[k] / tot_n[k] for k in tot_n}

        self.index = index
        if self.index is None and self.cfg.use_lsh:
            self.index = build_index([cubes[e] for e in entries], self.cfg.lsh, lam=self.cfg.lam)
        self._weights: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._cells: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def query_cube(self, i: int) -> Datacube:
        return self._query_cubes[i]

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Training entry ids used for node ``i`` and their exact distances."""
        q = self._query_cubes[i]
        if self.index is None:
            return np.arange(len(self.sources)), self.sources.distances(q, self.cfg.lam)
        hits = self.index.query(q, self.cfg.top_k)
        ids = np.array([self._entry_of[ref] for ref, _ in hits], dtype=np.int64)
        return ids, np.array([d for _, d in hits], dtype=np.float64)

    def weights(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Kernel weights up to a common factor (scaled so the nearest entry has weight 1)."""
        if i not in self._weights:
            ids, D = self.neighbors(i)
            w = np.power(self.cfg.b, D - D.min()) if len(D) else D
            self._weights[i] = (ids, w)
        return self._weights[i]

    def _target_cell(self, s: int) -> tuple[np.ndarray, np.ndarray]:
        if s not in self._cells:
            self._cells[s] = self.targets.cell_values(s, self.cfg.lam)
        return self._cells[s]

    def prior(self, s: int) -> float:
        return self._prior.get(s, 0.5)

    def predict(self, i: int, j: int) -> float:
        s = pair_features(self.seq, i, j, self.T - 1, self.cfg.lag).key
        ids, w = self.weights(i)
        tn, tp = self._target_cell(s)
        den = float(np.dot(w, tn[ids]))
        if den <= 0.0:
            return self.prior(s)
        return min(1.0, max(0.0, float(np.dot(w, tp[ids])) / den))

    def predict_many(self, i: int, js) -> np.ndarray:
        return np.array([self.predict(i, int(j)) for j in js])


def predict(seq: GraphSequence, i: int, j: int, T: int | None = None, cfg: KernelConfig | None = None,
            index: LshIndex | None = None) -> float:
    """Probability that ``i -> j`` is present at ``T`` given snapshots ``0..T-1``."""
    return NonParametricPredictor(seq, T, cfg, index).predict(i, j)
