"""Heuristic link scorers. All use the undirected view of snapshot ``T-1`` or earlier."""

from __future__ import annotations

import hashlib
import math
import struct

import numpy as np

from .graph import GraphSequence, common_neighbors

NEVER_LINKED = -1e9
KATZ_BETA = 0.005
KATZ_LENGTH = 4


def score_last_link(seq: GraphSequence, i: int, j: int, T: int) -> float:
    """Minus the age of the latest ``i ~ j`` link among snapshots ``0..T-1``."""
    for t in range(T - 1, -1, -1):
        snap = seq[t]
        if snap.has_edge(i, j) or snap.has_edge(j, i):
            return -float(T - 1 - t)
    return NEVER_LINKED


def score_common_neighbors(seq: GraphSequence, i: int, j: int, T: int) -> float:
    return float(common_neighbors(seq[T - 1], i, j))


def score_adamic_adar(seq: GraphSequence, i: int, j: int, T: int) -> float:
    snap = seq[T - 1]
    common = np.intersect1d(snap.neighbors(i), snap.neighbors(j), assume_unique=True)
    deg = snap.undirected_degrees
    total = 0.0
    for z in common:
        if z != i and z != j and deg[z] > 1:
            total += 1.0 / math.log(deg[z])
    return total


def katz_row(seq: GraphSequence, i: int, T: int, beta: float = KATZ_BETA,
             length: int = KATZ_LENGTH) -> np.ndarray:
    """Truncated Katz scores from ``i`` to every node: sum of beta**l times l-walk counts."""
    if beta <= 0 or length < 1:
        raise ValueError("need beta > 0 and length >= 1")
    snap = seq[T - 1]
    ptr, idx = snap.und_indptr, snap.und_indices
    src = np.repeat(np.arange(seq.n), np.diff(ptr))
    walks = np.zeros(seq.n)
    walks[i] = 1.0
    total = np.zeros(seq.n)
    for step in range(1, length + 1):
        # walks_next[v] = sum of walks[u] over edges u ~ v
        walks = np.bincount(idx, weights=walks[src], minlength=seq.n)
        total += beta ** step * walks
    return total


def score_katz(seq: GraphSequence, i: int, j: int, T: int, beta: float = KATZ_BETA,
               length: int = KATZ_LENGTH) -> float:
    return float(katz_row(seq, i, T, beta, length)[j])


def score_random(i: int, j: int, seed: int = 0) -> float:
    """Deterministic pseudo-random score in [0, 1) for the triple ``(i, j, seed)``."""
    digest = hashlib.blake2b(struct.pack("<qqq", i, j, seed), digest_size=8).digest()
    return int.from_bytes(digest, "little") / 2.0 ** 64


class Scorer:
    """Bound scorer for one method on snapshots ``0..T-1``.

    ``directed`` tells the evaluator which label orientation the method predicts.
    """

    directed = False

    def __init__(self, seq: GraphSequence, T: int):
        self.seq = seq.prefix(T)
        self.T = T

    def scores(self, i: int, js) -> np.ndarray:
        raise NotImplementedError


class LastLinkScorer(Scorer):
    def __init__(self, seq, T):
        super().__init__(seq, T)
        # latest undirected link time per pair, filled oldest to newest
        self._last: dict[tuple[int, int], int] = {}
        for t in range(T):
            for u, v in self.seq[t].edges().tolist():
                self._last[(min(u, v), max(u, v))] = t

    def scores(self, i, js):
        out = np.full(len(js), NEVER_LINKED)
        for k, j in enumerate(js):
            t = self._last.get((min(i, j), max(i, j)))
            if t is not None:
                out[k] = -float(self.T - 1 - t)
        return out


class CommonNeighborsScorer(Scorer):
    def scores(self, i, js):
        return np.array([score_common_neighbors(self.seq, i, int(j), self.T) for j in js])


class AdamicAdarScorer(Scorer):
    def scores(self, i, js):
        return np.array([score_adamic_adar(self.seq, i, int(j), self.T) for j in js])


class KatzScorer(Scorer):
    def __init__(self, seq, T, beta: float = KATZ_BETA, length: int = KATZ_LENGTH):
        super().__init__(seq, T)
        self.beta, self.length = beta, length

    def scores(self, i, js):
        return katz_row(self.seq, i, self.T, self.beta, self.length)[np.asarray(js, dtype=np.int64)]


class RandomScorer(Scorer):
    def __init__(self, seq, T, seed: int = 0):
        super().__init__(seq, T)
        self.seed = seed

    def scores(self, i, js):
        return np.array([score_random(i, int(j), self.seed) for j in js])
