"""Candidate generation, per-node AUC and experiment orchestration."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, field
from typing import IO, Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .baselines import (AdamicAdarScorer, CommonNeighborsScorer, KatzScorer, LastLinkScorer,
                        RandomScorer, Scorer, KATZ_BETA, KATZ_LENGTH)
from .graph import GraphSequence
from .kernel import KernelConfig, NonParametricPredictor

METHODS = ("np", "ll", "cn", "aa", "katz", "rnd")
METHOD_TITLES = {"np": "NP", "ll": "LL", "cn": "CN", "aa": "AA", "katz": "KZ", "rnd": "RND"}


class OneClassLabels(ValueError):
    """AUC is undefined without at least one positive and one negative."""


def auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """P(positive outranks negative), ties counted half, via midranks."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise OneClassLabels(f"{n_pos} positives, {n_neg} negatives")
    ranks = rankdata(scores, method="average")
    return (ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def candidate_set(seq: GraphSequence, i: int, T: int) -> np.ndarray:
    """Nodes other than ``i`` within two undirected hops of ``i`` in any snapshot before ``T``."""
    seen = np.zeros(seq.n, dtype=bool)
    for t in range(T):
        snap = seq[t]
        hop1 = snap.neighbors(i)
        seen[hop1] = True
        for u in hop1:
            seen[snap.neighbors(int(u))] = True
    seen[i] = False
    return np.flatnonzero(seen)


class _NPScorer(Scorer):
    directed = True

    def __init__(self, seq, T, cfg: KernelConfig):
        super().__init__(seq, T)
        self.model = NonParametricPredictor(self.seq, T, cfg)

    def scores(self, i, js):
        return self.model.predict_many(i, js)


@dataclass
class EvalTask:
    seq: GraphSequence
    T: int | None = None
    methods: Sequence[str] = METHODS
    kernel: KernelConfig = field(default_factory=KernelConfig)
    katz_beta: float = KATZ_BETA
    katz_length: int = KATZ_LENGTH
    seed: int = 0

    def __post_init__(self):
        if self.T is None:
            self.T = self.seq.T - 1
        if not 1 <= self.T < self.seq.T:
            raise ValueError(f"test timestep {self.T} outside [1, {self.seq.T})")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")

    def make_scorer(self, method: str, seq: GraphSequence) -> Scorer:
        if method == "np":
            return _NPScorer(seq, self.T, self.kernel)
        if method == "ll":
            return LastLinkScorer(seq, self.T)
        if method == "cn":
            return CommonNeighborsScorer(seq, self.T)
        if method == "aa":
            return AdamicAdarScorer(seq, self.T)
        if method == "katz":
            return KatzScorer(seq, self.T, self.katz_beta, self.katz_length)
        return RandomScorer(seq, self.T, self.seed)


@dataclass
class NodeResult:
    node: int
    auc: float
    n_candidates: int
    n_pos: int


@dataclass
class EvalReport:
    methods: list[str]
    per_node: dict[str, list[NodeResult]]
    skipped: dict[str, int]
    active_nodes: int
    runtime: dict[str, float]
    config: dict

    @property
    def mean_auc(self) -> dict[str, float]:
        return {m: (float(np.mean([r.auc for r in rows])) if rows else float("nan"))
                for m, rows in self.per_node.items()}

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "node", "auc", "n_candidates", "n_pos"])
        for m in self.methods:
            for r in self.per_node[m]:
                w.writerow([m, r.node, f"{r.auc:.6f}", r.n_candidates, r.n_pos])

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"test timestep: {self.config.get('T')}  |S>0|: {self.active_nodes}\n")
        out.write(f"{'method':<8}{'mean_auc':>10}{'nodes':>8}{'skipped':>9}\n")
        means = self.mean_auc
        for m in self.methods:
            out.write(f"{m:<8}{means[m]:>10.4f}{len(self.per_node[m]):>8}{self.skipped[m]:>9}\n")
        return out.getvalue()


def evaluate(task: EvalTask, on_scored: Callable[[str], None] | None = None) -> EvalReport:
    """Mean per-node AUC of each method on snapshot ``task.T``.

    Scorers see only snapshots ``0..T-1``. Snapshot ``T`` supplies the active
    node set (degree >= 1) and the labels: ``i -> j`` for directed methods,
    ``i ~ j`` otherwise. Nodes with no candidates or one-class labels are
    skipped and counted. ``on_scored(method)`` runs after each method has
    produced all of its scores.
    """
    T = task.T
    train = task.seq.prefix(T)
    test = task.seq[T]
    active = np.flatnonzero(test.degrees > 0)
    candidates = {int(i): candidate_set(train, int(i), T) for i in active}

    scored: dict[str, dict[int, np.ndarray]] = {}
    runtime: dict[str, float] = {}
    directed: dict[str, bool] = {}
    for m in task.methods:
        start = time.perf_counter()
        scorer = task.make_scorer(m, train)
        directed[m] = scorer.directed
        scored[m] = {i: scorer.scores(i, js) for i, js in candidates.items() if len(js)}
        runtime[m] = time.perf_counter() - start
        if on_scored is not None:
            on_scored(m)

    per_node: dict[str, list[NodeResult]] = {m: [] for m in task.methods}
    skipped = {m: 0 for m in task.methods}
    for i, js in candidates.items():
        out_nb = set(test.out_neighbors(i).tolist())
        und_nb = set(test.neighbors(i).tolist())
        for m in task.methods:
            if not len(js):
                skipped[m] += 1
                continue
            nb = out_nb if directed[m] else und_nb
            labels = np.array([int(j) in nb for j in js])
            try:
                value = auc(scored[m][i], labels)
            except OneClassLabels:
                skipped[m] += 1
                continue
            per_node[m].append(NodeResult(i, value, len(js), int(labels.sum())))

    if not any(per_node.values()):
        raise ValueError("no evaluable nodes: every active node was skipped")
    config = {"T": T, "methods": list(task.methods), "kernel": asdict(task.kernel),
              "katz_beta": task.katz_beta, "katz_length": task.katz_length, "seed": task.seed}
    return EvalReport(list(task.methods), per_node, skipped, len(active), runtime, config)
