"""Synthetic seasonal graph sequences.

Each node draws a latent feature (``features_per_node`` distinct ones; one by
default). Features are dealt round-robin to seasons and timestep ``t`` belongs
to season ``t % seasons``. An ordered pair links with probability ``phi`` when
the endpoints share a feature that is active in the current season, and with
probability ``eps`` otherwise. With ``seasons=1`` every feature is always
active, which gives the stationary variant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .graph import GraphSequence


@dataclass(frozen=True)
class SimConfig:
    n: int = 50
    T: int = 10
    phi: float = 0.5
    seasons: int = 3
    features: int = 6
    features_per_node: int = 1
    eps: float = 0.004
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.phi <= 1.0 or not 0.0 <= self.eps <= 1.0:
            raise ValueError("phi and eps must be probabilities")
        if self.seasons < 1 or self.features < self.seasons:
            raise ValueError("need seasons >= 1 and features >= seasons")
        if not 1 <= self.features_per_node <= self.features:
            raise ValueError("features_per_node must lie in [1, features]")
        if self.n < 2 or self.T < 1:
            raise ValueError("need n >= 2 and T >= 1")

    def active_features(self, t: int) -> frozenset[int]:
        s = t % self.seasons
        return frozenset(f for f in range(self.features) if f % self.seasons == s)


def node_features(cfg: SimConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Boolean ``(n, features)`` membership matrix, ``features_per_node`` ones per row."""
    rng = rng or np.random.default_rng(cfg.seed)
    member = np.zeros((cfg.n, cfg.features), dtype=bool)
    for i in range(cfg.n):
        member[i, rng.choice(cfg.features, size=cfg.features_per_node, replace=False)] = True
    return member


def block_mask(cfg: SimConfig, member: np.ndarray, t: int) -> np.ndarray:
    """Ordered pairs sharing a feature active at ``t`` (diagonal excluded)."""
    active = np.zeros(cfg.features, dtype=bool)
    active[list(cfg.active_features(t))] = True
    m = member[:, active].astype(np.int64)
    mask = (m @ m.T) > 0
    np.fill_diagonal(mask, False)
    return mask


def generate(cfg: SimConfig) -> GraphSequence:
    rng = np.random.default_rng(cfg.seed)
    member = node_features(cfg, rng)
    off_diag = ~np.eye(cfg.n, dtype=bool)
    steps = []
    for t in range(cfg.T):
        prob = np.where(block_mask(cfg, member, t), cfg.phi, cfg.eps)
        draw = rng.random((cfg.n, cfg.n)) < prob
        steps.append(np.argwhere(draw & off_diag))
    return GraphSequence.from_edge_arrays(cfg.n, steps)


def share_probability(cfg: SimConfig, t: int) -> float:
    """Probability that two random nodes share a feature active at ``t``."""
    active = cfg.active_features(t)
    subsets = list(itertools.combinations(range(cfg.features), cfg.features_per_node))
    hits = sum(1 for a in subsets for b in subsets if active & set(a) & set(b))
    return hits / comb(cfg.features, cfg.features_per_node) ** 2


def expected_edges(cfg: SimConfig, t: int) -> float:
    """Expected directed edge count of snapshot ``t``, over feature draws and links."""
    q = share_probability(cfg, t)
    return cfg.n * (cfg.n - 1) * (cfg.eps + (cfg.phi - cfg.eps) * q)
