"""Binned pair features and per-node neighborhood-evolution datacubes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple

import numpy as np

from . import _kernels as K
from .graph import (DEFAULT_LAG, DEFAULT_R_MAX, GraphSequence, common_neighbors, degree,
                    last_link_age, neighborhood_members)

DEFAULT_LAMBDA = 0.5

log_bin = K.log_bin


class PairFeature(NamedTuple):
    """One cell of the feature space: binned degrees, binned common neighbors, link age."""

    deg_i: int
    deg_j: int
    cn: int
    ll: int

    @property
    def key(self) -> int:
        return K.pack(*self)

    @classmethod
    def from_key(cls, key: int) -> "PairFeature":
        return cls(*K.unpack(key))


def pair_features(seq: GraphSequence, i: int, j: int, t: int, p: int = DEFAULT_LAG) -> PairFeature:
    if i == j:
        raise ValueError("pair features need i != j")
    snap = seq[t]
    return PairFeature(log_bin(degree(snap, i)), log_bin(degree(snap, j)),
                       log_bin(common_neighbors(snap, i, j)), last_link_age(seq, i, j, t, p))


@dataclass(frozen=True, eq=False)
class Datacube:
    """Cell counts for one node and one step: ``n`` pairs, ``n_plus`` of them linked next.

    ``keys`` are packed cells in ascending order; absent cells are empty.
    """

    center: int
    t: int
    keys: np.ndarray
    n: np.ndarray
    n_plus: np.ndarray

    def __post_init__(self):
        for a in (self.keys, self.n, self.n_plus):
            a.flags.writeable = False

    @classmethod
    def from_cells(cls, center: int, t: int, cells: dict) -> "Datacube":
        items = sorted((PairFeature(*s).key, int(c[0]), int(c[1])) for s, c in cells.items() if c[0] > 0)
        arr = np.array(items, dtype=np.int64).reshape(-1, 3)
        return cls(center, t, np.ascontiguousarray(arr[:, 0]),
                   arr[:, 1].astype(np.float64), arr[:, 2].astype(np.float64))

    @property
    def cells(self) -> dict[PairFeature, tuple[int, int]]:
        return {PairFeature.from_key(k): (int(a), int(b))
                for k, a, b in zip(self.keys.tolist(), self.n.tolist(), self.n_plus.tolist())}

    def __len__(self) -> int:
        return len(self.keys)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Datacube):
            return NotImplemented
        return (self.center == other.center and self.t == other.t
                and np.array_equal(self.keys, other.keys) and np.array_equal(self.n, other.n)
                and np.array_equal(self.n_plus, other.n_plus))

    __hash__ = None


@dataclass
class PackedCubes:
    """Datacubes laid end to end for the batched kernels."""

    refs: list[tuple[int, int]]
    keys: np.ndarray
    n: np.ndarray
    n_plus: np.ndarray
    offsets: np.ndarray

    @classmethod
    def pack(cls, cubes: list[Datacube]) -> "PackedCubes":
        lens = np.array([len(c) for c in cubes], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)

        def cat(attr, dtype):
            parts = [getattr(c, attr) for c in cubes]
            return np.ascontiguousarray(np.concatenate(parts) if parts else np.empty(0), dtype=dtype)

        return cls([(c.center, c.t) for c in cubes], cat("keys", np.int64),
                   cat("n", np.float64), cat("n_plus", np.float64), offsets)

    def __len__(self) -> int:
        return len(self.refs)

    def distances(self, q: Datacube, lam: float, subset: np.ndarray | None = None) -> np.ndarray:
        if subset is None:
            return K.cube_distances(q.keys, q.n, q.n_plus, self.keys, self.n, self.n_plus, self.offsets, lam)
        return np.array([K.cube_distance(q.keys, q.n, q.n_plus, *self.slice(c), lam) for c in subset])

    def slice(self, c: int):
        lo, hi = self.offsets[c], self.offsets[c + 1]
        return self.keys[lo:hi], self.n[lo:hi], self.n_plus[lo:hi]

    def cell_values(self, s: int, lam: float) -> tuple[np.ndarray, np.ndarray]:
        return K.cell_values(s, self.keys, self.n, self.n_plus, self.offsets, lam)


def build_datacube(seq: GraphSequence, i: int, t: int, p: int = DEFAULT_LAG,
                   r_max: int = DEFAULT_R_MAX) -> Datacube:
    """Datacube of ``i`` for the step ``t-1 -> t``.

    Every ordered pair of the neighborhood of ``i`` at ``t-1`` is binned by its
    features at ``t-1`` and flagged by whether it is an edge at ``t``.
    """
    if not 1 <= t < seq.T:
        raise IndexError(f"datacube timestep {t} outside [1, {seq.T})")
    members, _ = neighborhood_members(seq, i, t - 1, p, r_max)
    prev, nxt = seq[t - 1], seq[t]
    window = [seq[t - 1 - a] for a in range(min(p, t - 1) + 1)]
    keys, flags = K.pair_cells(members, seq.n, prev.und_indptr, prev.und_indices, prev.degrees,
                               [s.out_indptr for s in window], [s.out_indices for s in window],
                               nxt.out_indptr, nxt.out_indices, p)
    uniq, inv = np.unique(keys, return_inverse=True)
    n = np.bincount(inv, minlength=len(uniq)).astype(np.float64)
    # bincount of an empty input comes back as int64 even with weights
    n_plus = np.bincount(inv, weights=flags, minlength=len(uniq)).astype(np.float64)
    return Datacube(i, t, uniq.astype(np.int64), n, n_plus)


def build_datacubes(seq: GraphSequence, timesteps: Iterable[int], nodes: Iterable[int] | None = None,
                    p: int = DEFAULT_LAG, r_max: int = DEFAULT_R_MAX) -> dict[tuple[int, int], Datacube]:
    """Datacubes keyed ``(node, t)`` for every requested node and timestep."""
    nodes = range(seq.n) if nodes is None else list(nodes)
    return {(i, t): build_datacube(seq, i, t, p, r_max) for t in timesteps for i in nodes}


def smooth_cell(cube: Datacube, s: PairFeature | int, lam: float = DEFAULT_LAMBDA) -> tuple[float, float]:
    """``(n, n_plus)`` of cell ``s``, borrowed from nearby cells when ``s`` is empty.

    Neighbors within L1 distance 2 in bin space contribute with weight
    ``lam ** distance``; ``(0, 0)`` when there are none.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    key = s.key if isinstance(s, PairFeature) else int(s)
    return K.smoothed(cube.keys, cube.n, cube.n_plus, key, lam)


def dump_datacube(cube: Datacube, out: IO[str]) -> None:
    """One ``i t deg_i deg_j cn ll n n_plus`` line per stored cell."""
    for s, (n, n_plus) in cube.cells.items():
        out.write(f"{cube.center} {cube.t} {s.deg_i} {s.deg_j} {s.cn} {s.ll} {n} {n_plus}\n")


def load_datacubes(lines: Iterable[str]) -> dict[tuple[int, int], Datacube]:
    cells: dict[tuple[int, int], dict] = {}
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        i, t, di, dj, cn, ll, n, n_plus = (int(x) for x in line.split())
        cells.setdefault((i, t), {})[(di, dj, cn, ll)] = (n, n_plus)
    return {key: Datacube.from_cells(key[0], key[1], c) for key, c in cells.items()}
