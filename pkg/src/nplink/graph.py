"""Snapshot storage, edge-list ingestion and capped 2-hop neighborhoods."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

DEFAULT_LAG = 10
DEFAULT_R_MAX = 400
DEFAULT_MAX_T = 100_000


class EdgeListError(ValueError):
    """Raised for malformed edge-list input."""


def _csr(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # sorted, duplicate-free rows
    if len(src):
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        keep = np.ones(len(src), dtype=bool)
        keep[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
        src, dst = src[keep], dst[keep]
    indptr = np.zeros(n + 1, dtype=np.int32)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr, dtype=np.int32)
    indices = np.ascontiguousarray(dst, dtype=np.int32)
    indptr.flags.writeable = False
    indices.flags.writeable = False
    return indptr, indices


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Directed graph observed at one timestep.

    Adjacency is stored as CSR arrays. ``in_*`` is the exact transpose of
    ``out_*`` and ``und_*`` is the union of both (the undirected view).
    """

    t: int
    n: int
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray = field(repr=False)
    in_indices: np.ndarray = field(repr=False)
    und_indptr: np.ndarray = field(repr=False)
    und_indices: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, t: int, n: int, src: Iterable[int], dst: Iterable[int]) -> "Snapshot":
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if len(src) != len(dst):
            raise ValueError("src and dst differ in length")
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError(f"node id out of range [0, {n})")
        loops = src == dst
        src, dst = src[~loops], dst[~loops]
        out_ptr, out_idx = _csr(n, src, dst)
        in_ptr, in_idx = _csr(n, dst, src)
        und_ptr, und_idx = _csr(n, np.concatenate([src, dst]), np.concatenate([dst, src]))
        return cls(t, n, out_ptr, out_idx, in_ptr, in_idx, und_ptr, und_idx)

    @property
    def num_edges(self) -> int:
        return len(self.out_indices)

    def out_neighbors(self, i: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[i]:self.out_indptr[i + 1]]

    def in_neighbors(self, i: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[i]:self.in_indptr[i + 1]]

    def neighbors(self, i: int) -> np.ndarray:
        """Undirected 1-hop neighbors of ``i``, sorted."""
        return self.und_indices[self.und_indptr[i]:self.und_indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        row = self.out_neighbors(i)
        k = np.searchsorted(row, j)
        return bool(k < len(row) and row[k] == j)

    def edges(self) -> np.ndarray:
        """All directed edges as an ``(m, 2)`` array sorted by (src, dst)."""
        src = np.repeat(np.arange(self.n, dtype=np.int32), np.diff(self.out_indptr))
        return np.column_stack([src, self.out_indices])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.out_indptr) + np.diff(self.in_indptr)

    @property
    def undirected_degrees(self) -> np.ndarray:
        return np.diff(self.und_indptr)


@dataclass(frozen=True, eq=False)
class GraphSequence:
    """Ordered snapshots over a shared node universe ``0..n-1``."""

    snapshots: tuple[Snapshot, ...]
    n: int
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        for k, snap in enumerate(self.snapshots):
            if snap.t != k:
                raise ValueError(f"snapshot {k} carries timestep {snap.t}")
            if snap.n != self.n:
                raise ValueError(f"snapshot {k} has {snap.n} nodes, expected {self.n}")

    @classmethod
    def from_edge_arrays(cls, n: int, edges_per_step: Sequence[np.ndarray],
                         labels: Sequence[int] | None = None) -> "GraphSequence":
        snaps = []
        for t, e in enumerate(edges_per_step):
            e = np.asarray(e, dtype=np.int64).reshape(-1, 2)
            snaps.append(Snapshot.from_edges(t, n, e[:, 0], e[:, 1]))
        return cls(tuple(snaps), n, None if labels is None else tuple(labels))

    @property
    def T(self) -> int:
        return len(self.snapshots)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, t: int) -> Snapshot:
        return self.snapshots[t]

    def prefix(self, length: int) -> "GraphSequence":
        """The first ``length`` snapshots; later ones are not reachable from the result."""
        if not 1 <= length <= self.T:
            raise ValueError(f"prefix length {length} outside [1, {self.T}]")
        return GraphSequence(self.snapshots[:length], self.n, self.labels)

    def has_edge(self, t: int, i: int, j: int) -> bool:
        return self.snapshots[t].has_edge(i, j)


def load_edge_list(source: IO | str | bytes, directed: bool = True,
                   max_t: int = DEFAULT_MAX_T) -> GraphSequence:
    """Parse ``t src dst`` lines into a :class:`GraphSequence`.

    Node ids are compacted to ``0..n-1`` in ascending order of the original
    ids (kept in ``labels``). Missing timesteps become empty snapshots.
    """
    if isinstance(source, (str, bytes)):
        source = io.BytesIO(source.encode() if isinstance(source, str) else source)
    ts, us, vs = [], [], []
    for lineno, raw in enumerate(source, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise EdgeListError(f"line {lineno}: expected 't src dst', got {line!r}")
        try:
            t, u, v = (int(x) for x in parts)
        except ValueError:
            raise EdgeListError(f"line {lineno}: non-integer field in {line!r}") from None
        if t < 0 or u < 0 or v < 0:
            raise EdgeListError(f"line {lineno}: negative value in {line!r}")
        if t >= max_t:
            raise EdgeListError(f"line {lineno}: timestep {t} exceeds maximum {max_t - 1}")
        ts.append(t)
        us.append(u)
        vs.append(v)
    if not ts:
        raise EdgeListError("empty edge list")

    ts = np.asarray(ts, dtype=np.int64)
    ids, inverse = np.unique(np.concatenate([us, vs]), return_inverse=True)
    m = len(ts)
    src, dst = inverse[:m], inverse[m:]
    if not directed:
        ts = np.concatenate([ts, ts])
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
    T = int(ts.max()) + 1
    order = np.argsort(ts, kind="stable")
    bounds = np.searchsorted(ts[order], np.arange(T + 1))
    snaps = []
    for t in range(T):
        sel = order[bounds[t]:bounds[t + 1]]
        snaps.append(Snapshot.from_edges(t, len(ids), src[sel], dst[sel]))
    return GraphSequence(tuple(snaps), len(ids), tuple(int(x) for x in ids))


def dump_edge_list(seq: GraphSequence, out: IO[str], use_labels: bool = False) -> None:
    """Write ``seq`` in the ``t src dst`` text format accepted by :func:`load_edge_list`."""
    names = seq.labels if (use_labels and seq.labels is not None) else range(seq.n)
    for snap in seq.snapshots:
        for u, v in snap.edges():
            out.write(f"{snap.t} {names[u]} {names[v]}\n")


def degree(snap: Snapshot, i: int) -> int:
    """Out-degree plus in-degree."""
    return int(snap.out_indptr[i + 1] - snap.out_indptr[i] + snap.in_indptr[i + 1] - snap.in_indptr[i])


def common_neighbors(snap: Snapshot, i: int, j: int) -> int:
    """Size of the intersection of the undirected 1-hop sets, excluding i and j."""
    a, b = snap.neighbors(i), snap.neighbors(j)
    common = np.intersect1d(a, b, assume_unique=True)
    return int(np.count_nonzero((common != i) & (common != j)))


def last_link_age(seq: GraphSequence, i: int, j: int, t: int, p: int) -> int:
    """Steps since ``i -> j`` was last present in snapshots ``t-p..t``; ``p`` if never."""
    for a in range(min(p, t) + 1):
        if seq.snapshots[t - a].has_edge(i, j):
            return a
    return p


@dataclass(frozen=True)
class NeighborhoodSubgraph:
    center: int
    t: int
    members: np.ndarray  # ordered by (BFS layer, node id)
    layers: np.ndarray
    edges: np.ndarray

    @property
    def member_set(self) -> frozenset[int]:
        return frozenset(int(x) for x in self.members)


def neighborhood_members(seq: GraphSequence, i: int, t: int, p: int = DEFAULT_LAG,
                         r_max: int = DEFAULT_R_MAX) -> tuple[np.ndarray, np.ndarray]:
    """Members of the capped 2-hop neighborhood of ``i`` at ``t`` and their BFS layers.

    Hops use the undirected view. When ``i`` is isolated at ``t``, nodes linked to
    ``i`` in any of the previous ``p`` snapshots join as layer 1 and their
    neighbors at ``t`` as layer 2. Truncation keeps the lowest (layer, id) pairs.
    """
    if not 0 <= t < seq.T:
        raise IndexError(f"timestep {t} outside [0, {seq.T})")
    if p < 1 or r_max < 1:
        raise ValueError("p and r_max must be >= 1")
    snap = seq.snapshots[t]
    layer1 = snap.neighbors(i)
    if len(layer1) == 0:
        past = [seq.snapshots[t - a].neighbors(i) for a in range(1, min(p, t) + 1)]
        layer1 = np.unique(np.concatenate(past)) if past else layer1
        layer1 = layer1[layer1 != i]
    if len(layer1) + 1 >= r_max:
        members = np.concatenate([[i], layer1[: r_max - 1]]).astype(np.int64)
        layers = np.ones(len(members), dtype=np.int8)
        layers[0] = 0
        return members, layers
    reach = [snap.neighbors(int(u)) for u in layer1]
    layer2 = np.unique(np.concatenate(reach)) if reach else np.empty(0, dtype=np.int32)
    layer2 = np.setdiff1d(layer2, np.concatenate([[i], layer1]), assume_unique=False)
    layer2 = layer2[: r_max - 1 - len(layer1)]
    members = np.concatenate([[i], layer1, layer2]).astype(np.int64)
    layers = np.concatenate([[0], np.ones(len(layer1)), np.full(len(layer2), 2)]).astype(np.int8)
    return members, layers


def neighborhood(seq: GraphSequence, i: int, t: int, p: int = DEFAULT_LAG,
                 r_max: int = DEFAULT_R_MAX) -> NeighborhoodSubgraph:
    members, layers = neighborhood_members(seq, i, t, p, r_max)
    snap = seq.snapshots[t]
    inside = np.zeros(seq.n, dtype=bool)
    inside[members] = True
    e = snap.edges()
    e = e[inside[e[:, 0]] & inside[e[:, 1]]]
    return NeighborhoodSubgraph(i, t, members, layers, e)
