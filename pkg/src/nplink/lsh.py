"""Bit-sampling LSH over histogram-encoded datacubes.

Each cell posterior is turned into a histogram over ``b1`` equal buckets of
[0, 1]; a bucket holding mass ``m`` is written as ``floor(m * b2)`` leading
one-bits out of ``b2``. A datacube is the concatenation of its cell codes over a
vocabulary of cells frozen at build time. Hash functions sample ``k`` bit
positions of that layout; the layout itself is never materialized.
"""

from __future__ import annotations

import hashlib
import struct
import sys
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import BinaryIO, Sequence

import numpy as np
from scipy.special import ndtr

from .features import DEFAULT_LAMBDA, Datacube, PackedCubes

MAGIC = b"NPLSHIDX"
VERSION = 1


class IndexFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LshParams:
    k: int = 16
    tables: int = 8
    b1: int = 8
    b2: int = 8
    seed: int = 0
    # candidate cap is candidate_factor * max(tables, top_k); 0 disables the cap
    candidate_factor: int = 1

    def __post_init__(self):
        if self.k < 1 or self.tables < 1:
            raise ValueError("k and tables must be >= 1")
        if self.b1 < 2 or self.b2 < 1:
            raise ValueError("need b1 >= 2 and b2 >= 1")
        if self.candidate_factor < 0:
            raise ValueError("candidate_factor must be >= 0")


def bucket_masses(p_hat: float | np.ndarray, n: float | np.ndarray, b1: int) -> np.ndarray:
    """Mass of N(p_hat, p_hat (1 - p_hat) / n) on each of ``b1`` buckets of [0, 1].

    Tails outside [0, 1] fall into the end buckets; zero variance puts all mass
    in the bucket containing ``p_hat``.
    """
    p = np.atleast_1d(np.asarray(p_hat, dtype=np.float64))
    n = np.atleast_1d(np.asarray(n, dtype=np.float64))
    with np.errstate(over="ignore"):
        # a subnormal n gives an infinite variance: half the mass in each end bucket
        var = np.where(n > 0, p * (1.0 - p) / np.where(n > 0, n, 1.0), 0.0)
    out = np.zeros((len(p), b1))
    point = var < sys.float_info.min
    if point.any():
        idx = np.minimum((p[point] * b1).astype(np.int64), b1 - 1)
        out[np.flatnonzero(point), idx] = 1.0
    live = ~point
    if live.any():
        edges = np.arange(1, b1) / b1
        sd = np.sqrt(var[live])
        cdf = ndtr((edges[None, :] - p[live, None]) / sd[:, None])
        cdf = np.concatenate([np.zeros((len(sd), 1)), cdf, np.ones((len(sd), 1))], axis=1)
        out[live] = np.diff(cdf, axis=1)
    return out


def code_from_masses(masses: np.ndarray, b2: int) -> np.ndarray:
    """Bucket ``m`` becomes ``floor(masses[m] * b2)`` leading one-bits out of ``b2``."""
    counts = np.floor(np.asarray(masses, dtype=np.float64) * b2).astype(np.int64)
    return (np.arange(b2)[None, :] < counts[:, None]).astype(np.uint8).ravel()


def encode_cell(p_hat: float, n: float, b1: int, b2: int) -> np.ndarray:
    """Bit code (length ``b1 * b2``) of one cell posterior."""
    return code_from_masses(bucket_masses(p_hat, n, b1)[0], b2)


def _cube_counts(cube: Datacube, b1: int, b2: int) -> np.ndarray:
    p = np.divide(cube.n_plus, cube.n, out=np.zeros(len(cube)), where=cube.n > 0)
    return np.floor(bucket_masses(p, cube.n, b1) * b2).astype(np.int64).reshape(len(cube), b1)


def full_code(cube: Datacube, vocab: np.ndarray, b1: int, b2: int) -> np.ndarray:
    """The materialized ``len(vocab) * b1 * b2`` bit vector of a cube (reference only)."""
    bits = np.zeros((len(vocab), b1 * b2), dtype=np.uint8)
    counts = _cube_counts(cube, b1, b2)
    for row, key in enumerate(cube.keys.tolist()):
        m = np.searchsorted(vocab, key)
        if m < len(vocab) and vocab[m] == key:
            bits[m] = (np.arange(b2)[None, :] < counts[row][:, None]).ravel()
    return bits.ravel()


class QueryResult(list):
    """``(ref, distance)`` pairs ascending by distance, plus query diagnostics."""

    def __init__(self, hits, n_candidates: int, fallback: bool):
        super().__init__(hits)
        self.n_candidates = n_candidates
        self.fallback = fallback


class LshIndex:
    def __init__(self, params: LshParams, vocab: np.ndarray, hash_specs: np.ndarray,
                 entry_keys: np.ndarray, cubes: PackedCubes, lam: float = DEFAULT_LAMBDA):
        self.params = params
        self.vocab = np.ascontiguousarray(vocab, dtype=np.int64)
        self.hash_specs = np.ascontiguousarray(hash_specs, dtype=np.int64)
        self.entry_keys = entry_keys
        self.cubes = cubes
        self.lam = lam
        self.tables: list[dict[bytes, list[int]]] = []
        for t in range(params.tables):
            table: dict[bytes, list[int]] = defaultdict(list)
            for e in range(len(entry_keys)):
                table[entry_keys[e, t].tobytes()].append(e)
            self.tables.append(dict(table))

    @property
    def total_bits(self) -> int:
        return len(self.vocab) * self.params.b1 * self.params.b2

    def __len__(self) -> int:
        return len(self.cubes)

    def keys_for(self, cube: Datacube) -> np.ndarray:
        """Packed hash keys of ``cube`` in every table, shape ``(tables, ceil(k / 8))``."""
        return _hash_keys(cube, self.vocab, self.hash_specs, self.params.b1, self.params.b2)

    def candidates(self, cube: Datacube, top_k: int) -> list[int]:
        keys = self.keys_for(cube)
        seen: dict[int, None] = {}
        for t, table in enumerate(self.tables):
            for e in table.get(keys[t].tobytes(), ()):
                seen.setdefault(e, None)
        found = list(seen)
        cap = self.params.candidate_factor * max(self.params.tables, top_k)
        return found[:cap] if cap else found

    def query(self, q: Datacube, top_k: int) -> QueryResult:
        cand = self.candidates(q, top_k)
        fallback = not cand
        if fallback:
            digest = hashlib.blake2b(q.keys.tobytes() + q.n.tobytes() + q.n_plus.tobytes(),
                                     digest_size=8).digest()
            rng = np.random.default_rng([self.params.seed, int.from_bytes(digest, "little")])
            size = min(4 * top_k, len(self.cubes))
            cand = sorted(rng.choice(len(self.cubes), size=size, replace=False).tolist())
        D = self.cubes.distances(q, self.lam, np.asarray(cand, dtype=np.int64))
        order = np.argsort(D, kind="stable")[:top_k]
        return QueryResult([(self.cubes.refs[cand[o]], float(D[o])) for o in order], len(cand), fallback)

    def save(self, fh: BinaryIO) -> None:
        p = self.params
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<IIIIqId", p.k, p.tables, p.b1, p.b2, p.seed, p.candidate_factor, self.lam))
        refs = np.asarray(self.cubes.refs, dtype=np.int64).reshape(-1, 2)
        for arr in (refs, self.vocab, self.hash_specs, self.entry_keys):
            _write_array(fh, arr)

    @classmethod
    def load(cls, fh: BinaryIO, cubes: Sequence[Datacube] | PackedCubes,
             expect: LshParams | None = None) -> "LshIndex":
        """Read an index written by :meth:`save` and attach the training cubes.

        ``cubes`` must be the same cubes, in the same order, the index was built
        from; when ``expect`` is given the stored parameters must match it.
        """
        if fh.read(len(MAGIC)) != MAGIC:
            raise IndexFormatError("not an LSH index file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise IndexFormatError(f"unsupported index version {version}")
        k, tables, b1, b2, seed, factor, lam = struct.unpack("<IIIIqId", fh.read(struct.calcsize("<IIIIqId")))
        params = LshParams(k, tables, b1, b2, seed, factor)
        if expect is not None and expect != params:
            raise IndexFormatError(f"index parameters {asdict(params)} differ from expected {asdict(expect)}")
        refs, vocab, specs, entry_keys = (_read_array(fh) for _ in range(4))
        packed = cubes if isinstance(cubes, PackedCubes) else PackedCubes.pack(list(cubes))
        if [tuple(r) for r in refs.tolist()] != [tuple(r) for r in packed.refs]:
            raise IndexFormatError("training cubes do not match the indexed cubes")
        if specs.shape != (tables, k) or entry_keys.shape[:2] != (len(refs), tables):
            raise IndexFormatError("corrupt index: table shapes disagree with parameters")
        return cls(params, vocab, specs, entry_keys, packed, lam)


def _hash_keys(cube: Datacube, vocab: np.ndarray, specs: np.ndarray, b1: int, b2: int) -> np.ndarray:
    tables, k = specs.shape
    bits = np.zeros(specs.size, dtype=np.uint8)
    if len(cube):
        pos = specs.ravel()
        cell = pos // (b1 * b2)
        bucket = (pos // b2) % b1
        bit = pos % b2
        vidx = np.searchsorted(vocab, cube.keys)
        in_vocab = (vidx < len(vocab)) & (vocab[np.minimum(vidx, len(vocab) - 1)] == cube.keys)
        vidx, rows = vidx[in_vocab], np.flatnonzero(in_vocab)
        if len(vidx):
            counts = _cube_counts(cube, b1, b2)[rows]
            at = np.searchsorted(vidx, cell)
            hit = (at < len(vidx)) & (vidx[np.minimum(at, len(vidx) - 1)] == cell)
            bits[hit] = bit[hit] < counts[at[hit], bucket[hit]]
    return np.packbits(bits.reshape(tables, k), axis=1)


def build_index(cubes: Sequence[Datacube], params: LshParams | None = None,
                lam: float = DEFAULT_LAMBDA) -> LshIndex:
    """Hash every training cube into ``params.tables`` tables of sampled bits."""
    params = params or LshParams()
    if not cubes:
        raise ValueError("cannot index an empty cube set")
    vocab = np.unique(np.concatenate([c.keys for c in cubes]))
    total = len(vocab) * params.b1 * params.b2
    if params.k > total:
        raise ValueError(f"k={params.k} exceeds the {total} available bits")
    rng = np.random.default_rng(params.seed)
    specs = np.stack([np.sort(rng.choice(total, size=params.k, replace=False))
                      for _ in range(params.tables)])
    entry_keys = np.stack([_hash_keys(c, vocab, specs, params.b1, params.b2) for c in cubes])
    return LshIndex(params, vocab, specs, entry_keys, PackedCubes.pack(list(cubes)), lam)


def _write_array(fh: BinaryIO, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr)
    code = {np.dtype(np.int64): b"q", np.dtype(np.uint8): b"B"}[arr.dtype]
    fh.write(code + struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
    fh.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())


def _read_array(fh: BinaryIO) -> np.ndarray:
    code = fh.read(1)
    dtype = {b"q": np.dtype("<i8"), b"B": np.dtype(np.uint8)}.get(code)
    if dtype is None:
        raise IndexFormatError("corrupt index: bad array header")
    (ndim,) = struct.unpack("<B", fh.read(1))
    shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
    size = int(np.prod(shape)) * dtype.itemsize
    buf = fh.read(size)
    if len(buf) != size:
        raise IndexFormatError("truncated index file")
    return np.frombuffer(buf, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
