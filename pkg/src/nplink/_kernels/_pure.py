"""Pure-Python implementations of the hot kernels.

Every function here has a twin of the same name and signature in ``_ext.pyx``.
Cells are packed into one int64: four 16-bit fields
``deg_i_bin | deg_j_bin | cn_bin | ll`` from most to least significant.
"""

from __future__ import annotations

import math
import sys

import numpy as np
import scipy.sparse as sp

FIELD_BITS = 16
FIELD_MASK = (1 << FIELD_BITS) - 1
SMOOTH_RADIUS = 2
_SQRT2 = math.sqrt(2.0)
_MIN_VAR = sys.float_info.min
_MAX_VAR_RATIO = 1e34


def pack(deg_i: int, deg_j: int, cn: int, ll: int) -> int:
    return (((deg_i << FIELD_BITS | deg_j) << FIELD_BITS | cn) << FIELD_BITS) | ll


def unpack(key: int) -> tuple[int, int, int, int]:
    key = int(key)
    return ((key >> 48) & FIELD_MASK, (key >> 32) & FIELD_MASK,
            (key >> 16) & FIELD_MASK, key & FIELD_MASK)


def cell_l1(a: int, b: int) -> int:
    a, b = int(a), int(b)
    d = 0
    for shift in (48, 32, 16, 0):
        d += abs(((a >> shift) & FIELD_MASK) - ((b >> shift) & FIELD_MASK))
    return d


def log_bin(x: int) -> int:
    # floor(log2(x + 1)) without float rounding
    return int(x + 1).bit_length() - 1


def tv_normal_moments(m1: float, v1: float, m2: float, v2: float) -> float:
    """Total variation between N(m1, v1) and N(m2, v2); both variances > 0."""
    if v1 > _MAX_VAR_RATIO * v2 or v2 > _MAX_VAR_RATIO * v1:
        # 1 - TV shrinks like sqrt(log R / R); below double precision here
        return 1.0
    if v1 == v2:
        d = abs(m1 - m2)
        if d == 0.0:
            return 0.0
        return math.erf(d / (2.0 * math.sqrt(v1) * _SQRT2))
    if v1 > v2:
        m1, v1, m2, v2 = m2, v2, m1, v1
    # solve log f1 = log f2 in y = x - m1, centred on the narrower law, so the
    # coefficients carry no cancelling m**2 / v terms
    delta = m2 - m1
    a = (v1 - v2) / (2.0 * v1 * v2)
    b = -delta / v2
    c = 0.5 * delta * delta / v2 + 0.5 * math.log(v2 / v1)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        disc = 0.0
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    r1 = q / a
    r2 = c / q if q != 0.0 else r1
    lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
    s1, s2 = math.sqrt(v1) * _SQRT2, math.sqrt(v2) * _SQRT2
    mass1 = 0.5 * (math.erf(hi / s1) - math.erf(lo / s1))
    mass2 = 0.5 * (math.erf((hi - delta) / s2) - math.erf((lo - delta) / s2))
    return abs(mass1 - mass2)


def tv_posterior(pa: float, na: float, pb: float, nb: float) -> float:
    """TV between normal approximations N(p, p(1-p)/n) of two cell posteriors.

    Zero variance (``n <= 0`` or ``p`` in {0, 1}) is a point mass at ``p``: two
    point masses are at distance 0 when they coincide and 1 otherwise, and a
    point mass is singular to any normal.
    """
    va = pa * (1.0 - pa) / na if na > 0.0 else 0.0
    vb = pb * (1.0 - pb) / nb if nb > 0.0 else 0.0
    # subnormal variances would overflow 1/v; they are point masses for all purposes
    if va < _MIN_VAR:
        va = 0.0
    if vb < _MIN_VAR:
        vb = 0.0
    if va <= 0.0 or vb <= 0.0:
        if va <= 0.0 and vb <= 0.0:
            return 0.0 if pa == pb else 1.0
        return 1.0
    return tv_normal_moments(pa, va, pb, vb)


def smoothed(keys: np.ndarray, ns: np.ndarray, nps: np.ndarray, s: int, lam: float) -> tuple[float, float]:
    """Cell ``s`` of one cube, or the lam**L1 weighted sum of its neighbors within L1 <= 2."""
    k = np.searchsorted(keys, s)
    if k < len(keys) and keys[k] == s:
        return float(ns[k]), float(nps[k])
    tot_n = tot_p = 0.0
    for key, n, npl in zip(keys.tolist(), ns.tolist(), nps.tolist()):
        d = cell_l1(key, s)
        if d <= SMOOTH_RADIUS:
            w = lam ** d
            tot_n += w * n
            tot_p += w * npl
    return tot_n, tot_p


def _posterior(keys, ns, nps, s, lam):
    n, npl = smoothed(keys, ns, nps, s, lam)
    return (npl / n if n > 0.0 else 0.0), n


def cube_distance(k1, n1, p1, k2, n2, p2, lam: float) -> float:
    """Sum over the union of stored cells of per-cell posterior TV."""
    total = 0.0
    for s in np.union1d(k1, k2).tolist():
        pa, na = _posterior(k1, n1, p1, s, lam)
        pb, nb = _posterior(k2, n2, p2, s, lam)
        total += tv_posterior(pa, na, pb, nb)
    return total


def cube_distances(qk, qn, qp, keys, ns, nps, offsets, lam: float) -> np.ndarray:
    """Distances from one query cube to every cube of a packed collection.

    Cube ``c`` occupies ``keys[offsets[c]:offsets[c + 1]]``.
    """
    out = np.empty(len(offsets) - 1)
    for c in range(len(out)):
        lo, hi = offsets[c], offsets[c + 1]
        out[c] = cube_distance(qk, qn, qp, keys[lo:hi], ns[lo:hi], nps[lo:hi], lam)
    return out


def cell_values(s: int, keys, ns, nps, offsets, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed ``(n, n_plus)`` of cell ``s`` in every cube of a packed collection."""
    nc = len(offsets) - 1
    out_n, out_p = np.empty(nc), np.empty(nc)
    for c in range(nc):
        lo, hi = offsets[c], offsets[c + 1]
        out_n[c], out_p[c] = smoothed(keys[lo:hi], ns[lo:hi], nps[lo:hi], s, lam)
    return out_n, out_p


def _log_bin_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros(x.shape, dtype=np.int64)
    v = x + 1
    while True:
        v = v >> 1
        nz = v > 0
        if not nz.any():
            return out
        out += nz


def _local_adjacency(members, local, indptr, indices) -> np.ndarray:
    m = len(members)
    adj = np.zeros((m, m), dtype=bool)
    for a, u in enumerate(members):
        nb = local[indices[indptr[u]:indptr[u + 1]]]
        adj[a, nb[nb >= 0]] = True
    return adj


def pair_cells(members, n, und_ptr, und_idx, degree, win_ptrs, win_idxs,
               next_ptr, next_idx, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell key and next-step link flag of every ordered member pair.

    ``win_*[a]`` is the out-CSR of the snapshot ``a`` steps before the feature
    snapshot (``a = 0`` is the feature snapshot itself); ``und_*`` and
    ``degree`` describe the feature snapshot, ``next_*`` the following one.
    Pairs are emitted row-major over ``members`` with the diagonal skipped.
    """
    members = np.asarray(members, dtype=np.int64)
    m = len(members)
    if m < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.uint8)
    local = np.full(n, -1, dtype=np.int64)
    local[members] = np.arange(m)

    ll = np.full((m, m), p, dtype=np.int64)
    for a in range(len(win_ptrs) - 1, -1, -1):
        ll[_local_adjacency(members, local, win_ptrs[a], win_idxs[a])] = a

    und = sp.csr_matrix((np.ones(len(und_idx)), np.asarray(und_idx), np.asarray(und_ptr)), shape=(n, n))
    rows = und[members]
    cn = np.asarray((rows @ rows.T).todense(), dtype=np.int64)

    linked = _local_adjacency(members, local, next_ptr, next_idx)
    dbin = _log_bin_array(np.asarray(degree)[members])
    keys = (((dbin[:, None] << FIELD_BITS | dbin[None, :]) << FIELD_BITS | _log_bin_array(cn)) << FIELD_BITS) | ll
    off = ~np.eye(m, dtype=bool)
    return keys[off].astype(np.int64), linked[off].astype(np.uint8)
