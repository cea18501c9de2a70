# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_pure.py``; same names, same results."""

import numpy as np
cimport numpy as cnp
from libc.math cimport erf, sqrt, log, fabs, pow, copysign
from libc.stdlib cimport abs as iabs
from libc.float cimport DBL_MIN

cnp.import_array()

DEF SMOOTH_RADIUS = 2
cdef double SQRT2 = sqrt(2.0)
cdef double MAX_VAR_RATIO = 1e34
cdef long long MASK = 0xFFFF


cdef inline int _l1(long long a, long long b) noexcept nogil:
    return (iabs(<int>((a >> 48) & MASK) - <int>((b >> 48) & MASK))
            + iabs(<int>((a >> 32) & MASK) - <int>((b >> 32) & MASK))
            + iabs(<int>((a >> 16) & MASK) - <int>((b >> 16) & MASK))
            + iabs(<int>(a & MASK) - <int>(b & MASK)))


cdef double _tv_moments(double m1, double v1, double m2, double v2) noexcept nogil:
    cdef double d, delta, a, b, c, disc, q, r1, r2, lo, hi, s1, s2, mass1, mass2
    if v1 > MAX_VAR_RATIO * v2 or v2 > MAX_VAR_RATIO * v1:
        # 1 - TV shrinks like sqrt(log R / R); below double precision here
        return 1.0
    if v1 == v2:
        d = fabs(m1 - m2)
        if d == 0.0:
            return 0.0
        return erf(d / (2.0 * sqrt(v1) * SQRT2))
    if v1 > v2:
        m1, v1, m2, v2 = m2, v2, m1, v1
    # solve log f1 = log f2 in y = x - m1, centred on the narrower law, so the
    # coefficients carry no cancelling m**2 / v terms
    delta = m2 - m1
    a = (v1 - v2) / (2.0 * v1 * v2)
    b = -delta / v2
    c = 0.5 * delta * delta / v2 + 0.5 * log(v2 / v1)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        disc = 0.0
    q = -0.5 * (b + copysign(sqrt(disc), b))
    r1 = q / a
    r2 = c / q if q != 0.0 else r1
    if r1 <= r2:
        lo = r1
        hi = r2
    else:
        lo = r2
        hi = r1
    s1 = sqrt(v1) * SQRT2
    s2 = sqrt(v2) * SQRT2
    mass1 = 0.5 * (erf(hi / s1) - erf(lo / s1))
    mass2 = 0.5 * (erf((hi - delta) / s2) - erf((lo - delta) / s2))
    return fabs(mass1 - mass2)


cdef double _tv_post(double pa, double na, double pb, double nb) noexcept nogil:
    # n <= 0 leaves a point mass at p
    cdef double va = pa * (1.0 - pa) / na if na > 0.0 else 0.0
    cdef double vb = pb * (1.0 - pb) / nb if nb > 0.0 else 0.0
    # subnormal variances would overflow 1/v; they are point masses for all purposes
    if va < DBL_MIN:
        va = 0.0
    if vb < DBL_MIN:
        vb = 0.0
    if va <= 0.0 or vb <= 0.0:
        if va <= 0.0 and vb <= 0.0:
            return 0.0 if pa == pb else 1.0
        return 1.0
    return _tv_moments(pa, va, pb, vb)


def tv_normal_moments(double m1, double v1, double m2, double v2):
    return _tv_moments(m1, v1, m2, v2)


def tv_posterior(double pa, double na, double pb, double nb):
    return _tv_post(pa, na, pb, nb)


cdef void _smooth(const long long[:] keys, const double[:] ns, const double[:] nps,
                  Py_ssize_t lo, Py_ssize_t hi, long long s, double lam,
                  double* out_n, double* out_p) noexcept nogil:
    # caller guarantees s is not stored in keys[lo:hi]
    cdef Py_ssize_t k
    cdef int d
    cdef double w, tn = 0.0, tp = 0.0
    for k in range(lo, hi):
        d = _l1(keys[k], s)
        if d <= SMOOTH_RADIUS:
            w = pow(lam, d)
            tn += w * ns[k]
            tp += w * nps[k]
    out_n[0] = tn
    out_p[0] = tp


cdef Py_ssize_t _find(const long long[:] keys, Py_ssize_t lo, Py_ssize_t hi, long long s) noexcept nogil:
    cdef Py_ssize_t mid, end = hi
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < s:
            lo = mid + 1
        else:
            hi = mid
    if lo < end and keys[lo] == s:
        return lo
    return -1


def smoothed(const long long[:] keys, const double[:] ns, const double[:] nps, long long s, double lam):
    cdef Py_ssize_t k = _find(keys, 0, keys.shape[0], s)
    cdef double tn, tp
    if k >= 0:
        return float(ns[k]), float(nps[k])
    _smooth(keys, ns, nps, 0, keys.shape[0], s, lam, &tn, &tp)
    return tn, tp


cdef double _distance(const long long[:] ak, const double[:] an, const double[:] ap,
                      Py_ssize_t alo, Py_ssize_t ahi,
                      const long long[:] bk, const double[:] bn, const double[:] bp,
                      Py_ssize_t blo, Py_ssize_t bhi, double lam) noexcept nogil:
    cdef Py_ssize_t x = alo, y = blo
    cdef double total = 0.0, n1, p1, n2, p2
    cdef long long s
    while x < ahi or y < bhi:
        if y >= bhi or (x < ahi and ak[x] < bk[y]):
            s = ak[x]
            n1 = an[x]
            p1 = ap[x]
            _smooth(bk, bn, bp, blo, bhi, s, lam, &n2, &p2)
            x += 1
        elif x >= ahi or bk[y] < ak[x]:
            s = bk[y]
            n2 = bn[y]
            p2 = bp[y]
            _smooth(ak, an, ap, alo, ahi, s, lam, &n1, &p1)
            y += 1
        else:
            n1 = an[x]
            p1 = ap[x]
            n2 = bn[y]
            p2 = bp[y]
            x += 1
            y += 1
        total += _tv_post(p1 / n1 if n1 > 0.0 else 0.0, n1, p2 / n2 if n2 > 0.0 else 0.0, n2, )
    return total


def cube_distance(const long long[:] k1, const double[:] n1, const double[:] p1,
                  const long long[:] k2, const double[:] n2, const double[:] p2, double lam):
    return _distance(k1, n1, p1, 0, k1.shape[0], k2, n2, p2, 0, k2.shape[0], lam)


def cube_distances(const long long[:] qk, const double[:] qn, const double[:] qp,
                   const long long[:] keys, const double[:] ns, const double[:] nps,
                   const long long[:] offsets, double lam):
    cdef Py_ssize_t c, nc = offsets.shape[0] - 1
    out = np.empty(nc, dtype=np.float64)
    cdef double[:] o = out
    with nogil:
        for c in range(nc):
            o[c] = _distance(qk, qn, qp, 0, qk.shape[0], keys, ns, nps, offsets[c], offsets[c + 1], lam)
    return out


def cell_values(long long s, const long long[:] keys, const double[:] ns, const double[:] nps,
                const long long[:] offsets, double lam):
    cdef Py_ssize_t c, k, nc = offsets.shape[0] - 1
    out_n = np.empty(nc, dtype=np.float64)
    out_p = np.empty(nc, dtype=np.float64)
    cdef double[:] on = out_n
    cdef double[:] op = out_p
    with nogil:
        for c in range(nc):
            k = _find(keys, offsets[c], offsets[c + 1], s)
            if k >= 0:
                on[c] = ns[k]
                op[c] = nps[k]
            else:
                _smooth(keys, ns, nps, offsets[c], offsets[c + 1], s, lam, &on[c], &op[c])
    return out_n, out_p


cdef inline long long _log_bin(long long x) noexcept nogil:
    cdef long long v = x + 1, b = -1
    while v > 0:
        v >>= 1
        b += 1
    return b


def pair_cells(members, Py_ssize_t n, const int[:] und_ptr, const int[:] und_idx, degree,
               list win_ptrs, list win_idxs, const int[:] next_ptr, const int[:] next_idx, int p):
    cdef const long long[:] mem = np.ascontiguousarray(members, dtype=np.int64)
    cdef const long long[:] deg = np.ascontiguousarray(degree, dtype=np.int64)
    cdef Py_ssize_t m = mem.shape[0]
    if m < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.uint8)
    local_arr = np.full(n, -1, dtype=np.int64)
    cdef long long[:] local = local_arr
    cdef Py_ssize_t a, b, k, z, w, u, lw, idx
    for a in range(m):
        local[mem[a]] = a

    ll_arr = np.full((m, m), p, dtype=np.int64)
    cn_arr = np.zeros((m, m), dtype=np.int64)
    link_arr = np.zeros((m, m), dtype=np.uint8)
    cdef long long[:, :] ll = ll_arr
    cdef long long[:, :] cn = cn_arr
    cdef unsigned char[:, :] link = link_arr
    cdef const int[:] wp
    cdef const int[:] wi
    cdef Py_ssize_t lag

    for lag in range(len(win_ptrs) - 1, -1, -1):
        wp = win_ptrs[lag]
        wi = win_idxs[lag]
        for a in range(m):
            u = mem[a]
            for k in range(wp[u], wp[u + 1]):
                lw = local[wi[k]]
                if lw >= 0:
                    ll[a, lw] = lag

    with nogil:
        for a in range(m):
            u = mem[a]
            for k in range(und_ptr[u], und_ptr[u + 1]):
                z = und_idx[k]
                for idx in range(und_ptr[z], und_ptr[z + 1]):
                    lw = local[und_idx[idx]]
                    if lw >= 0 and lw != a:
                        cn[a, lw] += 1
            for k in range(next_ptr[u], next_ptr[u + 1]):
                lw = local[next_idx[k]]
                if lw >= 0:
                    link[a, lw] = 1

    keys_arr = np.empty(m * (m - 1), dtype=np.int64)
    flags_arr = np.empty(m * (m - 1), dtype=np.uint8)
    cdef long long[:] keys = keys_arr
    cdef unsigned char[:] flags = flags_arr
    cdef long long di
    k = 0
    with nogil:
        for a in range(m):
            di = _log_bin(deg[mem[a]])
            for b in range(m):
                if b == a:
                    continue
                keys[k] = (((di << 16 | _log_bin(deg[mem[b]])) << 16 | _log_bin(cn[a, b])) << 16) | ll[a, b]
                flags[k] = link[a, b]
                k += 1
    return keys_arr, flags_arr
