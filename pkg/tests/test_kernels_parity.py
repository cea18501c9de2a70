"""The compiled and pure-Python kernels must agree on every input."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nplink import _kernels
from nplink.features import PackedCubes, build_datacube

from helpers import random_seq

found = _kernels.backends()
pytestmark = pytest.mark.skipif("cython" not in found, reason="compiled kernels not built")
pure, ext = found["pure"], found.get("cython")


def random_cube(rng, n_cells, span=4):
    keys = set()
    while len(keys) < n_cells:
        keys.add(_kernels.pack(*(int(v) for v in rng.integers(0, span, size=4))))
    keys = np.array(sorted(keys), dtype=np.int64)
    n = rng.integers(1, 30, size=n_cells).astype(np.float64)
    return keys, n, np.floor(n * rng.random(n_cells))


def test_selected_backend_reported():
    assert _kernels.BACKEND in ("cython", "pure")


@given(st.floats(0.0, 1.0), st.floats(0.0, 300.0), st.floats(0.0, 1.0), st.floats(0.0, 300.0))
def test_tv_posterior(pa, na, pb, nb):
    assert ext.tv_posterior(pa, na, pb, nb) == pytest.approx(pure.tv_posterior(pa, na, pb, nb), abs=1e-14)


@given(st.integers(0, 2**32 - 1), st.integers(0, 12), st.integers(0, 12), st.floats(0.05, 0.95))
def test_cube_distance(seed, m1, m2, lam):
    rng = np.random.default_rng(seed)
    a, b = random_cube(rng, m1), random_cube(rng, m2)
    assert ext.cube_distance(*a, *b, lam) == pytest.approx(pure.cube_distance(*a, *b, lam), abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_smoothed_and_cell_values(seed, lam):
    rng = np.random.default_rng(seed)
    cubes = [random_cube(rng, int(rng.integers(0, 10))) for _ in range(6)]
    keys = np.concatenate([c[0] for c in cubes])
    ns = np.concatenate([c[1] for c in cubes])
    nps = np.concatenate([c[2] for c in cubes])
    offsets = np.concatenate([[0], np.cumsum([len(c[0]) for c in cubes])]).astype(np.int64)
    s = _kernels.pack(*(int(v) for v in rng.integers(0, 4, size=4)))
    for c in cubes:
        assert ext.smoothed(*c, s, lam) == pytest.approx(pure.smoothed(*c, s, lam), abs=1e-12)
    for got, want in zip(ext.cell_values(s, keys, ns, nps, offsets, lam),
                         pure.cell_values(s, keys, ns, nps, offsets, lam)):
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)
    q = cubes[0]
    np.testing.assert_allclose(ext.cube_distances(*q, keys, ns, nps, offsets, lam),
                               pure.cube_distances(*q, keys, ns, nps, offsets, lam), rtol=0, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_pair_cells(seed):
    rng = np.random.default_rng(seed)
    seq = random_seq(rng, 30, 5, float(rng.uniform(0.02, 0.2)))
    prev, nxt = seq[3], seq[4]
    members = np.sort(rng.choice(30, size=int(rng.integers(0, 30)), replace=False)).astype(np.int64)
    window = [seq[3 - a] for a in range(4)]
    args = (members, seq.n, prev.und_indptr, prev.und_indices, prev.degrees,
            [s.out_indptr for s in window], [s.out_indices for s in window],
            nxt.out_indptr, nxt.out_indices, 3)
    k1, f1 = pure.pair_cells(*args)
    k2, f2 = ext.pair_cells(*args)
    np.testing.assert_array_equal(k1, k2)
    np.testing.assert_array_equal(f1, f2)


def test_packed_distances_on_generated_cubes(rng):
    seq = random_seq(rng, 40, 6, 0.05)
    cubes = [build_datacube(seq, i, t) for t in range(1, 6) for i in range(40)]
    packed = PackedCubes.pack(cubes)
    for q in cubes[::37]:
        np.testing.assert_allclose(
            ext.cube_distances(q.keys, q.n, q.n_plus, packed.keys, packed.n, packed.n_plus, packed.offsets, 0.5),
            pure.cube_distances(q.keys, q.n, q.n_plus, packed.keys, packed.n, packed.n_plus, packed.offsets, 0.5),
            rtol=0, atol=1e-12)
