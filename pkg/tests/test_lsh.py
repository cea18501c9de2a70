import io
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from nplink.features import Datacube, PackedCubes, build_datacube
from nplink.kernel import datacube_distance
from nplink.lsh import (MAGIC, IndexFormatError, LshIndex, LshParams, bucket_masses, build_index,
                        code_from_masses, encode_cell, full_code)
from nplink.simgen import SimConfig, generate


def bits(text):
    return np.array([int(c) for c in text.replace(" ", "")], dtype=np.uint8)


def cube(cells, center=0, t=1):
    return Datacube.from_cells(center, t, cells)


@pytest.fixture(scope="module")
def cubes():
    seq = generate(SimConfig(n=40, T=12, seed=7))
    return [build_datacube(seq, i, t, 3) for t in range(1, 12) for i in range(40)]


class TestEncodeCell:
    def test_point_mass_at_one(self):
        np.testing.assert_array_equal(encode_cell(1.0, 7, 4, 4), bits("0000 0000 0000 1111"))

    def test_point_mass_at_zero(self):
        np.testing.assert_array_equal(encode_cell(0.0, 7, 4, 4), bits("1111 0000 0000 0000"))

    def test_uniform_masses(self):
        np.testing.assert_array_equal(code_from_masses([0.25] * 4, 4), bits("1000 1000 1000 1000"))

    def test_masses_against_integration(self):
        # N(0.5, 0.0025) on four buckets, tails folded into the end buckets
        edges = [-np.inf, 0.25, 0.5, 0.75, np.inf]
        expected = [quad(norm(0.5, 0.05).pdf, lo, hi, epsabs=1e-13)[0] for lo, hi in zip(edges, edges[1:])]
        np.testing.assert_allclose(bucket_masses(0.5, 100, 4)[0], expected, atol=1e-9)
        # the middle buckets hold just under one half each
        np.testing.assert_array_equal(encode_cell(0.5, 100, 4, 8),
                                      bits("00000000 11100000 11100000 00000000"))

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1000.0), st.integers(2, 12), st.integers(1, 12))
    def test_prefix_codes(self, p, n, b1, b2):
        code = encode_cell(p, n, b1, b2).reshape(b1, b2)
        counts = code.sum(axis=1)
        assert np.all(counts <= b2)
        for row, c in zip(code, counts):
            assert row[:c].all() and not row[c:].any()
        assert counts.sum() <= b2

    @given(st.floats(0.0, 1.0), st.floats(0.1, 1000.0), st.floats(0.0, 1.0), st.floats(0.1, 1000.0),
           st.integers(2, 10), st.integers(1, 16))
    def test_hamming_tracks_histogram_l1(self, p1, n1, p2, n2, b1, b2):
        h1, h2 = bucket_masses(p1, n1, b1)[0], bucket_masses(p2, n2, b1)[0]
        ham = int(np.sum(encode_cell(p1, n1, b1, b2) != encode_cell(p2, n2, b1, b2)))
        exact = int(np.abs(np.floor(h1 * b2) - np.floor(h2 * b2)).sum())
        l1 = float(np.abs(h1 - h2).sum())
        assert ham == exact
        assert abs(ham - b2 * l1) <= b1
        # histogram TV is half of L1
        assert np.maximum(h1 - h2, 0).sum() == pytest.approx(l1 / 2, abs=1e-12)


class TestBuildIndex:
    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            LshParams(k=0)

    def test_k_larger_than_layout(self):
        with pytest.raises(ValueError, match="exceeds"):
            build_index([cube({(0, 0, 0, 1): (3, 1)})], LshParams(k=65, b1=8, b2=8))

    def test_empty(self):
        with pytest.raises(ValueError):
            build_index([])

    def test_identical_cubes_share_keys(self, cubes):
        idx = build_index(cubes[:50] + [cubes[10]])
        np.testing.assert_array_equal(idx.entry_keys[10], idx.entry_keys[-1])

    def test_positions_inside_layout(self, cubes):
        idx = build_index(cubes)
        assert idx.hash_specs.max() < idx.total_bits
        assert len(idx) == len(cubes)
        assert sum(len(v) for v in idx.tables[0].values()) == len(cubes)

    def test_seeded_build_is_byte_identical(self, cubes):
        out = []
        for _ in range(2):
            buf = io.BytesIO()
            build_index(cubes, LshParams(seed=3)).save(buf)
            out.append(buf.getvalue())
        assert out[0] == out[1]

    @given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(2, 8), st.integers(1, 8))
    def test_sparse_keys_equal_materialized(self, seed, k, b1, b2):
        rng = np.random.default_rng(seed)
        cells = [tuple(int(v) for v in rng.integers(0, 3, size=4)) for _ in range(8)]

        def random_cube():
            picked = rng.choice(len(cells), size=int(rng.integers(0, 6)), replace=False)
            out = {}
            for s in picked:
                n = int(rng.integers(1, 20))
                out[cells[s]] = (n, int(rng.integers(0, n + 1)))
            return cube(out)

        train = [random_cube() for _ in range(5)]
        if sum(len(c) for c in train) == 0:
            train.append(cube({cells[0]: (2, 1)}))
        total = len(np.unique(np.concatenate([c.keys for c in train]))) * b1 * b2
        params = LshParams(k=min(k, total), tables=3, b1=b1, b2=b2, seed=seed % 1000)
        idx = build_index(train, params)
        for c in train + [random_cube()]:
            code = full_code(c, idx.vocab, b1, b2)
            want = np.packbits(code[idx.hash_specs], axis=1)
            np.testing.assert_array_equal(idx.keys_for(c), want)


class TestQuery:
    def test_self_match(self, cubes):
        # uncapped, every cube collides with itself in all tables
        idx = build_index(cubes, LshParams(candidate_factor=0))
        for q in cubes[::53]:
            hits = idx.query(q, 10)
            by_ref = {(c.center, c.t): c for c in cubes}
            assert hits[0][1] == 0.0
            assert datacube_distance(q, by_ref[hits[0][0]]) == 0.0

    def test_reported_distances_are_exact(self, cubes):
        idx = build_index(cubes)
        q = cubes[123]
        hits = idx.query(q, 25)
        by_ref = {(c.center, c.t): c for c in cubes}
        for ref, d in hits:
            assert d == datacube_distance(q, by_ref[ref])
        assert [d for _, d in hits] == sorted(d for _, d in hits)
        assert len(hits) <= 25 and hits.n_candidates <= max(25, idx.params.tables)

    def test_all_keys_miss_falls_back(self):
        # every stored cell of the training cubes is a point mass at 0, the query's at 1
        # with k equal to the whole layout every key is the full code, so nothing collides
        train = [cube({(0, 0, 0, a): (5, 0), (1, 0, 0, a): (4, 0)}, center=c, t=a + 1)
                 for c in range(20) for a in range(3)]
        params = LshParams(k=12, tables=2, b1=2, b2=1)
        idx = build_index(train, params)
        q = cube({(0, 0, 0, 0): (5, 5), (1, 0, 0, 0): (4, 4), (0, 0, 0, 1): (3, 3)}, center=99)
        hits = idx.query(q, 5)
        assert hits.fallback and hits.n_candidates == 20
        assert len(hits) == 5
        assert idx.query(q, 5) == hits

    def test_more_tables_never_lose_recall(self, cubes):
        packed = PackedCubes.pack(cubes)
        q = cubes[200]
        exact = packed.distances(q, 0.5)
        threshold = np.sort(exact)[19]
        previous_specs, previous_cand, previous_recall = None, set(), 0.0
        for tables in (1, 2, 4, 8, 16):
            idx = build_index(cubes, LshParams(k=24, tables=tables, seed=5, candidate_factor=0))
            if previous_specs is not None:
                np.testing.assert_array_equal(idx.hash_specs[: len(previous_specs)], previous_specs)
            cand = set(idx.candidates(q, 20))
            recall = sum(d <= threshold for _, d in idx.query(q, 20)) / 20
            assert previous_cand <= cand
            assert recall >= previous_recall
            previous_specs, previous_cand, previous_recall = idx.hash_specs, cand, recall

    def test_candidate_cap(self, cubes):
        idx = build_index(cubes, LshParams(k=2, tables=4))
        assert len(idx.candidates(cubes[0], 7)) <= 7


class TestPersistence:
    def saved(self, cubes, params=None):
        buf = io.BytesIO()
        build_index(cubes, params or LshParams()).save(buf)
        return buf.getvalue()

    def test_round_trip(self, cubes):
        idx = build_index(cubes)
        buf = io.BytesIO()
        idx.save(buf)
        buf.seek(0)
        back = LshIndex.load(buf, cubes, expect=LshParams())
        for q in cubes[::97]:
            assert back.query(q, 20) == idx.query(q, 20)

    def test_bad_magic(self, cubes):
        with pytest.raises(IndexFormatError, match="not an LSH index"):
            LshIndex.load(io.BytesIO(b"XXXXXXXX" + self.saved(cubes)[8:]), cubes)

    def test_bad_version(self, cubes):
        data = bytearray(self.saved(cubes))
        data[len(MAGIC):len(MAGIC) + 4] = struct.pack("<I", 99)
        with pytest.raises(IndexFormatError, match="version 99"):
            LshIndex.load(io.BytesIO(bytes(data)), cubes)

    def test_parameter_echo(self, cubes):
        with pytest.raises(IndexFormatError, match="differ"):
            LshIndex.load(io.BytesIO(self.saved(cubes)), cubes, expect=LshParams(k=8))

    def test_truncated(self, cubes):
        data = self.saved(cubes)
        with pytest.raises(IndexFormatError):
            LshIndex.load(io.BytesIO(data[: len(data) - 10]), cubes)

    def test_other_cubes(self, cubes):
        with pytest.raises(IndexFormatError, match="do not match"):
            LshIndex.load(io.BytesIO(self.saved(cubes)), cubes[:-1])
