"""End-to-end acceptance criteria at their stated tolerances.

Each test records a PASS/FAIL line (shown in the terminal summary) before it
asserts, so a failing criterion still reports the numbers it measured.
"""

import functools
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from nplink.evaluation import EvalTask, auc, evaluate
from nplink.features import PackedCubes, build_datacube, pair_features
from nplink.kernel import CellPosterior, KernelConfig, NonParametricPredictor, tv_normal
from nplink.lsh import build_index
from nplink.simgen import SimConfig, generate

import oracles

pytestmark = pytest.mark.slow
SEEDS = range(10)
TESTS = Path(__file__).parent


@functools.lru_cache(maxsize=None)
def mean_aucs(methods, **sim):
    """Per-seed mean AUC of each method on simulated sequences with default settings."""
    rows = []
    for seed in SEEDS:
        report = evaluate(EvalTask(generate(SimConfig(seed=seed, **sim)), methods=methods))
        rows.append(report.mean_auc)
    return {m: np.array([r[m] for r in rows]) for m in methods}


ALL = ("np", "ll", "cn", "aa", "katz", "rnd")


def test_criterion_1_seasonal_benchmark(record_criterion):
    a = {m: v.mean() for m, v in mean_aucs(ALL, T=10, phi=0.5).items()}
    checks = {
        "NP >= 0.75": a["np"] >= 0.75,
        "NP - LL >= 0.10": a["np"] - a["ll"] >= 0.10,
        **{f"{m.upper()} in [0.45, 0.58]": 0.45 <= a[m] <= 0.58 for m in ("cn", "aa", "katz")},
        "RND in [0.47, 0.53]": 0.47 <= a["rnd"] <= 0.53,
    }
    failed = [k for k, ok in checks.items() if not ok]
    detail = " ".join(f"{m.upper()}={a[m]:.3f}" for m in ALL) + (f"  failed: {'; '.join(failed)}" if failed else "")
    assert record_criterion(1, not failed, detail), detail


def test_criterion_2_stationary_benchmark(record_criterion):
    a = {m: v.mean() for m, v in mean_aucs(("np", "katz"), T=10, phi=0.5, seasons=1).items()}
    ok = a["np"] >= 0.90 and a["katz"] >= 0.88
    detail = f"NP={a['np']:.3f} (>= 0.90) KZ={a['katz']:.3f} (>= 0.88)"
    assert record_criterion(2, ok, detail), detail


def test_criterion_3_history_length(record_criterion):
    short = {m: v.mean() for m, v in mean_aucs(("np", "ll"), T=4, phi=0.5).items()}
    long = mean_aucs(("np", "ll"), T=12, phi=0.5)["np"].mean()
    gain = long - short["np"]
    ok = gain >= 0.25 and short["ll"] > short["np"]
    detail = (f"NP(T=12)={long:.3f} NP(T=4)={short['np']:.3f} gain={gain:.3f} (>= 0.25) "
              f"LL(T=4)={short['ll']:.3f} (> NP)")
    assert record_criterion(3, ok, detail), detail


def test_criterion_4_seasonality_strength(record_criterion):
    strong = mean_aucs(ALL, T=10, phi=0.5)
    weak = mean_aucs(("np", "ll"), T=10, phi=0.05)
    # paired seeds: the same seed draws the same node features at both strengths
    s_np, w_np = strong["np"].mean(), weak["np"].mean()
    ok = s_np >= w_np and s_np > strong["ll"].mean() and w_np > weak["ll"].mean()
    detail = (f"NP(phi=0.5)={s_np:.3f} NP(phi=0.05)={w_np:.3f} "
              f"LL(phi=0.5)={strong['ll'].mean():.3f} LL(phi=0.05)={weak['ll'].mean():.3f}")
    assert record_criterion(4, ok, detail), detail


def test_criterion_5_lsh_fidelity(record_criterion):
    cfg = KernelConfig()
    seq = generate(SimConfig(T=203, seed=0))
    train = [build_datacube(seq, i, t, cfg.lag, cfg.r_max) for t in range(1, 201) for i in range(seq.n)]
    queries = [build_datacube(seq, i, t, cfg.lag, cfg.r_max) for t in (201, 202) for i in range(seq.n)]
    assert len(train) == 10_000
    packed = PackedCubes.pack(train)
    index = build_index(train, cfg.lsh, lam=cfg.lam)
    top = 100

    recalls, t_lsh, t_scan = [], 0.0, 0.0
    for q in queries:
        start = time.perf_counter()
        D = packed.distances(q, cfg.lam)
        best = np.argpartition(D, top - 1)[:top]
        best = best[np.argsort(D[best], kind="stable")]
        t_scan += time.perf_counter() - start

        start = time.perf_counter()
        hits = index.query(q, top)
        t_lsh += time.perf_counter() - start
        # tie-aware: any returned cube at or below the exact 100th distance counts
        threshold = D[best[-1]]
        recalls.append(sum(d <= threshold for _, d in hits) / top)

    recall, ratio = float(np.mean(recalls)), t_lsh / t_scan
    ok = recall >= 0.9 and ratio <= 0.2
    detail = f"recall@100={recall:.3f} (>= 0.9) time ratio={ratio:.3f} (<= 0.2) over {len(queries)} queries"
    assert record_criterion(5, ok, detail), detail


def test_criterion_6_exact_mode(record_criterion):
    cfg = KernelConfig()
    seq = generate(SimConfig(n=30, T=8, seed=6))
    model = NonParametricPredictor(seq, cfg=cfg)
    T = seq.T
    cells = {(i, t): build_datacube(seq, i, t, cfg.lag, cfg.r_max).cells for t in range(1, T) for i in range(seq.n)}
    training = [(cells[(i, t)], cells[(i, t + 1)]) for t in range(1, T - 1) for i in range(seq.n)]
    rng = np.random.default_rng(66)
    worst = 0.0
    for _ in range(100):
        i, j = (int(x) for x in rng.choice(seq.n, size=2, replace=False))
        s = tuple(pair_features(seq, i, j, T - 1, cfg.lag))
        fallback = model.prior(pair_features(seq, i, j, T - 1, cfg.lag).key)
        want = oracles.estimator(cells[(i, T - 1)], training, s, cfg.b, cfg.lam, fallback)
        worst = max(worst, abs(model.predict(i, j) - want))
    ok = worst <= 1e-12
    detail = f"max |predict - oracle| = {worst:.2e} over 100 queries (<= 1e-12)"
    assert record_criterion(6, ok, detail), detail


def test_criterion_7_tv_correctness(record_criterion):
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(1000):
        pair = []
        for _side in range(2):
            n = float(rng.integers(2, 401)) if rng.random() < 0.7 else float(rng.uniform(0.3, 400.0))
            p = float(rng.uniform(0.001, 0.999))
            pair.append(CellPosterior(p, n))
        a, b = pair
        want = oracles.tv_trapezoid(a.p_hat, a.variance, b.p_hat, b.variance)
        worst = max(worst, abs(tv_normal(a, b) - want))

    # degenerate and near-degenerate corners
    near = [((0.5, 4), (0.5, 4.0000001)), ((0.3, 50), (0.7, 50)), ((0.5, 1), (0.0025, 400)),
            ((0.999, 30), (0.998, 31)), ((0.4, 20), (0.4, 20)), ((1e-3, 1), (0.5, 1))]
    for (pa, na), (pb, nb) in near:
        a, b = CellPosterior(pa, na), CellPosterior(pb, nb)
        worst = max(worst, abs(tv_normal(a, b) - oracles.tv_trapezoid(pa, a.variance, pb, b.variance)))
    points = [((0.2, 0), (0.7, 0), 1.0), ((0.4, 0), (0.4, 0), 0.0), ((0.0, 12), (0.0, 3), 0.0),
              ((1.0, 5), (1.0, 0), 0.0), ((0.0, 12), (1.0, 12), 1.0), ((0.0, 12), (0.5, 10), 1.0),
              ((1.0, 7), (0.999, 500), 1.0), ((0.3, 0), (0.3, 10), 1.0)]
    corner_ok = all(tv_normal(CellPosterior(*a), CellPosterior(*b)) == want for a, b, want in points)
    ok = worst <= 1e-6 and corner_ok
    detail = f"max |closed form - trapezoid| = {worst:.2e} (<= 1e-6); point-mass corners {'ok' if corner_ok else 'WRONG'}"
    assert record_criterion(7, ok, detail), detail


def test_criterion_8_auc_correctness(record_criterion):
    rng = np.random.default_rng(88)
    mismatches = 0
    for k in range(1000):
        m = int(rng.integers(2, 1001)) if k % 10 == 0 else int(rng.integers(2, 80))
        levels = int(rng.integers(1, 6)) if k % 2 else int(rng.integers(2, 10_000))
        scores = rng.integers(0, levels, size=m) / max(levels - 1, 1)
        labels = rng.random(m) < rng.uniform(0.05, 0.95)
        labels[0], labels[-1] = True, False
        want = oracles.auc_pairs(scores, labels) if m <= 80 else oracles.auc_pairs_vectorized(scores, labels)
        mismatches += auc(scores, labels) != want
    ok = mismatches == 0
    detail = f"{mismatches} exact mismatches on 1000 score/label sets"
    assert record_criterion(8, ok, detail), detail


PROPERTY_SUITES = [
    "test_kernel.py::TestKernelWeight",
    "test_evaluation.py::test_scores_ignore_test_snapshot",
    "test_evaluation.py::test_no_leakage_through_evaluate",
    "test_simgen.py::test_seed_determinism",
    "test_lsh.py::TestBuildIndex::test_seeded_build_is_byte_identical",
    "test_features.py::TestBuildDatacube::test_count_conservation",
    "test_lsh.py::TestEncodeCell::test_hamming_tracks_histogram_l1",
]


def test_criterion_9_property_suites(record_criterion):
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(TESTS / s) for s in PROPERTY_SUITES]],
                          capture_output=True, text=True, cwd=TESTS.parent)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    ok = proc.returncode == 0
    detail = f"{len(PROPERTY_SUITES)} suites: {summary}"
    assert record_criterion(9, ok, detail), proc.stdout[-3000:]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
