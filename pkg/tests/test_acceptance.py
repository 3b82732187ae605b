"""Acceptance criteria 1-10.

Each test appends one PASS/FAIL line to the terminal summary, then asserts.
Seeds are fixed up front (base ``SEED``); corpora are generated on the fly.
"""

from __future__ import annotations

import itertools
import math
import statistics
import time
from collections import Counter

import numpy as np
import pytest

from simstream.fimi import parse_fimi, shuffle, write_fimi
from simstream.measures import Measure, weight_f
from simstream.miner import MinerConfig, SimilarityMiner, detection_threshold
from simstream.oracle import PlantedPair, exact_similarities, generate_synthetic, half_ratios
from simstream.rng import RandomStream
from simstream.samplecount import Reservoir, estimate_similarity, estimate_similarity_general
from simstream.sampler import PairSampler, round_down
from simstream.stream import CountTable

from conftest import ACCEPTANCE_LINES, intro_transactions
from _stats import FamilyCheck

SEED = 20240101


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


# -- 1 ----------------------------------------------------------------------


def test_c01_intro_example():
    start = time.perf_counter()
    txs = intro_transactions()
    cos = exact_similarities(txs, Measure.COSINE)
    ranks = {}
    for measure in Measure:
        sims = exact_similarities(txs, measure)
        ranks[measure.value] = sims[(3, 4)] > sims[(1, 2)]
    elapsed = time.perf_counter() - start
    ok = cos[(1, 2)] == 0.5 and cos[(3, 4)] == 1.0 and all(ranks.values()) and elapsed < 1.0
    record(1, ok, f"cosine(1,2)={cos[(1, 2)]} cosine(3,4)={cos[(3, 4)]} outranks={ranks} in {elapsed:.3f}s")
    assert ok


# -- 2 ----------------------------------------------------------------------


def test_c02_sampler_marginals_and_independence():
    start = time.perf_counter()
    # 19 snapshot items with counts spread over 10..2200, plus one absent item
    table = CountTable()
    table.counts.update({k: round(10 * 1.35**k) for k in range(19)})
    table.transactions_seen = 4096
    table.items_seen = sum(table.counts.values())
    snap = table.snapshot()
    phi, M = 10, 8
    sampler = PairSampler.from_prefix(snap, Measure.COSINE, tau=4 * phi / M, phi=phi)
    tx = tuple(range(20))
    pairs = list(itertools.combinations(tx, 2))
    index = {p: k for k, p in enumerate(pairs)}
    p = np.array([sampler.emission_probability(i, j) for i, j in pairs])
    assert len({round_down(sampler.target_probability(i, j)).level for i, j in pairs}) > 5

    trials = 100_000
    X = np.zeros((trials, len(pairs)), dtype=np.uint8)
    rng = RandomStream(SEED)
    for t in range(trials):
        row = X[t]
        for sp in sampler.sample(tx, rng):
            row[index[sp.pair]] = 1

    freq = X.mean(axis=0)
    sd = np.sqrt(p * (1 - p) / trials)
    marg = FamilyCheck((freq - p) / sd)

    Xf = X.astype(np.float64)
    cov = (Xf.T @ Xf) / trials - np.outer(freq, freq)
    var = p * (1 - p)
    iu = np.triu_indices(len(pairs), k=1)
    cov_z = cov[iu] / np.sqrt(var[iu[0]] * var[iu[1]] / trials)
    indep = FamilyCheck(cov_z)

    elapsed = time.perf_counter() - start
    ok = marg.ok and indep.ok and elapsed < 60
    record(2, ok, f"marginals: {marg}; covariances: {indep}; {elapsed:.1f}s")
    assert ok


# -- 3 ----------------------------------------------------------------------


def test_c03_estimator_unbiased():
    start = time.perf_counter()
    n, m, size = 200, 2**13, 10
    support = m // 50
    estimates, truth = [], []
    for k in range(50):
        data = generate_synthetic(n, m, size, [((0, 1), 0.8)], seed=SEED + k, support=support, fixed_size=True)
        truth.append(exact_similarities(data, Measure.COSINE, phi=support)[(0, 1)])
        # s large enough that a window is a single reservoir/count round
        miner = SimilarityMiner(MinerConfig(phi=70, s=65536, max_tx_size=size, seed=SEED + k))
        top = {e.pair: e.estimate for e in miner.run(data)}
        estimates.append(top.get((0, 1), 0.0))
    mean = statistics.mean(estimates)
    se = statistics.stdev(estimates) / math.sqrt(len(estimates))
    elapsed = time.perf_counter() - start
    ok = abs(mean - 0.8) <= 0.08 and elapsed < 120
    record(
        3,
        ok,
        f"mean estimate {mean:.4f} (se {se:.4f}) vs 0.8 +- 0.08, exact {statistics.mean(truth):.4f}, "
        f"kappa {miner.published_window.kappa}, {elapsed:.1f}s",
    )
    assert ok


# -- 4 ----------------------------------------------------------------------


def _recall_run(s: int, runs: int = 100):
    n, m, size, phi, support = 200, 2**13, 10, 150.0, 400
    cfg = MinerConfig(phi=phi, s=s, max_tx_size=size)
    # every transaction has exactly `size` items, so the final window starts at
    # m/2 with mb = size * m/2; all n items are present by then
    threshold = detection_threshold(cfg, mb=size * m // 2, m=m // 2, n=n)
    high = math.ceil(1.5 * threshold * support) / support
    low = math.floor(0.2 * threshold * support) / support
    assert high <= 1.0 and low > 0
    hits_high = hits_low = 0
    for k in range(runs):
        data = generate_synthetic(
            n, m, size, [PlantedPair(0, 1, high, support), PlantedPair(2, 3, low, support)],
            seed=SEED + 100 + k, fixed_size=True,
        )
        miner = SimilarityMiner(MinerConfig(phi=phi, s=s, max_tx_size=size, seed=SEED + 100 + k))
        found = {e.pair for e in miner.run(data)}
        assert miner.current_threshold() == pytest.approx(threshold, rel=1e-12)
        hits_high += (0, 1) in found
        hits_low += (2, 3) in found
    return threshold, high, low, hits_high, hits_low, miner.published_window.kappa


def test_c04_recall():
    parts, ok = [], True
    for s in (8192, 1024):
        thr, high, low, hh, hl, kappa = _recall_run(s)
        ok &= hh >= 95 and hl <= 50
        parts.append(f"s={s} kappa={kappa} threshold={thr:.3f}: {high:.3f} found {hh}/100, {low:.3f} found {hl}/100")
    record(4, ok, "; ".join(parts))
    assert ok


# -- 5 and 6 ----------------------------------------------------------------

SPACE_C = 3.0
TIME_C = 2.0

_BIG = [
    # (label, n, skew, phi, relative, s)
    ("zipf n=1000", 1000, 1.0, 0.01, True, 1024),
    ("uniform n=5000", 5000, 0.0, 20.0, False, 4096),
    ("steep n=300", 300, 1.2, 0.001, True, 256),
]


def _probe(transactions, config: MinerConfig):
    """Run with space and work probes; returns (space ratio, work ratio, seconds)."""
    miner = SimilarityMiner(config)
    table = miner.table
    space = work = 0.0
    s = config.s
    start = time.perf_counter()
    for k, tx in enumerate(transactions, 1):
        miner.process(tx)
        r = miner.live_entries() / (table.n + s)
        if r > space:
            space = r
        if (k & (k - 1) == 0 or k % 4096 == 0) and table.n * k > 1:
            work = max(work, miner.ops / (table.mb * math.log2(table.n * k)))
    return space, work, time.perf_counter() - start


@pytest.fixture(scope="module")
def big_runs():
    out = []
    for label, n, skew, phi, rel, s in _BIG:
        data = generate_synthetic(n, 100_000, 10, [((0, 1), 0.9)], seed=SEED + 7, support=2000, max_size=30, skew=skew)
        cfg = MinerConfig(phi=phi, phi_relative=rel, s=s, max_tx_size=30, seed=SEED)
        out.append((label, data.mb) + _probe(data.transactions, cfg))
    return out


def test_c05_space_bound(big_runs):
    small = [
        ("intro", intro_transactions(), MinerConfig(phi=5, s=16)),
        (
            "planted n=200",
            generate_synthetic(200, 2**13, 10, [((0, 1), 0.8)], seed=SEED, fixed_size=True).transactions,
            MinerConfig(phi=70, s=1024, max_tx_size=10),
        ),
        (
            "tiny s",
            generate_synthetic(500, 2**14, 6, seed=SEED + 1).transactions,
            MinerConfig(phi=0.005, phi_relative=True, s=2, max_tx_size=40),
        ),
    ]
    ratios = {label: _probe(txs, cfg)[0] for label, txs, cfg in small}
    ratios.update({label: space for label, _, space, _, _ in big_runs})
    worst = max(ratios.values())
    ok = worst <= SPACE_C
    record(5, ok, f"max live entries / (n + s) = {worst:.3f} <= c = {SPACE_C} over {len(ratios)} corpora")
    assert ok


def test_c06_time_bound(big_runs):
    worst = max(work for _, _, _, work, _ in big_runs)
    label, mb, _, _, seconds = big_runs[0]
    ok = worst <= TIME_C and seconds < 10.0 and abs(mb / 100_000 - 10) < 0.1
    record(
        6,
        ok,
        f"max ops / (mb log2(nm)) = {worst:.3f} <= c = {TIME_C}; "
        f"10^5 transactions (mb={mb}, {label}) in {seconds:.2f}s",
    )
    assert ok


# -- 7 ----------------------------------------------------------------------


def test_c07_homogeneity():
    worst = 0.0
    for measure in Measure:
        for a, b in itertools.product(range(1, 101), repeat=2):
            half = weight_f(measure, a, b) / 2
            worst = max(worst, abs(weight_f(measure, 2 * a, 2 * b) - half) / half)
    gen = np.random.default_rng(SEED)
    est_worst = 0.0
    for _ in range(20_000):
        measure = list(Measure)[int(gen.integers(4))]
        w = float(gen.uniform(0, 100))
        kappa = int(gen.integers(2, 500))
        tau = float(10 ** gen.uniform(-4, 2))
        ci, cj = (int(x) for x in gen.integers(1, 10**7, size=2))
        a = estimate_similarity(w, kappa, tau)
        b = estimate_similarity_general(w, kappa, tau, measure, ci, cj)
        est_worst = max(est_worst, abs(a - b) / a if a else abs(b))
    ok = worst <= 1e-12 and est_worst <= 1e-9
    record(7, ok, f"homogeneity rel err {worst:.2e} <= 1e-12; estimator agreement rel err {est_worst:.2e} <= 1e-9")
    assert ok


# -- 8 ----------------------------------------------------------------------


def test_c08_reservoir_and_shuffle_uniformity(tmp_path):
    cap, offers, trials = 10, 1000, 100_000
    rng = RandomStream(SEED)
    hits = np.zeros(offers, dtype=np.int64)
    items = range(offers)
    for _ in range(trials):
        r = Reservoir(cap)
        offer = r.offer
        for x in items:
            offer(x, rng)
        hits[r.slots] += 1
    p = cap / offers
    res = FamilyCheck((hits / trials - p) / math.sqrt(p * (1 - p) / trials))

    src = tmp_path / "five.dat"
    write_fimi([(k,) for k in range(5)], src)
    out = tmp_path / "out.dat"
    seen = Counter()
    shuffles = 10_000
    for k in range(shuffles):
        shuffle(src, out, SEED + k)
        seen[tuple(parse_fimi(out))] += 1
    q = 1 / 120
    counts = [seen.get(perm, 0) for perm in itertools.permutations([(k,) for k in range(5)])]
    shuf = FamilyCheck([(c / shuffles - q) / math.sqrt(q * (1 - q) / shuffles) for c in counts])

    ok = res.ok and shuf.ok and len(seen) == 120
    record(8, ok, f"reservoir: {res}; shuffle: {shuf}")
    assert ok


# -- 9 ----------------------------------------------------------------------


def test_c09_half_stream_ratios(tmp_path):
    raw, shuffled = tmp_path / "raw.dat", tmp_path / "shuffled.dat"
    write_fimi(generate_synthetic(500, 50_000, 8, [((0, 1), 0.8)], seed=SEED, support=1000), raw)
    shuffle(raw, shuffled, SEED)
    records = half_ratios(list(parse_fimi(shuffled)), min_support=20)
    items = [r.ratio for r in records if not r.is_pair]
    pairs = [r.ratio for r in records if r.is_pair]
    med = statistics.median(items)
    ok = 0.45 <= med <= 0.55
    record(
        9,
        ok,
        f"median item ratio {med:.4f} over {len(items)} items (pairs: median {statistics.median(pairs):.4f} over {len(pairs)})",
    )
    assert ok


# -- 10 ---------------------------------------------------------------------


def test_c10_threshold_falls_with_length():
    b, M, n, s_per_m = 10, 20, 1000, 1 / 16
    values = []
    for e in range(10, 21):
        m = 2**e
        cfg = MinerConfig(phi=0.01, phi_relative=True, s=int(m * s_per_m), max_tx_size=M)
        values.append(detection_threshold(cfg, mb=b * m, m=m, n=n))
    ok = all(y < x for x, y in zip(values, values[1:]))
    record(10, ok, "thresholds " + ", ".join(f"{v:.3g}" for v in values))
    assert ok
