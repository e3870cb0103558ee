"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (also repeated in the pytest
terminal summary) before asserting.
"""

import subprocess
import sys
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from pthash import BuildConfig, Mphf, build_detailed
from pthash.analysis import front_back_entropy, trial_profile
from pthash.bits import BitVector
from pthash.builder import fill_free
from pthash.cli import main, random_keys
from pthash.encoders import SCHEMES
from pthash.hashing import buckets_of, hash_keys

C_SWEEP = [2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0]
REF_ENTROPY = [13.42, 11.68, 10.32, 9.29, 8.48, 7.82, 7.27, 6.82, 6.45, 6.11]
REF_FRONT = [3.89, 3.51, 3.21, 2.95, 2.77, 2.62, 2.48, 2.38, 2.30, 2.25]
REF_BACK = [10.10, 8.87, 7.88, 7.12, 6.51, 6.01, 5.60, 5.25, 4.96, 4.69]


def report(k: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


@pytest.fixture(scope="module")
def million():
    return random_keys(10**6, 0)


@pytest.fixture(scope="module")
def sweep(million):
    """One alpha=1 build per c of the entropy tables."""
    return {c: build_detailed(million, BuildConfig(c=c, alpha=1.0, seed=1)) for c in C_SWEEP}


def test_criterion_1_correctness_matrix(tmp_path, capsys):
    failures, checks = [], 0
    t0 = time.perf_counter()
    for n in (10**3, 10**5, 10**6):
        keys = random_keys(n, 5)
        for c in (3.5, 7.0, 11.0):
            for alpha in (0.88, 0.94, 0.99, 1.0):
                r = build_detailed(keys, BuildConfig(c=c, alpha=alpha, seed=n + int(10 * c)))
                for scheme in SCHEMES:
                    path = tmp_path / "f.pth"
                    r.encode(scheme).save(path)
                    code = main(["check", "-n", str(n), "--rng-seed", "5", str(path)])
                    capsys.readouterr()
                    checks += 1
                    if code != 0:
                        failures.append((n, c, alpha, scheme))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 600
    report(1, ok, f"{checks - len(failures)}/{checks} (n, c, alpha, encoder) cells bijective "
                  f"via cmd_check in {elapsed:.0f}s (limit 600s); failures={failures[:5]}")
    assert ok


def test_criterion_2_pilot_entropy(sweep):
    t_total = sum(sum(r.timings.values()) for r in sweep.values())
    got = [front_back_entropy(sweep[c].pilots, sweep[c].params.p2, c).H_all for c in C_SWEEP]
    within = [abs(g - e) <= 0.5 for g, e in zip(got, REF_ENTROPY)]
    decreasing = all(a > b for a, b in zip(got, got[1:]))
    ok = all(within) and decreasing and t_total < 300
    pairs = ", ".join(f"c={c}: {g:.2f} vs {e}" for c, g, e in zip(C_SWEEP, got, REF_ENTROPY))
    report(2, ok, f"H(P) within 0.5 bit at {sum(within)}/10 c values, strictly decreasing={decreasing}, "
                  f"builds {t_total:.0f}s (limit 300s) [{pairs}]")
    assert ok


def test_criterion_3_front_back_entropy(sweep):
    reps = [front_back_entropy(sweep[c].pilots, sweep[c].params.p2, c) for c in C_SWEEP]
    front_ok = [abs(r.H_front - e) <= 0.5 for r, e in zip(reps, REF_FRONT)]
    back_ok = [abs(r.H_back - e) <= 0.5 for r, e in zip(reps, REF_BACK)]
    ordered = all(r.H_front < r.H_back for r in reps)
    ok = all(front_ok) and all(back_ok) and ordered
    pairs = ", ".join(f"c={r.c}: front {r.H_front:.2f} vs {f}, back {r.H_back:.2f} vs {b}"
                      for r, f, b in zip(reps, REF_FRONT, REF_BACK))
    report(3, ok, f"front within 0.5 at {sum(front_ok)}/10, back within 0.5 at {sum(back_ok)}/10, "
                  f"front<back everywhere={ordered} [{pairs}]")
    assert ok


def test_criterion_4_trial_prediction(sweep):
    r = sweep[3.5]
    rows = trial_profile(r.stats, r.bucketed)
    checked = [row for row in rows if row.load_factor < 0.95]
    errors = [abs(row.measured_mean / row.predicted_mean - 1) for row in checked]
    ok = len(rows) == 20 and bool(checked) and max(errors) < 0.10
    report(4, ok, f"{len(checked)} chunks with load < 0.95, worst relative error {max(errors):.4f} (limit 0.10)")
    assert ok


def test_criterion_5_worked_free_example():
    n, n_prime = 9, 14
    holes = {0, 2, 8, 9, 12}
    taken = BitVector.from_bools([p not in holes for p in range(n_prime)])
    free = fill_free(taken, n, n_prime)
    assigned = (free[1], free[2], free[4])
    reranked = [free[p - n] for p in (10, 11, 13)]
    ok = assigned == (0, 2, 8) and reranked == [0, 2, 8]
    report(5, ok, f"free[1], free[2], free[4] = {assigned}; positions 10, 11, 13 -> {reranked}")
    assert ok


@pytest.fixture(scope="module")
def c7_build(million):
    return build_detailed(million, BuildConfig(c=7.0, alpha=0.99, seed=3))


def test_criterion_6_space_ordering(c7_build):
    bpk = {s: c7_build.encode(s).bits_per_key() for s in SCHEMES}
    chain = ["EF", "D-EF", "D-D", "C-C", "C"]
    ordered = all(bpk[a] <= bpk[b] for a, b in zip(chain, chain[1:]))
    in_range = 2.6 <= bpk["D-D"] <= 3.6
    ok = ordered and in_range
    listing = ", ".join(f"{s} {bpk[s]:.3f}" for s in SCHEMES)
    report(6, ok, f"EF<=D-EF<=D-D<=C-C<=C: {ordered}; D-D in [2.6, 3.6]: {in_range} [{listing}]")
    assert ok


def test_criterion_7_alpha_speedup_and_lookup_order(million, c7_build):
    def build_seconds(alpha):
        t0 = time.perf_counter()
        build_detailed(million, BuildConfig(c=7.0, alpha=alpha, seed=3))
        return time.perf_counter() - t0

    build_seconds(0.99), build_seconds(1.0)  # warm caches
    fast, slow = [], []
    for _ in range(7):  # interleaved so drift hits both settings alike
        fast.append(build_seconds(0.99))
        slow.append(build_seconds(1.0))
    ratio = float(np.median(slow) / np.median(fast))
    ratio_min = min(slow) / min(fast)

    lookup = {}
    for scheme in ("C-C", "D-D", "EF"):
        f = c7_build.encode(scheme)
        out = np.empty(million.size, dtype=np.int64)
        f.evaluate_many(million[:10], out[:10])
        runs = []
        for _ in range(5):
            t0 = time.perf_counter()
            f.evaluate_many(million, out)
            runs.append(time.perf_counter() - t0)
        lookup[scheme] = 1e9 * float(np.mean(runs)) / million.size
    lookup_ok = lookup["C-C"] < lookup["D-D"] < lookup["EF"]
    ok = ratio >= 1.2 and lookup_ok
    report(7, ok, f"build time alpha=1.0 / alpha=0.99 = {ratio:.3f} (median of 7, min-based {ratio_min:.3f}; "
                  f"need >= 1.2); lookup ns/key C-C {lookup['C-C']:.1f} < D-D {lookup['D-D']:.1f} "
                  f"< EF {lookup['EF']:.1f}: {lookup_ok}")
    assert ok


def test_criterion_8_serialization(tmp_path, million):
    outs = []
    for name in ("a.pth", "b.pth"):
        path = tmp_path / name
        proc = subprocess.run([sys.executable, "-m", "pthash", "build", "-n", "200000", "--rng-seed", "8",
                               "-s", "99", "-e", "dd", "-o", str(path)], capture_output=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    identical = outs[0] == outs[1]

    r = build_detailed(random_keys(200_000, 8), BuildConfig(seed=99))
    probes = np.concatenate([random_keys(200_000, 8)[:50_000], million[:50_000]])
    before = r.mphf.evaluate_many(probes)
    after = Mphf.deserialize(outs[0]).evaluate_many(probes)
    same_eval = np.array_equal(before, after) and probes.size == 10**5
    same_bytes = r.mphf.serialize() == outs[0]
    ok = identical and same_eval and same_bytes
    report(8, ok, f"two independent CLI runs byte-identical: {identical}; in-process build identical: "
                  f"{same_bytes}; {probes.size} probes evaluate identically after reload: {same_eval}")
    assert ok


def test_criterion_9_free_branch_frequency(million):
    r = build_detailed(million, BuildConfig(c=7.0, alpha=0.94, seed=4))
    p = r.params
    h = hash_keys(million, r.seed)
    pilots = r.pilots[buckets_of(h, p)].astype(np.uint64)
    positions = (h ^ hash_keys(pilots, r.seed)) % np.uint64(p.n_prime)
    freq = float(np.mean(positions >= r.n))
    expected = 1 - r.n / p.n_prime
    ok = abs(freq - expected) <= 0.01
    report(9, ok, f"free-branch frequency {freq:.5f} vs 1 - n/n' = {expected:.5f} (tolerance 0.01)")
    assert ok
