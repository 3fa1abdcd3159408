"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed immediately and repeated in
the terminal summary by ``conftest.py``) before asserting.
"""

import math
import time

import numpy as np

from flatnorm.flat_norm import bl_dual_norm, brute_force_norm, dual_norm, fm_dual_norm, h
from flatnorm.lipschitz import affine_map, dictionary, hat_function
from flatnorm.markov import (dirac_continuity_check, dual_iterate, eproperty_probe, ifs_from_affine,
                             iterate, power, pushforward_operator)
from flatnorm.measures import (consolidate, dirac, jordan, measure, pair, pair_density, sawtooth_g,
                               sinusoid_density, tv_norm)
from flatnorm.metric_space import euclidean, matrix_space, naturals, validate_metric
from flatnorm.schur_lab import (dictionary_convergence_scan, dirac_drift_sequence, discrete_l1_demo,
                                find_separated_clusters, fixed_test_functions, select_sparse_subsequence,
                                set_separation, verify_separated_clusters, verify_sparse_subsequence)

RESULTS: list[str] = []
INV_PI2 = 1 / math.pi ** 2
R = euclidean(1)


def record(k: int, ok: bool, detail: str):
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# -- instance generators -------------------------------------------------------------


def random_metric_matrix(rng, k):
    """Shortest-path closure of random edge lengths: a general finite metric."""
    D = rng.uniform(0.05, 3.0, (k, k))
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0.0)
    for m in range(k):
        D = np.minimum(D, D[:, m:m + 1] + D[m:m + 1, :])
    return D


def random_space_measure(rng, k, positive):
    kind = int(rng.integers(0, 4))
    lo = 0.01 if positive else -1.0
    w = rng.uniform(lo, 1.0, k)
    if kind == 0:
        return measure(R, list(zip(rng.uniform(-10, 10, k), w)))
    if kind == 1:
        return measure(euclidean(2), list(zip(map(tuple, rng.uniform(-3, 3, (k, 2))), w)))
    if kind == 2:
        pts = rng.choice(200, size=k, replace=False)
        return measure(naturals(), list(zip(pts.tolist(), w)))
    sp = matrix_space(random_metric_matrix(rng, k))
    return measure(sp, list(zip(range(k), w)))


# -- criteria ------------------------------------------------------------------------


def test_criterion_01_counterexample_pairing():
    ns = [1, 2, 4, 8, 16, 32, 64]
    t0 = time.perf_counter()
    vals = [pair_density(sinusoid_density(n), sawtooth_g(n)) for n in ns]
    elapsed = time.perf_counter() - t0
    err = max(abs(v - INV_PI2) for v in vals)
    record(1, err <= 1e-9 and elapsed < 1.0,
           f"<mu_n, g_n> = 1/pi^2 for n in {ns}: max error {err:.2e} (tol 1e-9), {elapsed:.3f} s (< 1 s)")


def test_criterion_02_counterexample_decay():
    fs = fixed_test_functions()
    ratios = []
    for f in fs:
        v1 = pair_density(sinusoid_density(1), f)
        v64 = pair_density(sinusoid_density(64), f)
        ratios.append(abs(v64) / abs(v1))
    ns = [1, 2, 4, 8, 16, 32, 64]
    tv_err = max(abs(tv_norm(sinusoid_density(n)) - 2 * n / math.pi) for n in ns)
    ok = all(r < 0.1 for r in ratios) and tv_err <= 1e-9
    record(2, ok, f"|<mu_64,f>|/|<mu_1,f>| = {', '.join(f'{r:.4f}' for r in ratios)} (< 0.1); "
                  f"tv = 2n/pi max error {tv_err:.2e} (tol 1e-9)")


def test_criterion_03_two_point_closed_form():
    ds = [0.1, 0.5, 1, 2, 5, 10]
    t0 = time.perf_counter()
    vals = [bl_dual_norm(measure(R, [(0.0, 1.0), (float(d), -1.0)])).value for d in ds]
    elapsed = time.perf_counter() - t0
    err = max(abs(v - 2 * d / (2 + d)) for v, d in zip(vals, ds))
    record(3, err <= 1e-9 and elapsed < 1.0,
           f"bl(delta_x - delta_y) = 2d/(2+d) for d in {ds}: max error {err:.2e} (tol 1e-9), {elapsed:.3f} s")


def test_criterion_04_oracle_equivalence():
    rng = np.random.default_rng(2024)
    grid = 3000
    tol = 2 * (2 / grid) + 1e-9
    worst = {"bl": 0.0, "fm": 0.0}
    t0 = time.perf_counter()
    valid = True
    for _ in range(200):
        k = int(rng.integers(1, 5))
        D = random_metric_matrix(rng, k)
        valid &= validate_metric(D, 1e-12) == []
        mu = measure(matrix_space(D), [(i, rng.uniform(-2, 2)) for i in range(k)])
        for ball in ("bl", "fm"):
            gap = abs(dual_norm(mu, ball).value - brute_force_norm(mu, ball, grid))
            worst[ball] = max(worst[ball], gap)
    elapsed = time.perf_counter() - t0
    ok = valid and max(worst.values()) <= tol and elapsed < 60
    record(4, ok, f"200 instances, |LP - brute force(R=3000)| max bl {worst['bl']:.2e}, "
                  f"fm {worst['fm']:.2e} (tol {tol:.2e}), {elapsed:.1f} s (< 60 s)")


def test_criterion_05_norm_chain():
    rng = np.random.default_rng(5)
    chain_excess = 0.0
    pos_gap = 0.0
    for _ in range(500):
        mu = random_space_measure(rng, int(rng.integers(1, 51)), positive=False)
        bl, fm, tv = bl_dual_norm(mu).value, fm_dual_norm(mu).value, tv_norm(mu)
        chain_excess = max(chain_excess, bl - fm, fm - tv)
    for _ in range(500):
        mu = random_space_measure(rng, int(rng.integers(1, 51)), positive=True)
        bl, fm, tv = bl_dual_norm(mu).value, fm_dual_norm(mu).value, tv_norm(mu)
        pos_gap = max(pos_gap, abs(bl - tv), abs(fm - tv))
    ok = chain_excess <= 1e-9 and pos_gap <= 1e-9
    record(5, ok, f"500 signed: max violation of bl <= fm <= tv {max(chain_excess, 0.0):.2e}; "
                  f"500 positive: max |norm - tv| {pos_gap:.2e} (tol 1e-9)")


def test_criterion_06_duality_bound():
    rng = np.random.default_rng(6)
    dic = dictionary(R, [-1.0, 0.0, 0.5, 2.0], [0.25, 1.0, 3.0], 2)
    worst = -np.inf
    pairs = 0
    for _ in range(250):
        k = int(rng.integers(1, 12))
        mu = measure(R, list(zip(rng.uniform(-3, 4, k), rng.uniform(-2, 2, k))))
        norm = bl_dual_norm(mu).value
        for idx in rng.integers(0, len(dic), 4):
            f = dic[int(idx)]
            worst = max(worst, abs(pair(mu, f)) - f.bl_bound * norm)
            pairs += 1
    record(6, pairs == 1000 and worst <= 1e-9,
           f"{pairs} pairs from a {len(dic)}-function dictionary: max |<mu,f>| - ||f||_BL ||mu||* "
           f"= {worst:.2e} (<= 1e-9)")


def test_criterion_07_schur_demonstration():
    n_max = 64
    seq = dirac_drift_sequence(n_max)
    ns = list(range(1, n_max + 1))
    tv_ok = all(tv_norm(seq(n)) == 2.0 for n in ns)
    norm_err = max(abs(bl_dual_norm(seq(n)).value - 2 / (2 * n + 1)) for n in ns)
    dic = dictionary(R, [0.0, 20.0, 40.0, 60.0], [16.0, 32.0], 2, max_subset=2)
    scan = dictionary_convergence_scan(seq, dic, n_max, flat_tail=False)
    osc = scan.summary["max_oscillation"]
    hat0 = hat_function(R, 1.0, [0.0])
    plus_pairs = [pair(jordan(seq(n))[0], hat0) for n in ns]
    plus_tv = [tv_norm(jordan(seq(n))[0]) for n in ns]
    jordan_ok = all(p == 0.0 for p in plus_pairs) and all(t == 1.0 for t in plus_tv)
    ok = tv_ok and osc < 1e-2 and norm_err <= 1e-9 and jordan_ok
    record(7, ok, f"tv = 2 for all n: {tv_ok}; tail oscillation over {len(dic)} functions {osc:.2e} (< 1e-2); "
                  f"|bl - 2/(2n+1)| max {norm_err:.2e}; <mu_n+, h> = 0 and tv(mu_n+) = 1: {jordan_ok}")


def test_criterion_08_markov_duality_and_eproperty():
    rng = np.random.default_rng(8)
    P = ifs_from_affine(R, [(0.5, 0.0), (0.5, 0.5)], [0.5, 0.5])
    f = hat_function(R, 1.0, [0.3])  # |f|_L = 1
    dual_err = 0.0
    for _ in range(10):
        k = int(rng.integers(1, 6))
        mu = measure(R, list(zip(rng.uniform(-1, 2, k), rng.uniform(-1, 1, k))))
        for n in range(11):
            dual_err = max(dual_err, abs(pair(iterate(P, mu, n), f) - pair(mu, dual_iterate(P, f, n))))
    radii = [1e-4, 1e-3, 1e-2, 1e-1, 0.5]
    fam = [power(P, n) for n in range(21)]
    table = eproperty_probe(fam, f, 0.3, radii, samples_per_radius=16, seed=0)
    # relative float slack: U^n f is evaluated through n affine images
    contract_ok = all(w <= r * (1 + 1e-12) for r, w in zip(radii, table.omega))
    phi = pushforward_operator(affine_map(R, 2.0))
    g = hat_function(R, 1.0, [0.0])
    small = [1e-5, 1e-4]
    expand = eproperty_probe([power(phi, n) for n in range(11)], g, 0.0, small, seed=0)
    expand_ok = all(w > 100 * r for r, w in zip(small, expand.omega))
    dirac_err = 0.0
    for op in (phi, pushforward_operator(affine_map(R, 0.5, 0.1))):
        for row in dirac_continuity_check(op, 0.2, [1e-3, 0.1, 0.7, 2.0, 5.0]):
            dirac_err = max(dirac_err, abs(row.bl_output - h(row.image_distance)))
    ok = dual_err <= 1e-12 and contract_ok and expand_ok and dirac_err <= 1e-9
    record(8, ok, f"duality max error {dual_err:.2e} (tol 1e-12); contractive omega/delta max "
                  f"{max(w / r for r, w in zip(radii, table.omega)):.12f} (<= 1); expanding omega/delta at n=10 "
                  f"{min(w / r for r, w in zip(small, expand.omega)):.0f} (> 100); "
                  f"Dirac check vs h max error {dirac_err:.2e} (tol 1e-9)")


def test_criterion_09_naturals_equivalence():
    rep = discrete_l1_demo(51, 200, seed=9)
    s = rep.summary
    ok = s["min_ratio"] >= 1 / 3 - 1e-9 and abs(s["ratio_delta0_minus_delta1"] - 1 / 3) <= 1e-9
    record(9, ok, f"200 measures on {{0..50}}: min bl/tv {s['min_ratio']:.6f} (>= 1/3 - 1e-9); "
                  f"delta_0 - delta_1 ratio error {abs(s['ratio_delta0_minus_delta1'] - 1 / 3):.2e}")


def test_criterion_10_cluster_and_subsequence_detectors():
    rng = np.random.default_rng(10)
    problems = 0
    clusters_found = selections = 0
    for _ in range(100):
        n = int(rng.integers(2, 12))
        centers = 4.0 * np.arange(16)
        mus = []
        for _ in range(n):
            k = int(rng.integers(1, 7))
            pts = rng.choice(centers, size=k) + rng.uniform(-0.3, 0.3, k)
            mus.append(consolidate(measure(R, list(zip(pts, rng.uniform(0.05, 1.0, k))))))
        eps = float(rng.uniform(0.1, 1.2))
        found = find_separated_clusters(mus, eps)
        if found:
            clusters_found += 1
            problems += len(verify_separated_clusters(mus, found, eps))
        sets = [([c], 1.0) for c in rng.permutation(centers)[:n]]
        sel = select_sparse_subsequence(mus, sets, eps)
        selections += len(sel)
        problems += len(verify_sparse_subsequence(mus, sets, sel, eps))
    deltas = [dirac(R, 3.0 * n) for n in range(1, 11)]
    w = find_separated_clusters(deltas, 1.0)
    seps = [set_separation(R, a.cluster, b.cluster) for i, a in enumerate(w) for b in w[i + 1:]]
    constructed_ok = [x.index for x in w] == list(range(10)) and min(seps) == 3.0
    ok = problems == 0 and constructed_ok
    record(10, ok, f"100 random instances ({clusters_found} with cluster witnesses, {selections} selected "
                   f"indices): {problems} post-check failures; delta_(3n): all {len(w)} indices, "
                   f"min separation {min(seps)} > 1")
