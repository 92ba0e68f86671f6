"""Acceptance gate: one test per criterion, each clause reported in the terminal summary.

Seeds are fixed up front (SEED below) and never tuned against the outcome.
"""

import math
import statistics
import time

import numpy as np

from acceptance_report import record
from oracles import enumerate_binary, span_rank, to_matrix
from sparse_rlnc.analytic import (AooConfig, full_rank_lower_bound, full_rank_prob_exact_classic,
                                  full_rank_prob_stein_chen, full_rank_upper_bound, lambda_terms,
                                  pi_tilde, rho, solve_aoo, stein_chen_orders)
from sparse_rlnc.cli import ExperimentConfig, render_csv
from sparse_rlnc.coding_matrix import (DecodingMatrix, IncrementalDecoder, generate_matrix,
                                       minimal_zero_sum_counts_batch, rank, zero_sum_subset_exists)
from sparse_rlnc.delivery import (LowerBound, SteinChen, UpperBound, average_overhead, delivery_curve,
                                  max_abs_gap, mse)
from sparse_rlnc.gf import CodingDistribution, field_new
from sparse_rlnc.montecarlo import (Z99, SimConfig, derive_seed, estimate_delivery_curve, estimate_overhead,
                                    estimate_rank_prob, estimate_rank_prob_curve)

SEED = 20_240_917
FIG_TRIALS = 20_000
OFFSETS = range(0, 31)


def dist(q, p):
    return CodingDistribution(field_new(q.bit_length() - 1), p)


def finish(ok_list):
    assert all(ok_list)


def delivery_scores(q, p, K, methods=("stein-chen", "lower-bound", "upper-bound")):
    d = dist(q, p)
    Ns = [K + o for o in OFFSETS]
    sim = [e.mean for e in estimate_delivery_curve(K, Ns, 0.1, d,
                                                   SimConfig(FIG_TRIALS, derive_seed(SEED, q, K, round(p * 100))))]
    providers = {"stein-chen": SteinChen(d), "lower-bound": LowerBound(d), "upper-bound": UpperBound(d)}
    return {m: (mse(delivery_curve(K, Ns, 0.1, providers[m]), sim),
                max_abs_gap(delivery_curve(K, Ns, 0.1, providers[m]), sim)) for m in methods}


def test_criterion_1_exact_classic_agreement():
    start = time.perf_counter()
    inside = total = 0
    for q in (2, 16):
        for K in (2, 5, 10):
            ns = list(range(K, K + 11))
            ests = estimate_rank_prob_curve(K, ns, dist(q, 1 / q), SimConfig(100_000, derive_seed(SEED, 1, q, K)))
            for n, est in zip(ns, ests):
                R = full_rank_prob_exact_classic(K, n, q)
                inside += abs(est.mean - R) <= Z99 * math.sqrt(R * (1 - R) / est.trials) + 1e-15
                total += 1
    elapsed = time.perf_counter() - start
    finish([record("1", "99% CI coverage >= 95%", inside / total >= 0.95, f"{inside}/{total}"),
            record("1", "runtime < 2 min", elapsed < 120, f"{elapsed:.1f}s")])


def test_criterion_2_exhaustive_oracle_equivalence(gf2):
    start = time.perf_counter()
    mismatches = 0
    worst_z = 0.0
    for K, n in ((2, 2), (3, 3), (3, 4)):
        for rows, _ in enumerate_binary(K, n, 0.5):
            M = DecodingMatrix(to_matrix(rows, n), gf2)
            r = rank(M)
            mismatches += (r == K) == zero_sum_subset_exists(M) or r != span_rank(rows)
        for p in (0.5, 0.8):
            truth = math.fsum(w for rows, w in enumerate_binary(K, n, p) if span_rank(rows) == K)
            est = estimate_rank_prob(K, n, dist(2, p), SimConfig(100_000, derive_seed(SEED, 2, K, n, round(p * 10))))
            sigma = math.sqrt(truth * (1 - truth) / est.trials)
            worst_z = max(worst_z, abs(est.mean - truth) / sigma)
    elapsed = time.perf_counter() - start
    finish([record("2", "(a) rank vs subset oracle", mismatches == 0, f"{mismatches} mismatches"),
            record("2", "(b) exhaustive vs MC within 3 sigma", worst_z <= 3, f"max |z| = {worst_z:.2f}"),
            record("2", "runtime < 1 min", elapsed < 60, f"{elapsed:.1f}s")])


def test_criterion_3_order_anchors():
    start = time.perf_counter()
    r2 = full_rank_prob_stein_chen(20, 20, 0.8, 2, 2)
    r14 = full_rank_prob_stein_chen(20, 20, 0.8, 2, 14)
    cfg = AooConfig(1e-4, 20)
    m20, m31 = solve_aoo(20, 20, 0.8, 2, cfg), solve_aoo(20, 31, 0.8, 2, cfg)
    elapsed = time.perf_counter() - start
    finish([record("3", "R(m=2) = 0.72 +- 0.01", abs(r2 - 0.72) <= 0.01, f"{r2:.4f}"),
            record("3", "R(m=14) = 0.21 +- 0.01", abs(r14 - 0.21) <= 0.01, f"{r14:.4f}"),
            record("3", "m* = 18 at n=20", m20 == 18, f"m*={m20}"),
            record("3", "m* = 4 at n=31", m31 == 4, f"m*={m31}"),
            record("3", "runtime < 1 s", elapsed < 1, f"{elapsed:.3f}s")])


def test_criterion_4_binary_p07_delivery():
    start = time.perf_counter()
    scores = {K: delivery_scores(2, 0.7, K, ("stein-chen",))["stein-chen"] for K in (10, 20, 50)}
    elapsed = time.perf_counter() - start
    worst_mse = max(s[0] for s in scores.values())
    worst_gap = max(s[1] for s in scores.values())
    k50 = scores[50][0]
    finish([record("4", "MSE <= 2e-3", worst_mse <= 2e-3,
                   ", ".join(f"K={K}: {s[0]:.2e}" for K, s in scores.items())),
            record("4", "K=50 MSE within 3x of 7e-4", 7e-4 / 3 <= k50 <= 7e-4 * 3, f"{k50:.2e}"),
            record("4", "max gap <= 0.05", worst_gap <= 0.05, f"{worst_gap:.4f}"),
            record("4", "runtime < 10 min", elapsed < 600, f"{elapsed:.1f}s")])


def test_criterion_5_binary_p09_delivery():
    start = time.perf_counter()
    ok, info = True, []
    for K in (10, 20, 50):
        s = delivery_scores(2, 0.9, K)
        lo = s["lower-bound"][0] / s["stein-chen"][0]
        hi = s["upper-bound"][0] / s["stein-chen"][0]
        ok &= lo >= 50 and hi >= 50
        info.append(f"K={K}: LB/SC={lo:.0f}, UB/SC={hi:.0f}")
    elapsed = time.perf_counter() - start
    finish([record("5", "SC MSE >= 50x smaller than both bounds", ok, "; ".join(info)),
            record("5", "runtime < 10 min", elapsed < 600, f"{elapsed:.1f}s")])


def test_criterion_6_gf16_delivery():
    start = time.perf_counter()
    scores = {(K, p): delivery_scores(16, p, K) for K in (20, 50) for p in (0.7, 0.9)}
    elapsed = time.perf_counter() - start
    gap = max(s["stein-chen"][1] for s in scores.values())
    worst = max(s["stein-chen"][0] for s in scores.values())
    lb_gap = scores[(20, 0.9)]["lower-bound"][1]
    finish([record("6", "SC max gap <= 0.12", gap <= 0.12, f"{gap:.4f}"),
            record("6", "SC max MSE <= 5e-3", worst <= 5e-3, f"{worst:.2e}"),
            record("6", "LB gap > 0.4 at K=20 p=0.9", lb_gap > 0.4, f"{lb_gap:.4f}"),
            record("6", "runtime < 10 min", elapsed < 600, f"{elapsed:.1f}s")])


def test_criterion_7_overhead():
    start = time.perf_counter()
    worst, where = 0.0, None
    for K in (20, 50, 100):
        for p in (0.7, 0.9):
            d = dist(2, p)
            sc = SteinChen(d)
            for eps in (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3):
                model = average_overhead(K, eps, sc)
                sim = estimate_overhead(K, eps, d, SimConfig(FIG_TRIALS, derive_seed(SEED, 7, K, round(p * 100),
                                                                                     round(eps * 100))))
                if abs(model - sim.mean) > worst:
                    worst, where = abs(model - sim.mean), (K, p, eps)
    elapsed = time.perf_counter() - start
    finish([record("7", "overhead gap <= 2.5", worst <= 2.5, f"max {worst:.3f} at K,p,eps={where}"),
            record("7", "runtime < 15 min", elapsed < 900, f"{elapsed:.1f}s")])


def test_criterion_8_stein_chen_internals():
    K, n, p, trials = 6, 8, 0.8, 100_000
    rng = np.random.default_rng(SEED)
    bits = rng.random((trials, K, n)) >= p
    rows = (bits * (1 << np.arange(n))).sum(axis=-1)
    rows = rows[(rows != 0).all(axis=1)]
    counts = minimal_zero_sum_counts_batch(rows.astype(object), n)
    lam = lambda_terms(K, n, p, 2)
    ok, info = True, []
    for l in (2, 3, 4):
        mean = counts[:, l].mean()
        rel = abs(mean - lam[l - 2]) / lam[l - 2]
        ok &= rel <= 0.15
        info.append(f"l={l}: MC {mean:.4f} vs {lam[l - 2]:.4f} ({rel:.1%})")
    freq = float((counts.sum(axis=1) == 0).mean())
    target = math.exp(-lam.sum())
    finish([record("8", "E[count_l] within 15% of lambda_l", ok, "; ".join(info)),
            record("8", "P(full rank | no zero rows) within 0.02 of exp(-lambda)",
                   abs(freq - target) <= 0.02, f"{freq:.4f} vs {target:.4f} ({len(rows)} conditioned trials)")])


def test_criterion_9_property_suites():
    rng = np.random.default_rng(SEED)
    checks = []

    ok = True
    for _ in range(500):
        n, p, q = int(rng.integers(0, 100)), float(rng.random()), int(2 ** rng.integers(1, 9))
        ok &= math.isclose(rho(1, n, p, q), p**n, rel_tol=1e-12, abs_tol=1e-300)
        ok &= math.isclose(rho(int(rng.integers(1, 30)), n, 1 / q, q), float(q) ** -n, rel_tol=1e-12)
    checks.append(record("9", "rho identities", ok, "500 random (n, p, q)"))

    ok = True
    for _ in range(300):
        K = int(rng.integers(2, 80))
        R = stein_chen_orders(K, K + int(rng.integers(0, 40)), float(rng.random()), int(2 ** rng.integers(1, 9)))
        ok &= bool(np.all(np.diff(R) <= 0))
    checks.append(record("9", "R^(m) non-increasing in m", ok, "300 random grids"))

    bad = total = 0
    for _ in range(12):
        q = int(2 ** rng.integers(1, 5))
        p = float(rng.uniform(1 / q, 0.95))
        K = int(rng.integers(2, 25))
        ns = list(range(K, K + 11))
        ests = estimate_rank_prob_curve(K, ns, dist(q, p), SimConfig(100_000, derive_seed(SEED, 9, total)))
        for n, e in zip(ns, ests):
            s = math.sqrt(max(e.mean * (1 - e.mean), 1 / e.trials) / e.trials)
            total += 1
            bad += not (full_rank_lower_bound(K, n, p, q) - 3 * s <= e.mean <= full_rank_upper_bound(K, n, p, q) + 3 * s)
    checks.append(record("9", "bounds sandwich MC", bad == 0, f"{bad}/{total} outside"))

    bad = 0
    for i in range(1000):
        f = field_new((1, 4, 8)[i % 3])
        K = int(rng.integers(1, 9))
        cols = generate_matrix(K, 2 * K + 2, CodingDistribution(f, float(rng.uniform(0.3, 0.95))), rng).entries.T
        dec = IncrementalDecoder(K, f)
        bad += any(dec.push(c) != rank(DecodingMatrix(cols[:j + 1].T, f)) for j, c in enumerate(cols))
    checks.append(record("9", "incremental == batch rank", bad == 0, f"{bad}/1000 streams differ"))

    cfg = ExperimentConfig("delivery", K=[10], p=[0.7], N_range=(0, 10, 1),
                           methods=["stein-chen", "monte-carlo"], trials=5000, seed=SEED)
    cfg.validate()
    checks.append(record("9", "byte-identical CSV", render_csv(cfg) == render_csv(cfg), "delivery sweep twice"))
    finish(checks)


def test_criterion_10_pi_tilde_scaling():
    def median_time(L):
        times = []
        for _ in range(5):
            t0 = time.perf_counter()
            pi_tilde(L, 400, 0.9, 2)
            times.append(time.perf_counter() - t0)
        return statistics.median(times)

    pi_tilde(10, 400, 0.9, 2)  # warm-up
    ratio = median_time(100) / median_time(50)
    finish([record("10", "time(L=100)/time(L=50) <= 6", ratio <= 6, f"ratio {ratio:.2f}")])
