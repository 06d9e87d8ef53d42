"""Exit criteria of the build, one test per criterion.

Each test records ``(passed, detail)`` in ``conftest.ACCEPTANCE``; the
terminal summary prints one PASS/FAIL line per criterion. Tolerances and
sizes are the stated ones, not reduced.
"""

import filecmp
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, record_bound
from reyesi import io
from reyesi.diagnostics import second_moment_validation, small_lattice, write_report
from reyesi.geometry import CompositionSample, aitchison_inner, clr, closure, contrast_matrix, ilr
from reyesi.inference import exact_distribution, monte_carlo_distribution, p_values
from reyesi.simulation import ScenarioConfig, run_case1, run_case2, run_case3
from reyesi.statistic import reyes_i, reyes_statistic, upper_bound
from reyesi.weights import from_edge_list, lattice_weights, row_standardize

pytestmark = pytest.mark.acceptance

REPORT_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "reports")


def record(k, passed, detail):
    ACCEPTANCE[k] = (bool(passed), detail)
    print(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
    assert passed, detail


def random_sample(rng, n, D):
    return CompositionSample(np.exp(rng.normal(size=(n, D))))


def test_criterion_1_exact_mean():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    path5 = row_standardize(from_edge_list([("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")], list("abcde")))
    designs = [
        ("2x2 queen", row_standardize(lattice_weights(2, 2, "queen"))),
        ("5-unit path", path5),
        ("2x3 rook", row_standardize(lattice_weights(2, 3, "rook"))),
    ]
    worst = 0.0
    for _, w in designs:
        for _ in range(20):
            s = random_sample(rng, w.n, 3)
            record_bound(reyes_i(s, w), upper_bound(s, w))
            d = exact_distribution(s, w)
            assert d.values.size == math.factorial(w.n)
            worst = max(worst, abs(d.mean + 1 / (w.n - 1)))
    elapsed = time.perf_counter() - t0
    record(1, worst <= 1e-12 and elapsed < 10,
           f"max |mean + 1/(n-1)| = {worst:.2e} (tol 1e-12) over 60 samples; {elapsed:.2f}s (limit 10s)")


def test_criterion_2_bound_and_case1_saturation():
    t0 = time.perf_counter()
    cells, saturated, total, worst = 0, 0, 0, 0.0
    for contiguity in ("queen", "rook"):
        for cov in ("identity", "exchangeable", "wishart_toeplitz"):
            cfg = ScenarioConfig.from_dict(dict(case="identical", grid=(3, 3), D=3, contiguity=contiguity,
                                                covariance=cov, replications=1000, master_seed=2))
            res = run_case1(cfg)
            cells += 1
            for r in res.records:
                record_bound(r["I_a"], r["upper_bound"])
                gap = abs(r["I_a"] - r["upper_bound"])
                worst = max(worst, gap)
                saturated += gap <= 1e-10
                total += 1
    elapsed = time.perf_counter() - t0
    record(2, saturated == total and elapsed < 60,
           f"Case 1: {saturated}/{total} replications saturate over {cells} cells, max gap {worst:.1e}; "
           f"{elapsed:.1f}s (limit 60s)")


def test_criterion_3_second_moment_validation():
    t0 = time.perf_counter()
    report = second_moment_validation(ns=(4, 5, 6, 7), Ds=(3, 5), criteria=("queen", "rook"),
                                      samples_per_cell=10, seed=303, tol=1e-8)
    os.makedirs(REPORT_DIR, exist_ok=True)
    write_report(report, os.path.join(REPORT_DIR, "second_moment_validation.json"))
    cells = report["cells"]
    complete = len(cells) == 16 and all(len(c["samples"]) == 10 for c in cells)
    has_values = all({"exact", "printed", "corrected", "rel_dev_printed"} <= set(s) for c in cells for s in c["samples"])
    worst_printed = max(c["max_rel_dev_printed"] for c in cells)
    worst_corrected = max(c["max_rel_dev_corrected"] for c in cells)

    # downstream variance consumer: ReyesStatistic.var_r must equal the exact variance
    rng = np.random.default_rng(7)
    w = small_lattice(6, "rook")
    s = random_sample(rng, 6, 3)
    exact = exact_distribution(s, w).values
    exact_var = math.fsum(exact**2) / exact.size - (math.fsum(exact) / exact.size) ** 2
    stat = reyes_statistic(s, w)
    consumer_ok = abs(stat.var_r - exact_var) <= 1e-8 * exact_var

    elapsed = time.perf_counter() - t0
    if report["printed_formula_agrees"]:
        passed = complete and has_values and elapsed < 300
        how = "printed closed form agrees in all cells"
    else:
        passed = (complete and has_values and report["finding"] and report["variance_source"] == "corrected"
                  and report["corrected_formula_agrees"] and consumer_ok and elapsed < 300)
        how = (f"printed form disagrees (max rel dev {worst_printed:.3f}), documented in report; "
               f"variance uses corrected form (max rel dev {worst_corrected:.1e}, tol 1e-8); "
               f"var_r vs exact: {abs(stat.var_r - exact_var) / exact_var:.1e}")
    record(3, passed, f"{how}; 16 cells x 10 samples; {elapsed:.1f}s (limit 300s)")


def test_criterion_4_contrast_invariance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    worst = 0.0
    for k in range(100):
        rows, cols = (int(v) for v in rng.integers(2, 8, size=2))
        w = row_standardize(lattice_weights(rows, cols, ("queen", "rook")[k % 2]))
        X = np.exp(rng.normal(scale=rng.uniform(0.1, 3), size=(w.n, int(rng.integers(2, 9)))))
        a = reyes_i(CompositionSample(X, psi="helmert_like"), w)
        b = reyes_i(CompositionSample(X, psi="pivot"), w)
        record_bound(a, upper_bound(CompositionSample(X), w))
        worst = max(worst, abs(a - b))
    elapsed = time.perf_counter() - t0
    record(4, worst <= 1e-10 and elapsed < 5,
           f"max |dI_a| = {worst:.2e} (tol 1e-10) over 100 instances; {elapsed:.2f}s (limit 5s)")


def test_criterion_5_isometry():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(1000):
        D = int(rng.integers(2, 9))
        x = closure(np.exp(rng.normal(scale=2, size=D)))
        y = closure(np.exp(rng.normal(scale=2, size=D)))
        # explicit double sum over all (i, j)
        lx, ly = np.log(x), np.log(y)
        double = math.fsum(
            (lx[i] - lx[j]) * (ly[i] - ly[j]) for i in range(D) for j in range(D)
        ) / (2 * D)
        psi = contrast_matrix(D)
        worst = max(worst, abs(aitchison_inner(x, y) - double), abs(double - clr(x) @ clr(y)),
                    abs(double - ilr(x, psi) @ ilr(y, psi)))
    elapsed = time.perf_counter() - t0
    record(5, worst <= 1e-10 and elapsed < 5,
           f"max deviation {worst:.2e} (tol 1e-10) over 1000 pairs; {elapsed:.2f}s (limit 5s)")


def test_criterion_6_calibration():
    t0 = time.perf_counter()
    rates, rates_m = {}, {}
    for grid in (3, 5):
        cfg = ScenarioConfig.from_dict(dict(case="independent", grid=(grid, grid), D=3, contiguity="queen",
                                            covariance="identity", replications=1000, B=2000, alpha=0.05,
                                            master_seed=606))
        res = run_case2(cfg)
        for r in res.records:
            record_bound(r["I_a"], r["upper_bound"])
        rates[f"{grid}x{grid}"] = res.aggregates["rejection_rate_a"]
        rates_m[f"{grid}x{grid}"] = res.aggregates["rejection_rate_m"]
    elapsed = time.perf_counter() - t0
    ok = all(0.03 <= r <= 0.07 for r in rates.values())
    record(6, ok and elapsed < 900,
           f"type-I error of I_a {rates} (band [0.03, 0.07]); I_m for reference {rates_m}; "
           f"{elapsed:.1f}s (limit 900s)")


def test_criterion_7_power():
    t0 = time.perf_counter()
    cfg = ScenarioConfig.from_dict(dict(case="sar", grid=(10, 10), D=3, contiguity="queen", covariance="identity",
                                        rho_sar=0.9, replications=300, B=2000, alpha=0.05, master_seed=707))
    res = run_case3(cfg)
    for r in res.records:
        record_bound(r["I_a"], r["upper_bound"])
    rate = res.aggregates["rejection_rate_a"]
    elapsed = time.perf_counter() - t0
    record(7, rate >= 0.8 and elapsed < 900,
           f"rejection rate of I_a = {rate:.3f} (need >= 0.8); {elapsed:.1f}s (limit 900s)")


def test_criterion_8_mc_vs_exact():
    t0 = time.perf_counter()
    rng = np.random.default_rng(808)
    w = row_standardize(lattice_weights(2, 3, "rook"))
    base = random_sample(rng, 6, 3)
    B = 100_000
    hits, worst = 0, 0.0
    for k in range(20):
        s = base.relabel(rng.permutation(6))
        record_bound(reyes_i(s, w), upper_bound(s, w))
        p = p_values(exact_distribution(s, w)).p_pos
        p_hat = p_values(monte_carlo_distribution(s, w, B, seed=8000 + k)).p_pos
        band = 3 * math.sqrt(p * (1 - p) / B)
        hits += abs(p_hat - p) <= band
        worst = max(worst, abs(p_hat - p) / band if band else 0.0)
    elapsed = time.perf_counter() - t0
    record(8, hits >= 19 and elapsed < 120,
           f"{hits}/20 arrangements within 3 binomial se (need 19), worst |dp|/band = {worst:.2f}; "
           f"{elapsed:.1f}s (limit 120s)")


def _cli(args, cwd):
    proc = subprocess.run([sys.executable, "-m", "reyesi.cli", *args], cwd=cwd, capture_output=True, check=True)
    return proc.stdout


def test_criterion_9_determinism(tmp_path):
    t0 = time.perf_counter()
    ind = io.fixture_path("independent_3x3.csv")
    outputs = []
    for run, workers in enumerate([1, 1, 2, 8]):
        d = tmp_path / f"run{run}"
        d.mkdir()
        analyze_out = _cli(["analyze", ind, "--rows", "3", "--cols", "3", "--permutations", "20000",
                            "--seed", "123456789", "--workers", str(workers)], d)
        _cli(["analyze", ind, "--rows", "3", "--cols", "3", "--permutations", "20000",
              "--seed", "123456789", "--workers", str(workers), "--out", "report.json"], d)
        sim_out = _cli(["simulate", "--case", "sar", "--rows", "5", "--cols", "5", "--D", "4",
                        "--covariance", "wishart_toeplitz", "--rho", "0.7", "--replications", "16",
                        "--permutations", "999", "--seed", "42", "--workers", str(workers), "--no-timing",
                        "--format", "csv"], d)
        _cli(["simulate", "--case", "sar", "--rows", "5", "--cols", "5", "--D", "4",
              "--covariance", "wishart_toeplitz", "--rho", "0.7", "--replications", "16",
              "--permutations", "999", "--seed", "42", "--workers", str(workers), "--no-timing",
              "--out", "sim"], d)
        outputs.append((d, analyze_out, sim_out))
    ref_dir, ref_analyze, ref_sim = outputs[0]
    same = True
    for d, a, s in outputs[1:]:
        same &= a == ref_analyze and s == ref_sim
        for name in ("report.json", "sim.csv", "sim.json"):
            same &= filecmp.cmp(ref_dir / name, d / name, shallow=False)
    elapsed = time.perf_counter() - t0
    record(9, same and elapsed < 120,
           f"analyze and simulate stdout plus 3 artifacts byte-identical over reruns and workers 1/2/8: {same}; "
           f"{elapsed:.1f}s (limit 120s)")
