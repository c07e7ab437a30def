"""Acceptance criteria, one test per criterion.

Each test appends a ``[PASS]`` or ``[FAIL]`` line to the terminal summary
before asserting, so a full run prints the verdict of every criterion.
"""

import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

import conftest
from contrarian.panel import write_panel
from contrarian.returns import formation_months, run_many, run_strategy, sweep
from contrarian.stats import diff_test, nw_tstat, nw_variance, summarize
from contrarian.strategy import StrategySpec, form_cohort, rank_and_group, window_scores
from contrarian.synth import SynthConfig, generate
from helpers import make_panel, panel_of, random_cells
from oracle import exact_nw_variance, reference_run

REVERSAL_SEEDS = range(20)
SWEEP_SET = [1] + list(range(3, 49, 3))


def report(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_1_additive_identity():
    worst = 0.0
    for seed, phi in [(0, -0.3), (1, 0.0), (2, 0.3)]:
        panel = generate(SynthConfig(n_stocks=60, n_months=120, phi=phi, seed=seed))
        specs = [StrategySpec(J, K, skip, G) for J in (1, 6, 12) for K in (1, 5, 12, 24)
                 for skip in (0, 1) for G in (2, 3, 5, 10)]
        for run in run_many(panel, specs).values():
            for c in run.cohorts:
                worst = max(worst, abs(c.contrarian - (c.loser - c.winner)))
    # reported three-decimal figures: the difference of rounded legs may be
    # off by up to one unit in the last place from the rounded spread
    spot_48 = abs((0.361 - 0.146) - 0.215)
    spot_42 = abs((0.350 - 0.152) - 0.197)
    ok = worst <= 1e-12 and spot_48 <= 1e-12 and spot_42 <= 0.001 + 1e-12
    report(1, ok, f"max |C-(L-W)| = {worst:.3g} (tol 1e-12); "
                  f"rounding checks {spot_48:.3g}, {spot_42:.3g} (tol 0.001)")
    assert ok


def test_criterion_2_oracle_equivalence():
    began = time.perf_counter()
    rng = np.random.default_rng(20240601)
    compared = 0
    worst = 0.0
    mismatched = []
    for i in range(100):
        n_months, n_stocks = int(rng.integers(4, 37)), int(rng.integers(2, 9))
        cells, stocks = random_cells(rng, n_months, n_stocks, missing=0.15)
        panel = panel_of(cells, n_months)
        for J in (1, 2, 3, 6):
            for K in (1, 2, 3, 6):
                for skip in (0, 1):
                    for G in (2, 3):
                        if not len(formation_months(panel, J, skip, K)):
                            continue
                        run = run_strategy(panel, StrategySpec(J, K, skip, G))
                        ref, skipped = reference_run(cells, n_months, stocks, J, K, skip, G)
                        compared += 1
                        if run.skipped != skipped or run.formations != [r[0] for r in ref]:
                            mismatched.append((i, J, K, skip, G))
                            continue
                        for c, r in zip(run.cohorts, ref):
                            worst = max(worst, abs(c.loser - r[1]), abs(c.winner - r[2]),
                                        abs(c.contrarian - r[3]))
    elapsed = time.perf_counter() - began
    ok = not mismatched and worst <= 1e-12 and elapsed < 10.0
    report(2, ok, f"{compared} spec/panel pairs, max deviation {worst:.3g} (tol 1e-12), "
                  f"{len(mismatched)} layout mismatches, {elapsed:.2f} s (limit 10 s)")
    assert ok


def _hand_gamma(x, j):
    n = len(x)
    m = sum(x) / n
    return sum((x[t] - m) * (x[t + j] - m) for t in range(n - j)) / n


def _hand_nw(x, q):
    return _hand_gamma(x, 0) + 2 * sum((1 - j / (q + 1)) * _hand_gamma(x, j) for j in range(1, q + 1))


def test_criterion_3_newey_west():
    five = [0.1, 0.3, 0.2, 0.4, 0.0]
    twelve = [0.031, -0.012, 0.077, 0.004, -0.058, 0.02, 0.115, -0.033, 0.009, 0.061, -0.004, 0.042]
    worst = 0.0
    for x in (five, twelve):
        for q in range(0, min(len(x) - 1, 5) + 1):
            v = nw_variance(x, q)
            worst = max(worst, abs(v - _hand_nw(x, q)), abs(v - float(exact_nw_variance(x, q))))
            exact = exact_nw_variance(x, q)
            if exact > 0:
                t_ref = float(sum(Fraction(a) for a in x) / len(x)) / math.sqrt(float(exact) / len(x))
                worst = max(worst, abs(nw_tstat(x, q) - t_ref))
    # the five-point series expands by hand to gamma0 = 0.02, gamma1 = -0.01
    worst = max(worst, abs(nw_variance(five, 1) - (0.02 + 2 * 0.5 * -0.01)))
    # series with dyadic means and deviations: every step but the final division is exact,
    # so the correctly rounded population variance is the only right answer
    exact_hits = []
    for x in ([0.5, 1.5, -0.25, 2.0, 1.25],
              [0.25, -0.5, 0.75, 1.0, 0.0, -0.125, 0.375, 0.5, -0.25, 0.625, 0.125, 0.25]):
        pop = [Fraction(v) for v in x]
        mean = sum(pop) / len(pop)
        want = float(sum((v - mean) ** 2 for v in pop) / len(pop))
        exact_hits.append(nw_variance(x, 0) == want)
    ok = worst <= 1e-10 and all(exact_hits)
    report(3, ok, f"max deviation from hand expansion {worst:.3g} (tol 1e-10); "
                  f"lag-0 equals population variance exactly: {all(exact_hits)}")
    assert ok


def test_criterion_4_null_calibration():
    spec = StrategySpec(1, 1, 0, 10)
    rets, quiet = [], 0
    for seed in range(200):
        s = summarize(run_strategy(generate(SynthConfig(phi=0.0, seed=seed)), spec), "contrarian")
        rets.append(s.ret)
        quiet += abs(s.tstat) < 1.96
    rets = np.array(rets)
    se = rets.std(ddof=1) / math.sqrt(len(rets))
    z = rets.mean() / se
    ok = quiet / 200 >= 0.90 and abs(z) <= 3.0
    report(4, ok, f"|t| < 1.96 in {quiet}/200 seeds (need >= 90%); "
                  f"mean ret {rets.mean():.5f} is {z:.2f} SE from 0 (need within 3)")
    assert ok


def test_criterion_5_reversal_and_momentum_detection():
    spec = StrategySpec(1, 1, 0, 10)
    pos = sum(summarize(run_strategy(generate(SynthConfig(phi=-0.3, seed=s)), spec), "contrarian").ret > 0
              for s in range(50))
    neg = sum(summarize(run_strategy(generate(SynthConfig(phi=0.3, seed=s)), spec), "contrarian").ret < 0
              for s in range(50))
    ok = pos / 50 >= 0.95 and neg / 50 >= 0.95
    report(5, ok, f"reversal world ret > 0 in {pos}/50 seeds, momentum world ret < 0 in {neg}/50 "
                  "(need >= 95% each)")
    assert ok


@pytest.fixture(scope="module")
def reversal_sweeps():
    return {seed: sweep(generate(SynthConfig(phi=-0.3, seed=seed)), SWEEP_SET, SWEEP_SET, 0, 10)
            for seed in REVERSAL_SEEDS}


def test_criterion_6_contrarian_rises_with_J(reversal_sweeps):
    Js = [J for J in SWEEP_SET if 12 <= J <= 48]
    passing = 0
    monotone_rows = total_rows = 0
    for grid in reversal_sweeps.values():
        seed_ok = True
        for K in SWEEP_SET:
            rets = [grid[(J, K, "contrarian")].ret for J in Js]
            rising = all(b >= a for a, b in zip(rets, rets[1:]))
            monotone_rows += rising
            total_rows += 1
            seed_ok &= rising
        passing += seed_ok
    ok = passing / len(REVERSAL_SEEDS) >= 0.90
    report(6, ok, f"contrarian ret nondecreasing in J over 12..48 at every K in "
                  f"{passing}/{len(REVERSAL_SEEDS)} seeds (need >= 90%); "
                  f"{monotone_rows}/{total_rows} seed-K rows monotone")
    assert ok


def test_criterion_7_deciles_beat_tertiles():
    specs = [StrategySpec(48, 48, 0, 10), StrategySpec(48, 48, 0, 3)]
    positive = 0
    deltas = []
    for seed in REVERSAL_SEEDS:
        runs = run_many(generate(SynthConfig(phi=-0.3, seed=seed)), specs)
        d = diff_test(runs[specs[0]], runs[specs[1]], "contrarian")
        deltas.append(d.delta)
        positive += d.delta > 0
    ok = positive / len(REVERSAL_SEEDS) >= 0.90
    report(7, ok, f"10-3 contrarian delta at J=K=48 positive in {positive}/{len(REVERSAL_SEEDS)} seeds "
                  f"(need >= 90%); mean delta {np.mean(deltas):.5f}")
    assert ok


def test_criterion_8_skip_month_excludes_spike():
    # eight stocks with distinct, evenly spaced histories; stock S00 spikes in month t
    n_stocks, t = 8, 3
    rows = [[0.01 * (s + 1) for s in range(n_stocks)] for _ in range(6)]
    spiked = [list(r) for r in rows]
    spiked[t][0] = 5.0
    base, adv = make_panel(rows), make_panel(spiked)
    month = base.start + t

    def ranks(panel, skip):
        cols, scores = window_scores(panel, month, 2, skip)
        return rank_and_group([(panel.stocks[c], float(v)) for c, v in zip(cols, scores)], n_stocks)

    moved = ranks(base, 0) != ranks(adv, 0)
    held = ranks(base, 1) == ranks(adv, 1)
    spec0, spec1 = StrategySpec(2, 1, 0, 4), StrategySpec(2, 1, 1, 4)
    c0b, c0a = form_cohort(base, month, spec0), form_cohort(adv, month, spec0)
    c1b, c1a = form_cohort(base, month, spec1), form_cohort(adv, month, spec1)
    moved &= "S00" in c0b.losers and "S00" in c0a.winners
    held &= (c1b.losers, c1b.winners) == (c1a.losers, c1a.winners)
    ok = moved and held
    report(8, ok, f"spike in formation month reorders ranks at skip=0: {moved}; "
                  f"leaves ranks and groups unchanged at skip=1: {held}")
    assert ok


def test_criterion_9_determinism_and_performance(tmp_path):
    src = tmp_path / "big.csv"
    src.write_text(write_panel(generate(SynthConfig(n_stocks=2000, n_months=192, phi=-0.3, seed=1))))
    grid = "1,6,12,18,24,30,36,42,48"
    outputs, elapsed = [], {}
    for workers in ("1", "4"):
        out = tmp_path / f"w{workers}"
        cmd = [sys.executable, "-m", "contrarian", "run", "--input", str(src), "--j", grid, "--k", grid,
               "--groups", "3,5,10", "--workers", workers, "--out", str(out)]
        began = time.perf_counter()
        proc = subprocess.run(cmd, capture_output=True, text=True)
        elapsed[workers] = time.perf_counter() - began
        assert proc.returncode == 0, proc.stderr
        outputs.append(((out / "summary.csv").read_bytes(), (out / "cohorts.csv").read_bytes()))
    identical = outputs[0] == outputs[1]
    rows = outputs[0][0].count(b"\n") - 1
    ok = identical and elapsed["1"] < 60.0 and rows == 9 * 9 * 3 * 3
    report(9, ok, f"outputs byte-identical for 1 and 4 workers: {identical}; "
                  f"{rows} summary rows in {elapsed['1']:.1f} s single-threaded (limit 60 s)")
    assert ok
