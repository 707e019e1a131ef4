"""Acceptance criteria 1-9, one PASS/FAIL line each (see the terminal summary).

Tolerances are fixed here and never tuned to results.
"""

import hashlib
import math
import subprocess
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from fr2sim.channel import LinkBudget, umi_los_path_loss
from fr2sim.config import resolve
from fr2sim.nr_tables import TbsInput, compute_tbs, cqi_table, mcs_table, peak_spectral_ratio, usable_entries
from fr2sim.scenario import ScenarioKind, run, summarize_sweep, sweep
from oracles import path_loss_oracle, tbs_oracle
from test_nr_tables import CQI_DIGESTS, MCS_DIGESTS, cqi_digest, mcs_digest

# criterion 5
FIG5_DISTANCES = [float(d) for d in range(10, 401, 10)]
FIG5_SEEDS = [1, 2, 3, 4, 5]
MONOTONE_VIOLATION_SHARE = 0.05
FAR_DISTANCE_M = 300.0
FAR_REL_GAP = 0.10
NEAR_GAIN_RANGE = (1.25, 1.34)


def test_c1_table_fidelity(acceptance):
    t0 = time.perf_counter()
    mcs_ok = all(mcs_digest(t) == MCS_DIGESTS[t] for t in (1, 2, 4))
    cqi_ok = all(cqi_digest(t) == CQI_DIGESTS[t] for t in (2, 3, 5))
    shape_ok = all(len(mcs_table(t)) == 32 for t in (1, 2, 4)) and all(len(cqi_table(t)) == 16 for t in (2, 3, 5))
    ratio = peak_spectral_ratio(2, 1)
    elapsed = time.perf_counter() - t0
    ok = mcs_ok and cqi_ok and shape_ok and abs(ratio - 1.3333) <= 1e-4 and elapsed < 1.0
    acceptance("C1 table fidelity", ok,
               f"checksums mcs={mcs_ok} cqi={cqi_ok}; T2/T1 peak SE ratio {ratio:.5f} "
               f"(1.3333 +/- 0.0001); {elapsed:.2f} s")


def test_c2_tbs_oracle_grid(acceptance):
    t0 = time.perf_counter()
    n = mismatches = 0
    for t in (1, 2, 4):
        for e in usable_entries(t):
            for layers in (1, 2):
                for n_prb in range(1, 67):
                    got = compute_tbs(TbsInput(n_prb, 13, e, n_layers=layers))
                    want = tbs_oracle(n_prb, 13, e.qm, e.code_rate_x1024, 12, 0, layers)
                    n += 1
                    mismatches += got != want
    elapsed = time.perf_counter() - t0
    acceptance("C2 TBS oracle equivalence", mismatches == 0 and elapsed < 10.0,
               f"{n} cases, {mismatches} mismatches; {elapsed:.2f} s")


def test_c3_path_loss(acceptance):
    t0 = time.perf_counter()
    b = LinkBudget()
    rng = np.random.default_rng(2024)
    d = rng.uniform(10.0, 5000.0, 1000)
    main = umi_los_path_loss(d, b)
    worst = max(abs(m - path_loss_oracle(x)) for m, x in zip(main, d))
    d_bp = 4 * 9 * 0.5 * 24.8e9 / 3e8
    jump = abs(umi_los_path_loss(d_bp + 1e-6, b) - umi_los_path_loss(d_bp, b))
    examples = [umi_los_path_loss(x, b) for x in (10.0, 100.0, 250.0)]
    ex_err = max(abs(v - w) for v, w in zip(examples, (83.77, 102.32, 110.65)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and jump < 0.01 and ex_err <= 0.01 and elapsed < 1.0
    acceptance("C3 path loss", ok,
               f"max |main-oracle| {worst:.2e} dB; breakpoint jump {jump:.2e} dB; "
               f"examples {', '.join(f'{v:.2f}' for v in examples)}; {elapsed:.2f} s")


def test_c4_olla_fixed_point(acceptance):
    t0 = time.perf_counter()
    # stationary run: one shadow and fading draw, so the channel is static
    cfg = resolve("paper-fig5", {"scenario.initial_distance_m": "100", "scenario.duration_s": "1.75",
                                 "table.mode": "2"}).scenario()
    m = run(cfg, keep_records=True)
    first = [r for r in m.slot_records if r.new_tx]
    static = len({r.sinr_db for r in m.slot_records}) == 1
    rate = sum(not r.ack for r in first) / len(first)
    elapsed = time.perf_counter() - t0
    ok = static and len(first) >= 10_000 and 0.08 <= rate <= 0.12 and elapsed < 5.0
    acceptance("C4 OLLA fixed point", ok,
               f"{len(first)} first transmissions, NACK rate {rate:.4f} (target 0.1, [0.08, 0.12]); "
               f"{elapsed:.2f} s")


@pytest.fixture(scope="module")
def fig5():
    t0 = time.perf_counter()
    template = resolve("paper-fig5").scenario()
    rows = sweep(template, FIG5_DISTANCES, FIG5_SEEDS, (1, 2, 4), jobs=1)
    points = {(p.table, p.distance_m): p for p in summarize_sweep(rows)}
    return points, time.perf_counter() - t0


@pytest.mark.slow
def test_c5a_monotone(acceptance, fig5):
    points, elapsed = fig5
    details, ok = [], elapsed < 300.0
    for t in (1, 2, 4):
        steps = violations = 0
        for d0, d1 in zip(FIG5_DISTANCES, FIG5_DISTANCES[1:]):
            a, b = points[(t, d0)], points[(t, d1)]
            noise = 2.0 * math.sqrt((a.std_mac_mbps**2 + b.std_mac_mbps**2) / len(FIG5_SEEDS))
            steps += 1
            violations += b.mean_mac_mbps > a.mean_mac_mbps + noise
        share = violations / steps
        ok &= share <= MONOTONE_VIOLATION_SHARE
        details.append(f"T{t} {violations}/{steps}")
    acceptance("C5a Fig.5 nonincreasing in distance", ok,
               f"increases beyond 2 SE: {', '.join(details)} (allowed <= 5%); sweep {elapsed:.0f} s")


@pytest.mark.slow
def test_c5b_near_ordering(acceptance, fig5):
    points, _ = fig5
    t1, t2, t4 = (points[(t, 10.0)].mean_mac_mbps for t in (1, 2, 4))
    acceptance("C5b ordering at 10 m", t4 >= t2 >= t1,
               f"T4 {t4:.1f} >= T2 {t2:.1f} >= T1 {t1:.1f} Mbps")


@pytest.mark.slow
def test_c5c_far_convergence(acceptance, fig5):
    points, _ = fig5
    worst21 = worst42 = 0.0
    where21 = where42 = None
    for d in FIG5_DISTANCES:
        if d < FAR_DISTANCE_M:
            continue
        t1, t2, t4 = (points[(t, d)].mean_mac_mbps for t in (1, 2, 4))
        g21, g42 = abs(t2 - t1) / t1, abs(t4 - t2) / t2
        if g21 > worst21:
            worst21, where21 = g21, d
        if g42 > worst42:
            worst42, where42 = g42, d
    ok = worst21 <= FAR_REL_GAP and worst42 <= FAR_REL_GAP
    acceptance("C5c convergence at >= 300 m", ok,
               f"max |T2-T1|/T1 {worst21:.3f} at {where21} m, max |T4-T2|/T2 {worst42:.3f} at {where42} m "
               f"(limit {FAR_REL_GAP})")


@pytest.mark.slow
def test_c5d_near_gain(acceptance, fig5):
    points, _ = fig5
    ratio = points[(2, 10.0)].mean_mac_mbps / points[(1, 10.0)].mean_mac_mbps
    lo, hi = NEAR_GAIN_RANGE
    acceptance("C5d T2/T1 gain at 10 m", lo <= ratio <= hi, f"T2/T1 {ratio:.4f} (range [{lo}, {hi}])")


@pytest.mark.slow
def test_c6_mobility(acceptance):
    t0 = time.perf_counter()
    base = resolve("paper-fig5").scenario()

    def share256(kind, seed):
        m = run(replace(base, kind=kind, seed=seed, table_mode=base.table_mode.fixed(2)))
        return m.utilization_share(8)

    walk = float(np.mean([share256(ScenarioKind.WALKING, s) for s in FIG5_SEEDS]))
    still = float(np.mean([share256(ScenarioKind.STATIONARY, s) for s in FIG5_SEEDS]))
    retx = {}
    for table in (1, 2):
        retx[table] = sum(run(replace(base, kind=ScenarioKind.BIKING, seed=s,
                                      table_mode=base.table_mode.fixed(table))).n_retransmissions
                          for s in FIG5_SEEDS)
    elapsed = time.perf_counter() - t0
    ok = walk < still and retx[2] >= retx[1] and elapsed < 120.0
    acceptance("C6 mobility effect", ok,
               f"T2 256QAM PRB share walking {walk:.3f} < stationary {still:.3f}; biking retransmissions "
               f"T2 {retx[2]} >= T1 {retx[1]}; {elapsed:.0f} s")


def test_c7_determinism(acceptance, tmp_path):
    t0 = time.perf_counter()
    argv = [sys.executable, "-m", "fr2sim", "sweep", "--preset", "paper-fig5", "--tables", "1,2,4",
            "--min-d", "10", "--max-d", "100", "--step", "30", "--seeds", "2", "--duration", "0.2"]
    digests = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        subprocess.run(argv + ["--out", str(out)], check=True)
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    elapsed = time.perf_counter() - t0
    acceptance("C7 determinism", digests[0] == digests[1] and elapsed < 60.0,
               f"sha256 {digests[0][:16]} vs {digests[1][:16]}; {elapsed:.1f} s")


def test_c8_fieldstats_fixtures(acceptance):
    from fixtures import crossover_fixture, gain_fixture, utilization_35
    from fr2sim.fieldstats import binned_throughput, crossover_bins, mean_ci95, modulation_utilization, \
        table_gain_summary

    t0 = time.perf_counter()
    share = modulation_utilization(utilization_35())[8]
    g58 = table_gain_summary(gain_fixture(1.058)).overall
    g30 = table_gain_summary(gain_fixture(1.30)).overall
    crossings = crossover_bins(binned_throughput(crossover_fixture(), 2.0, 30), 1, 2)
    vals = [3.0, 5.0, 7.0, 11.0]
    _, half = mean_ci95(vals)
    ci_ok = math.isclose(half, 1.96 * float(np.std(vals, ddof=1)) / 2.0, rel_tol=1e-12)
    elapsed = time.perf_counter() - t0
    ok = (abs(share - 0.35) <= 0.001 and abs(g58 - 0.058) <= 0.001 and abs(g30 - 0.30) <= 0.001
          and len(crossings) == 1 and ci_ok and elapsed < 5.0)
    acceptance("C8 fieldstats fixtures", ok,
               f"256QAM share {share:.4f}; gains {g58:.4f} / {g30:.4f}; crossover bins {crossings}; "
               f"CI formula {ci_ok}; {elapsed:.2f} s")


def test_c9_airtime(acceptance):
    t0 = time.perf_counter()
    m = run(resolve("table2-default", {"scenario.duration_s": "10"}).scenario())
    elapsed = time.perf_counter() - t0
    ok = abs(m.dl_symbol_fraction - 52 / 70) <= 0.002 and elapsed < 10.0
    acceptance("C9 airtime", ok,
               f"DL symbol fraction {m.dl_symbol_fraction:.5f} vs 52/70 = {52 / 70:.5f} (+/- 0.002); "
               f"{elapsed:.1f} s")
