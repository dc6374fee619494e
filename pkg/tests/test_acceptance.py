"""Acceptance gate: one printed pass/fail line per criterion.

Fast variants run by default; the full-scale long runs carry the `slow`
marker (run them with `pytest -m slow tests/test_acceptance.py`).
"""

import numpy as np
import pytest

from scldpc.alist import AlistMatrix, export_alist, import_alist
from scldpc.bp import monte_carlo
from scldpc.channels import bec, biawgn, sigma_from_ebn0
from scldpc.de import DEConfig, run_de
from scldpc.ensemble import (EnsembleParams, degree_profile, design_rate,
                             encode, sample_ensemble, terminate)
from scldpc.threshold import (L_for_target_rate, ThresholdQuery,
                              bisect_threshold, threshold_vs_L, _probe)
from scldpc.window import (CONVERGED, WindowConfig, align_level_traces,
                           check_prop1, check_prop2, profile_updates,
                           run_windowed)


def criterion(n, desc, ok, detail=""):
    suffix = f"  [{detail}]" if detail else ""
    print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {desc}{suffix}")
    assert ok, f"criterion {n} failed: {desc}{suffix}"


# ---------------------------------------------------------------------------
# shared recorded DE runs (feed criteria 7 and 8)

@pytest.fixture(scope="module")
def recorded_runs():
    runs = []
    for eps in (0.30, 0.40, 0.45):
        runs.append(run_de(DEConfig(EnsembleParams(3, 2, 40), bec(eps))))
    runs.append(run_de(DEConfig(EnsembleParams(3, 2, 1), bec(0.40),
                                block_baseline=True)))
    runs.append(run_de(DEConfig(EnsembleParams(4, 2, 20), bec(0.40))))
    # BiAWGN block baseline, comfortably below threshold
    sigma = sigma_from_ebn0(1.3, 0.5)
    runs.append(run_de(DEConfig(EnsembleParams(3, 2, 1), biawgn(sigma),
                                delta=0.05, rmax=25.0, block_baseline=True)))
    # BiAWGN coupled short chain at high SNR
    sigma = sigma_from_ebn0(2.0, float(design_rate(3, 10)))
    runs.append(run_de(DEConfig(EnsembleParams(3, 2, 10), biawgn(sigma),
                                delta=0.1, rmax=25.0)))
    return runs


# ---------------------------------------------------------------------------
# 1. block-baseline BiAWGN threshold 1.11 dB +- 0.05

def test_criterion_1_block_awgn_threshold():
    q = ThresholdQuery(EnsembleParams(3, 2, 1), "biawgn", 1.0, 1.25,
                       tol=0.02, delta=0.01, rmax=30.0, block_baseline=True)
    res = bisect_threshold(q)
    ok = abs(res.threshold - 1.11) <= 0.05
    criterion(1, "block-baseline BiAWGN threshold 1.11 dB +- 0.05 dB", ok,
              f"measured {res.threshold:.4f} dB at delta=0.01")


# ---------------------------------------------------------------------------
# 2. Table I (3,6): 0.55 dB +- 0.10 (coarse pre-check +- 0.2 by default)

def test_criterion_2_precheck_brackets_table_value():
    q = ThresholdQuery(EnsembleParams(3, 2, 147), "biawgn", 0.35, 0.75,
                       tol=0.4, engine="window", window_width=18,
                       delta=0.05, rmax=25.0, max_updates=3_000_000)
    hi = _probe(q, 0.75)
    lo = _probe(q, 0.35)
    ok = hi.converged and not lo.converged
    criterion(2, "Table I (3,6) 0.55 dB: coarse pre-check brackets it "
                 "within +-0.2 dB at delta=0.05", ok,
              f"0.75 dB -> {hi.verdict}, 0.35 dB -> {lo.verdict}")


@pytest.mark.slow
def test_criterion_2_full_bisection():
    q = ThresholdQuery(EnsembleParams(3, 2, 147), "biawgn", 0.35, 0.75,
                       tol=0.05, engine="window", window_width=18,
                       delta=0.1, rmax=25.0, max_updates=3_000_000)
    res = bisect_threshold(q)
    ok = abs(res.threshold - 0.55) <= 0.10
    criterion(2, "Table I (3,6) threshold 0.55 dB +- 0.10 dB (full bisection)",
              ok, f"measured {res.threshold:.3f} dB")


# ---------------------------------------------------------------------------
# 3. Table I (4,8) and (5,10): 0.35 dB and 0.30 dB, each +- 0.10

@pytest.mark.slow
@pytest.mark.parametrize("J,target", [(4, 0.35), (5, 0.30)])
def test_criterion_3_higher_J_rows(J, target):
    L = L_for_target_rate(J, 0.49)
    q = ThresholdQuery(EnsembleParams(J, 2, L), "biawgn",
                       target - 0.10, target + 0.10, tol=0.2,
                       engine="window", window_width=2 * J * J,
                       delta=0.1, rmax=25.0, max_updates=3_000_000)
    hi = _probe(q, target + 0.10)
    lo = _probe(q, target - 0.10)
    ok = hi.converged and not lo.converged
    criterion(3, f"Table I ({J},{2 * J}) threshold {target} dB +- 0.10 dB",
              ok, f"{target + 0.10:.2f} dB -> {hi.verdict}, "
                  f"{target - 0.10:.2f} dB -> {lo.verdict} (L={L})")


# ---------------------------------------------------------------------------
# 4. BEC thresholds: block 0.4294 +- 0.0005; terminated in (0.46, 1 - R]

def test_criterion_4_bec_thresholds():
    block = bisect_threshold(ThresholdQuery(
        EnsembleParams(3, 2, 1), "bec", 0.40, 0.45, tol=2e-4,
        block_baseline=True))
    coupled = bisect_threshold(ThresholdQuery(
        EnsembleParams(3, 2, 100), "bec", 0.46, 0.52, tol=5e-4))
    cap = 1.0 - float(design_rate(3, 100))
    ok = (abs(block.threshold - 0.4294) <= 5e-4
          and coupled.threshold > 0.46
          and coupled.threshold <= cap)
    criterion(4, "BEC thresholds: block 0.4294 +- 0.0005, terminated "
                 "J=3 L=100 in (0.46, 1 - design rate]", ok,
              f"block {block.threshold:.5f}, coupled {coupled.threshold:.5f},"
              f" capacity bound {cap:.5f}")


# ---------------------------------------------------------------------------
# 5. constant in L: |eps*(50) - eps*(100)| <= 0.001

def test_criterion_5_constant_in_L():
    table = threshold_vs_L(3, "bec", [50, 100], lo=0.46, hi=0.52, tol=1e-4)
    (_, r50), (_, r100) = table.rows
    gap = abs(r50.threshold - r100.threshold)
    criterion(5, "BEC threshold constant in L: |eps*(50) - eps*(100)| <= 0.001",
              gap <= 0.001,
              f"eps*(50)={r50.threshold:.5f}, eps*(100)={r100.threshold:.5f}")


# ---------------------------------------------------------------------------
# 6. Fig.-4-style profile (BEC analogue by default; BiAWGN in the slow suite)

def _check_fig4_profile(report, W):
    u = report.updates_per_level
    checks = {}
    checks["converged"] = report.verdict == CONVERGED
    peak = int(np.argmax(u[:len(u) // 2])) + 1
    checks["peak near t=W"] = abs(peak - W) <= 2
    stats = profile_updates(report, rel_tol=0.05)
    plateau_span = 0 if stats.empty else stats.end_level - stats.start_level + 1
    checks["plateau flat within 5%"] = (not stats.empty
                                        and stats.max_relative_deviation <= 0.05
                                        and plateau_span >= len(u) // 4)
    center = len(u) // 2
    checks["drop near center"] = not stats.empty and u[center - 1] < 0.9 * stats.mean
    gap = align_level_traces(report.level_traces[25], report.level_traces[30])
    checks["t=25 vs t=30 traces within 10%"] = gap <= 0.10
    return checks, stats, gap


def test_criterion_6_window_profile_bec_analogue():
    cfg = DEConfig(EnsembleParams(3, 2, 100), bec(0.48))
    report = run_windowed(WindowConfig(cfg, 20, trace_levels=(25, 30)))
    checks, stats, gap = _check_fig4_profile(report, 20)
    ok = all(checks.values())
    criterion(6, "windowed updates-per-level profile (BEC analogue): rise to "
                 "a max near t=20, 5%-flat plateau, drop at the center, "
                 "t=25/t=30 traces within 10%", ok,
              f"checks={checks}, plateau dev="
              f"{stats.max_relative_deviation:.4f}, trace gap={gap:.4f}")


@pytest.mark.slow
def test_criterion_6_window_profile_biawgn():
    sigma = sigma_from_ebn0(0.55, float(design_rate(3, 100)))
    cfg = DEConfig(EnsembleParams(3, 2, 100), biawgn(sigma),
                   delta=0.05, rmax=25.0)
    report = run_windowed(WindowConfig(cfg, 20, trace_levels=(25, 30),
                                       max_updates=3_000_000))
    checks, stats, gap = _check_fig4_profile(report, 20)
    ok = all(checks.values())
    criterion(6, "windowed updates-per-level profile (BiAWGN at 0.55 dB)", ok,
              f"checks={checks}, plateau dev="
              f"{stats.max_relative_deviation:.4f}, trace gap={gap:.4f}")


# ---------------------------------------------------------------------------
# 7. Lemma-1 dominance on every recorded DE trace

def test_criterion_7_lemma1_dominance(recorded_runs):
    linear_violations = sum(len(r.trace.dominance_violations_linear)
                            for r in recorded_runs)
    ok = linear_violations == 0
    criterion(7, "Lemma-1 dominance (linear edge-multiplicity reading) holds "
                 "on every recorded DE trace", ok,
              f"{len(recorded_runs)} runs, {linear_violations} violations; "
              "the verbatim squared form is documented as unsound in "
              "test_de.py::test_verbatim_squared_bound_dominates")


# ---------------------------------------------------------------------------
# 8. breakout contraction on every converged run

def test_criterion_8_breakout_contraction(recorded_runs):
    converged = [r for r in recorded_runs if r.converged_certified]
    records = sum(len(r.trace.contraction) for r in converged)
    bad = [(l, lhs, rhs) for r in converged
           for (l, lhs, rhs) in r.trace.contraction if not lhs < rhs]
    ok = bool(converged) and records > 0 and not bad
    criterion(8, "post-breakout contraction B/B_br < (B'/B_br)^(J-1) on every "
                 "converged run", ok,
              f"{len(converged)} converged runs, {records} iterations checked,"
              f" {len(bad)} violations")


# ---------------------------------------------------------------------------
# 9. Propositions 1-2 empirical suites (BEC)

def test_criterion_9_propositions():
    p1 = check_prop1([DEConfig(EnsembleParams(3, 2, 60), bec(e))
                      for e in (0.30, 0.40, 0.45)], W=18)
    p2_reports = [check_prop2(WindowConfig(
        DEConfig(EnsembleParams(3, 2, L), bec(0.42)), min(18, L // 2)))
        for L in (20, 50, 100)]
    p2_ok = all(r.applicable and r.holds for r in p2_reports)
    ok = p1.holds and not p1.budget_limited and p2_ok
    criterion(9, "Propositions 1-2 empirical suites on the BEC: zero "
                 "counterexamples", ok,
              f"prop1 cases={p1.cases}, prop2 shifts="
              f"{[r.shifts for r in p2_reports]}")


# ---------------------------------------------------------------------------
# 10. structural suite

def test_criterion_10_structural(tmp_path):
    # 100 random (seed, info) encode round trips; M is large enough that
    # every sample is systematically encodable (tiny M can be rank-deficient)
    rng = np.random.default_rng(0)
    encode_ok = 0
    for trial in range(100):
        p = EnsembleParams(3, 32, 8)
        sf = sample_ensemble(p, seed=int(rng.integers(1 << 30)))
        code = terminate(sf)
        info = rng.integers(0, 2, p.L * p.M).astype(np.uint8)
        word = encode(sf, info)
        if code.syndrome_ok(word) and np.array_equal(
                word[code.info_positions()], info):
            encode_ok += 1
    # lossless alist round trip
    code = terminate(sample_ensemble(EnsembleParams(3, 8, 4), 1))
    mat = AlistMatrix.from_code(code)
    path = tmp_path / "c.alist"
    export_alist(mat, str(path))
    alist_ok = import_alist(str(path)) == mat
    # closed-form degree profiles
    profile_ok = True
    for J in (3, 4, 5):
        for L in (10, 100):
            p = EnsembleParams(J, 2, L)
            prof = degree_profile(terminate(sample_ensemble(p, 0)))
            expected = {}
            for s in range(1, p.n_chk_times + 1):
                d = 2 * sum(1 for i in range(J) if 1 <= s - i <= p.n_var_times)
                expected[d] = expected.get(d, 0) + p.M
            profile_ok &= (prof.check_degrees == expected
                           and prof.variable_degrees == {J: p.n})
    ok = encode_ok == 100 and alist_ok and profile_ok
    criterion(10, "structural suite: 100 encode round trips, lossless alist "
                  "round trip, closed-form degree profiles", ok,
              f"encode {encode_ok}/100, alist {alist_ok}, profiles {profile_ok}")


# ---------------------------------------------------------------------------
# 11. Monte-Carlo sanity

def test_criterion_11_monte_carlo_sanity():
    params = EnsembleParams(3, 1024, 50)
    pts = monte_carlo(params, "bec", [0.30], trials=200, seed=0, max_iters=100)
    pt = pts[0]
    ok = pt.trials >= 200 and pt.ber < 1e-4
    criterion(11, "Monte-Carlo J=3 M=1024 L=50 BEC(0.30): information BER "
                  "< 1e-4 over >= 200 frames", ok,
              f"ber={pt.ber:.3e}, fer={pt.fer:.3f}, "
              f"mean iters={pt.mean_iters:.1f}")
