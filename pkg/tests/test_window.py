import numpy as np
import pytest

from scldpc.channels import bec, biawgn, sigma_from_ebn0
from scldpc.de import DEConfig, breakout_value
from scldpc.ensemble import EnsembleParams, design_rate
from scldpc.window import (BUDGET, CONVERGED, STALLED, WindowConfig,
                           WindowReport, align_level_traces, check_prop1,
                           check_prop2, probe_window_width, profile_updates,
                           run_windowed)


def bec_config(eps, J=3, L=40, **kw):
    return DEConfig(EnsembleParams(J, 2, L), bec(eps), **kw)


# ------------------------------------------------------------- configuration

def test_window_config_validation():
    de = bec_config(0.3, L=40)
    with pytest.raises(ValueError):
        WindowConfig(de, 0)
    with pytest.raises(ValueError):
        WindowConfig(de, 21)  # > ceil(L/2)
    with pytest.raises(ValueError):
        WindowConfig(DEConfig(EnsembleParams(3, 2, 4), bec(0.3),
                              block_baseline=True), 2)
    b_br = breakout_value(3, 0.3)
    with pytest.raises(ValueError):
        WindowConfig(de, 10, B0=b_br * 2).shift_target()
    assert 0 < WindowConfig(de, 10).shift_target() < b_br


# ---------------------------------------------------------------- scheduling

def test_far_below_threshold_full_sweep():
    rep = run_windowed(WindowConfig(bec_config(0.10, L=40), 10))
    assert rep.verdict == CONVERGED
    assert rep.stall_position is None
    # one shift per level up to and including the center
    assert rep.shifts <= (40 + 3 + 1) // 2
    assert (rep.final_b <= rep.B0 + 1e-12).all()
    assert rep.final_pb.max() < 1e-6
    stats = profile_updates(rep)
    assert not stats.empty
    assert stats.max_relative_deviation < 0.5  # small, near-uniform plateau


def test_above_threshold_stalls_at_small_lead():
    cfg = WindowConfig(bec_config(0.499, L=100), 20, per_position_budget=300)
    rep = run_windowed(cfg)
    assert rep.verdict == STALLED
    assert rep.stall_position is not None and rep.stall_position <= 5
    assert rep.final_pb.max() > 1e-3


def test_budget_verdict():
    cfg = WindowConfig(bec_config(0.45, L=60), 15, max_updates=500)
    rep = run_windowed(cfg)
    assert rep.verdict == BUDGET
    assert rep.total_updates <= 500 + 60 * 3  # within one sweep of the cap


def test_updates_per_level_structure():
    rep = run_windowed(WindowConfig(bec_config(0.42, L=60), 12,
                                    trace_levels=(15, 20)))
    assert rep.verdict == CONVERGED
    u = rep.updates_per_level
    # histogram is mirror-completed: each activation counts at t and N-1-t
    n = u.size
    center_once = u[n // 2] if n % 2 == 1 else 0
    assert u.sum() == 2 * rep.total_updates - center_once
    # mirrored second half: counts symmetric about the center
    assert np.array_equal(u, u[::-1])
    stats = profile_updates(rep)
    assert not stats.empty
    lo, hi = stats.start_level - 1, stats.end_level
    diffs = np.abs(np.diff(u[lo:hi]))
    assert (diffs <= 12 * 3).all()  # adjacent levels within one window sweep
    # sampled traces: cumulative updates strictly increasing, P_b nonincreasing
    for level in (15, 20):
        pairs = rep.level_traces[level]
        upd = [a for a, _ in pairs]
        pbs = [b for _, b in pairs]
        assert upd == sorted(upd) and len(set(upd)) == len(upd)
        assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(pbs, pbs[1:]))


# ----------------------------------------------------------------- profiling

def _synthetic_report(updates):
    u = np.asarray(updates, dtype=float)
    return WindowReport(verdict=CONVERGED, stall_position=None, shifts=0,
                        total_updates=int(u.sum()), updates_per_level=u,
                        level_traces={}, B0=0.1, B_br=0.2,
                        final_b=np.zeros((len(u), 3)),
                        final_pb=np.zeros(len(u)))


def test_profile_updates_uniform_synthetic():
    stats = profile_updates(_synthetic_report([7, 7, 7, 7, 7, 7]))
    assert not stats.empty
    assert stats.max_relative_deviation == 0.0
    # only the first (simulated) half is profiled; the rest is its mirror
    assert (stats.start_level, stats.end_level) == (1, 3)


def test_profile_updates_peaked_profile_flagged_empty():
    stats = profile_updates(_synthetic_report([1, 5, 9, 5, 1]), rel_tol=0.05)
    assert stats.empty


def test_align_level_traces():
    base = [(10 * i, 10.0 ** (-i)) for i in range(1, 12)]
    assert align_level_traces(base, base) < 1e-9
    shifted = [(u + 35, pb) for u, pb in base]
    assert align_level_traces(base, shifted) < 1e-6


# ------------------------------------------------------------- propositions

def test_prop1_small_grid():
    configs = [bec_config(e, L=20) for e in (0.20, 0.42)]
    rep = check_prop1(configs, W=8)
    assert rep.holds
    assert not rep.budget_limited
    assert len(rep.cases) == 2


def test_prop1_budget_limited_flagged():
    configs = [bec_config(0.42, L=20, max_updates=70)]
    rep = check_prop1(configs, W=8)
    assert rep.holds  # budget exhaustion is not a counterexample
    assert rep.budget_limited == [0.42]


def test_prop2_below_threshold_holds():
    rep = check_prop2(WindowConfig(bec_config(0.42, L=30), 10))
    assert rep.applicable and rep.holds
    assert not rep.conjecture_only
    assert rep.shifts >= 3


def test_prop2_above_threshold_not_applicable():
    cfg = WindowConfig(bec_config(0.499, L=30), 10, per_position_budget=200)
    rep = check_prop2(cfg)
    assert not rep.applicable
    assert rep.holds is None


def test_prop2_biawgn_is_conjecture_check():
    sigma = sigma_from_ebn0(3.0, float(design_rate(3, 12)))
    de = DEConfig(EnsembleParams(3, 2, 12), biawgn(sigma), delta=0.1, rmax=25.0)
    rep = check_prop2(WindowConfig(de, 6))
    assert rep.conjecture_only
    assert rep.applicable and rep.holds


# ------------------------------------------------------------- width probing

def test_probe_window_width_stabilizes():
    w, reports = probe_window_width(bec_config(0.40, L=24))
    assert 3 <= w <= 12
    assert reports  # every probed width is reported
    assert w in reports and reports[w].verdict == CONVERGED
