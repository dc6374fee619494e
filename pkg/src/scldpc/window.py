"""Sliding-window density-evolution schedule.

A width-W window starts at the left end of the chain.  Symbol levels
inside the window are activated one by one (checks evaluated on demand
from the current state); when the Bhattacharyya parameter of the leading
level t' falls below the shift target B0, the window moves right.  Only
levels up to the chain center are simulated; the right half is the
mirror image (x_{N+1-t, J-1-k} = x_{t,k}).

The report carries the activation count per level, sampled level traces
(error probability versus cumulative activations), and the verdict:
CONVERGED once the window passes the center, STALLED when the leading
level refuses to drop below B0 within the per-position budget (or the
window state reaches a fixed point), BUDGET when the global activation
budget runs out first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .de import DEConfig, breakout_value, run_de
from .density import Density, LlrGrid, box_conv, box_conv_self, perfect_density, sum_conv
from .de import channel_density

PER_POSITION_BUDGET = 10_000
FIXED_POINT_TOL = 1e-13
FIXED_POINT_PATIENCE = 3

CONVERGED = "CONVERGED"
STALLED = "STALLED"
BUDGET = "BUDGET"


@dataclass(frozen=True)
class WindowConfig:
    de: DEConfig
    W: int
    B0: float | None = None  # default: breakout value / 2
    max_updates: int = 10_000_000  # total symbol activations
    per_position_budget: int = PER_POSITION_BUDGET  # window sweeps per t'
    trace_levels: tuple = ()  # 1-based levels whose P_b-vs-updates is sampled

    def __post_init__(self):
        if self.de.block_baseline:
            raise ValueError("windowed schedule requires a coupled chain")
        if self.W < 1:
            raise ValueError("window width must be positive")
        if self.W > math.ceil(self.de.params.L / 2):
            raise ValueError("window width must satisfy W <= ceil(L/2)")

    def shift_target(self) -> float:
        b_br = breakout_value(self.de.J, self.de.channel.bhattacharyya)
        if self.B0 is None:
            return b_br / 2.0
        if not (0.0 < self.B0 < b_br):
            raise ValueError("shift target must satisfy 0 < B0 < B_br")
        return self.B0


@dataclass
class WindowReport:
    verdict: str
    stall_position: int | None
    shifts: int
    total_updates: int
    updates_per_level: np.ndarray  # activations per 1-based level (full chain)
    level_traces: dict  # level -> list of (cumulative updates, P_b)
    B0: float
    B_br: float
    final_b: np.ndarray  # (N, J) Bhattacharyya values, mirror completed
    final_pb: np.ndarray  # per-level error probability


class _ScalarChain:
    """BEC state with on-demand check evaluation."""

    def __init__(self, config: DEConfig):
        self.J = config.J
        self.N = config.n_times
        self.eps = config.channel.param
        self.x = np.full((self.N, self.J), self.eps)

    def _y(self, s: int, i: int) -> float:
        t = s - i
        if not (0 <= t < self.N):
            return 0.0
        q = 1.0 - self.x[t, i]
        for j in range(self.J):
            if j == i:
                continue
            tj = s - j
            if 0 <= tj < self.N:
                q *= (1.0 - self.x[tj, j]) ** 2
        return 1.0 - q

    def activate(self, t: int) -> None:
        ys = [self._y(t + k, k) for k in range(self.J)]
        for k in range(self.J):
            v = self.eps
            for kp in range(self.J):
                if kp != k:
                    v *= ys[kp]
            self.x[t, k] = v

    def mirror(self, t: int) -> None:
        tm = self.N - 1 - t
        if tm != t:
            self.x[tm] = self.x[t, ::-1]

    def b_level(self, t: int) -> float:
        return float(self.x[t].max())

    def pb(self, t: int) -> float:
        v = self.eps
        for k in range(self.J):
            v *= self._y(t + k, k)
        return v

    def b_all(self) -> np.ndarray:
        return self.x.copy()

    def pb_all(self) -> np.ndarray:
        return np.array([self.pb(t) for t in range(self.N)])


class _DensityChain:
    """BiAWGN state with on-demand check evaluation and pair caching."""

    def __init__(self, config: DEConfig):
        self.J = config.J
        self.N = config.n_times
        self.grid = LlrGrid(config.delta, config.rmax)
        self.ch, _ = channel_density(config.channel, self.grid)
        self.dens = [[self.ch.copy() for _ in range(self.J)]
                     for _ in range(self.N)]
        self.version = np.zeros((self.N, self.J), dtype=np.int64)
        self._pair_cache: dict = {}  # (t, k) -> (version, Density)
        self._perfect = perfect_density(self.grid)

    def _pair(self, t: int, k: int) -> Density:
        key = (t, k)
        ver = int(self.version[t, k])
        hit = self._pair_cache.get(key)
        if hit is not None and hit[0] == ver:
            return hit[1]
        d = box_conv_self(self.dens[t][k])
        self._pair_cache[key] = (ver, d)
        return d

    def _y(self, s: int, i: int) -> Density:
        t = s - i
        if not (0 <= t < self.N):
            return self._perfect
        acc = self.dens[t][i]
        for j in range(self.J):
            if j == i:
                continue
            tj = s - j
            if 0 <= tj < self.N:
                acc = box_conv(acc, self._pair(tj, j))
        return acc

    def activate(self, t: int) -> None:
        ys = [self._y(t + k, k) for k in range(self.J)]
        prefix = [self.ch]
        for k in range(self.J):
            prefix.append(sum_conv(prefix[-1], ys[k]))
        suffix = [None] * (self.J + 1)
        acc = None
        for k in range(self.J - 1, -1, -1):
            acc = ys[k] if acc is None else sum_conv(ys[k], acc)
            suffix[k] = acc
        for k in range(self.J):
            d = prefix[k] if k == self.J - 1 else sum_conv(prefix[k], suffix[k + 1])
            self.dens[t][k] = d.renormalize()
            self.version[t, k] += 1

    def mirror(self, t: int) -> None:
        tm = self.N - 1 - t
        if tm == t:
            return
        for k in range(self.J):
            km = self.J - 1 - k
            self.dens[tm][km] = self.dens[t][k].copy()
            self.version[tm, km] += 1

    def b_level(self, t: int) -> float:
        return max(d.bhattacharyya() for d in self.dens[t])

    def pb(self, t: int) -> float:
        acc = self.ch
        for k in range(self.J):
            acc = sum_conv(acc, self._y(t + k, k))
        return acc.renormalize().error_prob()

    def b_all(self) -> np.ndarray:
        return np.array([[d.bhattacharyya() for d in row] for row in self.dens])

    def pb_all(self) -> np.ndarray:
        return np.array([self.pb(t) for t in range(self.N)])


def run_windowed(config: WindowConfig) -> WindowReport:
    de_cfg = config.de
    J, N = de_cfg.J, de_cfg.n_times
    A = de_cfg.channel.bhattacharyya
    b_br = breakout_value(J, A)
    b0 = config.shift_target()
    chain = (_ScalarChain(de_cfg) if de_cfg.channel.kind == "bec"
             else _DensityChain(de_cfg))
    center = (N - 1) // 2  # last simulated 0-based level; rest by mirror
    counts = np.zeros(N, dtype=np.int64)
    traces = {t: [] for t in config.trace_levels}
    total = 0
    shifts = 0
    lead = 0
    verdict = BUDGET
    stall_position = None
    while lead <= center:
        shifted = False
        out_of_budget = False
        prev_lead_b = None
        flat = 0
        for _sweep in range(config.per_position_budget):
            hi = min(lead + config.W - 1, center)
            for t in range(lead, hi + 1):
                chain.activate(t)
                chain.mirror(t)
                counts[t] += 1
                tm = N - 1 - t
                if tm != t:
                    counts[tm] += 1
                total += 1
                for lvl in config.trace_levels:
                    if lvl - 1 == t or lvl - 1 == N - 1 - t:
                        traces[lvl].append((total, chain.pb(lvl - 1)))
                if total >= config.max_updates:
                    out_of_budget = True
                    break
            lead_b = chain.b_level(lead)
            if lead_b < b0:
                lead += 1
                shifts += 1
                shifted = True
                break
            if out_of_budget:
                break
            if prev_lead_b is not None and abs(lead_b - prev_lead_b) < FIXED_POINT_TOL:
                flat += 1
                if flat >= FIXED_POINT_PATIENCE:
                    break
            else:
                flat = 0
            prev_lead_b = lead_b
        if not shifted:
            verdict = BUDGET if out_of_budget else STALLED
            stall_position = lead + 1
            break
        if out_of_budget and lead <= center:
            verdict = BUDGET
            stall_position = lead + 1
            break
    else:
        verdict = CONVERGED
    return WindowReport(
        verdict=verdict,
        stall_position=stall_position,
        shifts=shifts,
        total_updates=total,
        updates_per_level=counts,
        level_traces=traces,
        B0=b0,
        B_br=b_br,
        final_b=chain.b_all(),
        final_pb=chain.pb_all(),
    )


@dataclass
class PlateauStats:
    empty: bool
    start_level: int | None = None  # 1-based
    end_level: int | None = None
    mean: float = 0.0
    max_relative_deviation: float = 0.0


def profile_updates(report: WindowReport, rel_tol: float = 0.10,
                    min_length: int = 3) -> PlateauStats:
    """Locate the flat region of the updates-per-level histogram.

    The histogram rises over the first window width, then holds a steady
    value until the center is reached.  The plateau is the longest
    contiguous run of levels within `rel_tol` of the steady value,
    estimated as the median of the counts from the peak to the center.
    """
    counts = report.updates_per_level
    n = counts.size
    half = counts[: (n + 1) // 2].astype(float)
    if half.size == 0 or half.max() == 0:
        return PlateauStats(empty=True)
    peak = int(np.argmax(half))
    steady = float(np.median(half[peak:]))
    if steady <= 0:
        return PlateauStats(empty=True)
    ok = np.abs(half - steady) <= rel_tol * steady
    best_lo = best_hi = None
    i = 0
    while i < half.size:
        if ok[i]:
            j = i
            while j + 1 < half.size and ok[j + 1]:
                j += 1
            if best_lo is None or j - i > best_hi - best_lo:
                best_lo, best_hi = i, j
            i = j + 1
        else:
            i += 1
    if best_lo is None or best_hi - best_lo + 1 < min_length:
        return PlateauStats(empty=True)
    seg = half[best_lo:best_hi + 1]
    mean = float(seg.mean())
    dev = float(np.max(np.abs(seg - mean)) / mean)
    return PlateauStats(empty=False, start_level=best_lo + 1,
                        end_level=best_hi + 1, mean=mean,
                        max_relative_deviation=dev)


def align_level_traces(trace_a, trace_b, *, floor: float = 1e-30) -> float:
    """Max pointwise relative gap between two P_b-vs-updates curves after
    horizontal alignment (each curve rebased to updates since its own
    first activation).

    In steady state the windowed schedule repeats itself, so curves from
    different levels should coincide once shifted.  The comparison is on
    log-P_b, interpolated onto the overlapping update range; values below
    `floor` are clipped (both curves converged there).
    """
    a = np.asarray(trace_a, dtype=float)
    b = np.asarray(trace_b, dtype=float)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("traces need at least two samples each")
    ua = a[:, 0] - a[0, 0]
    ub = b[:, 0] - b[0, 0]
    pa = np.log(np.maximum(a[:, 1], floor))
    pb = np.log(np.maximum(b[:, 1], floor))
    span = min(ua[-1], ub[-1])
    if span <= 0:
        raise ValueError("traces do not overlap after alignment")
    log_floor = math.log(floor) + 1e-9

    def gap_at(shift: float) -> float:
        lo = max(ua[0], ub[0] + shift)
        hi = min(ua[-1], ub[-1] + shift)
        if hi - lo < 0.5 * span:
            return math.inf
        grid = np.linspace(lo, hi, 200)
        fa = np.interp(grid, ua, pa)
        fb = np.interp(grid, ub + shift, pb)
        live = (fa > log_floor) | (fb > log_floor)
        if not live.any():
            return 0.0
        va, vb = np.exp(fa[live]), np.exp(fb[live])
        return float(np.max(np.abs(va - vb) / np.maximum(np.minimum(va, vb), floor)))

    # the curves repeat up to a horizontal offset; pick the best shift
    shifts = np.linspace(-0.25 * span, 0.25 * span, 501)
    return min(gap_at(float(s)) for s in shifts)


@dataclass
class Prop1Report:
    counterexamples: list
    budget_limited: list  # parallel run out of budget without a verdict
    cases: list  # (epsilon, windowed verdict, parallel certified)

    @property
    def holds(self) -> bool:
        return not self.counterexamples


def check_prop1(de_configs, W: int, *, parallel_max_updates: int | None = None,
                windowed_max_updates: int = 10_000_000) -> Prop1Report:
    """Windowed convergence must imply parallel-schedule convergence."""
    counterexamples = []
    budget_limited = []
    cases = []
    for de_cfg in de_configs:
        wrep = run_windowed(WindowConfig(de_cfg, W, max_updates=windowed_max_updates))
        if parallel_max_updates is not None:
            import dataclasses
            de_par = dataclasses.replace(de_cfg, max_updates=parallel_max_updates)
        else:
            de_par = de_cfg
        pres = run_de(de_par)
        cases.append((de_cfg.channel.param, wrep.verdict, pres.converged_certified))
        if wrep.verdict == CONVERGED and not pres.converged_certified:
            if not pres.stalled and pres.updates + de_cfg.n_times * de_cfg.J > de_par.max_updates:
                budget_limited.append(de_cfg.channel.param)
            else:
                counterexamples.append(de_cfg.channel.param)
    return Prop1Report(counterexamples, budget_limited, cases)


@dataclass
class Prop2Report:
    applicable: bool  # window shifted at least J times
    holds: bool | None  # B <= B0 at every level after completion
    conjecture_only: bool  # general (non-BEC) channel: logged, not asserted
    shifts: int
    max_final_b: float
    verdict: str


def check_prop2(config: WindowConfig) -> Prop2Report:
    """If the window shifts at least J times, every level ends below B0."""
    report = run_windowed(config)
    J = config.de.J
    b0 = report.B0
    applicable = report.shifts >= J
    conjecture = config.de.channel.kind != "bec"
    if not applicable:
        return Prop2Report(False, None, conjecture, report.shifts,
                           float(report.final_b.max()), report.verdict)
    max_b = float(report.final_b.max(initial=0.0))
    return Prop2Report(True, bool(max_b <= b0 + 1e-12), conjecture,
                       report.shifts, max_b, report.verdict)


def probe_window_width(de_cfg: DEConfig, *, start: int | None = None,
                       rel_tol: float = 0.01,
                       max_updates: int = 10_000_000):
    """Double W from J upward until per-level results stop changing (<1%).

    Returns (W, reports) where reports maps each probed W to its run.
    """
    J, L = de_cfg.J, de_cfg.params.L
    w = start if start is not None else J
    w_cap = math.ceil(L / 2)
    reports = {}
    prev_profile = None
    prev_w = None
    while True:
        w = min(w, w_cap)
        rep = run_windowed(WindowConfig(de_cfg, w, max_updates=max_updates))
        reports[w] = rep
        profile = rep.final_pb
        if prev_profile is not None:
            # levels that both runs drove to negligible error count as equal
            scale = np.maximum(np.abs(prev_profile), 1e-12)
            change = float(np.max(np.abs(profile - prev_profile) / scale))
            if change < rel_tol:
                return prev_w, reports
        if w == w_cap:
            return w, reports
        prev_profile = profile
        prev_w = w
        w = min(2 * w, w_cap)
