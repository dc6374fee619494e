"""Threshold search by bisection over the channel parameter.

BEC queries bisect the erasure probability directly.  BiAWGN queries
bisect Eb/N0 in dB, with sigma^2 = 1/(2 R 10^(EbN0/10)) at the design
rate of the queried (J, L).  Each probe is a full density-evolution run
(parallel schedule or the sliding-window schedule); all probes are kept
for audit.
"""

from __future__ import annotations

import dataclasses
import math
from fractions import Fraction
from dataclasses import dataclass, field

from .channels import ChannelModel, bec, biawgn, ebn0_from_sigma, sigma_from_ebn0
from .de import DEConfig, run_de
from .ensemble import EnsembleParams, design_rate
from .window import CONVERGED, WindowConfig, run_windowed


class BracketError(ValueError):
    """Both bracket endpoints give the same verdict."""


@dataclass(frozen=True)
class ThresholdQuery:
    params: EnsembleParams
    channel_kind: str  # "bec" | "biawgn"
    lo: float  # epsilon or Eb/N0 in dB
    hi: float
    tol: float = 1e-4  # epsilon units; use 0.01 for dB queries
    engine: str = "parallel"  # "parallel" | "window"
    window_width: int | None = None
    certificate: str = "breakout"  # "breakout" | "practical"
    max_updates: int = 3_000_000
    delta: float = 0.01
    rmax: float = 30.0
    block_baseline: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("bracket must satisfy lo < hi")
        if self.channel_kind not in ("bec", "biawgn"):
            raise ValueError(f"unknown channel kind {self.channel_kind!r}")
        if self.engine not in ("parallel", "window"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.engine == "window" and self.block_baseline:
            raise ValueError("windowed engine requires a coupled chain")

    @property
    def rate(self) -> float:
        if self.block_baseline:
            return 0.5  # uncoupled (J, 2J)-regular rate
        return float(design_rate(self.params.J, self.params.L))


@dataclass
class ProbeRecord:
    value: float  # epsilon or Eb/N0 (dB)
    converged: bool
    verdict: str
    updates: int


@dataclass
class ThresholdResult:
    query: ThresholdQuery
    threshold: float  # midpoint of the final bracket
    bracket: tuple  # (last good, last bad) ordered as (lo, hi)
    probes: list
    updates: int
    certificate: str

    @property
    def sigma(self) -> float | None:
        if self.query.channel_kind != "biawgn":
            return None
        return sigma_from_ebn0(self.threshold, self.query.rate)


def _channel(q: ThresholdQuery, value: float) -> ChannelModel:
    if q.channel_kind == "bec":
        return bec(value)
    return biawgn(sigma_from_ebn0(value, q.rate))


def _probe(q: ThresholdQuery, value: float) -> ProbeRecord:
    de_cfg = DEConfig(q.params, _channel(q, value), delta=q.delta, rmax=q.rmax,
                      max_updates=q.max_updates, block_baseline=q.block_baseline)
    if q.engine == "window":
        w = q.window_width or 2 * q.params.J ** 2
        rep = run_windowed(WindowConfig(de_cfg, w, max_updates=q.max_updates))
        return ProbeRecord(value, rep.verdict == CONVERGED, rep.verdict,
                           rep.total_updates)
    res = run_de(de_cfg)
    ok = (res.converged_certified if q.certificate == "breakout"
          else res.converged)
    verdict = ("CONVERGED" if ok else
               "STALLED" if res.stalled else "BUDGET")
    return ProbeRecord(value, ok, verdict, res.updates)


def bisect_threshold(query: ThresholdQuery) -> ThresholdResult:
    """Standard bisection; BEC convergence is monotone in epsilon, so the
    good endpoint is the low one for BEC and the high one in dB."""
    probes = []
    lo_rec = _probe(query, query.lo)
    hi_rec = _probe(query, query.hi)
    probes += [lo_rec, hi_rec]
    good_is_lo = query.channel_kind == "bec"
    lo_ok_expected = good_is_lo
    if lo_rec.converged != lo_ok_expected or hi_rec.converged == lo_ok_expected:
        raise BracketError(
            f"endpoint verdicts do not bracket a threshold: "
            f"{query.lo} -> {lo_rec.verdict}, {query.hi} -> {hi_rec.verdict}")
    lo, hi = query.lo, query.hi
    while hi - lo > query.tol:
        mid = 0.5 * (lo + hi)
        rec = _probe(query, mid)
        probes.append(rec)
        if rec.converged == lo_ok_expected:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(
        query=query,
        threshold=0.5 * (lo + hi),
        bracket=(lo, hi),
        probes=probes,
        updates=sum(p.updates for p in probes),
        certificate=query.certificate,
    )


def L_for_target_rate(J: int, r_target: float) -> int:
    """Smallest L whose design rate reaches r_target (rate loss budget)."""
    if not (0.0 < r_target < 0.5):
        raise ValueError("target rate must be in (0, 1/2)")
    # snap the float to its intended rational so boundary cases (e.g. 0.45,
    # 0.49) resolve exactly instead of through binary rounding noise
    r = Fraction(r_target).limit_denominator(10**6)
    L = max(1, math.ceil(J * r / (Fraction(1, 2) - r)))
    while design_rate(J, L) < r:
        L += 1
    while L > 1 and design_rate(J, L - 1) >= r:
        L -= 1
    return L


@dataclass
class ThresholdTable:
    rows: list  # (L, ThresholdResult)

    def flatness(self, tail: int = 2) -> float:
        """Spread of the threshold estimates over the largest-L entries."""
        vals = [r.threshold for _, r in self.rows[-tail:]]
        return max(vals) - min(vals)


def threshold_vs_L(J: int, channel_kind: str, L_grid, *, lo: float, hi: float,
                   tol: float = 1e-4, M: int = 2, **kwargs) -> ThresholdTable:
    rows = []
    for L in sorted(L_grid):
        q = ThresholdQuery(EnsembleParams(J, M, L), channel_kind, lo, hi,
                           tol=tol, **kwargs)
        rows.append((L, bisect_threshold(q)))
    return ThresholdTable(rows)


def reexpress_at_rate(result: ThresholdResult, rate: float) -> float:
    """Same noise level quoted as Eb/N0 at a different rate (dB)."""
    sigma = result.sigma
    if sigma is None:
        raise ValueError("re-expression applies to BiAWGN thresholds only")
    return ebn0_from_sigma(sigma, rate)
