"""Belief-propagation decoding on Tanner graphs (BEC and BiAWGN share one
LLR engine; BEC messages are just 0 / +-saturation).

Check updates use the signed log-magnitude form of the tanh rule, which is
stable for saturated inputs, and the decoder stops early once the hard
decisions satisfy every parity check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import LLR_SAT, ChannelModel, channel_llr
from .ensemble import EnsembleParams, TerminatedCode, encode, sample_ensemble, terminate

_PHI_CLIP = 1e-300


def _phi(m: np.ndarray) -> np.ndarray:
    """-log tanh(m/2) for m > 0; involution used for the check magnitude."""
    m = np.maximum(m, _PHI_CLIP)
    e = np.exp(-m)
    out = np.empty_like(e)
    tiny = e >= 1.0  # m below float precision: tanh(m/2) == m/2
    if tiny.any():
        out[tiny] = -np.log(m[tiny] / 2.0)
    rest = ~tiny
    out[rest] = np.log1p(e[rest]) - np.log1p(-e[rest])
    return out


def check_update(incoming) -> float:
    """Extrinsic check-node LLR from the other incident messages.

    Known inputs (|z| >= saturation, or infinite) short-circuit through the
    sign algebra: they multiply the sign but do not weaken the magnitude.
    """
    z = np.asarray(incoming, dtype=np.float64)
    if z.size == 0:
        raise ValueError("check update needs at least one incoming message")
    if np.any(z == 0.0):
        return 0.0
    sign = 1.0 if np.count_nonzero(z < 0) % 2 == 0 else -1.0
    mags = np.abs(z)
    finite = mags < LLR_SAT
    if not finite.any():
        return sign * math.inf
    total = float(np.sum(_phi(mags[finite])))
    mag = float(_phi(np.array([max(total, _PHI_CLIP)]))[0])
    return sign * min(mag, LLR_SAT)


def variable_update(alpha: float, incoming, exclude: int) -> float:
    """Variable-node LLR to neighbor `exclude`: channel plus the other checks."""
    beta = np.asarray(incoming, dtype=np.float64)
    if not (0 <= exclude < beta.size):
        raise ValueError("excluded index out of range")
    if alpha >= LLR_SAT:
        return LLR_SAT
    if alpha <= -LLR_SAT:
        return -LLR_SAT
    total = alpha + float(np.sum(beta)) - float(beta[exclude])
    return float(np.clip(total, -LLR_SAT, LLR_SAT))


@dataclass(frozen=True)
class Schedule:
    kind: str  # "parallel" | "window"
    W: int = 0
    resolve_target: float = 0.0  # tolerated fraction of unresolved symbols at the leading level

    @staticmethod
    def parallel() -> "Schedule":
        return Schedule("parallel")

    @staticmethod
    def window(W: int, resolve_target: float = 0.0) -> "Schedule":
        return Schedule("window", W=W, resolve_target=resolve_target)


@dataclass
class TannerGraph:
    n: int
    n_checks: int
    edge_var: np.ndarray
    edge_chk: np.ndarray
    edge_time: np.ndarray | None = None  # 1-based variable time per edge
    n_var_times: int = 0

    @classmethod
    def from_code(cls, code: TerminatedCode) -> "TannerGraph":
        return cls(code.n, code.n_checks, code.edge_var, code.edge_chk,
                   edge_time=code.edge_time, n_var_times=code.params.n_var_times)

    @classmethod
    def from_parity_matrix(cls, H: np.ndarray) -> "TannerGraph":
        H = np.asarray(H)
        chk, var = np.nonzero(H)
        return cls(H.shape[1], H.shape[0], var.astype(np.int64), chk.astype(np.int64))


@dataclass
class DecodeResult:
    bits: np.ndarray
    converged: bool
    iterations: int
    posterior: np.ndarray
    bit_errors_per_iter: list = field(default_factory=list)
    level_error_counts: np.ndarray | None = None


class _Engine:
    def __init__(self, graph: TannerGraph, alpha: np.ndarray):
        self.g = graph
        self.alpha = np.asarray(alpha, dtype=np.float64)
        if self.alpha.size != graph.n:
            raise ValueError("LLR length does not match the code length")
        self.z = self.alpha[graph.edge_var].copy()  # variable-to-check messages
        self.beta = np.zeros_like(self.z)  # check-to-variable messages
        self.posterior = self.alpha.copy()

    def _check_pass(self, edge_idx: np.ndarray | None = None) -> None:
        """Refresh check-to-variable messages.

        Per-check aggregates always span every incident edge; `edge_idx`
        only restricts which outgoing messages are (re)written, so an
        on-demand schedule sees the same extrinsic values a full pass
        would produce.
        """
        g = self.g
        z = self.z
        is_zero = z == 0.0
        mags = np.abs(z)
        # known messages (saturated) contribute sign only
        phis = np.zeros_like(mags)
        active = ~is_zero & (mags < LLR_SAT)
        phis[active] = _phi(mags[active])
        nz = np.bincount(g.edge_chk, weights=is_zero.astype(np.float64),
                         minlength=g.n_checks)
        neg = np.bincount(g.edge_chk, weights=(z < 0).astype(np.float64),
                          minlength=g.n_checks)
        psum = np.bincount(g.edge_chk, weights=phis, minlength=g.n_checks)
        idx = slice(None) if edge_idx is None else edge_idx
        ec = g.edge_chk[idx]
        zi, is0, ph = z[idx], is_zero[idx], phis[idx]
        zc = nz[ec] - is0
        other_neg = neg[ec] - (zi < 0)
        other_phi = psum[ec] - ph
        sign = np.where(other_neg % 2 == 0, 1.0, -1.0)
        mag = np.minimum(_phi(np.maximum(other_phi, _PHI_CLIP)), LLR_SAT)
        self.beta[idx] = np.where(zc > 0, 0.0, sign * mag)

    def _variable_pass(self, edge_idx: np.ndarray | None = None) -> None:
        g = self.g
        tot = np.bincount(g.edge_var, weights=self.beta, minlength=g.n)
        self.posterior = np.clip(self.alpha + tot, -LLR_SAT, LLR_SAT)
        idx = slice(None) if edge_idx is None else edge_idx
        ev = g.edge_var[idx]
        known = np.abs(self.alpha[ev]) >= LLR_SAT
        z = self.alpha[ev] + tot[ev] - self.beta[idx]
        self.z[idx] = np.where(known, np.sign(self.alpha[ev]) * LLR_SAT,
                               np.clip(z, -LLR_SAT, LLR_SAT))

    def hard_bits(self) -> np.ndarray:
        return (self.posterior < 0).astype(np.uint8)

    def syndrome_ok(self) -> bool:
        bits = self.hard_bits()
        syn = np.bincount(self.g.edge_chk, weights=bits[self.g.edge_var].astype(np.float64),
                          minlength=self.g.n_checks)
        return not np.any(syn.astype(np.int64) & 1)

    def unresolved(self) -> np.ndarray:
        return self.posterior == 0.0


def bp_decode(code, llrs: np.ndarray, schedule: Schedule = Schedule.parallel(),
              max_iters: int = 100, reference: np.ndarray | None = None,
              early_stop: bool = True) -> DecodeResult:
    """Decode one received word.  `code` may be a TerminatedCode or TannerGraph.

    `early_stop=False` forces exactly max_iters parallel sweeps (useful when
    the posterior marginals, not the hard decisions, are the output).
    """
    graph = code if isinstance(code, TannerGraph) else TannerGraph.from_code(code)
    eng = _Engine(graph, llrs)
    if schedule.kind == "parallel":
        return _decode_parallel(eng, max_iters, reference, early_stop)
    if schedule.kind == "window":
        return _decode_window(eng, schedule, max_iters, reference)
    raise ValueError(f"unknown schedule {schedule.kind!r}")


def _finish(eng: _Engine, iters: int, errs: list,
            reference: np.ndarray | None) -> DecodeResult:
    bits = eng.hard_bits()
    converged = eng.syndrome_ok() and not eng.unresolved().any()
    res = DecodeResult(bits=bits, converged=converged, iterations=iters,
                       posterior=eng.posterior.copy(), bit_errors_per_iter=errs)
    if reference is not None and eng.g.edge_time is not None:
        wrong = (bits != reference) | eng.unresolved()
        times = np.zeros(eng.g.n, dtype=np.int64)
        times[eng.g.edge_var] = eng.g.edge_time
        res.level_error_counts = np.bincount(times[wrong] - 1,
                                             minlength=eng.g.n_var_times) if wrong.any() \
            else np.zeros(eng.g.n_var_times, dtype=np.int64)
    return res


def _count_errors(eng: _Engine, reference: np.ndarray | None) -> int | None:
    if reference is None:
        return None
    bits = eng.hard_bits()
    return int(np.count_nonzero((bits != reference) | eng.unresolved()))


def _decode_parallel(eng: _Engine, max_iters: int,
                     reference: np.ndarray | None,
                     early_stop: bool = True) -> DecodeResult:
    errs = []
    if early_stop and eng.syndrome_ok() and not eng.unresolved().any():
        return _finish(eng, 0, errs, reference)
    for it in range(1, max_iters + 1):
        eng._check_pass()
        eng._variable_pass()
        e = _count_errors(eng, reference)
        if e is not None:
            errs.append(e)
        if early_stop and eng.syndrome_ok() and not eng.unresolved().any():
            return _finish(eng, it, errs, reference)
    return _finish(eng, max_iters, errs, reference)


def _decode_window(eng: _Engine, schedule: Schedule, max_iters: int,
                   reference: np.ndarray | None) -> DecodeResult:
    g = eng.g
    if g.edge_time is None:
        raise ValueError("windowed decoding needs per-edge time labels")
    N = g.n_var_times
    W = schedule.W
    if W < 1 or W > math.ceil(N / 2):
        raise ValueError("window width must satisfy 1 <= W <= ceil((L+J)/2)")
    edges_of_time = [np.nonzero(g.edge_time == t)[0] for t in range(1, N + 1)]
    var_time = np.zeros(g.n, dtype=np.int64)
    var_time[g.edge_var] = g.edge_time
    level_vars = [np.nonzero(var_time == t)[0] for t in range(1, N + 1)]
    errs = []
    total_sweeps = 0
    t_lead = 1
    per_position_budget = max(1, max_iters)
    while t_lead <= N and total_sweeps < max_iters * N:
        window_times = range(t_lead, min(t_lead + W, N + 1))
        for _ in range(per_position_budget):
            for t in window_times:
                idx = edges_of_time[t - 1]
                eng._check_pass(idx)  # on-demand: refresh messages these symbols consume
                eng._variable_pass(idx)
            total_sweeps += 1
            e = _count_errors(eng, reference)
            if e is not None:
                errs.append(e)
            lead = eng.posterior[level_vars[t_lead - 1]]
            frac_unresolved = float(np.mean(np.abs(lead) < 1.0))
            if frac_unresolved <= schedule.resolve_target:
                break
        t_lead += 1
        if eng.syndrome_ok() and not eng.unresolved().any():
            break
    return _finish(eng, total_sweeps, errs, reference)


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class BerPoint:
    channel_param: float
    trials: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    mean_iters: float
    ber_ci: tuple
    fer_ci: tuple


_worker_cache: dict = {}


def _channel_for(channel_kind: str, value: float, ebn0_rate: float | None):
    from .channels import bec, biawgn, noiseless, sigma_from_ebn0

    if channel_kind == "bec":
        return bec(value)
    if channel_kind == "biawgn":
        sigma = sigma_from_ebn0(value, ebn0_rate) if ebn0_rate else value
        return biawgn(sigma)
    if channel_kind == "noiseless":
        return noiseless()
    raise ValueError(f"unknown channel kind {channel_kind!r}")


def _mc_frame(params: EnsembleParams, channel_kind: str, value: float,
              ebn0_rate: float | None, seed: int, pi: int, fi: int,
              schedule: Schedule, max_iters: int,
              fresh_code_per_frame: bool) -> tuple[int, int]:
    """One Monte-Carlo frame; fully determined by (seed, pi, fi)."""
    channel = _channel_for(channel_kind, value, ebn0_rate)
    fss = np.random.SeedSequence(entropy=seed, spawn_key=(pi, fi))
    children = fss.spawn(3)
    if fresh_code_per_frame:
        code_seed = int(np.random.Generator(np.random.PCG64(children[0])).integers(2 ** 31))
    else:
        code_seed = seed
    key = (params, code_seed)
    cached = _worker_cache.get(key)
    if cached is None:
        sf = sample_ensemble(params, code_seed)
        cached = (sf, terminate(sf))
        _worker_cache.clear()  # keep at most one code per process
        _worker_cache[key] = cached
    sf, code = cached
    rng = np.random.Generator(np.random.PCG64(children[1]))
    info = rng.integers(0, 2, size=params.L * params.M).astype(np.uint8)
    word = encode(sf, info)
    llrs = channel_llr(channel, word, children[2])
    res = bp_decode(code, llrs, schedule=schedule, max_iters=max_iters)
    wrong = (res.bits != word) | (res.posterior == 0.0)
    nerr = int(np.count_nonzero(wrong[code.info_positions()]))
    return nerr, res.iterations


def monte_carlo(params: EnsembleParams, channel_kind: str, grid,
                trials: int, seed: int, max_iters: int = 100,
                schedule: Schedule = Schedule.parallel(),
                fresh_code_per_frame: bool = False,
                ebn0_rate: float | None = None, jobs: int = 1) -> list:
    """Monte-Carlo BER/FER over a grid of channel parameters.

    Each frame encodes fresh random information bits and decodes the noisy
    LLRs; an unresolved erasure counts as a bit error.  Per-frame RNG
    streams are keyed by (point, frame) so results do not depend on how
    work is partitioned across jobs.
    """
    if len(grid) == 0:
        raise ValueError("channel grid must be nonempty")
    results = []
    for pi, value in enumerate(grid):
        frame_args = [(params, channel_kind, float(value), ebn0_rate, seed,
                       pi, fi, schedule, max_iters, fresh_code_per_frame)
                      for fi in range(trials)]
        if jobs > 1:
            import concurrent.futures as cf
            with cf.ProcessPoolExecutor(max_workers=jobs) as ex:
                frame_results = list(ex.map(_mc_frame_star, frame_args, chunksize=8))
        else:
            frame_results = [_mc_frame(*a) for a in frame_args]
        bit_errors = sum(r[0] for r in frame_results)
        frame_errors = sum(1 for r in frame_results if r[0] > 0)
        iters_total = sum(r[1] for r in frame_results)
        nbits = trials * params.L * params.M
        results.append(BerPoint(
            channel_param=float(value), trials=trials,
            bit_errors=bit_errors, frame_errors=frame_errors,
            ber=bit_errors / nbits, fer=frame_errors / trials,
            mean_iters=iters_total / trials,
            ber_ci=wilson_interval(bit_errors, nbits),
            fer_ci=wilson_interval(frame_errors, trials),
        ))
    return results


def _mc_frame_star(args):
    return _mc_frame(*args)
