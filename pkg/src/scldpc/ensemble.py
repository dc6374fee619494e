"""Construction of terminated LDPC convolutional codes from the
permutation-matrix ensemble with symbol degree J and check degree 2J.

A syndrome former is a banded, time-varying parity structure: at each
variable time t the 2M code symbols connect to check times t..t+J-1, with
the connections at each offset given by two M x M permutation matrices
(one for each half of the symbol group).  Terminating after L information
time instants clips the check-side edges to known-zero symbols, which
lowers boundary check degrees and creates the structured irregularity the
analysis modules exploit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .gf2 import Gf2Elimination, gf2_rank

PRNG_NAME = "numpy-PCG64"  # stream split per block via SeedSequence spawn keys


@dataclass(frozen=True)
class EnsembleParams:
    """Parameters (J, M, L) of the terminated ensemble.

    J: symbol-node degree (>= 3); check degree is K = 2J.
    M: permutation block size (>= 2).
    L: number of information time instants (>= 1).
    """

    J: int
    M: int
    L: int

    def __post_init__(self):
        if self.J < 3:
            raise ValueError("J must be >= 3")
        if self.M < 2:
            raise ValueError("M must be >= 2 (M = 1 breaks the simple-graph assumptions)")
        if self.L < 1:
            raise ValueError("L must be >= 1")

    @property
    def K(self) -> int:
        return 2 * self.J

    @property
    def memory(self) -> int:
        """Syndrome former memory m_s = J - 1."""
        return self.J - 1

    @property
    def constraint_length(self) -> int:
        return self.K * self.M

    @property
    def n_var_times(self) -> int:
        """N = L + J variable time instants after termination."""
        return self.L + self.J

    @property
    def n_chk_times(self) -> int:
        """S = L + 2J - 1 check time instants after termination."""
        return self.L + 2 * self.J - 1

    @property
    def n(self) -> int:
        """Terminated block length 2M(L+J)."""
        return 2 * self.M * self.n_var_times

    @property
    def n_checks(self) -> int:
        return self.M * self.n_chk_times


def _fisher_yates(rng: np.random.Generator, m: int) -> np.ndarray:
    """Explicit Fisher-Yates so the sampled permutation is pinned to the
    PRNG's integer stream (not to numpy's permutation() internals)."""
    perm = np.arange(m, dtype=np.int64)
    highs = np.arange(m, 1, -1, dtype=np.int64)  # i+1 for i = m-1 .. 1
    draws = rng.integers(0, highs)
    for step, j in enumerate(draws):
        i = m - 1 - step
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def sample_permutation_block(params: EnsembleParams, seed: int,
                             t: int, i: int, h: int) -> np.ndarray:
    """Sample the block at (check-time t, offset i, half h) for a given seed.

    Each block gets its own PRNG stream keyed by (t, i, h), so individual
    blocks are reproducible without materializing the whole syndrome former.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(t, i, h))
    return _fisher_yates(np.random.Generator(np.random.PCG64(ss)), params.M)


@dataclass(frozen=True)
class SyndromeFormer:
    """All permutation blocks of a terminated-code sample.

    blocks[(t, i, h)] holds the permutation applied at variable time
    t - i for offset i and symbol half h (the block sits at check time t).
    Check times t run 1..L+2J-1; only blocks feeding in-range variable
    times are stored.
    """

    params: EnsembleParams
    seed: int
    blocks: dict = field(repr=False)

    def block(self, t: int, i: int, h: int) -> np.ndarray:
        return self.blocks[(t, i, h)]


def sample_ensemble(params: EnsembleParams, seed: int) -> SyndromeFormer:
    """Draw all permutation blocks independently and uniformly (per seed)."""
    blocks = {}
    N, S = params.n_var_times, params.n_chk_times
    for s in range(1, S + 1):
        for i in range(params.J):
            t_var = s - i
            if not (1 <= t_var <= N):
                continue
            for h in (0, 1):
                blocks[(s, i, h)] = sample_permutation_block(params, seed, s, i, h)
    return SyndromeFormer(params=params, seed=seed, blocks=blocks)


@dataclass
class TerminatedCode:
    """Terminated sparse code: Tanner graph plus per-edge (time, offset) labels.

    Variables are indexed var = (t-1)*2M + h*M + m for t = 1..N.
    Checks are indexed chk = (s-1)*M + j for s = 1..S.
    """

    params: EnsembleParams
    seed: int
    edge_var: np.ndarray  # variable index per edge
    edge_chk: np.ndarray  # check index per edge
    edge_time: np.ndarray  # variable time t (1-based) per edge
    edge_offset: np.ndarray  # offset k = (check time - t) per edge

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def n_checks(self) -> int:
        return self.params.n_checks

    def var_index(self, t: int, h: int, m: int) -> int:
        M = self.params.M
        return (t - 1) * 2 * M + h * M + m

    def var_time(self, var: int) -> int:
        return var // (2 * self.params.M) + 1

    def check_adjacency(self) -> list:
        """Incident variable list per check, in edge order."""
        order = np.lexsort((self.edge_var, self.edge_chk))
        adj = [[] for _ in range(self.n_checks)]
        for e in order:
            adj[self.edge_chk[e]].append(int(self.edge_var[e]))
        return adj

    def parity_matrix(self) -> np.ndarray:
        """Dense binary H (checks x variables); for small codes only."""
        H = np.zeros((self.n_checks, self.n), dtype=np.uint8)
        H[self.edge_chk, self.edge_var] ^= 1
        return H

    def sparse_parity_matrix(self) -> sp.csr_matrix:
        data = np.ones(len(self.edge_var), dtype=np.int8)
        return sp.csr_matrix((data, (self.edge_chk, self.edge_var)),
                             shape=(self.n_checks, self.n))

    def syndrome_ok(self, word: np.ndarray) -> bool:
        word = np.asarray(word, dtype=np.uint8)
        syn = np.zeros(self.n_checks, dtype=np.int64)
        np.add.at(syn, self.edge_chk, word[self.edge_var])
        return not np.any(syn & 1)

    def info_positions(self) -> np.ndarray:
        """Systematic information positions: first M symbols of t = 1..L."""
        M, L = self.params.M, self.params.L
        pos = [self.var_index(t, 0, m) for t in range(1, L + 1) for m in range(M)]
        return np.array(pos, dtype=np.int64)


def terminate(sf: SyndromeFormer) -> TerminatedCode:
    """Build the terminated Tanner graph (boundary stubs to known-zero
    symbols removed by construction: out-of-range blocks are absent)."""
    p = sf.params
    M = p.M
    ev, ec, et, eo = [], [], [], []
    for (s, i, h), perm in sf.blocks.items():
        t = s - i
        var_base = (t - 1) * 2 * M + h * M
        chk_base = (s - 1) * M
        ev.append(var_base + np.arange(M))
        ec.append(chk_base + perm)
        et.append(np.full(M, t))
        eo.append(np.full(M, i))
    return TerminatedCode(
        params=p, seed=sf.seed,
        edge_var=np.concatenate(ev), edge_chk=np.concatenate(ec),
        edge_time=np.concatenate(et), edge_offset=np.concatenate(eo),
    )


@dataclass(frozen=True)
class DegreeProfile:
    check_degrees: dict
    variable_degrees: dict


def degree_profile(code: TerminatedCode) -> DegreeProfile:
    cdeg = np.zeros(code.n_checks, dtype=np.int64)
    np.add.at(cdeg, code.edge_chk, 1)
    vdeg = np.zeros(code.n, dtype=np.int64)
    np.add.at(vdeg, code.edge_var, 1)
    cvals, ccounts = np.unique(cdeg, return_counts=True)
    vvals, vcounts = np.unique(vdeg, return_counts=True)
    return DegreeProfile(
        check_degrees={int(v): int(c) for v, c in zip(cvals, ccounts)},
        variable_degrees={int(v): int(c) for v, c in zip(vvals, vcounts)},
    )


@dataclass(frozen=True)
class RateReport:
    design_rate: Fraction
    structural_rate: Fraction
    check_count: int
    rank: int


def design_rate(J: int, L: int) -> Fraction:
    """Terminated design rate L / (2(L+J)), i.e. 0.5 / (1 + J/L)."""
    return Fraction(L, 2 * (L + J))


def rates(params: EnsembleParams, seed: int = 0) -> RateReport:
    """Design rate from the closed form plus the structural rate from the
    GF(2) rank of one sampled terminated matrix."""
    code = terminate(sample_ensemble(params, seed))
    H = code.parity_matrix()
    rank = gf2_rank(H)
    return RateReport(
        design_rate=design_rate(params.J, params.L),
        structural_rate=Fraction(code.n - rank, code.n),
        check_count=params.n_checks,
        rank=rank,
    )


GIRTH_INF = -1  # sentinel for an acyclic graph


def girth(code: TerminatedCode) -> int:
    """Length of the shortest cycle in the bipartite Tanner graph.

    Fast path: 4-cycles show up as off-diagonal entries >= 2 in H H^T.
    Otherwise BFS from every variable node with early exit on the best
    bound found so far.
    """
    A = code.sparse_parity_matrix().astype(np.int64)
    G = (A @ A.T).tocoo()
    off = (G.row != G.col) & (G.data >= 2)
    if np.any(off):
        return 4
    return _girth_bfs(code)


def _girth_bfs(code: TerminatedCode) -> int:
    nv, nc = code.n, code.n_checks
    var_adj = [[] for _ in range(nv)]
    chk_adj = [[] for _ in range(nc)]
    for v, c in zip(code.edge_var, code.edge_chk):
        var_adj[v].append(int(c))
        chk_adj[c].append(int(v))
    best = None
    for src in range(nv):
        # BFS over the bipartite graph; node ids: vars 0..nv-1, checks nv..nv+nc-1
        dist = {src: 0}
        parent = {src: -1}
        frontier = [src]
        depth = 0
        while frontier:
            if best is not None and 2 * depth + 2 >= best:
                break
            nxt = []
            for u in frontier:
                if u < nv:
                    nbrs = ((nv + c) for c in var_adj[u])
                else:
                    nbrs = iter(chk_adj[u - nv])
                for w in nbrs:
                    if w == parent[u]:
                        continue
                    if w in dist:
                        cyc = dist[u] + dist[w] + 1
                        if best is None or cyc < best:
                            best = cyc
                    else:
                        dist[w] = depth + 1
                        parent[w] = u
                        nxt.append(w)
            frontier = nxt
            depth += 1
        if best == 4:
            return 4
    return best if best is not None else GIRTH_INF


class EncodingError(RuntimeError):
    """Raised when the termination tail system is inconsistent."""


class _TailSolver:
    """Precomputed GF(2) elimination of the termination-tail system.

    Unknowns: all 2JM tail symbols (times L+1 .. L+J).  Equations: the
    parity checks at times L+1 .. L+2J-1, moved to the right-hand side of
    the syndrome accumulated from the information part.
    """

    def __init__(self, sf: SyndromeFormer):
        p = sf.params
        M, J, L = p.M, p.J, p.L
        self.p = p
        n_unk = 2 * M * J
        n_eq = M * (2 * J - 1)
        A = np.zeros((n_eq, n_unk), dtype=np.uint8)
        for (s, i, h), perm in sf.blocks.items():
            t = s - i
            if t <= L:
                continue
            rowbase = (s - (L + 1)) * M
            colbase = (t - (L + 1)) * 2 * M + h * M
            A[rowbase + perm, colbase + np.arange(M)] ^= 1
        self.elim = Gf2Elimination(A)

    def solve(self, syndrome_tail: np.ndarray) -> np.ndarray:
        x = self.elim.solve(syndrome_tail)
        if x is None:
            raise EncodingError("termination tail system inconsistent")
        return x


_tail_cache: dict = {}


def encode(sf: SyndromeFormer, info: np.ndarray) -> np.ndarray:
    """Systematic encoding: info bits fill the first M symbols of each of
    the L information times, parities come from the invertible half of the
    time-0 block, and the tail (times L+1..L+J) is solved as one linear
    system that drives every remaining parity check to zero."""
    p = sf.params
    M, J, L = p.M, p.J, p.L
    info = np.asarray(info, dtype=np.uint8).ravel() & 1
    if info.size != L * M:
        raise ValueError(f"info length must be L*M = {L * M}, got {info.size}")

    N, S = p.n_var_times, p.n_chk_times
    word = np.zeros(p.n, dtype=np.uint8)
    syndrome = np.zeros(p.n_checks, dtype=np.uint8)

    def add_contribution(t: int, half: int, bits: np.ndarray) -> None:
        for i in range(J):
            s = t + i
            perm = sf.blocks[(s, i, half)]
            syndrome[(s - 1) * M + perm] ^= bits

    for t in range(1, L + 1):
        ibits = info[(t - 1) * M: t * M]
        word[(t - 1) * 2 * M: (t - 1) * 2 * M + M] = ibits
        add_contribution(t, 0, ibits)
        # parity from the check at time t: parity placed via perm1 must
        # cancel the accumulated syndrome there
        perm1 = sf.blocks[(t, 0, 1)]
        pbits = np.empty(M, dtype=np.uint8)
        pbits[np.arange(M)] = syndrome[(t - 1) * M + perm1]
        word[(t - 1) * 2 * M + M: t * 2 * M] = pbits
        add_contribution(t, 1, pbits)

    key = (p, sf.seed)
    solver = _tail_cache.get(key)
    if solver is None:
        solver = _TailSolver(sf)
        _tail_cache[key] = solver
    tail_syn = syndrome[L * M:].copy()
    tail = solver.solve(tail_syn)
    word[L * 2 * M:] = tail
    return word
