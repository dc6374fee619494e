"""Quantized symmetric LLR densities and the two message-passing updates.

Densities are conditioned on the all-zero codeword and live on a uniform
grid z = j*delta, j = -half..half, with saturation mass folded into the
end bins and *known* messages carried as explicit point masses at +-inf.

Variable-node combining is exact on the grid (index addition), so it is a
plain direct convolution.  Check-node combining uses a precomputed
quantization table of the pairwise tanh rule, applied with a compiled
accumulation kernel; the table is the (sign, log-magnitude) dual domain
collapsed back onto the primal grid, so the update is the exact BP rule up
to one rounding per pairwise combination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import ndtr


class NumericalFailure(RuntimeError):
    """Mass accounting or quadrature drifted beyond tolerance."""


class GridError(ValueError):
    """Grid cannot represent the requested density (saturation too heavy)."""


MASS_TOL = 1e-9


@njit(cache=True)
def _box_accum(a, b, table, out):  # pragma: no cover - compiled
    n = a.shape[0]
    for i in range(n):
        ai = a[i]
        if ai == 0.0:
            continue
        row = table[i]
        for j in range(n):
            out[row[j]] += ai * b[j]


@njit(cache=True)
def _box_accum_self(a, table, out):  # pragma: no cover - compiled
    n = a.shape[0]
    for i in range(n):
        ai = a[i]
        if ai == 0.0:
            continue
        row = table[i]
        out[row[i]] += ai * ai
        for j in range(i + 1, n):
            out[row[j]] += 2.0 * ai * a[j]


class LlrGrid:
    """Uniform LLR grid with cached pairwise check-combine table."""

    _instances: dict = {}

    def __new__(cls, delta: float, rmax: float):
        key = (float(delta), float(rmax))
        inst = cls._instances.get(key)
        if inst is None:
            inst = super().__new__(cls)
            inst._init(delta, rmax)
            cls._instances[key] = inst
        return inst

    def _init(self, delta: float, rmax: float) -> None:
        if delta <= 0:
            raise ValueError("delta must be positive")
        half = rmax / delta
        if abs(half - round(half)) > 1e-9:
            raise ValueError("rmax must be an integer multiple of delta")
        self.delta = float(delta)
        self.rmax = float(rmax)
        self.half = int(round(half))
        self.n = 2 * self.half + 1
        if self.n >= 2 ** 15:
            raise ValueError("grid too fine for the int16 combine table")
        self.values = (np.arange(self.n) - self.half) * self.delta
        self.bhatt_weights = np.exp(-self.values / 2.0)
        self._table: np.ndarray | None = None

    def __reduce__(self):
        return (LlrGrid, (self.delta, self.rmax))

    def index_of(self, z: float) -> int:
        return int(np.clip(round(z / self.delta), -self.half, self.half)) + self.half

    @property
    def box_table(self) -> np.ndarray:
        if self._table is None:
            self._table = self._build_table()
        return self._table

    def _build_table(self) -> np.ndarray:
        n, half, delta = self.n, self.half, self.delta
        mags = np.abs(self.values)
        signs = np.sign(self.values)
        table = np.empty((n, n), dtype=np.int16)
        chunk = max(1, (2 ** 22) // n)
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            a = mags[lo:hi, None]
            b = mags[None, :]
            # |boxplus| = min(a,b) + log1p(e^-(a+b)) - log1p(e^-|a-b|)
            f = np.minimum(a, b)
            f += np.log1p(np.exp(-(a + b)))
            f -= np.log1p(np.exp(-np.abs(a - b)))
            f *= signs[lo:hi, None] * signs[None, :]
            idx = np.rint(f / delta)
            np.clip(idx, -half, half, out=idx)
            table[lo:hi] = (idx + half).astype(np.int16)
        return table


@dataclass
class Density:
    """Quantized message density conditioned on the zero symbol."""

    grid: LlrGrid
    vec: np.ndarray
    p_pos_inf: float = 0.0
    p_neg_inf: float = 0.0

    def copy(self) -> "Density":
        return Density(self.grid, self.vec.copy(), self.p_pos_inf, self.p_neg_inf)

    def mass(self) -> float:
        return float(self.vec.sum()) + self.p_pos_inf + self.p_neg_inf

    def renormalize(self, tol: float = MASS_TOL) -> "Density":
        total = self.mass()
        if abs(total - 1.0) > tol:
            raise NumericalFailure(f"density mass drifted to {total!r}")
        self.vec /= total
        self.p_pos_inf /= total
        self.p_neg_inf /= total
        return self

    def bhattacharyya(self) -> float:
        val = float(self.vec @ self.grid.bhatt_weights)
        if self.p_neg_inf > 0.0:
            val = 1.0
        return min(1.0, max(0.0, val))

    def error_prob(self) -> float:
        half = self.grid.half
        below = float(self.vec[:half].sum())
        at = float(self.vec[half])
        return below + 0.5 * at + self.p_neg_inf

    def symmetry_defect(self) -> float:
        """Max deviation from density(-z) = e^{-z} density(z) on z > 0."""
        v = self.vec
        half = self.grid.half
        pos = v[half + 1:]
        neg = v[half - 1::-1]
        expw = np.exp(-self.grid.values[half + 1:])
        return float(np.max(np.abs(neg - expw * pos), initial=0.0))


def point_mass(grid: LlrGrid, z: float) -> Density:
    vec = np.zeros(grid.n)
    if math.isinf(z):
        if z > 0:
            return Density(grid, vec, p_pos_inf=1.0)
        return Density(grid, vec, p_neg_inf=1.0)
    vec[grid.index_of(z)] = 1.0
    return Density(grid, vec)


def perfect_density(grid: LlrGrid) -> Density:
    return point_mass(grid, math.inf)


def bec_density(grid: LlrGrid, eps: float) -> Density:
    vec = np.zeros(grid.n)
    vec[grid.half] = eps
    return Density(grid, vec, p_pos_inf=1.0 - eps)


def gaussian_llr_density(grid: LlrGrid, sigma: float,
                         max_saturation: float = 1e-3) -> Density:
    """Channel LLR density for BiAWGN under the zero codeword:
    Gaussian with mean 2/sigma^2 and variance 4/sigma^2."""
    mean = 2.0 / sigma ** 2
    sd = 2.0 / sigma
    edges = (np.arange(grid.n + 1) - grid.half - 0.5) * grid.delta
    cdf = ndtr((edges - mean) / sd)
    vec = np.diff(cdf)
    lo_tail = float(cdf[0])
    hi_tail = float(1.0 - cdf[-1])
    vec[0] += lo_tail
    vec[-1] += hi_tail
    if lo_tail + hi_tail > max_saturation:
        raise GridError(
            f"saturation mass {lo_tail + hi_tail:.3e} exceeds {max_saturation:.1e};"
            " enlarge rmax")
    return Density(grid, vec)


def box_conv(a: Density, b: Density) -> Density:
    """Check-node combine (tanh rule) of two independent message densities."""
    grid = a.grid
    out = np.zeros(grid.n)
    av_has = a.vec.any()
    bv_has = b.vec.any()
    if av_has and bv_has:
        _box_accum(a.vec, b.vec, grid.box_table, out)
    # a known message leaves the other density unchanged (up to sign)
    if a.p_pos_inf:
        out += a.p_pos_inf * b.vec
    if a.p_neg_inf:
        out += a.p_neg_inf * b.vec[::-1]
    if b.p_pos_inf:
        out += b.p_pos_inf * a.vec
    if b.p_neg_inf:
        out += b.p_neg_inf * a.vec[::-1]
    p_pos = a.p_pos_inf * b.p_pos_inf + a.p_neg_inf * b.p_neg_inf
    p_neg = a.p_pos_inf * b.p_neg_inf + a.p_neg_inf * b.p_pos_inf
    return Density(grid, out, p_pos, p_neg)


def box_conv_self(a: Density) -> Density:
    """box_conv(a, a) using the symmetry of the table (half the work)."""
    grid = a.grid
    out = np.zeros(grid.n)
    if a.vec.any():
        _box_accum_self(a.vec, grid.box_table, out)
    if a.p_pos_inf:
        out += 2.0 * a.p_pos_inf * a.vec
    if a.p_neg_inf:
        out += 2.0 * a.p_neg_inf * a.vec[::-1]
    p_pos = a.p_pos_inf ** 2 + a.p_neg_inf ** 2
    p_neg = 2.0 * a.p_pos_inf * a.p_neg_inf
    return Density(grid, out, p_pos, p_neg)


def sum_conv(a: Density, b: Density) -> Density:
    """Variable-node combine: densities of independent LLR summands."""
    grid = a.grid
    if (a.p_pos_inf and b.p_neg_inf) or (a.p_neg_inf and b.p_pos_inf):
        raise NumericalFailure("sum of +inf and -inf messages is undefined")
    full = np.convolve(a.vec, b.vec)
    half = grid.half
    out = full[half: half + grid.n].copy()
    out[0] += full[:half].sum()
    out[-1] += full[half + grid.n:].sum()
    a_fin = float(a.vec.sum())
    b_fin = float(b.vec.sum())
    p_pos = a.p_pos_inf * (b_fin + b.p_pos_inf) + b.p_pos_inf * (a_fin + a.p_pos_inf) \
        - a.p_pos_inf * b.p_pos_inf
    p_neg = a.p_neg_inf * (b_fin + b.p_neg_inf) + b.p_neg_inf * (a_fin + a.p_neg_inf) \
        - a.p_neg_inf * b.p_neg_inf
    return Density(grid, out, p_pos, p_neg)
