"""Dense GF(2) linear algebra on bit-packed matrices.

Rows are packed into uint64 words (64 columns per word).  This is fast
enough for the matrix sizes we meet here (a few thousand rows/columns):
elimination is a python loop over pivots with vectorized row XORs.
"""

from __future__ import annotations

import numpy as np


def pack_rows(mat: np.ndarray) -> np.ndarray:
    """Pack a binary matrix (any integer/bool dtype) into uint64 words per row."""
    mat = np.asarray(mat, dtype=np.uint8) & 1
    nrows, ncols = mat.shape
    nwords = (ncols + 63) // 64
    padded = np.zeros((nrows, nwords * 64), dtype=np.uint8)
    padded[:, :ncols] = mat
    # bit i of word w is column w*64 + i
    bits = padded.reshape(nrows, nwords, 64).astype(np.uint64)
    shifts = np.arange(64, dtype=np.uint64)
    return (bits << shifts).sum(axis=2, dtype=np.uint64)


def unpack_rows(packed: np.ndarray, ncols: int) -> np.ndarray:
    nrows, nwords = packed.shape
    shifts = np.arange(64, dtype=np.uint64)
    bits = (packed[:, :, None] >> shifts) & np.uint64(1)
    return bits.reshape(nrows, nwords * 64)[:, :ncols].astype(np.uint8)


def _get_bit(row: np.ndarray, col: int) -> int:
    return int((row[col // 64] >> np.uint64(col % 64)) & np.uint64(1))


class Gf2Elimination:
    """Row echelon form of a packed GF(2) matrix, keeping the transform.

    Solves x for A x = b repeatedly once the elimination is done.
    """

    def __init__(self, mat: np.ndarray):
        mat = np.asarray(mat, dtype=np.uint8) & 1
        self.nrows, self.ncols = mat.shape
        self._rows = pack_rows(mat)
        # transform T with T @ A = R (row-reduced); packed identity
        self._trans = pack_rows(np.eye(self.nrows, dtype=np.uint8))
        self.pivot_cols: list[int] = []
        self._pivot_row_of_col: dict[int, int] = {}
        self._eliminate()

    def _eliminate(self) -> None:
        rows, trans = self._rows, self._trans
        r = 0
        for col in range(self.ncols):
            if r >= self.nrows:
                break
            word, bit = col // 64, np.uint64(col % 64)
            colbits = (rows[r:, word] >> bit) & np.uint64(1)
            hits = np.nonzero(colbits)[0]
            if hits.size == 0:
                continue
            piv = r + int(hits[0])
            if piv != r:
                rows[[r, piv]] = rows[[piv, r]]
                trans[[r, piv]] = trans[[piv, r]]
            # clear the column everywhere else (Gauss-Jordan)
            colall = (rows[:, word] >> bit) & np.uint64(1)
            mask = colall.astype(bool)
            mask[r] = False
            if mask.any():
                rows[mask] ^= rows[r]
                trans[mask] ^= trans[r]
            self._pivot_row_of_col[col] = r
            self.pivot_cols.append(col)
            r += 1
        self.rank = r

    def solve(self, b: np.ndarray) -> np.ndarray | None:
        """Return one solution x of A x = b (free variables zero), or None."""
        b = np.asarray(b, dtype=np.uint8) & 1
        if b.shape != (self.nrows,):
            raise ValueError("rhs length mismatch")
        # y = T @ b; y_i is the parity of (transform row i AND b)
        y = np.zeros(self.nrows, dtype=np.uint8)
        if b.any():
            bwords = pack_rows(b.reshape(1, -1))[0]
            y = _parity_per_row(self._trans & bwords[None, :])
        x = np.zeros(self.ncols, dtype=np.uint8)
        for col, row in self._pivot_row_of_col.items():
            x[col] = y[row]
        # consistency: rows beyond rank must have zero rhs
        if np.any(y[self.rank:]):
            return None
        return x


def _parity_per_row(words: np.ndarray) -> np.ndarray:
    x = words.copy()
    x ^= x >> np.uint64(32)
    x ^= x >> np.uint64(16)
    x ^= x >> np.uint64(8)
    x ^= x >> np.uint64(4)
    x ^= x >> np.uint64(2)
    x ^= x >> np.uint64(1)
    return (x & np.uint64(1)).sum(axis=1).astype(np.uint8) & 1


def gf2_rank(mat: np.ndarray) -> int:
    """Rank over GF(2) by elimination on a packed copy (no transform kept)."""
    mat = np.asarray(mat, dtype=np.uint8) & 1
    if mat.size == 0:
        return 0
    rows = pack_rows(mat)
    nrows, ncols = mat.shape
    r = 0
    for col in range(ncols):
        if r >= nrows:
            break
        word, bit = col // 64, np.uint64(col % 64)
        colbits = (rows[r:, word] >> bit) & np.uint64(1)
        hits = np.nonzero(colbits)[0]
        if hits.size == 0:
            continue
        piv = r + int(hits[0])
        if piv != r:
            rows[[r, piv]] = rows[[piv, r]]
        below = (rows[r + 1:, word] >> bit) & np.uint64(1)
        mask = below.astype(bool)
        if mask.any():
            rows[r + 1:][mask] ^= rows[r]
        r += 1
    return r


def gf2_nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis of the right null space of a (small) binary matrix, as rows."""
    mat = np.asarray(mat, dtype=np.uint8) & 1
    m, n = mat.shape
    a = mat.copy()
    pivots = []
    r = 0
    for col in range(n):
        if r >= m:
            break
        hits = np.nonzero(a[r:, col])[0]
        if hits.size == 0:
            continue
        piv = r + int(hits[0])
        a[[r, piv]] = a[[piv, r]]
        mask = a[:, col].astype(bool)
        mask[r] = False
        a[mask] ^= a[r]
        pivots.append(col)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for bi, fc in enumerate(free):
        basis[bi, fc] = 1
        for row, pc in enumerate(pivots):
            basis[bi, pc] = a[row, fc]
    return basis
