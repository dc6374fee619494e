"""Reader/writer for the standard alist sparse-matrix exchange format.

Layout: line 1 "n m"; line 2 "max_var_deg max_chk_deg"; line 3 variable
degrees; line 4 check degrees; then one 1-based neighbor list per variable
and one per check, zero-padded to the maximum degree.
"""

from __future__ import annotations

import numpy as np


class AlistError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class AlistMatrix:
    """Sparse bipartite adjacency: variable and check neighbor lists."""

    def __init__(self, var_neighbors: list, chk_neighbors: list):
        self.var_neighbors = [sorted(v) for v in var_neighbors]
        self.chk_neighbors = [sorted(c) for c in chk_neighbors]

    @property
    def n(self) -> int:
        return len(self.var_neighbors)

    @property
    def m(self) -> int:
        return len(self.chk_neighbors)

    def __eq__(self, other) -> bool:
        return (self.var_neighbors == other.var_neighbors
                and self.chk_neighbors == other.chk_neighbors)

    @classmethod
    def from_code(cls, code) -> "AlistMatrix":
        var_nb = [[] for _ in range(code.n)]
        chk_nb = [[] for _ in range(code.n_checks)]
        for v, c in zip(code.edge_var, code.edge_chk):
            var_nb[int(v)].append(int(c))
            chk_nb[int(c)].append(int(v))
        return cls(var_nb, chk_nb)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        ev, ec = [], []
        for v, nbrs in enumerate(self.var_neighbors):
            for c in nbrs:
                ev.append(v)
                ec.append(c)
        return np.array(ev, dtype=np.int64), np.array(ec, dtype=np.int64)


def export_alist(matrix: AlistMatrix, path: str) -> None:
    vdeg = [len(v) for v in matrix.var_neighbors]
    cdeg = [len(c) for c in matrix.chk_neighbors]
    maxv = max(vdeg) if vdeg else 0
    maxc = max(cdeg) if cdeg else 0
    lines = [
        f"{matrix.n} {matrix.m}",
        f"{maxv} {maxc}",
        " ".join(str(d) for d in vdeg),
        " ".join(str(d) for d in cdeg),
    ]
    for nbrs in matrix.var_neighbors:
        padded = [c + 1 for c in nbrs] + [0] * (maxv - len(nbrs))
        lines.append(" ".join(str(x) for x in padded))
    for nbrs in matrix.chk_neighbors:
        padded = [v + 1 for v in nbrs] + [0] * (maxc - len(nbrs))
        lines.append(" ".join(str(x) for x in padded))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _ints(tokens: list, lineno: int) -> list:
    try:
        return [int(t) for t in tokens]
    except ValueError as exc:
        raise AlistError(lineno, f"non-integer token: {exc}")


def import_alist(path: str) -> AlistMatrix:
    with open(path) as fh:
        raw = fh.read().splitlines()
    rows = [(i + 1, line.split()) for i, line in enumerate(raw) if line.strip()]
    if len(rows) < 4:
        raise AlistError(len(rows), "truncated header")
    (l1, t1), (l2, t2), (l3, t3), (l4, t4) = rows[:4]
    n, m = _ints(t1, l1)[:2] if len(t1) >= 2 else (_ints(t1, l1) + [None])[:2]
    if m is None:
        raise AlistError(l1, "expected 'n m'")
    maxv, maxc = _ints(t2, l2)[:2] if len(t2) >= 2 else (None, None)
    if maxc is None:
        raise AlistError(l2, "expected 'max_var_deg max_chk_deg'")
    vdeg = _ints(t3, l3)
    cdeg = _ints(t4, l4)
    if len(vdeg) != n:
        raise AlistError(l3, f"expected {n} variable degrees, got {len(vdeg)}")
    if len(cdeg) != m:
        raise AlistError(l4, f"expected {m} check degrees, got {len(cdeg)}")
    body = rows[4:]
    if len(body) < n + m:
        raise AlistError(rows[-1][0], f"truncated: expected {n + m} neighbor lists, got {len(body)}")

    def read_list(row, deg, limit, kind):
        lineno, toks = row
        vals = _ints(toks, lineno)
        nonzero = [x for x in vals if x != 0]
        if len(nonzero) != deg:
            raise AlistError(lineno, f"expected {deg} {kind} neighbors, got {len(nonzero)}")
        for x in nonzero:
            if not (1 <= x <= limit):
                raise AlistError(lineno, f"{kind} neighbor {x} out of range 1..{limit}")
        return [x - 1 for x in nonzero]

    var_nb = [read_list(body[i], vdeg[i], m, "variable") for i in range(n)]
    chk_nb = [read_list(body[n + i], cdeg[i], n, "check") for i in range(m)]
    # cross-check consistency of the two adjacency views
    fwd = {(v, c) for v, nbrs in enumerate(var_nb) for c in nbrs}
    bwd = {(v, c) for c, nbrs in enumerate(chk_nb) for v in nbrs}
    if fwd != bwd:
        raise AlistError(body[n][0], "variable and check neighbor lists disagree")
    return AlistMatrix(var_nb, chk_nb)
