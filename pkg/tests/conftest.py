"""Shared fixtures for the scldpc test suite."""

import numpy as np
import pytest

from scldpc.ensemble import EnsembleParams, sample_ensemble, terminate


@pytest.fixture(scope="session")
def small_params():
    return EnsembleParams(J=3, M=4, L=8)


@pytest.fixture(scope="session")
def small_sf(small_params):
    return sample_ensemble(small_params, seed=0)


@pytest.fixture(scope="session")
def small_code(small_sf):
    return terminate(small_sf)


def dense_gf2_rank(mat) -> int:
    """Independent plain-python row-reduction oracle over GF(2)."""
    a = (np.array(mat, dtype=np.uint8) % 2).tolist()
    if not a:
        return 0
    nrows, ncols = len(a), len(a[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, nrows) if a[r][col]), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        for r in range(nrows):
            if r != rank and a[r][col]:
                a[r] = [x ^ y for x, y in zip(a[r], a[rank])]
        rank += 1
        if rank == nrows:
            break
    return rank
