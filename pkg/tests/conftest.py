import numpy as np
import pytest

import pel


def random_density(rng, basis, support=None):
    """Random PSD trace-1 state with total photon number <= support."""
    if support is None:
        support = basis.cutoff
    sel = np.flatnonzero(basis.totals <= support)
    k = sel.size
    a = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    block = a @ a.conj().T
    block /= block.trace().real
    elements = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    elements[np.ix_(sel, sel)] = block
    return pel.DensityMatrix(basis, elements)


def inertia_min_eigenvalue(h, tol=1e-9):
    """Independent smallest-eigenvalue oracle: bisection on Sylvester inertia
    computed from an LDL^H factorization (no eigensolver involved)."""
    from scipy.linalg import ldl

    h = np.asarray(h, dtype=complex)
    n = h.shape[0]

    def count_below(x):
        _, d, _ = ldl(h - x * np.eye(n))
        count = 0
        i = 0
        while i < n:
            if i + 1 < n and abs(d[i + 1, i]) > 1e-300:
                a, b, c = d[i, i].real, d[i + 1, i], d[i + 1, i + 1].real
                mid = 0.5 * (a + c)
                rad = np.sqrt((0.5 * (a - c)) ** 2 + abs(b) ** 2)
                count += int(mid - rad < 0) + int(mid + rad < 0)
                i += 2
            else:
                count += int(d[i, i].real < 0)
                i += 1
        return count

    bound = float(np.abs(h).sum(axis=1).max()) + 1.0
    lo, hi = -bound, bound
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if count_below(mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
