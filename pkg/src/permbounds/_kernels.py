"""Numba-jitted inner loops for the exact permanent oracles.

Kept separate so the rest of the package stays plain numpy.  First call per
process pays the JIT cost; compiled code is cached on disk.
"""

import numpy as np
from numba import njit

# refresh the incremental row sums from scratch this often to stop drift
_REFRESH = 1 << 16


@njit(cache=True)
def ryser_sum(a):
    """Signed inclusion-exclusion sum over column subsets in Gray-code order.

    Returns sum over nonempty S of (-1)^(n-|S|) * prod_i sum_{j in S} a_ij,
    which equals the permanent.  Row sums are updated incrementally (one
    column enters or leaves per step) and rebuilt periodically; the total
    is accumulated with Kahan compensation.
    """
    n = a.shape[0]
    row = np.zeros(n)
    total = 0.0
    comp = 0.0
    size = 0
    for k in range(1, 1 << n):
        kk = k
        j = 0
        while kk & 1 == 0:
            kk >>= 1
            j += 1
        gray = k ^ (k >> 1)
        if gray & (1 << j):
            size += 1
            for i in range(n):
                row[i] += a[i, j]
        else:
            size -= 1
            for i in range(n):
                row[i] -= a[i, j]
        if k % _REFRESH == 0:
            for i in range(n):
                s = 0.0
                for jj in range(n):
                    if gray & (1 << jj):
                        s += a[i, jj]
                row[i] = s
        prod = 1.0
        for i in range(n):
            prod *= row[i]
        if (n - size) & 1:
            prod = -prod
        y = prod - comp
        t = total + prod - comp
        comp = (t - total) - y
        total = t
    return total


@njit(cache=True)
def per_m_enumerate(a, row_subsets, col_subsets, perms):
    """Sum of permanents of all m x m submatrices, each by permutation
    enumeration.

    row_subsets, col_subsets: (C, m) index arrays of the size-m subsets.
    perms: (m!, m) array of permutations of range(m).
    """
    n_sub = row_subsets.shape[0]
    m = row_subsets.shape[1]
    n_perm = perms.shape[0]
    total = 0.0
    for ri in range(n_sub):
        for ci in range(n_sub):
            sub = 0.0
            for pi in range(n_perm):
                prod = 1.0
                for t in range(m):
                    prod *= a[row_subsets[ri, t], col_subsets[ci, perms[pi, t]]]
                sub += prod
            total += sub
    return total
