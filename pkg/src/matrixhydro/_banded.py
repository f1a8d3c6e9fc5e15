"""Numba kernels for the per-diagonal tridiagonal systems of the quantized Laplacian.

Band ``k`` of an ``N x N`` matrix is its ``k``-th upper diagonal, of length
``N - k``.  Every band carries its own symmetric positive (semi)definite
tridiagonal operator; all of them are stored in padded ``(N, N)`` arrays with
row ``k`` holding band ``k``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def ldlt_factor(diag, off, sizes):
    """LDL^T factorization of a stack of symmetric tridiagonal matrices.

    Parameters
    ----------
    diag : ndarray, shape (nb, n)
        Main diagonals, row ``k`` valid up to ``sizes[k]``.
    off : ndarray, shape (nb, n)
        Off diagonals, row ``k`` valid up to ``sizes[k] - 1``.
    sizes : ndarray of int, shape (nb,)

    Returns
    -------
    d, lower : ndarray
        Pivots and unit-lower multipliers, same layout as the inputs.
    """
    nb, n = diag.shape
    d = np.zeros((nb, n))
    lower = np.zeros((nb, n))
    for k in range(nb):
        m = sizes[k]
        if m == 0:
            continue
        d[k, 0] = diag[k, 0]
        for i in range(m - 1):
            if d[k, i] <= 0.0:
                return d, lower
            lower[k, i] = off[k, i] / d[k, i]
            d[k, i + 1] = diag[k, i + 1] - lower[k, i] * off[k, i]
    return d, lower


@njit(cache=True)
def ldlt_solve(d, lower, m, rhs):
    """Solve one factorized tridiagonal system of size ``m`` in place."""
    for i in range(1, m):
        rhs[i] -= lower[i - 1] * rhs[i - 1]
    for i in range(m):
        rhs[i] /= d[i]
    for i in range(m - 2, -1, -1):
        rhs[i] -= lower[i] * rhs[i + 1]


@njit(cache=True)
def solve_all_bands(w, d_rows, lower_rows, shift):
    """Solve ``-Lap P = W - shift I`` for every band at once.

    ``d_rows[i, k]`` and ``lower_rows[i, k]`` are the LDL^T pivot and
    multiplier of band ``k`` at position ``i`` (the transposed layout of
    :func:`ldlt_factor`).  The substitutions sweep over matrix rows with all
    bands in the inner loop, so ``w`` and the result are traversed row by
    row.  Only the upper triangle (diagonal included) of ``w`` is read.

    The band-0 system is singular with the identity as null vector; its last
    unknown is pinned to zero and the mean is removed afterwards so that
    ``tr P = 0``.

    Returns
    -------
    out : ndarray
        The skew-Hermitian solution.
    wmax : float
        Largest modulus among the entries of ``w`` that were read.
    """
    n = w.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    wmax = 0.0
    # forward substitution, y[k, i] stored at out[i, i + k]
    for i in range(n):
        for k in range(n - i):
            v = w[i, i + k]
            a = v.real * v.real + v.imag * v.imag
            if a > wmax:
                wmax = a
            if k == 0:
                if i == n - 1:
                    out[i, i] = 0.0
                    continue
                v -= shift
            if i > 0:
                v -= lower_rows[i - 1, k] * out[i - 1, i - 1 + k]
            out[i, i + k] = v
    # diagonal scaling and back substitution
    for i in range(n - 1, -1, -1):
        for k in range(n - i):
            if k == 0 and i == n - 1:
                continue
            v = out[i, i + k] / d_rows[i, k]
            m = n - 1 if k == 0 else n - k
            if i + 1 < m:
                v -= lower_rows[i, k] * out[i + 1, i + 1 + k]
            out[i, i + k] = v
    mean = 0.0j
    for i in range(n):
        mean += out[i, i]
    mean /= n
    for i in range(n):
        out[i, i] -= mean
    # lower triangle, in cache-sized tiles
    bs = 32
    for i0 in range(0, n, bs):
        for j0 in range(i0, n, bs):
            for i in range(i0, min(i0 + bs, n)):
                for j in range(max(j0, i + 1), min(j0 + bs, n)):
                    out[j, i] = -np.conj(out[i, j])
    return out, np.sqrt(wmax)


@njit(cache=True)
def apply_all_bands(p, diag, off):
    """Apply the band operators (that is, ``-Lap``) to the upper triangle of ``p``."""
    n = p.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    for k in range(n):
        m = n - k
        for i in range(m):
            acc = diag[k, i] * p[i, i + k]
            if i > 0:
                acc += off[k, i - 1] * p[i - 1, i - 1 + k]
            if i < m - 1:
                acc += off[k, i] * p[i + 1, i + 1 + k]
            out[i, i + k] = acc
            if k > 0:
                out[i + k, i] = -np.conj(acc)
    return out
