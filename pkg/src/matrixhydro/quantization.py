"""Quantization of functions on the sphere as skew-Hermitian matrices.

The building blocks are the spin-``s`` generators ``S1, S2, S3`` of an
irreducible ``N``-dimensional representation of so(3), in skew-Hermitian form
so that ``[S1, S2] = S3`` and cyclic.  From them the quantized (Hoppe-Yau)
Laplacian

    Lap(P) = sum_a [S_a, [S_a, P]]

is built.  ``Lap`` maps every diagonal of a matrix to itself, so ``-Lap``
splits into ``N`` symmetric tridiagonal operators, one per diagonal offset.
Each is factorized once, which makes ``laplacian_solve`` an ``O(N^2)``
operation.  Diagonalizing the same tridiagonals gives the eigenmatrices
``T[l, m]`` that play the role of the real spherical harmonics ``Y[l, m]``.

Coefficient vectors use the flat index ``k = l**2 + l + m`` with
``l = 0..N-1`` and ``m = -l..l``.  Inner products of matrices are taken as
``<A, B> = (4 pi / N) Re tr(A^H B)``, under which the ``T[l, m]`` are
orthonormal and ``T[0, 0] = -i I / sqrt(4 pi)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, eigh_tridiagonal

from matrixhydro._banded import apply_all_bands, ldlt_factor, solve_all_bands

__all__ = [
    "NonTracelessError",
    "SpinOperators",
    "QuantizedLaplacian",
    "QuantBasis",
    "hbar",
    "elm2ind",
    "ind2elm",
    "inner",
    "build_spin_operators",
    "build_quantized_laplacian",
    "laplacian_apply",
    "laplacian_solve",
    "build_basis",
    "shr2mat",
    "mat2shr",
]


class NonTracelessError(ValueError):
    """Raised when a matrix with a nonzero trace is passed where su(N) is required."""


def hbar(n: int) -> float:
    """Quantization scale ``2 / sqrt(N**2 - 1)``."""
    if n < 2:
        raise ValueError(f"hbar is defined for n >= 2, got {n}")
    return 2.0 / np.sqrt(n * n - 1.0)


def elm2ind(ell, m):
    """Flat coefficient index of ``(l, m)``."""
    return ell * ell + ell + m


def ind2elm(k):
    """Inverse of :func:`elm2ind`, returns ``(l, m)``."""
    k = np.asarray(k)
    ell = np.floor(np.sqrt(k)).astype(int)
    return ell, k - ell * ell - ell


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized real inner product ``(4 pi / N) Re tr(a^H b)``."""
    n = a.shape[0]
    return float(4.0 * np.pi / n * np.vdot(a, b).real)


@dataclass(frozen=True)
class SpinOperators:
    """Skew-Hermitian generators of the irreducible spin-``(n-1)/2`` representation.

    The basis is ordered by descending magnetic number, so ``s3`` is
    ``-i diag(s, s-1, ..., -s)`` and index 0 sits at the north pole.
    """

    n: int
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    hbar: float

    @property
    def generators(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.s1, self.s2, self.s3


def build_spin_operators(n: int) -> SpinOperators:
    """Build the spin operators for matrix size ``n`` from the ladder construction."""
    n = int(n)
    if n < 1:
        raise ValueError(f"matrix size must be >= 1, got {n}")
    s = (n - 1) / 2.0
    mag = s - np.arange(n)
    # <m+1| J+ |m> = sqrt(s(s+1) - m(m+1)), placed at (i-1, i)
    ladder = np.sqrt(np.maximum(s * (s + 1) - mag[1:] * (mag[1:] + 1), 0.0))
    jplus = np.diag(ladder, 1)
    j1 = 0.5 * (jplus + jplus.T)
    j2 = -0.5j * (jplus - jplus.T)
    j3 = np.diag(mag)
    return SpinOperators(
        n=n,
        s1=-1j * j1,
        s2=(-1j * j2).astype(complex),
        s3=(-1j * j3).astype(complex),
        hbar=hbar(n) if n >= 2 else np.inf,
    )


@dataclass(frozen=True, eq=False)
class QuantizedLaplacian:
    """Band-split ``-Lap`` with one LDL^T factorization per diagonal offset.

    ``band_diag[k, :n-k]`` and ``band_off[k, :n-k-1]`` hold the symmetric
    tridiagonal restriction of ``-Lap`` to the ``k``-th upper diagonal.  The
    band-0 factorization covers only its leading ``n-1`` block; the identity
    direction spanning the null space is pinned out.  ``piv`` and ``mult``
    hold the factors with row ``k`` for band ``k``; ``piv_rows`` and
    ``mult_rows`` are their transposes, the layout used by the solver.
    """

    n: int
    spin: SpinOperators
    band_diag: np.ndarray
    band_off: np.ndarray
    piv: np.ndarray
    mult: np.ndarray
    piv_rows: np.ndarray
    mult_rows: np.ndarray

    @property
    def hbar(self) -> float:
        return self.spin.hbar

    def band(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(diag, off)`` of the band-``k`` operator of ``-Lap``."""
        m = self.n - k
        return self.band_diag[k, :m], self.band_off[k, : max(m - 1, 0)]

    def band_matrix(self, k: int) -> np.ndarray:
        d, e = self.band(k)
        return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)

    @property
    def null_vector(self) -> np.ndarray:
        """Unit vector of the band-0 null space (the identity direction)."""
        return np.full(self.n, 1.0 / np.sqrt(self.n))


def _sparse_spin(spin: SpinOperators):
    return [sp.csr_matrix(s) for s in spin.generators]


def _double_commutator_sparse(gens, p):
    out = None
    for s in gens:
        c = s @ p - p @ s
        term = s @ c - c @ s
        out = term if out is None else out + term
    return out


def _assemble_band(gens, n: int, k: int, tol: float):
    m = n - k
    diag = np.zeros(m)
    off = np.zeros(max(m - 1, 0))
    sub = np.zeros(max(m - 1, 0))
    for color in range(min(3, m)):
        rows = np.arange(color, m, 3)
        probe = sp.csr_matrix(
            (np.ones(rows.size, dtype=complex), (rows, rows + k)), shape=(n, n)
        )
        image = -_double_commutator_sparse(gens, probe)
        image = sp.coo_matrix(image)
        image.sum_duplicates()
        on_band = image.col - image.row == k
        if np.any(np.abs(image.data[~on_band]) > tol):
            raise LinAlgError(f"Laplacian leaked out of diagonal {k}")
        g = np.zeros(m, dtype=complex)
        g[image.row[on_band]] = image.data[on_band]
        if np.any(np.abs(g.imag) > tol):
            raise LinAlgError(f"band {k} operator is not real")
        g = g.real
        diag[rows] = g[rows]
        lo = rows[rows >= 1]
        off[lo - 1] = g[lo - 1]
        hi = rows[rows <= m - 2]
        sub[hi] = g[hi + 1]
    if np.any(np.abs(off - sub) > tol):
        raise LinAlgError(f"band {k} operator is not symmetric")
    return diag, off


def build_quantized_laplacian(n: int) -> QuantizedLaplacian:
    """Assemble and factorize the band operators of ``-Lap`` for size ``n``.

    Each band operator is read off by applying the double commutator to
    single-entry probe matrices (three interleaved probes per band suffice
    because the operator is tridiagonal).
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"quantized Laplacian requires n >= 2, got {n}")
    spin = build_spin_operators(n)
    gens = _sparse_spin(spin)
    tol = 1e-10 * n * n
    band_diag = np.zeros((n, n))
    band_off = np.zeros((n, n))
    for k in range(n):
        d, e = _assemble_band(gens, n, k, tol)
        band_diag[k, : d.size] = d
        band_off[k, : e.size] = e
    sizes = n - np.arange(n)
    sizes[0] = n - 1
    piv, mult = ldlt_factor(band_diag, band_off, sizes)
    for k in range(n):
        if np.any(piv[k, : sizes[k]] <= 0.0):
            raise LinAlgError(f"band {k} of -Lap is not positive definite")
    return QuantizedLaplacian(
        n,
        spin,
        band_diag,
        band_off,
        piv,
        mult,
        np.ascontiguousarray(piv.T),
        np.ascontiguousarray(mult.T),
    )


def _check_size(lap_n: int, a: np.ndarray):
    a = np.asarray(a)
    if a.shape != (lap_n, lap_n):
        raise ValueError(f"expected a {lap_n}x{lap_n} matrix, got shape {a.shape}")
    return a


def laplacian_apply(lap: QuantizedLaplacian, p: np.ndarray) -> np.ndarray:
    """Return ``sum_a [S_a, [S_a, P]]`` by dense matrix products."""
    p = _check_size(lap.n, p)
    out = np.zeros((lap.n, lap.n), dtype=complex)
    for s in lap.spin.generators:
        c = s @ p - p @ s
        out += s @ c - c @ s
    return out


def laplacian_apply_banded(lap: QuantizedLaplacian, p: np.ndarray) -> np.ndarray:
    """Return ``Lap(P)`` for skew-Hermitian ``P`` through the band operators."""
    p = np.ascontiguousarray(_check_size(lap.n, p), dtype=complex)
    return -apply_all_bands(p, lap.band_diag, lap.band_off)


def laplacian_solve(
    lap: QuantizedLaplacian, w: np.ndarray, project: bool = False
) -> np.ndarray:
    """Solve ``-Lap(P) = W`` for the traceless skew-Hermitian ``P``.

    Only the upper triangle of ``w`` is read.  A nonzero trace has no
    preimage and raises :class:`NonTracelessError`, unless ``project`` is set,
    in which case the trace part is dropped.  Traces at roundoff level are
    always dropped.
    """
    w = np.ascontiguousarray(_check_size(lap.n, w), dtype=complex)
    tr = np.trace(w)
    p, wmax = solve_all_bands(w, lap.piv_rows, lap.mult_rows, complex(tr) / lap.n)
    if not project and abs(tr) > 1e-10 * (1.0 + wmax) * lap.n:
        raise NonTracelessError(f"input has trace {tr:.3e}; not in su(N)")
    return p


@dataclass(frozen=True, eq=False)
class QuantBasis:
    """Eigenmatrices of the quantized Laplacian, stored one band at a time.

    ``vectors[k]`` has shape ``(n-k, n-k)``; column ``j`` is the unit
    eigenvector for ``l = k + j`` with its first component made positive.
    """

    n: int
    vectors: tuple
    eigenvalues: tuple

    @property
    def scale(self) -> float:
        return np.sqrt(self.n / (4.0 * np.pi))

    def element(self, ell: int, m: int) -> np.ndarray:
        """Dense ``T[l, m]``."""
        if not (0 <= ell < self.n and -ell <= m <= ell):
            raise IndexError(f"(l, m) = ({ell}, {m}) out of range for n = {self.n}")
        c = np.zeros(self.n * self.n)
        c[elm2ind(ell, m)] = 1.0
        return shr2mat(c, self, allow_trace=True)


def build_basis(lap: QuantizedLaplacian) -> QuantBasis:
    """Diagonalize every band operator and fix eigenvector signs."""
    n = lap.n
    vectors = []
    eigenvalues = []
    for k in range(n):
        d, e = lap.band(k)
        if d.size == 1:
            vals, vecs = d.copy(), np.ones((1, 1))
        else:
            vals, vecs = eigh_tridiagonal(d, e)
        ells = np.arange(k, n)
        expected = ells * (ells + 1.0)
        if np.max(np.abs(vals - expected)) > 1e-8 * max(1.0, expected[-1]):
            raise LinAlgError(f"band {k} spectrum deviates from l(l+1)")
        lead = np.argmax(np.abs(vecs) > 1e-12, axis=0)
        signs = np.sign(vecs[lead, np.arange(vecs.shape[1])])
        vectors.append(vecs * signs)
        eigenvalues.append(-vals)
    return QuantBasis(n, tuple(vectors), tuple(eigenvalues))


def _padded(coeffs, n: int) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    if coeffs.size > n * n:
        raise ValueError(f"{coeffs.size} coefficients exceed n**2 = {n * n}")
    out = np.zeros(n * n)
    out[: coeffs.size] = coeffs
    return out


def shr2mat(coeffs, basis: QuantBasis, allow_trace: bool = False) -> np.ndarray:
    """Map real spherical-harmonic coefficients to the matrix ``sum w[l,m] T[l,m]``.

    Coefficients past the end of ``coeffs`` are zero.  The ``l = 0`` entry
    must vanish (up to roundoff relative to the vector norm) unless
    ``allow_trace`` is set; a roundoff-sized value is dropped.
    """
    n = basis.n
    omega = _padded(coeffs, n)
    if omega[0] != 0.0 and not allow_trace:
        if abs(omega[0]) > 1e-12 * max(1.0, float(np.linalg.norm(omega))):
            raise NonTracelessError("l = 0 coefficient must be zero for su(N) states")
        omega[0] = 0.0
    beta = basis.scale
    w = np.zeros((n, n), dtype=complex)
    idx = np.arange(n)
    for k in range(n):
        ells = np.arange(k, n)
        base = ells * ells + ells
        vecs = basis.vectors[k]
        rows = idx[: n - k]
        if k == 0:
            w[rows, rows] = -1j * beta * (vecs @ omega[base])
            continue
        sign = -1.0 if k % 2 else 1.0
        c = vecs @ omega[base + k]
        s = vecs @ omega[base - k]
        upper = (beta * sign / np.sqrt(2.0)) * (-1j * c - s)
        w[rows, rows + k] = upper
        w[rows + k, rows] = -np.conj(upper)
    return w


def mat2shr(w: np.ndarray, basis: QuantBasis) -> np.ndarray:
    """Coefficients ``w[l, m] = <T[l, m], W>``; inverse of :func:`shr2mat` on u(N)."""
    n = basis.n
    w = _check_size(n, w)
    beta = basis.scale
    omega = np.zeros(n * n)
    idx = np.arange(n)
    for k in range(n):
        ells = np.arange(k, n)
        base = ells * ells + ells
        vecs = basis.vectors[k]
        rows = idx[: n - k]
        if k == 0:
            omega[base] = -(vecs.T @ w[rows, rows].imag) / beta
            continue
        sign = -1.0 if k % 2 else 1.0
        # average upper and (reflected) lower parts so non-exact inputs project
        u = 0.5 * (w[rows, rows + k] - np.conj(w[rows + k, rows]))
        omega[base + k] = -(np.sqrt(2.0) * sign / beta) * (vecs.T @ u.imag)
        omega[base - k] = -(np.sqrt(2.0) * sign / beta) * (vecs.T @ u.real)
    return omega
