"""
Functions on the sphere as matrices
===================================

A smooth function on the sphere becomes an N x N skew-Hermitian matrix.
After a look at the spin operators and the Laplacian's spectrum, the
script shows the scaled commutator approaching the Poisson bracket.
"""

import numpy as np

from matrixhydro.quantization import (
    build_basis,
    build_quantized_laplacian,
    build_spin_operators,
    hbar,
    laplacian_solve,
    mat2shr,
    shr2mat,
)

# spin operators: s = (N - 1) / 2, commutation [S1, S2] = S3
n = 6
s1, s2, s3 = build_spin_operators(n).generators
print("||[S1,S2] - S3|| =", np.linalg.norm(s1 @ s2 - s2 @ s1 - s3))
print("S1^2 + S2^2 + S3^2 = -s(s+1) I with s(s+1) =", -np.trace(s1 @ s1 + s2 @ s2 + s3 @ s3).real / n)

# the Laplacian splits into one tridiagonal operator per diagonal
lap = build_quantized_laplacian(16)
eig = np.sort(np.concatenate([np.linalg.eigvalsh(lap.band_matrix(k)) for k in range(16)]))
print("distinct eigenvalues of -Lap on the upper bands:", np.unique(np.round(eig, 10))[:6], "...")

# the eigenmatrices play the role of spherical harmonics
basis = build_basis(lap)
omega = np.zeros(16 * 16)
omega[[4, 7, 12]] = 1.0, -0.5, 2.0
w = shr2mat(omega, basis)
print("roundtrip error:", np.abs(mat2shr(w, basis) - omega).max())

# stream function: -Lap P = W, mode by mode division by l(l+1)
p = laplacian_solve(lap, w)
print("stream coefficients:", np.round(mat2shr(p, basis)[[4, 7, 12]], 6))

# (1/hbar)[P, X] approximates the Poisson bracket; differences shrink like N^-2
rng = np.random.default_rng(0)
psi, xi = np.zeros(25), np.zeros(25)
psi[1:] = rng.standard_normal(24)
xi[1:] = rng.standard_normal(24)


def scaled_commutator(n):
    b = build_basis(build_quantized_laplacian(n))
    a, c = shr2mat(psi, b), shr2mat(xi, b)
    return mat2shr((a @ c - c @ a) / hbar(n), b)[:64]


ref = scaled_commutator(128)
for n in (8, 16, 32, 64):
    print(f"N={n:3d}  distance to N=128 bracket: {np.linalg.norm(scaled_commutator(n) - ref):.3e}")
