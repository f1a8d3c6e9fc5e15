"""Conserved quantities and spectral diagnostics for vorticity matrices."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from matrixhydro.quantization import (
    QuantBasis,
    QuantizedLaplacian,
    laplacian_solve,
    mat2shr,
)

__all__ = [
    "DiagnosticsRecord",
    "SpectrumReport",
    "energy",
    "casimir",
    "casimirs",
    "enstrophy_spectrum",
    "tail_enstrophy",
    "noise_level",
    "angular_momentum",
    "ell_coefficients",
    "diagnostics_record",
    "levelset_reconstruct",
    "lemma_bracket_trace",
]

CasimirFunction = Union[int, Sequence[float], Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    energy: float
    enstrophy: float
    casimir3: float
    casimir4: float
    momentum: tuple
    fp_iters: int

    def as_row(self) -> list:
        return [
            self.time,
            self.energy,
            self.enstrophy,
            self.casimir3,
            self.casimir4,
            *self.momentum,
            self.fp_iters,
        ]


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Per-wavenumber enstrophy ``sum_m w[l, m]**2``, indexed directly by ``l``.

    ``per_ell[0]`` is the (normally zero) mean component.  The split fields
    are filled by :meth:`split`.
    """

    per_ell: np.ndarray
    ell_star: Optional[int] = None
    tail_enstrophy: Optional[float] = None
    noise_level: Optional[float] = None

    @property
    def n(self) -> int:
        return self.per_ell.size

    def split(self, ell_star: int) -> "SpectrumReport":
        a = tail_enstrophy(self, ell_star)
        return replace(
            self,
            ell_star=ell_star,
            tail_enstrophy=a,
            noise_level=noise_level(self, ell_star, self.n),
        )


def energy(w: np.ndarray, lap: QuantizedLaplacian) -> float:
    """Hamiltonian ``(2 pi / N) tr(W^H P)``."""
    p = laplacian_solve(lap, w)
    return float(2.0 * np.pi / lap.n * np.vdot(w, p).real)


def _evaluate(f: CasimirFunction, lam: np.ndarray) -> np.ndarray:
    if callable(f):
        return np.asarray(f(lam), dtype=float)
    if isinstance(f, (int, np.integer)):
        return lam ** int(f)
    return np.polynomial.polynomial.polyval(lam, np.asarray(f, dtype=float))


def casimir(w: np.ndarray, f: CasimirFunction) -> float:
    """Casimir ``(4 pi / N) tr f(iW)`` from the eigenvalues of ``iW``.

    ``f`` is a monomial power, polynomial coefficients in increasing order,
    or a vectorized callable.
    """
    lam = np.linalg.eigvalsh(1j * np.asarray(w))
    return float(4.0 * np.pi / lam.size * _evaluate(f, lam).sum())


def casimirs(w: np.ndarray, powers=(2, 3, 4)) -> tuple:
    """Several monomial Casimirs sharing one eigen-decomposition."""
    lam = np.linalg.eigvalsh(1j * np.asarray(w))
    scale = 4.0 * np.pi / lam.size
    return tuple(float(scale * np.sum(lam**k)) for k in powers)


def enstrophy_spectrum(w: np.ndarray, basis: QuantBasis) -> SpectrumReport:
    omega = mat2shr(w, basis)
    ells = np.floor(np.sqrt(np.arange(omega.size))).astype(int)
    per_ell = np.bincount(ells, weights=omega * omega, minlength=basis.n)
    return SpectrumReport(per_ell)


def _check_ell_star(ell_star: int, n: int):
    if not 1 <= ell_star <= n - 1:
        raise ValueError(f"ell_star must lie in [1, {n - 1}], got {ell_star}")


def tail_enstrophy(report: SpectrumReport, ell_star: int) -> float:
    """Enstrophy ``a`` carried by wavenumbers ``l >= ell_star``."""
    _check_ell_star(ell_star, report.n)
    return float(report.per_ell[ell_star:].sum())


def noise_level(report: SpectrumReport, ell_star: int, n: int) -> float:
    """Background noise ``a / sum_{l >= ell_star} (2 l + 1) = a / (N**2 - ell_star**2)``."""
    _check_ell_star(ell_star, n)
    a = float(report.per_ell[ell_star:n].sum())
    return a / (n * n - ell_star * ell_star)


def ell_coefficients(w: np.ndarray, basis: QuantBasis, ell: int) -> np.ndarray:
    """Coefficients ``w[l, -l..l]`` for a single ``l``, without a full transform."""
    n = basis.n
    beta = basis.scale
    out = np.zeros(2 * ell + 1)
    for k in range(ell + 1):
        v = basis.vectors[k][:, ell - k]
        rows = np.arange(n - k)
        if k == 0:
            out[ell] = -(v @ w[rows, rows].imag) / beta
            continue
        sign = -1.0 if k % 2 else 1.0
        u = 0.5 * (w[rows, rows + k] - np.conj(w[rows + k, rows]))
        out[ell + k] = -(np.sqrt(2.0) * sign / beta) * (v @ u.imag)
        out[ell - k] = -(np.sqrt(2.0) * sign / beta) * (v @ u.real)
    return out


def angular_momentum(w: np.ndarray, basis: QuantBasis) -> np.ndarray:
    """The ``l = 1`` coefficients ``(w[1,-1], w[1,0], w[1,1])``."""
    return ell_coefficients(w, basis, 1)


def diagnostics_record(
    w: np.ndarray,
    lap: QuantizedLaplacian,
    basis: QuantBasis,
    time: float,
    fp_iters: int = 0,
) -> DiagnosticsRecord:
    c2, c3, c4 = casimirs(w)
    return DiagnosticsRecord(
        time=float(time),
        energy=energy(w, lap),
        enstrophy=c2,
        casimir3=c3,
        casimir4=c4,
        momentum=tuple(float(v) for v in angular_momentum(w, basis)),
        fp_iters=int(fp_iters),
    )


def levelset_reconstruct(w: np.ndarray, sigma: float) -> np.ndarray:
    """Partial sum ``sum_{lambda_m >= sigma} -i lambda_m e_m e_m^H``.

    The ``-i lambda_m`` are the eigenvalues of ``W``.  Keeping every
    eigenvalue returns ``W`` itself; keeping none returns zero.
    """
    w = np.asarray(w)
    lam, vecs = np.linalg.eigh(1j * w)
    keep = lam >= sigma
    if keep.all():
        return w.copy()
    if not keep.any():
        return np.zeros_like(w, dtype=complex)
    e = vecs[:, keep]
    return (e * (-1j * lam[keep])) @ e.conj().T


def lemma_bracket_trace(x: np.ndarray, w: np.ndarray, w2: np.ndarray) -> float:
    """Diagonal-by-diagonal evaluation of ``tr([X, W]^H [X, W2])`` for commuting ``W, W2``.

    In a common eigenbasis ``F`` where ``W = i diag(w)`` and
    ``W2 = i diag(w2)``, the trace equals the sum over every diagonal ``m`` of
    ``Y = F^H X F`` of ``|Y_mi|^2 (w2[i+|m|] - w2[i]) (w[i+|m|] - w[i])``.
    """
    x, w, w2 = (np.asarray(a) for a in (x, w, w2))
    scale = np.linalg.norm(w) * np.linalg.norm(w2)
    if np.linalg.norm(w @ w2 - w2 @ w) > 1e-12 * max(scale, 1.0):
        raise ValueError("W and W2 do not commute")
    # a generic combination separates degenerate eigenspaces of either matrix
    mix = np.pi / 7.0
    _, f = np.linalg.eigh(1j * (w + mix * w2))
    wd = (f.conj().T @ w @ f).diagonal().imag
    w2d = (f.conj().T @ w2 @ f).diagonal().imag
    y = f.conj().T @ x @ f
    n = y.shape[0]
    total = 0.0
    for m in range(-(n - 1), n):
        k = abs(m)
        band = np.diagonal(y, offset=m)
        total += float(np.sum(np.abs(band) ** 2 * (w2d[k:] - w2d[: n - k]) * (wd[k:] - wd[: n - k])))
    return total
