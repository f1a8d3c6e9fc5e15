"""Time integration of the Euler-Zeitlin flow ``dW/dt = -(1/hbar) [W, P]``, ``-Lap P = W``.

The workhorse is the isospectral midpoint method.  With ``eps = dt / hbar``
and a stage matrix ``Wt`` with stream matrix ``Pt = -Lap^{-1} Wt``,

    W_n     = (I - eps/2 Pt) Wt (I + eps/2 Pt)
    W_{n+1} = (I + eps/2 Pt) Wt (I - eps/2 Pt)

so that ``W_{n+1} = C W_n C^H`` with the Cayley transform
``C = (I - eps/2 Pt)^{-1} (I + eps/2 Pt)``, unitary because ``Pt`` is
skew-Hermitian.  The stage equation is solved by fixed-point iteration; the
update is applied as an exact conjugation, so the spectrum of ``W`` is kept
up to roundoff regardless of the fixed-point tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import inv

from matrixhydro.quantization import QuantizedLaplacian, laplacian_solve

__all__ = [
    "StepperConfig",
    "StageResult",
    "StageSolverError",
    "euler_zeitlin_rhs",
    "isomp_stage_solve",
    "isomp_step",
    "hyperviscous_step",
    "step_with_info",
    "transport_step",
    "evolve",
]

log = logging.getLogger(__name__)


class StageSolverError(RuntimeError):
    """The fixed-point iteration for an implicit stage did not converge."""

    def __init__(self, iters: int, residual: float, step: Optional[int] = None):
        self.iters = iters
        self.residual = residual
        self.step = step
        where = "" if step is None else f" at step {step}"
        super().__init__(
            f"stage solver did not converge{where}: "
            f"residual {residual:.3e} after {iters} iterations"
        )


@dataclass(frozen=True)
class StepperConfig:
    """Step parameters.

    ``eps`` is the step ratio ``dt / hbar``.  Negative values step backwards
    in time, which is the same as flipping the sign of the stream matrix.
    """

    eps: float
    fp_tol: float = 1e-12
    fp_maxit: int = 50
    nu: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.eps):
            raise ValueError(f"eps must be finite, got {self.eps}")
        if not self.fp_tol > 0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.fp_maxit < 1:
            raise ValueError(f"fp_maxit must be >= 1, got {self.fp_maxit}")
        if not self.nu >= 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")

    def dt(self, hbar: float) -> float:
        return self.eps * hbar


@dataclass(frozen=True, eq=False)
class StageResult:
    w_mid: np.ndarray
    p_mid: np.ndarray
    iters: int
    residual: float


def _su(a: np.ndarray) -> np.ndarray:
    """Project onto traceless skew-Hermitian matrices."""
    a = 0.5 * (a - a.conj().T)
    a[np.diag_indices_from(a)] -= np.trace(a) / a.shape[0]
    return a


def _commutator(a, b):
    return a @ b - b @ a


def _skew_commutator(a, b):
    # for skew-Hermitian a, b: b @ a == (a @ b)^H
    ab = a @ b
    return ab - ab.conj().T


def euler_zeitlin_rhs(w: np.ndarray, lap: QuantizedLaplacian) -> np.ndarray:
    """Right-hand side ``-(1/hbar) [W, P]``."""
    p = laplacian_solve(lap, w)
    return -_commutator(w, p) / lap.hbar


def isomp_stage_solve(
    w_n: np.ndarray, cfg: StepperConfig, lap: QuantizedLaplacian
) -> StageResult:
    """Solve ``W_n = Wt + eps/2 [Wt, Pt] - eps^2/4 Pt Wt Pt`` for ``Wt``.

    Fixed-point sweeps start from ``W_n``; the residual is measured relative
    to ``||W_n||_F``.  The stage is skew-Hermitian but carries a small trace
    (from the cubic term); ``Pt`` is computed from its traceless part.
    """
    eps = cfg.eps
    scale = np.linalg.norm(w_n)
    if scale == 0.0:
        scale = 1.0
    wt = w_n
    for it in range(1, cfg.fp_maxit + 1):
        p = laplacian_solve(lap, wt, project=True)
        wp = wt @ p
        update = w_n - 0.5 * eps * (wp - wp.conj().T) + 0.25 * eps * eps * (p @ wp)
        residual = float(np.linalg.norm(update - wt)) / scale
        if residual <= cfg.fp_tol:
            return StageResult(wt, p, it, residual)
        wt = 0.5 * (update - update.conj().T)
    raise StageSolverError(cfg.fp_maxit, residual)


def _cayley(p: np.ndarray, eps: float) -> np.ndarray:
    # (I - A)^{-1} (I + A) = 2 (I - A)^{-1} - I
    eye = np.eye(p.shape[0])
    c = 2.0 * inv(eye - 0.5 * eps * p, check_finite=False)
    c[np.diag_indices_from(c)] -= 1.0
    return c


def _conservative(w_n, cfg, lap):
    stage = isomp_stage_solve(w_n, cfg, lap)
    c = _cayley(stage.p_mid, cfg.eps)
    return _su(c @ w_n @ c.conj().T), stage


def isomp_step(w_n: np.ndarray, cfg: StepperConfig, lap: QuantizedLaplacian) -> np.ndarray:
    """One isospectral midpoint step (hyperviscosity ignored)."""
    return _conservative(w_n, cfg, lap)[0]


def _dissipate(w, cfg, lap):
    # implicit midpoint on dW/dt = (nu/hbar^2)[P,[P,W]]: keeps energy, never raises C2
    h = cfg.eps * cfg.nu / lap.hbar
    scale = np.linalg.norm(w) or 1.0
    wbar = w
    for it in range(1, cfg.fp_maxit + 1):
        p = laplacian_solve(lap, wbar)
        inner = _skew_commutator(p, wbar)
        update = w + 0.5 * h * _skew_commutator(p, inner)
        residual = float(np.linalg.norm(update - wbar)) / scale
        wbar = _su(update)
        if residual <= cfg.fp_tol:
            return _su(2.0 * wbar - w)
    raise StageSolverError(cfg.fp_maxit, residual)


def step_with_info(
    w_n: np.ndarray, cfg: StepperConfig, lap: QuantizedLaplacian
) -> tuple[np.ndarray, StageResult]:
    """Hyperviscous step that also returns the conservative stage result."""
    w_next, stage = _conservative(w_n, cfg, lap)
    if cfg.nu > 0.0:
        w_next = _dissipate(w_next, cfg, lap)
    return w_next, stage


def hyperviscous_step(
    w_n: np.ndarray, cfg: StepperConfig, lap: QuantizedLaplacian
) -> np.ndarray:
    """Isospectral midpoint step followed by a hyperviscous substep.

    The substep integrates ``dW/dt = (nu/hbar^2) [P, [P, W]]`` over ``dt`` by
    the implicit midpoint rule.  For ``nu == 0`` it is skipped and the result
    is identical to :func:`isomp_step`.
    """
    return step_with_info(w_n, cfg, lap)[0]


def transport_step(
    frame: np.ndarray,
    lambdas: np.ndarray,
    cfg: StepperConfig,
    lap: QuantizedLaplacian,
) -> np.ndarray:
    """Advance the eigenvector frame of ``W = sum -i lambda_k e_k e_k^H``.

    The frame is multiplied by the same Cayley transform as in
    :func:`isospectral midpoint <isomp_step>`, so reconstructing ``W`` from
    the new frame reproduces that step.  The eigenvalues do not change.
    """
    frame = np.asarray(frame)
    lambdas = np.asarray(lambdas, dtype=float)
    w = (frame * (-1j * lambdas)) @ frame.conj().T
    stage = isomp_stage_solve(w, cfg, lap)
    out = _cayley(stage.p_mid, cfg.eps) @ frame
    defect = np.linalg.norm(out.conj().T @ out - np.eye(out.shape[0]))
    if defect > 1e-10:
        log.warning("frame lost unitarity (%.2e); re-orthonormalizing", defect)
        u, _, vh = np.linalg.svd(out)
        out = u @ vh
    return out


def evolve(
    w0: np.ndarray,
    cfg: StepperConfig,
    lap: QuantizedLaplacian,
    n_steps: int,
    observer: Optional[Callable[[int, float, np.ndarray], None]] = None,
    every: int = 1,
    t0: float = 0.0,
) -> np.ndarray:
    """Apply :func:`hyperviscous_step` ``n_steps`` times.

    ``observer(step, time, w)`` is called for the initial state and after
    every ``every``-th step.  Times are ``t0 + step * dt``.
    """
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps}")
    dt = cfg.dt(lap.hbar)
    w = w0
    if observer is not None:
        observer(0, t0, w)
    for step in range(1, n_steps + 1):
        try:
            w = hyperviscous_step(w, cfg, lap)
        except StageSolverError as err:
            raise StageSolverError(err.iters, err.residual, step) from err
        if observer is not None and step % every == 0:
            observer(step, t0 + step * dt, w)
    return w
