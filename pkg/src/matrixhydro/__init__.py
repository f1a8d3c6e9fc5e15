"""Structure-preserving simulation of the quantized Euler equations on the sphere.

Vorticity is a traceless skew-Hermitian ``N x N`` matrix ``W`` evolving by
``dW/dt = -(1/hbar) [W, P]`` with stream matrix ``P`` from the quantized
Laplacian.  Submodules:

``quantization``   spin operators, the banded Laplacian, coefficient transforms
``integrators``    isospectral midpoint and hyperviscous steppers
``diagnostics``    energy, Casimirs, spectra, level sets
``spheregrid``     spherical harmonic synthesis/analysis and Hammer rendering
``simulation``     seeded runs in run directories; plot and spectrum export
"""

from matrixhydro.quantization import (
    NonTracelessError,
    QuantBasis,
    QuantizedLaplacian,
    build_basis,
    build_quantized_laplacian,
    build_spin_operators,
    elm2ind,
    hbar,
    ind2elm,
    laplacian_apply,
    laplacian_solve,
    mat2shr,
    shr2mat,
)
from matrixhydro.integrators import (
    StageSolverError,
    StepperConfig,
    euler_zeitlin_rhs,
    evolve,
    hyperviscous_step,
    isomp_step,
)
from matrixhydro.diagnostics import casimir, energy, enstrophy_spectrum

__version__ = "0.1.0"

__all__ = [
    "NonTracelessError",
    "QuantBasis",
    "QuantizedLaplacian",
    "StageSolverError",
    "StepperConfig",
    "build_basis",
    "build_quantized_laplacian",
    "build_spin_operators",
    "casimir",
    "elm2ind",
    "energy",
    "enstrophy_spectrum",
    "euler_zeitlin_rhs",
    "evolve",
    "hbar",
    "hyperviscous_step",
    "ind2elm",
    "isomp_step",
    "laplacian_apply",
    "laplacian_solve",
    "mat2shr",
    "shr2mat",
]
