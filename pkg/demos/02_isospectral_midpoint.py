"""
Isospectral time stepping
=========================

The isospectral midpoint method advances W by a unitary conjugation, so
every Casimir tr f(iW) is kept to roundoff while the energy stays close to
its initial value.  Reversing the step sign walks the trajectory back.
"""

import numpy as np

from matrixhydro.diagnostics import casimirs, energy
from matrixhydro.integrators import StepperConfig, evolve
from matrixhydro.quantization import build_basis, build_quantized_laplacian, shr2mat

n = 32
lap = build_quantized_laplacian(n)
basis = build_basis(lap)

rng = np.random.default_rng(1)
omega = np.zeros(n * n)
omega[4:121] = rng.standard_normal(117)
w0 = shr2mat(omega, basis)

cfg = StepperConfig(eps=0.2)
print(f"hbar = {lap.hbar:.5f}, dt = {cfg.dt(lap.hbar):.5f}")

c0 = np.array(casimirs(w0))
e0 = energy(w0, lap)


def show(step, time, w):
    c = np.array(casimirs(w))
    print(f"t={time:6.2f}  energy error {energy(w, lap) / e0 - 1:+.2e}  "
          f"Casimir drift {np.abs(c / c0 - 1).max():.1e}")


w = evolve(w0, cfg, lap, 1600, observer=show, every=200)

# flip the sign of the step and go back
back = evolve(w, StepperConfig(eps=-0.2), lap, 1600)
print("distance to initial state after reversal:", np.abs(back - w0).max())
