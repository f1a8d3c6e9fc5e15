"""
Rendering vorticity on an equal-area map
========================================

Coefficients are evaluated on a latitude-longitude grid and drawn in the
Hammer projection as a binary PPM image.
"""

import sys
from pathlib import Path

import numpy as np

from matrixhydro.quantization import elm2ind
from matrixhydro.spheregrid import analyze, render_hammer, synthesize, write_ppm

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(".")

omega = np.zeros(64)
omega[elm2ind(3, 2)] = 1.0
omega[elm2ind(5, -1)] = 0.6
omega[elm2ind(1, 0)] = 0.8

grid = synthesize(omega, 64, 128)
print("grid", grid.values.shape, "range", grid.values.min().round(3), grid.values.max().round(3))
print("analysis recovers the coefficients:", np.allclose(analyze(grid, 7), omega, atol=1e-10))

image = render_hammer(grid, 600)
path = out_dir / "hammer_demo.ppm"
write_ppm(path, image)
print("wrote", path, f"({image.width}x{image.height})")
