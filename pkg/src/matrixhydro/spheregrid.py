"""Real spherical harmonic synthesis/analysis on lat-lon grids, and Hammer rendering.

Real harmonics follow the Condon-Shortley phase and unit L2 norm on the
sphere::

    Y[l, 0]  = P(l, 0)
    Y[l, m]  = sqrt(2) P(l, m) cos(m phi)      m > 0
    Y[l, -m] = sqrt(2) P(l, m) sin(m phi)      m > 0

where ``P(l, m)`` is the associated Legendre function normalized so that
``P(l, m) exp(i m phi)`` has unit norm.  Grids are uniform in longitude and
cell-centered in colatitude.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "LatLonGrid",
    "RasterImage",
    "BACKGROUND",
    "colatitudes",
    "longitudes",
    "legendre_m",
    "synthesize",
    "analyze",
    "fejer_weights",
    "hammer_inverse",
    "render_hammer",
    "colormap",
    "write_ppm",
    "read_ppm",
]

BACKGROUND = (64, 64, 64)
_BLUE = np.array([0x3B, 0x4C, 0xC0], dtype=float)
_WHITE = np.array([255.0, 255.0, 255.0])
_RED = np.array([0xB4, 0x04, 0x26], dtype=float)


@dataclass(frozen=True, eq=False)
class LatLonGrid:
    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray

    @property
    def n_lat(self) -> int:
        return self.theta.size

    @property
    def n_lon(self) -> int:
        return self.phi.size


@dataclass(frozen=True, eq=False)
class RasterImage:
    width: int
    height: int
    rgb: np.ndarray  # (height, width, 3) uint8

    def tobytes(self) -> bytes:
        return np.ascontiguousarray(self.rgb, dtype=np.uint8).tobytes()


def colatitudes(n_lat: int) -> np.ndarray:
    return (np.arange(n_lat) + 0.5) * np.pi / n_lat


def longitudes(n_lon: int) -> np.ndarray:
    return np.arange(n_lon) * 2.0 * np.pi / n_lon


def _check_grid(n_lat: int, n_lon: int):
    if n_lat < 2 or n_lon < 4:
        raise ValueError(f"grid too small: n_lat={n_lat}, n_lon={n_lon}")


def legendre_m(lmax: int, m: int, theta: np.ndarray) -> np.ndarray:
    """Normalized associated Legendre functions ``P(l, m)`` for ``l = m..lmax``.

    Returns an array of shape ``(lmax - m + 1, theta.size)``.  Uses the
    standard sectoral-then-vertical recurrence, which is stable for the
    orders used here.
    """
    x = np.cos(theta)
    sx = np.sin(theta)
    pmm = np.full_like(x, 1.0 / np.sqrt(4.0 * np.pi))
    for k in range(1, m + 1):
        pmm = -np.sqrt((2.0 * k + 1.0) / (2.0 * k)) * sx * pmm
    out = np.empty((lmax - m + 1, x.size))
    out[0] = pmm
    if lmax == m:
        return out
    out[1] = np.sqrt(2.0 * m + 3.0) * x * pmm
    for ell in range(m + 2, lmax + 1):
        a = np.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
        b = np.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
        out[ell - m] = a * (x * out[ell - m - 1] - b * out[ell - m - 2])
    return out


def _lmax_of(ncoeff: int) -> int:
    return int(np.ceil(np.sqrt(ncoeff))) - 1


def synthesize(coeffs, n_lat: int, n_lon: int) -> LatLonGrid:
    """Evaluate ``sum w[l, m] Y[l, m]`` on an ``n_lat x n_lon`` grid."""
    _check_grid(n_lat, n_lon)
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    theta = colatitudes(n_lat)
    phi = longitudes(n_lon)
    if coeffs.size == 0:
        return LatLonGrid(theta, phi, np.zeros((n_lat, n_lon)))
    lmax = _lmax_of(coeffs.size)
    if lmax > n_lat:
        warnings.warn(
            f"lmax = {lmax} exceeds n_lat = {n_lat}; the field is aliased",
            stacklevel=2,
        )
    omega = np.zeros((lmax + 1) ** 2)
    omega[: coeffs.size] = coeffs
    cos_part = np.zeros((n_lat, lmax + 1))
    sin_part = np.zeros((n_lat, lmax + 1))
    for m in range(lmax + 1):
        ells = np.arange(m, lmax + 1)
        base = ells * ells + ells
        leg = legendre_m(lmax, m, theta)
        if m == 0:
            cos_part[:, 0] = omega[base] @ leg
        else:
            cos_part[:, m] = np.sqrt(2.0) * (omega[base + m] @ leg)
            sin_part[:, m] = np.sqrt(2.0) * (omega[base - m] @ leg)
    ms = np.arange(lmax + 1)
    values = cos_part @ np.cos(np.outer(ms, phi)) + sin_part @ np.sin(np.outer(ms, phi))
    return LatLonGrid(theta, phi, values)


def fejer_weights(n: int) -> np.ndarray:
    """Fejer's first-rule weights on ``x = cos(theta)`` at cell-centered colatitudes."""
    theta = colatitudes(n)
    j = np.arange(1, n // 2 + 1)
    series = np.cos(2.0 * np.outer(theta, j)) / (4.0 * j * j - 1.0)
    return 2.0 / n * (1.0 - 2.0 * series.sum(axis=1))


def analyze(grid: LatLonGrid, elmax: int) -> np.ndarray:
    """Project a grid field onto real harmonics up to ``elmax``.

    Exact for band-limited fields when ``n_lat >= 2 elmax + 2`` and
    ``n_lon > 2 elmax``.
    """
    n_lat, n_lon = grid.values.shape
    if n_lat < 2 * elmax + 2 or n_lon <= 2 * elmax:
        raise ValueError(
            f"grid {n_lat}x{n_lon} under-resolves elmax = {elmax}; "
            f"need n_lat >= {2 * elmax + 2} and n_lon >= {2 * elmax + 1}"
        )
    weights = fejer_weights(n_lat)
    ms = np.arange(elmax + 1)
    dphi = 2.0 * np.pi / n_lon
    fc = grid.values @ np.cos(np.outer(grid.phi, ms)) * dphi
    fs = grid.values @ np.sin(np.outer(grid.phi, ms)) * dphi
    omega = np.zeros((elmax + 1) ** 2)
    for m in range(elmax + 1):
        ells = np.arange(m, elmax + 1)
        base = ells * ells + ells
        leg = legendre_m(elmax, m, grid.theta) * weights
        if m == 0:
            omega[base] = leg @ fc[:, 0]
        else:
            omega[base + m] = np.sqrt(2.0) * (leg @ fc[:, m])
            omega[base - m] = np.sqrt(2.0) * (leg @ fs[:, m])
    return omega


def hammer_inverse(x, y):
    """Inverse Hammer projection.

    ``x`` ranges over ``[-2 sqrt 2, 2 sqrt 2]`` and ``y`` over ``[-sqrt 2, sqrt 2]``.
    Returns ``(lat, lon, inside)`` in radians; points outside the ellipse get
    ``nan`` coordinates.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = (x / (2.0 * np.sqrt(2.0))) ** 2 + (y / np.sqrt(2.0)) ** 2 <= 1.0
    z2 = 1.0 - (x / 4.0) ** 2 - (y / 2.0) ** 2
    z = np.sqrt(np.where(inside, z2, 1.0))
    lat = np.arcsin(np.clip(z * y, -1.0, 1.0))
    lon = 2.0 * np.arctan2(z * x / 2.0, 2.0 * z * z - 1.0)
    lat = np.where(inside, lat, np.nan)
    lon = np.where(inside, lon, np.nan)
    return lat, lon, inside


def colormap(t: np.ndarray) -> np.ndarray:
    """Blue-white-red diverging map for ``t`` in ``[-1, 1]``; returns uint8 RGB."""
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)[..., None]
    rgb = np.where(t < 0.0, _WHITE + (-t) * (_BLUE - _WHITE), _WHITE + t * (_RED - _WHITE))
    return np.rint(rgb).astype(np.uint8)


def _bilinear(grid: LatLonGrid, colat: np.ndarray, phi: np.ndarray) -> np.ndarray:
    n_lat, n_lon = grid.values.shape
    r = np.clip(colat * n_lat / np.pi - 0.5, 0.0, n_lat - 1.0)
    c = np.mod(phi, 2.0 * np.pi) * n_lon / (2.0 * np.pi)
    r0 = np.minimum(np.floor(r).astype(int), n_lat - 2)
    c0 = np.floor(c).astype(int) % n_lon
    c1 = (c0 + 1) % n_lon
    fr = r - r0
    fc = c - np.floor(c)
    v = grid.values
    top = (1.0 - fc) * v[r0, c0] + fc * v[r0, c1]
    bot = (1.0 - fc) * v[r0 + 1, c0] + fc * v[r0 + 1, c1]
    return (1.0 - fr) * top + fr * bot


def render_hammer(grid: LatLonGrid, width: int, vmax: float | None = None) -> RasterImage:
    """Render a grid field as a Hammer-projection image of size ``width x width/2``.

    The colormap is symmetric about zero and scaled to ``vmax``, by default
    the largest absolute grid value.
    """
    width = int(width)
    if width < 2 or width % 2:
        raise ValueError(f"width must be even and positive, got {width}")
    if grid.values.ndim != 2 or min(grid.values.shape) < 2:
        raise ValueError("degenerate grid")
    height = width // 2
    xs = ((np.arange(width) + 0.5) / width * 2.0 - 1.0) * 2.0 * np.sqrt(2.0)
    ys = (1.0 - (np.arange(height) + 0.5) / height * 2.0) * np.sqrt(2.0)
    xx, yy = np.meshgrid(xs, ys)
    lat, lon, inside = hammer_inverse(xx, yy)
    rgb = np.empty((height, width, 3), dtype=np.uint8)
    rgb[...] = np.array(BACKGROUND, dtype=np.uint8)
    if vmax is None:
        vmax = float(np.abs(grid.values).max())
    samples = _bilinear(grid, np.pi / 2.0 - lat[inside], lon[inside])
    t = samples / vmax if vmax > 0.0 else np.zeros_like(samples)
    rgb[inside] = colormap(t)
    return RasterImage(width, height, rgb)


def write_ppm(path, image: RasterImage) -> None:
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.tobytes())


def read_ppm(path) -> RasterImage:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError(f"{path} is not a binary PPM written by this package")
    width, height = (int(v) for v in parts[1].split())
    rgb = np.frombuffer(parts[3], dtype=np.uint8)
    if rgb.size != width * height * 3:
        raise ValueError(f"{path}: pixel data has wrong length")
    return RasterImage(width, height, rgb.reshape(height, width, 3).copy())
