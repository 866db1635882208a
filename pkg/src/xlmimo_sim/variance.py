"""Per-harmonic variances of the isotropic Fourier plane-wave model.

For isotropic scattering the spectral density in normalized wavenumber
coordinates is proportional to ``(1 - x^2 - y^2)^(-1/2)`` on the unit disk.
The variance of a harmonic is the integral of that density over its
spectral cell, normalized so the variances of a lattice sum to one.

The integral is evaluated in polar coordinates. Along each ray the radial
integral has the primitive ``-sqrt(1 - r^2)``, which removes the rim
singularity exactly. The remaining angular integral is split at every kink
(cell corners, cell edges crossing the unit circle) and each piece is
integrated by Gauss-Legendre after a cosine change of variable, which
smooths the square-root behaviour at the piece ends.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .geometry import WavenumberLattice

ANGULAR_STEPS = 4096
_MIN_NODES = 32
CELL_ANCHORS = ("corner", "center")


@dataclass(frozen=True)
class SpectralCell:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]`` in normalized wavenumbers."""

    x0: float
    x1: float
    y0: float
    y1: float

    def intersects_unit_disk(self) -> bool:
        cx = min(max(0.0, self.x0), self.x1)
        cy = min(max(0.0, self.y0), self.y1)
        return cx * cx + cy * cy < 1.0


@dataclass(frozen=True)
class VarianceProfile:
    """Standard deviations per lattice point, ordered as the lattice."""

    sigmas: np.ndarray
    lattice: WavenumberLattice
    anchor: str = "corner"

    @property
    def variances(self) -> np.ndarray:
        return self.sigmas**2


def spectral_cell(point, side_lengths, anchor: str = "corner") -> SpectralCell:
    """Integration region of harmonic ``point``.

    ``anchor="corner"`` gives ``[lx/Lx, (lx+1)/Lx] x [ly/Ly, (ly+1)/Ly]``;
    ``anchor="center"`` shifts the rectangle by half a cell so it is
    centred on the harmonic's own wavenumber.
    """
    if anchor not in CELL_ANCHORS:
        raise ValueError(f"anchor must be one of {CELL_ANCHORS}, got {anchor!r}")
    lx, ly = side_lengths
    off = 0.0 if anchor == "corner" else -0.5
    px, py = float(point[0]) + off, float(point[1]) + off
    return SpectralCell(px / lx, (px + 1) / lx, py / ly, (py + 1) / ly)


def _ray_span(cell: SpectralCell, theta: np.ndarray):
    """Entry/exit radii of rays from the origin through the cell (slab method)."""
    c, s = np.cos(theta), np.sin(theta)
    lo = np.zeros_like(theta)
    hi = np.full_like(theta, np.inf)
    for d, a, b in ((c, cell.x0, cell.x1), (s, cell.y0, cell.y1)):
        with np.errstate(divide="ignore", invalid="ignore"):
            t1, t2 = a / d, b / d
        tmin, tmax = np.minimum(t1, t2), np.maximum(t1, t2)
        par = np.abs(d) < 1e-300
        # parallel rays: whole line inside the slab or nothing
        inside = (a <= 0.0) & (0.0 <= b)
        tmin = np.where(par, np.where(inside, -np.inf, np.inf), tmin)
        tmax = np.where(par, np.where(inside, np.inf, -np.inf), tmax)
        lo = np.maximum(lo, tmin)
        hi = np.minimum(hi, tmax)
    return lo, hi


def _radial_integral(cell: SpectralCell, theta: np.ndarray) -> np.ndarray:
    # int_a^b r (1 - r^2)^(-1/2) dr = sqrt(1 - a^2) - sqrt(1 - b^2), radii clipped to the disk
    lo, hi = _ray_span(cell, theta)
    a = np.clip(lo, 0.0, 1.0)
    b = np.clip(hi, 0.0, 1.0)
    out = np.sqrt(1.0 - a * a) - np.sqrt(np.maximum(1.0 - b * b, 0.0))
    return np.where(hi > lo, np.maximum(out, 0.0), 0.0)


def _breakpoints(cell: SpectralCell) -> np.ndarray:
    xs, ys = (cell.x0, cell.x1), (cell.y0, cell.y1)
    angles = [-np.pi, np.pi]
    angles += [np.arctan2(y, x) for x in xs for y in ys]
    for x in xs:
        if abs(x) < 1.0:
            h = np.sqrt(1.0 - x * x)
            angles += [np.arctan2(y, x) for y in (h, -h) if ys[0] <= y <= ys[1]]
    for y in ys:
        if abs(y) < 1.0:
            h = np.sqrt(1.0 - y * y)
            angles += [np.arctan2(y, x) for x in (h, -h) if xs[0] <= x <= xs[1]]
    return np.unique(np.clip(angles, -np.pi, np.pi))


@functools.lru_cache(maxsize=64)
def _gauss_legendre(n: int):
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def cell_integral(cell: SpectralCell, steps: int = ANGULAR_STEPS) -> float:
    """Integral of ``(1 - x^2 - y^2)^(-1/2)`` over ``cell`` intersected with the unit disk."""
    if not cell.intersects_unit_disk():
        return 0.0
    edges = _breakpoints(cell)
    pieces = [(a, b) for a, b in zip(edges[:-1], edges[1:])
              if b - a > 1e-15 and _radial_integral(cell, np.array([0.5 * (a + b)]))[0] > 0.0]
    if not pieces:
        return 0.0
    total_len = sum(b - a for a, b in pieces)
    result = 0.0
    for a, b in pieces:
        # power-of-two node counts keep the Gauss-Legendre cache small
        n = max(_MIN_NODES, 1 << max(0, int(np.ceil(np.log2(steps * (b - a) / total_len)))))
        t, w = _gauss_legendre(n)
        # theta = a + (b - a) (1 - cos(pi t)) / 2 on t in [0, 1]
        theta = a + 0.5 * (b - a) * (1.0 - np.cos(np.pi * t))
        jac = 0.5 * (b - a) * np.pi * np.sin(np.pi * t)
        result += np.sum(_radial_integral(cell, theta) * jac * w)
    return float(result)


def raw_cell_integrals(lattice: WavenumberLattice, anchor: str = "corner",
                       steps: int = ANGULAR_STEPS) -> np.ndarray:
    return np.array([cell_integral(spectral_cell(p, lattice.side_lengths, anchor), steps)
                     for p in lattice.points])


def compute_variance_profile(lattice: WavenumberLattice, anchor: str = "corner",
                             steps: int = ANGULAR_STEPS) -> VarianceProfile:
    """Normalized standard deviations (sum of variances equal to one).

    Lattice points whose cell misses the unit disk keep a zero entry so the
    profile stays aligned with the lattice.
    """
    raw = raw_cell_integrals(lattice, anchor, steps)
    total = raw.sum()
    if not total > 0.0:
        raise RuntimeError("all spectral cells have zero weight")
    var = raw / total
    sig = np.sqrt(var)
    sig.setflags(write=False)
    return VarianceProfile(sig, lattice, anchor)
