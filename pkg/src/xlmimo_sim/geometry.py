"""Planar antenna surfaces and wavenumber sampling lattices.

All lengths are expressed in wavelengths (lambda = 1).
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

# Slack for lattice-boundary comparisons; side lengths such as 9 * (1/3) are not exact.
_BOUNDARY_RTOL = 1e-12


class Role(str, enum.Enum):
    RECEIVE = "receive"
    TRANSMIT = "transmit"


@dataclass(frozen=True)
class SurfaceGeometry:
    """Rectangular planar surface of ``n_h * n_v`` antennas.

    Antennas are indexed row by row: index ``n`` (1-based) sits in row
    ``(n - 1) // n_h`` and column ``(n - 1) % n_h``. The first antenna is at
    ``origin``; the surface lies in the plane ``z = origin[2]``.
    """

    n_h: int
    n_v: int
    spacing: float
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    role: Role = Role.RECEIVE
    positions: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cols, rows = np.meshgrid(np.arange(self.n_h), np.arange(self.n_v))
        pos = np.zeros((self.n_h * self.n_v, 3))
        pos[:, 0] = cols.ravel() * self.spacing
        pos[:, 1] = rows.ravel() * self.spacing
        pos += np.asarray(self.origin, dtype=float)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n_antennas(self) -> int:
        return self.n_h * self.n_v

    @property
    def side_lengths(self) -> tuple[float, float]:
        return (self.n_h * self.spacing, self.n_v * self.spacing)


@dataclass(frozen=True)
class WavenumberLattice:
    """Integer harmonic indices ``(lx, ly)`` inside the lattice ellipse."""

    points: np.ndarray  # (n, 2) int, lexicographic
    side_lengths: tuple[float, float]

    @property
    def cardinality(self) -> int:
        return len(self.points)

    def index_of(self, point: tuple[int, int]) -> int:
        hits = np.flatnonzero((self.points[:, 0] == point[0]) & (self.points[:, 1] == point[1]))
        if hits.size == 0:
            raise KeyError(f"{point} is not a lattice point")
        return int(hits[0])


def build_surface(n_h: int, n_v: int, spacing: float,
                  origin=(0.0, 0.0, 0.0), role: Role | str = Role.RECEIVE) -> SurfaceGeometry:
    """Build a planar surface; spacing above half a wavelength only warns."""
    if int(n_h) != n_h or int(n_v) != n_v or n_h < 1 or n_v < 1:
        raise ValueError(f"antenna counts must be positive integers, got n_h={n_h}, n_v={n_v}")
    if not spacing > 0 or not math.isfinite(spacing):
        raise ValueError(f"spacing must be positive, got {spacing}")
    origin = tuple(float(v) for v in origin)
    if len(origin) != 3:
        raise ValueError("origin must be a 3-vector")
    if spacing > 0.5 + 1e-12:
        warnings.warn(f"spacing {spacing} exceeds half a wavelength", stacklevel=2)
    return SurfaceGeometry(int(n_h), int(n_v), float(spacing), origin, Role(role))


def antenna_position(surface: SurfaceGeometry, n: int) -> np.ndarray:
    """Coordinate of antenna ``n`` (1-based, row-major)."""
    if not 1 <= n <= surface.n_antennas:
        raise IndexError(f"antenna index {n} outside [1, {surface.n_antennas}]")
    return surface.positions[n - 1].copy()


def nearest_antenna_index(surface: SurfaceGeometry, position) -> int:
    """Inverse of :func:`antenna_position` for points near the grid."""
    rel = np.asarray(position, dtype=float) - np.asarray(surface.origin)
    col = int(np.clip(np.rint(rel[0] / surface.spacing), 0, surface.n_h - 1))
    row = int(np.clip(np.rint(rel[1] / surface.spacing), 0, surface.n_v - 1))
    return row * surface.n_h + col + 1


def enumerate_lattice(lx: float, ly: float) -> WavenumberLattice:
    """All integer pairs with ``(lx_i / Lx)^2 + (ly_i / Ly)^2 <= 1``.

    Points on the ellipse boundary are included. Ordering is lexicographic.
    """
    if not (lx > 0 and ly > 0):
        raise ValueError(f"side lengths must be positive, got ({lx}, {ly})")
    bx, by = math.ceil(lx), math.ceil(ly)
    gx, gy = np.meshgrid(np.arange(-bx, bx + 1), np.arange(-by, by + 1), indexing="ij")
    inside = (gx / lx) ** 2 + (gy / ly) ** 2 <= 1.0 + _BOUNDARY_RTOL
    pts = np.column_stack([gx[inside], gy[inside]]).astype(np.int64)
    pts.setflags(write=False)
    return WavenumberLattice(pts, (float(lx), float(ly)))


def surface_lattice(surface: SurfaceGeometry) -> WavenumberLattice:
    return enumerate_lattice(*surface.side_lengths)
