"""Fourier plane-wave channel: harmonic bases, sampling, and correlation.

A link between a receive surface (``N_r`` antennas, ``n_r`` harmonics) and a
transmit surface (``N_s`` antennas, ``n_s`` harmonics) is

    H = U_r (S * W) U_s^H

with ``S[a, b] = sqrt(N_r N_s) sigma_r[a] sigma_s[b]`` and ``W`` i.i.d.
CN(0, 1). With normalized profiles every entry of ``H`` has unit variance.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import montecarlo
from .geometry import SurfaceGeometry, WavenumberLattice, surface_lattice
from .variance import VarianceProfile, compute_variance_profile

_SIDE_RTOL = 1e-9


class Side(str, enum.Enum):
    RECEIVE = "receive"
    TRANSMIT = "transmit"


@dataclass(frozen=True)
class FourierBasis:
    """``N x n`` matrix of harmonics; column order follows the lattice."""

    matrix: np.ndarray
    side: Side
    lattice: WavenumberLattice

    @property
    def n_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_harmonics(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ChannelMatrix:
    H: np.ndarray
    bs_index: int = 0
    ue_index: int = 0


@dataclass(frozen=True)
class FullCorrelation:
    """Covariance of ``vec(H)`` (column stacking), kept in Kronecker form.

    ``R = kron(tx, rx)`` where ``rx = E{H H^H} / N_s`` is the receive
    correlation and ``tx = conj(C)`` with ``C = E{H^H H} / N_r`` the transmit
    correlation. ``matrix`` materializes the full ``N_r N_s`` square matrix.
    """

    rx: np.ndarray
    tx: np.ndarray

    @property
    def n_rx(self) -> int:
        return self.rx.shape[0]

    @property
    def n_tx(self) -> int:
        return self.tx.shape[0]

    @property
    def tx_correlation(self) -> np.ndarray:
        return self.tx.T

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.kron(self.tx, self.rx)

    def trace(self) -> float:
        return float(np.real(np.trace(self.tx) * np.trace(self.rx)))


def propagation_constant(lattice: WavenumberLattice) -> np.ndarray:
    """z-wavenumber ``sqrt(k^2 - kx^2 - ky^2)`` of each harmonic, with ``k = 2 pi``."""
    lx, ly = lattice.side_lengths
    pts = lattice.points
    frac = 1.0 - (pts[:, 0] / lx) ** 2 - (pts[:, 1] / ly) ** 2
    return 2 * np.pi * np.sqrt(np.maximum(frac, 0.0))


def build_fourier_basis(surface: SurfaceGeometry, lattice: WavenumberLattice,
                        side: Side | str = Side.RECEIVE) -> FourierBasis:
    side = Side(side)
    if not np.allclose(surface.side_lengths, lattice.side_lengths, rtol=_SIDE_RTOL, atol=0):
        raise ValueError(f"lattice side lengths {lattice.side_lengths} do not match "
                         f"surface side lengths {surface.side_lengths}")
    lx, ly = lattice.side_lengths
    pos = surface.positions
    pts = lattice.points
    phase = (2 * np.pi * np.outer(pos[:, 0], pts[:, 0] / lx)
             + 2 * np.pi * np.outer(pos[:, 1], pts[:, 1] / ly)
             + np.outer(pos[:, 2], propagation_constant(lattice)))
    sign = 1.0 if side is Side.RECEIVE else -1.0
    u = np.exp(1j * sign * phase) / np.sqrt(surface.n_antennas)
    u.setflags(write=False)
    return FourierBasis(u, side, lattice)


def alias_collisions(surface: SurfaceGeometry, lattice: WavenumberLattice) -> list[tuple[int, int]]:
    """Column pairs whose harmonics coincide on the antenna grid.

    On a flat surface two columns are orthogonal unless their indices agree
    modulo ``(n_h, n_v)``; the basis Gram matrix is the identity exactly when
    this list is empty.
    """
    keys = {}
    pairs = []
    for j, (a, b) in enumerate(lattice.points):
        key = (int(a) % surface.n_h, int(b) % surface.n_v)
        for i in keys.get(key, []):
            pairs.append((i, j))
        keys.setdefault(key, []).append(j)
    return pairs


def coefficient_std(rx_profile: VarianceProfile, tx_profile: VarianceProfile,
                    n_rx: int, n_tx: int) -> np.ndarray:
    """Standard deviations of the scaled Fourier coefficients, ``n_r x n_s``."""
    return np.sqrt(n_rx * n_tx) * np.outer(rx_profile.sigmas, tx_profile.sigmas)


def sample_channel(u_r: FourierBasis, u_s: FourierBasis, sigma: np.ndarray, rng,
                   bs_index: int = 0, ue_index: int = 0) -> ChannelMatrix:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (u_r.n_harmonics, u_s.n_harmonics):
        raise ValueError(f"coefficient std shape {sigma.shape} does not match bases "
                         f"({u_r.n_harmonics}, {u_s.n_harmonics})")
    w = montecarlo.sample_complex_gaussian(rng, *sigma.shape)
    h = u_r.matrix @ (sigma * w) @ u_s.matrix.conj().T
    return ChannelMatrix(h, bs_index, ue_index)


def full_correlation(u_r: FourierBasis, u_s: FourierBasis,
                     rx_profile: VarianceProfile, tx_profile: VarianceProfile) -> FullCorrelation:
    if (u_r.n_harmonics != rx_profile.sigmas.size
            or u_s.n_harmonics != tx_profile.sigmas.size):
        raise ValueError("variance profiles do not match basis column counts")
    d_r = u_r.n_antennas * rx_profile.variances
    d_s = u_s.n_antennas * tx_profile.variances
    rx = (u_r.matrix * d_r) @ u_r.matrix.conj().T
    tx = (u_s.matrix.conj() * d_s) @ u_s.matrix.T
    return FullCorrelation(rx, tx)


def full_correlation_dense(u_r: FourierBasis, u_s: FourierBasis,
                           rx_profile: VarianceProfile, tx_profile: VarianceProfile) -> np.ndarray:
    """Full correlation assembled literally from Kronecker products of the bases.

    Quadratic in ``N_r N_s`` memory; intended for checks on small surfaces.
    """
    left = np.kron(u_s.matrix.conj(), u_r.matrix)
    d = np.kron(u_s.n_antennas * tx_profile.variances, u_r.n_antennas * rx_profile.variances)
    return (left * d) @ left.conj().T


def correlation_block(corr: FullCorrelation, n: int, i: int) -> np.ndarray:
    """Block ``(n, i)`` (1-based) of ``R``: ``E{h_n h_i^H}`` for columns of ``H``."""
    if not (1 <= n <= corr.n_tx and 1 <= i <= corr.n_tx):
        raise IndexError(f"block index ({n}, {i}) outside [1, {corr.n_tx}]")
    return corr.tx[n - 1, i - 1] * corr.rx


@dataclass(frozen=True)
class LinkModel:
    """Statistics of one BS-UE link plus a compressed sampler.

    With ``U = Q T`` (thin QR), ``H = Q_r F Q_s^H`` where
    ``F = T_r (S * W) T_s^H``. All MR quantities are invariant under the
    orthonormal ``Q`` factors, so simulations work on ``F`` directly.
    """

    rx_surface: SurfaceGeometry
    tx_surface: SurfaceGeometry
    rx_basis: FourierBasis
    tx_basis: FourierBasis
    rx_profile: VarianceProfile
    tx_profile: VarianceProfile
    sigma: np.ndarray = field(repr=False)
    q_r: np.ndarray = field(repr=False)
    t_r: np.ndarray = field(repr=False)
    q_s: np.ndarray = field(repr=False)
    t_s: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rx_surface.n_antennas, self.tx_surface.n_antennas)

    @property
    def compressed_shape(self) -> tuple[int, int]:
        return (self.t_r.shape[0], self.t_s.shape[0])

    @cached_property
    def correlation(self) -> FullCorrelation:
        return full_correlation(self.rx_basis, self.tx_basis, self.rx_profile, self.tx_profile)

    def sample_compressed(self, rng, shape=()) -> np.ndarray:
        """Draw ``F`` for ``shape`` independent links: array ``(*shape, d_r, d_s)``."""
        w = montecarlo.sample_complex_gaussian(rng, *shape, *self.sigma.shape)
        return self.t_r @ (self.sigma * w) @ self.t_s.conj().T

    def expand(self, f: np.ndarray) -> np.ndarray:
        return self.q_r @ f @ self.q_s.conj().T


def build_link_model(rx_surface: SurfaceGeometry, tx_surface: SurfaceGeometry,
                     anchor: str = "corner") -> LinkModel:
    rx_lat, tx_lat = surface_lattice(rx_surface), surface_lattice(tx_surface)
    u_r = build_fourier_basis(rx_surface, rx_lat, Side.RECEIVE)
    u_s = build_fourier_basis(tx_surface, tx_lat, Side.TRANSMIT)
    p_r = compute_variance_profile(rx_lat, anchor)
    p_s = compute_variance_profile(tx_lat, anchor)
    sigma = coefficient_std(p_r, p_s, rx_surface.n_antennas, tx_surface.n_antennas)
    q_r, t_r = np.linalg.qr(u_r.matrix)
    q_s, t_s = np.linalg.qr(u_s.matrix)
    return LinkModel(rx_surface, tx_surface, u_r, u_s, p_r, p_s, sigma, q_r, t_r, q_s, t_s)
