"""Hermitian PSD helpers: principal square root and certified log-det SINR."""
from __future__ import annotations

import numpy as np

CLAMP_RTOL = 1e-10
RANK_RTOL = 1e-10
# Largest tolerated share of the signal outside the noise-plus-interference range.
LEAK_RTOL = 1e-6


class ConditioningError(ArithmeticError):
    pass


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2).conj())


def psd_sqrt(a: np.ndarray, clamp_rtol: float = CLAMP_RTOL) -> np.ndarray:
    """Principal Hermitian square root via eigendecomposition.

    Eigenvalues below ``clamp_rtol * lambda_max`` in magnitude are set to
    zero; a clearly negative eigenvalue means the input is not PSD.
    """
    w, v = np.linalg.eigh(hermitian_part(a))
    top = max(w.max(initial=0.0), 0.0)
    if w.size and w.min() < -1e3 * clamp_rtol * max(top, np.finfo(float).tiny):
        raise ConditioningError(f"matrix is not PSD (min eigenvalue {w.min():.3e}, max {top:.3e})")
    w = np.where(w < clamp_rtol * top, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def logdet_psd(a: np.ndarray) -> float:
    """log2 det of a Hermitian PD matrix through Cholesky (raises if not PD)."""
    try:
        c = np.linalg.cholesky(hermitian_part(a))
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("matrix is not positive definite") from exc
    return float(2.0 * np.sum(np.log2(np.real(np.diagonal(c)))))


def logdet_sinr(e: np.ndarray, psi: np.ndarray, rank_rtol: float = RANK_RTOL) -> float:
    """``log2 |I + E^H Psi^{-1} E|`` restricted to the range of ``Psi``.

    ``Psi`` is symmetrized and eigendecomposed; eigen-directions below
    ``rank_rtol`` of the largest are treated as structurally absent. This is
    exact when ``E`` lives in the retained range, which is checked: signal
    leaking into the discarded directions raises :class:`ConditioningError`.
    """
    w, q = np.linalg.eigh(hermitian_part(psi))
    top = w.max(initial=0.0)
    e_norm = np.linalg.norm(e)
    if top <= 0.0:
        if e_norm == 0.0:
            return 0.0
        raise ConditioningError("noise-plus-interference matrix has no positive eigenvalue")
    keep = w > rank_rtol * top
    proj = q.conj().T @ e
    if (~keep).any() and np.linalg.norm(proj[~keep]) > LEAK_RTOL * max(e_norm, np.finfo(float).tiny):
        raise ConditioningError("signal lies outside the range of the noise-plus-interference matrix")
    x = proj[keep] / np.sqrt(w[keep])[:, None]
    return logdet_psd(np.eye(e.shape[1]) + x.conj().T @ x)
