"""Uplink signal model, combiners and cell-free fusion."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import montecarlo


def mr_combiner(h: np.ndarray) -> np.ndarray:
    """Maximum-ratio combining: ``V = H`` (works on stacks of channels)."""
    return np.array(h, copy=True)


def cf_local_estimate(v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Local estimate ``V^H y`` formed at one BS."""
    v, y = np.asarray(v), np.asarray(y)
    if v.shape[-2] != y.shape[-1]:
        raise ValueError(f"combiner with {v.shape[-2]} rows cannot act on a length-{y.shape[-1]} signal")
    return np.einsum("...ij,...i->...j", v.conj(), y)


def cpu_fuse(local_estimates: Sequence[np.ndarray]) -> np.ndarray:
    """Equal-weight average of the per-BS local estimates."""
    if len(local_estimates) == 0:
        raise ValueError("need at least one local estimate")
    stack = np.stack([np.asarray(x) for x in local_estimates])
    return montecarlo.tree_sum(stack) / len(local_estimates)


def draw_symbols(rng, n_ue: int, n_tx: int, power: float) -> np.ndarray:
    """Gaussian symbols ``(K, N_s)`` with total power ``power`` split evenly over antennas."""
    return np.sqrt(power / n_tx) * montecarlo.sample_complex_gaussian(rng, n_ue, n_tx)


def received_signal(h_m: np.ndarray, x: np.ndarray, noise: np.ndarray | None = None) -> np.ndarray:
    """``y_m = sum_k H_mk x_k + n_m`` for ``h_m`` of shape ``(K, N_r, N_s)``."""
    y = np.einsum("kij,kj->i", h_m, x)
    return y if noise is None else y + noise
