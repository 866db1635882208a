"""Offline dumps of correlation matrices and variance profiles.

Binary files hold row-major little-endian float64. Complex matrices are
stored as interleaved ``(re, im)`` pairs, i.e. as an ``(n, n, 2)`` array.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .variance import VarianceProfile

_LE_F64 = np.dtype("<f8")


def dump_matrix_binary(a: np.ndarray, path) -> Path:
    a = np.asarray(a)
    data = np.stack([a.real, a.imag], axis=-1) if np.iscomplexobj(a) else a
    path = Path(path)
    np.ascontiguousarray(data, dtype=_LE_F64).tofile(path)
    return path


def load_matrix_binary(path, shape, complex_valued: bool = True) -> np.ndarray:
    raw = np.fromfile(path, dtype=_LE_F64)
    if complex_valued:
        raw = raw.reshape(*shape, 2)
        return raw[..., 0] + 1j * raw[..., 1]
    return raw.reshape(shape)


def dump_matrix_csv(a: np.ndarray, path) -> Path:
    """Long format, one entry per line: ``row,col,re,im`` (0-based indices)."""
    a = np.asarray(a, dtype=complex)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("row", "col", "re", "im"))
        for (i, j), v in np.ndenumerate(a):
            w.writerow((i, j, repr(float(v.real)), repr(float(v.imag))))
    return path


def dump_profile_binary(profile: VarianceProfile, path) -> Path:
    """The ``sigma`` values in lattice order."""
    return dump_matrix_binary(profile.sigmas, path)


def dump_profile_csv(profile: VarianceProfile, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("lx", "ly", "sigma", "variance"))
        for (lx, ly), s in zip(profile.lattice.points, profile.sigmas):
            w.writerow((int(lx), int(ly), repr(float(s)), repr(float(s * s))))
    return path
