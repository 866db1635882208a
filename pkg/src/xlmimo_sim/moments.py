"""Second and fourth moments of MR-combined channels.

For links ``H_mk`` with full correlation ``R_mk`` (blocks ``R^{ni}`` of
size ``N_r x N_r``, ``n, i`` over transmit antennas):

* ``Z_mk = E{H_mk^H H_mk}``, ``[Z]_{n,n'} = tr(R^{n'n})``
* ``Gamma1_mkl = E{H_mk^H H_ml H_ml^H H_mk}`` (``l != k``),
  ``[Gamma1]_{n,n'} = sum_i tr(R_ml^{ii} R_mk^{n'n})``
* ``Gamma2_mk = E{H_mk^H H_mk H_mk^H H_mk}``, assembled from the
  ``(a, b)`` blocks of ``R^{1/2}``.

Production code evaluates these from the Kronecker factors of
``FullCorrelation`` (``R = tx (x) rx``), which reduces every block trace to
scalar traces. The ``*_from_blocks`` and :func:`gamma2_from_sqrt` variants
work on a dense ``R`` and serve as independent routes on small surfaces.
"""
from __future__ import annotations

import numpy as np

from .channel import FullCorrelation
from .linalg import psd_sqrt


def _blocks(r: np.ndarray, n_tx: int) -> np.ndarray:
    """View dense ``R`` as ``(n_tx, n_tx, N_r, N_r)`` blocks, ``[a, b] = R^{ab}``."""
    n_rx = r.shape[0] // n_tx
    if n_rx * n_tx != r.shape[0] or r.shape[0] != r.shape[1]:
        raise ValueError(f"R of shape {r.shape} is not made of {n_tx}x{n_tx} square blocks")
    return r.reshape(n_tx, n_rx, n_tx, n_rx).transpose(0, 2, 1, 3)


def closed_form_Z(corr: FullCorrelation) -> np.ndarray:
    return np.trace(corr.rx) * corr.tx.T


def z_from_blocks(r: np.ndarray, n_tx: int) -> np.ndarray:
    # [Z]_{n n'} = tr(R^{n' n})
    return np.einsum("abii->ba", _blocks(r, n_tx))


def gamma1(corr_k: FullCorrelation, corr_l: FullCorrelation) -> np.ndarray:
    """Interference moment of UE ``l`` seen through UE ``k``'s MR filter at one BS."""
    cross = np.einsum("ij,ji->", corr_l.rx, corr_k.rx)
    return np.trace(corr_l.tx) * cross * corr_k.tx.T


def gamma1_from_blocks(r_k: np.ndarray, r_l: np.ndarray, n_tx: int) -> np.ndarray:
    bk, bl = _blocks(r_k, n_tx), _blocks(r_l, n_tx)
    s = np.einsum("iiab->ab", bl)  # sum_i R_l^{ii}
    # [G]_{n n'} = tr(S R_k^{n' n})
    return np.einsum("ab,cdba->dc", s, bk)


def gamma2(corr: FullCorrelation) -> np.ndarray:
    """Self fourth moment ``E{(H^H H)^2}`` from the Kronecker factors."""
    z = closed_form_Z(corr)
    return z @ z + gamma1(corr, corr)


def gamma2_from_sqrt(r: np.ndarray, n_tx: int) -> np.ndarray:
    """Self fourth moment from the blocks ``Rt^{ab}`` of ``R^{1/2}``.

    Writing ``h_n = sum_j Rt^{nj} x_j`` with ``x_j ~ CN(0, I)``, only the
    pairings ``j1=j2, j3=j4`` and ``j1=j4, j2=j3`` survive, giving

        [G]_{nn'} = sum_{i,j1,j2} tr(Rt^{j1 n} Rt^{i j1}) tr(Rt^{n' j2} Rt^{j2 i})
                                + tr(Rt^{j1 n} Rt^{i j2} Rt^{j2 i} Rt^{n' j1}).
    """
    rt = _blocks(psd_sqrt(r), n_tx)
    # p[n, i] = sum_j tr(Rt^{jn} Rt^{ij});  q[n', i] = sum_j tr(Rt^{n'j} Rt^{ji})
    p = np.einsum("jnab,ijba->ni", rt, rt)
    q = np.einsum("njab,jiba->ni", rt, rt)
    first = p @ q.T
    # s = sum_{i, j2} Rt^{i j2} Rt^{j2 i}
    s = np.einsum("ijab,jibc->ac", rt, rt)
    # second[n, n'] = sum_{j1} tr(Rt^{j1 n} s Rt^{n' j1})
    second = np.einsum("jnab,bc,mjca->nm", rt, s, rt)
    return first + second


def moment_case(m: int, k: int, mp: int, l: int) -> int:
    """Which of the four independence cases applies to ``T_{m k m' l}``."""
    if m != mp:
        return 1 if l != k else 2
    return 3 if l != k else 4


class MomentTensors:
    """Lazily evaluated ``Z``, ``Gamma1``, ``Gamma2`` and ``T`` for a network.

    ``correlation(m, k)`` returns the ``FullCorrelation`` of link ``(m, k)``.
    Moments are cached per distinct correlation object, so networks whose
    links share statistics cost one evaluation.

    ``gamma2_method="sqrt"`` evaluates the self fourth moment through the
    square-root blocks of the dense correlation matrix instead of the
    Kronecker factors.
    """

    def __init__(self, correlation, gamma2_method: str = "kron"):
        if gamma2_method not in ("kron", "sqrt"):
            raise ValueError(f"unknown gamma2 method {gamma2_method!r}")
        self._corr = correlation
        self.gamma2_method = gamma2_method
        self._cache: dict = {}

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def Z(self, m: int, k: int) -> np.ndarray:
        c = self._corr(m, k)
        return self._memo(("Z", id(c)), lambda: closed_form_Z(c))

    def gamma1(self, m: int, k: int, l: int) -> np.ndarray:
        ck, cl = self._corr(m, k), self._corr(m, l)
        return self._memo(("G1", id(ck), id(cl)), lambda: gamma1(ck, cl))

    def gamma2(self, m: int, k: int) -> np.ndarray:
        c = self._corr(m, k)
        if self.gamma2_method == "sqrt":
            return self._memo(("G2s", id(c)), lambda: gamma2_from_sqrt(c.matrix, c.n_tx))
        return self._memo(("G2", id(c)), lambda: gamma2(c))

    def T(self, m: int, k: int, mp: int, l: int) -> np.ndarray:
        """``E{H_mk^H H_ml H_m'l^H H_m'k}`` by case."""
        case = moment_case(m, k, mp, l)
        if case == 1:
            n = self._corr(m, k).n_tx
            return np.zeros((n, n), dtype=complex)
        if case == 2:
            return self.Z(m, k) @ self.Z(mp, k)
        if case == 3:
            return self.gamma1(m, k, l)
        return self.gamma2(m, k)


def closed_form_T(m: int, k: int, mp: int, l: int, correlation) -> np.ndarray:
    return MomentTensors(correlation).T(m, k, mp, l)
