"""Uplink spectral efficiency of cell-free and small-cell processing.

Monte-Carlo evaluators work on the compressed channel representation of
:class:`~xlmimo_sim.channel.LinkModel`; the closed form works on the
link correlation matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import montecarlo
from .channel import FullCorrelation, LinkModel, build_link_model
from .geometry import Role, build_surface
from .linalg import RANK_RTOL, ConditioningError, hermitian_part, logdet_sinr
from .moments import MomentTensors
from .receivers import mr_combiner

CELL_FREE = "cell_free"
SMALL_CELL = "small_cell"
MONTE_CARLO = "monte_carlo"
CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class Scenario:
    """``n_bs`` BSs and ``n_ue`` UEs with statistically identical links."""

    link: LinkModel
    n_bs: int
    n_ue: int
    power: float
    noise_power: float

    def correlation(self, m: int, k: int) -> FullCorrelation:
        return self.link.correlation

    def sample(self, rng) -> np.ndarray:
        """Compressed channels of every link, shape ``(M, K, d_r, d_s)``."""
        return self.link.sample_compressed(rng, (self.n_bs, self.n_ue))


def build_scenario(n_bs: int, n_ue: int, *, n_h_r: int, n_v_r: int, delta_r: float,
                   n_h_s: int, n_v_s: int, delta_s: float, power: float = 1.0,
                   noise_power: float = 0.1, anchor: str = "corner") -> Scenario:
    rx = build_surface(n_h_r, n_v_r, delta_r, role=Role.RECEIVE)
    tx = build_surface(n_h_s, n_v_s, delta_s, role=Role.TRANSMIT)
    return Scenario(build_link_model(rx, tx, anchor), n_bs, n_ue, power, noise_power)


@dataclass(frozen=True)
class SEResult:
    per_ue_se: np.ndarray
    scheme: str
    method: str
    stderr: np.ndarray
    selected_bs: np.ndarray | None = None
    trials: int = 0
    rejected: int = 0
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def sum_se(self) -> float:
        return float(np.sum(self.per_ue_se))

    @property
    def avg_se(self) -> float:
        return self.sum_se / len(self.per_ue_se)

    @property
    def sum_stderr(self) -> float:
        return float(self.extra.get("sum_stderr", np.sqrt(np.sum(self.stderr**2))))


def _se_or_raise(e, psi, k) -> float:
    try:
        return logdet_sinr(e, psi)
    except ConditioningError as exc:
        raise ConditioningError(f"UE {k}: {exc}") from exc


# -- cell-free: closed form ---------------------------------------------------

def cf_closed_form_terms(scenario: Scenario, k: int, gamma2_method: str = "kron",
                         moments: MomentTensors | None = None):
    """Useful-signal matrix ``E`` and noise-plus-interference ``Psi`` for UE ``k``.

    The triple sum over ``(l, m, m')`` of ``T`` is grouped by case:
    ``sum_m Gamma2 + sum_{m != m'} Z Z' + sum_m sum_{l != k} Gamma1``.
    """
    mt = moments or MomentTensors(scenario.correlation, gamma2_method)
    M, K, p = scenario.n_bs, scenario.n_ue, scenario.power
    zs = [mt.Z(m, k) for m in range(M)]
    zsum = sum(zs)
    t_sum = zsum @ zsum - sum(z @ z for z in zs)
    for m in range(M):
        t_sum = t_sum + mt.gamma2(m, k)
        for l in range(K):
            if l != k:
                t_sum = t_sum + mt.gamma1(m, k, l)
    e = np.sqrt(p) * zsum
    psi = p * t_sum - e @ e.conj().T + scenario.noise_power * zsum
    return e, psi


def cf_se_closed_form(scenario: Scenario, gamma2_method: str = "kron") -> SEResult:
    """Per-UE SE of cell-free MR processing from the moment tensors."""
    mt = MomentTensors(scenario.correlation, gamma2_method)
    se = np.array([_se_or_raise(*cf_closed_form_terms(scenario, k, moments=mt), k)
                   for k in range(scenario.n_ue)])
    return SEResult(se, CELL_FREE, CLOSED_FORM, np.zeros_like(se))


# -- cell-free: Monte Carlo ------------------------------------------------------

def cf_trial_moments(f: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Per-realization terms ``(K, 3, d, d)``: signal, cross term, noise Gram.

    With ``A[k, l] = sum_m V_mk^H H_ml``: signal ``A[k, k]``, cross term
    ``sum_l A[k, l] A[l, k]``, noise Gram ``sum_m V_mk^H V_mk``.
    """
    M, K, d_r, d_s = f.shape
    vh = v.conj().transpose(0, 1, 3, 2).reshape(M, K * d_s, d_r)
    fm = f.transpose(0, 2, 1, 3).reshape(M, d_r, K * d_s)
    a = (vh @ fm).sum(axis=0)
    a2 = a @ a
    out = np.empty((K, 3, d_s, d_s), dtype=complex)
    for k in range(K):
        blk = slice(k * d_s, (k + 1) * d_s)
        out[k, 0] = a[blk, blk]
        out[k, 1] = a2[blk, blk]
    out[:, 2] = (v.conj().swapaxes(-1, -2) @ v).sum(axis=0)
    return out


def cf_se_from_moments(mean: np.ndarray, power: float, noise_power: float) -> np.ndarray:
    se = np.empty(mean.shape[0])
    for k, (sig, cross, gram) in enumerate(mean):
        e = np.sqrt(power) * sig
        psi = power * cross - e @ e.conj().T + noise_power * gram
        se[k] = _se_or_raise(e, psi, k)
    return se


def cf_se_monte_carlo(scenario: Scenario, trials: int, seed: int = montecarlo.DEFAULT_SEED, *,
                      combiner: Callable[[np.ndarray], np.ndarray] = mr_combiner,
                      workers: int = 1, batches: int = montecarlo.DEFAULT_BATCHES) -> SEResult:
    """Cell-free SE with every expectation replaced by a sample mean.

    All expectations share the same channel draws within a trial. The
    standard error is the delete-one-batch jackknife of the SE itself.
    """

    def evaluator(t, rng):
        f = scenario.sample(rng)
        return cf_trial_moments(f, combiner(f))

    est = montecarlo.estimate_expectation(evaluator, trials, seed, workers=workers, batches=batches)
    fn = lambda mean: cf_se_from_moments(mean, scenario.power, scenario.noise_power)  # noqa: E731
    se, stderr = est.jackknife(fn)
    _, sum_err = est.jackknife(lambda mean: np.sum(fn(mean)))
    return SEResult(se, CELL_FREE, MONTE_CARLO, stderr, trials=est.trials_used,
                    rejected=est.rejected, extra={"sum_stderr": float(sum_err)})


# -- small cell ---------------------------------------------------------------

def _smallcell_one(f_m: np.ndarray, k: int, power: float, noise_power: float) -> float:
    fk = f_m[k]
    w, vecs = np.linalg.eigh(fk.conj().T @ fk)
    keep = w > RANK_RTOL * w.max(initial=0.0)
    if not keep.any():
        return 0.0
    u = fk @ vecs[:, keep] / np.sqrt(w[keep])
    x = np.einsum("ar,lab->lrb", u.conj(), np.delete(f_m, k, axis=0))
    q = power * np.einsum("lrb,lsb->rs", x, x.conj()) + noise_power * np.eye(u.shape[1])
    signal = q + power * np.diag(w[keep])
    return _logdet2(signal) - _logdet2(q)


def _logdet2(a: np.ndarray) -> np.ndarray:
    c = np.linalg.cholesky(a)
    return 2.0 * np.sum(np.log2(np.real(np.diagonal(c, axis1=-2, axis2=-1))), axis=-1)


def smallcell_instantaneous_se(f: np.ndarray, power: float, noise_power: float) -> np.ndarray:
    """Per-realization small-cell MR SE for every ``(m, k)``, shape ``(M, K)``.

    For ``A = H^H H = V diag(w) V^H`` and ``U = H V diag(w)^{-1/2}`` the
    log-det reduces on the range of ``A`` to
    ``log2|Q + p diag(w)| - log2|Q|`` with
    ``Q = p sum_{l != k} U^H H_l H_l^H U + noise * I``, which stays well
    conditioned when ``H`` is rank deficient.
    """
    M, K = f.shape[:2]
    gram = f.conj().swapaxes(-1, -2) @ f
    w, vecs = np.linalg.eigh(gram)
    top = w.max(axis=-1, keepdims=True)
    ranks = (w > RANK_RTOL * top).sum(axis=-1)
    r = int(ranks.flat[0])
    if not (ranks == r).all() or r == 0:
        return np.array([[_smallcell_one(f[m], k, power, noise_power) for k in range(K)]
                         for m in range(M)])
    w_keep, v_keep = w[..., -r:], vecs[..., -r:]
    d_r, d_s = f.shape[2:]
    u = (f @ v_keep) / np.sqrt(w_keep)[..., None, :]  # (M, K, d_r, r)
    uh = u.conj().swapaxes(-1, -2).reshape(M, K * r, d_r)
    x = (uh @ f.transpose(0, 2, 1, 3).reshape(M, d_r, K * d_s)).reshape(M, K, r, K * d_s)
    total = x @ x.conj().swapaxes(-1, -2)  # sum over all l of U^H H_l H_l^H U
    xs = x.reshape(M, K, r, K, d_s)[:, np.arange(K), :, np.arange(K), :]  # (K, M, r, d_s)
    own = np.swapaxes(xs @ xs.conj().swapaxes(-1, -2), 0, 1)
    q = power * hermitian_part(total - own) + noise_power * np.eye(r)
    signal = q + power * (w_keep[..., :, None] * np.eye(r))
    return _logdet2(signal) - _logdet2(q)


def _select_bs(sums: np.ndarray, counts: np.ndarray, selection: str):
    """Pick a serving BS per UE and return the per-batch sums of its SE."""
    b = len(counts)
    mean = sums.sum(axis=0) / counts.sum()
    reported = np.argmax(mean, axis=0)
    if selection == "plain" or b < 2:
        chosen = np.broadcast_to(reported, (b, sums.shape[2]))
    elif selection == "crossfit":
        even, odd = np.arange(0, b, 2), np.arange(1, b, 2)
        pick_for_even = np.argmax(sums[odd].sum(axis=0) / counts[odd].sum(), axis=0)
        pick_for_odd = np.argmax(sums[even].sum(axis=0) / counts[even].sum(), axis=0)
        chosen = np.where((np.arange(b) % 2 == 0)[:, None], pick_for_even, pick_for_odd)
    else:
        raise ValueError(f"unknown selection rule {selection!r}")
    picked = np.take_along_axis(sums, chosen[:, None, :], axis=1)[:, 0, :]
    return picked, reported


def smallcell_se(scenario: Scenario, trials: int, seed: int = montecarlo.DEFAULT_SEED, *,
                 workers: int = 1, batches: int = montecarlo.DEFAULT_BATCHES,
                 selection: str = "crossfit",
                 sampler: Callable[[np.random.Generator], np.ndarray] | None = None) -> SEResult:
    """Small-cell SE: each UE is decoded by its best single BS.

    ``SE_mk`` is the sample mean of the per-realization log-det. Taking the
    maximum over BSs of noisy means is biased upward when the BSs are
    statistically alike, so by default (``selection="crossfit"``) the BS is
    chosen on one half of the batches and its SE read off the other half,
    and vice versa. ``selection="plain"`` takes the maximum of the means.
    """
    draw = sampler or scenario.sample

    def evaluator(t, rng):
        f = draw(rng)
        if not np.all(np.isfinite(f)):
            raise montecarlo.TrialRejected("non-finite channel draw")
        se = smallcell_instantaneous_se(f, scenario.power, scenario.noise_power)
        if not np.all(np.isfinite(se)):
            raise montecarlo.TrialRejected("non-finite instantaneous SE")
        return se

    est = montecarlo.estimate_expectation(evaluator, trials, seed, workers=workers, batches=batches)
    picked, reported = _select_bs(est.batch_sums, est.batch_counts, selection)
    se, stderr = montecarlo.jackknife(lambda v: v, picked, est.batch_counts)
    _, sum_err = montecarlo.jackknife(lambda v: np.sum(v), picked, est.batch_counts)
    return SEResult(np.real(se), SMALL_CELL, MONTE_CARLO, stderr, selected_bs=reported,
                    trials=est.trials_used, rejected=est.rejected,
                    extra={"per_link_se": est.mean, "sum_stderr": float(sum_err)})
