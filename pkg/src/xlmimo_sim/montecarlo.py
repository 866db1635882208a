"""Seeded random streams and order-independent expectation estimates.

Every trial draws from its own counter-based stream (Philox keyed from
``(master_seed, trial)``), so trial ``t`` is reproducible on its own and the
estimate does not depend on how trials are spread over workers.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_SEED = 0xC0FFEE
DEFAULT_BATCHES = 20
MAX_REJECT_FRACTION = 0.01
_U64 = (1 << 64) - 1


class TrialRejected(ArithmeticError):
    """Raised by an evaluator to drop a single trial from the estimate."""


class EstimationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SeededStream:
    master_seed: int
    stream_id: int

    @cached_property
    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))


def derive_stream(master_seed: int, stream_id: int) -> SeededStream:
    return SeededStream(int(master_seed) & _U64, int(stream_id) & _U64)


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit child seed for sub-experiment ``index`` (e.g. a sweep point)."""
    ss = np.random.SeedSequence(int(master_seed) & _U64, spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def as_generator(stream) -> np.random.Generator:
    if isinstance(stream, SeededStream):
        return stream.rng
    if isinstance(stream, np.random.Generator):
        return stream
    raise TypeError(f"expected a SeededStream or numpy Generator, got {type(stream).__name__}")


def sample_complex_gaussian(stream, *shape: int) -> np.ndarray:
    """I.i.d. CN(0, 1) entries; real and imaginary parts each have variance 1/2."""
    if any(s < 0 for s in shape):
        raise ValueError(f"negative dimension in {shape}")
    rng = as_generator(stream)
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def tree_sum(values: np.ndarray) -> np.ndarray:
    """Pairwise sum along axis 0 with a fixed association order."""
    values = np.asarray(values)
    while values.shape[0] > 1:
        n = values.shape[0]
        paired = values[0:n - 1:2] + values[1:n:2]
        values = np.concatenate([paired, values[n - 1:]]) if n % 2 else paired
    return values[0]


@dataclass(frozen=True)
class EstimatorOutput:
    mean: np.ndarray
    stderr: np.ndarray
    trials_used: int
    rejected: int
    batch_sums: np.ndarray  # (B, *shape)
    batch_counts: np.ndarray  # (B,)

    def jackknife(self, fn: Callable[[np.ndarray], np.ndarray]):
        """Value of ``fn`` at the mean and its delete-one-batch jackknife stderr."""
        return jackknife(fn, self.batch_sums, self.batch_counts)


def jackknife(fn, batch_sums: np.ndarray, batch_counts: np.ndarray):
    total, count = tree_sum(batch_sums), batch_counts.sum()
    value = np.asarray(fn(total / count))
    keep = batch_counts > 0
    b = int(keep.sum())
    if b < 2:
        return value, np.zeros_like(np.real(value))
    loo = np.stack([np.asarray(fn((total - s) / (count - c)))
                    for s, c in zip(batch_sums[keep], batch_counts[keep])])
    spread = np.abs(loo - loo.mean(axis=0)) ** 2
    return value, np.sqrt((b - 1) / b * spread.sum(axis=0))


def batch_bounds(trials: int, batches: int) -> list[tuple[int, int]]:
    b = min(batches, trials)
    edges = [t * trials // b for t in range(b + 1)]
    return list(zip(edges[:-1], edges[1:]))


def estimate_expectation(evaluator: Callable[[int, np.random.Generator], np.ndarray],
                         trials: int, master_seed: int = DEFAULT_SEED, *,
                         workers: int = 1, batches: int = DEFAULT_BATCHES,
                         max_reject_fraction: float = MAX_REJECT_FRACTION) -> EstimatorOutput:
    """Sample mean of ``evaluator(t, rng)`` over trials ``t = 0 .. trials-1``.

    Trials are grouped into contiguous batches; each batch is reduced by a
    pairwise sum in trial order and the batch sums are reduced the same way,
    so results are bitwise independent of ``workers``. The standard error is
    the delete-one-batch jackknife. Trials raising :class:`TrialRejected` or
    ``LinAlgError`` are dropped; more than ``max_reject_fraction`` of them
    aborts the estimate.
    """
    if trials < 2:
        raise ValueError(f"need at least 2 trials, got {trials}")
    bounds = batch_bounds(trials, batches)

    def run_batch(span):
        vals, failures = [], []
        for t in range(*span):
            try:
                vals.append(np.asarray(evaluator(t, derive_stream(master_seed, t).rng)))
            except (TrialRejected, np.linalg.LinAlgError) as exc:
                failures.append((t, repr(exc)))
        return (tree_sum(np.stack(vals)) if vals else None), len(vals), failures

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_batch, bounds))
    else:
        results = [run_batch(span) for span in bounds]

    failures = [f for _, _, fs in results for f in fs]
    if len(failures) > max_reject_fraction * trials:
        shown = "; ".join(f"trial {t}: {msg}" for t, msg in failures[:5])
        raise EstimationError(f"{len(failures)} of {trials} trials failed "
                              f"(limit {max_reject_fraction:.1%}): {shown}")
    if failures:
        log.warning("%d of %d trials rejected", len(failures), trials)
    template = next(s for s, _, _ in results if s is not None)
    sums = np.stack([s if s is not None else np.zeros_like(template) for s, _, _ in results])
    counts = np.array([c for _, c, _ in results])
    used = int(counts.sum())
    mean = tree_sum(sums) / used
    _, stderr = jackknife(lambda x: x, sums, counts)
    return EstimatorOutput(mean, stderr, used, len(failures), sums, counts)
