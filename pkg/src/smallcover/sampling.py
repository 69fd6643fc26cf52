"""Seeded, chunked Monte Carlo reductions.

Samples are split into fixed-size chunks. Chunk ``c`` draws from its own
generator seeded by ``SeedSequence(seed, spawn_key=(c,))`` and partial sums are
combined in chunk order, so the result does not depend on ``workers``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

CHUNK = 4096


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def chunk_sizes(samples: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(samples, chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(kernel: Callable[[np.random.Generator, int], object], samples: int,
               seed: int, workers: int = 1, chunk: int = CHUNK) -> list:
    """Run ``kernel(rng, size)`` on every chunk; results come back in chunk order."""
    sizes = chunk_sizes(samples, chunk)
    jobs = [(i, s) for i, s in enumerate(sizes)]
    if workers <= 1 or len(jobs) <= 1:
        return [kernel(chunk_rng(seed, i), s) for i, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: kernel(chunk_rng(seed, job[0]), job[1]), jobs))


def mean_and_stderr(kernel: Callable[[np.random.Generator, int], np.ndarray],
                    samples: int, seed: int, workers: int = 1,
                    chunk: int = CHUNK) -> tuple[float, float]:
    """Sample mean and standard error of the values produced by ``kernel``."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    total = 0.0
    total_sq = 0.0
    for values in map_chunks(kernel, samples, seed, workers, chunk):
        values = np.asarray(values, dtype=float)
        total += float(values.sum())
        total_sq += float(np.square(values).sum())
    mean = total / samples
    var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    return mean, math.sqrt(var / samples)


def sample_codes(rng: np.random.Generator, probs, shape) -> np.ndarray:
    """Draw 1-based codes with the given probabilities (floats are fine here)."""
    cum = np.cumsum(np.asarray([float(q) for q in probs]))
    u = rng.random(shape)
    codes = np.searchsorted(cum, u, side="right") + 1
    return np.minimum(codes, len(cum))
