"""Seeded Monte Carlo draws split into fixed-size blocks.

Block ``b`` of a run seeded with ``seed`` always uses the generator
``default_rng([seed, b])``, so draws (and block-ordered reductions) are
bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from .core import ChannelModel

BLOCK = 1 << 16

T = TypeVar("T")


def block_sizes(n: int, block: int = BLOCK) -> list[int]:
    full, rest = divmod(int(n), block)
    return [block] * full + ([rest] if rest else [])


def draw_block(model: ChannelModel, seed: int, index: int, size: int) -> np.ndarray:
    rng = np.random.default_rng([int(seed), int(index)])
    return model.sample(rng, size)


def draw(model: ChannelModel, n: int, seed: int) -> np.ndarray:
    """All ``n`` draws concatenated in block order."""
    sizes = block_sizes(n)
    if not sizes:
        return np.empty((0, model.n_links))
    return np.concatenate(
        [draw_block(model, seed, i, s) for i, s in enumerate(sizes)])


def map_blocks(fn: Callable[[np.ndarray], T], model: ChannelModel, n: int,
               seed: int, workers: int = 1) -> list[T]:
    """Apply ``fn`` to every block of draws; results are in block order."""
    sizes = block_sizes(n)

    def job(i):
        return fn(draw_block(model, seed, i, sizes[i]))

    if workers <= 1 or len(sizes) <= 1:
        return [job(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(job, range(len(sizes))))


def mean_and_se(x: np.ndarray, axis: int = 0):
    """Sample mean and its standard error."""
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    mean = x.mean(axis=axis)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, x.std(axis=axis, ddof=1) / np.sqrt(n)
