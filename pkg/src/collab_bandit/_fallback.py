"""Pure-numpy versions of the reward-draw kernels.

Each function pulls ``n`` doubles through ``Generator.random``, which reads the
bit generator one ``next_double`` at a time, so the compiled kernels and these
fallbacks see the same uniforms.
"""

import numpy as np


def _uniforms(bit_generator, n):
    return np.random.Generator(bit_generator).random(n)


def draw_indices(bit_generator, n, cdf):
    if n <= 0:
        return np.empty(0, dtype=np.intp)
    cdf = np.asarray(cdf, dtype=np.float64)
    idx = np.searchsorted(cdf, _uniforms(bit_generator, n), side="right")
    # u < 1.0 always, but guard against a cdf whose last entry rounds below it
    np.minimum(idx, len(cdf) - 1, out=idx)
    return idx.astype(np.intp, copy=False)


def draw_counts(bit_generator, n, cdf):
    cdf = np.asarray(cdf, dtype=np.float64)
    if n <= 0:
        return np.zeros(len(cdf), dtype=np.int64)
    return np.bincount(draw_indices(bit_generator, n, cdf), minlength=len(cdf)).astype(np.int64)
