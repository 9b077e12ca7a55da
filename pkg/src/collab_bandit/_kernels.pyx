# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled reward-draw kernels.

Both functions consume exactly ``n`` doubles from the bit generator, in the
same order as ``Generator.random(n)``, so results match the numpy fallback
bit for bit.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid

import numpy as np
cimport numpy as cnp

from numpy.random cimport bitgen_t

cnp.import_array()

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef bitgen_t *_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("invalid bit generator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


cdef inline Py_ssize_t _bucket(double u, const double[::1] cdf, Py_ssize_t m) noexcept nogil:
    # first index with u < cdf[i]; cdf[m-1] == 1.0 so the scan terminates
    cdef Py_ssize_t j = 0
    while j < m - 1 and u >= cdf[j]:
        j += 1
    return j


def draw_counts(object bit_generator, Py_ssize_t n, const double[::1] cdf):
    """Histogram of ``n`` draws over the support buckets described by ``cdf``."""
    cdef bitgen_t *rng = _bitgen(bit_generator)
    cdef Py_ssize_t m = cdf.shape[0]
    cdef Py_ssize_t i
    cdef double u, p0
    counts_arr = np.zeros(m, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef cnp.int64_t hits = 0
    if n <= 0:
        return counts_arr
    with bit_generator.lock, nogil:
        if m == 2:
            p0 = cdf[0]
            for i in range(n):
                u = rng.next_double(rng.state)
                if u < p0:
                    hits += 1
            counts[0] = hits
            counts[1] = n - hits
        else:
            for i in range(n):
                u = rng.next_double(rng.state)
                counts[_bucket(u, cdf, m)] += 1
    return counts_arr


def draw_indices(object bit_generator, Py_ssize_t n, const double[::1] cdf):
    """Support-bucket index of each of ``n`` draws, in draw order."""
    cdef bitgen_t *rng = _bitgen(bit_generator)
    cdef Py_ssize_t m = cdf.shape[0]
    cdef Py_ssize_t i
    out_arr = np.empty(max(n, 0), dtype=np.intp)
    cdef Py_ssize_t[::1] out = out_arr
    if n <= 0:
        return out_arr
    with bit_generator.lock, nogil:
        for i in range(n):
            out[i] = _bucket(rng.next_double(rng.state), cdf, m)
    return out_arr

