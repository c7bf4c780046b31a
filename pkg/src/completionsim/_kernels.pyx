# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: per-chunk loss hashing and ECMP path hashing.

Every function here has a numpy twin in ``_pykernels`` with an identical
signature and bit-identical results.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _stream_key(uint64_t seed, uint64_t op_id, uint64_t attempt) noexcept nogil:
    cdef uint64_t h = mix64(seed + GOLDEN)
    h = mix64((h ^ op_id) + GOLDEN)
    return mix64((h ^ attempt) + GOLDEN)


def lost_indices(uint64_t key, Py_ssize_t start, Py_ssize_t stop, uint64_t threshold):
    cdef Py_ssize_t i
    cdef list out = []
    with nogil:
        for i in range(start, stop):
            if (mix64(key + <uint64_t>(i + 1) * GOLDEN) >> 11) < threshold:
                with gil:
                    out.append(i)
    return np.asarray(out, dtype=np.int64)


def count_losses(uint64_t key, Py_ssize_t start, Py_ssize_t stop, uint64_t threshold):
    cdef Py_ssize_t i
    cdef int64_t n = 0
    with nogil:
        for i in range(start, stop):
            if (mix64(key + <uint64_t>(i + 1) * GOLDEN) >> 11) < threshold:
                n += 1
    return n


def intact_messages(uint64_t seed, uint64_t first_op, Py_ssize_t messages,
                    Py_ssize_t n_chunks, uint64_t attempt, uint64_t threshold):
    cdef Py_ssize_t m, i
    cdef uint64_t key
    cdef int64_t intact = 0
    cdef bint ok
    with nogil:
        for m in range(messages):
            key = _stream_key(seed, first_op + <uint64_t>m, attempt)
            ok = True
            for i in range(n_chunks):
                if (mix64(key + <uint64_t>(i + 1) * GOLDEN) >> 11) < threshold:
                    ok = False
                    break
            if ok:
                intact += 1
    return intact


def ecmp_max_units(uint64_t seed, Py_ssize_t trials, Py_ssize_t units,
                   Py_ssize_t paths, uint64_t tag):
    result = np.zeros(trials, dtype=np.int64)
    counts = np.zeros(paths, dtype=np.int64)
    cdef int64_t[::1] res = result
    cdef int64_t[::1] cnt = counts
    cdef Py_ssize_t t, u, p
    cdef uint64_t key
    cdef int64_t best
    with nogil:
        for t in range(trials):
            for p in range(paths):
                cnt[p] = 0
            key = _stream_key(seed, <uint64_t>t, tag)
            best = 0
            for u in range(units):
                p = <Py_ssize_t>(mix64(key + <uint64_t>(u + 1) * GOLDEN) % <uint64_t>paths)
                cnt[p] += 1
                if cnt[p] > best:
                    best = cnt[p]
            res[t] = best
    return result
