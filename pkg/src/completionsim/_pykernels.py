"""Numpy implementations of the compiled kernels.

Used when the extension module is unavailable, or when
``COMPLETIONSIM_PURE=1`` is set in the environment.
"""
import numpy as np

from .hashing import GOLDEN, stream_key

_G = np.uint64(GOLDEN)
_BLOCK = 1 << 16


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _hashes(key, start, stop):
    idx = np.arange(start + 1, stop + 1, dtype=np.uint64)
    return _mix(np.uint64(key) + idx * _G)


def lost_indices(key, start, stop, threshold):
    out = []
    for lo in range(start, stop, _BLOCK):
        hi = min(stop, lo + _BLOCK)
        hit = np.flatnonzero((_hashes(key, lo, hi) >> np.uint64(11)) < np.uint64(threshold))
        out.append(hit.astype(np.int64) + lo)
    if not out:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(out)


def count_losses(key, start, stop, threshold):
    n = 0
    for lo in range(start, stop, _BLOCK):
        hi = min(stop, lo + _BLOCK)
        n += int(np.count_nonzero((_hashes(key, lo, hi) >> np.uint64(11)) < np.uint64(threshold)))
    return n


def intact_messages(seed, first_op, messages, n_chunks, attempt, threshold):
    intact = 0
    for m in range(messages):
        key = stream_key(seed, first_op + m, attempt)
        for lo in range(0, n_chunks, _BLOCK):
            hi = min(n_chunks, lo + _BLOCK)
            if np.any((_hashes(key, lo, hi) >> np.uint64(11)) < np.uint64(threshold)):
                break
        else:
            intact += 1
    return intact


def ecmp_max_units(seed, trials, units, paths, tag):
    result = np.zeros(trials, dtype=np.int64)
    for t in range(trials):
        p = _hashes(stream_key(seed, t, tag), 0, units) % np.uint64(paths)
        result[t] = np.bincount(p.astype(np.int64), minlength=paths).max() if units else 0
    return result
