"""Counter-based 64-bit hashing (splitmix64 finalizer).

All randomness in the simulator is derived from these functions so that
every injected fault is a pure function of ``(seed, identifiers)``.
"""
GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1
UNIT = 1 << 53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, op_id: int, attempt: int = 0) -> int:
    h = mix64(seed + GOLDEN)
    h = mix64((h ^ (op_id & MASK64)) + GOLDEN)
    return mix64((h ^ (attempt & MASK64)) + GOLDEN)


def counter_hash(key: int, index: int) -> int:
    return mix64(key + (index + 1) * GOLDEN)


def uniform53(key: int, index: int) -> int:
    """Top 53 bits of the counter hash; uniform on [0, 2**53)."""
    return counter_hash(key, index) >> 11


def loss_threshold(rate: float) -> int:
    """Integer cut so that ``uniform53(...) < threshold`` iff ``u < rate``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must be in [0, 1], got {rate}")
    # rate * 2**53 is exact in binary floating point
    t = rate * UNIT
    return int(t) + (0 if t == int(t) else 1)


def uniform_int(key: int, index: int, lo: int, hi: int) -> int:
    """Deterministic integer in [lo, hi]."""
    if hi < lo:
        raise ValueError("empty range")
    return lo + counter_hash(key, index) % (hi - lo + 1)
