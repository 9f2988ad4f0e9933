"""Counter-based random streams.

Every draw is a pure function of ``(seed, stream, replicate, index)``: Philox
is keyed by the first three and its counter is the index, so values do not
depend on how many draws other tasks consumed.
"""
import numpy as np

LABELS = 0
CHAIN = 1
BOOTSTRAP = 2
DIRECT = 3

_MASK64 = (1 << 64) - 1


def generator(seed, stream=LABELS, replicate=0):
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    key = (int(seed) & _MASK64) | ((int(stream) & 0xFFFFFFFF) << 96) | ((int(replicate) & 0xFFFFFFFF) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(seed, n, stream=LABELS, replicate=0):
    """``n`` doubles in [0, 1); entry ``i`` depends only on the key and ``i``."""
    return generator(seed, stream, replicate).random(int(n))
