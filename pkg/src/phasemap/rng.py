"""SplitMix64 generator.

The algorithm is fixed so that ports in other languages draw identical
matrices from the same seed::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

All arithmetic is modulo 2**64. Uniform doubles take the top 53 bits.
"""

import numpy as np

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self):
        """Double in ``[0, 1)``."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def symmetric(self, shape=()):
        """Entries uniform in ``[-1, 1)``, filled in row-major order."""
        size = int(np.prod(shape)) if shape != () else 1
        vals = [2.0 * self.uniform() - 1.0 for _ in range(size)]
        if shape == ():
            return vals[0]
        return np.array(vals).reshape(shape)

    def signs(self, size):
        return np.array([1.0 if self.next_u64() >> 63 else -1.0 for _ in range(size)])
