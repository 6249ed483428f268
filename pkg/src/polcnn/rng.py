"""Seeded random streams.

Every random draw in the package comes from a Philox-4x64 counter-based bit
generator (numpy's ``Philox``) keyed by a 64-bit seed. Uniform doubles are
taken from it directly; Gaussian variates use the Box-Muller transform on
those uniforms rather than numpy's ziggurat sampler, so the mapping from
seed to values is fixed by this module alone.
"""

import numpy as np


def make_rng(seed):
    """Philox-backed generator for a 64-bit integer seed."""
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        seed &= 2 ** 64 - 1
    return np.random.Generator(np.random.Philox(key=seed))


def standard_normal(rng, size):
    """Box-Muller standard normal variates of the given shape."""
    size = tuple(size) if np.iterable(size) else (int(size),)
    n = int(np.prod(size, dtype=np.int64))
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1], keeps log finite
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n].reshape(size)


def circular_complex_normal(rng, size):
    """Standard circular complex Gaussian: ``E|z|^2 = 1``."""
    size = tuple(size) if np.iterable(size) else (int(size),)
    z = standard_normal(rng, size + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)
