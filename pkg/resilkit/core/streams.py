# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Counter-based random streams.

Every random draw in the toolkit comes from a generator keyed by
``(master seed, stream id, t)``.  The key is derived from the master seed
and stream id, and the time index goes into the Philox counter, so the
draw at any step can be regenerated without replaying the steps before
it.  Distinct stream ids give independent streams that can be consumed
concurrently.

"""

import zlib

import numpy as np


def stream_key(seed, stream):
    """Derive the 128 bit Philox key for a (seed, stream) pair.

    Args:
        seed (int): The master seed.
        stream (int or str): The stream id.  Strings are hashed with CRC32
            so that named streams are stable across runs.

    Returns:
        (array): Two uint64 words.

    """
    if isinstance(stream, str):
        stream = zlib.crc32(stream.encode())
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF,
                                 int(stream) & 0xFFFFFFFFFFFFFFFF])
    return ss.generate_state(2, dtype=np.uint64)


def generator(seed, stream, t=0):
    """Return a numpy Generator positioned at time index t of a stream.

    The time index occupies the most significant counter word, which leaves
    2**192 draws per step before two steps could overlap.

    Args:
        seed (int): The master seed.
        stream (int or str): The stream id.
        t (int): The time (or sample) index.

    Returns:
        (numpy.random.Generator): A fresh generator.

    """
    counter = np.array([0, 0, 0, int(t)], dtype=np.uint64)
    bitgen = np.random.Philox(counter=counter, key=stream_key(seed, stream))
    return np.random.Generator(bitgen)


def substream(stream, index):
    """Build a derived stream id, e.g. one per Monte Carlo sample."""
    return "{}/{}".format(stream, index)
