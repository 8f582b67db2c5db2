"""Named substreams derived from one root seed.

Every stochastic stage (folds, svm, kmeans, masks, init, ...) pulls its
generator from here so stages can be re-run independently and reproducibly.
"""

import zlib

import numpy as np


def substream(seed, name):
    """Return a Generator for the given root seed and stream name."""
    tag = zlib.crc32(str(name).encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, tag]))


def substream_seed(seed, name):
    """A 32-bit integer seed for libraries that take plain ints."""
    return int(substream(seed, name).integers(0, 2**31 - 1))
