"""Deterministic random substreams.

Every stochastic routine derives its generator from a root seed plus an
integer key path, so work can be split across workers without changing
the draws each piece of work sees.
"""

import numpy as np


def substream(seed, *key):
    """Return an independent generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
