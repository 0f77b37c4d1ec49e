"""Truncated-normal sampling and reproducible substream derivation.

Lives in its own module because both the problem model (noise laws) and
the simulator need it.
"""

import numpy as np
from scipy.special import ndtr, ndtri

# substream purposes
EXO = 0
ENDO = 1
POLICY = 2


def sample_truncated_normal(rng, sigma, a, b):
    """One draw (per component) of N(0, sigma^2) conditioned on [a, b].

    Inverse-CDF construction: x = sigma * Phi^-1(Phi(a/s) + U (Phi(b/s) - Phi(a/s))).
    Requires a <= 0 <= b; sigma = 0 returns 0 exactly.  `a` and `b` may be
    arrays (broadcast together); the return matches their shape.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scalar = a.ndim == 0 and b.ndim == 0
    a, b = np.broadcast_arrays(a, b)
    if np.any(a > b):
        raise ValueError("truncation requires a <= b")
    if np.any(a > 0) or np.any(b < 0):
        raise ValueError("truncation interval must contain 0 (a <= 0 <= b)")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        out = np.zeros(a.shape)
        return float(out) if scalar else out

    lo = ndtr(a / sigma)
    hi = ndtr(b / sigma)
    z = hi - lo
    u = rng.random(a.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = sigma * ndtri(lo + u * z)
    # degenerate interval (a == b == 0) and fp guards at the tails
    x = np.where(z <= 0, 0.0, x)
    x = np.clip(x, a, b)
    return float(x) if scalar else x


def substream(seed, *key):
    """Independent generator for (seed, key...); same key gives identical draws."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


class RngStream:
    """Master seed with (replication, stage, purpose) substream derivation."""

    def __init__(self, seed):
        self.seed = int(seed)

    def episode(self, rep):
        return EpisodeStream(self.seed, rep)


class EpisodeStream:
    """Substreams of one replication; draws are independent across stages and purposes."""

    def __init__(self, seed, rep):
        self.seed = int(seed)
        self.rep = int(rep)

    def get(self, stage, purpose):
        return substream(self.seed, self.rep, stage, purpose)
