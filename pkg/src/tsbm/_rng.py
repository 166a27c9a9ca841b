"""Counter-based uniform random numbers with per-stream substreams.

Every variate is a pure function of (seed, stream, step), so generation is
order-independent and safe to parallelise: drawing stream 7 before stream 3
yields bit-identical values.  The mixer is the SplitMix64 finalizer applied
in a chained fashion over the three words.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / float(np.uint64(1) << np.uint64(53))


def _mix64(x):
    """SplitMix64 avalanche finalizer, elementwise on uint64 arrays."""
    # uint64 arithmetic is modular by design
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _MIX1
        x = (x ^ (x >> np.uint64(27))) * _MIX2
        return x ^ (x >> np.uint64(31))


def counter_uniform(seed, stream, step):
    """Uniform variates in [0, 1) keyed by (seed, stream, step).

    ``stream`` and ``step`` may be integers or integer arrays; they broadcast
    against each other.  The same key always returns the same value.
    """
    with np.errstate(over="ignore"):
        s = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        h = _mix64(s ^ (np.asarray(stream, dtype=np.uint64) + _GOLDEN) * _MIX1)
        h = _mix64(h ^ (np.asarray(step, dtype=np.uint64) + _GOLDEN) * _MIX2)
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


def derive_seed(master_seed, index):
    """Derive an independent 63-bit integer seed for substream ``index``."""
    with np.errstate(over="ignore"):
        s = _mix64(np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        h = _mix64(s ^ (np.uint64(index) + _GOLDEN) * _MIX1)
    return int(h >> np.uint64(1))
