"""Synthetic data generation for homogeneous block models with pluggable
pair-interaction laws, plus the line-oriented ``tsbm`` snapshot file format.

Pair patterns are drawn from counter-based substreams keyed by
``(seed, i, j)``, so generation order (serial, parallel, chunked) never
changes the output.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._rng import counter_uniform
from .markov import BinaryMarkovChain

__all__ = [
    "SnapshotArray",
    "SnapshotFormatError",
    "MalformedHeaderError",
    "DuplicateEdgeError",
    "IndexRangeError",
    "sample_labelling",
    "balanced_labelling",
    "sample_markov_snapshots",
    "sample_categorical_snapshots",
    "write_snapshots",
    "read_snapshots",
    "write_labels",
    "read_labels",
]


class SnapshotFormatError(ValueError):
    """Base error for malformed snapshot files."""


class MalformedHeaderError(SnapshotFormatError):
    pass


class DuplicateEdgeError(SnapshotFormatError):
    pass


class IndexRangeError(SnapshotFormatError):
    pass


@dataclass
class SnapshotArray:
    """Symmetric ``T x N x N`` interaction tensor with zero diagonal.

    Entries are non-negative integers: 0/1 bits for temporal graphs, symbol
    codes for categorical interactions (where ``T`` is typically 1).
    """

    data: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise ValueError("data must have shape (T, N, N)")
        self.data = a
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (a.shape[1],):
                raise ValueError("labels length must match node count")

    @property
    def T(self):
        return self.data.shape[0]

    @property
    def N(self):
        return self.data.shape[1]

    def validate(self):
        """Check symmetry and zero diagonal; raises on violation."""
        for t in range(self.T):
            m = self.data[t]
            if not np.array_equal(m, m.T):
                raise ValueError(f"snapshot {t + 1} is not symmetric")
            if np.any(np.diagonal(m) != 0):
                raise ValueError(f"snapshot {t + 1} has a nonzero diagonal")
        return self


def sample_labelling(N, K, weights=None, seed=0):
    """I.i.d. block labels in ``{0, ..., K-1}``: uniform by default or from
    the given weight vector.  Deterministic given the seed."""
    if K < 1 or K > N:
        raise ValueError("need 1 <= K <= N")
    u = counter_uniform(seed, 0, np.arange(N))
    if weights is None:
        return np.minimum((u * K).astype(np.int64), K - 1)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (K,) or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("degenerate weight vector")
    cdf = np.cumsum(w / w.sum())
    return np.minimum(np.searchsorted(cdf, u, side="right"), K - 1).astype(np.int64)


def balanced_labelling(N, K):
    """Deterministic labelling with block sizes as equal as possible."""
    if K < 1 or K > N:
        raise ValueError("need 1 <= K <= N")
    return (np.arange(N) * K // N).astype(np.int64)


def _pair_index(N):
    iu, ju = np.triu_indices(N, k=1)
    return iu, ju, iu.astype(np.uint64) * np.uint64(N) + ju.astype(np.uint64)


def sample_markov_snapshots(labels, intra, inter, T, seed=0):
    """Markov interaction snapshots: each unordered pair's T-bit pattern is
    an independent chain, ``intra`` within blocks and ``inter`` across."""
    if T < 1:
        raise ValueError("need at least one snapshot")
    labels = np.asarray(labels, dtype=np.int64)
    N = labels.size
    iu, ju, streams = _pair_index(N)
    same = labels[iu] == labels[ju]
    mu1 = np.where(same, intra.mu1, inter.mu1)
    p01 = np.where(same, intra.p01, inter.p01)
    p11 = np.where(same, intra.p11, inter.p11)

    out = np.zeros((T, N, N), dtype=np.uint8)
    cur = (counter_uniform(seed, streams, 0) < mu1).astype(np.uint8)
    out[0, iu, ju] = cur
    out[0, ju, iu] = cur
    for t in range(1, T):
        u = counter_uniform(seed, streams, t)
        cur = (u < np.where(cur == 1, p11, p01)).astype(np.uint8)
        out[t, iu, ju] = cur
        out[t, ju, iu] = cur
    return SnapshotArray(out, labels=labels)


def sample_categorical_snapshots(labels, f, g, seed=0):
    """One snapshot of i.i.d. categorical interactions: symbol law ``f``
    within blocks, ``g`` across.  Alphabets must match."""
    if len(f) != len(g):
        raise ValueError(f"alphabet mismatch: {len(f)} vs {len(g)}")
    labels = np.asarray(labels, dtype=np.int64)
    N = labels.size
    iu, ju, streams = _pair_index(N)
    same = labels[iu] == labels[ju]
    u = counter_uniform(seed, streams, 0)
    sym_f = np.searchsorted(np.cumsum(f.probs), u, side="right")
    sym_g = np.searchsorted(np.cumsum(g.probs), u, side="right")
    sym = np.where(same, sym_f, sym_g).astype(np.int64)
    sym = np.minimum(sym, len(f) - 1)
    out = np.zeros((1, N, N), dtype=np.int64)
    out[0, iu, ju] = sym
    out[0, ju, iu] = sym
    return SnapshotArray(out, labels=labels)


# ---------------------------------------------------------------------------
# File format: line-oriented, diff-able, sparse-friendly
#
#   # comment
#   tsbm 1 N T
#   labels l1 ... lN          (optional; 1-based block labels)
#   e t i j                   (set bit: 1-based t, 0-based i < j)
#   e t i j v                 (general symbol v != 1)
# ---------------------------------------------------------------------------

_MAGIC = "tsbm"
_VERSION = "1"


def write_snapshots(path, array, labels=None):
    """Write an array (and optional labels line) in ``tsbm`` format."""
    if labels is None:
        labels = array.labels
    data = array.data
    T, N = array.T, array.N
    with open(path, "w") as fh:
        fh.write(f"{_MAGIC} {_VERSION} {N} {T}\n")
        if labels is not None:
            fh.write("labels " + " ".join(str(int(l) + 1) for l in labels) + "\n")
        for t in range(T):
            iu, ju = np.nonzero(np.triu(data[t], k=1))
            vals = data[t][iu, ju]
            for i, j, v in zip(iu.tolist(), ju.tolist(), vals.tolist()):
                if v == 1:
                    fh.write(f"e {t + 1} {i} {j}\n")
                else:
                    fh.write(f"e {t + 1} {i} {j} {v}\n")


def read_snapshots(path):
    """Read a ``tsbm`` file; the result round-trips bit-exactly."""
    header = None
    labels = None
    edges = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if header is None:
                if len(tokens) != 4 or tokens[0] != _MAGIC or tokens[1] != _VERSION:
                    raise MalformedHeaderError(f"line {lineno}: bad header {line!r}")
                try:
                    N, T = int(tokens[2]), int(tokens[3])
                except ValueError:
                    raise MalformedHeaderError(f"line {lineno}: bad header {line!r}")
                if N < 1 or T < 1:
                    raise MalformedHeaderError(f"line {lineno}: bad dimensions {line!r}")
                header = (N, T)
                continue
            if tokens[0] == "labels":
                if len(tokens) != header[0] + 1:
                    raise MalformedHeaderError(
                        f"line {lineno}: labels line needs {header[0]} entries"
                    )
                labels = np.array([int(x) - 1 for x in tokens[1:]], dtype=np.int64)
                if labels.min() < 0:
                    raise IndexRangeError(f"line {lineno}: labels must be >= 1")
                continue
            if tokens[0] == "e":
                if len(tokens) not in (4, 5):
                    raise MalformedHeaderError(f"line {lineno}: bad edge line {line!r}")
                try:
                    t, i, j = int(tokens[1]), int(tokens[2]), int(tokens[3])
                    v = int(tokens[4]) if len(tokens) == 5 else 1
                except ValueError:
                    raise MalformedHeaderError(f"line {lineno}: bad edge line {line!r}")
                edges.append((lineno, t, i, j, v))
                continue
            raise MalformedHeaderError(f"line {lineno}: unknown record {tokens[0]!r}")
    if header is None:
        raise MalformedHeaderError("missing header line")
    N, T = header
    data = np.zeros((T, N, N), dtype=np.int64)
    seen = set()
    for lineno, t, i, j, v in edges:
        if not 1 <= t <= T:
            raise IndexRangeError(f"line {lineno}: snapshot index {t} outside 1..{T}")
        if i == j:
            raise IndexRangeError(f"line {lineno}: self-loop on node {i}")
        if not (0 <= i < j < N):
            raise IndexRangeError(f"line {lineno}: need 0 <= i < j < N, got {i}, {j}")
        if (t, i, j) in seen:
            raise DuplicateEdgeError(f"line {lineno}: duplicate edge {t} {i} {j}")
        seen.add((t, i, j))
        if v == 0:
            raise IndexRangeError(f"line {lineno}: explicit zero value")
        data[t - 1, i, j] = v
        data[t - 1, j, i] = v
    if data.max(initial=0) <= 1:
        data = data.astype(np.uint8)
    return SnapshotArray(data, labels=labels)


def write_labels(path, labels):
    """Write a sidecar file holding a single 1-based ``labels`` line."""
    with open(path, "w") as fh:
        fh.write("labels " + " ".join(str(int(l) + 1) for l in labels) + "\n")


def read_labels(path):
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if tokens[0] != "labels":
                raise MalformedHeaderError(f"expected a labels line, got {tokens[0]!r}")
            labels = np.array([int(x) - 1 for x in tokens[1:]], dtype=np.int64)
            if labels.size and labels.min() < 0:
                raise IndexRangeError("labels must be >= 1")
            return labels
    raise MalformedHeaderError("missing labels line")
