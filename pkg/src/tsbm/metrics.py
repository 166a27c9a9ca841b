"""Partition-comparison metrics: Hamming and permutation-minimal Hamming
error, Mirkin / Rand pair-counting distances, and optimal label alignment.

Labellings are integer arrays with values in ``{0, ..., K-1}``.
"""

import itertools
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "confusion_matrix",
    "ham",
    "ham_star",
    "mirkin",
    "rand_index",
    "unique_alignment",
    "accuracy",
]


def _as_labels(s):
    a = np.asarray(s, dtype=np.int64)
    if a.ndim != 1:
        raise ValueError("labelling must be one-dimensional")
    if a.size and a.min() < 0:
        raise ValueError("labels must be non-negative")
    return a


def _check_same_length(s1, s2):
    if s1.size != s2.size:
        raise ValueError(f"length mismatch: {s1.size} vs {s2.size}")


def confusion_matrix(s1, s2, K=None):
    """Counts ``C[k, l] = #{i : s1[i] = k, s2[i] = l}`` as a K x K array."""
    s1, s2 = _as_labels(s1), _as_labels(s2)
    _check_same_length(s1, s2)
    if K is None:
        K = int(max(s1.max(initial=-1), s2.max(initial=-1))) + 1
    out = np.zeros((K, K), dtype=np.int64)
    np.add.at(out, (s1, s2), 1)
    return out


@lru_cache(maxsize=16)
def _all_permutations(K):
    if K > 10:
        raise ValueError("exhaustive search is unreasonable beyond K = 10")
    return np.array(list(itertools.permutations(range(K))), dtype=np.int64)


def ham(s1, s2):
    """Number of positions where the two labellings disagree."""
    s1, s2 = _as_labels(s1), _as_labels(s2)
    _check_same_length(s1, s2)
    return int((s1 != s2).sum())


def ham_star(s1, s2, method="auto"):
    """Hamming distance minimised over relabelings of ``s1``.

    Returns ``(distance, perm)`` where ``perm[k]`` is the new value given to
    label ``k``, so that ``ham(perm[s1], s2) == distance``.  ``method`` is
    one of ``auto`` (exhaustive up to K = 8, assignment beyond),
    ``exhaustive`` or ``assignment``.  Exhaustive search scans permutations
    in lexicographic order, so ties resolve to the lowest-index permutation.
    """
    s1, s2 = _as_labels(s1), _as_labels(s2)
    _check_same_length(s1, s2)
    C = confusion_matrix(s1, s2)
    K = C.shape[0]
    N = s1.size
    if method == "auto":
        method = "exhaustive" if K <= 8 else "assignment"
    if method == "exhaustive":
        perms = _all_permutations(K)
        agree = C[np.arange(K)[None, :], perms].sum(axis=1)
        best = int(np.argmax(agree))  # first max = lexicographically lowest
        return N - int(agree[best]), perms[best].copy()
    if method == "assignment":
        rows, cols = linear_sum_assignment(C, maximize=True)
        perm = np.empty(K, dtype=np.int64)
        perm[rows] = cols
        agree = int(C[rows, cols].sum())
        return N - agree, perm
    raise ValueError(f"unknown method {method!r}")


def _pair_counts(s1, s2):
    """(|E1|, |E2|, |E1 & E2|) of within-block unordered pair sets,
    computed from block intersection counts in O(N + K^2)."""
    C = confusion_matrix(s1, s2)
    n1 = C.sum(axis=1)
    n2 = C.sum(axis=0)
    e1 = int((n1 * (n1 - 1) // 2).sum())
    e2 = int((n2 * (n2 - 1) // 2).sum())
    both = int((C * (C - 1) // 2).sum())
    return e1, e2, both


def mirkin(s1, s2):
    """Pair-counting distance: twice the symmetric difference of the
    within-block pair sets."""
    s1, s2 = _as_labels(s1), _as_labels(s2)
    _check_same_length(s1, s2)
    e1, e2, both = _pair_counts(s1, s2)
    return 2 * (e1 + e2 - 2 * both)


def rand_index(s1, s2):
    """Rand index, related by ``mirkin = N(N-1)(1 - rand_index)``."""
    s1, s2 = _as_labels(s1), _as_labels(s2)
    _check_same_length(s1, s2)
    n = s1.size
    if n < 2:
        return 1.0
    return 1.0 - mirkin(s1, s2) / (n * (n - 1))


def unique_alignment(s1, s2):
    """The provably unique relabeling of ``s1`` matching ``s2``, when one
    exists.

    If some permutation ``rho`` achieves ``ham(rho[s1], s2)`` below half the
    smallest block size of ``s1``, that permutation is unique and equals
    ``rho[k] = argmax_l #{i: s1[i]=k, s2[i]=l}``; it is returned.  Otherwise
    returns None.
    """
    s1, s2 = _as_labels(s1), _as_labels(s2)
    _check_same_length(s1, s2)
    C = confusion_matrix(s1, s2)
    sizes = C.sum(axis=1)
    n_min = int(sizes[sizes > 0].min()) if (sizes > 0).any() else 0
    rho = np.argmax(C, axis=1)
    if len(set(rho.tolist())) != C.shape[0]:
        return None  # argmax rows collide: no dominant alignment
    distance = s1.size - int(C[np.arange(C.shape[0]), rho].sum())
    if distance < 0.5 * n_min:
        return rho
    return None


def accuracy(s_true, s_hat):
    """Fraction of correctly labelled nodes up to block relabeling."""
    s_true = _as_labels(s_true)
    if s_true.size == 0:
        return 1.0
    d, _ = ham_star(s_hat, s_true)
    return 1.0 - d / s_true.size
