"""Adjacency spectral clustering: degree trimming, top-K eigenpairs by an
iterative solver with deflation, and seeded k-means on the eigen embedding.

Used as the coarse initial clustering of the recovery algorithms; also
accepts weighted symmetric matrices (aggregate graphs and similar).
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed

__all__ = [
    "SpectralConfig",
    "EigenConvergenceError",
    "binarize",
    "top_eigenpairs",
    "kmeans",
    "spectral_cluster",
    "leave_one_out_cluster",
]


class EigenConvergenceError(RuntimeError):
    """Raised when the iterative eigensolver fails to converge."""

    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"eigensolver did not converge in {iterations} iterations "
            f"(residual {residual:.3e})"
        )


@dataclass(frozen=True)
class SpectralConfig:
    """Tuning knobs for the spectral pipeline.

    Nodes of degree above ``trim_factor * K * mean_degree`` are zeroed out
    before the eigendecomposition.
    """

    K: int
    trim_factor: float = 40.0
    kmeans_restarts: int = 8
    kmeans_iters: int = 100
    seed: int = 0
    eig_tol: float = 1e-8
    eig_max_iter: int = 1000

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("need at least one cluster")
        if self.trim_factor <= 0:
            raise ValueError("trim factor must be positive")


def binarize(array):
    """0/1 adjacency matrix marking node pairs with any nonzero interaction.

    Accepts a SnapshotArray, a (T, N, N) tensor, or a single (N, N) matrix.
    """
    data = getattr(array, "data", array)
    data = np.asarray(data)
    if data.ndim == 2:
        return (data != 0).astype(np.uint8)
    return (data != 0).any(axis=0).astype(np.uint8)


def trim_high_degree(adj, K, trim_factor):
    """Zero out rows/columns of nodes whose degree exceeds the threshold
    ``trim_factor * K * mean_degree``.  Returns (matrix, kept_mask)."""
    a = np.asarray(adj, dtype=np.float64)
    deg = np.abs(a).sum(axis=1)
    threshold = trim_factor * K * deg.mean()
    keep = deg <= threshold
    if keep.all():
        return a, keep
    out = a.copy()
    out[~keep, :] = 0.0
    out[:, ~keep] = 0.0
    return out, keep


def top_eigenpairs(A, k, tol=1e-8, max_iter=1000, rng=None):
    """Top-``k`` eigenpairs of a symmetric matrix by magnitude.

    Each eigenpair is found by a Lanczos iteration with full
    reorthogonalization on the operator with previously found pairs
    deflated away; the Krylov dimension is capped at ``max_iter``.  A pair
    is accepted once its explicit residual drops below ``tol`` times the
    infinity norm of the matrix.  Raises EigenConvergenceError on failure.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    rng = rng or np.random.default_rng(0)
    scale = max(np.abs(A).sum(axis=1).max(), 1e-30)
    vals = np.zeros(k)
    vecs = np.zeros((n, k))

    for m in range(k):
        found = _deflated_lanczos(A, vals[:m], vecs[:, :m], tol * scale, max_iter, rng)
        lam, v = found
        if m:
            v = v - vecs[:, :m] @ (vecs[:, :m].T @ v)
            v /= max(np.linalg.norm(v), 1e-300)
        vals[m] = lam
        vecs[:, m] = v
    return vals, vecs


def _deflated_lanczos(A, found_vals, found_vecs, resid_tol, max_iter, rng):
    """Largest-magnitude eigenpair of ``A`` restricted to the complement of
    the found eigenvectors."""
    n = A.shape[0]
    maxdim = min(n, max_iter)

    def op(x):
        return A @ x - found_vecs @ (found_vals * (found_vecs.T @ x))

    def reorth(x, basis):
        x = x - found_vecs @ (found_vecs.T @ x)
        if basis is not None:
            x = x - basis @ (basis.T @ x)
        return x

    q = reorth(rng.standard_normal(n), None)
    norm = np.linalg.norm(q)
    if norm < 1e-300:  # complement is empty
        return 0.0, rng.standard_normal(n) / math.sqrt(n)
    q /= norm
    Q = np.empty((n, maxdim))
    Q[:, 0] = q
    alphas = np.empty(maxdim)
    betas = np.empty(maxdim)
    last_resid = np.inf
    restarts = 0
    j = 0
    while j < maxdim:
        u = op(Q[:, j])
        alphas[j] = float(Q[:, j] @ u)
        u = reorth(u, Q[:, : j + 1])
        u = reorth(u, Q[:, : j + 1])  # second pass for orthogonality
        betas[j] = np.linalg.norm(u)
        exhausted = betas[j] < 1e-12 * max(1.0, abs(alphas[j])) or j == maxdim - 1
        check = exhausted or j < 32 or (j + 1) % max(8, j // 8) == 0
        if check:
            tri = np.diag(alphas[: j + 1])
            if j:
                off = betas[:j]
                tri += np.diag(off, 1) + np.diag(off, -1)
            theta, y = np.linalg.eigh(tri)
            idx = int(np.argmax(np.abs(theta)))
            v = Q[:, : j + 1] @ y[:, idx]
            v /= max(np.linalg.norm(v), 1e-300)
            lam = float(theta[idx])
            resid = float(np.linalg.norm(op(v) - lam * v))
            last_resid = min(last_resid, resid)
            if resid <= resid_tol:
                return lam, v
            if exhausted and betas[j] < 1e-12 * max(1.0, abs(alphas[j])):
                # invariant subspace hit without a converged pair: restart
                # from a fresh direction orthogonal to everything seen
                restarts += 1
                q = reorth(rng.standard_normal(n), Q[:, : j + 1])
                norm = np.linalg.norm(q)
                if norm < 1e-300 or restarts > 3:
                    return lam, v  # complement exhausted: best available pair
                Q[:, 0] = q / norm
                j = 0
                continue
        if j < maxdim - 1:
            Q[:, j + 1] = u / betas[j]
        j += 1
    raise EigenConvergenceError(maxdim, last_resid)


def _kmeans_pp_init(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for m in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[m] = X[rng.integers(n)]
            continue
        centers[m] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((X - centers[m]) ** 2).sum(axis=1))
    return centers


def kmeans(X, k, restarts=8, iters=100, rng=None):
    """Seeded k-means with ++-style init; best of ``restarts`` by inertia.
    Empty clusters are reseeded at the point farthest from its center."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    rng = rng or np.random.default_rng(0)
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    best_labels, best_inertia = None, np.inf
    for _ in range(max(restarts, 1)):
        centers = _kmeans_pp_init(X, k, rng)
        labels = np.zeros(n, dtype=np.int64)
        for _ in range(iters):
            d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = d2.argmin(axis=1)
            mind2 = d2[np.arange(n), new_labels]
            for c in range(k):
                mask = new_labels == c
                if mask.any():
                    centers[c] = X[mask].mean(axis=0)
                else:
                    far = int(np.argmax(mind2))
                    centers[c] = X[far]
                    new_labels[far] = c
                    mind2[far] = 0.0
            if np.array_equal(new_labels, labels):
                labels = new_labels
                break
            labels = new_labels
        inertia = float(((X - centers[labels]) ** 2).sum())
        if inertia < best_inertia:
            best_inertia, best_labels = inertia, labels.copy()
    return best_labels


def spectral_cluster(adj, config):
    """Cluster nodes of a symmetric (weighted) adjacency matrix: trim, embed
    on the top-K eigenvectors, then k-means the embedding rows."""
    rng = np.random.default_rng(derive_seed(config.seed, 0))
    trimmed, _ = trim_high_degree(adj, config.K, config.trim_factor)
    _, vecs = top_eigenpairs(
        trimmed, config.K, tol=config.eig_tol, max_iter=config.eig_max_iter, rng=rng
    )
    return kmeans(
        vecs, config.K, restarts=config.kmeans_restarts, iters=config.kmeans_iters, rng=rng
    )


def leave_one_out_cluster(adj, i, config):
    """Spectral clustering of the minor with row/column ``i`` removed;
    deterministic given (seed, i).  Returns labels on the remaining nodes
    in their original order."""
    adj = np.asarray(adj)
    n = adj.shape[0]
    if n < 3:
        raise ValueError("need at least three nodes")
    if not 0 <= i < n:
        raise ValueError("node index out of range")
    keep = np.arange(n) != i
    minor = adj[np.ix_(keep, keep)]
    rng = np.random.default_rng(derive_seed(config.seed, i + 1))
    trimmed, _ = trim_high_degree(minor, config.K, config.trim_factor)
    _, vecs = top_eigenpairs(
        trimmed, config.K, tol=config.eig_tol, max_iter=config.eig_max_iter, rng=rng
    )
    return kmeans(
        vecs, config.K, restarts=config.kmeans_restarts, iters=config.kmeans_iters, rng=rng
    )
