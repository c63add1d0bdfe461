"""Affinity construction and normalized spectral clustering.

The affinity averages symmetrized absolute coefficients over views. The
clustering is the symmetric-normalization variant: embed samples in the top
eigenvectors of ``D**-1/2 A D**-1/2``, normalize rows, then run seeded
k-means with plus-plus initialization and multiple restarts. Everything is
deterministic given the seed.
"""

import numpy as np
import scipy.linalg

__all__ = ["build_affinity", "spectral_cluster"]

KMEANS_MAX_STEPS = 300


def build_affinity(z_views):
    """Average of ``(|Z_v| + |Z_v.T|) / 2`` over views; symmetric by construction."""
    if len(z_views) == 0:
        raise ValueError("need at least one view")
    mats = [np.asarray(z, dtype=float) for z in z_views]
    n = mats[0].shape[0]
    for v, z in enumerate(mats):
        if z.shape != (n, n):
            raise ValueError(f"view {v} has shape {z.shape}, expected ({n}, {n})")
    acc = np.zeros((n, n))
    for z in mats:
        a = np.abs(z)
        acc += 0.5 * (a + a.T)
    return acc / len(mats)


def _kmeans_once(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    # plus-plus seeding: draw centers proportionally to squared distance
    centers[0] = points[int(rng.integers(n))]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))

    labels = None
    for _ in range(KMEANS_MAX_STEPS):
        dist = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(dist, axis=1)
        # an emptied cluster steals the point farthest from its own center
        taken = []
        for j in range(k):
            if np.any(new_labels == j):
                continue
            gap = dist[np.arange(n), new_labels].copy()
            if taken:
                gap[taken] = -1.0
            far = int(np.argmax(gap))
            new_labels[far] = j
            taken.append(far)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = points[labels == j]
            if members.shape[0]:
                centers[j] = members.mean(axis=0)
    inertia = float(np.sum((points - centers[labels]) ** 2))
    return labels, inertia


def spectral_cluster(affinity, n_clusters, seed=0, restarts=30):
    """Cluster rows of a symmetric nonnegative affinity into ``n_clusters``.

    Parameters
    ----------
    affinity : (N, N) array
        Symmetric nonnegative similarities; isolated rows (zero degree) are
        embedded at the origin and land in whichever cluster claims them.
    n_clusters : int
        Number of clusters, between 1 and N.
    seed : int
        Base seed; restart r draws from ``default_rng([seed, r])``.
    restarts : int
        k-means restarts; the lowest-inertia run wins, ties going to the
        earliest restart.

    Returns
    -------
    labels : (N,) integer array in ``[0, n_clusters)``.
    """
    a = np.asarray(affinity, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"affinity must be square, got shape {a.shape}")
    n = a.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(
            f"n_clusters must be in [1, {n}], got {n_clusters}"
        )
    if restarts < 1:
        raise ValueError(f"restarts must be positive, got {restarts}")
    degree = a.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.where(degree > 0, degree, 1.0))
    l_sym = inv_sqrt[:, None] * a * inv_sqrt[None, :]
    l_sym = 0.5 * (l_sym + l_sym.T)
    _, vecs = scipy.linalg.eigh(l_sym, subset_by_index=[n - n_clusters, n - 1])
    emb = vecs[:, ::-1]
    norms = np.linalg.norm(emb, axis=1)
    emb = emb / np.where(norms > 0, norms, 1.0)[:, None]

    best_labels, best_inertia = None, np.inf
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        labels, inertia = _kmeans_once(emb, n_clusters, rng)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels
