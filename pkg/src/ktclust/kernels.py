"""Per-view Gram matrices, their eigen-factors, and the feature-space
self-representation error.

A view enters as a d x N feature matrix with samples in columns. Its Gram
matrix is factored once as ``K = V diag(sigma**2) V.T`` with the numerical
rank detected relative to the largest eigenvalue; the factor is what the
solver consumes, both for the per-column representation error
``sum_i sqrt(p_i.T K p_i)`` and for the shrinkage subproblem it induces.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.spatial.distance

__all__ = [
    "KernelSpec",
    "KernelFactor",
    "gram_matrix",
    "factor_kernel",
    "h_value",
    "median_bandwidth",
]

KERNEL_KINDS = ("linear", "gaussian", "precomputed")
PRECOMPUTED_SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to apply to one view.

    ``bandwidth`` only matters for the gaussian kind; ``None`` means the
    median pairwise distance of the view decides it at evaluation time.
    """

    kind: str = "linear"
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(
                f"unknown kernel kind {self.kind!r}, expected one of {KERNEL_KINDS}"
            )
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class KernelFactor:
    """Eigen-factor ``K = eigvecs @ diag(sigmas**2) @ eigvecs.T``.

    ``eigvecs`` is N x r with orthonormal columns; ``sigmas`` holds the
    square roots of the retained eigenvalues, descending and positive.
    A zero kernel factors to rank 0 with empty arrays.
    """

    eigvecs: np.ndarray
    sigmas: np.ndarray
    rank: int = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rank", int(self.sigmas.shape[0]))
        object.__setattr__(self, "n", int(self.eigvecs.shape[0]))

    def reconstruct(self):
        return (self.eigvecs * self.sigmas**2) @ self.eigvecs.T


def median_bandwidth(x):
    """Median of the nonzero pairwise sample distances of a d x N view.

    Falls back to 1.0 when every distance is zero (all samples identical)
    or there is a single sample.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[1] < 2:
        return 1.0
    d = scipy.spatial.distance.pdist(x.T)
    d = d[d > 0]
    if d.size == 0:
        return 1.0
    return float(np.median(d))


def gram_matrix(x, spec):
    """N x N Gram matrix of the columns of ``x`` under ``spec``.

    For ``precomputed`` the input is taken to already be the kernel matrix
    and is only validated. The output is symmetrized by averaging so the
    factorization step sees an exactly symmetric matrix.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("feature matrix contains non-finite values")
    if x.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {x.shape}")
    if spec.kind == "precomputed":
        if x.shape[0] != x.shape[1]:
            raise ValueError(
                f"precomputed kernel must be square, got shape {x.shape}"
            )
        scale = max(1.0, float(np.max(np.abs(x))))
        if float(np.max(np.abs(x - x.T))) > PRECOMPUTED_SYMMETRY_TOL * scale:
            raise ValueError("precomputed kernel is not symmetric")
        k = x
    elif spec.kind == "linear":
        k = x.T @ x
    elif spec.kind == "gaussian":
        bw = spec.bandwidth if spec.bandwidth is not None else median_bandwidth(x)
        sq = scipy.spatial.distance.squareform(
            scipy.spatial.distance.pdist(x.T, metric="sqeuclidean")
        )
        k = np.exp(-sq / (2.0 * bw**2))
    else:  # pragma: no cover - guarded by KernelSpec
        raise ValueError(f"unknown kernel kind {spec.kind!r}")
    return 0.5 * (k + k.T)


def factor_kernel(k, rank_tol=1e-8):
    """Factor a symmetric PSD-up-to-noise matrix into a :class:`KernelFactor`.

    Eigenvalues are clamped at zero; those above ``rank_tol`` times the
    largest are retained. The stored ``sigmas`` are their square roots in
    descending order.
    """
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"kernel must be square, got shape {k.shape}")
    scale = max(1.0, float(np.max(np.abs(k)))) if k.size else 1.0
    if float(np.max(np.abs(k - k.T))) > PRECOMPUTED_SYMMETRY_TOL * scale:
        raise ValueError("kernel matrix is not symmetric")
    if not rank_tol > 0:
        raise ValueError(f"rank_tol must be positive, got {rank_tol}")
    evals, evecs = scipy.linalg.eigh(0.5 * (k + k.T))
    evals = np.maximum(evals, 0.0)
    # eigh returns ascending order; flip to descending
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    lam_max = evals[0] if evals.size else 0.0
    if lam_max <= 0.0:
        return KernelFactor(
            eigvecs=np.zeros((k.shape[0], 0)), sigmas=np.zeros(0)
        )
    keep = evals > rank_tol * lam_max
    return KernelFactor(
        eigvecs=np.ascontiguousarray(evecs[:, keep]),
        sigmas=np.sqrt(evals[keep]),
    )


def h_value(p, factor):
    """Sum over columns of ``sqrt(p_i.T K p_i)``, evaluated via the factor.

    Each column contributes the Euclidean norm of
    ``diag(sigmas) @ eigvecs.T @ p_i``, which equals the feature-space norm
    of the column's reconstruction residual direction. For a linear kernel
    built from ``X`` this is exactly the L2,1 norm of ``X @ p``.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != factor.n:
        raise ValueError(
            f"coefficient matrix shape {p.shape} does not match kernel on "
            f"{factor.n} samples"
        )
    if factor.rank == 0:
        return 0.0
    proj = factor.sigmas[:, None] * (factor.eigvecs.T @ p)
    return float(np.sum(np.linalg.norm(proj, axis=0)))
