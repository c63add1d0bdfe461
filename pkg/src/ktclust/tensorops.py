"""Third-order tensor algebra used by the representation solver.

Tensors are plain numpy arrays of shape ``(n1, n2, n3)``; index ``k`` selects
the frontal slice ``t[:, :, k]``. The spectral domain is reached by a DFT
along the third axis; slice-wise SVDs there give the tensor SVD, the slice-sum
nuclear norm, and its proximal (singular value shrinkage) operator. The
stack/rotate pair maps a list of per-view square matrices onto the tensor
layout the solver regularizes.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TSVDFactors",
    "dft_mode3",
    "idft_mode3",
    "tsvd",
    "tnn",
    "tnn_prox",
    "rotate",
    "unrotate",
]

SYMMETRY_TOL = 1e-9


def _as_tensor3(t):
    t = np.asarray(t)
    if t.ndim != 3:
        raise ValueError(f"expected a 3-order tensor, got shape {t.shape}")
    return t


def dft_mode3(t):
    """Discrete Fourier transform along the third (frontal-slice) axis.

    Slice ``k`` of the result is ``sum_m t[:, :, m] * exp(-2i*pi*k*m/n3)``.
    """
    return np.fft.fft(_as_tensor3(t).astype(np.complex128, copy=False), axis=2)


def idft_mode3(s):
    """Inverse of :func:`dft_mode3`; returns a real tensor.

    The input must be conjugate-symmetric along the third axis (slice ``k``
    pairs with slice ``(n3 - k) mod n3``), which is what the forward
    transform of any real tensor produces. The tiny imaginary residue of the
    inverse transform is discarded; asymmetry above tolerance means the
    spectral object is corrupted and raises ``ValueError``.
    """
    s = _as_tensor3(np.asarray(s, dtype=np.complex128))
    n3 = s.shape[2]
    scale = max(1.0, float(np.max(np.abs(s)))) if s.size else 1.0
    mirrored = np.conj(s[:, :, (n3 - np.arange(n3)) % n3])
    violation = float(np.max(np.abs(s - mirrored))) if s.size else 0.0
    if violation > SYMMETRY_TOL * scale:
        raise ValueError(
            f"conjugate symmetry violated by {violation:.3e}; "
            "not the spectrum of a real tensor"
        )
    return np.fft.ifft(s, axis=2).real


def _fix_phases(u, vh):
    # make the first nonzero entry of each left singular vector real
    # nonnegative; compensating the paired right vector keeps the product
    m = min(u.shape[0], vh.shape[0])
    for j in range(u.shape[1]):
        col = u[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size == 0:
            continue
        phase = col[nz[0]] / abs(col[nz[0]])
        u[:, j] = col * np.conj(phase)
        if j < m:
            vh[j, :] = vh[j, :] * phase
    return u, vh


@dataclass(frozen=True)
class TSVDFactors:
    """Spectral-domain factors of a slice-wise tensor SVD.

    ``u_f`` is n1 x n1 x n3, ``s_f`` is n1 x n2 x n3 (f-diagonal with real,
    nonnegative, nonincreasing diagonal per slice), ``v_f`` is n2 x n2 x n3.
    Per spectral slice ``j`` the product
    ``u_f[:, :, j] @ s_f[:, :, j] @ v_f[:, :, j].conj().T`` equals the
    spectral slice of the factored tensor.
    """

    u_f: np.ndarray
    s_f: np.ndarray
    v_f: np.ndarray

    def reconstruct(self):
        """Multiply the factors slice-wise and transform back to a real tensor."""
        n1, n2, n3 = self.s_f.shape
        g = np.empty((n1, n2, n3), dtype=np.complex128)
        for j in range(n3):
            g[:, :, j] = (
                self.u_f[:, :, j] @ self.s_f[:, :, j] @ self.v_f[:, :, j].conj().T
            )
        return idft_mode3(g)


def tsvd(t):
    """Slice-wise SVD of the spectral slices of ``t``.

    The factors are kept in the spectral domain; phases of the left singular
    vectors are normalized (first nonzero entry real nonnegative) so the
    decomposition is deterministic.
    """
    t = _as_tensor3(t)
    n1, n2, n3 = t.shape
    s_hat = dft_mode3(t)
    u_f = np.empty((n1, n1, n3), dtype=np.complex128)
    s_f = np.zeros((n1, n2, n3))
    v_f = np.empty((n2, n2, n3), dtype=np.complex128)
    diag = np.arange(min(n1, n2))
    for j in range(n3):
        try:
            u, s, vh = np.linalg.svd(s_hat[:, :, j], full_matrices=True)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"SVD did not converge on spectral slice {j}"
            ) from exc
        u, vh = _fix_phases(u, vh)
        u_f[:, :, j] = u
        s_f[diag, diag, j] = s
        v_f[:, :, j] = vh.conj().T
    return TSVDFactors(u_f=u_f, s_f=s_f, v_f=v_f)


def tnn(t):
    """Sum of the singular values of every mode-3 spectral slice of ``t``."""
    s_hat = dft_mode3(t)
    total = 0.0
    for j in range(s_hat.shape[2]):
        total += float(np.linalg.svd(s_hat[:, :, j], compute_uv=False).sum())
    return total


def tnn_prox(f, threshold):
    """Shrink the singular values of every spectral slice of ``f`` by ``threshold``.

    With ``threshold = n3 / rho`` the result minimizes
    ``tnn(g) + (rho / 2) * ||g - f||_F**2`` over real tensors ``g``; the
    ``n3`` factor absorbs the Parseval scaling of the Frobenius term.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    f = _as_tensor3(f)
    f_hat = dft_mode3(f)
    g_hat = np.empty_like(f_hat)
    for j in range(f.shape[2]):
        try:
            u, s, vh = np.linalg.svd(f_hat[:, :, j], full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"SVD did not converge on spectral slice {j}"
            ) from exc
        g_hat[:, :, j] = (u * np.maximum(s - threshold, 0.0)) @ vh
    return idft_mode3(g_hat)


def rotate(views):
    """Stack ``V`` square N x N matrices into an ``(N, V, N)`` tensor.

    ``out[i, v, j] = views[v][i, j]``; the per-view coefficients end up along
    the axis the spectral transform runs over.
    """
    if len(views) == 0:
        raise ValueError("need at least one view")
    mats = [np.asarray(z, dtype=float) for z in views]
    for v, z in enumerate(mats):
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise ValueError(f"view {v} is not a square matrix: shape {z.shape}")
    n = mats[0].shape[0]
    if any(z.shape[0] != n for z in mats):
        raise ValueError("views disagree on matrix size")
    return np.stack(mats, axis=1)


def unrotate(t):
    """Exact inverse of :func:`rotate`: recover the list of per-view matrices."""
    t = _as_tensor3(t)
    n1, n_views, n3 = t.shape
    if n1 != n3:
        raise ValueError(f"not a rotated view stack: dims {t.shape}")
    return [t[:, v, :].copy() for v in range(n_views)]
