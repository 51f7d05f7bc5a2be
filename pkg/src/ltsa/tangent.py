"""Local affine models of the k-neighborhoods.

For a neighborhood ``X_i`` (``m x k``) with mean ``c_i`` the frame holds the
top-``d`` left singular vectors ``Q_i`` of ``X_i - c_i e^T``, the local
coordinates ``Theta_i = Q_i^T (X_i - c_i e^T)``, every singular value of the
centered block, and the alignment factor ``G_i = [e/sqrt(k), V_d]`` built from
the matching right singular vectors.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import as_data_matrix
from .errors import NeighborhoodError

__all__ = [
    "FLAG_RATIO",
    "LocalFrame",
    "all_frames",
    "estimate_dim",
    "local_frame",
    "singular_ratio_profile",
]

#: A frame is condition-flagged when sigma_{d+1} / sigma_d exceeds this.
FLAG_RATIO = 0.99

# the Gram route loses orthogonality of Q once sigma_d / sigma_1 gets this small
_GRAM_MIN_RATIO = 1e-6


@dataclass
class LocalFrame:
    index: int
    neighbors: np.ndarray
    center: np.ndarray
    basis: np.ndarray
    coords: np.ndarray
    sigmas: np.ndarray
    g_factor: np.ndarray
    residual_norms: np.ndarray
    flagged: bool
    route: str

    @property
    def k(self) -> int:
        return len(self.neighbors)

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    @property
    def tangent_error(self) -> float:
        """Frobenius norm of the residual ``X_i - (c_i e^T + Q_i Theta_i)``."""
        return float(np.sqrt(np.sum(self.residual_norms**2)))

    @property
    def gap_ratio(self) -> float:
        """``sigma_{d+1} / sigma_d`` (0 when ``d`` exhausts the stored values)."""
        d = self.d
        if len(self.sigmas) <= d:
            return 0.0
        if self.sigmas[d - 1] == 0:
            return 1.0
        return float(self.sigmas[d] / self.sigmas[d - 1])


def _svd_route(Xc, d):
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    return U[:, :d], s, Vt[:d].T


def _gram_route(Xc, d):
    C = Xc.T @ Xc
    _, V = np.linalg.eigh(C)
    V = V[:, ::-1][:, : min(Xc.shape)]
    XV = Xc @ V
    # singular values as norms of X v_j stay accurate to eps * sigma_1
    s = np.linalg.norm(XV, axis=0)
    order = np.argsort(-s, kind="stable")
    s, V, XV = s[order], V[:, order], XV[:, order]
    if s[0] == 0 or s[d - 1] < _GRAM_MIN_RATIO * s[0]:
        return None
    return XV[:, :d] / s[:d], s, V[:, :d]


def local_frame(
    X,
    neighbors,
    d: int,
    index: int | None = None,
    route: str = "auto",
    flag_ratio: float = FLAG_RATIO,
) -> LocalFrame:
    """Best ``d``-dimensional affine fit of the columns ``X[:, neighbors]``.

    ``route`` selects ``"svd"`` (thin SVD of the ``m x k`` block), ``"gram"``
    (eigendecomposition of the ``k x k`` correlation matrix) or ``"auto"``,
    which takes the Gram route when ``k < m``. The Gram route falls back to
    the SVD when ``sigma_d`` is too small relative to ``sigma_1`` for its
    basis to stay orthonormal.
    """
    X = np.asarray(X, dtype=float)
    idx = np.asarray(neighbors, dtype=np.intp)
    m = X.shape[0]
    k = len(idx)
    where = index if index is not None else (int(idx[0]) if k else None)
    if k < 2:
        raise NeighborhoodError(f"neighborhood needs at least 2 points, got {k}", where)
    if d < 1:
        raise NeighborhoodError(f"target dimension must be positive, got {d}", where)
    if d > k - 1:
        raise NeighborhoodError(f"d={d} exceeds k-1={k - 1}: rank-deficient neighborhood", where)
    if d > m:
        raise NeighborhoodError(f"d={d} exceeds the input dimension m={m}", where)

    Xi = X[:, idx]
    center = Xi.mean(axis=1)
    Xc = Xi - center[:, np.newaxis]

    if route not in ("auto", "svd", "gram"):
        raise NeighborhoodError(f"unknown route {route!r}")
    used = "gram" if route == "gram" or (route == "auto" and k < m) else "svd"
    out = _gram_route(Xc, d) if used == "gram" else None
    if out is None:
        used = "svd"
        out = _svd_route(Xc, d)
    Q, sigmas, V = out

    # largest-magnitude entry of every basis vector made positive
    pivot = Q[np.argmax(np.abs(Q), axis=0), np.arange(d)]
    sign = np.where(pivot < 0, -1.0, 1.0)
    Q = Q * sign
    V = V * sign

    e = np.full(k, 1.0 / np.sqrt(k))
    V = V - np.outer(e, e @ V)
    G = np.column_stack([e, V])

    Theta = Q.T @ Xc
    resid = Xc - Q @ Theta
    sig_d = sigmas[d - 1]
    if len(sigmas) > d:
        flagged = bool(sig_d == 0 or sigmas[d] / sig_d > flag_ratio)
    else:
        flagged = bool(sig_d == 0)
    return LocalFrame(
        index=int(where),
        neighbors=idx.copy(),
        center=center,
        basis=Q,
        coords=Theta,
        sigmas=sigmas,
        g_factor=G,
        residual_norms=np.linalg.norm(resid, axis=0),
        flagged=flagged,
        route=used,
    )


def all_frames(X, nbrs, d: int, route: str = "auto", workers: int | None = None,
               flag_ratio: float = FLAG_RATIO) -> list[LocalFrame]:
    """One :class:`LocalFrame` per row of ``nbrs``, in index order.

    ``workers > 1`` spreads the fits over a thread pool; the output does not
    depend on it.
    """
    X = as_data_matrix(X)
    if nbrs.N != X.shape[1]:
        raise NeighborhoodError(
            f"neighborhood index has {nbrs.N} rows but the data has {X.shape[1]} points"
        )

    def fit(i):
        return local_frame(X, nbrs.sets[i], d, index=i, route=route, flag_ratio=flag_ratio)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fit, range(nbrs.N)))
    return [fit(i) for i in range(nbrs.N)]


def singular_ratio_profile(frames, j: int):
    """Ratios ``sigma_{j+1,i} / sigma_{j,i}`` over all frames (``j`` is 1-based).

    Returns
    -------
    rho : ndarray, shape (N,)
    degenerate : ndarray of bool
        Frames with ``sigma_j = 0``; their ratio is reported as 0.
    """
    if j < 1:
        raise ValueError(f"rank j must be at least 1, got {j}")
    n_sig = min(len(f.sigmas) for f in frames)
    if j + 1 > n_sig:
        raise ValueError(f"rank j={j} needs {j + 1} singular values, frames store {n_sig}")
    S = np.array([f.sigmas[j - 1 : j + 1] for f in frames])
    degenerate = S[:, 0] == 0
    rho = np.zeros(len(frames))
    ok = ~degenerate
    rho[ok] = np.minimum(S[ok, 1] / S[ok, 0], 1.0)
    return rho, degenerate


def estimate_dim(frames, threshold: float = 0.3):
    """Smallest ``j`` whose median ratio falls below ``threshold``, else ``None``."""
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    n_sig = min(len(f.sigmas) for f in frames)
    for j in range(1, n_sig):
        rho, _ = singular_ratio_profile(frames, j)
        if np.median(rho) < threshold:
            return j
    return None
