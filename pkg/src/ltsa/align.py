"""Alignment of local frames into global coordinates.

The alignment matrix is never needed explicitly: with ``G_i`` from each
frame,

    B v = sum_i  S_i (v(I_i) - G_i (G_i^T v(I_i)))

where ``S_i`` scatters a length-``k`` vector back onto the rows ``I_i``.
:meth:`AlignmentOperator.materialize` builds the same matrix as a sparse CSR
array by summing the blocks ``I - G_i G_i^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .dataset import as_data_matrix
from .eigen import DENSE_THRESHOLD, SolverReport, fix_signs, smallest_eigenpairs
from .errors import NeighborhoodError
from .neighbors import TREE_MAX_DIM, NeighborhoodIndex, knn
from .tangent import FLAG_RATIO, LocalFrame, all_frames

__all__ = [
    "AlignmentOperator",
    "Embedding",
    "LinearModel",
    "SolverOptions",
    "build_operator",
    "linear_embed",
    "ltsa_embed",
]

#: Relative eigengap below which the embedding subspace is reported as mixed.
DEGENERACY_GAP = 1e-6


class AlignmentOperator:
    """Matrix-free alignment matrix ``B`` with an optional CSR copy."""

    def __init__(self, sets: np.ndarray, G: np.ndarray, N: int):
        self.sets = np.asarray(sets, dtype=np.intp)
        self.G = np.asarray(G, dtype=float)
        self.N = int(N)
        self._csr = None

    @property
    def k(self) -> int:
        return self.sets.shape[1]

    @property
    def shape(self):
        return (self.N, self.N)

    def apply(self, v) -> np.ndarray:
        """``B @ v`` for a length-``N`` vector or an ``(N, p)`` block."""
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.N or v.ndim > 2:
            raise ValueError(f"expected a vector of length {self.N}, got shape {v.shape}")
        if v.ndim == 2:
            return np.column_stack([self.apply(v[:, j]) for j in range(v.shape[1])])
        local = v[self.sets]
        coef = np.einsum("nkj,nk->nj", self.G, local)
        local = local - np.einsum("nkj,nj->nk", self.G, coef)
        return np.bincount(self.sets.ravel(), weights=local.ravel(), minlength=self.N)

    __matmul__ = apply

    def materialize(self) -> scipy.sparse.csr_matrix:
        """Sparse ``B`` assembled by ``B(I_i, I_i) += I - G_i G_i^T``."""
        if self._csr is None:
            n, k = self.sets.shape
            blocks = np.eye(k)[np.newaxis] - np.einsum("nkj,nlj->nkl", self.G, self.G)
            rows = np.broadcast_to(self.sets[:, :, np.newaxis], (n, k, k)).ravel()
            cols = np.broadcast_to(self.sets[:, np.newaxis, :], (n, k, k)).ravel()
            B = scipy.sparse.coo_matrix((blocks.ravel(), (rows, cols)), shape=self.shape)
            self._csr = B.tocsr()
            self._csr.sum_duplicates()
        return self._csr

    @property
    def is_materialized(self) -> bool:
        return self._csr is not None

    def norm_estimate(self) -> float:
        """Upper bound on ``||B||_2``.

        The largest number of neighborhoods sharing one point bounds
        ``v^T B v / v^T v`` because every block is an orthogonal projector.
        Once materialized, the Gershgorin row-sum bound is used when tighter.
        """
        bound = float(np.bincount(self.sets.ravel(), minlength=self.N).max())
        if self._csr is not None:
            bound = min(bound, float(abs(self._csr).sum(axis=1).max()))
        return bound

    def null_vector(self) -> np.ndarray:
        return np.full((self.N, 1), 1.0 / np.sqrt(self.N))

    def as_linear_operator(self) -> scipy.sparse.linalg.LinearOperator:
        return scipy.sparse.linalg.LinearOperator(
            self.shape, matvec=self.apply, rmatvec=self.apply, dtype=float
        )


def build_operator(frames, nbrs: NeighborhoodIndex, N: int | None = None) -> AlignmentOperator:
    """Collect the per-neighborhood factors ``G_i`` into an operator."""
    N = nbrs.N if N is None else N
    if len(frames) != nbrs.N or nbrs.N != N:
        raise NeighborhoodError(
            f"inconsistent sizes: {len(frames)} frames, {nbrs.N} neighborhoods, N={N}"
        )
    for i, fr in enumerate(frames):
        if not np.array_equal(fr.neighbors, nbrs.sets[i]):
            raise NeighborhoodError("frame does not match its neighborhood row", i)
    G = np.stack([fr.g_factor for fr in frames])
    return AlignmentOperator(nbrs.sets, G, N)


@dataclass
class SolverOptions:
    tol: float = 1e-10
    method: str = "auto"
    dense_threshold: int = DENSE_THRESHOLD
    max_iter: int | None = None
    seed: int = 0
    neighbor_method: str = "auto"
    tree_max_dim: int = TREE_MAX_DIM
    route: str = "auto"
    flag_ratio: float = FLAG_RATIO
    workers: int | None = None


@dataclass
class Embedding:
    """Global coordinates ``T`` (``d x N``, rows orthonormal and orthogonal to ``e``)."""

    d: int
    T: np.ndarray
    eigenvalues: np.ndarray | None
    report: SolverReport
    flagged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))

    @property
    def N(self) -> int:
        return self.T.shape[1]


def _solve(operator, d, options, mixing_check=True, deflate="auto"):
    N = operator.shape[0]
    count = d + 1
    extra = 1 if (mixing_check and N >= d + 2) else 0
    lam, U, report = smallest_eigenpairs(
        operator,
        count + extra,
        tol=options.tol,
        method=options.method,
        dense_threshold=options.dense_threshold,
        max_iter=options.max_iter,
        seed=options.seed,
        deflate=deflate,
    )
    if extra:
        lo, hi = lam[d], lam[d + 1]
        if hi <= 0 or (hi - lo) / hi < DEGENERACY_GAP:
            report.warnings.append(
                f"eigenvalues {d + 1} and {d + 2} nearly coincide "
                f"({lo:.3e}, {hi:.3e}); embedding directions may be mixed"
            )
    report.eigenvalues = lam[:count]
    report.residuals = report.residuals[:count]
    report.count = count
    return lam[:count], U[:, 1:count].T.copy(), report


def ltsa_embed(X, k: int, d: int, options: SolverOptions | None = None):
    """Local tangent space alignment of the columns of ``X``.

    Returns
    -------
    embedding : Embedding
    frames : list of LocalFrame
    nbrs : NeighborhoodIndex
    """
    options = options or SolverOptions()
    X = as_data_matrix(X)
    N = X.shape[1]
    if not 1 < k <= N:
        raise NeighborhoodError(f"need 1 < k <= N, got k={k}, N={N}")
    if d < 1 or d > k - 1:
        raise NeighborhoodError(f"need 1 <= d <= k-1, got d={d}, k={k}")
    if d + 1 > N:
        raise NeighborhoodError(f"d+1={d + 1} eigenvectors requested from N={N} points")
    nbrs = knn(X, k, method=options.neighbor_method, max_dim=options.tree_max_dim)
    frames = all_frames(X, nbrs, d, route=options.route, workers=options.workers,
                        flag_ratio=options.flag_ratio)
    op = build_operator(frames, nbrs, N)
    lam, T, report = _solve(op, d, options)
    flagged = np.array([fr.index for fr in frames if fr.flagged], dtype=np.intp)
    if len(flagged):
        report.warnings.append(f"{len(flagged)} condition-flagged neighborhoods")
    return Embedding(d=d, T=T, eigenvalues=lam, report=report, flagged=flagged), frames, nbrs


@dataclass
class LinearModel:
    """Affine model ``x = mean + basis @ diag(sigmas) @ tau``."""

    mean: np.ndarray
    basis: np.ndarray
    sigmas: np.ndarray
    gap_ratio: float

    def __call__(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        if tau.ndim == 1:
            return self.mean + self.basis @ (self.sigmas * tau)
        return self.mean[:, np.newaxis] + self.basis @ (self.sigmas[:, np.newaxis] * tau)


def linear_embed(X, d: int):
    """Principal-component coordinates ``T = V_d^T`` and the fitted linear manifold.

    ``gap_ratio`` is ``sigma_{d+1} / sigma_d`` (0 when no further singular
    value exists).
    """
    X = as_data_matrix(X)
    m, N = X.shape
    if d < 1 or d > min(m, N):
        raise ValueError(f"d must lie in [1, min(m, N)={min(m, N)}], got {d}")
    mean = X.mean(axis=1)
    U, s, Vt = np.linalg.svd(X - mean[:, np.newaxis], full_matrices=False)
    V = fix_signs(Vt[:d].T)
    flip = np.sign(np.sum(V * Vt[:d].T, axis=0))
    Ud = U[:, :d] * flip
    if len(s) > d:
        gap = float(s[d] / s[d - 1]) if s[d - 1] > 0 else 1.0
    else:
        gap = 0.0
    report = SolverReport(method="svd", N=N, count=d, tol=0.0, eigenvalues=s[:d] ** 2)
    model = LinearModel(mean=mean, basis=Ud, sigmas=s[:d].copy(), gap_ratio=gap)
    return Embedding(d=d, T=V.T.copy(), eigenvalues=None, report=report), model
