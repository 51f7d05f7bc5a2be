"""Embedding quality, error-bound verification and baselines.

``theorem_bounds`` evaluates, per neighborhood, three inequalities relating
the alignment error, the tangent-fit error and the local conditioning of the
generating map to its curvature and to the sample noise:

* alignment:  ``||E_i||_F <= ||P_i^{-1}||_F (delta_i + ||E*_i||_F)``
* conditioning:  ``||P_i^{-1}||_F <= sqrt(1 + alpha_i^2) ||J_i^+||_F``
* tangent fit:  ``||X_i - (c_i e^T + Q_i Theta_i)||_F
  <= (1 + 4 (1 + alpha_i^2) cond(J~_i)) (||E*_i||_F + delta_i)``

with ``P_i = Q_i^T J_i``, ``J~_i = J_i T*_i (I - ee^T/k)``,
``alpha_i = 4 (||E*_i||_F + delta_i) / sigma_d(J~_i)`` and
``delta_i^2 = sum_l sum_j ||H_l||_2^2 ||tau*_ij - tau_bar*_i||^4``. The true
parameters are first mapped affinely to centered, row-orthonormal form (the
normalization the computed coordinates satisfy), and the Jacobian and
Hessians follow by the chain rule.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, fields

import numpy as np
import scipy.linalg
import scipy.sparse

from .align import Embedding, SolverOptions, _solve
from .dataset import as_data_matrix
from .errors import NeighborhoodError
from .neighbors import knn

__all__ = [
    "AffineFit",
    "BoundReport",
    "affine_align",
    "cluster_separation",
    "lle_embed",
    "lle_weights",
    "save_affine_fit",
    "theorem_bounds",
]


@dataclass
class AffineFit:
    A: np.ndarray
    b: np.ndarray
    rms: float
    relative_rms: float
    per_point: np.ndarray


def affine_align(T, T_star) -> AffineFit:
    """Least-squares affine map ``A tau_i + b ~ tau*_i`` and its residual."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    T_star = np.atleast_2d(np.asarray(T_star, dtype=float))
    if T.shape[1] != T_star.shape[1]:
        raise ValueError(f"shape mismatch: {T.shape} vs {T_star.shape}")
    d, N = T.shape
    if N < d + 1:
        raise ValueError(f"need at least d+1={d + 1} points, got {N}")
    design = np.column_stack([T.T, np.ones(N)])
    coef, _, rank, _ = np.linalg.lstsq(design, T_star.T, rcond=None)
    if rank < d + 1:
        raise ValueError("computed coordinates are rank deficient; no unique affine fit")
    A = coef[:d].T
    b = coef[d]
    per_point = np.linalg.norm(design @ coef - T_star.T, axis=1)
    rms = float(np.sqrt(np.mean(per_point**2)))
    spread = float(np.sqrt(np.mean(np.sum((T_star - T_star.mean(axis=1, keepdims=True)) ** 2, axis=0))))
    return AffineFit(A=A, b=b, rms=rms, relative_rms=rms / spread if spread > 0 else np.inf,
                     per_point=per_point)


def save_affine_fit(path, fit: AffineFit) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("index,residual\n")
        for i, r in enumerate(fit.per_point):
            fh.write(f"{i},{format(float(r), '.17g')}\n")
        fh.write(f"# rms={format(fit.rms, '.17g')}\n")
        fh.write(f"# relative_rms={format(fit.relative_rms, '.17g')}\n")


# ---------------------------------------------------------------------------
# error bounds


@dataclass
class BoundReport:
    delta: np.ndarray
    noise_norm: np.ndarray
    align_err: np.ndarray
    p_inv_norm: np.ndarray
    alpha: np.ndarray
    sigma_d_jt: np.ndarray
    cond_jt: np.ndarray
    j_pinv_norm: np.ndarray
    tangent_err: np.ndarray
    bound2: np.ndarray
    bound3: np.ndarray
    bound4: np.ndarray
    applicable: np.ndarray
    sat2: np.ndarray
    sat3: np.ndarray
    sat4: np.ndarray
    slack: float
    hessian_analytic: bool

    CSV_COLUMNS = (
        "index", "delta", "noise_norm", "align_err", "p_inv_norm", "alpha",
        "sigma_d_jt", "cond_jt", "j_pinv_norm", "tangent_err", "bound2",
        "bound3", "bound4", "applicable", "sat2", "sat3", "sat4",
    )

    @property
    def N(self) -> int:
        return len(self.delta)

    def fraction_satisfied(self) -> dict:
        """Share of applicable neighborhoods meeting each inequality."""
        n = max(int(self.applicable.sum()), 1)
        out = {}
        for name in ("sat2", "sat3", "sat4"):
            out[name] = float(np.sum(getattr(self, name) & self.applicable)) / n
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_COLUMNS)
            for i in range(self.N):
                row = [i]
                for col in self.CSV_COLUMNS[1:]:
                    v = getattr(self, col)[i]
                    row.append(int(v) if isinstance(v, (bool, np.bool_)) else format(float(v), ".17g"))
                w.writerow(row)


def _normalizer(T_star):
    """Return (mean, A, A^{-1}) with ``A (T* - mean)`` row-orthonormal."""
    c = T_star.mean(axis=1)
    S = (T_star - c[:, np.newaxis]) @ (T_star - c[:, np.newaxis]).T
    w, U = np.linalg.eigh(S)
    if w.min() <= 0:
        raise ValueError("true parameters are degenerate")
    A = (U / np.sqrt(w)) @ U.T
    A_inv = (U * np.sqrt(w)) @ U.T
    return c, A, A_inv


def theorem_bounds(X, truth, frames, nbrs, embedding, slack: float | None = None,
                   singular_rtol: float = 1e-2) -> BoundReport:
    """Evaluate the three per-neighborhood error bounds against ground truth.

    A neighborhood is *inapplicable* when ``sigma_min(P_i)`` falls below
    ``singular_rtol`` times the median of ``sigma_min(P_j)`` over all ``j``;
    the bounds then assume a nonsingular ``P_i`` that is numerically absent.
    ``slack`` defaults to 1e-8 with analytic Hessians and 1e-4 otherwise.
    """
    X = as_data_matrix(X)
    T = np.asarray(embedding.T, dtype=float)
    d, N = T.shape
    if truth.params.shape != (d, N):
        raise ValueError(f"truth parameters have shape {truth.params.shape}, expected {(d, N)}")
    if slack is None:
        slack = 1e-8 if truth.hessian_analytic else 1e-4
    c, A, A_inv = _normalizer(truth.params)
    Tn = A @ (truth.params - c[:, np.newaxis])
    noise = truth.noise

    cols = {f.name: np.zeros(N) for f in fields(BoundReport)
            if f.name not in ("applicable", "sat2", "sat3", "sat4", "slack", "hessian_analytic")}
    p_min = np.zeros(N)
    for i, fr in enumerate(frames):
        idx = nbrs.sets[i]
        k = len(idx)
        Tn_i = Tn[:, idx]
        tbar_n = Tn_i.mean(axis=1)
        tbar = A_inv @ tbar_n + c
        J = truth.jacobian(tbar) @ A_inv
        H = np.einsum("ab,lbc,cd->lad", A_inv, truth.hessian(tbar), A_inv)
        h_norms = np.array([np.linalg.norm(Hl, 2) for Hl in H])
        dist4 = np.sum(np.sum((Tn_i - tbar_n[:, np.newaxis]) ** 2, axis=0) ** 2)
        delta = np.sqrt(np.sum(h_norms**2) * dist4)
        e_star = np.linalg.norm(noise[:, idx])

        Ti = T[:, idx]
        TiC = Ti - Ti.mean(axis=1, keepdims=True)
        L = np.linalg.lstsq(fr.coords.T, TiC.T, rcond=None)[0].T
        align_err = np.linalg.norm(TiC - L @ fr.coords)

        P = fr.basis.T @ J
        sv_p = np.linalg.svd(P, compute_uv=False)
        p_min[i] = sv_p[-1]
        p_inv = np.sqrt(np.sum(1.0 / sv_p**2)) if sv_p[-1] > 0 else np.inf

        Jt = J @ (Tn_i - tbar_n[:, np.newaxis])
        sv_jt = np.linalg.svd(Jt, compute_uv=False)
        sig_d = sv_jt[d - 1]
        cond_jt = sv_jt[0] / sig_d if sig_d > 0 else np.inf
        alpha = 4 * (e_star + delta) / sig_d if sig_d > 0 else np.inf
        sv_j = np.linalg.svd(J, compute_uv=False)
        j_pinv = np.sqrt(np.sum(1.0 / sv_j**2)) if sv_j[-1] > 0 else np.inf

        cols["delta"][i] = delta
        cols["noise_norm"][i] = e_star
        cols["align_err"][i] = align_err
        cols["p_inv_norm"][i] = p_inv
        cols["alpha"][i] = alpha
        cols["sigma_d_jt"][i] = sig_d
        cols["cond_jt"][i] = cond_jt
        cols["j_pinv_norm"][i] = j_pinv
        cols["tangent_err"][i] = fr.tangent_error
        cols["bound2"][i] = p_inv * (delta + e_star)
        cols["bound3"][i] = np.sqrt(1 + alpha**2) * j_pinv
        cols["bound4"][i] = (1 + 4 * (1 + alpha**2) * cond_jt) * (e_star + delta)

    applicable = np.isfinite(cols["p_inv_norm"]) & (p_min >= singular_rtol * np.median(p_min))
    with np.errstate(invalid="ignore"):
        sat2 = cols["align_err"] <= cols["bound2"] + slack
        sat3 = cols["p_inv_norm"] <= cols["bound3"] + slack
        sat4 = cols["tangent_err"] <= cols["bound4"] + slack
    return BoundReport(**cols, applicable=applicable, sat2=sat2, sat3=sat3, sat4=sat4,
                       slack=float(slack), hessian_analytic=bool(truth.hessian_analytic))


# ---------------------------------------------------------------------------
# LLE baseline


def lle_weights(X, nbrs, reg: float = 1e-3) -> scipy.sparse.csr_matrix:
    """Reconstruction weights of every point from its ``k - 1`` other neighbors.

    Each local Gram system gets ``reg * trace(G) / k`` added to its diagonal;
    rows sum to one.
    """
    X = as_data_matrix(X)
    N = X.shape[1]
    k = nbrs.k
    rows, cols, vals = [], [], []
    for i in range(N):
        others = nbrs.sets[i, 1:]
        Z = X[:, others] - X[:, [i]]
        G = Z.T @ Z
        tr = np.trace(G)
        G[np.diag_indices_from(G)] += reg * tr / k if tr > 0 else reg
        w = scipy.linalg.solve(G, np.ones(k - 1), assume_a="pos")
        w /= w.sum()
        rows.append(np.full(k - 1, i))
        cols.append(others)
        vals.append(w)
    return scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )


def lle_embed(X, k: int, d: int, reg: float = 1e-3, options: SolverOptions | None = None) -> Embedding:
    """Locally linear embedding baseline on the same neighborhoods as LTSA.

    ``k`` counts the point itself, as in :func:`ltsa.align.ltsa_embed`. The
    coordinates are eigenvectors 2..d+1 of ``(I - W)^T (I - W)`` with the
    all-ones vector deflated, normalized and sign-fixed like LTSA output.
    """
    options = options or SolverOptions()
    X = as_data_matrix(X)
    N = X.shape[1]
    if not 1 < k <= N:
        raise NeighborhoodError(f"need 1 < k <= N, got k={k}, N={N}")
    if d < 1 or d >= k:
        raise NeighborhoodError(f"need 1 <= d < k, got d={d}, k={k}")
    nbrs = knn(X, k, method=options.neighbor_method, max_dim=options.tree_max_dim)
    W = lle_weights(X, nbrs, reg)
    IW = scipy.sparse.identity(N, format="csr") - W
    M = (IW.T @ IW).tocsr()
    lam, T, report = _solve(M, d, options, deflate=np.ones((N, 1)) / np.sqrt(N))
    report.method = f"lle/{report.method}"
    return Embedding(d=d, T=T, eigenvalues=lam, report=report)


# ---------------------------------------------------------------------------
# clustering score


def cluster_separation(T, labels) -> float:
    """Best accuracy of classifying ``labels`` by thresholds on the first coordinate.

    The coordinate axis is cut into as many intervals as there are classes,
    each interval assigned a different class; the score is the largest
    fraction of correctly assigned points over every cut position and every
    assignment of classes to intervals.
    """
    x = np.atleast_2d(np.asarray(T, dtype=float))[0]
    labels = np.asarray(labels)
    if len(labels) != len(x):
        raise ValueError("label count does not match the number of points")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    if len(classes) > 7:
        raise ValueError("exhaustive assignment search supports at most 7 classes")
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], labels[order]
    N = len(xs)
    # prefix[c, n] = members of class c among the n smallest coordinates
    onehot = (ys[np.newaxis, :] == classes[:, np.newaxis]).astype(np.int64)
    prefix = np.concatenate([np.zeros((len(classes), 1), np.int64), np.cumsum(onehot, axis=1)], axis=1)
    # cuts may only fall between distinct coordinate values
    valid = np.ones(N + 1, dtype=bool)
    valid[1:N] = xs[1:] != xs[:-1]
    best = 0
    neg = np.iinfo(np.int64).min // 4
    for perm in itertools.permutations(range(len(classes))):
        dp = np.full(N + 1, neg)
        dp[0] = 0
        for s, c in enumerate(perm):
            run = np.maximum.accumulate(np.where(valid, dp - prefix[c], neg))
            dp = run + prefix[c]
            if s < len(perm) - 1:
                dp = np.where(valid, dp, neg)
        best = max(best, int(dp[N]))
    return best / N
