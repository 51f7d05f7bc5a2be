"""Smallest eigenpairs of symmetric positive semi-definite operators.

Two paths share one contract. Below ``dense_threshold`` the operator is
materialized and handed to LAPACK; above it a Lanczos iteration with full
reorthogonalization runs on the shifted operator ``mu I - B`` so the wanted
end of the spectrum becomes the dominant one. Known null directions (the
all-ones vector for alignment matrices) are deflated explicitly in both
paths and returned first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import ConvergenceError

__all__ = ["SolverReport", "fix_signs", "smallest_eigenpairs"]

DENSE_THRESHOLD = 2000


@dataclass
class SolverReport:
    method: str
    N: int
    count: int
    tol: float
    iterations: int = 0
    matvecs: int = 0
    norm_estimate: float = float("nan")
    shift: float = float("nan")
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = True
    warnings: list = field(default_factory=list)

    def to_text(self) -> str:
        """``key=value`` lines, one per field, lists comma-separated."""
        def fmt(v):
            if isinstance(v, (list, tuple, np.ndarray)):
                return ",".join(fmt(x) for x in v)
            if isinstance(v, (float, np.floating)):
                return format(float(v), ".17g")
            return str(v)

        lines = [
            f"method={self.method}",
            f"N={self.N}",
            f"count={self.count}",
            f"tol={fmt(self.tol)}",
            f"iterations={self.iterations}",
            f"matvecs={self.matvecs}",
            f"norm_estimate={fmt(self.norm_estimate)}",
            f"shift={fmt(self.shift)}",
            f"eigenvalues={fmt(self.eigenvalues)}",
            f"residuals={fmt(self.residuals)}",
            f"converged={'true' if self.converged else 'false'}",
        ]
        for w in self.warnings:
            lines.append(f"warning={w}")
        return "\n".join(lines) + "\n"


def fix_signs(U):
    """Flip columns so each one's largest-magnitude entry is positive."""
    U = np.array(U, dtype=float, copy=True)
    if U.ndim == 1:
        return U if U[np.argmax(np.abs(U))] >= 0 else -U
    pivot = U[np.argmax(np.abs(U), axis=0), np.arange(U.shape[1])]
    U[:, pivot < 0] *= -1
    return U


def _as_operator(op):
    """Return ``(N, matvec, dense_fn, norm_estimate, default_deflation)``."""
    # alignment operators expose exactly this protocol
    if hasattr(op, "apply") and hasattr(op, "materialize"):
        N = op.N
        return N, op.apply, lambda: op.materialize().toarray(), op.norm_estimate(), op.null_vector()
    if scipy.sparse.issparse(op):
        A = op.tocsr()
        N = A.shape[0]
        gersh = float(abs(A).sum(axis=1).max()) if A.nnz else 0.0
        return N, (lambda v: A @ v), A.toarray, gersh, None
    if isinstance(op, scipy.sparse.linalg.LinearOperator):
        N = op.shape[0]
        return N, op.matvec, (lambda: op @ np.eye(N)), _power_norm(op.matvec, N), None
    A = np.asarray(op, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"operator must be square, got shape {A.shape}")
    N = A.shape[0]
    gersh = float(np.abs(A).sum(axis=1).max()) if N else 0.0
    return N, (lambda v: A @ v), (lambda: A), gersh, None


def _power_norm(matvec, N, steps=50, seed=0):
    v = np.random.default_rng(seed).standard_normal(N)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(steps):
        w = matvec(v)
        lam = np.linalg.norm(w)
        if lam == 0:
            return 0.0
        v = w / lam
    return 1.1 * lam


def _residuals(matvec, lam, U):
    return np.array([np.linalg.norm(matvec(U[:, j]) - lam[j] * U[:, j]) for j in range(U.shape[1])])


def _dense(dense_fn, Z, want, norm_est):
    A = np.asarray(dense_fn(), dtype=float)
    A = 0.5 * (A + A.T)
    if Z is not None:
        # push the deflated directions to the top of the spectrum
        AZ = A @ Z
        ZAZ = Z.T @ AZ
        A = (
            A
            - AZ @ Z.T
            - Z @ AZ.T
            + Z @ (ZAZ + (2.0 * norm_est + 1.0) * np.eye(Z.shape[1])) @ Z.T
        )
        A = 0.5 * (A + A.T)
    if want == 0:
        return np.zeros(0), np.zeros((A.shape[0], 0))
    return scipy.linalg.eigh(A, subset_by_index=[0, want - 1])


def _lanczos(matvec, N, Z, want, tol, norm_est, max_iter, seed, report):
    p = 0 if Z is None else Z.shape[1]
    dim = N - p
    n_max = min(max_iter, dim)
    mu = 1.01 * norm_est if norm_est > 0 else 1.0
    report.shift = mu
    target = tol * max(norm_est, np.finfo(float).tiny)
    rng = np.random.default_rng(seed)

    def project(w):
        if Z is not None:
            w = w - Z @ (Z.T @ w)
            w = w - Z @ (Z.T @ w)
        return w

    def fresh(basis):
        w = project(rng.standard_normal(N))
        for _ in range(2):
            w = w - basis @ (basis.T @ w)
        return w / np.linalg.norm(w)

    V = np.zeros((N, n_max + 1))
    alpha = np.zeros(n_max)
    beta = np.zeros(n_max)
    V[:, 0] = fresh(V[:, :0])
    check_every = max(10, 2 * want)
    best = (np.full(want, np.inf), None, None)

    for j in range(n_max):
        v = V[:, j]
        w = mu * v - matvec(v)
        report.matvecs += 1
        w = project(w)
        alpha[j] = v @ w
        w -= alpha[j] * v
        if j > 0:
            w -= beta[j - 1] * V[:, j - 1]
        basis = V[:, : j + 1]
        for _ in range(2):
            w -= basis @ (basis.T @ w)
        beta[j] = np.linalg.norm(w)
        exhausted = j + 1 == n_max
        breakdown = beta[j] <= 1e-14 * mu
        if breakdown and not exhausted:
            beta[j] = 0.0
            V[:, j + 1] = fresh(basis)
        elif not exhausted:
            V[:, j + 1] = w / beta[j]
        m = j + 1
        if m < want:
            continue
        if not (exhausted or breakdown or m % check_every == 0):
            continue
        theta, S = scipy.linalg.eigh_tridiagonal(
            alpha[:m], beta[: m - 1], select="i", select_range=(m - want, m - 1)
        )
        estimate = np.abs(beta[j] * S[-1, :])
        if not exhausted and np.max(estimate) > target:
            continue
        U = V[:, :m] @ S
        U, _ = np.linalg.qr(U)
        lam = np.array([U[:, i] @ matvec(U[:, i]) for i in range(want)])
        order = np.argsort(lam, kind="stable")
        lam, U = lam[order], U[:, order]
        res = _residuals(matvec, lam, U)
        report.matvecs += 2 * want
        report.iterations = m
        if np.max(res) < np.max(best[0]):
            best = (res, lam, U)
        if np.max(res) <= target:
            return lam, U
        if exhausted:
            break
    report.iterations = n_max
    report.converged = False
    report.residuals = best[0]
    if best[1] is not None:
        report.eigenvalues = best[1]
    raise ConvergenceError(
        f"Lanczos did not converge in {n_max} steps: best residual "
        f"{np.max(best[0]):.3g} > {target:.3g}",
        report,
    )


def smallest_eigenpairs(
    op,
    count: int,
    tol: float = 1e-10,
    method: str = "auto",
    dense_threshold: int = DENSE_THRESHOLD,
    max_iter: int | None = None,
    deflate="auto",
    seed: int = 0,
):
    """The ``count`` smallest eigenpairs of a symmetric PSD operator.

    Parameters
    ----------
    op : AlignmentOperator, ndarray, sparse matrix or LinearOperator
    count : int
        Number of eigenpairs, deflated directions included.
    tol : float
        Residual target ``||B u - lam u|| <= tol * ||B||_est``.
    method : {"auto", "dense", "lanczos"}
        ``auto`` is dense for ``N <= dense_threshold``.
    max_iter : int, optional
        Lanczos step limit, default ``300 * count``.
    deflate : "auto", None or ndarray (N, p)
        Known orthonormal eigenvectors to split off. ``auto`` uses the
        operator's own null vector when it advertises one.

    Returns
    -------
    eigenvalues : ndarray, shape (count,)
        Deflated directions first, the rest ascending.
    eigenvectors : ndarray, shape (N, count)
        Orthonormal; each column's largest-magnitude entry is positive.
    report : SolverReport

    Raises
    ------
    ConvergenceError
        Lanczos exhausted ``max_iter``; ``err.report`` holds the best residuals.
    """
    N, matvec, dense_fn, norm_est, null = _as_operator(op)
    if count < 1 or count > N:
        raise ValueError(f"count must lie in [1, N={N}], got {count}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if isinstance(deflate, str):
        if deflate != "auto":
            raise ValueError(f"unknown deflate option {deflate!r}")
        Z = null
    else:
        Z = deflate
    if Z is not None:
        Z = np.asarray(Z, dtype=float).reshape(N, -1)
        Z, _ = np.linalg.qr(Z)
        Z = fix_signs(Z)
        if Z.shape[1] > count:
            raise ValueError("more deflation vectors than requested eigenpairs")
    p = 0 if Z is None else Z.shape[1]
    want = count - p

    if method == "auto":
        method = "dense" if N <= dense_threshold else "lanczos"
    if method not in ("dense", "lanczos"):
        raise ValueError(f"unknown eigensolver method {method!r}")
    report = SolverReport(method=method, N=N, count=count, tol=tol, norm_estimate=norm_est)
    if max_iter is None:
        max_iter = 300 * count

    if method == "dense" or want == 0:
        lam, U = _dense(dense_fn, Z, want, norm_est)
    else:
        lam, U = _lanczos(matvec, N, Z, want, tol, norm_est, max_iter, seed, report)

    if Z is not None:
        z_lam = np.array([Z[:, i] @ matvec(Z[:, i]) for i in range(p)])
        lam = np.concatenate([z_lam, lam])
        U = np.column_stack([Z, U])
    U = fix_signs(U)
    report.eigenvalues = np.asarray(lam, dtype=float)
    report.residuals = _residuals(matvec, lam, U)
    return report.eigenvalues, U, report
