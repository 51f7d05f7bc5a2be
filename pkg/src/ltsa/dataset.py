"""Synthetic manifolds, random embeddings and CSV input/output.

Data matrices follow the column convention used throughout the package: an
``(m, N)`` float array whose column ``i`` is the sample ``x_i``.

All random draws go through :func:`make_rng`, a Philox counter-based
generator, so a given ``(arguments, seed)`` pair reproduces bitwise on every
platform.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    CSVFormatError,
    DatasetError,
    EmptyFileError,
    NonNumericError,
    RaggedRowError,
)

__all__ = [
    "CURVES",
    "GroundTruth",
    "LabeledSet",
    "as_data_matrix",
    "embed_highdim",
    "gen_curve",
    "gen_peak_surface",
    "gen_three_gaussians",
    "lift_truth",
    "load_csv",
    "load_meta",
    "load_truth",
    "make_rng",
    "peak_height",
    "regenerate",
    "save_csv",
    "save_meta",
    "save_truth",
]

GAUSSIAN_MEANS = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 0.0]])
GAUSSIAN_COV = 0.2
PEAK_NOISE_SCALE = 0.01
PEAK_FD_STEP = 1e-4


def make_rng(seed: int) -> np.random.Generator:
    """Return the package's reproducible generator for ``seed``."""
    return np.random.Generator(np.random.Philox(int(seed)))


def as_data_matrix(X, name: str = "X") -> np.ndarray:
    """Validate and return ``X`` as a finite float ``(m, N)`` array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DatasetError(f"{name} must be a non-empty 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DatasetError(f"{name} contains non-finite entries")
    return X


@dataclass
class GroundTruth:
    """Generating parameters and evaluators of a synthetic data set.

    ``f(tau)`` maps a ``(d, n)`` parameter array to ``(m, n)`` points;
    ``jacobian(tau)`` and ``hessian(tau)`` take a single ``(d,)`` parameter and
    return ``(m, d)`` and ``(m, d, d)`` arrays, the latter stacking the
    Hessians of every component function.
    """

    d: int
    params: np.ndarray
    f: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    noise: np.ndarray
    noise_level: float
    hessian_analytic: bool = True
    meta: dict = field(default_factory=dict)

    def hessian_component(self, tau, ell: int) -> np.ndarray:
        """Hessian of the ``ell``-th component function at ``tau``."""
        return self.hessian(tau)[ell]

    @property
    def clean(self) -> np.ndarray:
        """Noise-free points ``f(tau*_i)``."""
        return self.f(self.params)


@dataclass
class LabeledSet:
    data: np.ndarray
    labels: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != self.data.shape[1]:
            raise DatasetError("label count does not match the number of points")


# ---------------------------------------------------------------------------
# curves
#
# Each entry: interval, f(t) -> (m, n), f'(t) -> (m, n), f''(t) -> (m, n),
# noise model. t is a 1-D array.


def _stack(*rows):
    return np.vstack([np.broadcast_to(r, np.shape(rows[0])) for r in rows]).astype(float)


def _cubic2d(t):
    return _stack(10 * t, 10 * t**3 + 2 * t**2 - 10 * t)


def _cubic2d_d1(t):
    return _stack(np.full_like(t, 10.0), 30 * t**2 + 4 * t - 10)


def _cubic2d_d2(t):
    return _stack(np.zeros_like(t), 60 * t + 4)


def _spiral(t):
    return _stack(t * np.cos(t), t * np.sin(t))


def _spiral_d1(t):
    return _stack(np.cos(t) - t * np.sin(t), np.sin(t) + t * np.cos(t))


def _spiral_d2(t):
    return _stack(-2 * np.sin(t) - t * np.cos(t), 2 * np.cos(t) - t * np.sin(t))


def _helix(t):
    return _stack(3 * np.cos(t), 3 * np.sin(t), 3 * t)


def _helix_d1(t):
    return _stack(-3 * np.sin(t), 3 * np.cos(t), np.full_like(t, 3.0))


def _helix_d2(t):
    return _stack(-3 * np.cos(t), -3 * np.sin(t), np.zeros_like(t))


def _astroid(t):
    return _stack(np.cos(t) ** 3, np.sin(t) ** 3)


def _astroid_d1(t):
    c, s = np.cos(t), np.sin(t)
    return _stack(-3 * c**2 * s, 3 * s**2 * c)


def _astroid_d2(t):
    c, s = np.cos(t), np.sin(t)
    return _stack(6 * c * s**2 - 3 * c**3, 6 * s * c**2 - 3 * s**3)


def _half_ellipse(t):
    return _stack(10 * np.cos(t), np.sin(t))


def _half_ellipse_d1(t):
    return _stack(-10 * np.sin(t), np.cos(t))


def _half_ellipse_d2(t):
    return _stack(-10 * np.cos(t), -np.sin(t))


def _rel_cubic(t):
    return _stack(t, 3 * t**3 + 2 * t**2 - 2 * t)


def _rel_cubic_d1(t):
    return _stack(np.ones_like(t), 9 * t**2 + 4 * t - 2)


def _rel_cubic_d2(t):
    return _stack(np.zeros_like(t), 18 * t + 4)


@dataclass(frozen=True)
class _Curve:
    interval: tuple[float, float]
    f: Callable
    d1: Callable
    d2: Callable
    relative_noise: bool = False

    @property
    def m(self) -> int:
        return self.f(np.zeros(1)).shape[0]


CURVES: dict[str, _Curve] = {
    "cubic2d": _Curve((-1.0, 1.0), _cubic2d, _cubic2d_d1, _cubic2d_d2),
    "spiral": _Curve((0.0, 4 * math.pi), _spiral, _spiral_d1, _spiral_d2),
    "helix": _Curve((0.0, 4 * math.pi), _helix, _helix_d1, _helix_d2),
    "astroid": _Curve((0.0, math.pi), _astroid, _astroid_d1, _astroid_d2),
    "half_ellipse": _Curve(
        (math.pi / 2, 3 * math.pi / 2), _half_ellipse, _half_ellipse_d1, _half_ellipse_d2
    ),
    "rel_cubic": _Curve((-1.1, 1.0), _rel_cubic, _rel_cubic_d1, _rel_cubic_d2, True),
}


def _check_eta(eta):
    if not np.isfinite(eta) or eta < 0:
        raise DatasetError(f"noise level must be a finite non-negative number, got {eta}")


def gen_curve(name: str, N: int, eta: float = 0.0, seed: int = 0):
    """Sample one of the named 1-D test curves.

    Parameters are uniformly spaced over the curve's interval, endpoints
    included. Noise is additive Gaussian, ``x_i = f(t_i) + eta * z_i``,
    except for ``rel_cubic``, the graph ``(t, f(t))`` of a scalar function,
    where only the function value is perturbed and the perturbation is
    relative: ``f(t_i) * (1 + eta * z_i)``.

    Returns
    -------
    X : ndarray, shape (m, N)
    truth : GroundTruth
    """
    if name not in CURVES:
        raise DatasetError(f"unknown curve {name!r}; choose from {sorted(CURVES)}")
    if N < 2:
        raise DatasetError(f"need at least 2 samples, got N={N}")
    _check_eta(eta)
    curve = CURVES[name]
    lo, hi = curve.interval
    t = np.linspace(lo, hi, N)
    clean = curve.f(t)
    z = make_rng(seed).standard_normal(clean.shape)
    if eta == 0:
        X = clean.copy()
    elif curve.relative_noise:
        # the abscissa stays exact; the draw keeps the full shape for a uniform stream
        X = clean.copy()
        X[1] = clean[1] * (1.0 + eta * z[1])
    else:
        X = clean + eta * z
    noise = X - clean

    def f(tau):
        return curve.f(np.asarray(tau, dtype=float).reshape(-1))

    def jac(tau):
        return curve.d1(np.asarray(tau, dtype=float).reshape(1))

    def hess(tau):
        return curve.d2(np.asarray(tau, dtype=float).reshape(1))[:, :, np.newaxis]

    truth = GroundTruth(
        d=1,
        params=t[np.newaxis, :],
        f=f,
        jacobian=jac,
        hessian=hess,
        noise=noise,
        noise_level=float(eta),
        hessian_analytic=True,
        meta={"generator": "curve", "name": name, "n": N, "eta": float(eta), "seed": int(seed)},
    )
    return X, truth


# ---------------------------------------------------------------------------
# peak surface


def peak_height(t, s):
    """The peak function ``h(t, s)``."""
    return (
        0.3 * (1 - t) ** 2 * np.exp(-(t**2) - (s + 1) ** 2)
        - (0.2 * t - t**3 - s**5) * np.exp(-(t**2) - s**2)
        - 0.1 * np.exp(-((t + 1) ** 2) - s**2)
    )


def _peak_gradient(t, s):
    ea = np.exp(-(t**2) - (s + 1) ** 2)
    eb = np.exp(-(t**2) - s**2)
    ec = np.exp(-((t + 1) ** 2) - s**2)
    poly = 0.2 * t - t**3 - s**5
    dA_dt = 0.3 * (-2 * (1 - t) - 2 * t * (1 - t) ** 2) * ea
    dA_ds = 0.3 * (1 - t) ** 2 * (-2 * (s + 1)) * ea
    dB_dt = ((0.2 - 3 * t**2) - 2 * t * poly) * eb
    dB_ds = (-5 * s**4 - 2 * s * poly) * eb
    dC_dt = -0.2 * (t + 1) * ec
    dC_ds = -0.2 * s * ec
    return dA_dt - dB_dt - dC_dt, dA_ds - dB_ds - dC_ds


def _peak_f(tau):
    tau = np.asarray(tau, dtype=float).reshape(2, -1)
    t, s = tau
    return np.vstack([t, s, peak_height(t, s)])


def _peak_jacobian(tau):
    t, s = np.asarray(tau, dtype=float).reshape(2)
    ht, hs = _peak_gradient(t, s)
    return np.array([[1.0, 0.0], [0.0, 1.0], [ht, hs]])


def _peak_hessian(tau, step=PEAK_FD_STEP):
    """Central differences of the analytic Jacobian."""
    tau = np.asarray(tau, dtype=float).reshape(2)
    H = np.zeros((3, 2, 2))
    for b in range(2):
        e = np.zeros(2)
        e[b] = step
        H[:, :, b] = (_peak_jacobian(tau + e) - _peak_jacobian(tau - e)) / (2 * step)
    return 0.5 * (H + H.transpose(0, 2, 1))


def gen_peak_surface(N: int, eta: float = 1.0, seed: int = 0):
    """Sample the 3-D peak surface ``(t, s, h(t, s))``.

    ``t`` and ``s`` are i.i.d. uniform on ``[-1, 1]``; the added noise is
    ``0.01 * eta * z`` with ``z`` standard normal in 3-D.
    """
    if N < 3:
        raise DatasetError(f"need at least 3 samples, got N={N}")
    _check_eta(eta)
    rng = make_rng(seed)
    params = rng.uniform(-1.0, 1.0, size=(2, N))
    clean = _peak_f(params)
    z = rng.standard_normal(clean.shape)
    X = clean + PEAK_NOISE_SCALE * eta * z if eta else clean.copy()
    truth = GroundTruth(
        d=2,
        params=params,
        f=_peak_f,
        jacobian=_peak_jacobian,
        hessian=_peak_hessian,
        noise=X - clean,
        noise_level=float(eta),
        hessian_analytic=False,
        meta={"generator": "peak", "n": N, "eta": float(eta), "seed": int(seed)},
    )
    return X, truth


# ---------------------------------------------------------------------------
# embeddings into higher dimension


def _haar_orthonormal(rng, rows, cols):
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def embed_highdim(X, target_m: int, mode: str = "orthogonal", seed: int = 0):
    """Map ``(m, N)`` data into ``target_m`` dimensions by a random linear map.

    ``orthogonal`` draws a ``target_m x m`` matrix with orthonormal columns
    (QR of a Gaussian matrix, sign-corrected); ``affine`` draws
    ``U diag(s) V^T`` with ``U``, ``V`` random orthonormal and ``s`` uniform
    on ``(0, 1)``.

    Returns
    -------
    Y : ndarray, shape (target_m, N)
    transform : ndarray, shape (target_m, m)
    """
    X = as_data_matrix(X)
    m = X.shape[0]
    if target_m < m:
        raise DatasetError(f"target dimension {target_m} is smaller than input dimension {m}")
    rng = make_rng(seed)
    if mode == "orthogonal":
        M = _haar_orthonormal(rng, target_m, m)
    elif mode == "affine":
        U = _haar_orthonormal(rng, target_m, m)
        V = _haar_orthonormal(rng, m, m)
        s = rng.uniform(0.0, 1.0, size=m)
        while np.any(s == 0.0):
            s = rng.uniform(0.0, 1.0, size=m)
        M = (U * s) @ V.T
    else:
        raise DatasetError(f"unknown embedding mode {mode!r}")
    return M @ X, M


def lift_truth(truth: GroundTruth, transform) -> GroundTruth:
    """Ground truth of ``transform @ X`` given the truth of ``X``."""
    M = np.asarray(transform, dtype=float)
    f0, j0, h0 = truth.f, truth.jacobian, truth.hessian
    return GroundTruth(
        d=truth.d,
        params=truth.params,
        f=lambda tau: M @ f0(tau),
        jacobian=lambda tau: M @ j0(tau),
        hessian=lambda tau: np.tensordot(M, h0(tau), axes=1),
        noise=M @ truth.noise,
        noise_level=truth.noise_level,
        hessian_analytic=truth.hessian_analytic,
        meta=dict(truth.meta),
    )


# ---------------------------------------------------------------------------
# clustering data


def gen_three_gaussians(n_per: int = 100, seed: int = 0) -> LabeledSet:
    """Three planar Gaussians with covariance ``0.2 I`` around fixed means."""
    if n_per < 1:
        raise DatasetError(f"need at least one point per component, got {n_per}")
    rng = make_rng(seed)
    z = rng.standard_normal((2, 3 * n_per))
    labels = np.repeat(np.arange(3), n_per)
    X = GAUSSIAN_MEANS[labels].T + math.sqrt(GAUSSIAN_COV) * z
    return LabeledSet(
        data=X,
        labels=labels,
        meta={"generator": "three_gaussians", "n_per": n_per, "seed": int(seed)},
    )


def regenerate(meta: dict):
    """Rebuild ``(X, truth_or_labels)`` from a metadata dictionary.

    Accepts the dictionaries written by :func:`save_meta`, so evaluation can
    recover the generating function of a data set saved to disk.
    """
    kind = meta.get("generator")
    if kind == "curve":
        X, truth = gen_curve(meta["name"], int(meta["n"]), float(meta["eta"]), int(meta["seed"]))
    elif kind == "peak":
        X, truth = gen_peak_surface(int(meta["n"]), float(meta["eta"]), int(meta["seed"]))
    elif kind == "three_gaussians":
        ls = gen_three_gaussians(int(meta["n_per"]), int(meta["seed"]))
        return ls.data, ls.labels
    else:
        raise DatasetError(f"metadata does not describe a known generator: {kind!r}")
    if meta.get("embed"):
        X, M = embed_highdim(X, int(meta["target_dim"]), meta["embed"], int(meta["embed_seed"]))
        truth = lift_truth(truth, M)
    truth.meta = dict(meta)
    return X, truth


# ---------------------------------------------------------------------------
# CSV


def save_csv(path, X, points_as_rows: bool = True, header=None) -> None:
    """Write a matrix with 17 significant digits, LF line endings.

    With ``points_as_rows`` the ``(m, N)`` data matrix is written as ``N``
    rows of ``m`` values. ``header`` is an optional sequence of column names.
    """
    A = np.atleast_2d(np.asarray(X, dtype=float))
    if points_as_rows:
        A = A.T
    with open(path, "w", newline="") as fh:
        if header is not None:
            fh.write(",".join(str(h) for h in header) + "\n")
        for row in A:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_csv(path, points_as_rows: bool = True, header: bool = False) -> np.ndarray:
    """Read a rectangular numeric table as an ``(m, N)`` data matrix.

    Raises
    ------
    EmptyFileError, RaggedRowError, NonNumericError
        With the 1-based row (and column) of the offending cell.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, raw in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not raw or (len(raw) == 1 and raw[0].strip() == ""):
                continue
            if width is None:
                width = len(raw)
            elif len(raw) != width:
                raise RaggedRowError(
                    f"row has {len(raw)} fields, expected {width}", row=lineno
                )
            try:
                rows.append([float(v) for v in raw])
            except ValueError:
                for col, v in enumerate(raw, start=1):
                    try:
                        float(v)
                    except ValueError:
                        raise NonNumericError(f"non-numeric value {v!r}", lineno, col) from None
    if not rows:
        raise EmptyFileError(f"no data rows in {path}")
    A = np.array(rows, dtype=float)
    if not np.all(np.isfinite(A)):
        r, c = np.argwhere(~np.isfinite(A))[0]
        raise NonNumericError("non-finite value", int(r) + 1 + int(header), int(c) + 1)
    return A.T.copy() if points_as_rows else A


def save_meta(path, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        for key in sorted(meta):
            fh.write(f"{key}={meta[key]}\n")


def load_meta(path) -> dict:
    meta = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CSVFormatError("expected key=value", row=lineno)
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def save_truth(stem, truth: GroundTruth) -> tuple[Path, Path]:
    """Write ``<stem>.truth.csv`` (``d`` rows of parameters) and ``<stem>.meta``."""
    stem = str(stem)
    truth_path = Path(stem + ".truth.csv")
    meta_path = Path(stem + ".meta")
    save_csv(truth_path, truth.params, points_as_rows=False)
    meta = dict(truth.meta)
    meta.update(d=truth.d, hessian="analytic" if truth.hessian_analytic else "finite-difference")
    save_meta(meta_path, meta)
    return truth_path, meta_path


def load_truth(stem) -> tuple[np.ndarray, dict]:
    """Read the parameter matrix and metadata written by :func:`save_truth`."""
    stem = str(stem)
    params = load_csv(stem + ".truth.csv", points_as_rows=False)
    meta_path = Path(stem + ".meta")
    meta = load_meta(meta_path) if meta_path.exists() else {}
    return params, meta
