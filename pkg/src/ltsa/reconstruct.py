"""Feature-space to input-space map built from a finished embedding.

Each point keeps a local affine record: with ``Q_i``, ``c_i`` from its frame,
``tau_bar_i`` the mean embedded coordinate of its neighborhood and ``L_i``
the least-squares alignment ``T_i (I - ee^T/k) ~ L_i Theta_i``,

    g(tau) = c_i + Q_i L_i^{-1} (tau - tau_bar_i)

where ``i`` is the embedded point nearest to ``tau``. The map is piecewise
affine and jumps across the boundaries of the nearest-point cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ReconstructionError
from .neighbors import nearest_index

__all__ = [
    "ReconstructionMap",
    "Theorem1Record",
    "fit_reconstruction",
    "load_reconstruction",
    "map_point",
    "save_reconstruction",
    "theorem1_report",
]

SINGULAR_RTOL = 1e-12
ILL_FACTOR = 10.0


@dataclass
class ReconstructionMap:
    T: np.ndarray
    centers: np.ndarray
    bases: np.ndarray
    tau_bar: np.ndarray
    L: np.ndarray
    L_inv: np.ndarray
    cond: np.ndarray
    gain: np.ndarray
    usable: np.ndarray
    ill_conditioned: np.ndarray
    points: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.T.shape[1]

    @property
    def d(self) -> int:
        return self.T.shape[0]

    @property
    def m(self) -> int:
        return self.centers.shape[1]

    def nearest(self, tau) -> int:
        return nearest_index(self.T.T, np.asarray(tau, dtype=float).reshape(self.d))

    def evaluate(self, i: int, tau) -> np.ndarray:
        """Record ``i``'s affine piece at ``tau``, whatever cell ``tau`` lies in."""
        if not self.usable[i]:
            raise ReconstructionError(
                f"record {i} has a singular alignment matrix (cond={self.cond[i]:.3g})"
            )
        tau = np.asarray(tau, dtype=float).reshape(self.d)
        return self.centers[i] + self.bases[i] @ (self.L_inv[i] @ (tau - self.tau_bar[i]))


def fit_reconstruction(X, embedding, frames, nbrs, ill_factor: float = ILL_FACTOR):
    """Fit one affine record per point.

    A record is unusable when ``sigma_min(L_i) < 1e-12 sigma_max(L_i)``; it
    is marked ill-conditioned when its gain ``||L_i^{-1}||_2`` exceeds
    ``ill_factor`` times the median gain of the usable records.
    """
    X = np.asarray(X, dtype=float)
    T = np.asarray(embedding.T, dtype=float)
    d, N = T.shape
    if X.shape[1] != N or len(frames) != N or nbrs.N != N:
        raise ReconstructionError(
            f"size mismatch: data N={X.shape[1]}, embedding N={N}, "
            f"{len(frames)} frames, {nbrs.N} neighborhoods"
        )
    if frames[0].d != d:
        raise ReconstructionError(f"frames have d={frames[0].d}, embedding has d={d}")
    m = X.shape[0]
    centers = np.empty((N, m))
    bases = np.empty((N, m, d))
    tau_bar = np.empty((N, d))
    L = np.empty((N, d, d))
    L_inv = np.full((N, d, d), np.nan)
    cond = np.full(N, np.inf)
    gain = np.full(N, np.inf)
    usable = np.zeros(N, dtype=bool)
    for i, fr in enumerate(frames):
        Ti = T[:, nbrs.sets[i]]
        tau_bar[i] = Ti.mean(axis=1)
        TiC = Ti - tau_bar[i][:, np.newaxis]
        # least squares Theta^T L^T = (T_i C)^T, no explicit pseudoinverse
        L[i] = np.linalg.lstsq(fr.coords.T, TiC.T, rcond=None)[0].T
        centers[i] = fr.center
        bases[i] = fr.basis
        sv = np.linalg.svd(L[i], compute_uv=False)
        if sv[0] > 0 and sv[-1] >= SINGULAR_RTOL * sv[0]:
            usable[i] = True
            L_inv[i] = np.linalg.inv(L[i])
            cond[i] = sv[0] / sv[-1]
            gain[i] = 1.0 / sv[-1]
    ill = ~usable.copy()
    if usable.any():
        ill |= gain > ill_factor * np.median(gain[usable])
    return ReconstructionMap(
        T=T.copy(),
        centers=centers,
        bases=bases,
        tau_bar=tau_bar,
        L=L,
        L_inv=L_inv,
        cond=cond,
        gain=gain,
        usable=usable,
        ill_conditioned=ill,
        points=X,
    )


def map_point(rmap: ReconstructionMap, tau) -> np.ndarray:
    """``g(tau)`` through the record of the nearest embedded point."""
    return rmap.evaluate(rmap.nearest(tau), tau)


@dataclass(frozen=True)
class Theorem1Record:
    index: int
    lhs: float
    eps_star: float
    xi: float
    L_inv_eps: float
    bound: float
    satisfied: bool


def theorem1_report(rmap: ReconstructionMap, truth, i: int, slack: float = 1e-8) -> Theorem1Record:
    """Compare ``||g(tau_i) - f(tau*_i)||`` with its three-term bound.

    The terms are the sample noise ``||x_i - f(tau*_i)||``, the tangent
    residual ``||(I - Q_i Q_i^T)(x_i - c_i)||`` and the alignment residual
    ``||L_i^{-1} eps_i||`` with ``eps_i = tau_i - tau_bar_i - L_i Q_i^T (x_i - c_i)``.
    Record ``i``'s own affine piece is used for ``g(tau_i)``.
    """
    if truth is None:
        raise ReconstructionError("theorem1_report needs ground truth")
    if rmap.points is None:
        raise ReconstructionError("reconstruction map was loaded without its data points")
    x = rmap.points[:, i]
    fx = truth.f(truth.params[:, i : i + 1])[:, 0]
    Q = rmap.bases[i]
    offset = x - rmap.centers[i]
    proj = Q.T @ offset
    xi = offset - Q @ proj
    eps = rmap.T[:, i] - rmap.tau_bar[i] - rmap.L[i] @ proj
    g = rmap.evaluate(i, rmap.T[:, i])
    lhs = float(np.linalg.norm(g - fx))
    terms = (
        float(np.linalg.norm(x - fx)),
        float(np.linalg.norm(xi)),
        float(np.linalg.norm(rmap.L_inv[i] @ eps)),
    )
    bound = sum(terms)
    return Theorem1Record(i, lhs, *terms, bound, lhs <= bound + slack)


# ---------------------------------------------------------------------------
# text serialization

_MAGIC = "ltsa-reconstruction-map,1"


def _row(label, values):
    return label + "," + ",".join(format(float(v), ".17g") for v in np.ravel(values)) + "\n"


def save_reconstruction(path, rmap: ReconstructionMap) -> None:
    """Write the map as CSV blocks: a header, the coordinates, then one block per record."""
    with open(path, "w", newline="") as fh:
        fh.write(_MAGIC + "\n")
        fh.write(f"shape,{rmap.m},{rmap.d},{rmap.N}\n")
        for r in range(rmap.d):
            fh.write(_row("coords", rmap.T[r]))
        for i in range(rmap.N):
            fh.write(f"record,{i},{int(rmap.usable[i])},{int(rmap.ill_conditioned[i])}\n")
            fh.write(_row("stats", [rmap.cond[i], rmap.gain[i]]))
            fh.write(_row("center", rmap.centers[i]))
            fh.write(_row("tau_bar", rmap.tau_bar[i]))
            fh.write(_row("basis", rmap.bases[i]))
            fh.write(_row("L", rmap.L[i]))
            fh.write(_row("L_inv", rmap.L_inv[i]))


def load_reconstruction(path) -> ReconstructionMap:
    with open(path) as fh:
        lines = [ln.rstrip("\r\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != _MAGIC:
        raise ReconstructionError(f"{path} is not a reconstruction map file")
    _, m, d, N = lines[1].split(",")
    m, d, N = int(m), int(d), int(N)

    def values(line, label):
        parts = line.split(",")
        if parts[0] != label:
            raise ReconstructionError(f"expected {label!r} line, got {parts[0]!r}")
        return np.array([float(v) for v in parts[1:]])

    T = np.array([values(lines[2 + r], "coords") for r in range(d)]).reshape(d, N)
    out = dict(
        centers=np.empty((N, m)),
        bases=np.empty((N, m, d)),
        tau_bar=np.empty((N, d)),
        L=np.empty((N, d, d)),
        L_inv=np.empty((N, d, d)),
        cond=np.empty(N),
        gain=np.empty(N),
        usable=np.zeros(N, dtype=bool),
        ill_conditioned=np.zeros(N, dtype=bool),
    )
    pos = 2 + d
    for i in range(N):
        head = lines[pos].split(",")
        if head[0] != "record" or int(head[1]) != i:
            raise ReconstructionError(f"malformed record header at line {pos + 1}")
        out["usable"][i] = head[2] == "1"
        out["ill_conditioned"][i] = head[3] == "1"
        out["cond"][i], out["gain"][i] = values(lines[pos + 1], "stats")
        out["centers"][i] = values(lines[pos + 2], "center")
        out["tau_bar"][i] = values(lines[pos + 3], "tau_bar")
        out["bases"][i] = values(lines[pos + 4], "basis").reshape(m, d)
        out["L"][i] = values(lines[pos + 5], "L").reshape(d, d)
        out["L_inv"][i] = values(lines[pos + 6], "L_inv").reshape(d, d)
        pos += 7
    return ReconstructionMap(T=T, **out)
