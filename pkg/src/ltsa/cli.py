"""Command-line front end: ``ltsa generate | embed | evaluate | plot``.

Machine-readable ``key=value`` summaries go to stdout, diagnostics to
stderr. Exit codes: 0 success, 2 invalid input or arguments, 3 file-system
failure, 4 eigensolver non-convergence (the solver report is still written).

Every option can also be given in a ``key=value`` file passed with
``--config``; flags on the command line take precedence, and
``--print-config`` shows the merged settings without running anything.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import dataset as ds
from .align import SolverOptions, linear_embed, ltsa_embed
from .analysis import affine_align, cluster_separation, lle_embed, save_affine_fit, theorem_bounds
from .eigen import DENSE_THRESHOLD
from .errors import ConvergenceError, LTSAError
from .neighbors import knn
from .plotting import scatter_svg, strip_svg, write_svg
from .reconstruct import fit_reconstruction, save_reconstruction
from .tangent import all_frames, estimate_dim, singular_ratio_profile

log = logging.getLogger("ltsa")

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_CONVERGENCE = 0, 2, 3, 4

_COMMON = {
    "seed": 0,
    "tol": 1e-10,
    "dense_threshold": DENSE_THRESHOLD,
    "max_iter": None,
    "layout": "rows",
    "header": False,
}

DEFAULTS = {
    "generate": dict(
        _COMMON, curve=None, peak=False, three_gaussians=False, n=400, n_per=100,
        eta=None, embed=None, target_dim=None, embed_seed=None, output=None,
    ),
    "embed": dict(
        _COMMON, input=None, output="coords.csv", report=None, k=8, d=1,
        method="ltsa", reg=1e-3, rmap=None,
    ),
    "evaluate": dict(
        _COMMON, input=None, coords="coords.csv", output="eval", k=None, d=None,
        threshold=0.3,
    ),
    "plot": dict(_COMMON, input=None, coords=None, output="plot", axes="0,1"),
}

_BOOL = {"peak", "three_gaussians", "header"}
_INT = {"seed", "dense_threshold", "max_iter", "n", "n_per", "target_dim", "embed_seed", "k", "d"}
_FLOAT = {"tol", "eta", "reg", "threshold"}
_CHOICES = {"method": ("ltsa", "lle", "pca"), "layout": ("rows", "columns"),
            "embed": ("orthogonal", "affine"), "curve": tuple(sorted(ds.CURVES))}


class UsageError(Exception):
    """Invalid configuration; exit code 2."""


# ---------------------------------------------------------------------------
# configuration


def _convert(key, text):
    if text in ("", "none", "None", "auto"):
        return None
    try:
        if key in _BOOL:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if key in _INT:
            return int(text)
        if key in _FLOAT:
            return float(text)
    except ValueError:
        raise UsageError(f"config key {key!r}: cannot parse {text!r}") from None
    return text


def load_config(path, command) -> dict:
    """Parse a ``key=value`` config file; unknown keys are rejected."""
    known = DEFAULTS[command]
    try:
        raw = ds.load_meta(path)
    except LTSAError as err:
        raise UsageError(f"config file {path}: {err}") from None
    out = {}
    for key, text in raw.items():
        key = key.replace("-", "_")
        if key not in known:
            raise UsageError(f"unknown config key {key!r} for command {command!r}")
        out[key] = _convert(key, text)
    return out


def resolve(command, args) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS[command])
    if args.config:
        cfg.update(load_config(args.config, command))
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for key, allowed in _CHOICES.items():
        if key in cfg and cfg[key] is not None and cfg[key] not in allowed:
            raise UsageError(f"{key} must be one of {', '.join(allowed)}, got {cfg[key]!r}")
    return cfg


def format_config(cfg) -> str:
    def fmt(v):
        if v is None:
            return "auto"
        if isinstance(v, bool):
            return "true" if v else "false"
        return str(v)

    return "".join(f"{key}={fmt(cfg[key])}\n" for key in sorted(cfg))


def _emit(**pairs):
    for key, value in pairs.items():
        if isinstance(value, float):
            value = format(value, ".17g")
        print(f"{key}={value}")


def _stem(path) -> str:
    p = str(path)
    return p[:-4] if p.endswith(".csv") else p


def _rows(cfg):
    return cfg["layout"] == "rows"


def _options(cfg) -> SolverOptions:
    return SolverOptions(tol=cfg["tol"], dense_threshold=cfg["dense_threshold"],
                         max_iter=cfg["max_iter"], seed=cfg["seed"])


def _load_data(cfg, key="input"):
    if not cfg[key]:
        raise UsageError(f"missing --{key.replace('_', '-')}")
    try:
        return ds.load_csv(cfg[key], points_as_rows=_rows(cfg), header=cfg["header"])
    except (ds.DatasetError, ValueError) as err:
        raise UsageError(f"{cfg[key]}: {err}") from None


def _load_labels(stem):
    path = Path(stem + ".labels.csv")
    if not path.exists():
        return None
    return ds.load_csv(path, points_as_rows=False)[0].astype(int)


def _load_truth(stem, X):
    """Ground truth for a data file, or ``(params, None)`` when only parameters exist."""
    if not Path(stem + ".truth.csv").exists():
        return None, None
    params, meta = ds.load_truth(stem)
    if meta.get("generator") in ("curve", "peak"):
        X2, truth = ds.regenerate(meta)
        if X2.shape == X.shape and np.allclose(X2, X, rtol=0, atol=1e-12 * max(1.0, np.abs(X).max())):
            return params, truth
        log.warning("data no longer matches its generator metadata; bounds skipped")
    return params, None


def _coords_meta(path):
    meta_path = Path(_stem(path) + ".meta")
    return ds.load_meta(meta_path) if meta_path.exists() else {}


# ---------------------------------------------------------------------------
# commands


def cmd_generate(cfg) -> int:
    chosen = [bool(cfg["curve"]), bool(cfg["peak"]), bool(cfg["three_gaussians"])]
    if sum(chosen) != 1:
        raise UsageError("choose exactly one of --curve NAME, --peak, --three-gaussians")
    if not cfg["output"]:
        raise UsageError("missing -o/--output stem")
    stem = _stem(cfg["output"])
    seed = cfg["seed"]
    labels = truth = None
    try:
        if cfg["curve"]:
            X, truth = ds.gen_curve(cfg["curve"], cfg["n"], cfg["eta"] or 0.0, seed)
        elif cfg["peak"]:
            eta = 1.0 if cfg["eta"] is None else cfg["eta"]
            X, truth = ds.gen_peak_surface(cfg["n"], eta, seed)
        else:
            if cfg["embed"]:
                raise UsageError("--embed applies to curves and the peak surface only")
            ls = ds.gen_three_gaussians(cfg["n_per"], seed)
            X, labels = ls.data, ls.labels
            meta = dict(ls.meta)
        if cfg["embed"]:
            target = cfg["target_dim"]
            if target is None:
                raise UsageError("--embed needs --target-dim")
            eseed = cfg["embed_seed"] if cfg["embed_seed"] is not None else seed + 1
            X, M = ds.embed_highdim(X, target, cfg["embed"], eseed)
            meta = dict(truth.meta, embed=cfg["embed"], target_dim=target, embed_seed=eseed)
            truth = ds.lift_truth(truth, M)
            truth.meta = meta
    except ds.DatasetError as err:
        raise UsageError(str(err)) from None

    data_path = stem + ".csv"
    ds.save_csv(data_path, X, points_as_rows=_rows(cfg))
    written = [data_path]
    if truth is not None:
        written += [str(p) for p in ds.save_truth(stem, truth)]
    else:
        ds.save_csv(stem + ".labels.csv", labels[np.newaxis], points_as_rows=False)
        ds.save_meta(stem + ".meta", meta)
        written += [stem + ".labels.csv", stem + ".meta"]
    _emit(m=X.shape[0], N=X.shape[1])
    for p in written:
        _emit(wrote=p)
    return EXIT_OK


def cmd_embed(cfg) -> int:
    X = _load_data(cfg)
    k, d, method = cfg["k"], cfg["d"], cfg["method"]
    if d is None or d < 1:
        raise UsageError("--d must be a positive integer")
    if method != "pca":
        if k is None or not 1 < k <= X.shape[1]:
            raise UsageError(f"--k must satisfy 1 < k <= N={X.shape[1]}")
        if d >= k:
            raise UsageError(f"--d={d} must be smaller than --k={k}")
    out = cfg["output"]
    report_path = cfg["report"] or str(Path(out).with_name("solver_report.txt"))
    options = _options(cfg)
    t0 = time.perf_counter()
    try:
        if method == "ltsa":
            emb, frames, nbrs = ltsa_embed(X, k, d, options)
        elif method == "lle":
            emb = lle_embed(X, k, d, cfg["reg"], options)
        else:
            emb, _ = linear_embed(X, d)
    except ConvergenceError as err:
        if err.report is not None:
            Path(report_path).write_text(err.report.to_text())
        log.error("%s", err)
        _emit(converged="false", report=report_path)
        return EXIT_CONVERGENCE
    except (LTSAError, ValueError) as err:
        raise UsageError(str(err)) from None
    log.info("embedding finished in %.2f s (%s)", time.perf_counter() - t0, emb.report.method)

    ds.save_csv(out, emb.T, points_as_rows=True)
    ds.save_meta(_stem(out) + ".meta", dict(input=cfg["input"], k=k, d=d, method=method))
    Path(report_path).write_text(emb.report.to_text())
    for w in emb.report.warnings:
        log.warning("%s", w)
    _emit(method=method, N=emb.N, d=d, converged="true", wrote=out)
    _emit(wrote=report_path)
    if cfg["rmap"]:
        if method != "ltsa":
            raise UsageError("--rmap needs --method ltsa")
        rmap = fit_reconstruction(X, emb, frames, nbrs)
        save_reconstruction(cfg["rmap"], rmap)
        _emit(ill_conditioned=int(rmap.ill_conditioned.sum()), wrote=cfg["rmap"])
    return EXIT_OK


def cmd_evaluate(cfg) -> int:
    X = _load_data(cfg)
    stem = _stem(cfg["input"])
    prefix = cfg["output"]
    cmeta = _coords_meta(cfg["coords"])
    k = cfg["k"] if cfg["k"] is not None else int(cmeta.get("k", 8))
    d = cfg["d"] if cfg["d"] is not None else int(cmeta.get("d", 1))
    try:
        nbrs = knn(X, k)
        frames = all_frames(X, nbrs, d)
    except LTSAError as err:
        raise UsageError(str(err)) from None

    # the ratio profile needs only the data
    n_sig = min(len(f.sigmas) for f in frames)
    ratios = np.array([singular_ratio_profile(frames, j)[0] for j in range(1, n_sig)])
    ds.save_csv(prefix + ".ratios.csv", ratios, points_as_rows=True,
                header=[f"rho{j}" for j in range(1, n_sig)])
    est = estimate_dim(frames, cfg["threshold"])
    _emit(estimated_dim=est if est is not None else "undetermined")
    _emit(wrote=prefix + ".ratios.csv")

    coords_path = Path(cfg["coords"])
    T = None
    if coords_path.exists():
        T = ds.load_csv(coords_path, points_as_rows=True)
        if T.shape[1] != X.shape[1]:
            raise UsageError(f"coordinates have {T.shape[1]} points, data has {X.shape[1]}")

    labels = _load_labels(stem)
    if labels is not None and T is not None:
        _emit(cluster_score=cluster_separation(T, labels))

    params, truth = _load_truth(stem, X)
    if params is None:
        if labels is None:
            log.warning("no ground truth next to %s; only the ratio profile was written", cfg["input"])
        return EXIT_OK
    if T is None:
        log.warning("no coordinates at %s; affine fit and bounds skipped", coords_path)
        return EXIT_OK
    fit = affine_align(T, params)
    save_affine_fit(prefix + ".affine.csv", fit)
    _emit(rms=fit.rms, relative_rms=fit.relative_rms, wrote=prefix + ".affine.csv")

    if truth is None:
        return EXIT_OK
    if cmeta.get("method", "ltsa") != "ltsa" or T.shape[0] != d:
        log.warning("error bounds apply to ltsa coordinates of dimension d; skipped")
        return EXIT_OK
    from .align import Embedding
    from .eigen import SolverReport

    emb = Embedding(d=d, T=T, eigenvalues=None, report=SolverReport("loaded", X.shape[1], d + 1, 0.0))
    rep = theorem_bounds(X, truth, frames, nbrs, emb)
    rep.to_csv(prefix + ".bounds.csv")
    frac = rep.fraction_satisfied()
    _emit(bound_inapplicable=int((~rep.applicable).sum()),
          theorem2_fraction=frac["sat2"], theorem3_fraction=frac["sat3"],
          theorem4_fraction=frac["sat4"], wrote=prefix + ".bounds.csv")
    return EXIT_OK


def _parse_axes(text, m):
    try:
        axes = [int(a) for a in str(text).split(",")]
    except ValueError:
        raise UsageError(f"--axes must be comma-separated integers, got {text!r}") from None
    if len(axes) != 2:
        raise UsageError("only 2-D projections are supported; pass exactly two --axes")
    if any(not 0 <= a < m for a in axes):
        raise UsageError(f"--axes out of range for {m}-dimensional data")
    return axes


def cmd_plot(cfg) -> int:
    if not cfg["input"] and not cfg["coords"]:
        raise UsageError("nothing to plot; pass -i DATA and/or --coords COORDS")
    prefix = cfg["output"]
    written = []
    params = labels = None
    if cfg["input"]:
        X = _load_data(cfg)
        stem = _stem(cfg["input"])
        labels = _load_labels(stem)
        if Path(stem + ".truth.csv").exists():
            params = ds.load_truth(stem)[0]
        if X.shape[0] < 2:
            raise UsageError("data must have at least two coordinates for a 2-D view")
        a, b = _parse_axes(cfg["axes"], X.shape[0])
        svg = scatter_svg(X[a], X[b], values=None if params is None else params[0], labels=labels,
                          title="data", xlabel=f"x{a}", ylabel=f"x{b}", color_title="tau*1")
        written.append(prefix + "_data.svg")
        write_svg(written[-1], svg)
    if cfg["coords"]:
        try:
            T = ds.load_csv(cfg["coords"], points_as_rows=True)
        except ds.DatasetError as err:
            raise UsageError(f"{cfg['coords']}: {err}") from None
        if params is not None and params.shape[1] != T.shape[1]:
            raise UsageError("coordinates and ground truth have different point counts")
        if T.shape[0] == 1 and params is not None:
            svg = scatter_svg(params[0], T[0], values=params[0], title="computed vs true",
                              xlabel="tau*", ylabel="tau")
            written.append(prefix + "_tau_vs_taustar.svg")
        elif T.shape[0] == 1:
            svg = strip_svg(T[0], labels=labels, title="1-D coordinates", xlabel="tau")
            written.append(prefix + "_strip.svg")
        else:
            a, b = _parse_axes(cfg["axes"] if cfg["input"] is None else "0,1", T.shape[0])
            svg = scatter_svg(T[a], T[b], values=None if params is None else params[0],
                              labels=labels, title="computed coordinates",
                              xlabel=f"tau{a + 1}", ylabel=f"tau{b + 1}", color_title="tau*1")
            written.append(prefix + "_coords.svg")
        write_svg(written[-1], svg)
    for p in written:
        _emit(wrote=p)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "embed": cmd_embed, "evaluate": cmd_evaluate, "plot": cmd_plot}


# ---------------------------------------------------------------------------
# argument parsing


def _common(p):
    g = p.add_argument_group("common")
    g.add_argument("--config", help="key=value file; flags override it")
    g.add_argument("--print-config", action="store_true", help="print merged settings and exit")
    g.add_argument("--verbose", action="store_true", help="progress log on stderr")
    g.add_argument("--seed", type=int)
    g.add_argument("--tol", type=float, help="eigensolver residual tolerance (default 1e-10)")
    g.add_argument("--dense-threshold", type=int, help="largest N solved densely (default 2000)")
    g.add_argument("--max-iter", type=int, help="Lanczos step limit (default 300 * (d + 1))")
    g.add_argument("--layout", choices=("rows", "columns"), help="CSV rows are points (default) or coordinates")
    g.add_argument("--header", action="store_const", const=True, help="input CSV has a header row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltsa", description="Local tangent space alignment toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic data set with its ground truth")
    _common(g)
    g.add_argument("--curve", choices=sorted(ds.CURVES))
    g.add_argument("--peak", action="store_const", const=True)
    g.add_argument("--three-gaussians", action="store_const", const=True)
    g.add_argument("--n", type=int, help="sample count (default 400)")
    g.add_argument("--n-per", type=int, help="points per Gaussian (default 100)")
    g.add_argument("--eta", type=float, help="noise level (curves 0, peak surface 1)")
    g.add_argument("--embed", choices=("orthogonal", "affine"))
    g.add_argument("--target-dim", type=int)
    g.add_argument("--embed-seed", type=int, help="seed of the embedding matrix (default seed + 1)")
    g.add_argument("-o", "--output", help="output stem")

    e = sub.add_parser("embed", help="compute low-dimensional coordinates")
    _common(e)
    e.add_argument("-i", "--input")
    e.add_argument("-o", "--output", help="coordinates CSV (default coords.csv)")
    e.add_argument("--report", help="solver report path (default solver_report.txt beside the output)")
    e.add_argument("--k", type=int, help="neighborhood size including the point (default 8)")
    e.add_argument("--d", type=int, help="target dimension (default 1)")
    e.add_argument("--method", choices=("ltsa", "lle", "pca"))
    e.add_argument("--reg", type=float, help="LLE regularization (default 1e-3)")
    e.add_argument("--rmap", help="also write the reconstruction map to this path")

    v = sub.add_parser("evaluate", help="compare coordinates with the ground truth")
    _common(v)
    v.add_argument("-i", "--input")
    v.add_argument("--coords", help="coordinates CSV (default coords.csv)")
    v.add_argument("-o", "--output", help="output prefix (default eval)")
    v.add_argument("--k", type=int, help="defaults to the value recorded with the coordinates")
    v.add_argument("--d", type=int)
    v.add_argument("--threshold", type=float, help="dimension-estimate ratio threshold (default 0.3)")

    p = sub.add_parser("plot", help="write SVG scatter plots")
    _common(p)
    p.add_argument("-i", "--input")
    p.add_argument("--coords")
    p.add_argument("-o", "--output", help="output prefix (default plot)")
    p.add_argument("--axes", help="two data coordinates to project onto (default 0,1)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        # argparse already printed the message; --help exits 0
        return EXIT_INVALID if stop.code else EXIT_OK
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        force=True,
    )
    try:
        cfg = resolve(args.command, args)
        if args.print_config:
            sys.stdout.write(format_config(cfg))
            return EXIT_OK
        return COMMANDS[args.command](cfg)
    except UsageError as err:
        log.error("%s", err)
        return EXIT_INVALID
    except OSError as err:
        log.error("%s", err)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
