"""Acceptance criteria, one recorded line each (see the terminal summary).

Every check asserts the stated tolerance as is. Parts that the method does
not reach on these datasets stay red.
"""

import time

import numpy as np
import pytest
import scipy.linalg

from conftest import ACCEPTANCE, affine_data
from ltsa import dataset as ds
from ltsa.align import SolverOptions, build_operator, linear_embed, ltsa_embed
from ltsa.analysis import affine_align, cluster_separation, lle_embed, theorem_bounds
from ltsa.cli import main
from ltsa.dataset import make_rng
from ltsa.eigen import smallest_eigenpairs
from ltsa.neighbors import knn
from ltsa.reconstruct import fit_reconstruction, theorem1_report
from ltsa.tangent import all_frames, estimate_dim, singular_ratio_profile


def record(key, passed, detail):
    ACCEPTANCE[key] = (bool(passed), detail)
    assert passed, f"criterion {key}: {detail}"


def datasets(N=400):
    """The eight generators at acceptance scale, with their intrinsic dimension."""
    out = [(name, ds.gen_curve(name, N)[0], 1) for name in sorted(ds.CURVES)]
    out.append(("peak", ds.gen_peak_surface(1000, 1.0, seed=0)[0], 2))
    out.append(("gaussians", ds.gen_three_gaussians(100, seed=0).data, 1))
    return out


def operators():
    for name, X, d in datasets():
        for k in (8, 10, 12):
            nb = knn(X, k)
            yield f"{name} k={k}", X, d, build_operator(all_frames(X, nb, d), nb)


def test_criterion_1_null_space_and_psd():
    rng = make_rng(1)
    start = time.perf_counter()
    worst_null, worst_rq = 0.0, np.inf
    for _, X, d, op in operators():
        N = op.shape[0]
        worst_null = max(worst_null, np.abs(op.apply(np.ones(N))).max())
        V = rng.standard_normal((N, 20))
        BV = op.apply(V)
        worst_rq = min(worst_rq, np.min(np.sum(V * BV, axis=0) / np.sum(V * V, axis=0)))
    elapsed = time.perf_counter() - start
    ok = worst_null <= 1e-10 and worst_rq >= -1e-10 and elapsed < 10
    record("1", ok, f"max|Be|={worst_null:.2e} min RQ={worst_rq:.3f} time={elapsed:.1f}s")


def test_criterion_2_matrix_free_fidelity():
    rng = make_rng(2)
    worst = 0.0
    for _, _, _, op in operators():
        B = op.materialize()
        for _ in range(20):
            v = rng.standard_normal(op.shape[0])
            ref = B @ v
            worst = max(worst, np.linalg.norm(op.apply(v) - ref) / np.linalg.norm(ref))
    record("2", worst <= 1e-12, f"max relative error {worst:.2e}")


def test_criterion_3_lanczos_vs_dense():
    worst_lam, worst_angle = 0.0, 0.0
    for name, X, d in datasets(N=400):
        if name == "peak":
            X = X[:, :500]
        nb = knn(X, 10)
        op = build_operator(all_frames(X, nb, d), nb)
        lam_d, U_d, _ = smallest_eigenpairs(op, d + 1, method="dense")
        lam_l, U_l, _ = smallest_eigenpairs(op, d + 1, method="lanczos", tol=1e-12, max_iter=20000)
        worst_lam = max(worst_lam, np.abs(lam_d - lam_l).max())
        angle = scipy.linalg.subspace_angles(U_d[:, 1:], U_l[:, 1:]).max()
        worst_angle = max(worst_angle, angle)
    ok = worst_lam <= 1e-8 and worst_angle <= 1e-6
    record("3", ok, f"max |dlambda|={worst_lam:.2e} max angle={worst_angle:.2e} (intrinsic d)")


@pytest.mark.parametrize("name,eta,limit", [
    ("spiral", 0.0, 1e-3), ("helix", 0.0, 1e-3), ("cubic2d", 0.0, 1e-3),
    ("spiral", 0.2, 0.15), ("helix", 0.2, 0.15), ("cubic2d", 0.1, 0.15),
])
def test_criterion_4_coordinate_recovery(name, eta, limit):
    X, gt = ds.gen_curve(name, 400, eta, seed=0)
    start = time.perf_counter()
    emb, *_ = ltsa_embed(X, 8, 1)
    rel = affine_align(emb.T, gt.params).relative_rms
    elapsed = time.perf_counter() - start
    record(f"4 {name} eta={eta}", rel <= limit and elapsed < 5,
           f"relative rms {rel:.3g} (limit {limit}) time={elapsed:.2f}s")


@pytest.fixture(scope="module")
def peak_run():
    X, gt = ds.gen_peak_surface(5000, 1.0, seed=1)
    Y, _ = ds.embed_highdim(X, 100, "orthogonal", seed=2)
    start = time.perf_counter()
    # the default step limit (300 per eigenpair) stops short at N=5000
    emb, frames, _ = ltsa_embed(Y, 15, 2, SolverOptions(max_iter=4000))
    elapsed = time.perf_counter() - start
    return emb, frames, gt, elapsed


@pytest.mark.slow
def test_criterion_5_peak_recovery(peak_run):
    emb, _, gt, elapsed = peak_run
    rel = affine_align(emb.T, gt.params).relative_rms
    record("5 rms", rel <= 0.1 and elapsed < 120,
           f"relative rms {rel:.4f} (limit 0.1) solver={emb.report.method} time={elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_5_dimension_estimate(peak_run):
    _, frames, _, _ = peak_run
    est = estimate_dim(frames, threshold=0.3)
    med = np.median(singular_ratio_profile(frames, 2)[0])
    record("5 dim", est == 2, f"estimate {est} (want 2), median rho2={med:.3f} vs threshold 0.3")


def _astroid():
    X, gt = ds.gen_curve("astroid", 400, 0.01, seed=0)
    emb, frames, nb = ltsa_embed(X, 8, 1)
    return X, gt, emb, frames


def test_criterion_6_flag_near_cusp():
    _, gt, _, frames = _astroid()
    t = gt.params[0]
    near = np.flatnonzero(np.abs(t - np.pi / 2) < 0.2)
    flagged = [i for i in near if frames[i].flagged]
    peak = max(frames[i].gap_ratio for i in near)
    record("6 flag", len(flagged) >= 1,
           f"{len(flagged)} flagged of {len(near)} near pi/2 (largest sigma2/sigma1 {peak:.2f})")


def test_criterion_6_residual_near_cusp():
    _, gt, emb, _ = _astroid()
    t = gt.params[0]
    res = affine_align(emb.T, gt.params).per_point
    near = np.abs(t - np.pi / 2) < 0.2
    ratio = res[near].mean() / np.median(res[~near])
    record("6 residual", ratio > 3, f"window/elsewhere residual ratio {ratio:.2f} (want > 3)")


def test_criterion_7_more_neighbors_help():
    rows = []
    for seed in range(5):
        X, gt = ds.gen_curve("rel_cubic", 400, 0.05, seed=seed)
        r = [affine_align(ltsa_embed(X, k, 1)[0].T, gt.params).relative_rms for k in (10, 20)]
        rows.append(r)
    rows = np.array(rows)
    ok = bool(np.all(rows[:, 1] < rows[:, 0]))
    detail = " ".join(f"s{s}:{a:.3f}>{b:.3f}" for s, (a, b) in enumerate(rows))
    record("7", ok, f"k=10 vs k=20 {detail}")


@pytest.mark.parametrize("eta", [0.0, 0.05])
def test_criterion_8_theorems(eta):
    need = 1.0 if eta == 0 else 0.99
    parts = []
    ok = True
    for name in ("helix", "spiral"):
        X, gt = ds.gen_curve(name, 400, eta, seed=0)
        emb, frames, nb = ltsa_embed(X, 8, 1)
        rep = theorem_bounds(X, gt, frames, nb, emb)
        rmap = fit_reconstruction(X, emb, frames, nb)
        t1 = [theorem1_report(rmap, gt, i, slack=rep.slack).satisfied
              for i in range(X.shape[1]) if rep.applicable[i] and rmap.usable[i]]
        frac = rep.fraction_satisfied()
        frac["sat1"] = float(np.mean(t1))
        ok &= min(frac.values()) >= need
        parts.append(f"{name}: " + " ".join(f"T{key[-1]}={frac[key]:.3f}" for key in sorted(frac))
                     + f" applicable={int(rep.applicable.sum())}")
    record(f"8 eta={eta}", ok, "; ".join(parts))


def test_criterion_9_ltsa_beats_lle():
    a, b = [], []
    for seed in range(10):
        ls = ds.gen_three_gaussians(100, seed=seed)
        a.append(cluster_separation(ltsa_embed(ls.data, 10, 1)[0].T, ls.labels))
        b.append(cluster_separation(lle_embed(ls.data, 10, 1).T, ls.labels))
    ma, mb = np.median(a), np.median(b)
    record("9", ma >= 0.9 and ma >= mb, f"median LTSA {ma:.3f}, LLE {mb:.3f}")


def test_criterion_10_linear_baseline():
    X, *_ = affine_data(make_rng(10), 10, 3, 200)
    emb, model = linear_embed(X, 3)
    resid = np.abs(model(emb.T) - X).max()
    record("10", resid <= 1e-10 and model.gap_ratio <= 1e-12,
           f"max residual {resid:.2e}, sigma4/sigma3 {model.gap_ratio:.2e}")


def _cli_pipeline(where):
    steps = [
        ["generate", "--curve", "spiral", "--n", "400", "--eta", "0.2", "--seed", "1", "-o", "spiral"],
        ["embed", "-i", "spiral.csv", "--k", "8", "--d", "1", "-o", "coords.csv"],
        ["evaluate", "-i", "spiral.csv", "--coords", "coords.csv"],
        ["plot", "-i", "spiral.csv", "--coords", "coords.csv", "-o", "spiral"],
        ["generate", "--three-gaussians", "--n-per", "100", "-o", "g"],
        ["embed", "-i", "g.csv", "--k", "10", "-o", "g_coords.csv", "--report", "g_report.txt"],
        ["plot", "-i", "g.csv", "--coords", "g_coords.csv", "-o", "g"],
    ]
    for argv in steps:
        assert main(argv) == 0, argv
    return {p.name: p.read_bytes() for p in sorted(where.iterdir())
            if p.suffix in (".csv", ".svg") and p.name != "solver_report.txt"}


def test_criterion_11_cli_determinism(tmp_path, monkeypatch, capsys):
    outs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        monkeypatch.chdir(d)
        outs.append(_cli_pipeline(d))
    capsys.readouterr()
    same = outs[0].keys() == outs[1].keys() and all(outs[0][n] == outs[1][n] for n in outs[0])
    svgs = sum(n.endswith(".svg") for n in outs[0])
    record("11", same and svgs >= 4, f"{len(outs[0])} files compared ({svgs} SVG), identical={same}")


def test_face_scale_shape(tmp_path, monkeypatch, capsys):
    """Synthetic stand-in at the face-image size: 698 points in 4096 dimensions."""
    X, _ = ds.gen_peak_surface(698, 1.0, seed=6)
    Y, _ = ds.embed_highdim(X, 4096, "orthogonal", seed=7)
    monkeypatch.chdir(tmp_path)
    ds.save_csv(tmp_path / "faces.csv", Y)
    code = main(["embed", "-i", "faces.csv", "--k", "12", "--d", "2"])
    capsys.readouterr()
    coords = np.loadtxt(tmp_path / "coords.csv", delimiter=",", ndmin=2)
    ok = code == 0 and coords.shape == (698, 2)
    record("face shape", ok, f"exit {code}, coords {coords.shape} from a 4096x698 CSV")
