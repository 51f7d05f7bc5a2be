import math

import numpy as np
import pytest

from ltsa import dataset as ds
from ltsa.errors import DatasetError, EmptyFileError, NonNumericError, RaggedRowError

CURVE_NAMES = sorted(ds.CURVES)


def test_spiral_four_points():
    X, gt = ds.gen_curve("spiral", 4, 0.0, seed=99)
    np.testing.assert_allclose(gt.params[0], [0, 4 * math.pi / 3, 8 * math.pi / 3, 4 * math.pi])
    assert np.array_equal(X[:, 0], [0.0, 0.0])


def test_helix_on_cylinder():
    X, _ = ds.gen_curve("helix", 257)
    np.testing.assert_allclose(X[0] ** 2 + X[1] ** 2, 9.0, atol=1e-12)


def test_astroid_jacobian_vanishes_at_cusp():
    _, gt = ds.gen_curve("astroid", 101)
    assert np.allclose(gt.jacobian(np.array([math.pi / 2])), 0.0, atol=1e-15)


def test_peak_height_at_origin():
    assert ds.peak_height(0.0, 0.0) == pytest.approx(0.2 / math.e, abs=1e-15)


def test_peak_jacobian_identity_block(rng):
    _, gt = ds.gen_peak_surface(10, 0.0, seed=1)
    for t, s in rng.uniform(-1, 1, (5, 2)):
        J = gt.jacobian(np.array([t, s]))
        assert J.shape == (3, 2)
        np.testing.assert_array_equal(J[:2, 0], [1.0, 0.0])
        np.testing.assert_array_equal(J[:2, 1], [0.0, 1.0])


@pytest.mark.parametrize("name", CURVE_NAMES)
def test_noise_free_is_exact(name):
    X, gt = ds.gen_curve(name, 50)
    assert np.array_equal(X, gt.f(gt.params))
    assert not gt.noise.any()


def test_noise_free_peak_is_exact():
    X, gt = ds.gen_peak_surface(60, 0.0, seed=4)
    assert np.array_equal(X, gt.f(gt.params))


@pytest.mark.parametrize("name", CURVE_NAMES)
def test_noise_record_adds_up(name):
    X, gt = ds.gen_curve(name, 80, 0.1, seed=5)
    np.testing.assert_allclose(gt.f(gt.params) + gt.noise, X, rtol=0, atol=1e-12)
    assert gt.noise_level == 0.1


def test_rel_cubic_noise_is_relative_on_function_value():
    X, gt = ds.gen_curve("rel_cubic", 200, 0.05, seed=2)
    assert np.array_equal(X[0], gt.params[0])
    clean = gt.f(gt.params)
    z = ds.make_rng(2).standard_normal(clean.shape)[1]
    np.testing.assert_allclose(X[1], clean[1] * (1 + 0.05 * z), rtol=1e-15, atol=0)
    np.testing.assert_array_equal(gt.params[0, [0, -1]], [-1.1, 1.0])


def _fd_jacobian(gt, tau, h=1e-6):
    d = len(tau)
    cols = []
    for j in range(d):
        step = np.zeros(d)
        step[j] = h
        cols.append((gt.f((tau + step)[:, None])[:, 0] - gt.f((tau - step)[:, None])[:, 0]) / (2 * h))
    return np.column_stack(cols)


def _fd_hessian(gt, tau, h=1e-5):
    d = len(tau)
    H = np.zeros(gt.jacobian(tau).shape + (d,))
    for j in range(d):
        step = np.zeros(d)
        step[j] = h
        H[:, :, j] = (gt.jacobian(tau + step) - gt.jacobian(tau - step)) / (2 * h)
    return H


def _truths():
    out = [(name, ds.gen_curve(name, 10)[1]) for name in CURVE_NAMES]
    out.append(("peak", ds.gen_peak_surface(10, 0.0)[1]))
    return out


@pytest.mark.parametrize("name,gt", _truths(), ids=[n for n, _ in _truths()])
def test_jacobian_matches_finite_differences(name, gt, rng):
    if name == "peak":
        taus = rng.uniform(-1, 1, (100, 2))
    else:
        lo, hi = ds.CURVES[name].interval
        taus = rng.uniform(lo, hi, (100, 1))
    for tau in taus:
        J = gt.jacobian(tau)
        fd = _fd_jacobian(gt, tau)
        scale = max(np.linalg.norm(J), 1.0)
        assert np.linalg.norm(J - fd) <= 1e-6 * scale


@pytest.mark.parametrize("name,gt", _truths(), ids=[n for n, _ in _truths()])
def test_hessian_matches_finite_differences(name, gt, rng):
    assert gt.hessian_analytic == (name != "peak")
    if name == "peak":
        taus = rng.uniform(-1, 1, (100, 2))
    else:
        lo, hi = ds.CURVES[name].interval
        taus = rng.uniform(lo, hi, (100, 1))
    for tau in taus:
        H = gt.hessian(tau)
        fd = _fd_hessian(gt, tau)
        assert H.shape == (gt.f(tau[:, None]).shape[0], len(tau), len(tau))
        assert np.linalg.norm(H - fd) <= 1e-4 * max(np.linalg.norm(H), 1.0)
        np.testing.assert_allclose(H, np.swapaxes(H, 1, 2), atol=1e-12)


def test_determinism():
    a = ds.gen_curve("spiral", 100, 0.2, seed=3)[0]
    b = ds.gen_curve("spiral", 100, 0.2, seed=3)[0]
    c = ds.gen_curve("spiral", 100, 0.2, seed=4)[0]
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)
    p = ds.gen_peak_surface(100, 1.0, seed=3)[0]
    assert p.tobytes() == ds.gen_peak_surface(100, 1.0, seed=3)[0].tobytes()


def test_rng_is_counter_based():
    assert isinstance(ds.make_rng(0).bit_generator, np.random.Philox)


@pytest.mark.parametrize(
    "call",
    [
        lambda: ds.gen_curve("lemniscate", 10),
        lambda: ds.gen_curve("spiral", 1),
        lambda: ds.gen_curve("spiral", 10, -0.1),
        lambda: ds.gen_peak_surface(2),
        lambda: ds.gen_three_gaussians(0),
    ],
)
def test_generator_errors(call):
    with pytest.raises(DatasetError):
        call()


def test_peak_parameters_uniform_on_square():
    _, gt = ds.gen_peak_surface(4000, 1.0, seed=8)
    assert gt.params.min() >= -1 and gt.params.max() <= 1
    np.testing.assert_allclose(gt.params.mean(axis=1), 0.0, atol=0.05)
    assert np.std(gt.noise) == pytest.approx(0.01, rel=0.05)


def test_embed_orthogonal_preserves_distances():
    X, _ = ds.gen_peak_surface(200, 1.0, seed=2)
    Y, M = ds.embed_highdim(X, 100, "orthogonal", seed=7)
    assert M.shape == (100, 3)
    np.testing.assert_allclose(M.T @ M, np.eye(3), atol=1e-12)
    dX = np.linalg.norm(X[:, :, None] - X[:, None, :], axis=0)
    dY = np.linalg.norm(Y[:, :, None] - Y[:, None, :], axis=0)
    np.testing.assert_allclose(dX, dY, atol=1e-10)


def test_embed_square_keeps_singular_values(rng):
    X = rng.standard_normal((4, 30))
    Y, _ = ds.embed_highdim(X, 4, "orthogonal", seed=1)
    np.testing.assert_allclose(np.linalg.svd(X, compute_uv=False), np.linalg.svd(Y, compute_uv=False), atol=1e-10)


def test_embed_affine_singular_values():
    X, _ = ds.gen_peak_surface(50, 1.0, seed=2)
    Y, M = ds.embed_highdim(X, 100, "affine", seed=7)
    s = np.linalg.svd(M, compute_uv=False)
    assert np.all((s > 0) & (s < 1))
    assert np.isfinite(s[0] / s[-1])
    np.testing.assert_allclose(Y, M @ X)


def test_embed_errors():
    X = np.zeros((3, 5))
    with pytest.raises(DatasetError):
        ds.embed_highdim(X, 2)
    with pytest.raises(DatasetError):
        ds.embed_highdim(X, 5, mode="shear")


def test_lifted_truth_tracks_embedding():
    X, gt = ds.gen_curve("helix", 40, 0.0)
    Y, M = ds.embed_highdim(X, 10, "orthogonal", seed=3)
    lifted = ds.lift_truth(gt, M)
    np.testing.assert_allclose(lifted.f(gt.params), Y, atol=1e-12)
    tau = np.array([1.3])
    np.testing.assert_allclose(lifted.jacobian(tau), M @ gt.jacobian(tau), atol=1e-12)
    np.testing.assert_allclose(lifted.hessian(tau), np.einsum("ab,bij->aij", M, gt.hessian(tau)), atol=1e-12)


def test_three_gaussians_layout():
    ls = ds.gen_three_gaussians(100, seed=0)
    assert ls.data.shape == (2, 300)
    assert np.bincount(ls.labels).tolist() == [100, 100, 100]
    a = ds.gen_three_gaussians(1, seed=5)
    b = ds.gen_three_gaussians(1, seed=5)
    assert a.data.tobytes() == b.data.tobytes()


def test_three_gaussians_moments():
    ls = ds.gen_three_gaussians(100_000, seed=11)
    pts = ls.data[:, ls.labels == 0]
    assert np.linalg.norm(pts.mean(axis=1) - [1.0, 1.0]) < 0.02
    np.testing.assert_allclose(np.cov(pts), 0.2 * np.eye(2), atol=0.01)


def test_csv_round_trip(tmp_path, rng):
    X = rng.standard_normal((3, 5))
    path = tmp_path / "x.csv"
    ds.save_csv(path, X)
    assert np.array_equal(ds.load_csv(path), X)
    ds.save_csv(path, X, points_as_rows=False, header=["a", "b", "c", "d", "e"])
    assert np.array_equal(ds.load_csv(path, points_as_rows=False, header=True), X)
    assert b"\r" not in path.read_bytes()


def test_csv_accepts_crlf(tmp_path):
    path = tmp_path / "crlf.csv"
    path.write_bytes(b"1,2\r\n3,4\r\n")
    np.testing.assert_array_equal(ds.load_csv(path), [[1, 3], [2, 4]])


def test_csv_non_numeric_location(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,5,x\n")
    with pytest.raises(NonNumericError) as info:
        ds.load_csv(path)
    assert (info.value.row, info.value.col) == (2, 3)
    assert "row 2, col 3" in str(info.value)


def test_csv_ragged_and_empty(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(RaggedRowError) as info:
        ds.load_csv(ragged)
    assert info.value.row == 2
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(EmptyFileError):
        ds.load_csv(empty)
    header_only = tmp_path / "header.csv"
    header_only.write_text("a,b\n")
    with pytest.raises(EmptyFileError):
        ds.load_csv(header_only, header=True)


def test_csv_rows_as_points_orientation(tmp_path, rng):
    A = rng.standard_normal((7, 40))
    path = tmp_path / "wide.csv"
    ds.save_csv(path, A, points_as_rows=False)
    X = ds.load_csv(path, points_as_rows=True)
    assert X.shape == (40, 7)


def test_truth_files_round_trip(tmp_path):
    X, gt = ds.gen_peak_surface(30, 1.0, seed=6)
    stem = tmp_path / "peak"
    ds.save_truth(stem, gt)
    params, meta = ds.load_truth(stem)
    assert np.array_equal(params, gt.params)
    assert meta["hessian"] == "finite-difference"
    X2, gt2 = ds.regenerate(meta)
    assert np.array_equal(X, X2)
    assert np.array_equal(gt.params, gt2.params)


def test_regenerate_embedded():
    X, gt = ds.gen_curve("helix", 25, 0.05, seed=2)
    Y, M = ds.embed_highdim(X, 9, "affine", seed=4)
    meta = dict(gt.meta, embed="affine", target_dim=9, embed_seed=4)
    Y2, truth = ds.regenerate(meta)
    assert np.array_equal(Y, Y2)
    np.testing.assert_allclose(truth.f(truth.params) + truth.noise, Y2, atol=1e-12)
    with pytest.raises(DatasetError):
        ds.regenerate({"generator": "faces"})
