"""Acceptance suite: one test per criterion, each printing a PASS line with
the measured quantities after its assertions hold."""

import time

import numpy as np
import pytest

from conftest import direct_product_oracle, polyline_distance
from primfit.core import SketchSet, Stroke
from primfit.curve import (PolynomialBasis, em_step, extrude_surface, init_pca,
                           interpolate_surface, responsibilities)
from primfit.meshing import median_edge_length, remove_long_edges, triangulate_grid
from primfit.quadric import (Quadric, ellipsoid_mesh, fit_quadric_map,
                             principal_frame, trim_mesh)
from primfit.select import accumulate_log_likelihood, select_points
from primfit.session import load_script, replay
from primfit.synthetic import COLOUR_SILHOUETTE, fibonacci_sphere


def _ok(criterion, detail):
    print(f"PASS criterion {criterion}: {detail}")


@pytest.fixture(scope="module")
def silhouette_group(sphere_project, sphere_scene):
    strokes = []
    for a in load_script(sphere_scene["script"]):
        if a["action"] == "add_stroke" and a["colour"] == COLOUR_SILHOUETTE:
            view = sphere_project.view_by_id(a["view"])
            strokes.append(Stroke.clamped(view, a["colour"], a["width"], a["points"]))
    return SketchSet(tuple(strokes)).group(tuple(COLOUR_SILHOUETTE))


@pytest.fixture(scope="module")
def cubic_em_trace(cubic_curve_data):
    """50 EM iterations on the cubic fixture, recording per-step artifacts.

    Shared by criteria 5 and 6."""
    pts, exact = cubic_curve_data
    model = init_pca(pts, PolynomialBasis.create(3, 50))
    t0 = time.perf_counter()
    lls, col_sum_errs = [], []
    for _ in range(50):
        R = responsibilities(model, pts).R
        col_sum_errs.append(float(np.max(np.abs(R.sum(axis=0) - 1.0))))
        model, ll = em_step(model, pts)
        lls.append(ll)
    elapsed = time.perf_counter() - t0
    return model, np.array(lls), np.array(col_sum_errs), elapsed, pts, exact


def test_criterion_01_selection_oracle_equivalence(sphere_project, silhouette_group):
    """Synthetic 2-camera sphere scene: select_points vs the brute-force
    extended-precision computation; rel 1e-6, identical set, < 5 s."""
    t0 = time.perf_counter()
    res = select_points(sphere_project, silhouette_group)
    elapsed = time.perf_counter() - t0
    oracle_p, oracle_sel = direct_product_oracle(sphere_project, silhouette_group)
    assert np.array_equal(res.selected_indices, oracle_sel)
    oracle64 = oracle_p.astype(np.float64)
    rel = np.abs(res.probabilities - oracle64) / np.maximum(oracle64, 1e-300)
    assert rel.max() < 1e-6
    assert elapsed < 5.0
    _ok(1, f"{len(res.selected_indices)} points selected, max rel err "
           f"{rel.max():.2e}, {elapsed * 1e3:.0f} ms")


def test_criterion_02_selection_normalization_invariance(sphere_project, silhouette_group):
    """Scaling every per-view likelihood by 1e3 moves no probability by more
    than 1e-12 and no selected index."""
    res = select_points(sphere_project, silhouette_group)
    loglik = accumulate_log_likelihood(sphere_project.cloud, sphere_project.views,
                                       silhouette_group)
    scaled = loglik + np.log(1e3) * len({s.view_id for s in silhouette_group})
    m = scaled.max()
    p_scaled = np.exp(scaled - m)
    p_scaled /= p_scaled.sum()
    max_move = np.max(np.abs(p_scaled - res.probabilities))
    sel_scaled = np.flatnonzero(p_scaled > 1.0 / len(p_scaled))
    assert max_move <= 1e-12
    assert np.array_equal(sel_scaled, res.selected_indices)
    _ok(2, f"max probability change {max_move:.2e}, selected set unchanged")


def test_criterion_03_quadric_recovery():
    """Noise-free unit sphere (sigma 1e-3): center < 1e-6, radius spread
    < 1e-4; (1:2:3) ellipsoid ratios within 1e-3 at sigma 10; < 1 s each."""
    pts = fibonacci_sphere(1000)
    t0 = time.perf_counter()
    q = fit_quadric_map(pts, 1e-3).to_quadric()
    t_sphere = time.perf_counter() - t0
    frame = principal_frame(q, pts)
    center_err = float(np.linalg.norm(frame.center))
    radii = np.sort(frame.radii())
    spread = float(radii[-1] - radii[0])
    assert center_err < 1e-6
    assert spread < 1e-4
    assert t_sphere < 1.0

    pts2 = fibonacci_sphere(1000) * (1.0, 2.0, 3.0)
    t0 = time.perf_counter()
    q2 = fit_quadric_map(pts2, 10.0).to_quadric()
    t_ell = time.perf_counter() - t0
    radii2 = np.sort(principal_frame(q2, pts2).radii())
    ratios = radii2 / radii2[0]
    assert np.allclose(ratios, [1, 2, 3], atol=1e-3)
    assert t_ell < 1.0
    _ok(3, f"center {center_err:.1e}, spread {spread:.1e}, ratios "
           f"[{ratios[0]:.4f}, {ratios[1]:.4f}, {ratios[2]:.4f}], "
           f"{t_sphere * 1e3:.0f}+{t_ell * 1e3:.0f} ms")


def test_criterion_04_sphere_prior_monotonicity():
    """Off-diagonal Frobenius norm of A non-increasing over prior_sigma in
    {1, 1e-2, 1e-4} on fixed anisotropic data."""
    rng = np.random.default_rng(40)
    base = fibonacci_sphere(600) * (1.0, 2.5, 0.5)
    R = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    pts = base @ R.T + (0.5, -0.25, 1.0)
    norms = []
    for sigma in (1.0, 1e-2, 1e-4):
        A = fit_quadric_map(pts, sigma).to_quadric().A
        off = A - np.diag(np.diag(A))
        norms.append(float(np.linalg.norm(off)))
    assert norms[0] >= norms[1] >= norms[2]
    _ok(4, "off-diagonal norms " + " >= ".join(f"{n:.3e}" for n in norms))


def test_criterion_05_gtm_likelihood_and_accuracy(cubic_em_trace):
    """50 EM iterations on the cubic fixture: log-likelihood non-decreasing
    within -1e-8 per step; final RMS vs the analytic curve < 0.05; < 10 s."""
    model, lls, _, elapsed, pts, exact = cubic_em_trace
    drops = np.diff(lls)
    assert drops.min() >= -1e-8
    polyline = model.centers().T
    rms = float(np.sqrt(np.mean(polyline_distance(exact, polyline) ** 2)))
    assert rms < 0.05
    assert elapsed < 10.0
    _ok(5, f"worst step {drops.min():.2e}, final RMS {rms:.4f}, "
           f"{elapsed * 1e3:.0f} ms")


def test_criterion_06_responsibility_stochasticity(cubic_em_trace):
    """Every responsibility column sums to 1 within 1e-9 at every iteration
    of criterion 5."""
    _, _, col_sum_errs, _, _, _ = cubic_em_trace
    assert col_sum_errs.max() < 1e-9
    _ok(6, f"worst column-sum deviation {col_sum_errs.max():.2e} over "
           f"{len(col_sum_errs)} iterations")


def test_criterion_07_surface_formulas():
    """Interpolation boundary rows equal the inputs exactly; extrusion
    difference identities hold to 1e-12 on 100 random pairs."""
    rng = np.random.default_rng(41)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 10))
        q = rng.normal(size=(n, 3))
        p = rng.normal(size=(n, 3))
        mesh = interpolate_surface(q, p)
        grid = mesh.vertices.reshape(n, n, 3)
        assert np.array_equal(grid[:, 0, :], p)
        assert np.array_equal(grid[:, -1, :], q)

        kq, kp = int(rng.integers(2, 10)), int(rng.integers(2, 10))
        q2 = rng.normal(size=(kq, 3))
        p2 = rng.normal(size=(kp, 3))
        grid2 = extrude_surface(q2, p2).vertices.reshape(kq, kp, 3)
        path_err = np.max(np.abs((grid2[:, 1:] - grid2[:, :-1]) - np.diff(p2, axis=0)[None]))
        prof_err = np.max(np.abs((grid2[1:] - grid2[:-1]) - np.diff(q2, axis=0)[:, None]))
        worst = max(worst, path_err, prof_err)
    assert worst < 1e-12
    _ok(7, f"boundary rows exact, worst difference identity {worst:.2e}")


def test_criterion_08_trimming():
    """Hemisphere trim matches the per-vertex oracle; trimming twice equals
    trimming once on 100 fuzzed mesh/frame pairs."""
    sphere = fibonacci_sphere(2000)
    data = sphere[sphere[:, 2] >= 0]
    q = Quadric(np.eye(3), np.zeros(3), -1.0)
    frame = principal_frame(q, data)
    mesh = ellipsoid_mesh(frame, (24, 16))
    out = trim_mesh(mesh, frame, 0.0)
    lo, hi = frame.extents[:, 0], frame.extents[:, 1]
    keep = np.all((mesh.vertices @ frame.axes - frame.center @ frame.axes >= lo)
                  & (mesh.vertices @ frame.axes - frame.center @ frame.axes <= hi), axis=1)
    assert out.n_vertices == int(keep.sum())
    assert np.allclose(out.vertices, mesh.vertices[keep])

    rng = np.random.default_rng(42)
    trimmed = 0
    for _ in range(100):
        radii = rng.uniform(0.5, 2.0, 3)
        A = np.diag(1.0 / radii ** 2)
        qf = Quadric(A, np.zeros(3), -1.0)
        pts = fibonacci_sphere(300) * radii
        mask = rng.normal(size=3)
        pts = pts[pts @ mask > rng.uniform(-0.5, 0.5)]
        if len(pts) < 10:
            continue
        fr = principal_frame(qf, pts)
        m = ellipsoid_mesh(fr, (12, 8))
        try:
            once = trim_mesh(m, fr, 0.02)
        except Exception:
            continue
        twice = trim_mesh(once, fr, 0.02)
        assert np.array_equal(once.vertices, twice.vertices)
        assert np.array_equal(once.faces, twice.faces)
        trimmed += 1
    assert trimmed >= 80
    _ok(8, f"hemisphere matches oracle ({out.n_vertices} vertices kept); "
           f"idempotent on {trimmed} fuzzed meshes")


def test_criterion_09_long_edge_filter():
    """remove_long_edges equals the per-face brute-force filter on 100
    fuzzed meshes and is idempotent at a fixed threshold."""
    rng = np.random.default_rng(43)
    checked = 0
    for _ in range(100):
        K, J = rng.integers(2, 7, size=2)
        mesh = triangulate_grid(rng.normal(size=(int(K), int(J), 3)))
        t = 1.8 * median_edge_length(mesh)
        keep = []
        for f in mesh.faces:
            edges = [np.linalg.norm(mesh.vertices[f[a]] - mesh.vertices[f[b]])
                     for a, b in ((0, 1), (1, 2), (2, 0))]
            keep.append(max(edges) <= t)
        if not any(keep):
            continue
        out = remove_long_edges(mesh, t)
        assert out.n_faces == sum(keep)
        assert np.allclose(out.vertices[out.faces],
                           mesh.vertices[mesh.faces[np.array(keep)]])
        again = remove_long_edges(out, t)
        assert np.array_equal(out.faces, again.faces)
        assert np.array_equal(out.vertices, again.vertices)
        checked += 1
    assert checked >= 80
    _ok(9, f"brute-force match and idempotence on {checked} fuzzed meshes")


def test_criterion_10_replay_determinism(sphere_project, sphere_scene, tmp_path):
    """The full synthetic-scene script, run twice, yields byte-identical
    PLY exports in < 30 s."""
    actions = load_script(sphere_scene["script"])
    t0 = time.perf_counter()
    s1 = replay(sphere_project, actions, out_dir=tmp_path / "r1")
    s2 = replay(sphere_project, actions, out_dir=tmp_path / "r2")
    elapsed = time.perf_counter() - t0
    assert s1.exports and len(s1.exports) == len(s2.exports)
    compared = 0
    for p1, p2 in zip(s1.exports, s2.exports):
        assert p1.name == p2.name
        assert p1.read_bytes() == p2.read_bytes()
        compared += 1
    assert elapsed < 30.0
    _ok(10, f"{compared} exports byte-identical across runs, "
            f"{elapsed:.1f} s for both replays")
