import numpy as np
import pytest

from primfit.session import load_project
from primfit.synthetic import build_sphere_scene, fibonacci_sphere


@pytest.fixture(scope="session")
def sphere_scene(tmp_path_factory):
    """The two-camera noisy sphere fixture used across the suite."""
    out = tmp_path_factory.mktemp("scene")
    return build_sphere_scene(out)


@pytest.fixture(scope="session")
def sphere_project(sphere_scene):
    return load_project(sphere_scene["cloud"], sphere_scene["cameras"])


@pytest.fixture(scope="session")
def cubic_curve_data():
    """200 noisy samples of the planar cubic (t, t^3, 0), t in [-1, 1],
    noise sigma = 0.05; plus 1000 exact held-out curve points."""
    rng = np.random.default_rng(11)
    t = rng.uniform(-1.0, 1.0, 200)
    pts = np.column_stack([t, t ** 3, np.zeros_like(t)])
    pts += rng.normal(0.0, 0.05, pts.shape)
    t_exact = np.linspace(-1.0, 1.0, 1000)
    exact = np.column_stack([t_exact, t_exact ** 3, np.zeros_like(t_exact)])
    return pts, exact


def unit_sphere_points(n: int) -> np.ndarray:
    return fibonacci_sphere(n)


def direct_product_oracle(project, group):
    """Brute-force selection in extended precision (longdouble, no log
    domain): per-view mixture densities multiplied directly, normalized over
    the cloud, thresholded at 1/N."""
    from primfit.select import resample_stroke

    pts = project.cloud.points
    probs = np.ones(len(pts), dtype=np.longdouble)
    by_view = {}
    for s in group:
        by_view.setdefault(s.view_id, []).append(s)
    for vid, strokes in sorted(by_view.items()):
        mus, sigmas = [], []
        for s in strokes:
            for mu, sig in resample_stroke(s):
                mus.append(mu)
                sigmas.append(sig)
        P = project.view_by_id(vid).projection_matrix.astype(np.longdouble)
        ph = pts.astype(np.longdouble) @ P[:, :3].T + P[:, 3]
        pix = ph[:, :2] / ph[:, 2:3]
        dens = np.zeros(len(pts), dtype=np.longdouble)
        for mu, sig in zip(np.asarray(mus, dtype=np.longdouble),
                           np.asarray(sigmas, dtype=np.longdouble)):
            d2 = np.sum((pix - mu) ** 2, axis=1)
            dens += np.exp(-d2 / (2 * sig * sig)) / (2 * np.longdouble(np.pi) * sig * sig)
        probs *= dens / len(mus)
    probs = probs / probs.sum()
    selected = np.flatnonzero(probs > np.longdouble(1) / len(pts))
    return probs, selected


def polyline_distance(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Distance from each query point to the nearest segment of a polyline."""
    p = np.asarray(points, dtype=np.float64)
    a = np.asarray(polyline[:-1], dtype=np.float64)
    b = np.asarray(polyline[1:], dtype=np.float64)
    ab = b - a
    denom = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300)
    diff = p[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("nik,ik->ni", diff, ab) / denom, 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(p[:, None, :] - closest, axis=2)
    return d.min(axis=1)
