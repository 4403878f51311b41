"""Latent-variable curve fitting and the surfaces built from curve pairs.

A polynomial curve is fitted to an unordered noisy sub-cloud as a constrained
Gaussian mixture (a GTM): D+1 isotropic components whose centers are the
columns of W @ Phi, fitted by EM from a PCA line initialization. Fitted
curves are end-trimmed by responsibility mass, then combined pairwise into
surfaces by linear interpolation or translational sweep.
"""

import warnings
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from .core import SurfaceMesh
from .errors import CurveTooShort, DegeneratePoints, SingularBasis
from .meshing import triangulate_grid

DEFAULT_DEGREE = 3
DEFAULT_SAMPLES = 50
DEFAULT_MAX_ITERS = 300
DEFAULT_TOL = 1e-7

SIGMA2_FLOOR_REL = 1e-12
RIDGE_REL = 1e-10


class DegenerateSurfaceWarning(UserWarning):
    """Raised-as-warning flag for flat strips built from identical curves."""


@dataclass(frozen=True)
class PolynomialBasis:
    """Phi[l][d] = d^l for l = 0..L, d = 0..D (row 0 all ones)."""

    degree: int
    sample_count: int
    phi: np.ndarray  # (L+1, D+1)

    @classmethod
    def create(cls, degree: int, sample_count: int) -> "PolynomialBasis":
        if degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        if sample_count < 2:
            raise ValueError("need at least 2 curve samples")
        d = np.arange(sample_count + 1, dtype=np.float64)
        phi = np.vstack([d ** l for l in range(degree + 1)])
        phi.flags.writeable = False
        return cls(degree, sample_count, phi)


@dataclass(frozen=True)
class CurveModel:
    """Weights, noise variance and active sample range of one fitted curve."""

    W: np.ndarray  # (3, L+1)
    sigma2: float
    basis: PolynomialBasis
    active_range: Tuple[int, int]
    omega: np.ndarray  # (D+1,) component weights, uniform by construction

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        lo, hi = self.active_range
        if not (0 <= lo <= hi <= self.basis.sample_count):
            raise ValueError("active range outside basis samples")
        W = np.asarray(self.W, dtype=np.float64)
        om = np.asarray(self.omega, dtype=np.float64)
        if np.any(om < 0) or abs(om.sum() - 1.0) > 1e-9:
            raise ValueError("component weights must be a distribution")
        W.flags.writeable = False
        om.flags.writeable = False
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "active_range", (int(lo), int(hi)))

    def centers(self) -> np.ndarray:
        """All D+1 mixture centers as a (3, D+1) matrix."""
        return self.W @ self.basis.phi

    def to_json(self) -> dict:
        return {"W": self.W.tolist(), "sigma2": self.sigma2,
                "L": self.basis.degree, "D": self.basis.sample_count,
                "active": list(self.active_range)}

    @classmethod
    def from_json(cls, obj: dict) -> "CurveModel":
        basis = PolynomialBasis.create(int(obj["L"]), int(obj["D"]))
        D = basis.sample_count
        return cls(np.asarray(obj["W"], dtype=np.float64), float(obj["sigma2"]),
                   basis, tuple(obj.get("active", (0, D))),
                   np.full(D + 1, 1.0 / (D + 1)))


@dataclass(frozen=True)
class Responsibilities:
    """Posterior component-given-point matrix; every column sums to 1."""

    R: np.ndarray  # (D+1, N)

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64)
        R.flags.writeable = False
        object.__setattr__(self, "R", R)


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("empty sub-cloud")
    return pts


def _data_scale(pts: np.ndarray) -> float:
    centered = pts - pts.mean(axis=0)
    return float(np.mean(np.sum(centered * centered, axis=1)))


def init_pca(points, basis: PolynomialBasis) -> CurveModel:
    """PCA line initialization.

    The line through the data mean along the largest principal component is
    reparameterized so t = 0..D spans the projected data extent; sigma^2
    starts at the covariance mass orthogonal to that line (the two smallest
    eigenvalues; the literal smallest alone is identically zero for planar
    data), floored at 1e-12 of the largest.
    """
    pts = _as_points(points)
    if len(pts) < 2:
        raise DegeneratePoints("need at least 2 points to initialize a curve")
    mean = pts.mean(axis=0)
    cov = np.cov(pts.T)
    w, vecs = np.linalg.eigh(cov)
    if w[-1] <= 0:
        raise DegeneratePoints("all points are identical")
    n = vecs[:, int(np.argmax(w))]
    nz = np.flatnonzero(n)
    if n[nz[0]] < 0:
        n = -n
    t = (pts - mean) @ n
    t_min, t_max = float(t.min()), float(t.max())
    D = basis.sample_count
    a = mean + t_min * n
    step = (t_max - t_min) / D * n
    W = np.zeros((3, basis.degree + 1))
    W[:, 0] = a
    W[:, 1] = step
    sigma2 = max(float(w[0] + w[1]), SIGMA2_FLOOR_REL * float(w[-1]))
    return CurveModel(W, sigma2, basis, (0, D), np.full(D + 1, 1.0 / (D + 1)))


def _component_loglik(model: CurveModel, pts: np.ndarray) -> np.ndarray:
    """log(omega_i N(z_j | c_i, sigma^2 I)) as a (D+1, N) matrix."""
    centers = model.centers().T  # (D+1, 3)
    d2 = np.square(centers[:, None, :] - pts[None, :, :]).sum(axis=2)
    return (-d2 / (2.0 * model.sigma2)
            - 1.5 * np.log(2.0 * np.pi * model.sigma2)
            + np.log(model.omega)[:, None])


def responsibilities(model: CurveModel, points) -> Responsibilities:
    """E-step: per-column softmax of the component log-likelihoods."""
    pts = _as_points(points)
    ll = _component_loglik(model, pts)
    ll -= ll.max(axis=0, keepdims=True)
    R = np.exp(ll)
    R /= R.sum(axis=0, keepdims=True)
    return Responsibilities(R)


def log_likelihood(model: CurveModel, points) -> float:
    """Observed-data log-likelihood of the mixture."""
    pts = _as_points(points)
    ll = _component_loglik(model, pts)
    m = ll.max(axis=0, keepdims=True)
    return float(np.sum(np.log(np.exp(ll - m).sum(axis=0)) + m[0]))


def em_step(model: CurveModel, points) -> Tuple[CurveModel, float]:
    """One EM update of (W, sigma^2); returns the updated model and its
    observed-data log-likelihood.

    The M-step normal matrix Phi G Phi^T is ridged relative to its trace:
    it goes singular whenever the responsibilities concentrate on a few
    components.
    """
    pts = _as_points(points)
    N = len(pts)
    phi = model.basis.phi
    R = responsibilities(model, pts).R
    G = R.sum(axis=1)
    M = (phi * G) @ phi.T
    rhs = phi @ R @ pts
    # Jacobi-scale before ridging: the raw power basis spans ~D^2L in
    # magnitude across rows, and a ridge set by the mean diagonal would
    # swamp the low-order rows and break EM monotonicity. In the scaled
    # system trace/(L+1) is exactly 1, so the relative ridge applies per row.
    d = np.sqrt(np.maximum(np.diag(M), RIDGE_REL * np.max(np.diag(M))))
    if not np.all(d > 0):
        raise SingularBasis("basis normal matrix has an empty row")
    Ms = M / np.outer(d, d)
    Ms[np.diag_indices_from(Ms)] += RIDGE_REL
    try:
        Wt = np.linalg.solve(Ms, rhs / d[:, None]) / d[:, None]
    except np.linalg.LinAlgError as exc:
        raise SingularBasis(f"ridged basis system is singular: {exc}") from exc
    if not np.all(np.isfinite(Wt)):
        raise SingularBasis("ridged basis system produced non-finite weights")
    W_new = Wt.T
    centers = (W_new @ phi).T
    d2 = np.square(centers[:, None, :] - pts[None, :, :]).sum(axis=2)
    sigma2 = float((R * d2).sum() / (3.0 * N))
    sigma2 = max(sigma2, SIGMA2_FLOOR_REL * _data_scale(pts), 1e-300)
    new_model = replace(model, W=W_new, sigma2=sigma2)
    return new_model, log_likelihood(new_model, pts)


def trim_ends(model: CurveModel, resp: Responsibilities) -> CurveModel:
    """Shrink the active range from both ends while the per-component mean
    responsibility stays under 1/(10 (D+1)); never trims past the midpoint."""
    m = resp.R.mean(axis=1)
    D = model.basis.sample_count
    threshold = 1.0 / (10.0 * (D + 1))
    lo, hi = model.active_range
    mid_lo, mid_hi = D // 2, D - D // 2
    while lo < mid_lo and m[lo] < threshold:
        lo += 1
    while hi > mid_hi and m[hi] < threshold:
        hi -= 1
    return replace(model, active_range=(lo, hi))


def fit_curve(points, degree: int = DEFAULT_DEGREE, samples: int = DEFAULT_SAMPLES,
              max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> CurveModel:
    """PCA-initialized EM to convergence, then end trimming.

    Convergence: |delta log-likelihood| < tol * |log-likelihood|, or
    max_iters. Deterministic given inputs; no random restarts.
    """
    pts = _as_points(points)
    model = init_pca(pts, PolynomialBasis.create(degree, samples))
    prev = None
    for _ in range(max_iters):
        model, ll = em_step(model, pts)
        if prev is not None and abs(ll - prev) < tol * abs(ll):
            break
        prev = ll
    return trim_ends(model, responsibilities(model, pts))


def sample_curve(model: CurveModel) -> np.ndarray:
    """Curve samples: columns j_lo..j_hi of W @ Phi, in parameter order."""
    lo, hi = model.active_range
    return model.centers()[:, lo:hi + 1].T.copy()


def orient_pair(q: np.ndarray, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Reverse p exactly when its far end is closer to q's start than its
    near end; ties leave p unchanged."""
    q = np.asarray(q, dtype=np.float64).reshape(-1, 3)
    p = np.asarray(p, dtype=np.float64).reshape(-1, 3)
    if len(q) == 0 or len(p) == 0:
        raise CurveTooShort("cannot orient an empty curve")
    if np.linalg.norm(q[0] - p[-1]) < np.linalg.norm(q[0] - p[0]):
        p = p[::-1].copy()
    return q, p


def resample_polyline(points: np.ndarray, count: int) -> np.ndarray:
    """Uniform arc-length resampling of a 3D polyline to ``count`` samples."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 2:
        raise CurveTooShort("polyline needs at least 2 samples")
    if count < 2:
        raise ValueError("resample count must be >= 2")
    seg = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    total = float(seg_len.sum())
    if total == 0.0:
        return np.repeat(pts[:1], count, axis=0)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    stations = np.linspace(0.0, total, count)
    out = np.empty((count, 3))
    for i, s in enumerate(stations):
        k = min(int(np.searchsorted(cum, s, side="right") - 1), len(seg_len) - 1)
        if seg_len[k] == 0.0:
            out[i] = pts[k]
        else:
            out[i] = pts[k] + (s - cum[k]) / seg_len[k] * seg[k]
    return out


def _common_length(q: np.ndarray, p: np.ndarray):
    """Resample the shorter curve to the longer one's sample count; curves of
    equal length pass through untouched."""
    if len(q) == len(p):
        return q, p
    n = max(len(q), len(p))
    if len(q) < n:
        q = resample_polyline(q, n)
    if len(p) < n:
        p = resample_polyline(p, n)
    return q, p


def interpolate_surface(q: np.ndarray, p: np.ndarray) -> SurfaceMesh:
    """Blend two curves into a surface: s_kj = (j/D) q_k + (1 - j/D) p_k.

    Row j = 0 reproduces p and row j = D reproduces q exactly. Identical
    curves yield a flat strip (all faces degenerate) and a warning.
    """
    q = np.asarray(q, dtype=np.float64).reshape(-1, 3)
    p = np.asarray(p, dtype=np.float64).reshape(-1, 3)
    if len(q) < 2 or len(p) < 2:
        raise CurveTooShort("interpolation needs curves with >= 2 samples")
    q, p = _common_length(q, p)
    n = len(q)
    D = n - 1
    w = (np.arange(n, dtype=np.float64) / D)[None, :, None]  # blend axis j
    grid = w * q[:, None, :] + (1.0 - w) * p[:, None, :]
    if np.max(np.abs(q - p)) == 0.0:
        warnings.warn("interpolating identical curves yields a degenerate flat strip",
                      DegenerateSurfaceWarning, stacklevel=2)
    return triangulate_grid(grid, "interpolate")


def extrude_surface(q: np.ndarray, p: np.ndarray) -> SurfaceMesh:
    """Sweep profile q along path p by translation: s_kj = q_k + (p_j - p_0).

    The cumulative form keeps the whole path displacement, which is what
    copying one curve along the other requires; row and column differences
    reproduce the path steps and the profile shape exactly.
    """
    q = np.asarray(q, dtype=np.float64).reshape(-1, 3)
    p = np.asarray(p, dtype=np.float64).reshape(-1, 3)
    if len(q) < 2 or len(p) < 2:
        raise CurveTooShort("extrusion needs curves with >= 2 samples")
    disp = p - p[0]
    grid = q[:, None, :] + disp[None, :, :]
    if np.max(np.abs(disp)) == 0.0:
        warnings.warn("extruding along a stationary path yields a degenerate strip",
                      DegenerateSurfaceWarning, stacklevel=2)
    return triangulate_grid(grid, "extrude")
