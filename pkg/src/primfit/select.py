"""Free-form point selection.

A colour group of strokes defines, per sketched view, a Gaussian mixture over
pixels. Each cloud point accumulates the log-density of its projection in
every sketched view (views are conditionally independent), the per-point
products are normalized over the cloud, and the points above the mean
probability 1/N form the selection.

All accumulation is done in the log domain: a product of mixtures over
hundreds of components underflows linear float64 as soon as three or more
views are sketched.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .core import CameraView, PointCloud, Stroke, project_points
from .errors import AllPointsAtInfinity, EmptyStroke

# cap on the temporary (points x components) matrix per evaluation block
_BLOCK_ENTRIES = 1 << 23


def logsumexp(a: np.ndarray, axis=None) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):  # all -inf collapses to log(0)
        out = np.log(np.sum(np.exp(a - m), axis=axis)) + np.squeeze(m, axis=axis)
    return out


@dataclass(frozen=True)
class SelectionResult:
    """Normalized per-point probabilities and the above-mean index set."""

    probabilities: np.ndarray  # (N,), sums to 1
    selected_indices: np.ndarray  # sorted int64
    threshold_used: float

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        p.flags.writeable = False
        idx = np.asarray(self.selected_indices, dtype=np.int64)
        idx.flags.writeable = False
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "selected_indices", idx)


def resample_stroke(stroke: Stroke) -> List[Tuple[np.ndarray, float]]:
    """Resample a stroke polyline into mixture components.

    Samples are placed at uniform arc length with spacing at most
    max(1, width_px / 2) pixels, always including both endpoints; each sample
    carries sigma = width_px. A single raw point (or a zero-length polyline)
    collapses to one component.
    """
    pts = stroke.raw_points
    sigma = float(stroke.width_px)
    seg = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    total = float(seg_len.sum())
    if len(pts) == 1 or total == 0.0:
        return [(pts[0].copy(), sigma)]
    spacing = max(1.0, sigma / 2.0)
    n_seg = max(1, int(np.ceil(total / spacing)))
    stations = np.linspace(0.0, total, n_seg + 1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    samples = []
    for s in stations:
        i = int(np.searchsorted(cum, s, side="right") - 1)
        i = min(i, len(seg_len) - 1)
        if seg_len[i] == 0.0:
            p = pts[i].copy()
        else:
            t = (s - cum[i]) / seg_len[i]
            p = pts[i] + t * seg[i]
        samples.append((p, sigma))
    return samples


def _view_components(strokes: Sequence[Stroke]):
    """Pool resampled components of all strokes in one view."""
    mus, sigmas = [], []
    for s in strokes:
        for mu, sig in resample_stroke(s):
            mus.append(mu)
            sigmas.append(sig)
    return np.asarray(mus, dtype=np.float64), np.asarray(sigmas, dtype=np.float64)


def _mixture_logpdf(mus: np.ndarray, sigmas: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """log of (1/K) sum_j N(y | mu_j, sigma_j^2 I) for each row of ys."""
    ys = np.atleast_2d(ys)
    d2 = np.square(ys[:, None, :] - mus[None, :, :]).sum(axis=2)  # (n, K)
    var = np.square(sigmas)[None, :]
    comp = -d2 / (2.0 * var) - np.log(2.0 * np.pi * var)
    return logsumexp(comp, axis=1) - np.log(len(mus))


def stroke_mixture_logpdf(stroke_group_in_view: Sequence[Stroke], y) -> float:
    """Log-density of pixel ``y`` under the view's stroke mixture.

    Raises EmptyStroke when the view contributes no components.
    """
    if not stroke_group_in_view:
        raise EmptyStroke("no strokes supplied for this view")
    mus, sigmas = _view_components(stroke_group_in_view)
    if len(mus) == 0:
        raise EmptyStroke("strokes yielded no mixture components")
    y = np.asarray(y, dtype=np.float64).reshape(1, 2)
    return float(_mixture_logpdf(mus, sigmas, y)[0])


def accumulate_log_likelihood(cloud: PointCloud,
                              views: Sequence[CameraView],
                              group: Sequence[Stroke]) -> np.ndarray:
    """Unnormalized per-point log-likelihood: sum over sketched views of the
    view mixture log-density at each point's projection. Points that project
    to infinity in a view get -inf (zero likelihood)."""
    if not group:
        raise EmptyStroke("selection query has no strokes")
    by_view = {}
    for s in group:
        by_view.setdefault(s.view_id, []).append(s)
    view_map = {v.id: v for v in views}
    total = np.zeros(len(cloud))
    for vid in sorted(by_view):
        if vid not in view_map:
            raise EmptyStroke(f"stroke references unknown view {vid}")
        mus, sigmas = _view_components(by_view[vid])
        pix, valid = project_points(view_map[vid], cloud.points)
        logp = np.full(len(cloud), -np.inf)
        block = max(1, _BLOCK_ENTRIES // max(1, len(mus)))
        idx = np.flatnonzero(valid)
        for start in range(0, len(idx), block):
            sel = idx[start:start + block]
            logp[sel] = _mixture_logpdf(mus, sigmas, pix[sel])
        total = total + logp
    return total


def select_points(project, group: Sequence[Stroke]) -> SelectionResult:
    """Run a selection query for one colour group of strokes.

    ``project`` is anything with ``cloud`` and ``views`` attributes. Returns
    normalized probabilities over the whole cloud and indices with
    probability strictly above the mean 1/N.
    """
    cloud, views = project.cloud, project.views
    loglik = accumulate_log_likelihood(cloud, views, group)
    log_norm = logsumexp(loglik)
    if not np.isfinite(log_norm):
        raise AllPointsAtInfinity("no cloud point projects finitely into any sketched view")
    probs = np.exp(loglik - log_norm)
    # exp-of-logsumexp leaves ~1e-16 slack; renormalize so the sum-to-1
    # invariant holds exactly at float64 resolution
    probs = probs / probs.sum()
    threshold = 1.0 / len(cloud)
    selected = np.flatnonzero(probs > threshold).astype(np.int64)
    return SelectionResult(probs, selected, threshold)
