"""Shared domain types and the camera projection used by every other module.

All types are immutable after construction (arrays are marked read-only), so
instances can be shared freely across threads.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import PointAtInfinity

HOMOGENEOUS_EPS = 1e-12
DEGENERATE_AREA = 1e-12
NORMAL_UNIT_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PointCloud:
    """Ordered 3D points in world units, with optional per-point RGB."""

    points: np.ndarray  # (N, 3) float64
    colors: Optional[np.ndarray] = None  # (N, 3) uint8

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError("point cloud must be a non-empty (N, 3) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", _readonly(pts))
        if self.colors is not None:
            col = np.asarray(self.colors, dtype=np.uint8)
            if col.shape != pts.shape:
                raise ValueError("colors must match point array shape")
            object.__setattr__(self, "colors", _readonly(col))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class CameraView:
    """A calibrated view: 3x4 projection matrix plus its image reference."""

    id: int
    projection_matrix: np.ndarray  # (3, 4) float64, rank 3
    image_ref: str
    image_size: Tuple[int, int]  # (width_px, height_px)

    def __post_init__(self):
        P = np.asarray(self.projection_matrix, dtype=np.float64)
        if P.shape != (3, 4):
            raise ValueError("projection matrix must be 3x4")
        if not np.all(np.isfinite(P)):
            raise ValueError("projection matrix contains non-finite values")
        if np.linalg.matrix_rank(P) != 3:
            raise ValueError(f"projection matrix of view {self.id} is rank-deficient")
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise ValueError("image size components must be positive")
        object.__setattr__(self, "projection_matrix", _readonly(P))
        object.__setattr__(self, "image_size", (int(w), int(h)))


def clamp_to_image(points_px: np.ndarray, image_size: Tuple[int, int]) -> np.ndarray:
    """Clamp pixel positions into [0, w-1] x [0, h-1] (ingestion rule)."""
    pts = np.asarray(points_px, dtype=np.float64)
    w, h = image_size
    out = np.empty_like(pts)
    out[:, 0] = np.clip(pts[:, 0], 0.0, w - 1.0)
    out[:, 1] = np.clip(pts[:, 1], 0.0, h - 1.0)
    return out


@dataclass(frozen=True)
class Stroke:
    """One free-form mark on a view. ``colour`` groups strokes across views;
    ``width_px`` doubles as the Gaussian sigma of every resampled component."""

    view_id: int
    colour: Tuple[int, int, int]
    width_px: float
    raw_points: np.ndarray  # (M, 2) pixel positions, clamped to image bounds

    def __post_init__(self):
        if self.width_px <= 0:
            raise ValueError("stroke width must be positive")
        pts = np.asarray(self.raw_points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError("stroke needs at least one 2D point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("stroke contains non-finite points")
        object.__setattr__(self, "colour", tuple(int(c) for c in self.colour))
        object.__setattr__(self, "raw_points", _readonly(pts))

    @classmethod
    def clamped(cls, view: CameraView, colour, width_px, points_px) -> "Stroke":
        """Build a stroke whose points are clamped to the view's image bounds."""
        return cls(view.id, tuple(colour), float(width_px),
                   clamp_to_image(np.atleast_2d(points_px), view.image_size))


@dataclass(frozen=True)
class SketchSet:
    """All strokes of a session; colour groups define selection queries."""

    strokes: Tuple[Stroke, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "strokes", tuple(self.strokes))

    def colours(self):
        seen = []
        for s in self.strokes:
            if s.colour not in seen:
                seen.append(s.colour)
        return seen

    def group(self, colour) -> Tuple[Stroke, ...]:
        colour = tuple(int(c) for c in colour)
        return tuple(s for s in self.strokes if s.colour == colour)

    def with_stroke(self, stroke: Stroke) -> "SketchSet":
        return SketchSet(self.strokes + (stroke,))


@dataclass(frozen=True)
class SurfaceMesh:
    """Triangle mesh with per-face unit normals and a provenance tag."""

    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int32
    normals: np.ndarray  # (F, 3) float64, unit length
    source_tag: str = ""

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int32).reshape(-1, 3)
        n = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh vertices contain non-finite values")
        if f.size:
            if f.min() < 0 or f.max() >= len(v):
                raise ValueError("face index out of range")
            same = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            if np.any(same):
                raise ValueError("face with repeated vertex index")
            e1 = v[f[:, 1]] - v[f[:, 0]]
            e2 = v[f[:, 2]] - v[f[:, 0]]
            areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
            if np.any(areas <= DEGENERATE_AREA):
                raise ValueError("degenerate face below minimum area")
        if n.shape[0] != f.shape[0]:
            raise ValueError("one normal per face required")
        if n.size and np.any(np.abs(np.linalg.norm(n, axis=1) - 1.0) > NORMAL_UNIT_TOL):
            raise ValueError("face normals must be unit length")
        object.__setattr__(self, "vertices", _readonly(v))
        object.__setattr__(self, "faces", _readonly(f))
        object.__setattr__(self, "normals", _readonly(n))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    def with_tag(self, tag: str) -> "SurfaceMesh":
        return SurfaceMesh(self.vertices, self.faces, self.normals, tag)


def project(camera: CameraView, z: Sequence[float]) -> np.ndarray:
    """Project a world point to pixels by homogeneous division.

    Raises PointAtInfinity when the homogeneous component is below 1e-12 in
    magnitude. Points behind the camera (negative w) still project; selection
    assigns them negligible likelihood instead of special-casing them.
    """
    z = np.asarray(z, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(z)):
        raise ValueError("cannot project non-finite point")
    ph = camera.projection_matrix @ np.append(z, 1.0)
    w = ph[2]
    if abs(w) <= HOMOGENEOUS_EPS:
        raise PointAtInfinity(f"point {z.tolist()} projects to infinity in view {camera.id}")
    return ph[:2] / w


def project_points(camera: CameraView, points: np.ndarray):
    """Vectorized projection of an (N, 3) array.

    Returns (pixels, valid): pixels is (N, 2) and valid marks points whose
    homogeneous component exceeds the 1e-12 cutoff; invalid rows are zeroed.
    """
    pts = np.asarray(points, dtype=np.float64)
    P = camera.projection_matrix
    ph = pts @ P[:, :3].T + P[:, 3]
    w = ph[:, 2]
    valid = np.abs(w) > HOMOGENEOUS_EPS
    pix = np.zeros((len(pts), 2))
    np.divide(ph[:, :2], w[:, None], out=pix, where=valid[:, None])
    return pix, valid
