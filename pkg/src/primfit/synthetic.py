"""Synthetic sphere scene: the deterministic end-to-end fixture.

A noisy Fibonacci-sphere cloud observed by two perspective cameras 90 degrees
apart, with precomputed stroke polylines tracing the sphere's silhouette in
each view plus two arc strokes for the curve pipeline, and a session script
running every action type. Used by the acceptance suite and as a demo scene
for the service and UI.
"""

import json
import math
from pathlib import Path
from typing import Tuple

import numpy as np

from . import meshio
from .session import serialize_script

IMAGE_SIZE = (640, 480)
FOCAL = 500.0

COLOUR_SILHOUETTE = [255, 0, 0]
COLOUR_MERIDIAN = [0, 255, 0]
COLOUR_EQUATOR = [0, 0, 255]


def fibonacci_sphere(n: int) -> np.ndarray:
    """n near-uniform samples of the unit sphere."""
    i = np.arange(n, dtype=np.float64)
    golden = (1.0 + np.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    theta = 2.0 * np.pi * i / golden
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def look_at_projection(eye, target, up, focal: float = FOCAL,
                       size: Tuple[int, int] = IMAGE_SIZE) -> np.ndarray:
    """3x4 projection of a pinhole camera looking from eye toward target."""
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    fwd = fwd / np.linalg.norm(fwd)
    right = np.cross(fwd, np.asarray(up, dtype=np.float64))
    right = right / np.linalg.norm(right)
    down = np.cross(fwd, right)
    R = np.vstack([right, down, fwd])
    K = np.array([[focal, 0.0, size[0] / 2.0],
                  [0.0, focal, size[1] / 2.0],
                  [0.0, 0.0, 1.0]])
    return K @ np.hstack([R, (-R @ eye)[:, None]])


def _project_polyline(P: np.ndarray, pts: np.ndarray) -> np.ndarray:
    ph = pts @ P[:, :3].T + P[:, 3]
    return ph[:, :2] / ph[:, 2:3]


def _silhouette_circle(eye: np.ndarray, n: int = 72) -> np.ndarray:
    """The visible contour of the unit sphere from a camera at ``eye``."""
    d = float(np.linalg.norm(eye))
    axis = eye / d
    center = axis / d  # circle plane at distance 1/d along the view axis
    radius = math.sqrt(1.0 - 1.0 / (d * d))
    ref = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    t = np.linspace(0.0, 2.0 * np.pi, n)
    return center + radius * (np.outer(np.cos(t), u) + np.outer(np.sin(t), v))


def _render_view_image(path: Path, P: np.ndarray, cloud: np.ndarray) -> None:
    from PIL import Image

    w, h = IMAGE_SIZE
    img = np.full((h, w, 3), 24, dtype=np.uint8)
    pix = _project_polyline(P, cloud)
    xs = np.clip(np.round(pix[:, 0]).astype(int), 0, w - 1)
    ys = np.clip(np.round(pix[:, 1]).astype(int), 0, h - 1)
    img[ys, xs] = (210, 210, 210)
    Image.fromarray(img).save(path)


def build_sphere_scene(out_dir, n_points: int = 2000, noise: float = 0.01,
                       seed: int = 7) -> dict:
    """Write cloud.ply, cameras.json, view images and script.jsonl; returns
    the paths. Everything is a pure function of the arguments."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    cloud = fibonacci_sphere(n_points) + rng.normal(0.0, noise, size=(n_points, 3))
    shade = np.clip(128 + 96 * cloud[:, 2], 0, 255).astype(np.uint8)
    colors = np.column_stack([shade, shade, shade])

    cloud_path = out / "cloud.ply"
    meshio.write_cloud_ply(cloud, cloud_path, binary=True, colors=colors)

    eyes = [np.array([0.0, 0.0, 5.0]), np.array([5.0, 0.0, 0.0])]
    ups = [np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])]
    projections = [look_at_projection(eye, (0, 0, 0), up) for eye, up in zip(eyes, ups)]
    cameras = []
    image_paths = []
    for i, P in enumerate(projections):
        image = out / f"view{i}.png"
        _render_view_image(image, P, cloud)
        image_paths.append(image)
        cameras.append({"id": i, "P": P.reshape(-1).tolist(), "image": image.name,
                        "width": IMAGE_SIZE[0], "height": IMAGE_SIZE[1]})
    cameras_path = out / "cameras.json"
    cameras_path.write_text(json.dumps(cameras, indent=2) + "\n")

    u = np.linspace(np.deg2rad(30), np.deg2rad(150), 40)
    meridian = np.column_stack([np.sin(u), np.zeros_like(u), np.cos(u)])
    v = np.linspace(np.deg2rad(-60), np.deg2rad(60), 40)
    equator = np.column_stack([np.cos(v), np.sin(v), np.zeros_like(v)])

    actions = []
    for i, (P, eye) in enumerate(zip(projections, eyes)):
        sil = _project_polyline(P, _silhouette_circle(eye))
        actions.append({"action": "add_stroke", "view": i, "colour": COLOUR_SILHOUETTE,
                        "width": 8.0, "points": np.round(sil, 3).tolist()})
    for i, P in enumerate(projections):
        for colour, arc in ((COLOUR_MERIDIAN, meridian), (COLOUR_EQUATOR, equator)):
            pix = _project_polyline(P, arc)
            actions.append({"action": "add_stroke", "view": i, "colour": colour,
                            "width": 10.0, "points": np.round(pix, 3).tolist()})
    actions += [
        {"action": "select", "colour": COLOUR_SILHOUETTE},
        {"action": "fit_ellipsoid", "selection": "sel0", "prior_sigma": 1e-3},
        {"action": "trim", "mesh": "mesh0", "margin": 0.02},
        {"action": "fit_curve", "colour": COLOUR_MERIDIAN, "L": 3, "D": 30},
        {"action": "fit_curve", "colour": COLOUR_EQUATOR, "L": 3, "D": 30},
        {"action": "surface_interpolate", "a": "curve0", "b": "curve1"},
        {"action": "surface_extrude", "a": "curve0", "b": "curve1"},
        {"action": "export", "meshes": ["mesh1", "mesh2", "mesh3"], "path": "scene_meshes.ply"},
        {"action": "export", "meshes": ["mesh1"], "path": "ellipsoid.obj", "format": "obj"},
    ]
    script_path = out / "script.jsonl"
    script_path.write_text(serialize_script(actions))

    return {"cloud": cloud_path, "cameras": cameras_path, "script": script_path,
            "images": image_paths}
