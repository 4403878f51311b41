"""Project loading, session scripts, and deterministic replay.

A session script is JSON lines, one action per line, so interactive sessions
append incrementally and replays stream. Every action may only reference
artifacts created by earlier actions; replaying the same script on the same
project is fully deterministic down to the exported bytes.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import curve as curve_mod
from . import meshio
from . import quadric as quadric_mod
from .core import CameraView, PointCloud, SketchSet, Stroke, SurfaceMesh
from .errors import EmptyStroke, MissingImage, ParseError, ReplayError, ScriptError
from .meshing import camera_center, orient_normals
from .select import SelectionResult, select_points

logger = logging.getLogger(__name__)

EXPORT_FORMATS = ("ply", "obj")


@dataclass(frozen=True)
class Project:
    """The immutable scene under edit: cloud, calibrated views, workspace."""

    cloud: PointCloud
    views: Tuple[CameraView, ...]
    workspace: Path

    def __post_init__(self):
        ids = [v.id for v in self.views]
        if len(set(ids)) != len(ids):
            raise ValueError("camera view ids must be unique")
        object.__setattr__(self, "views", tuple(sorted(self.views, key=lambda v: v.id)))
        object.__setattr__(self, "workspace", Path(self.workspace))

    def view_by_id(self, vid: int) -> CameraView:
        for v in self.views:
            if v.id == vid:
                return v
        raise KeyError(f"no view with id {vid}")


def load_cameras(path, images_dir=None, check_images: bool = True) -> Tuple[CameraView, ...]:
    """Read the camera JSON array: {"id", "P" (12 floats row-major), "image",
    "width", "height"} per entry. Image paths resolve against ``images_dir``
    (default: the JSON file's directory)."""
    path = Path(path)
    try:
        entries = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(entries, list) or not entries:
        raise ParseError(f"{path}: expected a non-empty JSON array of cameras")
    base = Path(images_dir) if images_dir else path.parent
    views = []
    for i, e in enumerate(entries):
        try:
            P = np.asarray(e["P"], dtype=np.float64).reshape(3, 4)
            image = base / e["image"]
            view = CameraView(int(e["id"]), P, str(image), (int(e["width"]), int(e["height"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: camera entry {i}: {exc}") from exc
        if check_images and not image.exists():
            raise MissingImage(f"{path}: camera {e['id']} references missing image {image}")
        views.append(view)
    return tuple(views)


def load_project(cloud_path, cameras_path, images_dir=None, check_images: bool = True) -> Project:
    cloud = meshio.read_cloud_ply(cloud_path)
    views = load_cameras(cameras_path, images_dir=images_dir, check_images=check_images)
    project = Project(cloud, views, Path(cloud_path).resolve().parent)
    logger.info("loaded project: %d points, %d views", len(cloud), len(views))
    return project


# ---------------------------------------------------------------------------
# session scripts

ACTION_TYPES = ("add_stroke", "select", "fit_ellipsoid", "fit_cylinder", "fit_curve",
                "surface_interpolate", "surface_extrude", "trim", "export")


def parse_script(text: str, source: str = "<script>") -> List[dict]:
    actions = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{source}:{lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict) or "action" not in obj:
            raise ParseError(f"{source}:{lineno}: each line must be an object with 'action'")
        actions.append(obj)
    return actions


def load_script(path) -> List[dict]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_script(text, source=str(path))


def serialize_script(actions: Sequence[dict]) -> str:
    return "".join(json.dumps(a, sort_keys=True, separators=(",", ":")) + "\n"
                   for a in actions)


def _colour(obj, idx) -> Tuple[int, int, int]:
    c = obj.get("colour")
    if not (isinstance(c, (list, tuple)) and len(c) == 3):
        raise ScriptError(f"action {idx}: 'colour' must be [r, g, b]")
    return tuple(int(v) for v in c)


def validate_script(actions: Sequence[dict]) -> None:
    """Check the script is well-formed and topologically valid (every action
    references only previously created artifacts)."""
    sels, curves, meshes = set(), set(), set()
    counters = {"sel": 0, "curve": 0, "quad": 0, "mesh": 0}

    def fresh(prefix):
        name = f"{prefix}{counters[prefix]}"
        counters[prefix] += 1
        return name

    for idx, a in enumerate(actions):
        kind = a.get("action")
        if kind not in ACTION_TYPES:
            raise ScriptError(f"action {idx}: unknown action {kind!r}")
        if kind == "add_stroke":
            for key in ("view", "colour", "width", "points"):
                if key not in a:
                    raise ScriptError(f"action {idx}: add_stroke needs {key!r}")
            _colour(a, idx)
            if not a["points"]:
                raise ScriptError(f"action {idx}: stroke has no points")
        elif kind == "select":
            _colour(a, idx)
            sels.add(fresh("sel"))
        elif kind in ("fit_ellipsoid", "fit_cylinder"):
            ref = a.get("selection")
            if ref not in sels:
                raise ScriptError(f"action {idx}: unknown selection {ref!r}")
            fresh("quad")
            meshes.add(fresh("mesh"))
        elif kind == "fit_curve":
            _colour(a, idx)
            curves.add(fresh("curve"))
        elif kind in ("surface_interpolate", "surface_extrude"):
            for key in ("a", "b"):
                if a.get(key) not in curves:
                    raise ScriptError(f"action {idx}: unknown curve {a.get(key)!r}")
            meshes.add(fresh("mesh"))
        elif kind == "trim":
            if a.get("mesh") not in meshes:
                raise ScriptError(f"action {idx}: unknown mesh {a.get('mesh')!r}")
            meshes.add(fresh("mesh"))
        elif kind == "export":
            refs = a.get("meshes")
            if not refs or any(r not in meshes for r in refs):
                raise ScriptError(f"action {idx}: export references unknown meshes")
            rel = a.get("path")
            if not rel or Path(rel).is_absolute():
                raise ScriptError(f"action {idx}: export path must be relative")
            fmt = a.get("format") or Path(rel).suffix.lstrip(".").lower()
            if fmt not in EXPORT_FORMATS:
                raise ScriptError(f"action {idx}: unknown export format {fmt!r}")


# ---------------------------------------------------------------------------
# replay

@dataclass
class ArtifactStore:
    """Single-writer store of everything a session created, in creation order."""

    sketches: SketchSet = field(default_factory=SketchSet)
    selections: Dict[str, SelectionResult] = field(default_factory=dict)
    curves: Dict[str, curve_mod.CurveModel] = field(default_factory=dict)
    quadrics: Dict[str, quadric_mod.Quadric] = field(default_factory=dict)
    meshes: Dict[str, SurfaceMesh] = field(default_factory=dict)
    frames: Dict[str, quadric_mod.PrincipalFrame] = field(default_factory=dict)
    mesh_kinds: Dict[str, str] = field(default_factory=dict)
    exports: List[Path] = field(default_factory=list)
    counters: Dict[str, int] = field(default_factory=lambda: {"sel": 0, "curve": 0,
                                                              "quad": 0, "mesh": 0})

    def fresh(self, prefix: str) -> str:
        name = f"{prefix}{self.counters[prefix]}"
        self.counters[prefix] += 1
        return name


def _candidate_camera(project: Project) -> np.ndarray:
    """Normals of produced meshes are pointed toward the first view."""
    return camera_center(project.views[0].projection_matrix)


def _selected_subcloud(project: Project, sel: SelectionResult) -> np.ndarray:
    return project.cloud.points[sel.selected_indices]


def execute_action(project: Project, store: ArtifactStore, action: dict, out_dir=None) -> dict:
    """Execute one action against the store; returns a JSON-able result."""
    kind = action["action"]
    if kind == "add_stroke":
        view = project.view_by_id(int(action["view"]))
        stroke = Stroke.clamped(view, action["colour"], float(action["width"]),
                                np.asarray(action["points"], dtype=np.float64))
        store.sketches = store.sketches.with_stroke(stroke)
        return {"view": view.id, "points": int(len(stroke.raw_points))}

    if kind == "select":
        colour = tuple(int(c) for c in action["colour"])
        group = store.sketches.group(colour)
        if not group:
            raise EmptyStroke(f"no strokes with colour {list(colour)}")
        result = select_points(project, group)
        sel_id = store.fresh("sel")
        store.selections[sel_id] = result
        return {"selection_id": sel_id,
                "selected_indices": result.selected_indices.tolist(),
                "threshold": result.threshold_used,
                "count": int(len(result.selected_indices))}

    if kind in ("fit_ellipsoid", "fit_cylinder"):
        sel = store.selections[action["selection"]]
        sub = _selected_subcloud(project, sel)
        sigma = float(action.get("prior_sigma", quadric_mod.DEFAULT_PRIOR_SIGMA))
        resolution = tuple(action.get("resolution", quadric_mod.DEFAULT_RESOLUTION))
        psi = quadric_mod.fit_quadric_map(sub, sigma)
        q = psi.to_quadric()
        quad_id = store.fresh("quad")
        store.quadrics[quad_id] = q
        mesh_id = store.fresh("mesh")
        if kind == "fit_ellipsoid":
            frame = quadric_mod.principal_frame(q, sub)
            mesh = quadric_mod.ellipsoid_mesh(frame, resolution)
            store.frames[mesh_id] = frame
            kind_tag = "ellipsoid"
        else:
            mesh = quadric_mod.cylinder_mesh(q, sub, resolution)
            kind_tag = "cylinder"
        mesh = orient_normals(mesh, _candidate_camera(project)).with_tag(f"{kind_tag}:{quad_id}")
        store.meshes[mesh_id] = mesh
        store.mesh_kinds[mesh_id] = kind_tag
        return {"quadric_id": quad_id, "mesh_id": mesh_id, "quadric": q.to_json(),
                "vertices": mesh.n_vertices, "faces": mesh.n_faces}

    if kind == "fit_curve":
        colour = tuple(int(c) for c in action["colour"])
        group = store.sketches.group(colour)
        if not group:
            raise EmptyStroke(f"no strokes with colour {list(colour)}")
        sel = select_points(project, group)
        sub = _selected_subcloud(project, sel)
        model = curve_mod.fit_curve(sub,
                                    degree=int(action.get("L", curve_mod.DEFAULT_DEGREE)),
                                    samples=int(action.get("D", curve_mod.DEFAULT_SAMPLES)))
        curve_id = store.fresh("curve")
        store.curves[curve_id] = model
        return {"curve_id": curve_id, "model": model.to_json(),
                "points_used": int(len(sub))}

    if kind in ("surface_interpolate", "surface_extrude"):
        q = curve_mod.sample_curve(store.curves[action["a"]])
        p = curve_mod.sample_curve(store.curves[action["b"]])
        q, p = curve_mod.orient_pair(q, p)
        if kind == "surface_interpolate":
            mesh = curve_mod.interpolate_surface(q, p)
            kind_tag = "interpolate"
        else:
            mesh = curve_mod.extrude_surface(q, p)
            kind_tag = "extrude"
        mesh_id = store.fresh("mesh")
        mesh = orient_normals(mesh, _candidate_camera(project)).with_tag(
            f"{kind_tag}:{action['a']}:{action['b']}")
        store.meshes[mesh_id] = mesh
        store.mesh_kinds[mesh_id] = kind_tag
        return {"mesh_id": mesh_id, "vertices": mesh.n_vertices, "faces": mesh.n_faces}

    if kind == "trim":
        src = action["mesh"]
        frame = store.frames.get(src)
        if frame is None:
            raise ScriptError(f"mesh {src!r} has no principal frame to trim against")
        margin = float(action.get("margin", quadric_mod.DEFAULT_MARGIN))
        mesh = quadric_mod.trim_mesh(store.meshes[src], frame, margin)
        mesh_id = store.fresh("mesh")
        store.meshes[mesh_id] = mesh
        store.frames[mesh_id] = frame
        store.mesh_kinds[mesh_id] = store.mesh_kinds.get(src, "mesh")
        return {"mesh_id": mesh_id, "vertices": mesh.n_vertices, "faces": mesh.n_faces}

    if kind == "export":
        if out_dir is None:
            raise ScriptError("export action needs an output directory")
        rel = action["path"]
        fmt = action.get("format") or Path(rel).suffix.lstrip(".").lower()
        target = Path(out_dir) / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        meshes = [store.meshes[r] for r in action["meshes"]]
        meshio.export_mesh(meshes, fmt, target)
        store.exports.append(target)
        return {"path": str(target), "meshes": list(action["meshes"])}

    raise ScriptError(f"unknown action {kind!r}")


def replay(project: Project, actions: Sequence[dict], out_dir=None) -> ArtifactStore:
    """Execute a validated script in order; errors are annotated with the
    index of the failing action."""
    validate_script(actions)
    store = ArtifactStore()
    for idx, action in enumerate(actions):
        try:
            execute_action(project, store, action, out_dir=out_dir)
        except Exception as exc:
            raise ReplayError(idx, action.get("action", "?"), exc) from exc
    return store
