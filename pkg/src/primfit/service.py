"""HTTP shim around the engine for the web UI.

Every endpoint serializes the result of the corresponding library call and
adds no numerical behavior of its own. Mutating requests append an action to
the session script before executing, so any live session replays offline to
identical artifacts. Mutations funnel through a single-worker queue; the
script order defines the truth. Fits and surface builds return a polled job
id, everything else answers synchronously.
"""

import socket
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse, Response

from . import meshio
from .errors import IOFailure, ParseError, PortInUse, PrimfitError, ReplayError
from .session import (ArtifactStore, Project, execute_action, load_script, replay,
                      serialize_script, validate_script)

VIEWER_POINT_LIMIT = 500_000

_MESH_CREATORS = ("fit_ellipsoid", "fit_cylinder", "surface_interpolate",
                  "surface_extrude", "trim")


def _predicted_mesh_id(actions) -> str:
    """Mesh id the next mesh-creating action will receive (ids are assigned
    in script order, independent of execution timing)."""
    return f"mesh{sum(1 for a in actions if a.get('action') in _MESH_CREATORS)}"


class ServiceState:
    """Mutable session state behind the endpoints: one project, one script."""

    def __init__(self, project: Project, out_dir: Path, script_path: Optional[Path] = None):
        self.project = project
        self.out_dir = Path(out_dir)
        self.script_path = Path(script_path) if script_path else None
        self.actions: list = []
        self.store = ArtifactStore()
        self.jobs: dict = {}
        self._job_counter = 0
        self._lock = threading.Lock()
        self._executor = ThreadPoolExecutor(max_workers=1)
        if self.script_path and self.script_path.exists():
            self.actions = load_script(self.script_path)
            self.store = replay(project, self.actions, out_dir=self.out_dir)

    def _append(self, action: dict) -> int:
        idx = len(self.actions)
        self.actions.append(action)
        if self.script_path:
            with open(self.script_path, "a") as f:
                f.write(serialize_script([action]))
        return idx

    def run_sync(self, action: dict) -> dict:
        """Record the action, execute it on the writer queue, wait for it."""
        with self._lock:
            validate_script(self.actions + [action])
            idx = self._append(action)
            fut = self._executor.submit(execute_action, self.project, self.store,
                                        action, self.out_dir)
        try:
            return fut.result()
        except Exception as exc:
            raise ReplayError(idx, action.get("action", "?"), exc) from exc

    def run_job(self, action: dict) -> str:
        """Record the action and execute it asynchronously behind a job id."""
        with self._lock:
            validate_script(self.actions + [action])
            idx = self._append(action)
            self._job_counter += 1
            job_id = f"job{self._job_counter - 1}"
            self.jobs[job_id] = {"status": "pending", "action_index": idx}
            fut = self._executor.submit(execute_action, self.project, self.store,
                                        action, self.out_dir)

        def done(f, job_id=job_id, idx=idx):
            try:
                result = f.result()
                self.jobs[job_id] = {"status": "done", "result": result, "action_index": idx}
            except Exception as exc:
                self.jobs[job_id] = {"status": "error", "error": str(exc),
                                     "action_index": idx,
                                     "exit_code": getattr(exc, "exit_code", 3)}

        fut.add_done_callback(done)
        return job_id


def _error_status(exc: Exception) -> int:
    if isinstance(exc, ReplayError):
        exc = exc.cause
    if isinstance(exc, (ParseError, ValueError)):
        return 400
    if isinstance(exc, KeyError):
        return 404
    if isinstance(exc, IOFailure):
        return 500
    return 422


def create_app(project: Project, out_dir, script_path=None, ui_dir=None) -> FastAPI:
    state = ServiceState(project, Path(out_dir), script_path)
    app = FastAPI(title="primfit")
    app.state.service = state
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(PrimfitError)
    async def primfit_error(request: Request, exc: PrimfitError):
        body = {"error": str(exc)}
        if isinstance(exc, ReplayError):
            body["action_index"] = exc.action_index
        return JSONResponse(body, status_code=_error_status(exc))

    @app.exception_handler(KeyError)
    async def key_error(request: Request, exc: KeyError):
        return JSONResponse({"error": f"unknown artifact {exc}"}, status_code=404)

    @app.get("/api/project")
    def get_project():
        return {"point_count": len(project.cloud),
                "view_count": len(project.views),
                "workspace": str(project.workspace)}

    @app.get("/api/views")
    def get_views():
        return [{"id": v.id, "image": Path(v.image_ref).name,
                 "width": v.image_size[0], "height": v.image_size[1],
                 "P": v.projection_matrix.reshape(-1).tolist()}
                for v in project.views]

    @app.get("/api/views/{view_id}/image")
    def get_view_image(view_id: int):
        view = project.view_by_id(view_id)
        path = Path(view.image_ref)
        media = "image/png" if path.suffix.lower() == ".png" else "image/jpeg"
        return FileResponse(path, media_type=media)

    @app.get("/api/pointcloud")
    def get_pointcloud():
        pts = project.cloud.points
        stride = max(1, -(-len(pts) // VIEWER_POINT_LIMIT))
        sub = pts[::stride].astype("<f4")
        return Response(sub.tobytes(), media_type="application/octet-stream",
                        headers={"X-Total-Points": str(len(pts)),
                                 "X-Stride": str(stride)})

    @app.post("/api/strokes")
    def post_stroke(body: dict):
        action = {"action": "add_stroke", "view": int(body["view"]),
                  "colour": [int(c) for c in body["colour"]],
                  "width": float(body["width"]),
                  "points": [[float(x), float(y)] for x, y in body["points"]]}
        result = state.run_sync(action)
        result["stroke_index"] = len(state.store.sketches.strokes) - 1
        return result

    @app.post("/api/select")
    def post_select(body: dict):
        action = {"action": "select", "colour": [int(c) for c in body["colour"]]}
        result = state.run_sync(action)
        sel = state.store.selections[result["selection_id"]]
        return {"selection_id": result["selection_id"],
                "probabilities": sel.probabilities.tolist(),
                "selected_indices": sel.selected_indices.tolist(),
                "threshold": sel.threshold_used}

    @app.post("/api/fit/quadric")
    def post_fit_quadric(body: dict):
        fit_type = body.get("type", "ellipsoid")
        if fit_type not in ("ellipsoid", "cylinder"):
            raise ParseError(f"unknown quadric fit type {fit_type!r}")
        action = {"action": f"fit_{fit_type}", "selection": body["selection_id"]}
        if body.get("prior_sigma") is not None:
            action["prior_sigma"] = float(body["prior_sigma"])
        fit_mesh_id = _predicted_mesh_id(state.actions)
        job = state.run_job(action)
        if fit_type == "ellipsoid" and body.get("margin") is not None:
            # the trim is recorded as its own script action against the fit's
            # (predictable) mesh id; the writer queue runs it after the fit
            job = state.run_job({"action": "trim", "mesh": fit_mesh_id,
                                 "margin": float(body["margin"])})
        return {"job": job}

    @app.post("/api/fit/curve")
    def post_fit_curve(body: dict):
        action = {"action": "fit_curve", "colour": [int(c) for c in body["colour"]]}
        if body.get("L") is not None:
            action["L"] = int(body["L"])
        if body.get("D") is not None:
            action["D"] = int(body["D"])
        return {"job": state.run_job(action)}

    @app.post("/api/surface")
    def post_surface(body: dict):
        mode = body.get("mode")
        if mode not in ("interpolate", "extrude"):
            raise ParseError(f"unknown surface mode {mode!r}")
        action = {"action": f"surface_{mode}", "a": body["a"], "b": body["b"]}
        return {"job": state.run_job(action)}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        return state.jobs[job_id]

    @app.get("/api/meshes")
    def get_meshes():
        return [{"id": mid, "tag": m.source_tag,
                 "kind": state.store.mesh_kinds.get(mid, "mesh"),
                 "vertices": m.n_vertices, "faces": m.n_faces}
                for mid, m in state.store.meshes.items()]

    @app.get("/api/meshes/{mesh_id}.ply")
    def get_mesh_ply(mesh_id: str):
        mesh = state.store.meshes[mesh_id]
        return Response(meshio.ply_mesh_bytes([mesh], binary=True),
                        media_type="application/octet-stream")

    @app.delete("/api/meshes/{mesh_id}")
    def delete_mesh(mesh_id: str):
        # view-level removal only: the script stays append-only, so a replay
        # or restart recreates the mesh
        with state._lock:
            state.store.meshes.pop(mesh_id)
            state.store.frames.pop(mesh_id, None)
            state.store.mesh_kinds.pop(mesh_id, None)
        return {"deleted": mesh_id}

    @app.get("/api/session")
    def get_session():
        return PlainTextResponse(serialize_script(state.actions),
                                 media_type="application/x-ndjson")

    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def check_port_free(port: int, host: str = "127.0.0.1") -> None:
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))
    except OSError as exc:
        raise PortInUse(f"port {port} is already in use: {exc}") from exc
    finally:
        sock.close()


def serve(project: Project, port: int, out_dir, script_path=None, ui_dir=None,
          host: str = "127.0.0.1") -> None:
    import uvicorn

    check_port_free(port, host)
    app = create_app(project, out_dir, script_path=script_path, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
