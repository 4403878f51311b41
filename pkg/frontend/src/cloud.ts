// 3D pane: orbit/pan/zoom over the point cloud on a 2D canvas, selected
// points in green, fitted meshes as wireframe overlays with visibility
// toggles. Works without WebGL by design; if even 2D canvas is missing, a
// fallback message is shown.

import { OrbitCamera, type Vec3 } from "./camera.js";
import { parseMeshPly, wireframeEdges, type ParsedMesh } from "./ply.js";
import type { SessionState } from "./state.js";

const MESH_COLOURS = ["#ffb347", "#7fdbff", "#b10dc9", "#2ecc40", "#ff4136", "#ffdc00"];

interface MeshOverlay {
  mesh: ParsedMesh;
  edges: Uint32Array;
  colour: string;
}

export class CloudPane {
  camera = new OrbitCamera();
  private points: Float32Array = new Float32Array(0);
  private overlays = new Map<string, MeshOverlay>();
  private dragging: "rotate" | "pan" | null = null;
  private lastX = 0;
  private lastY = 0;
  private ctx: CanvasRenderingContext2D | null;

  constructor(private canvas: HTMLCanvasElement, private state: SessionState) {
    this.ctx = canvas.getContext("2d");
    if (!this.ctx) {
      const note = document.createElement("p");
      note.className = "fallback";
      note.textContent = "Canvas rendering is unavailable in this browser; the 3D pane is disabled.";
      canvas.replaceWith(note);
      return;
    }
    canvas.addEventListener("pointerdown", (e) => {
      this.dragging = e.shiftKey || e.button === 1 ? "pan" : "rotate";
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      canvas.setPointerCapture(e.pointerId);
    });
    canvas.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      const dx = e.clientX - this.lastX;
      const dy = e.clientY - this.lastY;
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      if (this.dragging === "rotate") this.camera.rotate(dx, dy);
      else this.camera.pan(dx, dy, this.canvas.height);
      this.render();
    });
    canvas.addEventListener("pointerup", () => (this.dragging = null));
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.camera.zoom(e.deltaY > 0 ? 1.12 : 1 / 1.12);
      this.render();
    }, { passive: false });
  }

  setPoints(points: Float32Array): void {
    this.points = points;
    const n = points.length / 3;
    if (n === 0) return;
    const center: Vec3 = [0, 0, 0];
    for (let i = 0; i < n; i++) {
      center[0] += points[3 * i];
      center[1] += points[3 * i + 1];
      center[2] += points[3 * i + 2];
    }
    for (let k = 0; k < 3; k++) center[k] /= n;
    let radius = 0;
    for (let i = 0; i < n; i++) {
      const d = Math.hypot(points[3 * i] - center[0], points[3 * i + 1] - center[1],
                           points[3 * i + 2] - center[2]);
      if (d > radius) radius = d;
    }
    this.camera.frame(center, Math.max(radius, 1e-6));
    this.render();
  }

  addMeshPly(meshId: string, buf: ArrayBuffer): void {
    const mesh = parseMeshPly(buf);
    const colour = MESH_COLOURS[this.overlays.size % MESH_COLOURS.length];
    this.overlays.set(meshId, { mesh, edges: wireframeEdges(mesh), colour });
    this.render();
  }

  removeMesh(meshId: string): void {
    this.overlays.delete(meshId);
    this.render();
  }

  render(): void {
    const ctx = this.ctx;
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = "#101018";
    ctx.fillRect(0, 0, width, height);

    const projected = this.camera.projectAll(this.points, width, height);
    const n = this.points.length / 3;
    ctx.fillStyle = "#b8b8c0";
    for (let i = 0; i < n; i++) {
      if (this.state.highlighted.has(i)) continue;
      const x = projected[2 * i];
      const y = projected[2 * i + 1];
      if (Number.isNaN(x)) continue;
      ctx.fillRect(x, y, 2, 2);
    }
    // selected points in green, drawn on top
    ctx.fillStyle = "#25d366";
    for (const i of this.state.highlighted) {
      const x = projected[2 * i];
      const y = projected[2 * i + 1];
      if (Number.isNaN(x)) continue;
      ctx.fillRect(x - 1, y - 1, 3, 3);
    }

    for (const [meshId, overlay] of this.overlays) {
      const entry = this.state.meshes.get(meshId);
      if (entry && !entry.visible) continue;
      const proj = this.camera.projectAll(overlay.mesh.positions, width, height);
      ctx.strokeStyle = overlay.colour;
      ctx.globalAlpha = 0.7;
      ctx.lineWidth = 1;
      ctx.beginPath();
      const edges = overlay.edges;
      for (let e = 0; e < edges.length; e += 2) {
        const ax = proj[2 * edges[e]];
        const ay = proj[2 * edges[e] + 1];
        const bx = proj[2 * edges[e + 1]];
        const by = proj[2 * edges[e + 1] + 1];
        if (Number.isNaN(ax) || Number.isNaN(bx)) continue;
        ctx.moveTo(ax, ay);
        ctx.lineTo(bx, by);
      }
      ctx.stroke();
      ctx.globalAlpha = 1;
    }
  }
}
