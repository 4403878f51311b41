// Wires the panes together: image pane with colour-coded sketching on the
// left, point cloud with selections and fitted primitives on the right.

import { ApiClient, type JobStatus, type ViewInfo } from "./api.js";
import { CloudPane } from "./cloud.js";
import { FitControls } from "./controls.js";
import { SketchPane } from "./sketch.js";
import { colourKey, PALETTE, SessionState } from "./state.js";

const api = new ApiClient("");
const state = new SessionState();

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function toast(message: string, isError = true): void {
  const box = el<HTMLDivElement>("toasts");
  const item = document.createElement("div");
  item.className = isError ? "toast error" : "toast";
  item.textContent = message;
  box.appendChild(item);
  setTimeout(() => item.remove(), 6000);
}

function jobError(status: JobStatus): string {
  if (status.status === "error") {
    return status.action_index != null
      ? `action ${status.action_index}: ${status.error}`
      : status.error;
  }
  return "job failed";
}

async function bootstrap(): Promise<void> {
  const views = await api.getViews();
  const sketch = new SketchPane(el<HTMLCanvasElement>("sketch-canvas"), api, state, PALETTE[0]);
  const cloud = new CloudPane(el<HTMLCanvasElement>("cloud-canvas"), state);
  sketch.onError = (m) => toast(m);

  // view switcher ("frame number")
  const viewSelect = el<HTMLSelectElement>("view-select");
  for (const v of views) {
    const opt = document.createElement("option");
    opt.value = String(v.id);
    opt.textContent = `view ${v.id}`;
    viewSelect.appendChild(opt);
  }
  const switchView = (id: number) => {
    const view = views.find((v: ViewInfo) => v.id === id);
    if (view) sketch.setView(view);
  };
  viewSelect.addEventListener("change", () => switchView(Number(viewSelect.value)));
  if (views.length) switchView(views[0].id);

  // colour palette
  const paletteBox = el<HTMLDivElement>("palette");
  const swatches: HTMLButtonElement[] = [];
  for (const colour of PALETTE) {
    const b = document.createElement("button");
    b.className = "swatch";
    b.style.background = `rgb(${colourKey(colour)})`;
    b.title = colourKey(colour);
    b.addEventListener("click", () => {
      sketch.colour = colour;
      for (const s of swatches) s.classList.remove("active");
      b.classList.add("active");
    });
    paletteBox.appendChild(b);
    swatches.push(b);
  }
  swatches[0].classList.add("active");

  const widthSlider = el<HTMLInputElement>("brush-width");
  const widthLabel = el<HTMLSpanElement>("brush-width-label");
  const applyWidth = () => {
    sketch.width = Number(widthSlider.value);
    widthLabel.textContent = `${widthSlider.value}px`;
  };
  widthSlider.addEventListener("input", applyWidth);
  applyWidth();

  const points = await api.getPointCloud();
  cloud.setPoints(points);

  const meshList = el<HTMLUListElement>("mesh-list");
  const curveList = el<HTMLUListElement>("curve-list");

  const refreshCurveList = (controls: FitControls) => {
    curveList.replaceChildren();
    for (const curveId of state.curves) {
      const li = document.createElement("li");
      const pick = document.createElement("button");
      pick.textContent = state.pendingCurvePick() === curveId ? `${curveId} *` : curveId;
      pick.title = "pick as profile (first click) / path (second click)";
      pick.addEventListener("click", () => {
        const pair = state.pickCurve(curveId);
        refreshCurveList(controls);
        if (pair) toast(`surface pair ready: ${pair[0]} then ${pair[1]}`, false);
      });
      li.appendChild(pick);
      curveList.appendChild(li);
    }
  };

  const addMeshEntry = (meshId: string, label: string) => {
    const li = document.createElement("li");
    const toggle = document.createElement("input");
    toggle.type = "checkbox";
    toggle.checked = true;
    toggle.addEventListener("change", () => {
      state.toggleMesh(meshId);
      cloud.render();
    });
    const name = document.createElement("span");
    name.textContent = label;
    const del = document.createElement("button");
    del.textContent = "x";
    del.title = "delete primitive";
    del.addEventListener("click", async () => {
      try {
        await api.deleteMesh(meshId);
        state.removeMesh(meshId);
        cloud.removeMesh(meshId);
        li.remove();
      } catch (err) {
        toast(err instanceof Error ? err.message : String(err));
      }
    });
    li.append(toggle, name, del);
    meshList.appendChild(li);
  };

  const showMesh = async (meshId: string) => {
    const infos = await api.getMeshes();
    const info = infos.find((m) => m.id === meshId);
    if (!info) return;
    state.addMesh(info);
    cloud.addMeshPly(meshId, await api.fetchMeshPly(meshId));
    addMeshEntry(meshId, `${meshId} (${info.kind}, ${info.faces} faces)`);
  };

  const controls = new FitControls(document, state, {
    ellipsoid: async (priorSigma, margin) => {
      if (!state.activeSelectionId) return;
      try {
        const { job } = await api.fitQuadric({
          type: "ellipsoid",
          selection_id: state.activeSelectionId,
          prior_sigma: priorSigma,
          margin,
        });
        const done = await api.pollJob(job);
        if (done.status !== "done") throw new Error(jobError(done));
        await showMesh(done.result.mesh_id as string);
      } catch (err) {
        toast(err instanceof Error ? err.message : String(err));
      }
    },
    cylinder: async (priorSigma) => {
      if (!state.activeSelectionId) return;
      try {
        const { job } = await api.fitQuadric({
          type: "cylinder",
          selection_id: state.activeSelectionId,
          prior_sigma: priorSigma,
        });
        const done = await api.pollJob(job);
        if (done.status !== "done") throw new Error(jobError(done));
        await showMesh(done.result.mesh_id as string);
      } catch (err) {
        toast(err instanceof Error ? err.message : String(err));
      }
    },
    curve: async (L, D) => {
      try {
        const { job } = await api.fitCurve({ colour: sketch.colour, L, D });
        const done = await api.pollJob(job);
        if (done.status !== "done") throw new Error(jobError(done));
        state.addCurve(done.result.curve_id as string);
        refreshCurveList(controls);
        controls.update();
        toast(`fitted ${done.result.curve_id}`, false);
      } catch (err) {
        toast(err instanceof Error ? err.message : String(err));
      }
    },
    surface: async (mode) => {
      const pair = state.lastCurvePair;
      if (!pair) {
        toast("pick two curves first (click them in the curve list)");
        return;
      }
      try {
        const { job } = await api.surface({ mode, a: pair[0], b: pair[1] });
        const done = await api.pollJob(job);
        if (done.status !== "done") throw new Error(jobError(done));
        await showMesh(done.result.mesh_id as string);
      } catch (err) {
        toast(err instanceof Error ? err.message : String(err));
      }
    },
  });

  el<HTMLButtonElement>("select-button").addEventListener("click", async () => {
    try {
      const resp = await api.select(sketch.colour);
      state.applySelection(resp);
      cloud.render();
      controls.update();
      toast(`${resp.selected_indices.length} points selected`, false);
    } catch (err) {
      toast(err instanceof Error ? err.message : String(err));
    }
  });

  el<HTMLAnchorElement>("download-script").addEventListener("click", async (e) => {
    e.preventDefault();
    const text = await api.getSession();
    const blob = new Blob([text], { type: "application/x-ndjson" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "session.jsonl";
    a.click();
    URL.revokeObjectURL(a.href);
  });

  sketch.onStrokePosted = () => controls.update();

  const summary = await api.getProject();
  el<HTMLSpanElement>("status").textContent =
    `${summary.point_count} points, ${summary.view_count} views`;
}

bootstrap().catch((err) => {
  toast(err instanceof Error ? err.message : String(err));
});
