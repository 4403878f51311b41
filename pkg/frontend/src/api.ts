// Typed client for the primfit HTTP API. The UI never recomputes anything
// the service returns; every displayed number comes through this module.

export type RGB = [number, number, number];

export interface ProjectSummary {
  point_count: number;
  view_count: number;
  workspace: string;
}

export interface ViewInfo {
  id: number;
  image: string;
  width: number;
  height: number;
  P: number[];
}

export interface SelectionResponse {
  selection_id: string;
  probabilities: number[];
  selected_indices: number[];
  threshold: number;
}

export interface QuadricFitResult {
  quadric_id: string;
  mesh_id: string;
  quadric: { A: number[]; b: number[]; c: number };
  vertices: number;
  faces: number;
}

export interface CurveFitResult {
  curve_id: string;
  model: { W: number[][]; sigma2: number; L: number; D: number; active: [number, number] };
  points_used: number;
}

export interface SurfaceResult {
  mesh_id: string;
  vertices: number;
  faces: number;
}

export interface MeshInfo {
  id: string;
  tag: string;
  kind: string;
  vertices: number;
  faces: number;
}

export type JobStatus =
  | { status: "pending"; action_index: number }
  | { status: "done"; result: Record<string, unknown>; action_index: number }
  | { status: "error"; error: string; action_index: number };

export interface StrokePayload {
  view: number;
  colour: RGB;
  width: number;
  points: [number, number][];
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number, readonly actionIndex?: number) {
    super(message);
  }
}

async function raise(res: Response): Promise<never> {
  let message = `${res.status} ${res.statusText}`;
  let actionIndex: number | undefined;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") message = body.error;
    if (body && typeof body.action_index === "number") actionIndex = body.action_index;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(message, res.status, actionIndex);
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.base + path, init);
    if (!res.ok) await raise(res);
    return res.json() as Promise<T>;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getProject(): Promise<ProjectSummary> {
    return this.json("/api/project");
  }

  getViews(): Promise<ViewInfo[]> {
    return this.json("/api/views");
  }

  viewImageUrl(viewId: number): string {
    return `${this.base}/api/views/${viewId}/image`;
  }

  async getPointCloud(): Promise<Float32Array> {
    const res = await fetch(this.base + "/api/pointcloud");
    if (!res.ok) await raise(res);
    return new Float32Array(await res.arrayBuffer());
  }

  postStroke(payload: StrokePayload): Promise<{ view: number; points: number; stroke_index: number }> {
    return this.post("/api/strokes", payload);
  }

  select(colour: RGB): Promise<SelectionResponse> {
    return this.post("/api/select", { colour });
  }

  fitQuadric(req: {
    type: "ellipsoid" | "cylinder";
    selection_id: string;
    prior_sigma?: number;
    margin?: number;
  }): Promise<{ job: string }> {
    return this.post("/api/fit/quadric", req);
  }

  fitCurve(req: { colour: RGB; L?: number; D?: number }): Promise<{ job: string }> {
    return this.post("/api/fit/curve", req);
  }

  surface(req: { mode: "interpolate" | "extrude"; a: string; b: string }): Promise<{ job: string }> {
    return this.post("/api/surface", req);
  }

  getJob(jobId: string): Promise<JobStatus> {
    return this.json(`/api/jobs/${jobId}`);
  }

  async pollJob(jobId: string, intervalMs = 100, timeoutMs = 60000): Promise<JobStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.getJob(jobId);
      if (status.status !== "pending") return status;
      if (Date.now() > deadline) throw new ApiError(`job ${jobId} timed out`, 0);
      await new Promise((r) => setTimeout(r, intervalMs));
    }
  }

  getMeshes(): Promise<MeshInfo[]> {
    return this.json("/api/meshes");
  }

  async fetchMeshPly(meshId: string): Promise<ArrayBuffer> {
    const res = await fetch(`${this.base}/api/meshes/${meshId}.ply`);
    if (!res.ok) await raise(res);
    return res.arrayBuffer();
  }

  deleteMesh(meshId: string): Promise<{ deleted: string }> {
    return this.json(`/api/meshes/${meshId}`, { method: "DELETE" });
  }

  async getSession(): Promise<string> {
    const res = await fetch(this.base + "/api/session");
    if (!res.ok) await raise(res);
    return res.text();
  }
}
