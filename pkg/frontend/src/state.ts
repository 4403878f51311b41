// UI session state. Numerical truth lives on the server: highlighted point
// indices, curves, and meshes are stored exactly as the service reported
// them, never recomputed client-side.

import type { MeshInfo, RGB, SelectionResponse, StrokePayload } from "./api.js";

// 8 preset colours so cross-view grouping stays unambiguous
export const PALETTE: RGB[] = [
  [255, 0, 0],
  [0, 255, 0],
  [0, 0, 255],
  [255, 200, 0],
  [0, 220, 220],
  [255, 0, 255],
  [255, 128, 0],
  [128, 64, 255],
];

export function colourKey(c: RGB): string {
  return `${c[0]},${c[1]},${c[2]}`;
}

export function sameColour(a: RGB, b: RGB): boolean {
  return a[0] === b[0] && a[1] === b[1] && a[2] === b[2];
}

export interface StrokeRecord {
  view: number;
  colour: RGB;
  width: number;
  points: [number, number][];
}

// Strokes of one colour form one selection query regardless of view.
export function groupStrokes(strokes: StrokeRecord[]): Map<string, StrokeRecord[]> {
  const groups = new Map<string, StrokeRecord[]>();
  for (const s of strokes) {
    const key = colourKey(s.colour);
    const bucket = groups.get(key);
    if (bucket) bucket.push(s);
    else groups.set(key, [s]);
  }
  return groups;
}

export function strokePayload(view: number, colour: RGB, width: number,
                              points: [number, number][]): StrokePayload {
  return { view, colour: [...colour] as RGB, width, points: points.map((p) => [p[0], p[1]]) };
}

// Argument order contract: the first-picked curve is the profile `a`, the
// second is the path `b`.
export function surfacePayload(mode: "interpolate" | "extrude", first: string, second: string) {
  return { mode, a: first, b: second };
}

export interface MeshEntry {
  info: MeshInfo;
  visible: boolean;
}

export class SessionState {
  strokes: StrokeRecord[] = [];
  selections = new Map<string, SelectionResponse>();
  activeSelectionId: string | null = null;
  highlighted = new Set<number>();
  curves: string[] = [];
  meshes = new Map<string, MeshEntry>();
  lastCurvePair: [string, string] | null = null;
  private curvePick: string[] = [];

  addStroke(s: StrokeRecord): void {
    this.strokes.push(s);
  }

  strokesForView(view: number): StrokeRecord[] {
    return this.strokes.filter((s) => s.view === view);
  }

  coloursInUse(): RGB[] {
    const seen = new Map<string, RGB>();
    for (const s of this.strokes) seen.set(colourKey(s.colour), s.colour);
    return [...seen.values()];
  }

  // Display contract: the highlight set is exactly the service's
  // selected_indices for the most recent selection.
  applySelection(resp: SelectionResponse): void {
    this.selections.set(resp.selection_id, resp);
    this.activeSelectionId = resp.selection_id;
    this.highlighted = new Set(resp.selected_indices);
  }

  addCurve(curveId: string): void {
    this.curves.push(curveId);
  }

  addMesh(info: MeshInfo): void {
    this.meshes.set(info.id, { info, visible: true });
  }

  toggleMesh(meshId: string): boolean {
    const entry = this.meshes.get(meshId);
    if (!entry) return false;
    entry.visible = !entry.visible;
    return entry.visible;
  }

  removeMesh(meshId: string): void {
    this.meshes.delete(meshId);
  }

  canFitQuadric(): boolean {
    return this.activeSelectionId !== null;
  }

  canCombineCurves(): boolean {
    return this.curves.length >= 2;
  }

  // Click-order curve picking for surface builds; returns [first, second]
  // once two distinct curves are picked, and remembers the pair.
  pickCurve(curveId: string): [string, string] | null {
    if (!this.curves.includes(curveId)) return null;
    if (this.curvePick.length === 1 && this.curvePick[0] === curveId) return null;
    this.curvePick.push(curveId);
    if (this.curvePick.length === 2) {
      const pair = [this.curvePick[0], this.curvePick[1]] as [string, string];
      this.curvePick = [];
      this.lastCurvePair = pair;
      return pair;
    }
    return null;
  }

  pendingCurvePick(): string | null {
    return this.curvePick[0] ?? null;
  }

  clearCurvePick(): void {
    this.curvePick = [];
  }
}
