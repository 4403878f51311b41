// Sketch pane: shows one calibrated view's image and captures free-form
// strokes with the current brush. Strokes are sent raw (pixel polylines);
// all resampling happens server-side so live and replayed behavior match.

import type { ApiClient, RGB, ViewInfo } from "./api.js";
import { colourKey, SessionState, strokePayload, type StrokeRecord } from "./state.js";

export class SketchPane {
  colour: RGB;
  width = 8;
  private view: ViewInfo | null = null;
  private image = new Image();
  private imageReady = false;
  private drawing: [number, number][] | null = null;
  onStrokePosted: (() => void) | null = null;
  onError: ((message: string) => void) | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private api: ApiClient,
    private state: SessionState,
    initialColour: RGB,
  ) {
    this.colour = initialColour;
    canvas.addEventListener("pointerdown", (e) => this.begin(e));
    canvas.addEventListener("pointermove", (e) => this.move(e));
    canvas.addEventListener("pointerup", () => void this.finish());
    canvas.addEventListener("pointerleave", () => void this.finish());
  }

  setView(view: ViewInfo): void {
    this.view = view;
    this.imageReady = false;
    this.image = new Image();
    this.image.onload = () => {
      this.imageReady = true;
      this.redraw();
    };
    this.image.src = this.api.viewImageUrl(view.id);
    this.canvas.width = view.width;
    this.canvas.height = view.height;
    this.redraw();
  }

  currentView(): ViewInfo | null {
    return this.view;
  }

  // canvas CSS size may differ from the image resolution
  private toImagePixels(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const x = ((e.clientX - rect.left) / rect.width) * this.canvas.width;
    const y = ((e.clientY - rect.top) / rect.height) * this.canvas.height;
    return clampToBounds(x, y, this.canvas.width, this.canvas.height);
  }

  private begin(e: PointerEvent): void {
    if (!this.view) return;
    this.canvas.setPointerCapture(e.pointerId);
    this.drawing = [this.toImagePixels(e)];
  }

  private move(e: PointerEvent): void {
    if (!this.drawing) return;
    this.drawing.push(this.toImagePixels(e));
    this.redraw();
  }

  private async finish(): Promise<void> {
    if (!this.drawing || !this.view) {
      this.drawing = null;
      return;
    }
    const points = this.drawing;
    this.drawing = null;
    if (points.length === 0) return;
    const record: StrokeRecord = {
      view: this.view.id,
      colour: [...this.colour] as RGB,
      width: this.width,
      points,
    };
    try {
      await this.api.postStroke(strokePayload(record.view, record.colour, record.width, points));
      this.state.addStroke(record);
    } catch (err) {
      this.onError?.(err instanceof Error ? err.message : String(err));
    }
    this.redraw();
    this.onStrokePosted?.();
  }

  redraw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !this.view) return;
    ctx.fillStyle = "#181818";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.imageReady) ctx.drawImage(this.image, 0, 0, this.canvas.width, this.canvas.height);
    for (const s of this.state.strokesForView(this.view.id)) {
      this.drawPolyline(ctx, s.points, s.colour, s.width, 0.55);
    }
    if (this.drawing) this.drawPolyline(ctx, this.drawing, this.colour, this.width, 0.9);
  }

  private drawPolyline(ctx: CanvasRenderingContext2D, pts: [number, number][],
                       colour: RGB, width: number, alpha: number): void {
    if (pts.length === 0) return;
    ctx.save();
    ctx.globalAlpha = alpha;
    ctx.strokeStyle = ctx.fillStyle = `rgb(${colourKey(colour)})`;
    ctx.lineWidth = width;
    ctx.lineCap = ctx.lineJoin = "round";
    if (pts.length === 1) {
      ctx.beginPath();
      ctx.arc(pts[0][0], pts[0][1], width / 2, 0, 2 * Math.PI);
      ctx.fill();
    } else {
      ctx.beginPath();
      ctx.moveTo(pts[0][0], pts[0][1]);
      for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i][0], pts[i][1]);
      ctx.stroke();
    }
    ctx.restore();
  }
}

export function clampToBounds(x: number, y: number, width: number, height: number): [number, number] {
  return [Math.min(Math.max(x, 0), width - 1), Math.min(Math.max(y, 0), height - 1)];
}
