// Orbit camera over canvas 2D: yaw/pitch/distance around a target with
// perspective projection. Z is up, matching the photogrammetry clouds.

export type Vec3 = [number, number, number];

const MIN_PITCH = -1.55;
const MAX_PITCH = 1.55;
const MIN_DISTANCE = 1e-3;

export class OrbitCamera {
  yaw = 0.6;
  pitch = 0.4;
  distance = 5;
  target: Vec3 = [0, 0, 0];
  focal = 1.8; // in units of half the viewport height

  frame(center: Vec3, radius: number): void {
    this.target = [...center] as Vec3;
    this.distance = Math.max(MIN_DISTANCE, radius * 2.5);
  }

  rotate(dxPx: number, dyPx: number): void {
    this.yaw -= dxPx * 0.008;
    this.pitch = Math.min(MAX_PITCH, Math.max(MIN_PITCH, this.pitch + dyPx * 0.008));
  }

  zoom(factor: number): void {
    this.distance = Math.max(MIN_DISTANCE, this.distance * factor);
  }

  pan(dxPx: number, dyPx: number, viewportHeight: number): void {
    const scale = this.distance / (this.focal * viewportHeight * 0.5);
    const [right, upv] = this.basis();
    for (let i = 0; i < 3; i++) {
      this.target[i] -= right[i] * dxPx * scale;
      this.target[i] += upv[i] * dyPx * scale;
    }
  }

  position(): Vec3 {
    const cp = Math.cos(this.pitch);
    return [
      this.target[0] + this.distance * cp * Math.cos(this.yaw),
      this.target[1] + this.distance * cp * Math.sin(this.yaw),
      this.target[2] + this.distance * Math.sin(this.pitch),
    ];
  }

  // right and up vectors of the view plane in world coordinates
  basis(): [Vec3, Vec3, Vec3] {
    const pos = this.position();
    const fwd: Vec3 = [
      this.target[0] - pos[0],
      this.target[1] - pos[1],
      this.target[2] - pos[2],
    ];
    const fl = Math.hypot(...fwd);
    for (let i = 0; i < 3; i++) fwd[i] /= fl;
    const up: Vec3 = [0, 0, 1];
    let right: Vec3 = [
      fwd[1] * up[2] - fwd[2] * up[1],
      fwd[2] * up[0] - fwd[0] * up[2],
      fwd[0] * up[1] - fwd[1] * up[0],
    ];
    const rl = Math.hypot(...right);
    right = rl > 1e-9 ? ([right[0] / rl, right[1] / rl, right[2] / rl] as Vec3) : [1, 0, 0];
    const upv: Vec3 = [
      right[1] * fwd[2] - right[2] * fwd[1],
      right[2] * fwd[0] - right[0] * fwd[2],
      right[0] * fwd[1] - right[1] * fwd[0],
    ];
    return [right, upv, fwd];
  }

  // Perspective projection to canvas pixels; null when behind the camera.
  project(p: Vec3, width: number, height: number): { x: number; y: number; depth: number } | null {
    const pos = this.position();
    const [right, upv, fwd] = this.basis();
    const d: Vec3 = [p[0] - pos[0], p[1] - pos[1], p[2] - pos[2]];
    const z = d[0] * fwd[0] + d[1] * fwd[1] + d[2] * fwd[2];
    if (z <= 1e-9) return null;
    const x = d[0] * right[0] + d[1] * right[1] + d[2] * right[2];
    const y = d[0] * upv[0] + d[1] * upv[1] + d[2] * upv[2];
    const f = this.focal * height * 0.5;
    return { x: width * 0.5 + (f * x) / z, y: height * 0.5 - (f * y) / z, depth: z };
  }

  // Project an interleaved xyz array; returns interleaved [x, y] with NaN
  // for points behind the camera.
  projectAll(points: Float32Array, width: number, height: number): Float32Array {
    const n = points.length / 3;
    const out = new Float32Array(n * 2);
    const pos = this.position();
    const [right, upv, fwd] = this.basis();
    const f = this.focal * height * 0.5;
    for (let i = 0; i < n; i++) {
      const dx = points[3 * i] - pos[0];
      const dy = points[3 * i + 1] - pos[1];
      const dz = points[3 * i + 2] - pos[2];
      const z = dx * fwd[0] + dy * fwd[1] + dz * fwd[2];
      if (z <= 1e-9) {
        out[2 * i] = NaN;
        out[2 * i + 1] = NaN;
        continue;
      }
      const x = dx * right[0] + dy * right[1] + dz * right[2];
      const y = dx * upv[0] + dy * upv[1] + dz * upv[2];
      out[2 * i] = width * 0.5 + (f * x) / z;
      out[2 * i + 1] = height * 0.5 - (f * y) / z;
    }
    return out;
  }
}
