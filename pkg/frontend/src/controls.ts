// Fit controls: buttons stay disabled until their preconditions hold
// (a selection for quadrics, two fitted curves for surfaces). Parameter
// fields default to the module defaults on the server.

import type { SessionState } from "./state.js";

export interface FitRequests {
  ellipsoid: (priorSigma: number, margin: number) => void;
  cylinder: (priorSigma: number) => void;
  curve: (L: number, D: number) => void;
  surface: (mode: "interpolate" | "extrude") => void;
}

export class FitControls {
  private ellipsoidBtn: HTMLButtonElement;
  private cylinderBtn: HTMLButtonElement;
  private curveBtn: HTMLButtonElement;
  private interpolateBtn: HTMLButtonElement;
  private extrudeBtn: HTMLButtonElement;
  private sigmaInput: HTMLInputElement;
  private marginInput: HTMLInputElement;
  private degreeInput: HTMLInputElement;
  private samplesInput: HTMLInputElement;

  constructor(root: ParentNode, private state: SessionState, private requests: FitRequests) {
    const byId = <T extends HTMLElement>(id: string) => {
      const el = root.querySelector<T>(`#${id}`);
      if (!el) throw new Error(`missing control #${id}`);
      return el;
    };
    this.ellipsoidBtn = byId<HTMLButtonElement>("fit-ellipsoid");
    this.cylinderBtn = byId<HTMLButtonElement>("fit-cylinder");
    this.curveBtn = byId<HTMLButtonElement>("fit-curve");
    this.interpolateBtn = byId<HTMLButtonElement>("surface-interpolate");
    this.extrudeBtn = byId<HTMLButtonElement>("surface-extrude");
    this.sigmaInput = byId<HTMLInputElement>("prior-sigma");
    this.marginInput = byId<HTMLInputElement>("trim-margin");
    this.degreeInput = byId<HTMLInputElement>("curve-degree");
    this.samplesInput = byId<HTMLInputElement>("curve-samples");

    this.ellipsoidBtn.addEventListener("click", () =>
      requests.ellipsoid(this.priorSigma(), this.margin()));
    this.cylinderBtn.addEventListener("click", () => requests.cylinder(this.priorSigma()));
    this.curveBtn.addEventListener("click", () => requests.curve(this.degree(), this.samples()));
    this.interpolateBtn.addEventListener("click", () => requests.surface("interpolate"));
    this.extrudeBtn.addEventListener("click", () => requests.surface("extrude"));
    this.update();
  }

  priorSigma(): number {
    return numberOr(this.sigmaInput.value, 0.001);
  }

  margin(): number {
    return numberOr(this.marginInput.value, 0.02);
  }

  degree(): number {
    return Math.max(1, Math.round(numberOr(this.degreeInput.value, 3)));
  }

  samples(): number {
    return Math.max(2, Math.round(numberOr(this.samplesInput.value, 50)));
  }

  update(): void {
    const quadricOk = this.state.canFitQuadric();
    const curvesOk = this.state.canCombineCurves();
    const sketchOk = this.state.coloursInUse().length > 0;
    this.ellipsoidBtn.disabled = !quadricOk;
    this.cylinderBtn.disabled = !quadricOk;
    this.curveBtn.disabled = !sketchOk;
    this.interpolateBtn.disabled = !curvesOk;
    this.extrudeBtn.disabled = !curvesOk;
  }
}

export function numberOr(text: string, fallback: number): number {
  const v = Number.parseFloat(text);
  return Number.isFinite(v) ? v : fallback;
}
