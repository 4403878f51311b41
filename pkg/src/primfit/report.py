"""Replay reporting: matplotlib figures plus a CSV summary next to the
exported meshes, one figure per artifact."""

import csv
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from . import curve as curve_mod  # noqa: E402
from .session import ArtifactStore, Project  # noqa: E402

_PROJECTIONS = ((0, 1, "x", "y"), (0, 2, "x", "z"), (1, 2, "y", "z"))


def _selection_figure(sel, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    p = sel.probabilities
    ax.hist(p, bins=60, log=True, color="#4477aa")
    ax.axvline(sel.threshold_used, color="#cc3311", linestyle="--",
               label=f"mean 1/N = {sel.threshold_used:.2e}")
    ax.set_xlabel("normalized probability")
    ax.set_ylabel("point count")
    ax.set_title(f"selection: {len(sel.selected_indices)} of {len(p)} points")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _curve_figure(model, path: Path) -> None:
    samples = curve_mod.sample_curve(model)
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.4))
    for ax, (i, j, xl, yl) in zip(axes, _PROJECTIONS):
        ax.plot(samples[:, i], samples[:, j], "-o", ms=2, color="#228833")
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.set_aspect("equal", adjustable="datalim")
    fig.suptitle(f"curve: L={model.basis.degree} D={model.basis.sample_count} "
                 f"active={model.active_range} sigma2={model.sigma2:.3g}")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _mesh_figure(mesh, path: Path) -> None:
    fig = plt.figure(figsize=(5, 5))
    ax = fig.add_subplot(projection="3d")
    v, f = mesh.vertices, mesh.faces
    if len(f):
        ax.plot_trisurf(v[:, 0], v[:, 1], f, v[:, 2],
                        color="#66ccee", edgecolor="none", alpha=0.9)
    else:
        ax.scatter(v[:, 0], v[:, 1], v[:, 2], s=2)
    ax.set_title(f"{mesh.source_tag}: {mesh.n_vertices} verts, {mesh.n_faces} faces")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_report(project: Project, store: ArtifactStore, out_dir) -> List[Path]:
    """Render one figure per selection/curve/mesh and a summary CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    rows = [("artifact", "kind", "detail")]
    rows.append(("project", "project",
                 f"points={len(project.cloud)} views={len(project.views)}"))
    for sid, sel in store.selections.items():
        fig_path = out / f"fig_{sid}.png"
        _selection_figure(sel, fig_path)
        written.append(fig_path)
        rows.append((sid, "selection",
                     f"selected={len(sel.selected_indices)} threshold={sel.threshold_used:.6e}"))
    for cid, model in store.curves.items():
        fig_path = out / f"fig_{cid}.png"
        _curve_figure(model, fig_path)
        written.append(fig_path)
        rows.append((cid, "curve",
                     f"L={model.basis.degree} D={model.basis.sample_count} "
                     f"active={model.active_range[0]}..{model.active_range[1]} "
                     f"sigma2={model.sigma2:.6g}"))
    for qid, q in store.quadrics.items():
        rows.append((qid, "quadric", f"c={q.c:.6g}"))
    for mid, mesh in store.meshes.items():
        fig_path = out / f"fig_{mid}.png"
        _mesh_figure(mesh, fig_path)
        written.append(fig_path)
        rows.append((mid, store.mesh_kinds.get(mid, "mesh"),
                     f"vertices={mesh.n_vertices} faces={mesh.n_faces} tag={mesh.source_tag}"))
    for path in store.exports:
        rows.append((path.name, "export", str(path)))

    summary = out / "report_summary.csv"
    with open(summary, "w", newline="") as f:
        csv.writer(f).writerows(rows)
    written.append(summary)
    return written
