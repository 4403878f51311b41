"""Mesh assembly and cleanup: grid triangulation, normal orientation toward a
candidate camera, and long-edge face removal for imported Poisson output."""

from typing import Union

import numpy as np

from .core import DEGENERATE_AREA, SurfaceMesh
from .errors import DegenerateCamera, EmptyAfterFilter, GridTooSmall

AUTO_EDGE_FACTOR = 5.0


def face_normals_and_areas(vertices: np.ndarray, faces: np.ndarray):
    """Unit normals (from winding) and areas for each triangle."""
    v = np.asarray(vertices, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if f.size == 0:
        return np.zeros((0, 3)), np.zeros(0)
    cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    norms = np.linalg.norm(cross, axis=1)
    areas = 0.5 * norms
    normals = np.zeros_like(cross)
    ok = norms > 0
    normals[ok] = cross[ok] / norms[ok, None]
    return normals, areas


def triangulate_grid(grid: np.ndarray, source_tag: str = "grid") -> SurfaceMesh:
    """Triangulate a K x J vertex lattice into 2(K-1)(J-1) triangles.

    Quad (k, j) splits along the (k, j) -> (k+1, j+1) diagonal with
    consistent winding; zero-area triangles are dropped.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 3 or g.shape[2] != 3:
        raise ValueError("grid must be a (K, J, 3) array")
    K, J = g.shape[0], g.shape[1]
    if K < 2 or J < 2:
        raise GridTooSmall(f"grid is {K}x{J}; need at least 2x2")
    if not np.all(np.isfinite(g)):
        raise ValueError("grid contains non-finite vertices")
    verts = g.reshape(-1, 3)
    k, j = np.meshgrid(np.arange(K - 1), np.arange(J - 1), indexing="ij")
    v = (k * J + j).ravel()
    tri1 = np.column_stack([v, v + J, v + J + 1])
    tri2 = np.column_stack([v, v + J + 1, v + 1])
    faces = np.empty((2 * len(v), 3), dtype=np.int32)
    faces[0::2] = tri1
    faces[1::2] = tri2
    normals, areas = face_normals_and_areas(verts, faces)
    keep = areas > DEGENERATE_AREA
    return SurfaceMesh(verts, faces[keep], normals[keep], source_tag)


def camera_center(P: np.ndarray) -> np.ndarray:
    """Camera center of a 3x4 projection matrix: -M^-1 p4 for P = [M | p4]."""
    P = np.asarray(P, dtype=np.float64).reshape(3, 4)
    M = P[:, :3]
    if abs(np.linalg.det(M)) < 1e-12 * max(1.0, np.abs(M).max() ** 3):
        raise DegenerateCamera("left 3x3 block is singular")
    return np.linalg.solve(M, -P[:, 3])


def orientation_score(mesh: SurfaceMesh, cam_center: np.ndarray) -> float:
    """Sum over faces of dot(normal, camera - centroid)."""
    if mesh.n_faces == 0:
        return 0.0
    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    return float(np.sum(np.einsum("ij,ij->i", mesh.normals, cam_center - centroids)))


def orient_normals(mesh: SurfaceMesh, cam_center) -> SurfaceMesh:
    """Flip all windings and normals when the summed orientation score toward
    the candidate camera is negative; afterwards the score is >= 0."""
    cam = np.asarray(cam_center, dtype=np.float64).reshape(3)
    if orientation_score(mesh, cam) < 0:
        return SurfaceMesh(mesh.vertices, mesh.faces[:, ::-1], -mesh.normals, mesh.source_tag)
    return mesh


def _edge_lengths(mesh: SurfaceMesh):
    f = mesh.faces
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    lengths = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
    return edges, lengths


def median_edge_length(mesh: SurfaceMesh) -> float:
    """Median length over unique undirected edges."""
    edges, lengths = _edge_lengths(mesh)
    canon = np.sort(edges, axis=1)
    _, first = np.unique(canon, axis=0, return_index=True)
    return float(np.median(lengths[first]))


def remove_long_edges(mesh: SurfaceMesh, threshold: Union[float, str] = "auto") -> SurfaceMesh:
    """Delete every face with an edge longer than the threshold, then drop
    orphaned vertices and reindex. "auto" uses 5x the median edge length,
    aimed at the oversized triangles Poisson reconstruction predicts into
    holes."""
    if mesh.n_faces == 0:
        raise EmptyAfterFilter("mesh has no faces")
    if threshold == "auto":
        threshold = AUTO_EDGE_FACTOR * median_edge_length(mesh)
    threshold = float(threshold)
    _, lengths = _edge_lengths(mesh)
    per_face = lengths.reshape(3, -1).max(axis=0)
    keep_f = per_face <= threshold
    if not np.any(keep_f):
        raise EmptyAfterFilter("every face exceeds the edge threshold")
    faces = mesh.faces[keep_f]
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[faces] = True
    new_index = -np.ones(mesh.n_vertices, dtype=np.int64)
    new_index[used] = np.arange(int(used.sum()))
    return SurfaceMesh(mesh.vertices[used], new_index[faces].astype(np.int32),
                       mesh.normals[keep_f], mesh.source_tag)


def vertex_normals(mesh: SurfaceMesh) -> np.ndarray:
    """Area-weighted average of incident face normals, normalized.

    Exported alongside positions because the external Poisson tool consumes
    per-vertex normals.
    """
    normals, areas = face_normals_and_areas(mesh.vertices, mesh.faces)
    out = np.zeros((mesh.n_vertices, 3))
    for k in range(3):
        np.add.at(out, mesh.faces[:, k], normals * areas[:, None])
    norms = np.linalg.norm(out, axis=1)
    ok = norms > 0
    out[ok] = out[ok] / norms[ok, None]
    return out
