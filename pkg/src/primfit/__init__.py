"""Sketch-guided primitive fitting for calibrated point clouds."""

from .core import (CameraView, PointCloud, SketchSet, Stroke, SurfaceMesh,
                   project, project_points)
from .curve import (CurveModel, PolynomialBasis, Responsibilities, em_step,
                    extrude_surface, fit_curve, init_pca, interpolate_surface,
                    log_likelihood, orient_pair, resample_polyline,
                    responsibilities, sample_curve, trim_ends)
from .meshing import (camera_center, orient_normals, remove_long_edges,
                      triangulate_grid, vertex_normals)
from .meshio import export_mesh, import_meshes, read_cloud_ply, write_cloud_ply
from .quadric import (PrincipalFrame, Quadric, QuadricParamVector,
                      cylinder_mesh, ellipsoid_mesh, fit_quadric_map,
                      monomial_vector, principal_frame, trim_mesh)
from .select import (SelectionResult, resample_stroke, select_points,
                     stroke_mixture_logpdf)
from .session import (ArtifactStore, Project, load_project, load_script,
                      parse_script, replay, serialize_script, validate_script)

__version__ = "0.1.0"

__all__ = [
    "CameraView", "PointCloud", "SketchSet", "Stroke", "SurfaceMesh",
    "project", "project_points",
    "SelectionResult", "resample_stroke", "select_points", "stroke_mixture_logpdf",
    "Quadric", "QuadricParamVector", "PrincipalFrame", "monomial_vector",
    "fit_quadric_map", "principal_frame", "ellipsoid_mesh", "cylinder_mesh",
    "trim_mesh",
    "PolynomialBasis", "CurveModel", "Responsibilities", "init_pca", "em_step",
    "fit_curve", "trim_ends", "sample_curve", "orient_pair", "resample_polyline",
    "responsibilities", "log_likelihood", "interpolate_surface", "extrude_surface",
    "triangulate_grid", "orient_normals", "camera_center", "remove_long_edges",
    "vertex_normals", "export_mesh", "import_meshes", "read_cloud_ply",
    "write_cloud_ply",
    "Project", "ArtifactStore", "load_project", "load_script", "parse_script",
    "serialize_script", "validate_script", "replay",
]
