"""MAP quadric fitting and quadric-derived primitive meshes.

The fit solves the regularized normal equations

    psi = (sigma^2 X^T X + blkdiag(J, 0))^-1 [1 1 1 0 ... 0]^T

where X stacks per-point monomial vectors and sigma is the prior parameter:
small sigma pulls the quadratic part toward the unit sphere, which keeps the
fit away from disconnected hyperboloid solutions. J weights the three
off-diagonal coefficients by 2 so the prior is the Frobenius distance of A
from the identity; a plain identity weight is not rotation-invariant and
visibly breaks rigid-motion equivariance of weak-prior fits. Fitting runs on
centered, RMS-scaled data and the parameters are mapped back afterwards; the
raw monomial system on world coordinates is catastrophically
ill-conditioned.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .core import SurfaceMesh
from .errors import DegenerateQuadric, EmptyAfterTrim, NotAnEllipsoid, SingularSystem
from .meshing import face_normals_and_areas

MAX_CONDITION = 1e14
DEFAULT_PRIOR_SIGMA = 1e-3
DEFAULT_MARGIN = 0.02
DEFAULT_RESOLUTION = (64, 32)

PRIOR_MEAN = np.array([1.0, 1.0, 1.0] + [0.0] * 7)
# Frobenius metric on symmetric A: off-diagonal psi entries stand for two
# matrix entries each
PRIOR_WEIGHTS = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


@dataclass(frozen=True)
class Quadric:
    """Implicit surface z^T A z + b^T z + c = 0 with A stored symmetric."""

    A: np.ndarray  # (3, 3) symmetric
    b: np.ndarray  # (3,)
    c: float

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64).reshape(3, 3)
        b = np.asarray(self.b, dtype=np.float64).reshape(3)
        if not np.array_equal(A, A.T):
            raise ValueError("quadric matrix must be exactly symmetric")
        if not (np.any(A) or np.any(b) or self.c != 0.0):
            raise ValueError("quadric parameters are all zero")
        A.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.einsum("ni,ij,nj->n", pts, self.A, pts) + pts @ self.b + self.c

    def to_json(self) -> dict:
        return {"A": self.A.reshape(-1).tolist(), "b": self.b.tolist(), "c": self.c}

    @classmethod
    def from_json(cls, obj: dict) -> "Quadric":
        A = np.asarray(obj["A"], dtype=np.float64).reshape(3, 3)
        A = 0.5 * (A + A.T)
        return cls(A, np.asarray(obj["b"], dtype=np.float64), float(obj["c"]))


@dataclass(frozen=True)
class QuadricParamVector:
    """10-vector [a11,a22,a33,a12,a13,a23,b1,b2,b3,c]; the off-diagonal
    doubling lives in the monomial vector so A stays symmetric."""

    psi: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=np.float64).reshape(10)
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)

    def to_quadric(self) -> Quadric:
        a11, a22, a33, a12, a13, a23, b1, b2, b3, c = self.psi
        A = np.array([[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]])
        return Quadric(A, np.array([b1, b2, b3]), c)

    @classmethod
    def from_quadric(cls, q: Quadric) -> "QuadricParamVector":
        A, b = q.A, q.b
        return cls(np.array([A[0, 0], A[1, 1], A[2, 2], A[0, 1], A[0, 2], A[1, 2],
                             b[0], b[1], b[2], q.c]))


@dataclass(frozen=True)
class PrincipalFrame:
    """Eigen frame of a quadric plus the data extents used for trimming."""

    center: np.ndarray  # mu (3,)
    axes: np.ndarray  # V (3, 3), columns are eigenvectors of A
    eigenvalues: np.ndarray  # (3,)
    tau: float
    extents: np.ndarray  # (3, 2) per-axis (min, max) of V^T (z - mu)

    def __post_init__(self):
        for name in ("center", "axes", "eigenvalues", "extents"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        object.__setattr__(self, "tau", float(self.tau))

    def radii(self) -> np.ndarray:
        return np.sqrt(self.tau / self.eigenvalues)


def monomial_vector(z) -> np.ndarray:
    z1, z2, z3 = np.asarray(z, dtype=np.float64).reshape(3)
    return np.array([z1 * z1, z2 * z2, z3 * z3,
                     2 * z1 * z2, 2 * z1 * z3, 2 * z2 * z3,
                     z1, z2, z3, 1.0])


def monomial_matrix(points: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(points, dtype=np.float64))
    z1, z2, z3 = Z[:, 0], Z[:, 1], Z[:, 2]
    return np.column_stack([z1 * z1, z2 * z2, z3 * z3,
                            2 * z1 * z2, 2 * z1 * z3, 2 * z2 * z3,
                            z1, z2, z3, np.ones(len(Z))])


def _denormalize(q: Quadric, mean: np.ndarray, scale: float) -> Quadric:
    """Map a quadric fitted on (z - mean)/scale back to world coordinates."""
    s2 = scale * scale
    A = q.A / s2
    A = 0.5 * (A + A.T)
    b = q.b / scale - 2.0 * (q.A @ mean) / s2
    c = mean @ q.A @ mean / s2 - q.b @ mean / scale + q.c
    return Quadric(A, b, float(c))


def fit_quadric_map(points: np.ndarray, prior_sigma: float = DEFAULT_PRIOR_SIGMA) -> QuadricParamVector:
    """MAP estimate of the quadric through a sub-cloud.

    With no data the prior mean (the unit-coefficient sphere form) is
    returned directly; the regularized system itself is singular at N = 0.
    """
    if prior_sigma <= 0:
        raise ValueError("prior_sigma must be positive")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        return QuadricParamVector(PRIOR_MEAN.copy())

    mean = pts.mean(axis=0)
    centered = pts - mean
    scale = float(np.sqrt(np.mean(np.sum(centered * centered, axis=1))))
    if scale <= 0.0 or not np.isfinite(scale):
        scale = 1.0
    X = monomial_matrix(centered / scale)

    M = (prior_sigma ** 2) * (X.T @ X)
    M[np.arange(6), np.arange(6)] += PRIOR_WEIGHTS
    if np.linalg.cond(M) > MAX_CONDITION:
        raise SingularSystem("regularized quadric system is numerically singular")
    r = PRIOR_MEAN
    try:
        L = np.linalg.cholesky(M)
        psi = np.linalg.solve(L.T, np.linalg.solve(L, r))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"quadric system factorization failed: {exc}") from exc
    q_norm = QuadricParamVector(psi).to_quadric()
    return QuadricParamVector.from_quadric(_denormalize(q_norm, mean, scale))


def _sign_fixed_eigh(A: np.ndarray):
    """Symmetric eigen-decomposition with each eigenvector's dominant
    component forced positive, for reproducible frames."""
    lam, V = np.linalg.eigh(A)
    for k in range(3):
        j = int(np.argmax(np.abs(V[:, k])))
        if V[j, k] < 0:
            V[:, k] = -V[:, k]
    return lam, V


def principal_frame(q: Quadric, points: np.ndarray) -> PrincipalFrame:
    """Center, axes, eigenvalues, tau and data extents of a quadric.

    mu = -A^-1 b / 2 and tau = mu^T A mu - c complete the square; extents are
    the min/max of the sub-cloud projected onto the eigenvectors.
    """
    lam, V = _sign_fixed_eigh(q.A)
    if np.min(np.abs(lam)) <= 1e-12 * np.max(np.abs(lam)):
        raise DegenerateQuadric("quadric matrix is singular; no ellipsoid frame")
    mu = np.linalg.solve(q.A, -0.5 * q.b)
    tau = float(mu @ q.A @ mu - q.c)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts):
        proj = (pts - mu) @ V
        extents = np.column_stack([proj.min(axis=0), proj.max(axis=0)])
    else:
        extents = np.zeros((3, 2))
    return PrincipalFrame(mu, V, lam, tau, extents)


def _uv_sphere(n_theta: int, n_phi: int):
    """Unit UV sphere: n_theta * (n_phi - 1) ring vertices plus two poles."""
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    phis = np.pi * np.arange(1, n_phi) / n_phi
    verts = [np.array([0.0, 0.0, 1.0])]
    for phi in phis:
        sp, cp = np.sin(phi), np.cos(phi)
        for th in thetas:
            verts.append(np.array([sp * np.cos(th), sp * np.sin(th), cp]))
    verts.append(np.array([0.0, 0.0, -1.0]))
    verts = np.asarray(verts)

    faces = []
    ring = lambda r, t: 1 + r * n_theta + (t % n_theta)
    for t in range(n_theta):  # top cap, outward winding
        faces.append([0, ring(0, t), ring(0, t + 1)])
    for r in range(n_phi - 2):  # quad strips
        for t in range(n_theta):
            a, b = ring(r, t), ring(r, t + 1)
            c, d = ring(r + 1, t), ring(r + 1, t + 1)
            faces.append([a, c, d])
            faces.append([a, d, b])
    bottom = len(verts) - 1
    for t in range(n_theta):  # bottom cap
        faces.append([bottom, ring(n_phi - 2, t + 1), ring(n_phi - 2, t)])
    return verts, np.asarray(faces, dtype=np.int32)


def _oriented_sign(lam: np.ndarray, tau: float):
    """Quadric parameters are defined up to global sign; report the sign that
    makes an ellipsoid's eigenvalues positive."""
    if np.all(lam < 0) and tau < 0:
        return -1.0
    return 1.0


def ellipsoid_mesh(frame: PrincipalFrame, resolution: Tuple[int, int] = DEFAULT_RESOLUTION) -> SurfaceMesh:
    """Tessellate the ellipsoid of a principal frame as a UV sphere scaled by
    the per-axis radii sqrt(tau / lambda_i), rotated and translated."""
    sign = _oriented_sign(frame.eigenvalues, frame.tau)
    lam = sign * frame.eigenvalues
    tau = sign * frame.tau
    if np.any(lam <= 0) or tau <= 0:
        raise NotAnEllipsoid("frame does not describe a real ellipsoid")
    radii = np.sqrt(tau / lam)
    n_theta, n_phi = resolution
    unit, faces = _uv_sphere(n_theta, n_phi)
    verts = (unit * radii) @ frame.axes.T + frame.center
    normals, _ = face_normals_and_areas(verts, faces)
    return SurfaceMesh(verts, faces, normals, "ellipsoid")


def cylinder_mesh(q: Quadric, points: np.ndarray,
                  resolution: Tuple[int, int] = DEFAULT_RESOLUTION) -> SurfaceMesh:
    """Extract an elliptic cylinder from a quadric.

    The eigenvalue of smallest magnitude (ties: lowest index after sorting by
    magnitude) is zeroed to define the axis; the remaining two eigenpairs fix
    the cross-section, and the sub-cloud's axis projections fix the length.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("cylinder extraction needs a non-empty sub-cloud")
    lam, V = _sign_fixed_eigh(q.A)
    order = np.argsort(np.abs(lam), kind="stable")
    ax_i, e1_i, e2_i = int(order[0]), int(order[1]), int(order[2])
    axis = V[:, ax_i]
    e1, e2 = V[:, e1_i], V[:, e2_i]
    l1, l2 = lam[e1_i], lam[e2_i]
    if abs(l1) < 1e-300 or abs(l2) < 1e-300:
        raise DegenerateQuadric("cross-section eigenvalues vanish")
    bp = V.T @ q.b
    c1 = -bp[e1_i] / (2.0 * l1)
    c2 = -bp[e2_i] / (2.0 * l2)
    tau = l1 * c1 * c1 + l2 * c2 * c2 - q.c
    sign = _oriented_sign(np.array([l1, l2]), tau)
    l1, l2, tau = sign * l1, sign * l2, sign * tau
    if l1 <= 0 or l2 <= 0 or tau <= 0:
        raise DegenerateQuadric("retained eigenpairs do not form a real cylinder")
    r1, r2 = np.sqrt(tau / l1), np.sqrt(tau / l2)

    t = pts @ axis
    t_min, t_max = float(t.min()), float(t.max())
    if t_max - t_min <= 0:
        raise DegenerateQuadric("sub-cloud has zero extent along the cylinder axis")
    n_theta, n_len = resolution
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    stations = np.linspace(t_min, t_max, n_len)
    base = c1 * e1 + c2 * e2
    verts = np.empty((n_len * n_theta, 3))
    for j, s in enumerate(stations):
        ring = base + s * axis \
            + np.outer(r1 * np.cos(thetas), e1) + np.outer(r2 * np.sin(thetas), e2)
        verts[j * n_theta:(j + 1) * n_theta] = ring
    faces = []
    for j in range(n_len - 1):
        for t_i in range(n_theta):
            a = j * n_theta + t_i
            b = j * n_theta + (t_i + 1) % n_theta
            c = (j + 1) * n_theta + t_i
            d = (j + 1) * n_theta + (t_i + 1) % n_theta
            faces.append([a, c, d])
            faces.append([a, d, b])
    faces = np.asarray(faces, dtype=np.int32)
    normals, _ = face_normals_and_areas(verts, faces)
    return SurfaceMesh(verts, faces, normals, "cylinder")


def trim_mesh(mesh: SurfaceMesh, frame: PrincipalFrame, margin: float = DEFAULT_MARGIN) -> SurfaceMesh:
    """Drop vertices outside the frame's data extents (plus margin * range
    slack per axis) and every face touching a dropped vertex."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    proj = (mesh.vertices - frame.center) @ frame.axes
    lo, hi = frame.extents[:, 0], frame.extents[:, 1]
    slack = margin * (hi - lo)
    keep_v = np.all((proj >= lo - slack) & (proj <= hi + slack), axis=1)
    if mesh.faces.size:
        keep_f = keep_v[mesh.faces].all(axis=1)
    else:
        keep_f = np.zeros(0, dtype=bool)
    if not np.any(keep_f):
        raise EmptyAfterTrim("no faces remain inside the data extents")
    new_index = -np.ones(mesh.n_vertices, dtype=np.int64)
    new_index[keep_v] = np.arange(int(keep_v.sum()))
    faces = new_index[mesh.faces[keep_f]].astype(np.int32)
    return SurfaceMesh(mesh.vertices[keep_v], faces, mesh.normals[keep_f], mesh.source_tag)
