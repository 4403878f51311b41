"""PLY and OBJ readers/writers.

Vertices are written as float32 (x, y, z, nx, ny, nz), so export -> import ->
export is byte-identical: vertex normals are computed from the float32-cast
positions, which makes every derived quantity a pure function of the bytes on
disk. Multi-mesh files carry per-mesh `comment mesh ...` header lines (PLY)
or `g` groups (OBJ) so a concatenated file splits back into its parts.
"""

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import PointCloud, SurfaceMesh
from .errors import IOFailure, ParseError
from .meshing import face_normals_and_areas

_PLY_TYPES = {
    "char": np.int8, "int8": np.int8,
    "uchar": np.uint8, "uint8": np.uint8,
    "short": np.int16, "int16": np.int16,
    "ushort": np.uint16, "uint16": np.uint16,
    "int": np.int32, "int32": np.int32,
    "uint": np.uint32, "uint32": np.uint32,
    "float": np.float32, "float32": np.float32,
    "double": np.float64, "float64": np.float64,
}


def _fmt_f32(x) -> str:
    """Shortest decimal string that round-trips the float32 value."""
    return np.format_float_positional(np.float32(x), unique=True, trim="0")


@dataclass
class _Property:
    name: str
    dtype: type
    is_list: bool = False
    count_dtype: Optional[type] = None


@dataclass
class _Element:
    name: str
    count: int
    properties: List[_Property]


@dataclass
class _Header:
    fmt: str  # "ascii" | "binary_little_endian"
    comments: List[str]
    elements: List[_Element]


def _parse_ply_header(blob: bytes, path) -> Tuple[_Header, int]:
    end = blob.find(b"end_header\n")
    if not blob.startswith(b"ply") or end < 0:
        raise ParseError(f"{path}: not a PLY file")
    header_text = blob[:end].decode("ascii", errors="replace")
    data_start = end + len(b"end_header\n")
    fmt = None
    comments: List[str] = []
    elements: List[_Element] = []
    for lineno, line in enumerate(header_text.splitlines()[1:], start=2):
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "format":
            if tok[1] not in ("ascii", "binary_little_endian"):
                raise ParseError(f"{path}:{lineno}: unsupported PLY format {tok[1]!r}")
            fmt = tok[1]
        elif tok[0] == "comment":
            comments.append(line[len("comment "):])
        elif tok[0] == "element":
            elements.append(_Element(tok[1], int(tok[2]), []))
        elif tok[0] == "property":
            if not elements:
                raise ParseError(f"{path}:{lineno}: property before element")
            if tok[1] == "list":
                if tok[2] not in _PLY_TYPES or tok[3] not in _PLY_TYPES:
                    raise ParseError(f"{path}:{lineno}: unknown list types")
                elements[-1].properties.append(
                    _Property(tok[4], _PLY_TYPES[tok[3]], True, _PLY_TYPES[tok[2]]))
            else:
                if tok[1] not in _PLY_TYPES:
                    raise ParseError(f"{path}:{lineno}: unknown property type {tok[1]!r}")
                elements[-1].properties.append(_Property(tok[2], _PLY_TYPES[tok[1]]))
    if fmt is None:
        raise ParseError(f"{path}: PLY header has no format line")
    return _Header(fmt, comments, elements), data_start


def _read_ply_data(blob: bytes, header: _Header, data_start: int, path):
    """Returns {element_name: {prop_name: array or list-of-arrays}}."""
    out = {}
    if header.fmt == "ascii":
        text = blob[data_start:].decode("ascii", errors="replace")
        lines = text.splitlines()
        row = 0
        for el in header.elements:
            cols = {p.name: [] for p in el.properties}
            for i in range(el.count):
                if row >= len(lines):
                    raise ParseError(f"{path}: truncated data for element {el.name}")
                tok = lines[row].split()
                row += 1
                pos = 0
                try:
                    for p in el.properties:
                        if p.is_list:
                            n = int(tok[pos]); pos += 1
                            vals = np.array(tok[pos:pos + n], dtype=p.dtype)
                            if len(vals) != n:
                                raise IndexError
                            pos += n
                            cols[p.name].append(vals)
                        else:
                            cols[p.name].append(p.dtype(tok[pos])); pos += 1
                except (ValueError, IndexError) as exc:
                    raise ParseError(
                        f"{path}: bad {el.name} row {i} (data line {row}): {exc}") from exc
            out[el.name] = {
                name: (vals if el.properties[k].is_list else np.asarray(vals))
                for k, (name, vals) in enumerate(cols.items())}
        return out

    offset = data_start
    for el in header.elements:
        if all(not p.is_list for p in el.properties):
            dt = np.dtype([(p.name, np.dtype(p.dtype).newbyteorder("<")) for p in el.properties])
            need = dt.itemsize * el.count
            if offset + need > len(blob):
                raise ParseError(f"{path}: truncated binary data for element {el.name}")
            rows = np.frombuffer(blob, dtype=dt, count=el.count, offset=offset)
            offset += need
            out[el.name] = {p.name: np.array(rows[p.name]) for p in el.properties}
        else:
            cols = {p.name: [] for p in el.properties}
            for i in range(el.count):
                for p in el.properties:
                    if p.is_list:
                        cdt = np.dtype(p.count_dtype).newbyteorder("<")
                        n = int(np.frombuffer(blob, cdt, 1, offset)[0])
                        offset += cdt.itemsize
                        idt = np.dtype(p.dtype).newbyteorder("<")
                        vals = np.frombuffer(blob, idt, n, offset)
                        offset += idt.itemsize * n
                        cols[p.name].append(np.array(vals))
                    else:
                        dt = np.dtype(p.dtype).newbyteorder("<")
                        cols[p.name].append(np.frombuffer(blob, dt, 1, offset)[0])
                        offset += dt.itemsize
                if offset > len(blob):
                    raise ParseError(f"{path}: truncated binary data for element {el.name} row {i}")
            out[el.name] = {
                name: (vals if p.is_list else np.asarray(vals))
                for p, (name, vals) in zip(el.properties, cols.items())}
    return out


# ---------------------------------------------------------------------------
# point clouds


def write_cloud_ply(points: np.ndarray, path, binary: bool = True,
                    colors: Optional[np.ndarray] = None) -> None:
    pts = np.asarray(points, dtype=np.float32).reshape(-1, 3)
    lines = ["ply",
             f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
             f"element vertex {len(pts)}",
             "property float x", "property float y", "property float z"]
    if colors is not None:
        colors = np.asarray(colors, dtype=np.uint8).reshape(-1, 3)
        lines += ["property uchar red", "property uchar green", "property uchar blue"]
    lines.append("end_header")
    try:
        with open(path, "wb") as f:
            f.write(("\n".join(lines) + "\n").encode("ascii"))
            if binary:
                if colors is None:
                    f.write(pts.astype("<f4").tobytes())
                else:
                    dt = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                                   ("r", "u1"), ("g", "u1"), ("b", "u1")])
                    rows = np.empty(len(pts), dtype=dt)
                    rows["x"], rows["y"], rows["z"] = pts[:, 0], pts[:, 1], pts[:, 2]
                    rows["r"], rows["g"], rows["b"] = colors[:, 0], colors[:, 1], colors[:, 2]
                    f.write(rows.tobytes())
            else:
                for i in range(len(pts)):
                    row = " ".join(_fmt_f32(v) for v in pts[i])
                    if colors is not None:
                        row += " " + " ".join(str(int(c)) for c in colors[i])
                    f.write((row + "\n").encode("ascii"))
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def read_cloud_ply(path) -> PointCloud:
    """Load a point cloud from ASCII or binary little-endian PLY.

    Values declared as float32 are canonicalized through float32 so the two
    encodings of one cloud parse identically. Non-finite coordinates raise a
    ParseError naming the offending vertex.
    """
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    header, data_start = _parse_ply_header(blob, path)
    vertex = next((e for e in header.elements if e.name == "vertex"), None)
    if vertex is None or vertex.count < 1:
        raise ParseError(f"{path}: PLY has no vertex element")
    names = [p.name for p in vertex.properties]
    for need in ("x", "y", "z"):
        if need not in names:
            raise ParseError(f"{path}: vertex element lacks property {need!r}")
    data = _read_ply_data(blob, header, data_start, path)["vertex"]
    pts = np.column_stack([np.asarray(data["x"], dtype=np.float64),
                           np.asarray(data["y"], dtype=np.float64),
                           np.asarray(data["z"], dtype=np.float64)])
    bad = np.flatnonzero(~np.isfinite(pts).all(axis=1))
    if bad.size:
        raise ParseError(f"{path}: vertex {int(bad[0])} has a non-finite coordinate")
    colors = None
    if all(c in names for c in ("red", "green", "blue")):
        colors = np.column_stack([data["red"], data["green"], data["blue"]]).astype(np.uint8)
    return PointCloud(pts, colors)


# ---------------------------------------------------------------------------
# meshes


def _sanitize_tag(tag: str) -> str:
    tag = tag.strip() or "mesh"
    return "".join(ch if not ch.isspace() else "_" for ch in tag)


def _vertex_normals_f32(vertices64: np.ndarray, faces: np.ndarray) -> np.ndarray:
    normals, areas = face_normals_and_areas(vertices64, faces)
    out = np.zeros((len(vertices64), 3))
    for k in range(3):
        np.add.at(out, faces[:, k], normals * areas[:, None])
    norms = np.linalg.norm(out, axis=1)
    ok = norms > 0
    out[ok] = out[ok] / norms[ok, None]
    return out.astype(np.float32)


def ply_mesh_bytes(meshes: Sequence[SurfaceMesh], binary: bool = True) -> bytes:
    """Meshes concatenated into one PLY with a per-face `source` index and
    per-mesh comment lines for lossless splitting."""
    if not meshes:
        raise ValueError("no meshes to export")
    total_v = sum(m.n_vertices for m in meshes)
    total_f = sum(m.n_faces for m in meshes)
    lines = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0"]
    for i, m in enumerate(meshes):
        lines.append(f"comment mesh {i} vertices {m.n_vertices} faces {m.n_faces} "
                     f"tag {_sanitize_tag(m.source_tag)}")
    lines += [f"element vertex {total_v}",
              "property float x", "property float y", "property float z",
              "property float nx", "property float ny", "property float nz",
              f"element face {total_f}",
              "property list uchar int vertex_indices",
              "property int source",
              "end_header"]
    buf = io.BytesIO()
    buf.write(("\n".join(lines) + "\n").encode("ascii"))
    arrays = []
    for m in meshes:
        v32 = m.vertices.astype(np.float32)
        vn = _vertex_normals_f32(v32.astype(np.float64), m.faces)
        arrays.append((v32, vn))
    if binary:
        for v32, vn in arrays:
            inter = np.hstack([v32, vn]).astype("<f4")
            buf.write(inter.tobytes())
        offset = 0
        for i, m in enumerate(meshes):
            for face in m.faces:
                buf.write(struct.pack("<B3ii", 3, *(int(x) + offset for x in face), i))
            offset += m.n_vertices
    else:
        for v32, vn in arrays:
            for row in np.hstack([v32, vn]):
                buf.write((" ".join(_fmt_f32(x) for x in row) + "\n").encode("ascii"))
        offset = 0
        for i, m in enumerate(meshes):
            for face in m.faces:
                buf.write((f"3 {face[0] + offset} {face[1] + offset} {face[2] + offset} {i}\n")
                          .encode("ascii"))
            offset += m.n_vertices
    return buf.getvalue()


def write_ply_meshes(meshes: Sequence[SurfaceMesh], path, binary: bool = True) -> None:
    try:
        Path(path).write_bytes(ply_mesh_bytes(meshes, binary=binary))
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def _mesh_from_arrays(verts: np.ndarray, faces: np.ndarray, tag: str) -> SurfaceMesh:
    faces = np.asarray(faces, dtype=np.int32).reshape(-1, 3)
    normals, areas = face_normals_and_areas(verts, faces)
    keep = areas > 1e-12
    return SurfaceMesh(verts, faces[keep], normals[keep], tag)


def read_ply_meshes(path) -> List[SurfaceMesh]:
    """Read one PLY into a list of meshes, splitting on `comment mesh` lines
    when present (our own exports); foreign files load as a single mesh."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    header, data_start = _parse_ply_header(blob, path)
    data = _read_ply_data(blob, header, data_start, path)
    if "vertex" not in data or "face" not in data:
        raise ParseError(f"{path}: PLY lacks vertex or face element")
    vd = data["vertex"]
    verts = np.column_stack([vd["x"], vd["y"], vd["z"]]).astype(np.float64)
    face_lists = data["face"].get("vertex_indices") or data["face"].get("vertex_index")
    if face_lists is None:
        raise ParseError(f"{path}: face element lacks vertex indices")
    bad = [i for i, fl in enumerate(face_lists) if len(fl) != 3]
    if bad:
        raise ParseError(f"{path}: face {bad[0]} is not a triangle")
    faces = np.asarray([np.asarray(fl, dtype=np.int64) for fl in face_lists], dtype=np.int64)
    faces = faces.reshape(-1, 3)

    splits = []
    for c in header.comments:
        tok = c.split()
        if len(tok) >= 8 and tok[0] == "mesh" and tok[2] == "vertices" and tok[4] == "faces":
            splits.append((int(tok[3]), int(tok[5]), tok[7]))
    if splits and sum(s[0] for s in splits) == len(verts) and sum(s[1] for s in splits) == len(faces):
        meshes = []
        v_off = f_off = 0
        for nv, nf, tag in splits:
            local = faces[f_off:f_off + nf] - v_off
            meshes.append(_mesh_from_arrays(verts[v_off:v_off + nv], local, tag))
            v_off += nv
            f_off += nf
        return meshes
    return [_mesh_from_arrays(verts, faces, "imported")]


def write_obj_meshes(meshes: Sequence[SurfaceMesh], path) -> None:
    """Write meshes as OBJ groups with per-vertex normals (v/vn/f v//vn)."""
    if not meshes:
        raise ValueError("no meshes to export")
    out = []
    offset = 0
    for m in meshes:
        out.append(f"g {_sanitize_tag(m.source_tag)}")
        v32 = m.vertices.astype(np.float32)
        vn = _vertex_normals_f32(v32.astype(np.float64), m.faces)
        for row in v32:
            out.append("v " + " ".join(_fmt_f32(x) for x in row))
        for row in vn:
            out.append("vn " + " ".join(_fmt_f32(x) for x in row))
        for f in m.faces:
            a, b, c = (int(x) + offset + 1 for x in f)
            out.append(f"f {a}//{a} {b}//{b} {c}//{c}")
        offset += m.n_vertices
    try:
        Path(path).write_text("\n".join(out) + "\n", encoding="ascii")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def read_obj_meshes(path) -> List[SurfaceMesh]:
    try:
        text = Path(path).read_text(encoding="ascii", errors="replace")
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    groups = []  # (tag, verts, faces, vertex_offset)
    current = None
    global_v = 0

    def open_group(tag):
        nonlocal current
        current = {"tag": tag, "verts": [], "faces": [], "off": global_v}
        groups.append(current)

    for lineno, line in enumerate(text.splitlines(), start=1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] == "g":
            open_group(tok[1] if len(tok) > 1 else "mesh")
        elif tok[0] == "v":
            if current is None:
                open_group("mesh")
            try:
                current["verts"].append([float(tok[1]), float(tok[2]), float(tok[3])])
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}:{lineno}: bad vertex line") from exc
            global_v += 1
        elif tok[0] == "f":
            if current is None:
                raise ParseError(f"{path}:{lineno}: face before any vertex")
            try:
                idx = [int(t.split("/")[0]) - 1 - current["off"] for t in tok[1:4]]
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}:{lineno}: bad face line") from exc
            current["faces"].append(idx)
    meshes = []
    for g in groups:
        if not g["verts"]:
            continue
        verts = np.asarray(g["verts"], dtype=np.float64)
        faces = np.asarray(g["faces"], dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(verts)):
            raise ParseError(f"{path}: face index outside its group in group {g['tag']!r}")
        meshes.append(_mesh_from_arrays(verts, faces, g["tag"]))
    if not meshes:
        raise ParseError(f"{path}: OBJ contains no geometry")
    return meshes


def export_mesh(meshes: Sequence[SurfaceMesh], fmt: str, path) -> Path:
    """Write a mesh collection as PLY (binary little-endian) or OBJ."""
    path = Path(path)
    fmt = fmt.lower()
    if fmt == "ply":
        write_ply_meshes(meshes, path, binary=True)
    elif fmt == "ply-ascii":
        write_ply_meshes(meshes, path, binary=False)
    elif fmt == "obj":
        write_obj_meshes(meshes, path)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return path


def import_meshes(path) -> List[SurfaceMesh]:
    path = Path(path)
    if path.suffix.lower() == ".obj":
        return read_obj_meshes(path)
    return read_ply_meshes(path)
