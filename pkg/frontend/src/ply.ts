// Parser for the binary little-endian PLY the service serves: vertices as
// six float32 (x y z nx ny nz), faces as uchar count (always 3), three
// int32 indices and an int32 source.

export interface ParsedMesh {
  vertexCount: number;
  faceCount: number;
  positions: Float32Array; // xyz interleaved
  normals: Float32Array; // per-vertex nx ny nz interleaved
  faces: Uint32Array; // triples of vertex indices
  sources: Int32Array; // per-face mesh index
  tags: string[]; // from `comment mesh ...` header lines
}

const HEADER_END = "end_header\n";

export function parseMeshPly(buf: ArrayBuffer): ParsedMesh {
  const bytes = new Uint8Array(buf);
  const probeLen = Math.min(bytes.length, 64 * 1024);
  const headText = new TextDecoder("ascii").decode(bytes.subarray(0, probeLen));
  const end = headText.indexOf(HEADER_END);
  if (!headText.startsWith("ply") || end < 0) throw new Error("not a PLY header");
  const header = headText.slice(0, end);
  const dataStart = end + HEADER_END.length;

  let vertexCount = 0;
  let faceCount = 0;
  const tags: string[] = [];
  let binary = false;
  for (const line of header.split("\n")) {
    const tok = line.trim().split(/\s+/);
    if (tok[0] === "format") binary = tok[1] === "binary_little_endian";
    else if (tok[0] === "element" && tok[1] === "vertex") vertexCount = parseInt(tok[2], 10);
    else if (tok[0] === "element" && tok[1] === "face") faceCount = parseInt(tok[2], 10);
    else if (tok[0] === "comment" && tok[1] === "mesh" && tok[7] === "tag") tags.push(tok[8]);
  }
  if (!binary) throw new Error("expected binary little-endian PLY");

  const view = new DataView(buf);
  const positions = new Float32Array(vertexCount * 3);
  const normals = new Float32Array(vertexCount * 3);
  let off = dataStart;
  for (let i = 0; i < vertexCount; i++) {
    positions[3 * i] = view.getFloat32(off, true);
    positions[3 * i + 1] = view.getFloat32(off + 4, true);
    positions[3 * i + 2] = view.getFloat32(off + 8, true);
    normals[3 * i] = view.getFloat32(off + 12, true);
    normals[3 * i + 1] = view.getFloat32(off + 16, true);
    normals[3 * i + 2] = view.getFloat32(off + 20, true);
    off += 24;
  }
  const faces = new Uint32Array(faceCount * 3);
  const sources = new Int32Array(faceCount);
  for (let i = 0; i < faceCount; i++) {
    const n = view.getUint8(off);
    if (n !== 3) throw new Error(`face ${i} has ${n} vertices; expected triangles`);
    faces[3 * i] = view.getInt32(off + 1, true);
    faces[3 * i + 1] = view.getInt32(off + 5, true);
    faces[3 * i + 2] = view.getInt32(off + 9, true);
    sources[i] = view.getInt32(off + 13, true);
    off += 17;
  }
  return { vertexCount, faceCount, positions, normals, faces, sources, tags };
}

// Unique undirected edges for wireframe rendering.
export function wireframeEdges(mesh: ParsedMesh): Uint32Array {
  const seen = new Set<number>();
  const edges: number[] = [];
  const push = (a: number, b: number) => {
    const key = a < b ? a * mesh.vertexCount + b : b * mesh.vertexCount + a;
    if (!seen.has(key)) {
      seen.add(key);
      edges.push(a, b);
    }
  };
  for (let i = 0; i < mesh.faceCount; i++) {
    const a = mesh.faces[3 * i];
    const b = mesh.faces[3 * i + 1];
    const c = mesh.faces[3 * i + 2];
    push(a, b);
    push(b, c);
    push(c, a);
  }
  return Uint32Array.from(edges);
}
