import type { GamapGrid } from "./types";

const MAGIC = "GAMAP1";
const HEADER_BYTES = MAGIC.length + 8;

/** Parse a GAMAP1 payload: magic, LE u32 width, LE u32 height, LE f32 grid. */
export function parseGamap(buffer: ArrayBuffer): GamapGrid {
  const bytes = new Uint8Array(buffer);
  if (bytes.length < HEADER_BYTES) {
    throw new Error("GAMAP1 payload too short");
  }
  for (let i = 0; i < MAGIC.length; i++) {
    if (bytes[i] !== MAGIC.charCodeAt(i)) {
      throw new Error("not a GAMAP1 payload");
    }
  }
  const view = new DataView(buffer);
  const width = view.getUint32(MAGIC.length, true);
  const height = view.getUint32(MAGIC.length + 4, true);
  const expected = HEADER_BYTES + 4 * width * height;
  if (bytes.length !== expected) {
    throw new Error(`GAMAP1 payload has ${bytes.length} bytes, expected ${expected}`);
  }
  const values = new Float32Array(width * height);
  for (let i = 0; i < values.length; i++) {
    values[i] = view.getFloat32(HEADER_BYTES + 4 * i, true);
  }
  return { width, height, values };
}

/** Serialize a grid back to GAMAP1 bytes (used by tests as the round-trip oracle). */
export function gamapBytes(grid: GamapGrid): ArrayBuffer {
  const buffer = new ArrayBuffer(HEADER_BYTES + 4 * grid.values.length);
  const bytes = new Uint8Array(buffer);
  for (let i = 0; i < MAGIC.length; i++) bytes[i] = MAGIC.charCodeAt(i);
  const view = new DataView(buffer);
  view.setUint32(MAGIC.length, grid.width, true);
  view.setUint32(MAGIC.length + 4, grid.height, true);
  grid.values.forEach((v, i) => view.setFloat32(HEADER_BYTES + 4 * i, v, true));
  return buffer;
}

/** Cell with the maximum value (first occurrence wins, row-major). */
export function argmaxCell(grid: GamapGrid): { x: number; y: number; value: number } {
  let best = 0;
  for (let i = 1; i < grid.values.length; i++) {
    if (grid.values[i] > grid.values[best]) best = i;
  }
  return { x: best % grid.width, y: Math.floor(best / grid.width), value: grid.values[best] };
}
