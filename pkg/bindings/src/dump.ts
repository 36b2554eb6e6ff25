/** Binary token-dump serialization (magic STPRUNE1, little-endian). */

export interface DumpFrame {
  /** Row-major N*D token features. */
  features: Float32Array;
  n: number;
  d: number;
  /** Length-D aggregate (CLS) vector. */
  cls: Float32Array;
  /** Optional length-N raw attention weights. */
  attention?: Float32Array;
}

const MAGIC = "STPRUNE1";

export function encodeDump(frames: DumpFrame[]): Buffer {
  let size = 8 + 4;
  for (const f of frames) {
    size += 4 + 4 + 1 + 4 * (f.n * f.d + f.d + (f.attention ? f.n : 0));
  }
  const buf = Buffer.alloc(size);
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  buf.write(MAGIC, 0, "ascii");
  let off = 8;
  view.setUint32(off, frames.length, true);
  off += 4;
  for (const f of frames) {
    view.setUint32(off, f.n, true);
    view.setUint32(off + 4, f.d, true);
    view.setUint8(off + 8, f.attention ? 1 : 0);
    off += 9;
    off = writeFloats(view, off, f.features);
    off = writeFloats(view, off, f.cls);
    if (f.attention) {
      off = writeFloats(view, off, f.attention);
    }
  }
  return buf;
}

function writeFloats(view: DataView, off: number, values: Float32Array): number {
  for (let i = 0; i < values.length; i++) {
    view.setFloat32(off, values[i]!, true);
    off += 4;
  }
  return off;
}
