/**
 * EMBD binary format (little-endian), the wire format consumed by the
 * symsur pipeline:
 *
 *   magic "EMBD" | u16 version=1 | u64 n | u32 d | u32 K | u32 towerBoundary
 *   n*d float32 row-major matrix | n u32 labels | n u8 split tags
 *
 * Split tags: 0 train, 1 val, 2 test. towerBoundary 0 means a single tower.
 */

import { promises as fs } from "node:fs";

export const SPLIT_TRAIN = 0;
export const SPLIT_VAL = 1;
export const SPLIT_TEST = 2;

const MAGIC = "EMBD";
const VERSION = 1;
const HEADER_BYTES = 4 + 2 + 8 + 4 + 4 + 4;

export interface EmbdDataset {
  rows: Float32Array[];
  labels: number[];
  splits: number[];
  nClasses: number;
  towerBoundary: number;
}

export function encodeEmbd(ds: EmbdDataset): Buffer {
  const n = ds.rows.length;
  if (ds.labels.length !== n || ds.splits.length !== n) {
    throw new Error("labels/splits length must match row count");
  }
  const d = n > 0 ? ds.rows[0].length : 0;
  for (const row of ds.rows) {
    if (row.length !== d) throw new Error("ragged rows");
  }
  for (const y of ds.labels) {
    if (!Number.isInteger(y) || y < 0 || y >= ds.nClasses) {
      throw new Error(`label ${y} outside [0, ${ds.nClasses})`);
    }
  }
  for (const s of ds.splits) {
    if (![SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST].includes(s)) {
      throw new Error(`bad split tag ${s}`);
    }
  }
  const buf = Buffer.alloc(HEADER_BYTES + n * d * 4 + n * 4 + n);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt16LE(VERSION, 4);
  buf.writeBigUInt64LE(BigInt(n), 6);
  buf.writeUInt32LE(d, 14);
  buf.writeUInt32LE(ds.nClasses, 18);
  buf.writeUInt32LE(ds.towerBoundary, 22);
  let off = HEADER_BYTES;
  for (const row of ds.rows) {
    for (const v of row) {
      buf.writeFloatLE(v, off);
      off += 4;
    }
  }
  for (const y of ds.labels) {
    buf.writeUInt32LE(y, off);
    off += 4;
  }
  for (const s of ds.splits) {
    buf.writeUInt8(s, off);
    off += 1;
  }
  return buf;
}

export function decodeEmbd(buf: Buffer): EmbdDataset {
  if (buf.length < HEADER_BYTES || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error("not an EMBD file");
  }
  const version = buf.readUInt16LE(4);
  if (version !== VERSION) throw new Error(`unsupported version ${version}`);
  const n = Number(buf.readBigUInt64LE(6));
  const d = buf.readUInt32LE(14);
  const nClasses = buf.readUInt32LE(18);
  const towerBoundary = buf.readUInt32LE(22);
  const expected = HEADER_BYTES + n * d * 4 + n * 4 + n;
  if (buf.length !== expected) {
    throw new Error(`file size ${buf.length} != expected ${expected}`);
  }
  let off = HEADER_BYTES;
  const rows: Float32Array[] = [];
  for (let i = 0; i < n; i++) {
    const row = new Float32Array(d);
    for (let j = 0; j < d; j++) {
      row[j] = buf.readFloatLE(off);
      off += 4;
    }
    rows.push(row);
  }
  const labels: number[] = [];
  for (let i = 0; i < n; i++) {
    labels.push(buf.readUInt32LE(off));
    off += 4;
  }
  const splits: number[] = [];
  for (let i = 0; i < n; i++) {
    splits.push(buf.readUInt8(off));
    off += 1;
  }
  return { rows, labels, splits, nClasses, towerBoundary };
}

export async function writeEmbd(path: string, ds: EmbdDataset): Promise<void> {
  await fs.writeFile(path, encodeEmbd(ds));
}

export async function readEmbd(path: string): Promise<EmbdDataset> {
  return decodeEmbd(await fs.readFile(path));
}
