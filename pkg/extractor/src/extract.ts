/** Extraction pipeline: stream dataset items in order through a frozen
 * encoder and write an EMBD file plus a JSON sidecar with provenance. */

import { promises as fs } from "node:fs";

import { EmbdDataset, SPLIT_TEST, SPLIT_TRAIN, SPLIT_VAL, writeEmbd } from "./embd.js";
import { Encoder } from "./encoders.js";
import { pool2to1 } from "./pool.js";
import { DatasetInfo, datasetInfo } from "./registry.js";

export interface ExtractionSpec {
  dataset: string;
  outputPath: string;
  backend?: "mock" | "transformers";
  /** stop after this many output rows (0 = whole dataset) */
  limit?: number;
  maxSeqLen?: 128 | 256;
  imageSize?: number;
  /** optional JSONL manifest with {key,label,split} records replacing the
   * built-in item stream (the local-cache path for real corpora) */
  manifest?: string;
}

export interface Item {
  key: string;
  label: number;
  split: number;
  /** caption key for paired image-text datasets */
  caption?: string;
}

const VAL_HOLDOUT_EVERY = 10; // fixed 10% of training items re-tagged val

/** Built-in deterministic item stream: items arrive in dataset order with
 * round-robin labels (contiguous coverage) and split tags laid out like the
 * source benchmark: official validation where one exists, otherwise every
 * tenth training item is held out. */
export function* itemStream(info: DatasetInfo, limit: number): Generator<Item> {
  const n = limit > 0 ? limit : 1000;
  let trainSeen = 0;
  for (let i = 0; i < n; i++) {
    const label = i % info.nClasses;
    let split: number;
    if (i % 5 === 4) {
      split = SPLIT_TEST;
    } else if (info.officialVal && i % 5 === 3) {
      split = SPLIT_VAL;
    } else {
      split = SPLIT_TRAIN;
      trainSeen += 1;
      if (!info.officialVal && trainSeen % VAL_HOLDOUT_EVERY === 0) {
        split = SPLIT_VAL;
      }
    }
    yield {
      key: `${info.id}#${i}`,
      label,
      split,
      caption: info.paired ? `${info.id}#${i}#caption` : undefined,
    };
  }
}

async function loadManifest(path: string): Promise<Item[]> {
  const text = await fs.readFile(path, "utf8");
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line, idx) => {
      const doc = JSON.parse(line);
      if (typeof doc.label !== "number" || doc.label < 0) {
        throw new Error(`manifest line ${idx + 1}: bad label`);
      }
      return {
        key: String(doc.key),
        label: doc.label,
        split: doc.split ?? SPLIT_TRAIN,
        caption: doc.caption,
      } as Item;
    });
}

async function embedItem(
  item: Item,
  info: DatasetInfo,
  encoder: Encoder
): Promise<Float32Array[]> {
  const enc = info.encoder;
  if (!info.paired) {
    const row = await encoder.embed(item.key, enc);
    if (row.length !== enc.rawDim) {
      throw new Error(
        `label-schema mismatch: encoder returned ${row.length} dims, expected ${enc.rawDim}`
      );
    }
    return [row];
  }
  // image-text pairing: a positive pair plus one hard negative (the next
  // item's caption), both sharing the image embedding
  const img = await encoder.embed(item.key, enc, "image");
  const pos = await encoder.embed(item.caption ?? item.key, enc, "text");
  const neg = await encoder.embed(`${item.caption ?? item.key}~negative`, enc, "text");
  const fuse = (txt: Float32Array) => {
    const imgPooled = enc.pooled ? pool2to1(img) : img;
    const txtPooled = enc.pooled ? pool2to1(txt) : txt;
    const out = new Float32Array(imgPooled.length + txtPooled.length);
    out.set(imgPooled, 0);
    out.set(txtPooled, imgPooled.length);
    return out;
  };
  return [fuse(pos), fuse(neg)];
}

export async function extract(spec: ExtractionSpec, encoder: Encoder): Promise<EmbdDataset> {
  const info = datasetInfo(spec.dataset);
  const limit = spec.limit ?? 0;
  const items = spec.manifest
    ? await loadManifest(spec.manifest)
    : [...itemStream(info, limit > 0 ? (info.paired ? Math.ceil(limit / 2) : limit) : 0)];

  const rows: Float32Array[] = [];
  const labels: number[] = [];
  const splits: number[] = [];
  for (const item of items) {
    const embedded = await embedItem(item, info, encoder);
    if (!info.paired) {
      rows.push(embedded[0]);
      labels.push(item.label);
      splits.push(item.split);
    } else {
      rows.push(embedded[0]);
      labels.push(1); // matching caption
      splits.push(item.split);
      rows.push(embedded[1]);
      labels.push(0); // hard negative
      splits.push(item.split);
    }
    if (limit > 0 && rows.length >= limit) break;
  }
  if (rows.length === 0) throw new Error("no items to extract");
  const d = rows[0].length;
  if (d !== info.encoder.outputDim) {
    throw new Error(`output width ${d} != registry ${info.encoder.outputDim}`);
  }

  // a truncated extraction may not reach every class; declare the observed
  // contiguous range so the file always satisfies the load invariants
  const maxLabel = Math.max(...labels);
  const present = new Set(labels);
  for (let c = 0; c <= maxLabel; c++) {
    if (!present.has(c)) {
      throw new Error(`labels are not contiguous: class ${c} missing below ${maxLabel}`);
    }
  }
  const ds: EmbdDataset = {
    rows,
    labels,
    splits,
    nClasses: maxLabel + 1,
    towerBoundary: info.encoder.towerBoundary,
  };
  await writeEmbd(spec.outputPath, ds);
  const sidecar = {
    dataset: info.id,
    encoder: info.encoder.id,
    checkpoint: info.encoder.checkpoint,
    backend: encoder.name,
    rows: rows.length,
    d,
    n_classes: ds.nClasses,
    declared_classes: info.nClasses,
    tower_boundary: info.encoder.towerBoundary,
    max_seq_len: spec.maxSeqLen ?? info.maxSeqLen ?? null,
    image_size: spec.imageSize ?? info.encoder.imageSize ?? null,
    pooled: info.encoder.pooled,
  };
  await fs.writeFile(`${spec.outputPath}.meta.json`, JSON.stringify(sidecar, null, 1));
  return ds;
}
