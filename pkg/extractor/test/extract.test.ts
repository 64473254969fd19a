import { mkdtempSync } from "node:fs";
import { promises as fs } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { readEmbd, SPLIT_TEST, SPLIT_TRAIN, SPLIT_VAL } from "../src/embd.js";
import { MockEncoder, makeEncoder } from "../src/encoders.js";
import { extract } from "../src/extract.js";
import { pool2to1 } from "../src/pool.js";
import { datasetInfo } from "../src/registry.js";

const tmp = mkdtempSync(join(tmpdir(), "extractor-"));

async function smoke(dataset: string, limit = 16) {
  const out = join(tmp, `${dataset}-${limit}.embd`);
  await extract({ dataset, outputPath: out, limit }, new MockEncoder());
  return { out, ds: await readEmbd(out) };
}

describe("pooling", () => {
  it("averages adjacent pairs within towers", () => {
    const row = Float32Array.from([1, 3, 10, 20]);
    expect([...pool2to1(row, 2)]).toEqual([2, 15]);
    expect([...pool2to1(Float32Array.from([1, 3, 5, 7]))]).toEqual([2, 6]);
  });
  it("rejects odd tower widths", () => {
    expect(() => pool2to1(Float32Array.from([1, 2, 3]))).toThrow(/odd/);
  });
});

describe("16-row smoke extractions", () => {
  it("sst2g: 768-wide ModernBERT rows", async () => {
    const { ds } = await smoke("sst2g");
    expect(ds.rows.length).toBe(16);
    expect(ds.rows[0].length).toBe(768);
    expect(ds.nClasses).toBe(2);
    expect(ds.towerBoundary).toBe(0);
  });

  it("20ng: 768-wide rows, truncation keeps labels contiguous", async () => {
    const { ds } = await smoke("20ng");
    expect(ds.rows[0].length).toBe(768);
    // 16 rows cannot reach all 20 topics; the header declares the observed range
    expect(ds.nClasses).toBeLessThanOrEqual(20);
    const seen = new Set(ds.labels);
    for (let c = 0; c < ds.nClasses; c++) expect(seen.has(c)).toBe(true);
  });

  it("mnist and cifar10: 1024-wide DINOv2 rows, K=10", async () => {
    for (const dataset of ["mnist", "cifar10"]) {
      const { ds } = await smoke(dataset);
      expect(ds.rows[0].length).toBe(1024);
      expect(ds.nClasses).toBe(10);
    }
  });

  it("msc17: pooled 576+576 SigLIP pairs with alternating match labels", async () => {
    const { ds } = await smoke("msc17");
    expect(ds.rows[0].length).toBe(1152);
    expect(ds.towerBoundary).toBe(576);
    expect(ds.nClasses).toBe(2);
    // pairs arrive positive-then-negative, sharing the image embedding
    expect(ds.labels.slice(0, 6)).toEqual([1, 0, 1, 0, 1, 0]);
    const pos = ds.rows[0];
    const neg = ds.rows[1];
    for (let j = 0; j < 576; j++) expect(pos[j]).toBe(neg[j]); // image tower shared
    let differs = false;
    for (let j = 576; j < 1152; j++) if (pos[j] !== neg[j]) differs = true;
    expect(differs).toBe(true); // text tower differs
  });

  it("every split is represented", async () => {
    for (const dataset of ["sst2g", "mnist", "msc17"]) {
      const { ds } = await smoke(dataset, 20);
      const tags = new Set(ds.splits);
      expect(tags.has(SPLIT_TRAIN)).toBe(true);
      expect(tags.has(SPLIT_VAL)).toBe(true);
      expect(tags.has(SPLIT_TEST)).toBe(true);
    }
  });

  it("10% of training items are held out when no official validation exists", async () => {
    const { ds } = await smoke("mnist", 200);
    const nVal = ds.splits.filter((s) => s === SPLIT_VAL).length;
    const nTrain = ds.splits.filter((s) => s === SPLIT_TRAIN).length;
    expect(nVal).toBeGreaterThan(0);
    expect(Math.abs(nVal / (nVal + nTrain) - 0.1)).toBeLessThan(0.03);
  });
});

describe("determinism and provenance", () => {
  it("re-extraction yields identical bytes", async () => {
    const a = join(tmp, "a.embd");
    const b = join(tmp, "b.embd");
    await extract({ dataset: "mnist", outputPath: a, limit: 16 }, new MockEncoder());
    await extract({ dataset: "mnist", outputPath: b, limit: 16 }, new MockEncoder());
    const [ba, bb] = await Promise.all([fs.readFile(a), fs.readFile(b)]);
    expect(ba.equals(bb)).toBe(true);
  });

  it("writes a sidecar with the extraction settings", async () => {
    const out = join(tmp, "meta.embd");
    await extract({ dataset: "sst2g", outputPath: out, limit: 8 }, new MockEncoder());
    const meta = JSON.parse(await fs.readFile(`${out}.meta.json`, "utf8"));
    expect(meta.encoder).toBe("modernbert-base");
    expect(meta.checkpoint).toBe("answerdotai/ModernBERT-base");
    expect(meta.max_seq_len).toBe(128);
    expect(meta.backend).toBe("mock");
  });

  it("manifest items replace the built-in stream", async () => {
    const manifest = join(tmp, "items.jsonl");
    await fs.writeFile(
      manifest,
      [
        JSON.stringify({ key: "a", label: 0, split: 0 }),
        JSON.stringify({ key: "b", label: 1, split: 2 }),
      ].join("\n")
    );
    const out = join(tmp, "manifest.embd");
    await extract({ dataset: "sst2g", outputPath: out, manifest }, new MockEncoder());
    const ds = await readEmbd(out);
    expect(ds.rows.length).toBe(2);
    expect(ds.labels).toEqual([0, 1]);
    expect(ds.splits).toEqual([0, 2]);
  });
});

describe("error paths", () => {
  it("unknown dataset", async () => {
    await expect(
      extract({ dataset: "unknown", outputPath: join(tmp, "x.embd") }, new MockEncoder())
    ).rejects.toThrow(/unknown dataset/);
  });

  it("unknown backend name", () => {
    expect(() => makeEncoder("nope")).toThrow(/unknown encoder backend/);
  });

  it("transformers backend reports checkpoint unavailability offline", async () => {
    const enc = makeEncoder("transformers");
    const info = datasetInfo("sst2g");
    await expect(enc.embed("text", info.encoder)).rejects.toThrow(/checkpoint unavailable/);
  });
});
