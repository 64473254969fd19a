/** Encoder backends. The mock backend maps inputs to deterministic
 * pseudo-random vectors (frozen by construction) so the pipeline can be
 * exercised offline; the transformers backend runs the real frozen
 * checkpoints and needs network access for downloads. */

import { EncoderInfo } from "./registry.js";

export interface Encoder {
  /** embed one item; for dual encoders `tower` selects image or text */
  embed(key: string, info: EncoderInfo, tower?: "image" | "text"): Promise<Float32Array>;
  readonly name: string;
}

function fnv1a32(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Deterministic stand-in encoder: unit-normalized gaussian-ish vectors
 * keyed by (item, encoder, tower). Frozen by construction. */
export class MockEncoder implements Encoder {
  readonly name = "mock";

  async embed(key: string, info: EncoderInfo, tower?: "image" | "text"): Promise<Float32Array> {
    const rand = mulberry32(fnv1a32(`${info.id}|${tower ?? "single"}|${key}`));
    const out = new Float32Array(info.rawDim);
    for (let j = 0; j < info.rawDim; j += 2) {
      // Box-Muller; consumes two uniforms per pair
      const u = Math.max(rand(), 1e-12);
      const v = rand();
      const r = Math.sqrt(-2 * Math.log(u));
      out[j] = r * Math.cos(2 * Math.PI * v);
      if (j + 1 < info.rawDim) out[j + 1] = r * Math.sin(2 * Math.PI * v);
    }
    let norm = 0;
    for (const x of out) norm += x * x;
    norm = Math.sqrt(norm) || 1;
    for (let j = 0; j < out.length; j++) out[j] /= norm;
    return out;
  }
}

/** Real inference via transformers.js; weights stay frozen (inference only).
 * Fails with a clear message when the package or the checkpoint is not
 * available (e.g. offline). */
export class TransformersEncoder implements Encoder {
  readonly name = "transformers";
  private pipelines = new Map<string, unknown>();

  async embed(key: string, info: EncoderInfo, tower?: "image" | "text"): Promise<Float32Array> {
    let mod: any;
    try {
      mod = await import("@xenova/transformers" as string);
    } catch {
      throw new Error(
        "checkpoint unavailable: the 'transformers' backend needs the " +
          "@xenova/transformers package and network access; use --encoder mock offline"
      );
    }
    const task = info.modality === "text" || tower === "text" ? "feature-extraction" : "image-feature-extraction";
    const cacheKey = `${info.checkpoint}|${task}`;
    if (!this.pipelines.has(cacheKey)) {
      this.pipelines.set(cacheKey, await mod.pipeline(task, info.checkpoint));
    }
    const pipe: any = this.pipelines.get(cacheKey);
    const result = await pipe(key, { pooling: "cls", normalize: info.modality === "dual" });
    return Float32Array.from(result.data as Iterable<number>);
  }
}

export function makeEncoder(name: string): Encoder {
  if (name === "mock") return new MockEncoder();
  if (name === "transformers") return new TransformersEncoder();
  throw new Error(`unknown encoder backend '${name}' (use 'mock' or 'transformers')`);
}
