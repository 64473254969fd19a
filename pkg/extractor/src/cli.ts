#!/usr/bin/env node
/** CLI mirroring the extraction spec:
 *
 *   extract --dataset mnist --out mnist.embd [--limit 16] [--encoder mock]
 *           [--max-seq-len 128|256] [--image-size 224] [--manifest items.jsonl]
 */

import { parseArgs } from "node:util";

import { makeEncoder } from "./encoders.js";
import { extract } from "./extract.js";
import { DATASETS } from "./registry.js";

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      dataset: { type: "string" },
      out: { type: "string" },
      limit: { type: "string", default: "0" },
      encoder: { type: "string", default: "mock" },
      "max-seq-len": { type: "string" },
      "image-size": { type: "string" },
      manifest: { type: "string" },
      help: { type: "boolean", default: false },
    },
  });
  if (values.help || !values.dataset || !values.out) {
    console.log(
      `usage: extract --dataset <${Object.keys(DATASETS).join("|")}> --out <file.embd>\n` +
        "  [--limit N] [--encoder mock|transformers] [--max-seq-len 128|256]\n" +
        "  [--image-size 224] [--manifest items.jsonl]"
    );
    return values.help ? 0 : 2;
  }
  try {
    const ds = await extract(
      {
        dataset: values.dataset,
        outputPath: values.out,
        limit: Number(values.limit),
        backend: values.encoder as "mock" | "transformers",
        maxSeqLen: values["max-seq-len"]
          ? (Number(values["max-seq-len"]) as 128 | 256)
          : undefined,
        imageSize: values["image-size"] ? Number(values["image-size"]) : undefined,
        manifest: values.manifest,
      },
      makeEncoder(values.encoder ?? "mock")
    );
    console.log(
      `wrote ${values.out}: n=${ds.rows.length} d=${ds.rows[0].length} ` +
        `K=${ds.nClasses} boundary=${ds.towerBoundary}`
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

main().then((code) => process.exit(code));
