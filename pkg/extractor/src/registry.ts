/** Dataset and encoder registries: which frozen checkpoint embeds which
 * benchmark, the embedding width delivered to the pipeline, and how splits
 * are tagged. */

export type DatasetId = "sst2g" | "20ng" | "mnist" | "cifar10" | "msc17";
export type Modality = "text" | "image" | "dual";

export interface EncoderInfo {
  id: string;
  checkpoint: string;
  modality: Modality;
  /** raw embedding width per item (per tower for dual encoders) */
  rawDim: number;
  /** width delivered to the pipeline after any within-tower pooling */
  outputDim: number;
  /** boundary between towers in the output (0 = single tower) */
  towerBoundary: number;
  /** 2:1 within-tower pooling applied before concatenation */
  pooled: boolean;
  imageSize?: number;
}

export interface DatasetInfo {
  id: DatasetId;
  modality: Modality;
  nClasses: number;
  officialVal: boolean;
  maxSeqLen?: 128 | 256;
  encoder: EncoderInfo;
  /** image-caption pairing: each positive paired with one hard negative */
  paired: boolean;
}

const MODERNBERT: EncoderInfo = {
  id: "modernbert-base",
  checkpoint: "answerdotai/ModernBERT-base",
  modality: "text",
  rawDim: 768,
  outputDim: 768,
  towerBoundary: 0,
  pooled: false,
};

const DINOV2: EncoderInfo = {
  id: "dinov2-vitl14",
  checkpoint: "facebook/dinov2-large",
  modality: "image",
  rawDim: 1024,
  outputDim: 1024,
  towerBoundary: 0,
  pooled: false,
  imageSize: 224,
};

const SIGLIP: EncoderInfo = {
  id: "siglip-so400m",
  checkpoint: "google/siglip-so400m-patch14-384",
  modality: "dual",
  rawDim: 1152, // per tower, unit-normalized
  outputDim: 1152, // 576 pooled image + 576 pooled text
  towerBoundary: 576,
  pooled: true,
};

export const DATASETS: Record<DatasetId, DatasetInfo> = {
  sst2g: {
    id: "sst2g",
    modality: "text",
    nClasses: 2,
    officialVal: true,
    maxSeqLen: 128,
    encoder: MODERNBERT,
    paired: false,
  },
  "20ng": {
    id: "20ng",
    modality: "text",
    nClasses: 20,
    officialVal: false,
    maxSeqLen: 256,
    encoder: MODERNBERT,
    paired: false,
  },
  mnist: {
    id: "mnist",
    modality: "image",
    nClasses: 10,
    officialVal: false,
    encoder: DINOV2,
    paired: false,
  },
  cifar10: {
    id: "cifar10",
    modality: "image",
    nClasses: 10,
    officialVal: false,
    encoder: DINOV2,
    paired: false,
  },
  msc17: {
    id: "msc17",
    modality: "dual",
    nClasses: 2,
    officialVal: true,
    maxSeqLen: 256,
    encoder: SIGLIP,
    paired: true,
  },
};

export function datasetInfo(id: string): DatasetInfo {
  const info = DATASETS[id as DatasetId];
  if (!info) {
    throw new Error(`unknown dataset '${id}'; known: ${Object.keys(DATASETS).join(", ")}`);
  }
  return info;
}
