import { createHash } from "node:crypto";

/** Per-episode encoder: a batch of document texts in, one vector out. */
export type Encoder = (texts: string[]) => Float64Array;

export interface EncoderBinding {
  model: string;
  dimension: number;
  seed: number;
  encode: Encoder;
}

/**
 * Deterministic unit vector from a string key. Block j of 8 coordinates
 * comes from sha256(key + "|" + j): eight little-endian uint32 values
 * mapped to [-1, 1). Every step is an exactly-representable float64
 * operation, so this reproduces the consuming toolkit's hash vectors
 * bit-for-bit.
 */
export function hashUnitVector(key: string, dimension: number): Float64Array {
  if (!Number.isInteger(dimension) || dimension < 1) {
    throw new Error("dimension must be a positive integer");
  }
  const coords = new Float64Array(dimension);
  let pos = 0;
  let block = 0;
  while (pos < dimension) {
    const digest = createHash("sha256").update(`${key}|${block}`, "utf8").digest();
    for (let i = 0; i < 8 && pos < dimension; i++) {
      const w = digest.readUInt32LE(i * 4);
      coords[pos++] = 2.0 * (w / 4294967296.0) - 1.0;
    }
    block++;
  }
  let sumSquares = 0.0;
  for (let i = 0; i < dimension; i++) sumSquares += coords[i] * coords[i];
  const norm = Math.sqrt(sumSquares);
  for (let i = 0; i < dimension; i++) coords[i] /= norm;
  return coords;
}

function textDigest(texts: string[]): string {
  return createHash("sha256").update(texts.join("\n"), "utf8").digest("hex");
}

/** Text-only hash encoder; needs no model download, used for CI and tests. */
export function echoEncode(texts: string[], dimension: number, seed: number): Float64Array {
  return hashUnitVector(`${seed}|echo|${textDigest(texts)}`, dimension);
}

export function resolveBinding(model: string, dimension: number, seed: number): EncoderBinding {
  if (model === "echo") {
    return { model, dimension, seed, encode: (texts) => echoEncode(texts, dimension, seed) };
  }
  throw new Error(`unknown model ${JSON.stringify(model)}; available: echo`);
}
