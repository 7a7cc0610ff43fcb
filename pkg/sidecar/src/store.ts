import { readFileSync, writeFileSync } from "node:fs";

import type { EncoderBinding } from "./encoder.js";

const SPEV_MAGIC = "SPEV";

export interface EpisodeRecord {
  episode_id: string;
  texts: string[];
}

/** Episode JSONL as written by the consuming toolkit:
 * {episode_id, author_id, documents: [{doc_id, text, ...}]}. */
export function readEpisodes(path: string): EpisodeRecord[] {
  const episodes: EpisodeRecord[] = [];
  const lines = readFileSync(path, "utf8").split("\n");
  lines.forEach((line, index) => {
    if (!line.trim()) return;
    let record: unknown;
    try {
      record = JSON.parse(line);
    } catch {
      throw new Error(`episodes line ${index + 1}: invalid JSON`);
    }
    const rec = record as { episode_id?: unknown; documents?: unknown };
    if (typeof rec.episode_id !== "string" || !Array.isArray(rec.documents)) {
      throw new Error(`episodes line ${index + 1}: expected episode_id and documents`);
    }
    const texts = rec.documents.map((doc, d) => {
      const text = (doc as { text?: unknown }).text;
      if (typeof text !== "string") {
        throw new Error(`episodes line ${index + 1}: document ${d} has no text`);
      }
      return text;
    });
    episodes.push({ episode_id: rec.episode_id, texts });
  });
  return episodes;
}

export function writeJsonlStore(store: Map<string, Float64Array>, path: string): void {
  const lines = [...store.entries()].map(([id, vec]) =>
    JSON.stringify({ episode_id: id, vector: Array.from(vec) }),
  );
  writeFileSync(path, lines.map((l) => l + "\n").join(""), "utf8");
}

/** Binary store: "SPEV", u32 LE dimension, then per record
 * u32 LE id-length + UTF-8 id + dimension float32 LE coordinates. */
export function writeSpevStore(store: Map<string, Float64Array>, path: string): void {
  const dims = new Set([...store.values()].map((v) => v.length));
  if (dims.size > 1) throw new Error("mixed dimensions in vector store");
  const dimension = dims.size === 1 ? [...dims][0] : 0;
  const parts: Buffer[] = [Buffer.from(SPEV_MAGIC, "ascii")];
  const header = Buffer.alloc(4);
  header.writeUInt32LE(dimension);
  parts.push(header);
  for (const [id, vec] of store) {
    const encoded = Buffer.from(id, "utf8");
    const lenBuf = Buffer.alloc(4);
    lenBuf.writeUInt32LE(encoded.length);
    const coords = Buffer.alloc(4 * vec.length);
    vec.forEach((x, i) => coords.writeFloatLE(Math.fround(x), i * 4));
    parts.push(lenBuf, encoded, coords);
  }
  writeFileSync(path, Buffer.concat(parts));
}

export function exportVectors(
  binding: EncoderBinding,
  episodesPath: string,
  outPath: string,
  binary: boolean,
): number {
  const store = new Map<string, Float64Array>();
  for (const episode of readEpisodes(episodesPath)) {
    if (store.has(episode.episode_id)) {
      throw new Error(`duplicate episode_id ${JSON.stringify(episode.episode_id)}`);
    }
    store.set(episode.episode_id, binding.encode(episode.texts));
  }
  if (binary) {
    writeSpevStore(store, outPath);
  } else {
    writeJsonlStore(store, outPath);
  }
  return store.size;
}
