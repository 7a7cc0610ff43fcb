import { createServer, type IncomingMessage, type Server, type ServerResponse } from "node:http";

import type { EncoderBinding } from "./encoder.js";

const MAX_BODY_BYTES = 64 * 1024 * 1024;

function sendJson(res: ServerResponse, status: number, body: unknown): void {
  const payload = JSON.stringify(body);
  res.writeHead(status, {
    "content-type": "application/json",
    "content-length": Buffer.byteLength(payload),
  });
  res.end(payload);
}

function readBody(req: IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let size = 0;
    req.on("data", (chunk: Buffer) => {
      size += chunk.length;
      if (size > MAX_BODY_BYTES) {
        reject(new Error("request body too large"));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf8")));
    req.on("error", reject);
  });
}

/** {texts: [[doc strings per episode]]} or an explanation of the mismatch. */
function parseTexts(raw: string): string[][] {
  let body: unknown;
  try {
    body = JSON.parse(raw);
  } catch {
    throw new Error("body is not valid JSON");
  }
  if (typeof body !== "object" || body === null || !("texts" in body)) {
    throw new Error("body must be a JSON object with a 'texts' field");
  }
  const texts = (body as { texts: unknown }).texts;
  if (!Array.isArray(texts)) {
    throw new Error("'texts' must be an array of string arrays");
  }
  for (const episode of texts) {
    if (!Array.isArray(episode) || episode.some((t) => typeof t !== "string")) {
      throw new Error("'texts' must be an array of string arrays");
    }
  }
  return texts as string[][];
}

export function createApp(binding: EncoderBinding): Server {
  return createServer(async (req, res) => {
    try {
      if (req.method === "GET" && req.url === "/health") {
        sendJson(res, 200, { status: "ok", model: binding.model, dimension: binding.dimension });
        return;
      }
      if (req.method === "POST" && req.url === "/embed") {
        let texts: string[][];
        try {
          texts = parseTexts(await readBody(req));
        } catch (err) {
          sendJson(res, 400, { error: (err as Error).message });
          return;
        }
        let vectors: number[][];
        try {
          vectors = texts.map((episode) => Array.from(binding.encode(episode)));
        } catch (err) {
          sendJson(res, 500, { error: `inference failed: ${(err as Error).message}` });
          return;
        }
        sendJson(res, 200, { vectors });
        return;
      }
      sendJson(res, 404, { error: `no route for ${req.method} ${req.url}` });
    } catch (err) {
      sendJson(res, 500, { error: (err as Error).message });
    }
  });
}
