import type { Server } from "node:http";
import { afterEach, describe, expect, it } from "vitest";

import { echoEncode, resolveBinding, type EncoderBinding } from "../src/encoder.js";
import { createApp } from "../src/server.js";

let server: Server | undefined;

function listen(binding: EncoderBinding): Promise<string> {
  server = createApp(binding);
  return new Promise((resolve) => {
    server!.listen(0, "127.0.0.1", () => {
      const address = server!.address();
      if (typeof address === "object" && address) resolve(`http://127.0.0.1:${address.port}`);
    });
  });
}

afterEach(() => {
  server?.close();
  server = undefined;
});

describe("GET /health", () => {
  it("reports the bound model and dimension", async () => {
    const base = await listen(resolveBinding("echo", 32, 0));
    const res = await fetch(`${base}/health`);
    expect(res.status).toBe(200);
    expect(await res.json()).toEqual({ status: "ok", model: "echo", dimension: 32 });
  });
});

describe("POST /embed", () => {
  it("returns one unit vector per episode, order preserved", async () => {
    const base = await listen(resolveBinding("echo", 16, 0));
    const texts = [["first doc", "second doc"], ["other"]];
    const res = await fetch(`${base}/embed`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ texts }),
    });
    expect(res.status).toBe(200);
    const { vectors } = (await res.json()) as { vectors: number[][] };
    expect(vectors).toHaveLength(2);
    for (const [i, vec] of vectors.entries()) {
      expect(vec).toHaveLength(16);
      const norm = Math.sqrt(vec.reduce((s, x) => s + x * x, 0));
      expect(Math.abs(norm - 1.0)).toBeLessThan(1e-4);
      const expected = Array.from(echoEncode(texts[i], 16, 0));
      expect(vec).toEqual(expected);
    }
  });

  it("rejects malformed JSON with 400 and an error body", async () => {
    const base = await listen(resolveBinding("echo", 16, 0));
    const res = await fetch(`${base}/embed`, { method: "POST", body: "{not json" });
    expect(res.status).toBe(400);
    const body = (await res.json()) as { error: string };
    expect(body.error).toMatch(/JSON/);
  });

  it("rejects a texts field of the wrong shape with 400", async () => {
    const base = await listen(resolveBinding("echo", 16, 0));
    const res = await fetch(`${base}/embed`, {
      method: "POST",
      body: JSON.stringify({ texts: ["flat string, not an episode"] }),
    });
    expect(res.status).toBe(400);
    expect(((await res.json()) as { error: string }).error).toMatch(/string arrays/);
  });

  it("maps encoder failures to 500 with an error body", async () => {
    const broken: EncoderBinding = {
      model: "echo",
      dimension: 16,
      seed: 0,
      encode: () => {
        throw new Error("checkpoint exploded");
      },
    };
    const base = await listen(broken);
    const res = await fetch(`${base}/embed`, {
      method: "POST",
      body: JSON.stringify({ texts: [["x"]] }),
    });
    expect(res.status).toBe(500);
    expect(((await res.json()) as { error: string }).error).toMatch(/checkpoint exploded/);
  });

  it("returns 404 with an error body for unknown routes", async () => {
    const base = await listen(resolveBinding("echo", 16, 0));
    const res = await fetch(`${base}/nope`);
    expect(res.status).toBe(404);
    expect((await res.json()) as { error: string }).toHaveProperty("error");
  });
});
