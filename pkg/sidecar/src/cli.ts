import { parseArgs } from "node:util";

import { resolveBinding } from "./encoder.js";
import { createApp } from "./server.js";
import { exportVectors } from "./store.js";

const USAGE = `usage:
  cli.js serve  --model echo --port PORT [--dimension D] [--seed S]
  cli.js export --model echo --episodes FILE --out FILE [--dimension D] [--seed S] [--binary]`;

function fail(message: string): never {
  process.stderr.write(`error: ${message}\n${USAGE}\n`);
  process.exit(1);
}

function main(): void {
  const [command, ...rest] = process.argv.slice(2);
  if (command !== "serve" && command !== "export") {
    fail(`expected 'serve' or 'export', got ${JSON.stringify(command ?? "")}`);
  }
  const { values } = parseArgs({
    args: rest,
    options: {
      model: { type: "string", default: "echo" },
      dimension: { type: "string", default: "512" },
      seed: { type: "string", default: "0" },
      port: { type: "string" },
      episodes: { type: "string" },
      out: { type: "string" },
      binary: { type: "boolean", default: false },
    },
  });
  const dimension = Number(values.dimension);
  const seed = Number(values.seed);
  if (!Number.isInteger(dimension) || dimension < 1) fail("--dimension must be a positive integer");
  if (!Number.isInteger(seed)) fail("--seed must be an integer");
  const binding = resolveBinding(values.model as string, dimension, seed);

  if (command === "serve") {
    const port = Number(values.port);
    if (!Number.isInteger(port) || port < 0 || port > 65535) fail("--port is required (0-65535)");
    const server = createApp(binding);
    server.listen(port, "127.0.0.1", () => {
      const address = server.address();
      const bound = typeof address === "object" && address ? address.port : port;
      process.stdout.write(
        JSON.stringify({ status: "listening", port: bound, model: binding.model, dimension }) + "\n",
      );
    });
    return;
  }

  if (!values.episodes || !values.out) fail("export needs --episodes and --out");
  try {
    const count = exportVectors(binding, values.episodes, values.out, Boolean(values.binary));
    process.stdout.write(JSON.stringify({ exported: count, out: values.out }) + "\n");
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    process.exit(1);
  }
}

main();
