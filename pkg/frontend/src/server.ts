/**
 * HTTP surface: POST /job submits an artifact bundle for execution and
 * returns an id; GET /result/{id} returns pixels and pass metadata once the
 * job ran.  GET /health reports whether a real WebGL context is available
 * and its effective readback precision.
 */
import * as http from "node:http";

import { acquireRealContext, MinimalGL } from "./gl.js";
import { JobQueue } from "./queue.js";
import { GlRunner } from "./runner.js";
import { HarnessJob } from "./types.js";

export interface HarnessOptions {
  gl?: MinimalGL;          // injected context (tests); otherwise headless-gl
  width?: number;
  height?: number;
}

export interface Harness {
  server: http.Server;
  queue: JobQueue | null;
  precision: string | null;
  close(): Promise<void>;
}

export async function createHarness(options: HarnessOptions = {}): Promise<Harness> {
  const gl = options.gl ?? await acquireRealContext(options.width ?? 1024, options.height ?? 1024);
  const runner = gl ? new GlRunner(gl) : null;
  const queue = runner ? new JobQueue(runner) : null;

  const server = http.createServer((req, res) => {
    void route(req, res);
  });

  async function route(req: http.IncomingMessage, res: http.ServerResponse): Promise<void> {
    const url = req.url ?? "/";
    try {
      if (req.method === "GET" && url === "/health") {
        return json(res, 200, {
          ok: true,
          webgl: runner !== null,
          precision: runner?.precision ?? null,
        });
      }
      if (req.method === "POST" && url === "/job") {
        if (!queue) {
          return json(res, 503, { error: "no WebGL context available" });
        }
        const body = await readBody(req);
        const parsed = HarnessJob.safeParse(JSON.parse(body));
        if (!parsed.success) {
          return json(res, 422, { error: parsed.error.message });
        }
        return json(res, 200, { id: queue.submit(parsed.data) });
      }
      const match = url.match(/^\/result\/([^/]+)$/);
      if (req.method === "GET" && match) {
        if (!queue) {
          return json(res, 503, { error: "no WebGL context available" });
        }
        await queue.drain();
        const outcome = queue.result(match[1]);
        if (!outcome) {
          return json(res, 404, { error: `unknown job ${match[1]}` });
        }
        return json(res, 200, outcome);
      }
      return json(res, 404, { error: `no such endpoint: ${req.method} ${url}` });
    } catch (err) {
      return json(res, 500, { error: err instanceof Error ? err.message : String(err) });
    }
  }

  return {
    server,
    queue,
    precision: runner?.precision ?? null,
    close: () => new Promise((resolve) => server.close(() => resolve())),
  };
}

function json(res: http.ServerResponse, status: number, body: unknown): void {
  const text = JSON.stringify(body);
  res.writeHead(status, { "content-type": "application/json" });
  res.end(text);
}

function readBody(req: http.IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf8")));
    req.on("error", reject);
  });
}

const isMain = process.argv[1]?.endsWith("server.js");
if (isMain) {
  const port = Number(process.env.PORT ?? 8713);
  void createHarness().then((harness) => {
    if (!harness.queue) {
      console.error("warning: no WebGL context; /job will return 503");
    } else {
      console.error(`webgl ready, readback precision: ${harness.precision}`);
    }
    harness.server.listen(port, () => {
      console.error(`harness listening on :${port}`);
    });
  });
}
