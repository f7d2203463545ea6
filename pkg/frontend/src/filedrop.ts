/**
 * File-drop mode for CI without networking: every `<name>.job.json` in the
 * input directory becomes `<name>.result.json` in the output directory.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import { MinimalGL, acquireRealContext } from "./gl.js";
import { GlRunner, DriverCompileError } from "./runner.js";
import { HarnessJob } from "./types.js";

export async function processDirectory(
  inputDir: string, outputDir: string, gl?: MinimalGL,
): Promise<string[]> {
  const context = gl ?? await acquireRealContext(1024, 1024);
  if (!context) {
    throw new Error("no WebGL context available for file-drop processing");
  }
  const runner = new GlRunner(context);
  fs.mkdirSync(outputDir, { recursive: true });
  const written: string[] = [];
  const names = fs.readdirSync(inputDir).filter((n) => n.endsWith(".job.json")).sort();
  for (const name of names) {
    const jobPath = path.join(inputDir, name);
    const outPath = path.join(outputDir, name.replace(/\.job\.json$/, ".result.json"));
    let outcome: unknown;
    try {
      const parsed = HarnessJob.parse(JSON.parse(fs.readFileSync(jobPath, "utf8")));
      outcome = runner.run(parsed);
    } catch (err) {
      outcome = {
        status: "error",
        error: err instanceof Error ? err.message : String(err),
        driverLog: err instanceof DriverCompileError ? err.log : null,
      };
    }
    fs.writeFileSync(outPath, JSON.stringify(outcome));
    written.push(outPath);
  }
  return written;
}

const isMain = process.argv[1]?.endsWith("filedrop.js");
if (isMain) {
  const [input, output] = process.argv.slice(2);
  if (!input || !output) {
    console.error("usage: node dist/filedrop.js <jobs-dir> <results-dir>");
    process.exit(1);
  }
  void processDirectory(input, output).then(
    (written) => console.error(`wrote ${written.length} result(s)`),
    (err) => {
      console.error(String(err));
      process.exit(1);
    },
  );
}
