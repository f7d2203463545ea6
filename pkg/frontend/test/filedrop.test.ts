import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { processDirectory } from "../src/filedrop.js";
import { FakeGL } from "./fakegl.js";

const wave = JSON.parse(readFileSync(new URL("../fixtures/wave.artifact.json", import.meta.url), "utf8"));

function jobBody() {
  return {
    artifact: wave,
    width: 4,
    height: 4,
    viewport: [-4, -4, 4, 4],
    uniformValues: { _u0: 0.5, _u1: 0.0 },
  };
}

describe("file-drop mode", () => {
  it("turns job files into result files", async () => {
    const input = mkdtempSync(join(tmpdir(), "jobs-"));
    const output = mkdtempSync(join(tmpdir(), "results-"));
    writeFileSync(join(input, "a.job.json"), JSON.stringify(jobBody()));
    writeFileSync(join(input, "b.job.json"), JSON.stringify(jobBody()));
    const written = await processDirectory(input, output, new FakeGL());
    expect(written).toHaveLength(2);
    const result = JSON.parse(readFileSync(join(output, "a.job.json".replace(".job.json", ".result.json")), "utf8"));
    expect(result.status).toBe("done");
  });

  it("writes error results for broken jobs", async () => {
    const input = mkdtempSync(join(tmpdir(), "jobs-"));
    const output = mkdtempSync(join(tmpdir(), "results-"));
    writeFileSync(join(input, "bad.job.json"), JSON.stringify({ garbage: 1 }));
    await processDirectory(input, output, new FakeGL());
    const result = JSON.parse(readFileSync(join(output, "bad.result.json"), "utf8"));
    expect(result.status).toBe("error");
  });
});
