/**
 * Wire contract shared with the compiler: shader artifact bundles and the
 * job envelope the harness accepts over HTTP or by file drop.
 */
import { z } from "zod";

export const UniformEntry = z.object({
  name: z.string(),
  type: z.string(),
  node: z.number().int().nullable(),
});

export const TextureBinding = z.object({
  sampler: z.string(),
  texture: z.string(),
});

export const ArtifactBundle = z.object({
  glsl: z.string(),
  uniforms: z.array(UniformEntry),
  textures: z.array(TextureBinding),
  typeKey: z.string(),
});

export const TextureInit = z.object({
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  rect: z.tuple([z.number(), z.number(), z.number(), z.number()]),
  /** float32 little-endian rgba rows, bottom row first */
  data_b64: z.string(),
});

export const HarnessJob = z.object({
  artifact: ArtifactBundle,
  /** slot name -> wire value (bool | int | float | nested number arrays) */
  uniformValues: z.record(z.string(), z.unknown()).default({}),
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  viewport: z.tuple([z.number(), z.number(), z.number(), z.number()]),
  /** initial contents per sampler name; omitted samplers start at zero */
  textures: z.record(z.string(), TextureInit).default({}),
  /** run the pass this many times */
  iterations: z.number().int().positive().default(1),
  /** sampler whose texture is also the render target (ping-pong) */
  feedback: z.string().nullable().default(null),
  readback: z.boolean().default(true),
});

export type UniformEntryT = z.infer<typeof UniformEntry>;
export type ArtifactBundleT = z.infer<typeof ArtifactBundle>;
export type TextureInitT = z.infer<typeof TextureInit>;
export type HarnessJobT = z.infer<typeof HarnessJob>;

export interface JobResult {
  status: "done";
  width: number;
  height: number;
  /** float32 little-endian rgba rows, bottom row first */
  data_b64: string;
  passes: number;
  /** effective readback precision: "float" or "8bit" */
  precision: string;
  driverLog: string | null;
}

export function decodeFloat32(b64: string, expected: number): Float32Array {
  const buf = Buffer.from(b64, "base64");
  if (buf.byteLength !== expected * 4) {
    throw new Error(
      `texture payload has ${buf.byteLength} bytes, expected ${expected * 4}`,
    );
  }
  return new Float32Array(buf.buffer, buf.byteOffset, expected);
}

export function encodeFloat32(data: Float32Array): string {
  return Buffer.from(data.buffer, data.byteOffset, data.byteLength).toString("base64");
}

/** Parse a fragscript type string far enough to pick the uniform setter. */
export type UniformShape =
  | { kind: "bool" }
  | { kind: "int" }
  | { kind: "float" }
  | { kind: "vec"; size: 2 | 3 | 4; elem: "float" | "int" | "bool" }
  | { kind: "struct"; length: number; elem: UniformShape };

export function uniformShape(type: string): UniformShape {
  const t = type.trim();
  if (t === "bool") return { kind: "bool" };
  if (t === "int" || t.startsWith("const<")) return { kind: "int" };
  if (t === "real") return { kind: "float" };
  if (t === "complex") return { kind: "vec", size: 2, elem: "float" };
  const m = t.match(/^list<(\d+),(.*)>$/s);
  if (!m) throw new Error(`unparseable uniform type: ${type}`);
  const length = Number(m[1]);
  const inner = m[2].trim();
  if (length >= 2 && length <= 4 && (inner === "real" || inner === "int" || inner === "bool" || inner.startsWith("const<"))) {
    const elem = inner === "real" ? "float" : inner === "bool" ? "bool" : "int";
    return { kind: "vec", size: length as 2 | 3 | 4, elem };
  }
  return { kind: "struct", length, elem: uniformShape(inner) };
}
