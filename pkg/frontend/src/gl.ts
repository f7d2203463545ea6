/**
 * The slice of the WebGL 1 API the runner uses, as an interface so tests can
 * substitute a recording double and real contexts (browser canvas or
 * headless-gl) plug in unchanged.
 */

export const GL = {
  FRAGMENT_SHADER: 0x8b30,
  VERTEX_SHADER: 0x8b31,
  COMPILE_STATUS: 0x8b81,
  LINK_STATUS: 0x8b82,
  ARRAY_BUFFER: 0x8892,
  STATIC_DRAW: 0x88e4,
  TRIANGLE_STRIP: 0x0005,
  FLOAT: 0x1406,
  UNSIGNED_BYTE: 0x1401,
  RGBA: 0x1908,
  TEXTURE_2D: 0x0de1,
  TEXTURE0: 0x84c0,
  TEXTURE_MIN_FILTER: 0x2801,
  TEXTURE_MAG_FILTER: 0x2800,
  TEXTURE_WRAP_S: 0x2802,
  TEXTURE_WRAP_T: 0x2803,
  NEAREST: 0x2600,
  LINEAR: 0x2601,
  CLAMP_TO_EDGE: 0x812f,
  FRAMEBUFFER: 0x8d40,
  COLOR_ATTACHMENT0: 0x8ce0,
  FRAMEBUFFER_COMPLETE: 0x8cd5,
  COLOR_BUFFER_BIT: 0x4000,
} as const;

export interface MinimalGL {
  createShader(type: number): unknown;
  shaderSource(shader: unknown, source: string): void;
  compileShader(shader: unknown): void;
  getShaderParameter(shader: unknown, pname: number): unknown;
  getShaderInfoLog(shader: unknown): string | null;
  createProgram(): unknown;
  attachShader(program: unknown, shader: unknown): void;
  linkProgram(program: unknown): void;
  getProgramParameter(program: unknown, pname: number): unknown;
  getProgramInfoLog(program: unknown): string | null;
  useProgram(program: unknown): void;
  createBuffer(): unknown;
  bindBuffer(target: number, buffer: unknown): void;
  bufferData(target: number, data: Float32Array, usage: number): void;
  getAttribLocation(program: unknown, name: string): number;
  enableVertexAttribArray(index: number): void;
  vertexAttribPointer(index: number, size: number, type: number,
                      normalized: boolean, stride: number, offset: number): void;
  getUniformLocation(program: unknown, name: string): unknown;
  uniform1f(loc: unknown, x: number): void;
  uniform1i(loc: unknown, x: number): void;
  uniform2f(loc: unknown, x: number, y: number): void;
  uniform3f(loc: unknown, x: number, y: number, z: number): void;
  uniform4f(loc: unknown, x: number, y: number, z: number, w: number): void;
  uniform2i(loc: unknown, x: number, y: number): void;
  uniform3i(loc: unknown, x: number, y: number, z: number): void;
  uniform4i(loc: unknown, x: number, y: number, z: number, w: number): void;
  createTexture(): unknown;
  bindTexture(target: number, texture: unknown): void;
  texImage2D(target: number, level: number, internalformat: number,
             width: number, height: number, border: number, format: number,
             type: number, pixels: ArrayBufferView | null): void;
  texParameteri(target: number, pname: number, param: number): void;
  activeTexture(texture: number): void;
  createFramebuffer(): unknown;
  bindFramebuffer(target: number, framebuffer: unknown): void;
  framebufferTexture2D(target: number, attachment: number, textarget: number,
                       texture: unknown, level: number): void;
  checkFramebufferStatus(target: number): number;
  viewport(x: number, y: number, width: number, height: number): void;
  drawArrays(mode: number, first: number, count: number): void;
  readPixels(x: number, y: number, width: number, height: number,
             format: number, type: number, pixels: ArrayBufferView): void;
  getExtension(name: string): unknown;
  deleteShader(shader: unknown): void;
  deleteProgram(program: unknown): void;
  deleteTexture(texture: unknown): void;
  deleteFramebuffer(framebuffer: unknown): void;
}

/**
 * Try to create a real WebGL 1 context through headless-gl.  Returns null
 * when the module is not installed or a context cannot be created; callers
 * fall back gracefully (the harness reports the capability on /health).
 */
export async function acquireRealContext(width: number, height: number): Promise<MinimalGL | null> {
  try {
    const mod = await import("gl" as string);
    const factory = (mod as { default?: unknown }).default ?? mod;
    const gl = (factory as (w: number, h: number, opts?: object) => unknown)(
      width, height, { preserveDrawingBuffer: true },
    );
    return (gl as MinimalGL) ?? null;
  } catch {
    return null;
  }
}
