/**
 * Executes one artifact bundle in a WebGL 1 context: compiles the fragment
 * shader with the real driver (errors reported verbatim), renders a
 * full-screen quad into a framebuffer-attached texture, ping-pongs feedback
 * passes, and reads the pixels back as float where the context supports it.
 */
import { GL, MinimalGL } from "./gl.js";
import {
  ArtifactBundleT, HarnessJobT, JobResult, decodeFloat32, encodeFloat32,
  uniformShape, UniformShape,
} from "./types.js";

const VERTEX_SOURCE = `attribute vec2 _pos;
void main() {
  gl_Position = vec4(_pos, 0.0, 1.0);
}
`;

export class DriverCompileError extends Error {
  constructor(message: string, readonly log: string) {
    super(message);
    this.name = "DriverCompileError";
  }
}

interface TextureState {
  texture: unknown;
  rect: [number, number, number, number];
}

export class GlRunner {
  private floatReadback: boolean;

  constructor(private gl: MinimalGL) {
    // float render targets need the extension; fall back to 8-bit readback
    this.floatReadback = Boolean(gl.getExtension("OES_texture_float"));
  }

  get precision(): string {
    return this.floatReadback ? "float" : "8bit";
  }

  compile(artifact: ArtifactBundleT): unknown {
    const gl = this.gl;
    const fragment = this.compileShader(GL.FRAGMENT_SHADER, artifact.glsl);
    const vertex = this.compileShader(GL.VERTEX_SHADER, VERTEX_SOURCE);
    const program = gl.createProgram();
    gl.attachShader(program, vertex);
    gl.attachShader(program, fragment);
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, GL.LINK_STATUS)) {
      const log = gl.getProgramInfoLog(program) ?? "";
      gl.deleteProgram(program);
      throw new DriverCompileError("shader program failed to link", log);
    }
    gl.deleteShader(vertex);
    gl.deleteShader(fragment);
    return program;
  }

  private compileShader(kind: number, source: string): unknown {
    const gl = this.gl;
    const shader = gl.createShader(kind);
    gl.shaderSource(shader, source);
    gl.compileShader(shader);
    if (!gl.getShaderParameter(shader, GL.COMPILE_STATUS)) {
      const log = gl.getShaderInfoLog(shader) ?? "";
      gl.deleteShader(shader);
      throw new DriverCompileError("driver rejected the shader", log);
    }
    return shader;
  }

  run(job: HarnessJobT): JobResult {
    const gl = this.gl;
    const program = this.compile(job.artifact);
    gl.useProgram(program);
    this.bindQuad(program);

    const textures = new Map<string, TextureState>();
    for (const binding of job.artifact.textures) {
      const init = job.textures[binding.sampler];
      const width = init?.width ?? job.width;
      const height = init?.height ?? job.height;
      const rect = init?.rect ?? job.viewport;
      const data = init
        ? decodeFloat32(init.data_b64, width * height * 4)
        : new Float32Array(width * height * 4);
      textures.set(binding.sampler, {
        texture: this.makeTexture(width, height, data),
        rect: rect as [number, number, number, number],
      });
    }

    // render target pair; the back buffer swaps in on feedback passes
    let target = this.makeTexture(job.width, job.height, null);
    const framebuffer = gl.createFramebuffer();

    this.setStaticUniforms(program, job);

    let passes = 0;
    for (let k = 0; k < job.iterations; k++) {
      gl.bindFramebuffer(GL.FRAMEBUFFER, framebuffer);
      gl.framebufferTexture2D(GL.FRAMEBUFFER, GL.COLOR_ATTACHMENT0,
                              GL.TEXTURE_2D, target, 0);
      if (gl.checkFramebufferStatus(GL.FRAMEBUFFER) !== GL.FRAMEBUFFER_COMPLETE) {
        throw new Error("framebuffer is incomplete on this driver");
      }
      this.bindSamplers(program, job, textures);
      gl.viewport(0, 0, job.width, job.height);
      gl.drawArrays(GL.TRIANGLE_STRIP, 0, 4);
      passes += 1;
      if (job.feedback !== null && k + 1 < job.iterations) {
        const fb = textures.get(job.feedback);
        if (!fb) {
          throw new Error(`feedback sampler ${job.feedback} is not bound`);
        }
        // swap: what was just written becomes the next pass's source
        const written = target;
        target = fb.texture;
        fb.texture = written;
        fb.rect = job.viewport as [number, number, number, number];
      }
    }

    let data: Float32Array;
    let precision = this.precision;
    gl.bindFramebuffer(GL.FRAMEBUFFER, framebuffer);
    gl.framebufferTexture2D(GL.FRAMEBUFFER, GL.COLOR_ATTACHMENT0,
                            GL.TEXTURE_2D, target, 0);
    if (this.floatReadback) {
      data = new Float32Array(job.width * job.height * 4);
      gl.readPixels(0, 0, job.width, job.height, GL.RGBA, GL.FLOAT, data);
    } else {
      const bytes = new Uint8Array(job.width * job.height * 4);
      gl.readPixels(0, 0, job.width, job.height, GL.RGBA, GL.UNSIGNED_BYTE, bytes);
      data = Float32Array.from(bytes, (b) => b / 255);
    }
    gl.bindFramebuffer(GL.FRAMEBUFFER, null);
    gl.deleteFramebuffer(framebuffer);
    gl.deleteProgram(program);

    return {
      status: "done",
      width: job.width,
      height: job.height,
      data_b64: encodeFloat32(data),
      passes,
      precision,
      driverLog: null,
    };
  }

  private bindQuad(program: unknown): void {
    const gl = this.gl;
    const buffer = gl.createBuffer();
    gl.bindBuffer(GL.ARRAY_BUFFER, buffer);
    gl.bufferData(GL.ARRAY_BUFFER,
                  new Float32Array([-1, -1, 1, -1, -1, 1, 1, 1]), GL.STATIC_DRAW);
    const loc = gl.getAttribLocation(program, "_pos");
    gl.enableVertexAttribArray(loc);
    gl.vertexAttribPointer(loc, 2, GL.FLOAT, false, 0, 0);
  }

  private makeTexture(width: number, height: number, data: Float32Array | null): unknown {
    const gl = this.gl;
    const texture = gl.createTexture();
    gl.bindTexture(GL.TEXTURE_2D, texture);
    if (this.floatReadback) {
      gl.texImage2D(GL.TEXTURE_2D, 0, GL.RGBA, width, height, 0, GL.RGBA,
                    GL.FLOAT, data);
    } else {
      const bytes = data
        ? Uint8Array.from(data, (f) => Math.max(0, Math.min(255, Math.round(f * 255))))
        : null;
      gl.texImage2D(GL.TEXTURE_2D, 0, GL.RGBA, width, height, 0, GL.RGBA,
                    GL.UNSIGNED_BYTE, bytes);
    }
    gl.texParameteri(GL.TEXTURE_2D, GL.TEXTURE_MIN_FILTER, GL.LINEAR);
    gl.texParameteri(GL.TEXTURE_2D, GL.TEXTURE_MAG_FILTER, GL.LINEAR);
    gl.texParameteri(GL.TEXTURE_2D, GL.TEXTURE_WRAP_S, GL.CLAMP_TO_EDGE);
    gl.texParameteri(GL.TEXTURE_2D, GL.TEXTURE_WRAP_T, GL.CLAMP_TO_EDGE);
    return texture;
  }

  private setStaticUniforms(program: unknown, job: HarnessJobT): void {
    const gl = this.gl;
    const [xmin, ymin, xmax, ymax] = job.viewport;
    gl.uniform2f(gl.getUniformLocation(program, "_vmin"), xmin, ymin);
    gl.uniform2f(gl.getUniformLocation(program, "_vspan"), xmax - xmin, ymax - ymin);
    gl.uniform2f(gl.getUniformLocation(program, "_res"), job.width, job.height);
    for (const entry of job.artifact.uniforms) {
      if (entry.node === null) continue; // plumbing handled above / per sampler
      const value = job.uniformValues[entry.name];
      if (value === undefined) {
        throw new Error(`missing uniform value for ${entry.name}`);
      }
      this.setUniform(program, entry.name, uniformShape(entry.type), value);
    }
  }

  private setUniform(program: unknown, name: string, shape: UniformShape,
                     value: unknown): void {
    const gl = this.gl;
    const loc = gl.getUniformLocation(program, name);
    switch (shape.kind) {
      case "bool":
        gl.uniform1i(loc, value ? 1 : 0);
        return;
      case "int":
        gl.uniform1i(loc, value as number);
        return;
      case "float":
        gl.uniform1f(loc, value as number);
        return;
      case "vec": {
        const parts = value as number[];
        const call = shape.elem === "float"
          ? [gl.uniform2f, gl.uniform3f, gl.uniform4f]
          : [gl.uniform2i, gl.uniform3i, gl.uniform4i];
        const fn = call[shape.size - 2].bind(gl) as (l: unknown, ...xs: number[]) => void;
        const coerced = shape.elem === "bool"
          ? parts.map((p) => (p ? 1 : 0))
          : parts;
        fn(loc, ...coerced.slice(0, shape.size));
        return;
      }
      case "struct": {
        const items = value as unknown[];
        for (let k = 0; k < shape.length; k++) {
          this.setUniform(program, `${name}._e${k + 1}`, shape.elem, items[k]);
        }
        return;
      }
    }
  }

  private bindSamplers(program: unknown, job: HarnessJobT,
                       textures: Map<string, TextureState>): void {
    const gl = this.gl;
    let unit = 0;
    for (const binding of job.artifact.textures) {
      const state = textures.get(binding.sampler);
      if (!state) continue;
      gl.activeTexture(GL.TEXTURE0 + unit);
      gl.bindTexture(GL.TEXTURE_2D, state.texture);
      gl.uniform1i(gl.getUniformLocation(program, binding.sampler), unit);
      const [xmin, ymin, xmax, ymax] = state.rect;
      gl.uniform2f(gl.getUniformLocation(program, `${binding.sampler}_or`), xmin, ymin);
      gl.uniform2f(gl.getUniformLocation(program, `${binding.sampler}_sp`),
                   xmax - xmin, ymax - ymin);
      unit += 1;
    }
  }
}
