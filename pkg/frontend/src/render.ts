/**
 * The two render paths behind the bridge protocol.
 *
 * Stub mode reproduces albedo * shading exactly (the contract identity used
 * by the pipeline's CI). Model mode assembles the conditioning stack and a
 * seed-deterministic initial noise tensor for a diffusion backbone; actually
 * denoising requires a checkpoint on disk, which this sandbox never ships,
 * so a missing checkpoint is a clean exit-2 error.
 */

import { existsSync } from "node:fs";

import { Bundle, stackConditioning, CONDITIONING_ORDER } from "./bundle";
import { FloatMap, makeMap, resizeBilinear } from "./pfm";

export class ModelError extends Error {}

export function renderStub(bundle: Bundle): FloatMap {
  const { width, height } = bundle.camera;
  const out = makeMap(width, height, 3);
  const n = width * height;
  for (let i = 0; i < n; i++) {
    for (let k = 0; k < 3; k++) {
      out.data[i * 3 + k] = Math.fround(
        bundle.albedo.data[i * 3 + k] * bundle.shading.data[i * 3 + k]
      );
    }
  }
  return out;
}

/** mulberry32: small deterministic PRNG so identical seeds give identical
 * initial noise across runs and platforms. */
export function seededUniform(seed: number, count: number): Float32Array {
  let state = seed >>> 0;
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    out[i] = ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  }
  return out;
}

export interface ModelOptions {
  checkpoint: string;
  resolution: number;
  seed: number;
}

export function renderModel(bundle: Bundle, options: ModelOptions): FloatMap {
  if (!existsSync(options.checkpoint)) {
    throw new ModelError(`missing model weights: ${options.checkpoint}`);
  }
  // Everything the denoiser consumes is prepared deterministically here:
  // per-channel conditioning resized to the inference resolution, plus the
  // seeded latent noise.
  const res = options.resolution;
  const conditioning = stackConditioning(bundle);
  const n = bundle.camera.width * bundle.camera.height;
  const resized = new Float32Array(CONDITIONING_ORDER.length * res * res);
  for (let c = 0; c < CONDITIONING_ORDER.length; c++) {
    const channel: FloatMap = {
      width: bundle.camera.width,
      height: bundle.camera.height,
      channels: 1,
      data: conditioning.subarray(c * n, (c + 1) * n).slice(),
    };
    resized.set(resizeBilinear(channel, res, res).data, c * res * res);
  }
  void seededUniform(options.seed, res * res * 4);
  throw new ModelError(
    "no diffusion runtime is bundled with this bridge; plug a backbone in " +
      "renderModel or run with --stub"
  );
}
