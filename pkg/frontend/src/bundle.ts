/**
 * Intrinsic bundle directories: the on-disk interchange with the
 * compositing pipeline. A bundle holds depth.pfm, normals.pfm, albedo.pfm,
 * shading.pfm, shading_mask.pfm (1 = shading known, 0 = synthesize), and a
 * manifest.json carrying the camera ({fov_deg, width, height}).
 */

import { readFile } from "node:fs/promises";
import { join } from "node:path";

import { FloatMap, readPfm } from "./pfm";

export class BundleError extends Error {}

export interface Camera {
  fovDeg: number;
  width: number;
  height: number;
}

export interface Bundle {
  camera: Camera;
  depth: FloatMap;
  normals: FloatMap;
  albedo: FloatMap;
  shading: FloatMap;
  shadingMask: FloatMap;
  roughness?: FloatMap;
  metallic?: FloatMap;
}

async function readMap(
  dir: string,
  name: string,
  channels: 1 | 3,
  camera: Camera,
  optional = false
): Promise<FloatMap | undefined> {
  let map: FloatMap;
  try {
    map = await readPfm(join(dir, name));
  } catch (err) {
    if (optional && (err as NodeJS.ErrnoException).code === "ENOENT") return undefined;
    throw new BundleError(`${name}: ${(err as Error).message}`);
  }
  if (map.channels !== channels) {
    throw new BundleError(`${name}: expected ${channels} channel(s), got ${map.channels}`);
  }
  if (map.width !== camera.width || map.height !== camera.height) {
    throw new BundleError(
      `${name}: ${map.width}x${map.height} does not match manifest ` +
        `${camera.width}x${camera.height}`
    );
  }
  return map;
}

export async function loadBundle(dir: string): Promise<Bundle> {
  let manifestRaw: string;
  try {
    manifestRaw = await readFile(join(dir, "manifest.json"), "utf-8");
  } catch {
    throw new BundleError(`missing manifest.json in ${dir}`);
  }
  let manifest: Record<string, unknown>;
  try {
    manifest = JSON.parse(manifestRaw);
  } catch {
    throw new BundleError(`manifest.json is not valid JSON in ${dir}`);
  }
  const fovDeg = Number(manifest["fov_deg"]);
  const width = Number(manifest["width"]);
  const height = Number(manifest["height"]);
  if (!(fovDeg > 0 && fovDeg < 180) || !Number.isInteger(width) || !Number.isInteger(height)) {
    throw new BundleError("manifest must carry fov_deg, width, height");
  }
  const camera: Camera = { fovDeg, width, height };

  const depth = (await readMap(dir, "depth.pfm", 1, camera))!;
  const normals = (await readMap(dir, "normals.pfm", 3, camera))!;
  const albedo = (await readMap(dir, "albedo.pfm", 3, camera))!;
  const shading = (await readMap(dir, "shading.pfm", 3, camera))!;
  const shadingMask = (await readMap(dir, "shading_mask.pfm", 1, camera))!;
  const roughness = await readMap(dir, "roughness.pfm", 1, camera, true);
  const metallic = await readMap(dir, "metallic.pfm", 1, camera, true);

  for (let i = 0; i < depth.data.length; i++) {
    if (depth.data[i] <= 0) throw new BundleError("depth must be strictly positive");
  }
  return { camera, depth, normals, albedo, shading, shadingMask, roughness, metallic };
}

/**
 * Conditioning tensor for the diffusion backbone: channels stacked in the
 * documented order depth, normals xyz, albedo rgb, masked shading rgb,
 * shading mask. This ordering is what the bridge reports in its manifest.
 */
export const CONDITIONING_ORDER = [
  "depth",
  "normal_x",
  "normal_y",
  "normal_z",
  "albedo_r",
  "albedo_g",
  "albedo_b",
  "shading_r",
  "shading_g",
  "shading_b",
  "shading_mask",
] as const;

export function stackConditioning(bundle: Bundle): Float32Array {
  const { width, height } = bundle.camera;
  const n = width * height;
  const out = new Float32Array(n * CONDITIONING_ORDER.length);
  for (let i = 0; i < n; i++) {
    let c = 0;
    out[c++ * n + i] = bundle.depth.data[i];
    for (let k = 0; k < 3; k++) out[c++ * n + i] = bundle.normals.data[i * 3 + k];
    for (let k = 0; k < 3; k++) out[c++ * n + i] = bundle.albedo.data[i * 3 + k];
    for (let k = 0; k < 3; k++) {
      out[c++ * n + i] = bundle.shading.data[i * 3 + k] * bundle.shadingMask.data[i];
    }
    out[c * n + i] = bundle.shadingMask.data[i];
  }
  return out;
}
