import { execFile } from "node:child_process";
import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CONDITIONING_ORDER, loadBundle, stackConditioning } from "../src/bundle";
import { encodePfm, makeMap, readPfm } from "../src/pfm";
import { seededUniform } from "../src/render";

const exec = promisify(execFile);
const BRIDGE = join(__dirname, "..", "bin", "bridge.js");
const BRIDGE_STUB = join(__dirname, "..", "bin", "bridge-stub.js");

let workDir: string;

/** Small synthetic bundle: a 6x4 wall with analytic-friendly values. */
async function writeBundle(dir: string, width = 6, height = 4): Promise<void> {
  const n = width * height;
  const depth = makeMap(width, height, 1, 2.0);
  const normals = makeMap(width, height, 3);
  const albedo = makeMap(width, height, 3);
  const shading = makeMap(width, height, 3);
  const mask = makeMap(width, height, 1, 1.0);
  for (let i = 0; i < n; i++) {
    normals.data[i * 3 + 2] = -1.0;
    for (let k = 0; k < 3; k++) {
      albedo.data[i * 3 + k] = Math.fround(0.1 + ((i + k) % 7) * 0.1);
      shading.data[i * 3 + k] = Math.fround(0.2 + ((i * 3 + k) % 5) * 0.15);
    }
  }
  mask.data[0] = 0.0; // one unknown pixel keeps the mask nontrivial
  shading.data[0] = shading.data[1] = shading.data[2] = 0.0;
  await writeFile(join(dir, "depth.pfm"), encodePfm(depth));
  await writeFile(join(dir, "normals.pfm"), encodePfm(normals));
  await writeFile(join(dir, "albedo.pfm"), encodePfm(albedo));
  await writeFile(join(dir, "shading.pfm"), encodePfm(shading));
  await writeFile(join(dir, "shading_mask.pfm"), encodePfm(mask));
  await writeFile(
    join(dir, "manifest.json"),
    JSON.stringify({ fov_deg: 50.0, width, height }, null, 2)
  );
}

beforeAll(async () => {
  workDir = await mkdtemp(join(tmpdir(), "bridge-test-"));
  await writeBundle(workDir);
});

afterAll(async () => {
  await rm(workDir, { recursive: true, force: true });
});

async function runBridge(exe: string, args: string[]) {
  try {
    const { stdout, stderr } = await exec("node", [exe, ...args]);
    return { code: 0, stdout, stderr };
  } catch (err) {
    const e = err as { code?: number; stdout?: string; stderr?: string };
    return { code: e.code ?? -1, stdout: e.stdout ?? "", stderr: e.stderr ?? "" };
  }
}

describe("bridge protocol", () => {
  it("stub mode emits albedo * shading at the bundle dimensions", async () => {
    const out = join(workDir, "out.pfm");
    const result = await runBridge(BRIDGE_STUB, [workDir, out, "--seed", "7"]);
    expect(result.code).toBe(0);
    const image = await readPfm(out);
    expect([image.width, image.height, image.channels]).toEqual([6, 4, 3]);
    const bundle = await loadBundle(workDir);
    for (let i = 0; i < image.data.length; i++) {
      expect(image.data[i]).toBe(
        Math.fround(bundle.albedo.data[i] * bundle.shading.data[i])
      );
    }
  });

  it("is byte-deterministic for a fixed seed", async () => {
    const outA = join(workDir, "a.pfm");
    const outB = join(workDir, "b.pfm");
    expect((await runBridge(BRIDGE_STUB, [workDir, outA, "--seed", "469"])).code).toBe(0);
    expect((await runBridge(BRIDGE_STUB, [workDir, outB, "--seed", "469"])).code).toBe(0);
    const [a, b] = await Promise.all([readFile(outA), readFile(outB)]);
    expect(a.equals(b)).toBe(true);
  });

  it("defaults the seed to 469", async () => {
    const out = join(workDir, "seed.pfm");
    const result = await runBridge(BRIDGE_STUB, [workDir, out]);
    expect(result.code).toBe(0);
    const config = JSON.parse(result.stdout.trim().split("\n")[0]);
    expect(config.seed).toBe(469);
    expect(config.mode).toBe("stub");
    expect(config.conditioning_order).toEqual([...CONDITIONING_ORDER]);
  });

  it("handles non-square bundles", async () => {
    const wide = await mkdtemp(join(tmpdir(), "bridge-wide-"));
    try {
      await writeBundle(wide, 9, 5);
      const out = join(wide, "out.pfm");
      expect((await runBridge(BRIDGE_STUB, [wide, out])).code).toBe(0);
      const image = await readPfm(out);
      expect([image.width, image.height]).toEqual([9, 5]);
    } finally {
      await rm(wide, { recursive: true, force: true });
    }
  });

  it("exits 2 on a malformed bundle", async () => {
    const broken = await mkdtemp(join(tmpdir(), "bridge-broken-"));
    try {
      const result = await runBridge(BRIDGE_STUB, [broken, join(broken, "out.pfm")]);
      expect(result.code).toBe(2);
      expect(result.stderr).toMatch(/malformed bundle/);
    } finally {
      await rm(broken, { recursive: true, force: true });
    }
  });

  it("exits 2 with a message when model weights are missing", async () => {
    const result = await runBridge(BRIDGE, [
      workDir,
      join(workDir, "m.pfm"),
      "--model",
      "/no/such/checkpoint.safetensors",
    ]);
    expect(result.code).toBe(2);
    expect(result.stderr).toMatch(/missing model weights/);
  });

  it("exits 1 on usage errors", async () => {
    expect((await runBridge(BRIDGE_STUB, [workDir])).code).toBe(1);
    expect((await runBridge(BRIDGE_STUB, [workDir, "o.pfm", "--seed", "x"])).code).toBe(1);
    expect(
      (await runBridge(BRIDGE_STUB, [workDir, "o.pfm", "--resolution", "13"])).code
    ).toBe(1);
  });
});

describe("model-mode plumbing", () => {
  it("stacks conditioning channels in the documented order", async () => {
    const bundle = await loadBundle(workDir);
    const stacked = stackConditioning(bundle);
    const n = bundle.camera.width * bundle.camera.height;
    expect(stacked.length).toBe(n * CONDITIONING_ORDER.length);
    expect(stacked[0]).toBe(bundle.depth.data[0]);
    // masked shading channel is zero where the mask is zero
    const shadingR = 7 * n;
    expect(stacked[shadingR + 0]).toBe(0);
    const maskChannel = 10 * n;
    expect(stacked[maskChannel + 0]).toBe(0);
    expect(stacked[maskChannel + 1]).toBe(1);
  });

  it("seeded noise is deterministic and seed-sensitive", () => {
    const a = seededUniform(469, 64);
    const b = seededUniform(469, 64);
    const c = seededUniform(470, 64);
    expect(Array.from(a)).toEqual(Array.from(b));
    expect(Array.from(a)).not.toEqual(Array.from(c));
    for (const v of a) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThan(1);
    }
  });
});
