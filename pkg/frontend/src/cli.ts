/**
 * Bridge protocol entry point:
 *
 *   bridge <bundle_dir> <output.pfm> --seed <int> [--stub] [--model PATH]
 *          [--resolution N]
 *
 * Exit 0 on success with a 3-channel PFM of the bundle's dimensions at
 * <output.pfm>; exit 1 on usage errors; exit 2 on malformed bundles or
 * missing model weights. A JSON config line (seed, mode, conditioning
 * channel order) is printed to stdout for reproducibility.
 */

import { BundleError, CONDITIONING_ORDER, loadBundle } from "./bundle";
import { writePfm } from "./pfm";
import { ModelError, renderModel, renderStub } from "./render";

const DEFAULT_SEED = 469;
const DEFAULT_RESOLUTION = 512;

export interface BridgeArgs {
  bundleDir: string;
  outputPath: string;
  seed: number;
  stub: boolean;
  model?: string;
  resolution: number;
}

export function parseArgs(argv: string[]): BridgeArgs {
  const positional: string[] = [];
  let seed = DEFAULT_SEED;
  let stub = false;
  let model: string | undefined;
  let resolution = DEFAULT_RESOLUTION;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--stub") {
      stub = true;
    } else if (arg === "--seed") {
      seed = Number(argv[++i]);
      if (!Number.isInteger(seed) || seed < 0) throw new UsageError(`bad --seed ${argv[i]}`);
    } else if (arg === "--model") {
      model = argv[++i];
      if (!model) throw new UsageError("--model needs a path");
    } else if (arg === "--resolution") {
      resolution = Number(argv[++i]);
      if (!Number.isInteger(resolution) || resolution < 8 || resolution % 8 !== 0) {
        throw new UsageError("--resolution must be a positive multiple of 8");
      }
    } else if (arg.startsWith("--")) {
      throw new UsageError(`unknown flag ${arg}`);
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 2) {
    throw new UsageError("expected: <bundle_dir> <output_pfm> [--seed N] [--stub|--model PATH]");
  }
  return { bundleDir: positional[0], outputPath: positional[1], seed, stub, model, resolution };
}

export class UsageError extends Error {}

export async function run(argv: string[]): Promise<number> {
  let args: BridgeArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`usage error: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const bundle = await loadBundle(args.bundleDir);
    process.stdout.write(
      JSON.stringify({
        bridge: "shadecomp-bridge",
        mode: args.stub ? "stub" : "model",
        seed: args.seed,
        resolution: args.resolution,
        conditioning_order: CONDITIONING_ORDER,
      }) + "\n"
    );
    const image = args.stub
      ? renderStub(bundle)
      : renderModel(bundle, {
          checkpoint: args.model ?? "",
          resolution: args.resolution,
          seed: args.seed,
        });
    await writePfm(args.outputPath, image);
    return 0;
  } catch (err) {
    if (err instanceof BundleError) {
      process.stderr.write(`malformed bundle: ${err.message}\n`);
      return 2;
    }
    if (err instanceof ModelError) {
      process.stderr.write(`${err.message}\n`);
      return 2;
    }
    process.stderr.write(`bridge failure: ${(err as Error).message}\n`);
    return 2;
  }
}

export function main(): void {
  run(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}

if (require.main === module) {
  main();
}
