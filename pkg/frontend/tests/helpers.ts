import { spawnSync } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

export const repoRoot = join(
  dirname(fileURLToPath(import.meta.url)),
  '..',
  '..',
);

export const anm6NetworkPath = join(
  repoRoot,
  'src',
  'anmsim',
  'data',
  'anm6_network.json',
);

const python = process.env.ANMSIM_PYTHON ?? 'python3';

/** Run the simulator CLI to completion; throws on nonzero exit. */
export function runCli(args: string[]): string {
  const result = spawnSync(python, ['-m', 'anmsim.cli', ...args], {
    cwd: repoRoot,
    encoding: 'utf8',
  });
  if (result.status !== 0) {
    throw new Error(
      `cli ${args.join(' ')} exited ${result.status}: ${result.stderr}`,
    );
  }
  return result.stdout;
}

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

/**
 * Two-bus network whose renewable nameplate dwarfs the line: full
 * dispatch makes the power flow diverge, which exercises terminal
 * latching from the client side.
 */
export function writeOverloadNetwork(dir: string): string {
  const path = join(dir, 'overload.json');
  writeFileSync(
    path,
    JSON.stringify({
      baseMVA: 100.0,
      bus: [
        [0, 0, 132.0, 1.1, 0.9],
        [1, 1, 33.0, 1.1, 0.9],
      ],
      branch: [[0, 1, 0.01, 0.1, 0.0, 0.4, 1.0, 0.0]],
      device: [
        [0, 0, 0, 100.0, -100.0, 100.0, -100.0, 0.0, 0.0, 0.0],
        [1, 1, 2, 90.0, 0.0, 5.0, -5.0, 0.0, 0.0, 0.0],
      ],
    }),
  );
  return path;
}

export function expectBitEqual(
  got: ArrayLike<number>,
  want: ArrayLike<number>,
  label: string,
): void {
  if (got.length !== want.length) {
    throw new Error(
      `${label}: length ${got.length} != ${want.length}`,
    );
  }
  for (let i = 0; i < got.length; i++) {
    if (!Object.is(got[i], want[i])) {
      throw new Error(
        `${label}[${i}]: ${got[i]} != ${want[i]} (bitwise)`,
      );
    }
  }
}
