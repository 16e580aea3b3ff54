/**
 * Environment-API compliance checks.
 *
 * Asserts the conventional contract an agent loop relies on: cached
 * descriptors match what the environment actually produces, reset is
 * deterministic, rewards stay inside the declared clipping range,
 * terminal states latch, and misuse (bad arity, use after close) throws.
 * Returns a list of failure messages; empty means compliant.
 */

import { BoundEnvironment } from './env.js';

export interface CheckerOptions {
  /** Steps to probe per action pattern (default 25). */
  steps?: number;
}

type Factory = () => Promise<BoundEnvironment>;

function finite(values: ArrayLike<number>): boolean {
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i]!)) return false;
  }
  return true;
}

function equalArrays(a: Float64Array, b: Float64Array): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (!Object.is(a[i], b[i])) return false;
  }
  return true;
}

export async function runComplianceChecks(
  factory: Factory,
  options: CheckerOptions = {},
): Promise<string[]> {
  const steps = options.steps ?? 25;
  const failures: string[] = [];
  const env = await factory();

  try {
    checkDescriptors(env, failures);

    const first = await env.reset();
    if (first.length !== env.observationLength) {
      failures.push(
        `reset returned ${first.length} values, descriptor says ` +
          `${env.observationLength}`,
      );
    }
    if (!finite(first)) failures.push('reset observation has non-finite values');
    checkWithinObservationBounds(env, first, 'reset', failures);

    const again = await env.reset();
    if (!equalArrays(first, again)) {
      failures.push('two resets of one environment differ');
    }

    const sibling = await factory();
    try {
      const other = await sibling.reset();
      if (!equalArrays(first, other)) {
        failures.push('resets of two same-seed environments differ');
      }
    } finally {
      await sibling.close();
    }

    await probeSteps(env, steps, failures);
    await checkRenderCounter(env, failures);
    await checkMisuse(env, failures);
  } finally {
    await env.close();
  }
  return failures;
}

function checkDescriptors(env: BoundEnvironment, failures: string[]): void {
  if (!Number.isInteger(env.observationLength) || env.observationLength < 1) {
    failures.push(`bad observation length ${env.observationLength}`);
  }
  if (!Number.isInteger(env.actionLength) || env.actionLength < 0) {
    failures.push(`bad action length ${env.actionLength}`);
  }
  if (
    env.actionLow.length !== env.actionLength ||
    env.actionHigh.length !== env.actionLength
  ) {
    failures.push('action bound arrays do not match the action length');
  }
  for (let i = 0; i < env.actionLength; i++) {
    if (!(env.actionLow[i]! <= env.actionHigh[i]!)) {
      failures.push(`action bound ${i} inverted`);
    }
  }
  const [cMin, cMax] = env.costsClipping;
  if (!(cMin <= 0 && 0 <= cMax)) {
    failures.push(`reward clipping [${cMin}, ${cMax}] does not bracket 0`);
  }
  if (env.observationBounds !== null) {
    if (env.observationBounds.length !== env.observationLength) {
      failures.push('observation bounds do not match the observation length');
    }
    for (const [lo, hi] of env.observationBounds) {
      if (!(lo <= hi)) failures.push('observation bound inverted');
    }
  }
  if (!(env.deltaT >= 0) || !(env.gamma > 0 && env.gamma <= 1)) {
    failures.push(`bad time step ${env.deltaT} or discount ${env.gamma}`);
  }
}

function checkWithinObservationBounds(
  env: BoundEnvironment,
  obs: Float64Array,
  label: string,
  failures: string[],
): void {
  if (env.observationBounds === null) return;
  for (let i = 0; i < obs.length; i++) {
    const pair = env.observationBounds[i];
    if (pair === undefined) return;
    if (obs[i]! < pair[0] || obs[i]! > pair[1]) {
      failures.push(
        `${label} observation[${i}] = ${obs[i]} outside [${pair[0]}, ${pair[1]}]`,
      );
      return; // one report per probe is enough
    }
  }
}

async function probeSteps(
  env: BoundEnvironment,
  steps: number,
  failures: string[],
): Promise<void> {
  const mid = Float64Array.from(env.actionLow, (lo, i) =>
    (lo + env.actionHigh[i]!) / 2,
  );
  const patterns = [env.actionLow, mid, env.actionHigh];
  const [cMin, cMax] = env.costsClipping;
  let latchedObs: Float64Array | null = null;

  await env.reset();
  for (let t = 0; t < steps * patterns.length; t++) {
    const result = await env.step(patterns[t % patterns.length]!);
    if (result.obs.length !== env.observationLength) {
      failures.push(`step observation length ${result.obs.length}`);
      return;
    }
    if (!Number.isFinite(result.reward)) {
      failures.push('non-finite reward');
      return;
    }
    if (latchedObs !== null) {
      // once terminal, every further step must repeat itself
      if (!result.done || result.reward !== 0 ||
          !equalArrays(result.obs, latchedObs)) {
        failures.push('terminal state did not latch');
        return;
      }
      continue;
    }
    if (result.reward < cMin || result.reward > cMax) {
      failures.push(`reward ${result.reward} outside clipping range`);
      return;
    }
    if (typeof result.done !== 'boolean') {
      failures.push('done is not a boolean');
      return;
    }
    for (const key of ['e_loss', 'penalty', 'diverged'] as const) {
      if (!(key in result.info)) {
        failures.push(`info is missing '${key}'`);
        return;
      }
    }
    checkWithinObservationBounds(env, result.obs, `step ${t}`, failures);
    if (result.done) latchedObs = result.obs;
  }
}

async function checkRenderCounter(
  env: BoundEnvironment,
  failures: string[],
): Promise<void> {
  await env.reset();
  const before = await env.render();
  if (before.step !== 0) {
    failures.push(`render after reset reports step ${before.step}`);
  }
  await env.step(env.actionLow);
  const after = await env.render();
  if (after.step !== 1) {
    failures.push(`render after one step reports step ${after.step}`);
  }
  if (after.time_hours !== env.deltaT) {
    failures.push('render time does not advance by the declared time step');
  }
}

async function checkMisuse(
  env: BoundEnvironment,
  failures: string[],
): Promise<void> {
  try {
    await env.step(new Float64Array(env.actionLength + 1));
    failures.push('wrong-arity action was accepted');
  } catch {
    /* expected */
  }
  const doomed = new Float64Array(env.actionLength);
  await env.close().catch(() => failures.push('close rejected'));
  try {
    await env.step(doomed);
    failures.push('step after close was accepted');
  } catch {
    /* expected */
  }
  await env.close(); // second close must be a quiet no-op
}
