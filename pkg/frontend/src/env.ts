/**
 * Bound environment: the conventional reset/step/render/close surface
 * over one simulator process, with space descriptors cached at startup.
 */

import { BridgeError, BridgeOptions, PythonBridge } from './bridge.js';
import { StateSnapshot } from './snapshots.js';

export interface StepInfo {
  e_loss: number;
  penalty: number;
  diverged: boolean;
  iterations: number;
}

export interface StepResult {
  obs: Float64Array;
  reward: number;
  done: boolean;
  info: StepInfo;
}

export interface EnvSource {
  /** Built-in task name, e.g. "anm6" / "anm6-easy". */
  env?: string;
  /** Or a network file to run under constant conditions. */
  network?: string;
  seed?: number;
}

export class ClosedEnvironmentError extends Error {
  constructor() {
    super('environment is closed');
    this.name = 'ClosedEnvironmentError';
  }
}

export class ActionArityError extends Error {
  constructor(expected: number, got: number) {
    super(`action must have length ${expected}, got ${got}`);
    this.name = 'ActionArityError';
  }
}

function toFloat64(values: unknown): Float64Array {
  return Float64Array.from(values as number[]);
}

export class BoundEnvironment {
  readonly observationLength: number;
  readonly actionLength: number;
  readonly actionLow: Float64Array;
  readonly actionHigh: Float64Array;
  readonly observationBounds: Array<[number, number]> | null;
  readonly deltaT: number;
  readonly gamma: number;
  readonly lamb: number;
  readonly costsClipping: [number, number];

  private readonly bridge: PythonBridge;
  private closed = false;

  private constructor(bridge: PythonBridge, descriptor: Record<string, unknown>) {
    this.bridge = bridge;
    this.observationLength = descriptor.obs_len as number;
    this.actionLength = descriptor.act_len as number;
    this.actionLow = toFloat64(descriptor.action_lo);
    this.actionHigh = toFloat64(descriptor.action_hi);
    this.observationBounds =
      descriptor.observation_bounds === null
        ? null
        : (descriptor.observation_bounds as Array<[number, number]>);
    this.deltaT = descriptor.delta_t as number;
    this.gamma = descriptor.gamma as number;
    this.lamb = descriptor.lamb as number;
    this.costsClipping = descriptor.costs_clipping as [number, number];
  }

  static async create(
    source: EnvSource,
    options: BridgeOptions = {},
  ): Promise<BoundEnvironment> {
    const bridge = new PythonBridge(options);
    try {
      const descriptor = await bridge.call({
        op: 'init',
        env: source.env,
        network: source.network,
        seed: source.seed ?? 0,
      });
      return new BoundEnvironment(bridge, descriptor);
    } catch (err) {
      await bridge.close();
      throw err;
    }
  }

  private ensureOpen(): void {
    if (this.closed) throw new ClosedEnvironmentError();
  }

  async reset(): Promise<Float64Array> {
    this.ensureOpen();
    const reply = await this.bridge.call({ op: 'reset' });
    return toFloat64(reply.obs);
  }

  async step(action: ArrayLike<number>): Promise<StepResult> {
    this.ensureOpen();
    if (action.length !== this.actionLength) {
      throw new ActionArityError(this.actionLength, action.length);
    }
    const reply = await this.bridge.call({
      op: 'step',
      action: Array.from(action),
    });
    return {
      obs: toFloat64(reply.obs),
      reward: reply.reward as number,
      done: reply.done as boolean,
      info: reply.info as unknown as StepInfo,
    };
  }

  async render(): Promise<StateSnapshot> {
    this.ensureOpen();
    const reply = await this.bridge.call({ op: 'render' });
    return reply.snapshot as unknown as StateSnapshot;
  }

  get isClosed(): boolean {
    return this.closed;
  }

  async close(): Promise<void> {
    if (this.closed) return;
    this.closed = true;
    try {
      await this.bridge.call({ op: 'close' });
    } catch (err) {
      if (!(err instanceof BridgeError)) throw err;
      // the process may already be gone; closing is idempotent
    } finally {
      await this.bridge.close();
    }
  }
}
