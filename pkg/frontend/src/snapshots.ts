/**
 * Readers for the simulator's on-disk formats: JSONL trajectory
 * snapshots and network description files.  Parsing stays dumb on
 * purpose; numeric text round-trips IEEE doubles exactly in both
 * directions, which the parity tests rely on.
 */

import { readFileSync } from 'node:fs';

export interface StateSnapshot {
  version: number;
  step: number;
  time_hours: number;
  dev_p: number[];
  dev_q: number[];
  soc: number[];
  gen_p_max: number[];
  bus_v_mag: number[];
  bus_v_ang: number[];
  branch_s: number[];
  aux: number[];
  reward: number;
  e_loss: number;
  penalty: number;
  done: boolean;
}

const SNAPSHOT_FIELDS: Array<keyof StateSnapshot> = [
  'version', 'step', 'time_hours', 'dev_p', 'dev_q', 'soc', 'gen_p_max',
  'bus_v_mag', 'bus_v_ang', 'branch_s', 'aux', 'reward', 'e_loss',
  'penalty', 'done',
];

export function parseSnapshot(line: string): StateSnapshot {
  const doc = JSON.parse(line) as Record<string, unknown>;
  for (const field of SNAPSHOT_FIELDS) {
    if (!(field in doc)) {
      throw new Error(`snapshot line is missing '${field}'`);
    }
  }
  if (doc.version !== 1) {
    throw new Error(`unsupported snapshot version ${doc.version}`);
  }
  return doc as unknown as StateSnapshot;
}

export function readSnapshots(path: string): StateSnapshot[] {
  return readFileSync(path, 'utf8')
    .split('\n')
    .filter((line) => line.trim().length > 0)
    .map(parseSnapshot);
}

/**
 * The observation a full-state environment reports for a snapshot:
 * dev_p, dev_q, soc, gen_p_max, |v|, branch flows, then aux.
 */
export function fullStateObservation(snap: StateSnapshot): Float64Array {
  return Float64Array.from([
    ...snap.dev_p, ...snap.dev_q, ...snap.soc, ...snap.gen_p_max,
    ...snap.bus_v_mag, ...snap.branch_s, ...snap.aux,
  ]);
}

// device kind codes in network files
export const DEVICE_LOAD = 1;
export const DEVICE_RENEWABLE = 2;
export const DEVICE_STORAGE = 3;

export interface NetworkDevice {
  id: number;
  bus: number;
  kind: number;
}

export interface NetworkFile {
  baseMVA: number;
  busCount: number;
  branchCount: number;
  devices: NetworkDevice[];
}

export function readNetworkFile(path: string): NetworkFile {
  const doc = JSON.parse(readFileSync(path, 'utf8')) as {
    baseMVA: number;
    bus: number[][];
    branch: number[][];
    device: number[][];
  };
  return {
    baseMVA: doc.baseMVA,
    busCount: doc.bus.length,
    branchCount: doc.branch.length,
    devices: doc.device.map((row) => ({
      id: row[0]!,
      bus: row[1]!,
      kind: row[2]!,
    })),
  };
}

/**
 * Recover the applied action from a recorded snapshot: the (p, q)
 * set-points of renewable devices, then storage devices, in file order.
 * Clipping is idempotent, so feeding these back replays the step.
 */
export function extractAction(
  net: NetworkFile,
  snap: StateSnapshot,
): Float64Array {
  const values: number[] = [];
  for (const kind of [DEVICE_RENEWABLE, DEVICE_STORAGE]) {
    net.devices.forEach((dev, index) => {
      if (dev.kind === kind) {
        values.push(snap.dev_p[index]!, snap.dev_q[index]!);
      }
    });
  }
  return Float64Array.from(values);
}
