/**
 * Line-oriented JSON transport to the simulator process.
 *
 * The Python side answers exactly one line per request, in order, so a
 * FIFO of pending resolvers is all the correlation needed.
 */

import { spawn, ChildProcessWithoutNullStreams } from 'node:child_process';

export interface BridgeReply {
  ok: boolean;
  error?: string;
  kind?: string;
  [key: string]: unknown;
}

export class BridgeError extends Error {
  readonly kind?: string;

  constructor(message: string, kind?: string) {
    super(message);
    this.name = 'BridgeError';
    this.kind = kind;
  }
}

export interface BridgeOptions {
  /** Interpreter to launch; ANMSIM_PYTHON overrides, default python3. */
  python?: string;
  /** Working directory for the child process. */
  cwd?: string;
}

export class PythonBridge {
  private readonly child: ChildProcessWithoutNullStreams;
  private readonly pending: Array<{
    resolve: (reply: BridgeReply) => void;
    reject: (err: Error) => void;
  }> = [];
  private buffer = '';
  private closed = false;
  private exitError: Error | null = null;

  constructor(options: BridgeOptions = {}) {
    const python =
      options.python ?? process.env.ANMSIM_PYTHON ?? 'python3';
    this.child = spawn(python, ['-m', 'anmsim.cli', 'bridge'], {
      cwd: options.cwd,
      stdio: ['pipe', 'pipe', 'pipe'],
    });
    this.child.stdout.setEncoding('utf8');
    this.child.stdout.on('data', (chunk: string) => this.onData(chunk));
    this.child.stderr.setEncoding('utf8');
    this.child.stderr.on('data', () => {
      /* progress noise from the solver; protocol replies never go here */
    });
    this.child.on('error', (err) => this.failAll(err));
    this.child.on('close', (code) => {
      if (this.pending.length > 0) {
        this.failAll(
          this.exitError ??
            new Error(`bridge process exited with code ${code}`),
        );
      }
    });
  }

  private onData(chunk: string): void {
    this.buffer += chunk;
    let nl: number;
    while ((nl = this.buffer.indexOf('\n')) >= 0) {
      const line = this.buffer.slice(0, nl).trim();
      this.buffer = this.buffer.slice(nl + 1);
      if (line.length === 0) continue;
      const waiter = this.pending.shift();
      if (waiter === undefined) continue; // unsolicited line, drop it
      try {
        waiter.resolve(JSON.parse(line) as BridgeReply);
      } catch (err) {
        waiter.reject(new Error(`unparseable bridge reply: ${line}`));
      }
    }
  }

  private failAll(err: Error): void {
    this.exitError = err;
    while (this.pending.length > 0) {
      this.pending.shift()!.reject(err);
    }
  }

  /** Send one request object, await its reply line. */
  request(payload: Record<string, unknown>): Promise<BridgeReply> {
    if (this.closed) {
      return Promise.reject(new BridgeError('bridge is closed'));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.child.stdin.write(JSON.stringify(payload) + '\n', (err) => {
        if (err) this.failAll(err);
      });
    });
  }

  /** Like request(), but rejects with BridgeError when ok is false. */
  async call(payload: Record<string, unknown>): Promise<BridgeReply> {
    const reply = await this.request(payload);
    if (!reply.ok) {
      throw new BridgeError(reply.error ?? 'bridge call failed', reply.kind);
    }
    return reply;
  }

  get isClosed(): boolean {
    return this.closed;
  }

  /** End stdin and wait for the child to exit. */
  close(): Promise<void> {
    if (this.closed) return Promise.resolve();
    this.closed = true;
    return new Promise((resolve) => {
      this.child.once('close', () => resolve());
      this.child.stdin.end();
    });
  }
}
