"""Command-line harness.

Subcommands:
  run       roll out a built-in agent and optionally export JSONL snapshots
  replay    re-simulate a snapshot file and compare rewards bit for bit
  bench     steady-state step-throughput and solver-iteration statistics
  validate  check a network file, exit nonzero on errors
  bridge    line-oriented JSON protocol on stdio for foreign-language hosts

Exit codes: 0 success, 1 failed check (validate errors, replay mismatch),
2 bad arguments, 3 environment build failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .anm6 import build_anm6
from .env import EnvConfig, Environment, EnvironmentHooks, FULL_STATE, build_env
from .errors import AnmError
from .network import DeviceKind, NetworkSpec, load_network, validate
from .simulation import GridState, StochasticVars
from .snapshot import StateSnapshot, read_snapshots, snapshot_to_json

ENV_BUILDERS = {
    "anm6": build_anm6,
    "anm6-easy": build_anm6,
}


@dataclass(frozen=True)
class RunReport:
    episodes: int
    steps: int
    return_sum: tuple      # undiscounted return, one scalar per episode
    wall_time_s: float
    steps_per_second: float
    divergences: int
    iterations: tuple = () # (min, mean, max) solver iterations, when timed

    def __str__(self) -> str:
        lines = [
            f"episodes          {self.episodes}",
            f"steps             {self.steps}",
            f"return_sum        {', '.join(repr(r) for r in self.return_sum)}",
            f"wall_time_s       {self.wall_time_s:.4f}",
            f"steps_per_second  {self.steps_per_second:.1f}",
            f"divergences       {self.divergences}",
        ]
        if self.iterations:
            lo, mean, hi = self.iterations
            lines.append(
                f"iterations        min {lo} / mean {mean:.2f} / max {hi}")
        return "\n".join(lines)


# -- environment construction -------------------------------------------

def static_hooks(spec: NetworkSpec) -> EnvironmentHooks:
    """Constant exogenous conditions for ad-hoc network files: no demand,
    potential generation pinned at nameplate, storage starting half full."""
    ren_idx = spec.devices_of_kind(DeviceKind.RENEWABLE_GEN)
    sto_idx = spec.devices_of_kind(DeviceKind.STORAGE)
    n_load = len(spec.devices_of_kind(DeviceKind.LOAD))
    p_max = np.array([spec.devices[i].p_max for i in ren_idx])

    def init_state() -> GridState:
        soc = np.array([(spec.devices[i].soc_min + spec.devices[i].soc_max)
                        / 2.0 for i in sto_idx])
        return GridState(
            dev_p=np.zeros(len(spec.devices)),
            dev_q=np.zeros(len(spec.devices)),
            soc=soc,
            gen_p_max=p_max.copy(),
            bus_v=np.ones(len(spec.buses), dtype=complex),
            branch_s=np.zeros(len(spec.branches)),
            aux=np.zeros(0))

    def next_vars(state: GridState) -> StochasticVars:
        return StochasticVars(load_p=np.zeros(n_load),
                              gen_p_max=p_max.copy(),
                              aux=np.zeros(0))

    return EnvironmentHooks(init_state=init_state, next_vars=next_vars)


def build_cli_env(env_name: str | None, network_file: str | None,
                  seed: int) -> Environment:
    """Raises AnmError/OSError on failure; callers map those to exit 3."""
    if env_name is not None:
        config, hooks = ENV_BUILDERS[env_name](seed=seed)
    else:
        spec = load_network(network_file)
        config = EnvConfig(spec=spec, obs_selector=FULL_STATE, K=0,
                           delta_t=0.25, gamma=0.995, lamb=100.0,
                           aux_bounds=(), costs_clipping=(-100.0, 0.0),
                           seed=seed)
        hooks = static_hooks(spec)
    return build_env(config, hooks)


def make_agent(name: str, env: Environment):
    if name == "do-nothing":
        zero = np.zeros(env.action_length)
        return lambda obs: zero
    lo, hi = env.action_bounds()

    def random_agent(obs):
        return env.rng().uniform(lo, hi)
    return random_agent


# -- run / replay --------------------------------------------------------

def cmd_run(env: Environment, agent_name: str, horizon: int,
            out_path=None) -> RunReport:
    """One episode of at most `horizon` steps (shorter if a terminal state
    is reached).  The output file gets the post-reset state as its first
    line, then one line per executed step."""
    agent = make_agent(agent_name, env)
    out = open(out_path, "w", encoding="utf-8") if out_path else None
    try:
        obs = env.reset()
        if out:
            out.write(snapshot_to_json(env.render_frame()) + "\n")
        ret = 0.0
        divergences = 0
        steps = 0
        t0 = time.perf_counter()
        for _ in range(horizon):
            res = env.step(agent(obs))
            obs = res.obs
            ret += res.reward
            steps += 1
            if res.info["diverged"]:
                divergences += 1
            if out:
                out.write(snapshot_to_json(env.render_frame()) + "\n")
            if res.done:
                break
        wall = time.perf_counter() - t0
    finally:
        if out:
            out.close()
    return RunReport(episodes=1, steps=steps, return_sum=(ret,),
                     wall_time_s=wall,
                     steps_per_second=steps / wall if wall > 0 else 0.0,
                     divergences=divergences)


def _extract_action(spec: NetworkSpec, snap: StateSnapshot) -> np.ndarray:
    """Applied set-points of the controllable devices, in action order.
    Clipping is idempotent, so feeding these back reproduces the step."""
    vals = []
    for i in spec.devices_of_kind(DeviceKind.RENEWABLE_GEN):
        vals += [snap.dev_p[i], snap.dev_q[i]]
    for i in spec.devices_of_kind(DeviceKind.STORAGE):
        vals += [snap.dev_p[i], snap.dev_q[i]]
    return np.array(vals)


def replay_trajectory(env: Environment, path) -> list:
    """Re-simulate a cmd_run snapshot file and return reward mismatches as
    (step, recorded, recomputed) triples; empty means bit-exact.

    Actions are recovered from the recorded device set-points, which is
    exact for every non-diverged step.  A diverged step keeps the previous
    state, so the offending action is not in the file; the step is flagged
    unless the fresh run independently reaches the same terminal."""
    snaps = read_snapshots(path)
    if not snaps:
        raise AnmError(f"no snapshots in {path}")
    spec = env.config.spec
    mismatches = []
    env.reset()
    if env.render_frame() != snaps[0]:
        mismatches.append((snaps[0].step, "initial state", "differs"))
    for snap in snaps[1:]:
        res = env.step(_extract_action(spec, snap))
        if res.reward != snap.reward or res.done != bool(snap.done):
            mismatches.append((snap.step, snap.reward, res.reward))
    return mismatches


def cmd_replay(env: Environment, path) -> int:
    mismatches = replay_trajectory(env, path)
    if mismatches:
        for step, recorded, recomputed in mismatches:
            print(f"step {step}: recorded {recorded!r} != "
                  f"recomputed {recomputed!r}")
        print(f"replay: {len(mismatches)} mismatch(es)")
        return 1
    print("replay: bit-exact")
    return 0


# -- bench ---------------------------------------------------------------

_WARMUP_STEPS = 100


def cmd_bench(env_name: str, steps: int, seed: int = 0,
              parallel: int = 1) -> RunReport:
    """Steady-state do-nothing throughput; the first 100 steps of every
    environment are excluded from timing."""
    barrier = threading.Barrier(parallel + 1)

    def worker(k: int):
        env = build_cli_env(env_name, None, seed + k)
        env.reset()
        action = np.zeros(env.action_length)
        for _ in range(_WARMUP_STEPS):
            if env.step(action).done:
                env.reset()
        barrier.wait()
        ret = 0.0
        divergences = 0
        iters = np.empty(steps, dtype=np.int64)
        for i in range(steps):
            res = env.step(action)
            ret += res.reward
            iters[i] = res.info["iterations"]
            if res.done:
                divergences += res.info["diverged"]
                env.reset()
        return ret, divergences, iters

    with ThreadPoolExecutor(max_workers=parallel) as pool:
        futures = [pool.submit(worker, k) for k in range(parallel)]
        barrier.wait()
        t0 = time.perf_counter()
        results = [f.result() for f in futures]
        wall = time.perf_counter() - t0

    iters = np.concatenate([r[2] for r in results])
    return RunReport(
        episodes=parallel,
        steps=steps * parallel,
        return_sum=tuple(r[0] for r in results),
        wall_time_s=wall,
        steps_per_second=steps * parallel / wall if wall > 0 else 0.0,
        divergences=sum(r[1] for r in results),
        iterations=(int(iters.min()), float(iters.mean()),
                    int(iters.max())))


# -- validate ------------------------------------------------------------

def cmd_validate(path) -> int:
    try:
        spec = load_network(path)
    except OSError as exc:
        print(f"unreadable: {exc}", file=sys.stderr)
        return 2
    except AnmError as exc:
        print(f"ERROR {exc}")
        return 1
    report = validate(spec)
    print(report)
    return 0 if report.ok else 1


# -- bridge --------------------------------------------------------------

def _floats(a) -> list:
    return [float(x) for x in np.asarray(a).ravel()]


def cmd_bridge(stdin=None, stdout=None) -> int:
    """One JSON request per line in, one JSON response per line out.

    ops: init {env|network, seed} -> descriptor; reset; step {action};
    render; close.  Responses carry ok=true or ok=false with error text.
    Floats go through unmodified repr, which round-trips IEEE doubles."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    env = None

    def reply(payload):
        stdout.write(json.dumps(payload, separators=(",", ":")) + "\n")
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            op = req["op"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            reply({"ok": False, "error": f"bad request: {exc}"})
            continue
        try:
            if op == "init":
                name = req.get("env")
                if name is not None and name not in ENV_BUILDERS:
                    reply({"ok": False, "error": f"unknown env '{name}'"})
                    continue
                env = build_cli_env(name, req.get("network"),
                                    int(req.get("seed", 0)))
                lo, hi = env.action_bounds()
                ob = env.observation_bounds()
                reply({"ok": True,
                       "obs_len": env.observation_length,
                       "act_len": env.action_length,
                       "action_lo": _floats(lo),
                       "action_hi": _floats(hi),
                       "observation_bounds":
                           [[float(a), float(b)] for a, b in ob]
                           if ob is not None else None,
                       "delta_t": env.config.delta_t,
                       "gamma": env.config.gamma,
                       "lamb": env.config.lamb,
                       "costs_clipping": list(env.config.costs_clipping)})
            elif env is None:
                reply({"ok": False, "error": "init first"})
            elif op == "reset":
                reply({"ok": True, "obs": _floats(env.reset())})
            elif op == "step":
                res = env.step(np.asarray(req["action"], dtype=float))
                reply({"ok": True, "obs": _floats(res.obs),
                       "reward": res.reward, "done": res.done,
                       "info": {"e_loss": res.info["e_loss"],
                                "penalty": res.info["penalty"],
                                "diverged": res.info["diverged"],
                                "iterations": res.info["iterations"]}})
            elif op == "render":
                reply({"ok": True,
                       "snapshot":
                           json.loads(snapshot_to_json(env.render_frame()))})
            elif op == "close":
                env.close()
                env = None
                reply({"ok": True})
            else:
                reply({"ok": False, "error": f"unknown op '{op}'"})
        except (AnmError, OSError, ValueError, KeyError) as exc:
            reply({"ok": False, "error": str(exc),
                   "kind": type(exc).__name__})
    return 0


# -- argument handling ---------------------------------------------------

def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in unsigned 64 bits")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _add_env_source(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--env", choices=sorted(ENV_BUILDERS))
    group.add_argument("--network", metavar="FILE")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anmsim", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="roll out a baseline agent")
    _add_env_source(run)
    run.add_argument("--agent", choices=("do-nothing", "random"),
                     default="do-nothing")
    run.add_argument("--horizon", type=_positive, default=96)
    run.add_argument("--seed", type=_u64, default=0)
    run.add_argument("--out", metavar="FILE")

    rep = sub.add_parser("replay", help="verify a snapshot file replays")
    _add_env_source(rep)
    rep.add_argument("--traj", metavar="FILE", required=True)
    rep.add_argument("--seed", type=_u64, default=0)

    bench = sub.add_parser("bench", help="measure step throughput")
    bench.add_argument("--env", choices=sorted(ENV_BUILDERS), required=True)
    bench.add_argument("--steps", type=_positive, default=10000)
    bench.add_argument("--seed", type=_u64, default=0)
    bench.add_argument("--parallel", type=_positive, default=1)

    val = sub.add_parser("validate", help="check a network file")
    val.add_argument("file")

    sub.add_parser("bridge", help="JSON-per-line protocol on stdio")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "validate":
        return cmd_validate(args.file)
    if args.cmd == "bridge":
        return cmd_bridge()
    try:
        if args.cmd == "bench":
            report = cmd_bench(args.env, args.steps, seed=args.seed,
                               parallel=args.parallel)
            print(report)
            return 0
        env = build_cli_env(args.env, args.network, args.seed)
    except (AnmError, OSError) as exc:
        print(f"environment build failed: {exc}", file=sys.stderr)
        return 3
    if args.cmd == "run":
        report = cmd_run(env, args.agent, args.horizon, args.out)
        print(report)
        return 0
    return cmd_replay(env, args.traj)


if __name__ == "__main__":
    sys.exit(main())
