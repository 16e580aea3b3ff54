"""Agent-facing environment: reset/step/render/close over the simulation
engine, with pluggable initial-state and stochastic-variable hooks.

Configuration is immutable; the environment owns all mutable episode
state.  Divergence of the power flow is the only terminal condition and
latches: further steps return the terminal observation with reward 0.

Randomness is counter-based: draws are keyed on (seed, step index), never
on call order, so trajectories replay exactly regardless of how many
times intermediate quantities are sampled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    ArityMismatch,
    Closed,
    InitStateInfeasible,
    InvalidConfig,
    NotReset,
    PowerFlowDiverged,
)
from .network import DeviceKind, NetworkSpec, validate
from .simulation import GridState, SimulationEngine, StochasticVars, reward
from .snapshot import StateSnapshot

OBS_QUANTITIES = ("dev_p", "dev_q", "soc", "gen_p_max", "bus_v_mag",
                  "branch_s", "aux")


@dataclass(frozen=True)
class ObservationSelector:
    """Either the full state (entries=None) or an explicit ordered list of
    (quantity, element index) pairs."""
    entries: Optional[tuple[tuple[str, int], ...]] = None

    @property
    def is_full(self) -> bool:
        return self.entries is None


FULL_STATE = ObservationSelector()


def selector_of(pairs) -> ObservationSelector:
    return ObservationSelector(entries=tuple((str(q), int(i))
                                             for q, i in pairs))


@dataclass(frozen=True)
class EnvConfig:
    spec: NetworkSpec
    obs_selector: ObservationSelector
    K: int
    delta_t: float
    gamma: float
    lamb: float
    aux_bounds: tuple[tuple[float, float], ...]
    costs_clipping: tuple[float, float]
    seed: int


@dataclass(frozen=True)
class EnvironmentHooks:
    init_state: Callable[[], GridState]
    next_vars: Callable[[GridState], StochasticVars]
    observation_bounds: Optional[Callable[[], tuple]] = None


@dataclass(frozen=True)
class StepResult:
    obs: np.ndarray
    reward: float
    done: bool
    info: dict


def _check_config(config: EnvConfig) -> None:
    report = validate(config.spec)
    if not report.ok:
        raise InvalidConfig("spec", f"network invalid: {report.errors()[0]}")
    if not isinstance(config.K, int) or config.K < 0:
        raise InvalidConfig("K", f"need a count >= 0, got {config.K!r}")
    if not config.delta_t > 0:
        raise InvalidConfig("delta_t", f"need > 0 hours, got {config.delta_t}")
    if not 0 < config.gamma <= 1:
        raise InvalidConfig("gamma", f"need a value in (0, 1], got {config.gamma}")
    if config.lamb < 0:
        raise InvalidConfig("lamb", f"need >= 0, got {config.lamb}")
    if len(config.aux_bounds) != config.K:
        raise InvalidConfig("aux_bounds",
                            f"need {config.K} pairs, got {len(config.aux_bounds)}")
    for k, (lo, hi) in enumerate(config.aux_bounds):
        if lo > hi:
            raise InvalidConfig(f"aux_bounds[{k}]", f"lo {lo} exceeds hi {hi}")
    c_min, c_max = config.costs_clipping
    if not (c_min <= 0.0 <= c_max):
        raise InvalidConfig("costs_clipping",
                            f"need c_min <= 0 <= c_max, got ({c_min}, {c_max})")
    if not (isinstance(config.seed, int) and 0 <= config.seed < 2 ** 64):
        raise InvalidConfig("seed", "need an unsigned 64-bit integer")


def _resolve_layout(config: EnvConfig) -> tuple[tuple[str, int], ...]:
    spec = config.spec
    sizes = {
        "dev_p": len(spec.devices),
        "dev_q": len(spec.devices),
        "soc": len(spec.devices_of_kind(DeviceKind.STORAGE)),
        "gen_p_max": len(spec.devices_of_kind(DeviceKind.RENEWABLE_GEN)),
        "bus_v_mag": len(spec.buses),
        "branch_s": len(spec.branches),
        "aux": config.K,
    }
    sel = config.obs_selector
    if sel.is_full:
        return tuple((q, i) for q in OBS_QUANTITIES for i in range(sizes[q]))
    if not sel.entries:
        raise InvalidConfig("obs_selector", "explicit selector must be non-empty")
    for q, i in sel.entries:
        if q not in sizes:
            raise InvalidConfig("obs_selector", f"unknown quantity {q!r}")
        if not 0 <= i < sizes[q]:
            raise InvalidConfig("obs_selector",
                                f"index {i} out of range for {q} (n={sizes[q]})")
    return sel.entries


class Environment:
    """Single-owner mutable episode state over an immutable config."""

    def __init__(self, config: EnvConfig, hooks: EnvironmentHooks):
        _check_config(config)
        self.config = config
        self.hooks = hooks
        self._engine = SimulationEngine(config.spec)
        self._layout = _resolve_layout(config)
        self._full = config.obs_selector.is_full
        self._state: GridState | None = None
        self._done = False
        self._steps = 0
        self._closed = False
        self._last_reward = 0.0
        self._last_e_loss = 0.0
        self._last_penalty = 0.0

    # -- introspection -------------------------------------------------

    @property
    def observation_length(self) -> int:
        return len(self._layout)

    @property
    def action_length(self) -> int:
        return self._engine.action_len

    def action_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Declared clip ranges per action component (potential-independent:
        renewables report [0, p_max])."""
        lo, hi = [], []
        devs = self.config.spec.devices
        for i in self._engine.ren_idx:
            lo += [0.0, devs[i].q_min]
            hi += [devs[i].p_max, devs[i].q_max]
        for i in self._engine.sto_idx:
            lo += [devs[i].p_min, devs[i].q_min]
            hi += [devs[i].p_max, devs[i].q_max]
        return np.array(lo), np.array(hi)

    def observation_bounds(self):
        if self.hooks.observation_bounds is None:
            return None
        bounds = tuple(self.hooks.observation_bounds())
        if len(bounds) != self.observation_length:
            raise ArityMismatch(
                f"observation bounds must have {self.observation_length} "
                f"entries, got {len(bounds)}")
        return bounds

    def rng(self, step: int | None = None) -> np.random.Generator:
        """Counter-based generator keyed on (seed, step)."""
        s = self._steps if step is None else step
        return np.random.Generator(np.random.Philox(key=[self.config.seed, s]))

    # -- observation extraction -----------------------------------------

    def observation(self, state: GridState | None = None) -> np.ndarray:
        st = self._state if state is None else state
        if st is None:
            raise NotReset("no state to observe; call reset first")
        if self._full:
            return np.concatenate([
                st.dev_p, st.dev_q, st.soc, st.gen_p_max,
                np.abs(st.bus_v), st.branch_s, st.aux])
        vals = np.empty(len(self._layout))
        cache = {}
        for k, (q, i) in enumerate(self._layout):
            if q == "bus_v_mag":
                if "vm" not in cache:
                    cache["vm"] = np.abs(st.bus_v)
                vals[k] = cache["vm"][i]
            else:
                vals[k] = getattr(st, q)[i]
        return vals

    # -- lifecycle -------------------------------------------------------

    def _ensure_open(self):
        if self._closed:
            raise Closed("environment is closed")

    def reset(self) -> np.ndarray:
        self._ensure_open()
        state = self.hooks.init_state()
        spec = self.config.spec
        sto = [spec.devices[i] for i in self._engine.sto_idx]
        if len(state.soc) != len(sto):
            raise ArityMismatch(f"init state must carry {len(sto)} soc values")
        for j, d in enumerate(sto):
            if not d.soc_min <= state.soc[j] <= d.soc_max:
                raise InitStateInfeasible(
                    f"initial soc {state.soc[j]} outside "
                    f"[{d.soc_min}, {d.soc_max}] for device {d.id}")
        if len(state.aux) != self.config.K:
            raise ArityMismatch(
                f"init state must carry {self.config.K} aux values")

        inj = np.zeros(len(spec.buses), dtype=complex)
        for i, d in enumerate(spec.devices):
            if i != self._engine.slack_dev:
                inj[self._engine.dev_bus[i]] += complex(state.dev_p[i],
                                                        state.dev_q[i])
        try:
            sol = self._engine.solver.solve(inj)
        except PowerFlowDiverged as exc:
            raise InitStateInfeasible(
                f"initial power flow diverged: {exc}") from exc

        dev_p = np.asarray(state.dev_p, dtype=float).copy()
        dev_q = np.asarray(state.dev_q, dtype=float).copy()
        dev_p[self._engine.slack_dev] = sol.slack_injection.real
        dev_q[self._engine.slack_dev] = sol.slack_injection.imag
        flows = self._engine.branches.flows(sol.v)
        self._state = GridState(
            dev_p=dev_p, dev_q=dev_q,
            soc=np.asarray(state.soc, dtype=float).copy(),
            gen_p_max=np.asarray(state.gen_p_max, dtype=float).copy(),
            bus_v=sol.v,
            branch_s=np.maximum(np.abs(flows.s_from), np.abs(flows.s_to)),
            aux=np.asarray(state.aux, dtype=float).copy(),
        )
        self._done = False
        self._steps = 0
        self._last_reward = 0.0
        self._last_e_loss = 0.0
        self._last_penalty = 0.0
        return self.observation()

    def step(self, action) -> StepResult:
        self._ensure_open()
        if self._state is None:
            raise NotReset("step before reset")
        if self._done:
            return StepResult(obs=self.observation(), reward=0.0, done=True,
                              info={"e_loss": 0.0, "penalty": 0.0,
                                    "diverged": False, "iterations": 0})
        vars = self.hooks.next_vars(self._state)
        if len(vars.aux) != self.config.K:
            raise ArityMismatch(
                f"next_vars must return {self.config.K} aux values")
        a = self._engine.clip_action(np.asarray(action, dtype=float), vars,
                                     self._state.soc, self.config.delta_t)
        out = self._engine.transition(self._state, a, vars,
                                      self.config.delta_t)
        c_min, c_max = self.config.costs_clipping
        if out.diverged:
            r = c_min
            self._done = True
        else:
            r = reward(out.e_loss, out.penalty, self.config.lamb,
                       self.config.costs_clipping)
        self._state = out.state
        self._steps += 1
        self._last_reward = r
        self._last_e_loss = out.e_loss
        self._last_penalty = out.penalty
        return StepResult(obs=self.observation(), reward=r, done=self._done,
                          info={"e_loss": out.e_loss, "penalty": out.penalty,
                                "diverged": out.diverged,
                                "iterations": self._engine.last_iterations})

    def render_frame(self) -> StateSnapshot:
        self._ensure_open()
        if self._state is None:
            raise NotReset("render before reset")
        st = self._state
        return StateSnapshot(
            step=self._steps,
            time_hours=self._steps * self.config.delta_t,
            dev_p=st.dev_p.copy(), dev_q=st.dev_q.copy(),
            soc=st.soc.copy(), gen_p_max=st.gen_p_max.copy(),
            bus_v_mag=np.abs(st.bus_v), bus_v_ang=np.angle(st.bus_v),
            branch_s=st.branch_s.copy(), aux=st.aux.copy(),
            reward=self._last_reward, e_loss=self._last_e_loss,
            penalty=self._last_penalty, done=self._done)

    def close(self) -> None:
        self._closed = True
        self._state = None


def build_env(config: EnvConfig, hooks: EnvironmentHooks) -> Environment:
    """Validate the config and pre-build the solver workspace."""
    return Environment(config, hooks)
