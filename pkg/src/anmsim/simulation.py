"""Transition pipeline: action clipping, storage dynamics, injection
assembly, the power-flow step, and the loss/penalty/reward terms.

Action layout is fixed by device order: one (p_set, q_set) pair per
RENEWABLE_GEN, then one per STORAGE.  Raw set-points are never rejected;
:func:`clip_action` maps them onto the feasible box (device bounds,
available potential, and storage energy headroom over the step length).

A diverged power flow is an outcome, not an exception: the returned
:class:`TransitionOutcome` keeps the pre-step state (last valid soc and
aux) and callers treat it as terminal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ArityMismatch, DivergedState, PowerFlowDiverged
from .network import DeviceKind, NetworkSpec
from .powerflow import BranchModel, PowerFlowSolver, SolverOptions, build_admittance

# loads run at constant 0.95 power factor; q tracks p through this ratio
LOAD_Q_RATIO = math.tan(math.acos(0.95))

# headroom-limited set-points back off by this relative margin so that the
# subsequent soc update can never overshoot the capacity bound in rounding
_CLIP_BACKOFF = 1.0 - 1e-13


@dataclass(frozen=True)
class StochasticVars:
    load_p: np.ndarray    # per LOAD device (p.u., <= 0)
    gen_p_max: np.ndarray  # potential generation per RENEWABLE_GEN (p.u.)
    aux: np.ndarray       # K auxiliary values


@dataclass(frozen=True)
class GridState:
    dev_p: np.ndarray     # injection per device (p.u.)
    dev_q: np.ndarray
    soc: np.ndarray       # stored energy per STORAGE device (MWh)
    gen_p_max: np.ndarray  # last potential per RENEWABLE_GEN (p.u.)
    bus_v: np.ndarray     # complex voltage per bus (p.u.)
    branch_s: np.ndarray  # apparent flow per branch, max of both ends (p.u.)
    aux: np.ndarray


@dataclass(frozen=True)
class TransitionOutcome:
    state: GridState
    e_loss: float   # MWh
    penalty: float  # unitless
    diverged: bool


class SimulationEngine:
    """Per-network workspace: device index maps, admittance, solver, and
    branch coefficients are built once; transitions are numeric-only.
    Owned by a single environment instance (the solver scratch is shared).
    """

    def __init__(self, spec: NetworkSpec, opts: SolverOptions | None = None):
        self.spec = spec
        self.base = spec.base_mva
        self.load_idx = spec.devices_of_kind(DeviceKind.LOAD)
        self.ren_idx = spec.devices_of_kind(DeviceKind.RENEWABLE_GEN)
        self.sto_idx = spec.devices_of_kind(DeviceKind.STORAGE)
        self.slack_dev = spec.slack_device
        self.dev_bus = [spec.bus_position(d.bus) for d in spec.devices]
        self.action_len = 2 * (len(self.ren_idx) + len(self.sto_idx))

        devs = spec.devices
        self.ren_p_max = np.array([devs[i].p_max for i in self.ren_idx])
        self.sto_devs = [devs[i] for i in self.sto_idx]

        self.y = build_admittance(spec)
        self.solver = PowerFlowSolver(self.y, spec.slack_bus, opts)
        self.branches = BranchModel(spec)
        self.v_max = np.array([b.v_max for b in spec.buses])
        self.v_min = np.array([b.v_min for b in spec.buses])
        self.n_bus = len(spec.buses)
        self.last_iterations = 0  # solver iterations of the latest transition

    # -- feasibility mapping ------------------------------------------

    def clip_action(self, a: np.ndarray, vars: StochasticVars,
                    soc: np.ndarray, delta_t: float) -> np.ndarray:
        """Project raw set-points onto the feasible box.  Idempotent for
        fixed (vars, soc, delta_t)."""
        a = np.asarray(a, dtype=float)
        if a.shape != (self.action_len,):
            raise ArityMismatch(
                f"action must have length {self.action_len}, got {a.shape}")
        if len(vars.gen_p_max) != len(self.ren_idx):
            raise ArityMismatch(
                f"expected {len(self.ren_idx)} potential-generation values")
        if len(soc) != len(self.sto_idx):
            raise ArityMismatch(f"expected {len(self.sto_idx)} soc values")
        out = a.copy()
        k = 0
        for j, i in enumerate(self.ren_idx):
            d = self.spec.devices[i]
            hi = min(d.p_max, vars.gen_p_max[j])
            out[k] = min(max(out[k], 0.0), max(hi, 0.0))
            out[k + 1] = min(max(out[k + 1], d.q_min), d.q_max)
            k += 2
        for j, d in enumerate(self.sto_devs):
            p = min(max(out[k], d.p_min), d.p_max)
            if delta_t > 0.0:
                root_eff = math.sqrt(d.eff)
                if p < 0.0:  # charging: bounded by remaining capacity
                    cap = (d.soc_max - soc[j]) / (root_eff * self.base * delta_t)
                    p = max(p, -cap * _CLIP_BACKOFF)
                elif p > 0.0:  # discharging: bounded by stored energy
                    avail = (soc[j] - d.soc_min) * root_eff / (self.base * delta_t)
                    p = min(p, avail * _CLIP_BACKOFF)
            out[k] = p
            out[k + 1] = min(max(out[k + 1], d.q_min), d.q_max)
            k += 2
        return out

    # -- transition ----------------------------------------------------

    def transition(self, s: GridState, a: np.ndarray, vars: StochasticVars,
                   delta_t: float) -> TransitionOutcome:
        """Advance one step.  ``a`` must already be clipped."""
        spec = self.spec
        n_dev = len(spec.devices)
        a = np.asarray(a, dtype=float)
        if a.shape != (self.action_len,):
            raise ArityMismatch(
                f"action must have length {self.action_len}, got {a.shape}")
        if len(vars.load_p) != len(self.load_idx):
            raise ArityMismatch(
                f"expected {len(self.load_idx)} load demand values")
        dev_p = np.zeros(n_dev)
        dev_q = np.zeros(n_dev)

        for j, i in enumerate(self.load_idx):
            dev_p[i] = vars.load_p[j]
            dev_q[i] = vars.load_p[j] * LOAD_Q_RATIO

        k = 0
        for i in self.ren_idx:
            dev_p[i] = a[k]
            dev_q[i] = a[k + 1]
            k += 2

        soc_new = s.soc.copy()
        storage_loss = 0.0
        for j, i in enumerate(self.sto_idx):
            d = self.sto_devs[j]
            soc_new[j], p_act = storage_transition(
                s.soc[j], a[k], d, delta_t, self.base)
            dev_p[i] = p_act
            dev_q[i] = a[k + 1]
            storage_loss += _storage_step_loss(p_act, d.eff, delta_t, self.base)
            k += 2

        inj = np.zeros(self.n_bus, dtype=complex)
        for i in range(n_dev):
            if i != self.slack_dev:
                inj[self.dev_bus[i]] += complex(dev_p[i], dev_q[i])

        try:
            sol = self.solver.solve(inj)
        except PowerFlowDiverged as exc:
            self.last_iterations = exc.iterations
            return TransitionOutcome(state=s, e_loss=0.0, penalty=0.0,
                                     diverged=True)
        self.last_iterations = sol.iterations

        dev_p[self.slack_dev] = sol.slack_injection.real
        dev_q[self.slack_dev] = sol.slack_injection.imag

        flows = self.branches.flows(sol.v)
        branch_s = np.maximum(np.abs(flows.s_from), np.abs(flows.s_to))

        gen_p_max = np.asarray(vars.gen_p_max, dtype=float).copy()
        curtail = 0.0
        for j, i in enumerate(self.ren_idx):
            curtail += max(0.0, gen_p_max[j] - dev_p[i])

        state = GridState(dev_p=dev_p, dev_q=dev_q, soc=soc_new,
                          gen_p_max=gen_p_max, bus_v=sol.v,
                          branch_s=branch_s,
                          aux=np.asarray(vars.aux, dtype=float).copy())
        e_loss = _compose_e_loss(float(np.sum(flows.loss)), curtail,
                                 storage_loss, self.base, delta_t)
        pen = self.penalty(state)
        return TransitionOutcome(state=state, e_loss=e_loss, penalty=pen,
                                 diverged=False)

    def penalty(self, state: GridState) -> float:
        vmag = np.abs(state.bus_v)
        over = np.maximum(0.0, vmag - self.v_max)
        under = np.maximum(0.0, self.v_min - vmag)
        flow_over = np.maximum(0.0, state.branch_s - self.branches.rate)
        return float(np.sum(over) + np.sum(under) + np.sum(flow_over))


def _storage_step_loss(p_actual: float, eff: float, delta_t: float,
                       base_mva: float) -> float:
    """Round-trip energy lost in one step (MWh): the gap between grid-side
    and store-side energy at sqrt(eff) per direction."""
    if p_actual == 0.0 or delta_t == 0.0:
        return 0.0
    root_eff = math.sqrt(eff)
    grid_mwh = abs(p_actual) * base_mva * delta_t
    if p_actual < 0.0:  # charging: store receives less than the grid sent
        return grid_mwh * (1.0 - root_eff)
    return grid_mwh * (1.0 / root_eff - 1.0)  # discharge: store pays more


def storage_transition(soc: float, p_set: float, dev, delta_t: float,
                       base_mva: float):
    """Advance one storage unit: (soc', p_actual).

    Charging (p_set < 0) books sqrt(eff) of the absorbed energy;
    discharging pays 1/sqrt(eff).  When the set-point would cross a
    capacity bound, p_actual is cut to the exactly available energy and
    soc' pins to the bound.
    """
    if p_set == 0.0 or delta_t == 0.0:
        return soc, p_set
    root_eff = math.sqrt(dev.eff)
    if p_set < 0.0:
        gain = root_eff * (-p_set) * base_mva * delta_t
        if soc + gain > dev.soc_max:
            gain = dev.soc_max - soc
            p_actual = -(gain / (root_eff * base_mva * delta_t))
            return dev.soc_max, p_actual
        return soc + gain, p_set
    drop = p_set * base_mva * delta_t / root_eff
    if soc - drop < dev.soc_min:
        drop = soc - dev.soc_min
        p_actual = drop * root_eff / (base_mva * delta_t)
        return dev.soc_min, p_actual
    return soc - drop, p_set


def _compose_e_loss(network_pu: float, curtail_pu: float,
                    storage_mwh: float, base_mva: float,
                    delta_t: float) -> float:
    return delta_t * base_mva * (network_pu + curtail_pu) + storage_mwh


@lru_cache(maxsize=8)
def _engine_for(spec: NetworkSpec) -> SimulationEngine:
    return SimulationEngine(spec)


def clip_action(a: np.ndarray, spec: NetworkSpec, vars: StochasticVars,
                soc: np.ndarray, delta_t: float) -> np.ndarray:
    """Standalone feasibility projection; see SimulationEngine.clip_action.
    Storage energy limits need the current soc and the step length, so both
    ride along with the declared (action, spec, vars) triple.
    """
    return _engine_for(spec).clip_action(a, vars, np.asarray(soc, float),
                                         delta_t)


def next_state(s: GridState, a: np.ndarray, vars: StochasticVars,
               spec: NetworkSpec, delta_t: float) -> TransitionOutcome:
    """One full transition on a transient engine (callers that step in a
    loop should hold a SimulationEngine instead)."""
    return _engine_for(spec).transition(s, a, vars, delta_t)


def energy_loss(outcome: TransitionOutcome, vars: StochasticVars,
                spec: NetworkSpec, delta_t: float) -> float:
    """Energy lost over the step (MWh): network I^2 r losses, curtailed
    renewable potential, and storage round-trip losses."""
    if outcome.diverged:
        raise DivergedState("energy loss is undefined for a diverged step")
    eng = _engine_for(spec)
    state = outcome.state
    network_pu = float(np.sum(eng.branches.flows(state.bus_v).loss))
    curtail = 0.0
    for j, i in enumerate(eng.ren_idx):
        curtail += max(0.0, vars.gen_p_max[j] - state.dev_p[i])
    storage_mwh = 0.0
    for j, i in enumerate(eng.sto_idx):
        storage_mwh += _storage_step_loss(state.dev_p[i], eng.sto_devs[j].eff,
                                          delta_t, spec.base_mva)
    return _compose_e_loss(network_pu, curtail, storage_mwh, spec.base_mva,
                           delta_t)


def penalty(state: GridState, spec: NetworkSpec) -> float:
    """Linear overshoot of voltage-magnitude and branch-rating limits."""
    return _engine_for(spec).penalty(state)


def reward(e_loss: float, penalty: float, lamb: float,
           clip: tuple[float, float]) -> float:
    """r = clamp(-(e_loss + lamb * penalty), c_min, c_max)."""
    c_min, c_max = clip
    return float(min(max(-(e_loss + lamb * penalty), c_min), c_max))
