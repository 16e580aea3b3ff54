"""Six-bus day-cycle reference task.

A radial 33 kV feeder under a 132 kV slack: residential, industrial, and
EV-garage loads, a solar and a wind farm, and one storage unit next to
the EV garage.  Demand and potential generation follow fixed quarter-hour
daily profiles that repeat indefinitely, so episodes are fully
deterministic; the only state outside the grid itself is the time-of-day
index carried as the single auxiliary variable.

Network parameters, storage sizing, and the profile curves are reference
values chosen for this implementation.  Profiles ship as a frozen data
file with a SHA-256 sidecar (regenerated by scripts/make_anm6_profiles.py)
and the ANM_PROFILE_DIR environment variable points loads at an
alternative directory.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .env import EnvConfig, EnvironmentHooks, FULL_STATE
from .errors import (
    BadField,
    MalformedDocument,
    ProfileArityMismatch,
    ProfileChecksumMismatch,
    ProfileFileMissing,
)
from .network import DeviceKind, NetworkSpec, load_network
from .simulation import GridState, LOAD_Q_RATIO, StochasticVars

DATA_DIR = Path(__file__).with_name("data")
PROFILE_NAME = "anm6_profiles.json"
NETWORK_NAME = "anm6_network.json"

DELTA_T = 0.25
STEPS_PER_DAY = 96
GAMMA = 0.995
LAMB = 100.0
COSTS_CLIPPING = (-100.0, 0.0)


@dataclass(frozen=True)
class DailyProfileSet:
    steps_per_day: int
    demand: dict      # LOAD device id -> series (p.u., <= 0)
    potential: dict   # RENEWABLE_GEN device id -> series (p.u., >= 0)


def profile_dir() -> Path:
    override = os.environ.get("ANM_PROFILE_DIR")
    return Path(override) if override else DATA_DIR


@lru_cache(maxsize=1)
def anm6_network() -> NetworkSpec:
    return load_network(DATA_DIR / NETWORK_NAME)


def load_profiles(directory: Path | None = None) -> DailyProfileSet:
    """Read and checksum-verify the profile file.  The sidecar
    <name>.sha256 must match the file bytes exactly."""
    directory = Path(directory) if directory else profile_dir()
    path = directory / PROFILE_NAME
    if not path.is_file():
        raise ProfileFileMissing(f"profile file not found: {path}")
    blob = path.read_bytes()

    sidecar = directory / (PROFILE_NAME + ".sha256")
    if not sidecar.is_file():
        raise ProfileFileMissing(f"checksum sidecar not found: {sidecar}")
    expected = sidecar.read_text(encoding="utf-8").split()[0].strip().lower()
    actual = hashlib.sha256(blob).hexdigest()
    if actual != expected:
        raise ProfileChecksumMismatch(
            f"profile checksum {actual[:12]}... does not match "
            f"sidecar {expected[:12]}...")

    try:
        doc = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid profile JSON: {exc}") from exc
    for key in ("steps_per_day", "demand", "potential"):
        if key not in doc:
            raise MalformedDocument(f"profile file missing key '{key}'")

    n = int(doc["steps_per_day"])
    demand, potential = {}, {}
    for group, out, sign in (("demand", demand, -1), ("potential", potential, 1)):
        for dev_id, series in doc[group].items():
            if len(series) != n:
                raise ProfileArityMismatch(
                    f"{group}[{dev_id}] has {len(series)} entries, "
                    f"expected {n}")
            arr = np.asarray(series, dtype=float)
            if sign < 0 and np.any(arr > 0):
                raise BadField(f"demand[{dev_id}] must be <= 0 throughout")
            if sign > 0 and np.any(arr < 0):
                raise BadField(f"potential[{dev_id}] must be >= 0 throughout")
            out[int(dev_id)] = arr
    return DailyProfileSet(steps_per_day=n, demand=demand,
                           potential=potential)


def _check_roster(spec: NetworkSpec, profiles: DailyProfileSet) -> None:
    loads = {spec.devices[i].id for i in spec.devices_of_kind(DeviceKind.LOAD)}
    rens = {spec.devices[i].id
            for i in spec.devices_of_kind(DeviceKind.RENEWABLE_GEN)}
    if set(profiles.demand) != loads:
        raise ProfileArityMismatch(
            f"demand series for devices {sorted(profiles.demand)} do not "
            f"cover the load devices {sorted(loads)}")
    if set(profiles.potential) != rens:
        raise ProfileArityMismatch(
            f"potential series for devices {sorted(profiles.potential)} do "
            f"not cover the renewable devices {sorted(rens)}")
    for i in spec.devices_of_kind(DeviceKind.RENEWABLE_GEN):
        d = spec.devices[i]
        if np.any(profiles.potential[d.id] > d.p_max):
            raise BadField(
                f"potential[{d.id}] exceeds the device limit {d.p_max}")


def _vars_at(spec: NetworkSpec, profiles: DailyProfileSet,
             t: int) -> StochasticVars:
    load_p = np.array([profiles.demand[spec.devices[i].id][t]
                       for i in spec.devices_of_kind(DeviceKind.LOAD)])
    gen_p_max = np.array([profiles.potential[spec.devices[i].id][t]
                          for i in
                          spec.devices_of_kind(DeviceKind.RENEWABLE_GEN)])
    return StochasticVars(load_p=load_p, gen_p_max=gen_p_max,
                          aux=np.array([float(t)]))


def _init_state(spec: NetworkSpec, profiles: DailyProfileSet) -> GridState:
    vars0 = _vars_at(spec, profiles, 0)
    n_dev = len(spec.devices)
    dev_p = np.zeros(n_dev)
    dev_q = np.zeros(n_dev)
    for j, i in enumerate(spec.devices_of_kind(DeviceKind.LOAD)):
        dev_p[i] = vars0.load_p[j]
        dev_q[i] = vars0.load_p[j] * LOAD_Q_RATIO
    for j, i in enumerate(spec.devices_of_kind(DeviceKind.RENEWABLE_GEN)):
        dev_p[i] = vars0.gen_p_max[j]  # uncurtailed at the initial instant
    soc = np.array([(spec.devices[i].soc_min + spec.devices[i].soc_max) / 2.0
                    for i in spec.devices_of_kind(DeviceKind.STORAGE)])
    return GridState(dev_p=dev_p, dev_q=dev_q, soc=soc,
                     gen_p_max=vars0.gen_p_max.copy(),
                     bus_v=np.ones(len(spec.buses), dtype=complex),
                     branch_s=np.zeros(len(spec.branches)),
                     aux=np.array([0.0]))


@lru_cache(maxsize=1)
def _default_bundle():
    spec = anm6_network()
    profiles = load_profiles(DATA_DIR)
    _check_roster(spec, profiles)
    return spec, profiles


def anm6_init_state() -> GridState:
    """Initial state: profile index 0, storage at half capacity."""
    spec, profiles = _default_bundle()
    return _init_state(spec, profiles)


def anm6_next_vars(state: GridState) -> StochasticVars:
    """Advance the day clock one slot (wrapping at midnight) and read the
    demand/potential series there.  Pure and seed-independent."""
    spec, profiles = _default_bundle()
    t = int(state.aux[0] + 1) % profiles.steps_per_day
    return _vars_at(spec, profiles, t)


def _observation_bounds(spec: NetworkSpec, profiles: DailyProfileSet):
    lo, hi = [], []
    for d in spec.devices:
        lo.append(d.p_min)
        hi.append(d.p_max)
    for d in spec.devices:
        lo.append(d.q_min)
        hi.append(d.q_max)
    for i in spec.devices_of_kind(DeviceKind.STORAGE):
        lo.append(spec.devices[i].soc_min)
        hi.append(spec.devices[i].soc_max)
    for i in spec.devices_of_kind(DeviceKind.RENEWABLE_GEN):
        lo.append(0.0)
        hi.append(spec.devices[i].p_max)
    for _ in spec.buses:
        lo.append(0.0)
        hi.append(2.0)
    for _ in spec.branches:
        lo.append(0.0)
        hi.append(10.0)
    lo.append(0.0)
    hi.append(float(profiles.steps_per_day - 1))
    return tuple(zip(lo, hi))


def build_anm6(seed: int = 0) -> tuple[EnvConfig, EnvironmentHooks]:
    """Config and hooks for the reference task.  Honors ANM_PROFILE_DIR;
    trajectories do not depend on the seed (the task is deterministic)."""
    spec = anm6_network()
    profiles = load_profiles()
    _check_roster(spec, profiles)

    def init_state() -> GridState:
        return _init_state(spec, profiles)

    def next_vars(state: GridState) -> StochasticVars:
        t = int(state.aux[0] + 1) % profiles.steps_per_day
        return _vars_at(spec, profiles, t)

    config = EnvConfig(
        spec=spec,
        obs_selector=FULL_STATE,
        K=1,
        delta_t=DELTA_T,
        gamma=GAMMA,
        lamb=LAMB,
        aux_bounds=((0.0, float(profiles.steps_per_day - 1)),),
        costs_clipping=COSTS_CLIPPING,
        seed=seed,
    )
    hooks = EnvironmentHooks(
        init_state=init_state,
        next_vars=next_vars,
        observation_bounds=lambda: _observation_bounds(spec, profiles),
    )
    return config, hooks
