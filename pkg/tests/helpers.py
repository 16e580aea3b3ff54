"""Shared fixtures: random radial test networks kept small enough that the
Gauss-Seidel oracle converges, plus converters into oracle-format tuples.
"""

from __future__ import annotations

import numpy as np

from anmsim.network import (
    BranchSpec,
    BusKind,
    BusSpec,
    DeviceKind,
    DeviceSpec,
    NetworkSpec,
)


def make_radial_case(rng: np.random.Generator, max_buses: int = 10):
    """A random radial network with modest injections.  Returns
    (spec, injections) where injections is the per-bus complex vector the
    solver consumes (slack entry zero).
    """
    n = int(rng.integers(2, max_buses + 1))
    buses = [BusSpec(0, BusKind.SLACK, 132.0, 1.1, 0.9)]
    for i in range(1, n):
        buses.append(BusSpec(i, BusKind.PQ, 33.0, 1.1, 0.9))

    branches = []
    for t in range(1, n):
        f = int(rng.integers(0, t))  # parent among existing buses: radial
        r = float(rng.uniform(0.004, 0.03))
        x = float(rng.uniform(0.02, 0.10))
        b = float(rng.uniform(0.0, 0.02))
        tap = float(rng.uniform(0.98, 1.02)) if rng.random() < 0.3 else 1.0
        shift = float(rng.uniform(-0.02, 0.02)) if rng.random() < 0.2 else 0.0
        branches.append(BranchSpec(f, t, r, x, b, rate=1.0, tap=tap,
                                   shift=shift))

    devices = [DeviceSpec(0, 0, DeviceKind.SLACK_GEN,
                          100.0, -100.0, 100.0, -100.0)]
    inj = np.zeros(n, dtype=complex)
    for i in range(1, n):
        p = float(rng.uniform(-0.15, 0.05))
        q = float(rng.uniform(-0.05, 0.05))
        devices.append(DeviceSpec(i, i, DeviceKind.LOAD,
                                  0.0, -0.5, 0.5, -0.5))
        inj[i] = complex(p, q)

    spec = NetworkSpec(base_mva=100.0, buses=tuple(buses),
                       branches=tuple(branches), devices=tuple(devices))
    return spec, inj


def oracle_branches(spec: NetworkSpec):
    """Branch tuples in the (f, t, r, x, b, tap, shift) layout the oracle
    helpers consume; bus ids are positional already in test networks."""
    pos = {b.id: i for i, b in enumerate(spec.buses)}
    return [(pos[br.from_bus], pos[br.to_bus], br.r, br.x, br.b, br.tap,
             br.shift) for br in spec.branches]
