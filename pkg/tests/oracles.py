"""Independent reference implementations used to freeze expected values.

Deliberately naive and method-distinct from the production solver: the
power-flow oracle is a plain Gauss-Seidel fixed-point sweep on the bus
voltage equations, and the admittance/flow oracles work element-wise on
the branch list.  Nothing here imports from anmsim.powerflow.
"""

from __future__ import annotations

import cmath

import numpy as np


def gs_admittance(buses, branches):
    """Dense bus admittance from (from, to, r, x, b, tap, shift) tuples;
    bus ids are assumed positional 0..n-1.
    """
    n = len(buses)
    y = np.zeros((n, n), dtype=complex)
    for f, t, r, x, b, tap, shift in branches:
        ys = 1.0 / complex(r, x)
        sh = complex(0.0, b / 2.0)
        ratio = tap * cmath.exp(1j * shift)
        y[f, f] += (ys + sh) / (tap * tap)
        y[f, t] -= ys / ratio.conjugate()
        y[t, f] -= ys / ratio
        y[t, t] += ys + sh
    return y


def gs_powerflow(y, s_inj, slack, tol=1e-13, max_sweeps=200000):
    """Gauss-Seidel sweep: V_i <- (conj(S_i / V_i) - sum_{k!=i} Y_ik V_k) / Y_ii
    with the slack held at 1+0j.  Returns the complex voltage vector.
    """
    n = y.shape[0]
    v = np.ones(n, dtype=complex)
    for _ in range(max_sweeps):
        delta = 0.0
        for i in range(n):
            if i == slack:
                continue
            acc = 0.0 + 0.0j
            for k in range(n):
                if k != i:
                    acc += y[i, k] * v[k]
            new = ((s_inj[i] / v[i]).conjugate() - acc) / y[i, i]
            delta = max(delta, abs(new - v[i]))
            v[i] = new
        if delta < tol:
            return v
    raise RuntimeError(f"oracle did not converge (last delta {delta:.3e})")


def gs_bus_power(y, v):
    """S_i = V_i * conj(sum_k Y_ik V_k), element-wise."""
    n = y.shape[0]
    s = np.zeros(n, dtype=complex)
    for i in range(n):
        acc = 0.0 + 0.0j
        for k in range(n):
            acc += y[i, k] * v[k]
        s[i] = v[i] * acc.conjugate()
    return s


def gs_branch_flow(v, f, t, r, x, b, tap, shift):
    """(s_from, s_to, loss) for one branch from first principles."""
    ys = 1.0 / complex(r, x)
    sh = complex(0.0, b / 2.0)
    ratio = tap * cmath.exp(1j * shift)
    vf, vt = v[f], v[t]
    i_from = (ys + sh) / (tap * tap) * vf - ys / ratio.conjugate() * vt
    i_to = -ys / ratio * vf + (ys + sh) * vt
    s_from = vf * i_from.conjugate()
    s_to = vt * i_to.conjugate()
    i_series = ys * (vf / ratio - vt)
    loss = r * abs(i_series) ** 2
    return s_from, s_to, loss
