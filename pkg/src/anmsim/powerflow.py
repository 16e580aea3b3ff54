"""AC power-flow core: admittance construction and a Newton-Raphson solver.

The solver works in polar coordinates with every non-slack bus treated as
PQ (device set-points fully determine P and Q), a flat 1.0 p.u. start,
and a full analytic Jacobian.  Topology is static per network, so each
solver instance precomputes its workspace once and per-solve work is
numeric only: small systems run through a compiled dense kernel, large
ones through a vectorized sparse path with LU factorization.

Sign convention: bus injections are positive for generation.  A solve
either converges with max(|dP|, |dQ|) <= tol at every non-slack bus or
raises :class:`PowerFlowDiverged` (iteration cap, singular Jacobian, or
a voltage magnitude escaping the guard interval).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numba import njit

from .errors import PowerFlowDiverged, SingularBranch
from .network import NetworkSpec


@dataclass(frozen=True)
class AdmittanceMatrix:
    n: int
    y: sp.csr_matrix  # complex, n x n


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 50
    v_guard: tuple[float, float] = (0.01, 10.0)
    dense_limit: int = 128  # bus count up to which the dense kernel is used


@dataclass(frozen=True)
class PowerFlowSolution:
    v: np.ndarray                 # complex voltage per bus (p.u.)
    iterations: int
    max_mismatch: float
    slack_injection: complex      # power at the slack device (p.u.)
    mismatch_history: tuple[float, ...]  # max mismatch before each update
    s_calc: np.ndarray            # complex power flowing out of each bus


@dataclass(frozen=True)
class BranchFlowSet:
    s_from: np.ndarray  # complex power entering the from end (p.u.)
    s_to: np.ndarray    # complex power entering the to end (p.u.)
    loss: np.ndarray    # r * |I_series|^2 per branch (p.u.)


def build_admittance(spec: NetworkSpec) -> AdmittanceMatrix:
    """Assemble the bus admittance matrix with the tap-on-from-side
    per-unit branch model.  Bus references are positional after
    validation; parallel branches accumulate.
    """
    n = len(spec.buses)
    pos = {b.id: i for i, b in enumerate(spec.buses)}
    rows, cols, vals = [], [], []
    for i, br in enumerate(spec.branches):
        if br.r == 0.0 and br.x == 0.0:
            raise SingularBranch(f"branch[{i}] has zero series impedance")
        f, t = pos[br.from_bus], pos[br.to_bus]
        y = 1.0 / complex(br.r, br.x)
        shunt = complex(0.0, br.b / 2.0)
        tap = br.tap * np.exp(1j * br.shift)
        rows += [f, f, t, t]
        cols += [f, t, f, t]
        vals += [(y + shunt) / (br.tap * br.tap),
                 -y / np.conj(tap),
                 -y / tap,
                 y + shunt]
    y_mat = sp.coo_matrix((np.asarray(vals, dtype=np.complex128),
                           (rows, cols)), shape=(n, n)).tocsr()
    return AdmittanceMatrix(n=n, y=y_mat)


@njit(cache=True, nogil=True)
def _nr_polar_dense(G, B, p_inj, q_inj, slack, tol, max_iter, v_lo, v_hi,
                    vm, va, hist):
    """Dense Newton-Raphson kernel.  Returns (iterations, status) with
    status 0 = converged, 1 = iteration cap, 2 = voltage guard tripped.
    vm/va/hist are caller-owned scratch, overwritten in place.
    """
    n = G.shape[0]
    m = n - 1
    for i in range(n):
        vm[i] = 1.0
        va[i] = 0.0
    idx = np.empty(m, np.int64)
    k = 0
    for i in range(n):
        if i != slack:
            idx[k] = i
            k += 1
    p_calc = np.empty(n)
    q_calc = np.empty(n)
    cosv = np.empty(n)
    sinv = np.empty(n)
    jac = np.empty((2 * m, 2 * m))
    f = np.empty(2 * m)

    for it in range(max_iter + 1):
        for i in range(n):
            cosv[i] = np.cos(va[i])
            sinv[i] = np.sin(va[i])
        for i in range(n):
            acc_p = 0.0
            acc_q = 0.0
            for j in range(n):
                g = G[i, j]
                b = B[i, j]
                if g == 0.0 and b == 0.0:
                    continue
                cos_ij = cosv[i] * cosv[j] + sinv[i] * sinv[j]
                sin_ij = sinv[i] * cosv[j] - cosv[i] * sinv[j]
                acc_p += vm[j] * (g * cos_ij + b * sin_ij)
                acc_q += vm[j] * (g * sin_ij - b * cos_ij)
            p_calc[i] = vm[i] * acc_p
            q_calc[i] = vm[i] * acc_q

        mis = 0.0
        for a in range(m):
            i = idx[a]
            dp = p_inj[i] - p_calc[i]
            dq = q_inj[i] - q_calc[i]
            f[a] = dp
            f[m + a] = dq
            if abs(dp) > mis:
                mis = abs(dp)
            if abs(dq) > mis:
                mis = abs(dq)
        hist[it] = mis
        if np.isnan(mis):
            return it, 2
        if mis <= tol:
            return it, 0
        if it == max_iter or m == 0:
            return it, 1

        for a in range(m):
            i = idx[a]
            vmi = vm[i]
            for c in range(m):
                j = idx[c]
                if i == j:
                    jac[a, c] = -q_calc[i] - B[i, i] * vmi * vmi
                    jac[a, m + c] = p_calc[i] / vmi + G[i, i] * vmi
                    jac[m + a, c] = p_calc[i] - G[i, i] * vmi * vmi
                    jac[m + a, m + c] = q_calc[i] / vmi - B[i, i] * vmi
                else:
                    g = G[i, j]
                    b = B[i, j]
                    if g == 0.0 and b == 0.0:
                        jac[a, c] = 0.0
                        jac[a, m + c] = 0.0
                        jac[m + a, c] = 0.0
                        jac[m + a, m + c] = 0.0
                        continue
                    cos_ij = cosv[i] * cosv[j] + sinv[i] * sinv[j]
                    sin_ij = sinv[i] * cosv[j] - cosv[i] * sinv[j]
                    vv = vmi * vm[j]
                    jac[a, c] = vv * (g * sin_ij - b * cos_ij)
                    jac[a, m + c] = vmi * (g * cos_ij + b * sin_ij)
                    jac[m + a, c] = -vv * (g * cos_ij + b * sin_ij)
                    jac[m + a, m + c] = vmi * (g * sin_ij - b * cos_ij)

        dx = np.linalg.solve(jac, f)
        for a in range(m):
            i = idx[a]
            va[i] += dx[a]
            vm[i] += dx[m + a]
            if not (v_lo < vm[i] < v_hi):
                hist[it + 1] = hist[it]  # no mismatch evaluated after update
                return it + 1, 2
    return max_iter, 1


class PowerFlowSolver:
    """Reusable solver bound to one admittance matrix and slack bus.

    The workspace (dense G/B copies or the sparse structure) is built
    once; instances are not thread-safe and belong to a single owner.
    """

    def __init__(self, y: AdmittanceMatrix, slack_bus: int,
                 opts: SolverOptions | None = None):
        if not 0 <= slack_bus < y.n:
            raise ValueError(f"slack bus {slack_bus} out of range for n={y.n}")
        self.opts = opts or SolverOptions()
        if self.opts.tol <= 0 or self.opts.max_iter < 1:
            raise ValueError("need tol > 0 and max_iter >= 1")
        self.n = y.n
        self.slack = slack_bus
        self._y = y.y
        self._dense = y.n <= self.opts.dense_limit
        if self._dense:
            dense = y.y.toarray()
            self._G = np.ascontiguousarray(dense.real)
            self._B = np.ascontiguousarray(dense.imag)
            self._vm = np.empty(y.n)
            self._va = np.empty(y.n)
            self._hist = np.empty(self.opts.max_iter + 1)
        else:
            mask = np.ones(y.n, dtype=bool)
            mask[slack_bus] = False
            self._nonslack = np.flatnonzero(mask)

    def solve(self, injections: np.ndarray) -> PowerFlowSolution:
        """Solve for the complex bus voltages given per-bus injections
        (slack entry ignored; the slack bus holds 1.0 at angle 0).
        """
        inj = np.asarray(injections, dtype=np.complex128)
        if inj.shape != (self.n,):
            raise ValueError(f"injection vector must have length {self.n}")
        if self._dense:
            return self._solve_dense(inj)
        return self._solve_sparse(inj)

    def _wrap(self, vm, va, iterations, status, hist, p_calc, q_calc, inj):
        mis = float(hist[iterations])
        if status != 0:
            why = ("voltage magnitude left the guard interval"
                   if status == 2 else
                   f"mismatch {mis:.3e} above tol after {iterations} iterations")
            raise PowerFlowDiverged(why, iterations=iterations, max_mismatch=mis)
        v = vm * np.exp(1j * va)
        s_calc = p_calc + 1j * q_calc
        slack_inj = complex(s_calc[self.slack] - inj[self.slack])
        return PowerFlowSolution(
            v=v, iterations=iterations, max_mismatch=mis,
            slack_injection=slack_inj,
            mismatch_history=tuple(float(h) for h in hist[:iterations + 1]),
            s_calc=s_calc)

    def _solve_dense(self, inj: np.ndarray) -> PowerFlowSolution:
        lo, hi = self.opts.v_guard
        try:
            iterations, status = _nr_polar_dense(
                self._G, self._B, inj.real.copy(), inj.imag.copy(),
                self.slack, self.opts.tol, self.opts.max_iter, lo, hi,
                self._vm, self._va, self._hist)
        except np.linalg.LinAlgError as exc:
            raise PowerFlowDiverged(f"Jacobian factorization failed: {exc}") from exc
        vm, va = self._vm, self._va
        if status == 0:
            v = vm * np.exp(1j * va)
            s = v * np.conj(self._y @ v)
            return self._wrap(vm, va, iterations, status, self._hist,
                              s.real, s.imag, inj)
        return self._wrap(vm, va, iterations, status, self._hist,
                          None, None, inj)

    def _solve_sparse(self, inj: np.ndarray) -> PowerFlowSolution:
        y = self._y
        ns = self._nonslack
        lo, hi = self.opts.v_guard
        tol, max_iter = self.opts.tol, self.opts.max_iter
        v = np.ones(self.n, dtype=np.complex128)
        hist = []
        for it in range(max_iter + 1):
            ibus = y @ v
            s_calc = v * np.conj(ibus)
            dp = inj.real[ns] - s_calc.real[ns]
            dq = inj.imag[ns] - s_calc.imag[ns]
            mis = float(max(np.max(np.abs(dp), initial=0.0),
                            np.max(np.abs(dq), initial=0.0)))
            hist.append(mis)
            if np.isnan(mis):
                raise PowerFlowDiverged("mismatch is NaN", iterations=it,
                                        max_mismatch=mis)
            if mis <= tol:
                vm, va = np.abs(v), np.angle(v)
                return self._wrap(vm, va, it, 0, hist, s_calc.real,
                                  s_calc.imag, inj)
            if it == max_iter or len(ns) == 0:
                raise PowerFlowDiverged(
                    f"mismatch {mis:.3e} above tol after {it} iterations",
                    iterations=it, max_mismatch=mis)
            vm = np.abs(v)
            diag_v = sp.diags(v)
            diag_i = sp.diags(ibus)
            diag_vn = sp.diags(v / vm)
            ds_dva = (1j * diag_v @ (diag_i - y @ diag_v).conj()).tocsr()
            ds_dvm = (diag_v @ (y @ diag_vn).conj()
                      + diag_i.conj() @ diag_vn).tocsr()
            dva = ds_dva[ns][:, ns]
            dvm = ds_dvm[ns][:, ns]
            jac = sp.vstack([
                sp.hstack([dva.real, dvm.real]),
                sp.hstack([dva.imag, dvm.imag]),
            ], format="csc")
            f = np.concatenate([dp, dq])
            try:
                dx = spla.splu(jac).solve(f)
            except RuntimeError as exc:  # singular factorization
                raise PowerFlowDiverged(
                    f"Jacobian factorization failed: {exc}",
                    iterations=it, max_mismatch=mis) from exc
            m = len(ns)
            va = np.angle(v)
            va[ns] += dx[:m]
            vm[ns] += dx[m:]
            if np.any(~((lo < vm[ns]) & (vm[ns] < hi))):
                raise PowerFlowDiverged(
                    "voltage magnitude left the guard interval",
                    iterations=it + 1, max_mismatch=mis)
            v = vm * np.exp(1j * va)
        raise PowerFlowDiverged("iteration cap reached", iterations=max_iter,
                                max_mismatch=hist[-1])


def solve(y: AdmittanceMatrix, injections: np.ndarray, slack_bus: int,
          opts: SolverOptions | None = None) -> PowerFlowSolution:
    """One-shot convenience wrapper around :class:`PowerFlowSolver`."""
    return PowerFlowSolver(y, slack_bus, opts).solve(injections)


class BranchModel:
    """Per-branch admittance coefficients in positional bus indices,
    precomputed so per-step flow evaluation is a handful of vector ops."""

    def __init__(self, spec: NetworkSpec):
        pos = {b.id: i for i, b in enumerate(spec.buses)}
        nb = len(spec.branches)
        self.f = np.empty(nb, dtype=np.intp)
        self.t = np.empty(nb, dtype=np.intp)
        self.yff = np.empty(nb, dtype=np.complex128)
        self.yft = np.empty(nb, dtype=np.complex128)
        self.ytf = np.empty(nb, dtype=np.complex128)
        self.ytt = np.empty(nb, dtype=np.complex128)
        self.y_series = np.empty(nb, dtype=np.complex128)
        self.tap_shift = np.empty(nb, dtype=np.complex128)
        self.r = np.empty(nb)
        self.rate = np.empty(nb)
        for i, br in enumerate(spec.branches):
            y = 1.0 / complex(br.r, br.x)
            shunt = complex(0.0, br.b / 2.0)
            tap = br.tap * np.exp(1j * br.shift)
            self.f[i] = pos[br.from_bus]
            self.t[i] = pos[br.to_bus]
            self.yff[i] = (y + shunt) / (br.tap * br.tap)
            self.yft[i] = -y / np.conj(tap)
            self.ytf[i] = -y / tap
            self.ytt[i] = y + shunt
            self.y_series[i] = y
            self.tap_shift[i] = tap
            self.r[i] = br.r
            self.rate[i] = br.rate

    def flows(self, v: np.ndarray) -> BranchFlowSet:
        vf = v[self.f]
        vt = v[self.t]
        s_from = vf * np.conj(self.yff * vf + self.yft * vt)
        s_to = vt * np.conj(self.ytf * vf + self.ytt * vt)
        i_series = self.y_series * (vf / self.tap_shift - vt)
        loss = self.r * (i_series.real ** 2 + i_series.imag ** 2)
        return BranchFlowSet(s_from=s_from, s_to=s_to, loss=loss)


def branch_flows(sol: PowerFlowSolution, spec: NetworkSpec) -> BranchFlowSet:
    """Complex power entering each branch end plus its series I^2 r loss."""
    return BranchModel(spec).flows(sol.v)


def total_losses(flows: BranchFlowSet) -> float:
    """Total active power dissipated in the network (p.u.)."""
    return float(np.sum(flows.loss))
