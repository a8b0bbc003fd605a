"""Streaming restriction of the evolving solution to hyperboloids H_s.

A grid point x belongs to H*_s when r <= (s^2 - 1)/2; it is recorded in the
step that brackets t = sqrt(s^2 + r^2).  Each recorded quantity
D = d_x^j d_y^l d_t^k w is cubic-Hermite interpolated in time using its
partner d_t D, taken from the next time level (u_t, u_tt from the PDE,
u_ttt by complex-step differentiation of the acceleration).  Only the top
time level d_t^3 w has no partner and is interpolated linearly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .. import jets
from .core import GridState, Solver
from . import kernels

CSTEP = 1e-30


@dataclass
class HyperboloidSample:
    """Derivatives of u and v at the grid points of H*_s.

    ``du[k]`` holds the partial derivative with multi-index
    ``jets.multi_indices(order)[k]`` (exponents of t, x1, x2).
    """

    s: float
    order: int
    ij: np.ndarray
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    h: float
    filled: np.ndarray = field(repr=False)
    interp_error: float = 0.0

    @property
    def complete(self) -> bool:
        return bool(np.all(self.filled))

    @property
    def npts(self) -> int:
        return self.t.size

    def component(self, which: str, m) -> np.ndarray:
        k = jets._index(self.order)[tuple(m)]
        return (self.du if which == "u" else self.dv)[k]

    # first-order records
    def values(self, which: str):
        """(w, w_t, w_x1, w_x2)."""
        return tuple(self.component(which, m) for m in ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)))

    @property
    def u(self):
        return self.component("u", (0, 0, 0))

    @property
    def v(self):
        return self.component("v", (0, 0, 0))

    def jet(self, which: str, order: int | None = None) -> jets.Jet:
        order = self.order if order is None else order
        data = self.du if which == "u" else self.dv
        mi = jets.multi_indices(self.order)
        derivs = {m: data[k] for k, m in enumerate(mi) if sum(m) <= order}
        return jets.Jet.from_derivatives(derivs, order, self.npts)

    def require_complete(self):
        if not self.complete:
            raise ValueError(f"sample on H_{self.s:g} is incomplete")

    def release(self) -> None:
        """Drop the derivative tables once the diagnostics have been taken."""
        self.du = self.dv = _EMPTY

    def quadrature_weight(self) -> float:
        return self.h * self.h


def hstar_points(axis: np.ndarray, s: float):
    """(i, j) indices, r and crossing times of grid points in H*_s, sorted by time."""
    X1, X2 = np.meshgrid(axis, axis, indexing="ij")
    r = np.hypot(X1, X2)
    mask = r <= (s * s - 1.0) / 2.0
    ij = np.argwhere(mask)
    rr = r[mask]
    T = np.sqrt(s * s + rr * rr)
    order = np.argsort(T, kind="stable")
    return ij[order], T[order]


@njit(cache=True)
def _uttt_points(pts, u, ut, utt, v, vt, vtt, h, w1, w2, R, c2,
                 qw_idx, qw_cf, qk_idx, qk_cf, pw_idx, pw_cf, pk_idx, pk_cf, eps, out_u, out_v):
    n = 2 * R + 1
    pu = np.empty((n, n), dtype=np.complex128)
    put = np.empty((n, n), dtype=np.complex128)
    pv = np.empty((n, n), dtype=np.complex128)
    pvt = np.empty((n, n), dtype=np.complex128)
    for k in range(pts.shape[0]):
        i0 = pts[k, 0] - R
        j0 = pts[k, 1] - R
        for a in range(n):
            for b in range(n):
                pu[a, b] = u[i0 + a, j0 + b] + 1j * eps * ut[i0 + a, j0 + b]
                put[a, b] = ut[i0 + a, j0 + b] + 1j * eps * utt[i0 + a, j0 + b]
                pv[a, b] = v[i0 + a, j0 + b] + 1j * eps * vt[i0 + a, j0 + b]
                pvt[a, b] = vt[i0 + a, j0 + b] + 1j * eps * vtt[i0 + a, j0 + b]
        from_u, from_v, _, _ = kernels.accel_point(R, R, pu, put, pv, pvt, h, w1, w2, R, c2,
                                                   qw_idx, qw_cf, qk_idx, qk_cf, pw_idx, pw_cf, pk_idx, pk_cf)
        out_u[k] = from_u.imag / eps
        out_v[k] = from_v.imag / eps


def hermite(q0, p0, q1, p1, theta, dt):
    th2 = theta * theta
    th3 = th2 * theta
    return ((2 * th3 - 3 * th2 + 1) * q0 + (th3 - 2 * th2 + theta) * dt * p0
            + (-2 * th3 + 3 * th2) * q1 + (th3 - th2) * dt * p1)


_EMPTY = np.empty((0, 0))


class HyperboloidSampler:
    """Collects :class:`HyperboloidSample` records while a run advances."""

    def __init__(self, solver: Solver, s_list, order: int = 1):
        if order not in (1, 2, 3):
            raise ValueError("sample derivative order must be 1, 2 or 3")
        s_list = [float(s) for s in s_list]
        if any(b <= a for a, b in zip(s_list, s_list[1:])):
            raise ValueError("s_list must be strictly increasing")
        if s_list and s_list[0] < 2.0:
            raise ValueError("hyperboloids need s >= 2")
        if order == 3 and solver.forcing is not None:
            raise ValueError("third-order samples are not available with explicit forcing")
        self.solver = solver
        self.order = order
        self.s_list = s_list
        g = solver.grid
        so = g.stencil_order
        self._w = {k: kernels.centred_weights(k, so) for k in range(order + 2)}
        self._mi = jets.multi_indices(order)
        self._pending = []
        self.samples = []
        self.completed = []  # finished since the caller last drained the list
        for s in s_list:
            ij, T = hstar_points(g.axis, s)
            ax = g.axis
            nc = len(self._mi)
            sample = HyperboloidSample(
                s=s, order=order, ij=ij, t=T, x1=ax[ij[:, 0]], x2=ax[ij[:, 1]],
                du=_EMPTY, dv=_EMPTY, h=g.h,
                filled=np.zeros(T.size, dtype=bool))
            self.samples.append(sample)
            self._pending.append(0)
        self._scratch_u = None
        self._scratch_v = None

    @property
    def complete(self) -> bool:
        return all(p == smp.npts for p, smp in zip(self._pending, self.samples))

    def first_incomplete(self):
        for p, smp in zip(self._pending, self.samples):
            if p < smp.npts:
                return smp.s
        return None

    def t_needed(self) -> float:
        return max((float(smp.t[-1]) for smp in self.samples if smp.npts), default=0.0)

    # --------------------------------------------------------------
    def _levels(self, state: GridState, acc, pts_needed):
        """Time levels 0..3 (3 only at pts_needed, stored in scratch arrays)."""
        lu = [state.u, state.ut, acc[0]]
        lv = [state.v, state.vt, acc[1]]
        if pts_needed is not None and pts_needed.size:
            if self._scratch_u is None:
                self._scratch_u = np.zeros_like(state.u)
                self._scratch_v = np.zeros_like(state.u)
            sol = self.solver
            ou = np.empty(pts_needed.shape[0])
            ov = np.empty(pts_needed.shape[0])
            _uttt_points(pts_needed, state.u, state.ut, acc[0], state.v, state.vt, acc[1], sol.grid.h,
                         sol.w1, sol.w2, sol.R, *sol.compiled.args(), CSTEP, ou, ov)
            self._scratch_u[pts_needed[:, 0], pts_needed[:, 1]] = ou
            self._scratch_v[pts_needed[:, 0], pts_needed[:, 1]] = ov
            lu.append(self._scratch_u)
            lv.append(self._scratch_v)
        return lu, lv

    def _eval(self, level, pts, k, j, l):
        h = self.solver.grid.h
        if j == 0 and l == 0:
            return level[k][pts[:, 0], pts[:, 1]].copy()
        return kernels.derivs_at(level[k], pts, self._w[j], self._w[l], h) / h ** (j + l)

    def _needs_level3(self):
        # (k, j, l) with k + 1 == 3 needs the third time level with j + l spatial derivatives
        return max((j + l for (k, j, l) in self._mi if k + 1 == 3), default=-1)

    def observe(self, old: GridState, acc_old, new: GridState, acc_new):
        t0, t1 = old.t, new.t
        dt = t1 - t0
        # crossing times equal to t1 up to the round-off of accumulated steps
        t1_tol = t1 + 1e-12 * max(1.0, abs(t1))
        for si, smp in enumerate(self.samples):
            p = self._pending[si]
            if p >= smp.npts or smp.t[p] > t1_tol:
                continue
            if p == 0:
                # tables are allocated on the first crossing
                nc = len(self._mi)
                smp.du = np.full((nc, smp.npts), np.nan)
                smp.dv = np.full((nc, smp.npts), np.nan)
            q = p + int(np.searchsorted(smp.t[p:], t1_tol, side="right"))
            sl = slice(p, q)
            pts = smp.ij[sl]
            theta = np.clip((smp.t[sl] - t0) / dt, 0.0, 1.0)
            reach = self._needs_level3()
            need3 = None
            if reach >= 0:
                Rd = (self._w[1].size - 1) // 2 if reach > 0 else 0
                offs = [(0, 0)] + [(a * d, b * d) for d in range(1, Rd + 1) for a, b in
                                   ((1, 0), (-1, 0), (0, 1), (0, -1))]
                need3 = np.unique(np.concatenate([pts + np.array(o) for o in offs]), axis=0)
            old_u, old_v = self._levels(old, acc_old, need3)
            res_err = 0.0
            vals0 = {}
            for which, lev_old in (("u", old_u), ("v", old_v)):
                vals0[which] = {}
                for m in self._mi:
                    vals0[which][m] = self._pair(lev_old, pts, m)
            new_u, new_v = self._levels(new, acc_new, need3)
            for which, lev_new, store in (("u", new_u, smp.du), ("v", new_v, smp.dv)):
                for kk, m in enumerate(self._mi):
                    q0, p0 = vals0[which][m]
                    q1, p1 = self._pair(lev_new, pts, m)
                    if p0 is None:
                        val = (1.0 - theta) * q0 + theta * q1
                    else:
                        val = hermite(q0, p0, q1, p1, theta, dt)
                    if m == (0, 0, 0):
                        lin = (1.0 - theta) * q0 + theta * q1
                        res_err = max(res_err, float(np.max(np.abs(val - lin), initial=0.0)))
                    store[kk, sl] = val
            smp.filled[sl] = True
            smp.interp_error = max(smp.interp_error, res_err)
            self._pending[si] = q
            if q == smp.npts:
                self.completed.append(smp)

    def _pair(self, levels, pts, m):
        k, j, l = m
        q = self._eval(levels, pts, k, j, l)
        if k + 1 < len(levels):
            return q, self._eval(levels, pts, k + 1, j, l)
        return q, None
