"""Run driver: evolve, stream hyperboloid samples, record rays."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..structure import CoefficientSet
from . import kernels
from .core import Grid, GridState, Solver, SupportViolation
from .sampler import HyperboloidSample, HyperboloidSampler

SUPPORT_TOL = 1e-3


class IncompleteSampleError(RuntimeError):
    pass


class RunFailure(RuntimeError):
    """Wraps a solver error with the last good state."""

    def __init__(self, cause: Exception, last_state: GridState):
        super().__init__(str(cause))
        self.cause = cause
        self.last_state = last_state


@dataclass
class RayRecorder:
    """Samples u, v and |du| along rays x = (lam t, 0) every ``stride`` steps.

    lam = 0 records the origin.  Values between grid nodes use cubic
    Lagrange interpolation along x1.
    """

    lams: tuple = (0.0,)
    stride: int = 4
    t: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        for lam in self.lams:
            for key in ("u", "v", "du", "dv"):
                self.data[(lam, key)] = []

    def observe(self, grid: Grid, state: GridState, step: int, stencil_order: int = 2):
        if step % self.stride:
            return
        self.t.append(state.t)
        ax = grid.axis
        c = (grid.n - 1) // 2
        w1 = kernels.centred_weights(1, stencil_order)
        for lam in self.lams:
            x = lam * state.t
            i = int(np.floor((x - ax[0]) / grid.h))
            i = min(max(i, 3), grid.n - 5)
            nodes = np.arange(i - 1, i + 3)
            wts = _lagrange(ax[nodes], x)
            for key, (f, ft) in (("u", (state.u, state.ut)), ("v", (state.v, state.vt))):
                val = float(wts @ f[nodes, c])
                grads = []
                for node in nodes:
                    pts = np.array([[node, c]])
                    gx = kernels.derivs_at(f, pts, w1, np.array([1.0]), grid.h)[0] / grid.h
                    gy = kernels.derivs_at(f, pts, np.array([1.0]), w1, grid.h)[0] / grid.h
                    grads.append(max(abs(ft[node, c]), abs(gx), abs(gy)))
                self.data[(lam, key)].append(val)
                self.data[(lam, "d" + key)].append(float(wts @ np.array(grads)))

    def series(self, lam: float, key: str):
        return np.array(self.t), np.array(self.data[(lam, key)])


def _lagrange(nodes, x):
    w = np.ones(nodes.size)
    for k in range(nodes.size):
        for m in range(nodes.size):
            if m != k:
                w[k] *= (x - nodes[m]) / (nodes[k] - nodes[m])
    return w


@dataclass
class RunResult:
    samples: list
    final: GridState
    rays: RayRecorder | None
    steps: int
    max_leakage: float


def run_and_sample(initial: GridState, coeffs: CoefficientSet, s_list, t_max: float, grid: Grid,
                   order: int = 1, rays: RayRecorder | None = None, solver: Solver | None = None,
                   check_support: bool = True, support_tol: float = SUPPORT_TOL,
                   on_step: Callable | None = None, support_every: int = 10,
                   on_sample: Callable | None = None, keep_samples: bool = True) -> RunResult:
    """Evolve from ``initial`` to t_max, recording every H*_s in ``s_list``.

    ``on_sample(sample)`` is called as each hyperboloid completes; with
    ``keep_samples=False`` its derivative tables are released afterwards,
    which bounds memory by the hyperboloids in progress.

    Raises IncompleteSampleError when t_max does not reach the last
    crossing of some hyperboloid, and RunFailure (carrying the last good
    state) on hyperbolicity loss or non-finite values.
    """
    grid.check_reach(t_max)
    solver = solver or Solver(grid, coeffs)
    sampler = HyperboloidSampler(solver, s_list, order)
    need = sampler.t_needed()
    if need > t_max + 1e-12:
        short = min(smp.s for smp in sampler.samples if smp.npts and smp.t[-1] > t_max + 1e-12)
        raise IncompleteSampleError(f"t_max = {t_max:g} does not reach the whole of H_{short:g} "
                                    f"(needs t >= {need:.6g})")
    state = initial
    n = grid.n
    try:
        acc = tuple(a.copy() for a in solver.acceleration(state, (np.zeros((n, n)), np.zeros((n, n)))))
    except Exception as exc:  # noqa: BLE001 - rewrapped with state
        raise RunFailure(exc, state) from exc
    steps = 0
    leak = 0.0
    nsteps = int(np.ceil((t_max - state.t) / grid.dt - 1e-9))
    if rays is not None:
        rays.observe(grid, state, 0, grid.stencil_order)
    for k in range(nsteps):
        dt = min(grid.dt, t_max - state.t)
        try:
            new = solver.step(state, dt, first=acc)
            acc_new = tuple(a.copy() for a in solver.acceleration(new, (np.zeros((n, n)), np.zeros((n, n)))))
        except Exception as exc:  # noqa: BLE001
            raise RunFailure(exc, state) from exc
        sampler.observe(state, acc, new, acc_new)
        for smp in sampler.completed:
            if on_sample is not None:
                on_sample(smp)
            if not keep_samples:
                smp.release()
        sampler.completed.clear()
        steps += 1
        if rays is not None:
            rays.observe(grid, new, steps, grid.stencil_order)
        if check_support and (steps % support_every == 0 or k == nsteps - 1):
            lk = solver.support_leakage(new)
            leak = max(leak, lk)
            if lk > support_tol:
                raise RunFailure(SupportViolation(
                    f"support leaked beyond r = t - 1 + 3h at t = {new.t:.6g}: relative {lk:.3g}"), state)
        if on_step is not None:
            on_step(new, steps)
        state, acc = new, acc_new
    if not sampler.complete:
        raise IncompleteSampleError(f"hyperboloid H_{sampler.first_incomplete():g} incomplete at t_max = {t_max:g}")
    return RunResult(samples=sampler.samples, final=state, rays=rays, steps=steps, max_leakage=leak)
