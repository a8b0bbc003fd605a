"""Grid, state, acceleration and the RK4 step."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..structure import CoefficientSet
from . import kernels

DEFAULT_CFL = 0.4
HYPERBOLICITY_BOUND = 0.5


class HyperbolicityLoss(RuntimeError):
    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


class NumericalBlowup(RuntimeError):
    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


class SupportViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid:
    h: float
    L: float
    cfl: float = DEFAULT_CFL
    stencil_order: int = 2

    def __post_init__(self):
        if not (self.h > 0 and self.L > 0):
            raise ValueError("grid spacing and half-width must be positive")
        if not (0 < self.cfl <= 0.5):
            raise ValueError("cfl factor must lie in (0, 0.5]")
        if self.stencil_order not in kernels.STENCILS:
            raise ValueError(f"stencil order must be one of {sorted(kernels.STENCILS)}")
        if abs(round(self.L / self.h) * self.h - self.L) > 1e-9 * self.L:
            raise ValueError("L must be an integer multiple of h")

    @property
    def n(self) -> int:
        return int(round(2 * self.L / self.h)) + 1

    @property
    def dt(self) -> float:
        return self.cfl * self.h

    @property
    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    def mesh(self):
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    @property
    def radius(self) -> int:
        return self.stencil_order // 2

    def check_reach(self, t_max: float) -> None:
        if self.L < t_max - 1.0 + 2 * self.h:
            raise ValueError(f"L = {self.L} too small for t_max = {t_max}: need L >= t_max - 1 + 2h")


@dataclass(frozen=True)
class GridState:
    u: np.ndarray
    ut: np.ndarray
    v: np.ndarray
    vt: np.ndarray
    t: float

    def arrays(self):
        return self.u, self.ut, self.v, self.vt

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def copy(self) -> "GridState":
        return GridState(*(a.copy() for a in self.arrays()), self.t)


def zero_state(grid: Grid, t: float = 2.0) -> GridState:
    z = np.zeros((grid.n, grid.n))
    return GridState(z, z.copy(), z.copy(), z.copy(), t)


# Coefficient compilation ----------------------------------------------------

# z-slot layout: 0 u, 1..3 d_alpha u, 4 v, 5..7 d_alpha v
_U, _DU, _V, _DV = 0, 1, 4, 5


@dataclass(frozen=True)
class CompiledCoefficients:
    qw_idx: np.ndarray
    qw_cf: np.ndarray
    qk_idx: np.ndarray
    qk_cf: np.ndarray
    pw_idx: np.ndarray
    pw_cf: np.ndarray
    pk_idx: np.ndarray
    pk_cf: np.ndarray
    c2: float
    Qw: np.ndarray = field(repr=False)
    Qk: np.ndarray = field(repr=False)

    def args(self):
        return (self.c2, self.qw_idx, self.qw_cf, self.qk_idx, self.qk_cf,
                self.pw_idx, self.pw_cf, self.pk_idx, self.pk_cf)


def _sparse_quadratic(Q: np.ndarray):
    S = 0.5 * (Q + Q.T)
    idx, cf = [], []
    for m in range(8):
        for n in range(m, 8):
            val = S[m, n] if m == n else 2.0 * S[m, n]
            if val != 0.0:
                idx.append((m, n))
                cf.append(val)
    return np.array(idx, dtype=np.int64).reshape(-1, 2), np.array(cf, dtype=float)


def _sparse_linear(P: np.ndarray):
    idx, cf = [], []
    for a in range(3):
        for b in range(3):
            for m in range(8):
                if P[a, b, m] != 0.0:
                    idx.append((a, b, m))
                    cf.append(P[a, b, m])
    return np.array(idx, dtype=np.int64).reshape(-1, 3), np.array(cf, dtype=float)


def semilinear_matrices(co: CoefficientSet):
    """Dense 8x8 matrices with F_sl = z^T Q z for the wave and KG equations."""
    Qw = np.zeros((8, 8))
    Qk = np.zeros((8, 8))
    du, dv = slice(_DU, _DU + 3), slice(_DV, _DV + 3)
    for Q, (A2, A1, A3, A4), (D1, D2, D3), (B1, B2), K in (
        (Qw, (co.A2, co.A1, co.A3, co.A4), (co.D1, co.D2, co.D3), (co.B1, co.B2), co.K1),
        (Qk, (co.A6, co.A5, co.A7, co.A8), (co.D5, co.D6, co.D7), (co.B3, co.B4), co.K2),
    ):
        # A^alpha d_alpha u with A = A1 du + A2 u + A3 dv + A4 v
        Q[du, du] += A1
        Q[_U, du] += A2
        Q[du, dv] += A3
        Q[_V, du] += A4
        # D u with D = D1 u + D2 dv + D3 v
        Q[_U, _U] += D1
        Q[dv, _U] += D2
        Q[_V, _U] += D3
        # B^alpha d_alpha v with B = B1 dv + B2 v
        Q[dv, dv] += B1
        Q[_V, dv] += B2
        Q[_V, _V] += K
    return Qw, Qk


def quasilinear_tensors(co: CoefficientSet):
    """P^{ab} = sum_m T[a, b, m] z_m for both equations."""
    Pw = np.zeros((3, 3, 8))
    Pk = np.zeros((3, 3, 8))
    for P, (T1, T2, T3, T4) in ((Pw, (co.P1, co.P2, co.P3, co.P4)), (Pk, (co.P5, co.P6, co.P7, co.P8))):
        P[:, :, _DU:_DU + 3] += T1
        P[:, :, _U] += T2
        P[:, :, _DV:_DV + 3] += T3
        P[:, :, _V] += T4
    return Pw, Pk


def compile_coefficients(co: CoefficientSet) -> CompiledCoefficients:
    Qw, Qk = semilinear_matrices(co)
    Pw, Pk = quasilinear_tensors(co)
    qw = _sparse_quadratic(Qw)
    qk = _sparse_quadratic(Qk)
    pw = _sparse_linear(Pw)
    pk = _sparse_linear(Pk)
    return CompiledCoefficients(*qw, *qk, *pw, *pk, c2=float(co.c) ** 2, Qw=Qw, Qk=Qk)


# Acceleration ------------------------------------------------------------------

Forcing = Callable[[float, np.ndarray, np.ndarray], "tuple[np.ndarray, np.ndarray]"]


@dataclass
class Solver:
    """Bundles grid, coefficients and the active box policy.

    With ``support_tracking`` the kernels only touch the square
    |x_a| <= t - 1 + margin, outside of which the state is zero.
    """

    grid: Grid
    coeffs: CoefficientSet
    forcing: Forcing | None = None
    support_tracking: bool = True
    margin: float | None = None
    check_hyperbolicity: bool = True

    def __post_init__(self):
        self.compiled = compile_coefficients(self.coeffs)
        self.w1, self.w2 = kernels.STENCILS[self.grid.stencil_order]
        self.R = self.grid.radius
        if self.margin is None:
            self.margin = max(0.5, 24 * self.grid.h)
        n = self.grid.n
        self._utt = np.zeros((n, n))
        self._vtt = np.zeros((n, n))
        self._guard = np.zeros((n, n))
        self._X = None
        self._tmp = None

    def box(self, t: float):
        n, R, g = self.grid.n, self.R, self.grid
        if not self.support_tracking:
            return R, n - R, R, n - R
        half = t - 1.0 + self.margin
        k = int(np.ceil(half / g.h))
        c = (n - 1) // 2
        lo, hi = max(R, c - k), min(n - R, c + k + 1)
        return lo, hi, lo, hi

    def mesh(self):
        if self._X is None:
            self._X = self.grid.mesh()
        return self._X

    def acceleration(self, state: GridState, out=None):
        """(u_tt, v_tt) arrays; raises on hyperbolicity loss or non-finite values."""
        u, ut, v, vt = state.arrays()
        utt, vtt = (self._utt, self._vtt) if out is None else out
        if self.forcing is not None:
            X1, X2 = self.mesh()
            fu, fv = self.forcing(state.t, X1, X2)
        else:
            fu = fv = np.zeros((0, 0))
        i0, i1, j0, j1 = self.box(state.t)
        kernels.accel_box(u, ut, v, vt, self.grid.h, self.w1, self.w2, self.R, *self.compiled.args(),
                          i0, i1, j0, j1, fu, fv, utt, vtt, self._guard)
        if self.check_hyperbolicity and self.compiled.pw_cf.size + self.compiled.pk_cf.size > 0:
            worst = float(self._guard.max())
            if worst > HYPERBOLICITY_BOUND:
                loc = self._location(np.argmax(self._guard))
                raise HyperbolicityLoss(f"hyperbolicity loss: |P^00| = {worst:.3g} > 1/2 at t = {state.t:.6g}, "
                                        f"x = {loc}", loc)
        return utt, vtt

    def _location(self, flat):
        i, j = np.unravel_index(flat, (self.grid.n, self.grid.n))
        ax = self.grid.axis
        return (float(ax[i]), float(ax[j]))

    def step(self, state: GridState, dt: float | None = None, first=None) -> GridState:
        """One classical RK4 step of (u, u_t, v, v_t).

        ``first`` optionally supplies the acceleration at ``state`` (the
        sampler reuses it).
        """
        dt = self.grid.dt if dt is None else dt
        box = self.box(state.t + dt)
        y = state.arrays()
        if self._tmp is None:
            self._tmp = [np.zeros_like(a) for a in y]
        tmp = self._tmp
        new = [a.copy() for a in y]
        if first is None:
            first = self.acceleration(state, (np.empty_like(y[0]), np.empty_like(y[0])))
        k = (y[1], first[0], y[3], first[1])
        for stage, (w, a) in enumerate(zip((1.0, 2.0, 2.0, 1.0), (0.5, 0.5, 1.0, None))):
            for dst, der in zip(new, k):
                kernels.axpy_box(dst, w * dt / 6.0, dst, der, *box)
            if a is None:
                break
            for dst, src, der in zip(tmp, y, k):
                kernels.axpy_box(dst, a * dt, src, der, *box)
            acc = self.acceleration(GridState(*tmp, state.t + a * dt),
                                    (np.empty_like(y[0]), np.empty_like(y[0])))
            k = (tmp[1].copy(), acc[0], tmp[3].copy(), acc[1])
        out = GridState(*new, state.t + dt)
        i0, i1, j0, j1 = box
        for arr in new:
            if not np.all(np.isfinite(arr[i0:i1, j0:j1])):
                bad = np.argwhere(~np.isfinite(arr))[0]
                loc = self._location(np.ravel_multi_index(tuple(bad), arr.shape))
                raise NumericalBlowup(f"non-finite value at t = {out.t:.6g}, x = {loc}", loc)
        return out

    def support_leakage(self, state: GridState, width: float | None = None) -> float:
        """max |state| beyond r = t - 1 + 3h relative to the overall max."""
        width = 3 * self.grid.h if width is None else width
        X1, X2 = self.mesh()
        outside = np.hypot(X1, X2) > state.t - 1.0 + width
        top = max(float(np.max(np.abs(a))) for a in state.arrays())
        if top == 0.0:
            return 0.0
        return max(float(np.max(np.abs(a[outside]), initial=0.0)) for a in state.arrays()) / top


def acceleration(state: GridState, coeffs: CoefficientSet, grid: Grid, **kw):
    """Functional form of :meth:`Solver.acceleration` (fresh output arrays)."""
    s = Solver(grid, coeffs, **kw)
    n = grid.n
    return s.acceleration(state, (np.zeros((n, n)), np.zeros((n, n))))


def step(state: GridState, coeffs: CoefficientSet, dt: float, grid: Grid, **kw) -> GridState:
    return Solver(grid, coeffs, **kw).step(state, dt)
