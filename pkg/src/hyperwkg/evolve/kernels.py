"""numba stencil kernels for the coupled wave / Klein-Gordon system.

Arrays are indexed ``[i, j]`` with i along x1 and j along x2.  Each output
cell is written by exactly one worker, so parallel runs are bit-identical
to serial ones.
"""
from __future__ import annotations

import numpy as np
from numba import config, njit, prange

# the portable work-queue layer is always available and deterministic
config.THREADING_LAYER = "workqueue"

# Centred first and second derivative weights, index offset = k - radius.
STENCILS = {
    2: (np.array([-0.5, 0.0, 0.5]), np.array([1.0, -2.0, 1.0])),
    4: (np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]),
        np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])),
}


def centred_weights(deriv: int, order: int) -> np.ndarray:
    """Centred finite-difference weights for d^deriv/dx^deriv of the given order."""
    if deriv == 0:
        return np.array([1.0])
    radius = (deriv + 1) // 2 + order // 2 - 1
    offs = np.arange(-radius, radius + 1, dtype=float)
    n = offs.size
    V = np.vander(offs, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = float(np.prod(np.arange(1, deriv + 1)))
    return np.linalg.solve(V, rhs)


@njit(cache=True, inline="always")
def _d1(f, i, j, axis, w1, R, h):
    if axis == 0:
        if R == 1:
            return (f[i + 1, j] - f[i - 1, j]) * (0.5 / h)
        return ((f[i + 1, j] - f[i - 1, j]) * (2.0 / 3.0) - (f[i + 2, j] - f[i - 2, j]) * (1.0 / 12.0)) / h
    if R == 1:
        return (f[i, j + 1] - f[i, j - 1]) * (0.5 / h)
    return ((f[i, j + 1] - f[i, j - 1]) * (2.0 / 3.0) - (f[i, j + 2] - f[i, j - 2]) * (1.0 / 12.0)) / h


@njit(cache=True, inline="always")
def _d2(f, i, j, axis, w2, R, h):
    c = f[i, j]
    if axis == 0:
        if R == 1:
            return (f[i + 1, j] + f[i - 1, j] - 2.0 * c) / (h * h)
        return ((f[i + 1, j] + f[i - 1, j]) * (4.0 / 3.0) - (f[i + 2, j] + f[i - 2, j]) * (1.0 / 12.0)
                - 2.5 * c) / (h * h)
    if R == 1:
        return (f[i, j + 1] + f[i, j - 1] - 2.0 * c) / (h * h)
    return ((f[i, j + 1] + f[i, j - 1]) * (4.0 / 3.0) - (f[i, j + 2] + f[i, j - 2]) * (1.0 / 12.0)
            - 2.5 * c) / (h * h)


@njit(cache=True, inline="always")
def _dxy(f, i, j, w1, R, h):
    acc = 0.0 * f[i, j]
    for k in range(2 * R + 1):
        if w1[k] == 0.0:
            continue
        for l in range(2 * R + 1):
            if w1[l] != 0.0:
                acc += w1[k] * w1[l] * f[i + k - R, j + l - R]
    return acc / (h * h)


@njit(cache=True, inline="always")
def accel_point(i, j, u, ut, v, vt, h, w1, w2, R, c2,
                qw_idx, qw_cf, qk_idx, qk_cf, pw_idx, pw_cf, pk_idx, pk_cf):
    """(u_tt, v_tt, P_w^00, P_kg^00) at one cell.

    z = (u, u_t, u_x, u_y, v, v_t, v_x, v_y).  Semilinear parts are sparse
    quadratic forms in z; quasilinear coefficients are sparse linear forms
    P^{ab} = sum cf * z[m] with entries (a, b, m).
    """
    u0 = u[i, j]
    ux = _d1(u, i, j, 0, w1, R, h)
    uy = _d1(u, i, j, 1, w1, R, h)
    v0 = v[i, j]
    vx = _d1(v, i, j, 0, w1, R, h)
    vy = _d1(v, i, j, 1, w1, R, h)
    z = (u0, ut[i, j], ux, uy, v0, vt[i, j], vx, vy)

    uxx = _d2(u, i, j, 0, w2, R, h)
    uyy = _d2(u, i, j, 1, w2, R, h)
    vxx = _d2(v, i, j, 0, w2, R, h)
    vyy = _d2(v, i, j, 1, w2, R, h)

    f1 = 0.0 * u0
    for k in range(qw_cf.size):
        f1 += qw_cf[k] * z[qw_idx[k, 0]] * z[qw_idx[k, 1]]
    f2 = 0.0 * u0
    for k in range(qk_cf.size):
        f2 += qk_cf[k] * z[qk_idx[k, 0]] * z[qk_idx[k, 1]]

    p00w = 0.0 * u0
    if pw_cf.size > 0:
        utx = _d1(ut, i, j, 0, w1, R, h)
        uty = _d1(ut, i, j, 1, w1, R, h)
        uxy = _dxy(u, i, j, w1, R, h)
        Hu = (0.0 * u0, utx, uty, utx, uxx, uxy, uty, uxy, uyy)
        for k in range(pw_cf.size):
            a = pw_idx[k, 0]
            b = pw_idx[k, 1]
            term = pw_cf[k] * z[pw_idx[k, 2]]
            if a == 0 and b == 0:
                p00w += term
            else:
                f1 += term * Hu[3 * a + b]
    p00k = 0.0 * u0
    if pk_cf.size > 0:
        vtx = _d1(vt, i, j, 0, w1, R, h)
        vty = _d1(vt, i, j, 1, w1, R, h)
        vxy = _dxy(v, i, j, w1, R, h)
        Hv = (0.0 * u0, vtx, vty, vtx, vxx, vxy, vty, vxy, vyy)
        for k in range(pk_cf.size):
            a = pk_idx[k, 0]
            b = pk_idx[k, 1]
            term = pk_cf[k] * z[pk_idx[k, 2]]
            if a == 0 and b == 0:
                p00k += term
            else:
                f2 += term * Hv[3 * a + b]

    utt = (uxx + uyy + f1) / (1.0 - p00w)
    vtt = (vxx + vyy - c2 * v0 + f2) / (1.0 - p00k)
    return utt, vtt, p00w, p00k


@njit(cache=True, parallel=True)
def accel_box(u, ut, v, vt, h, w1, w2, R, c2, qw_idx, qw_cf, qk_idx, qk_cf,
              pw_idx, pw_cf, pk_idx, pk_cf, i0, i1, j0, j1, fu, fv, utt, vtt, guard):
    """Fill utt, vtt on the box [i0, i1) x [j0, j1); zero elsewhere.

    guard receives max(|P_w^00|, |P_kg^00|) per cell.  fu, fv are forcing
    arrays (size 0 when absent).
    """
    n0, n1 = u.shape
    forced = fu.size > 0
    for i in prange(n0):
        for j in range(n1):
            if i < i0 or i >= i1 or j < j0 or j >= j1:
                utt[i, j] = 0.0
                vtt[i, j] = 0.0
                guard[i, j] = 0.0
                continue
            a, b, pw, pk = accel_point(i, j, u, ut, v, vt, h, w1, w2, R, c2,
                                       qw_idx, qw_cf, qk_idx, qk_cf, pw_idx, pw_cf, pk_idx, pk_cf)
            if forced:
                a += fu[i, j] / (1.0 - pw)
                b += fv[i, j] / (1.0 - pk)
            utt[i, j] = a
            vtt[i, j] = b
            guard[i, j] = max(abs(pw), abs(pk))


@njit(cache=True, inline="always")
def accel_points_complex(pts, u, ut, v, vt, h, w1, w2, R, c2, qw_idx, qw_cf, qk_idx, qk_cf,
                         pw_idx, pw_cf, pk_idx, pk_cf, out_u, out_v):
    """Evaluate the acceleration at listed cells for complex state arrays."""
    for k in range(pts.shape[0]):
        a, b, _, _ = accel_point(pts[k, 0], pts[k, 1], u, ut, v, vt, h, w1, w2, R, c2,
                                 qw_idx, qw_cf, qk_idx, qk_cf, pw_idx, pw_cf, pk_idx, pk_cf)
        out_u[k] = a
        out_v[k] = b


@njit(cache=True, parallel=True)
def axpy_box(out, a, x, y, i0, i1, j0, j1):
    """out = x + a*y on the box (out may alias x)."""
    for i in prange(i0, i1):
        for j in range(j0, j1):
            out[i, j] = x[i, j] + a * y[i, j]


@njit(cache=True)
def derivs_at(f, pts, wx, wy, h):
    """Unscaled tensor-product stencil sum_{p,q} wx[p] wy[q] f[i+p-Rx, j+q-Ry]."""
    Rx = (wx.size - 1) // 2
    Ry = (wy.size - 1) // 2
    out = np.empty(pts.shape[0])
    for k in range(pts.shape[0]):
        i = pts[k, 0]
        j = pts[k, 1]
        acc = 0.0
        for p in range(wx.size):
            if wx[p] == 0.0:
                continue
            for q in range(wy.size):
                if wy[q] != 0.0:
                    acc += wx[p] * wy[q] * f[i + p - Rx, j + q - Ry]
        out[k] = acc
    return out
