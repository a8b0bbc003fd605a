"""Compactly supported initial data at t = 2."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, GridState
from . import kernels

T0 = 2.0
PROFILES = ("polynomial-bump", "gaussian-bump")
BUMP_RADIUS = 0.9
POLY_POWER = 6
GAUSS_WIDTH = 0.4


class ProfileError(ValueError):
    pass


def profile(name: str, r: np.ndarray) -> np.ndarray:
    """Radial profile with peak 1 at r = 0 and support in r < 0.9."""
    r = np.asarray(r, dtype=float)
    q = (r / BUMP_RADIUS) ** 2
    inside = q < 1.0
    out = np.zeros_like(r)
    if name == "polynomial-bump":
        out[inside] = (1.0 - q[inside]) ** POLY_POWER
    elif name == "gaussian-bump":
        # Gaussian times the smooth cutoff exp(1 - 1/(1 - q)), which is 1 at r = 0
        qi = q[inside]
        out[inside] = np.exp(-(r[inside] / GAUSS_WIDTH) ** 2) * np.exp(1.0 - 1.0 / (1.0 - qi))
    else:
        raise ProfileError(f"unknown profile {name!r}; expected one of {PROFILES}")
    return out


@dataclass
class InitialData:
    state: GridState
    sobolev: dict
    tilt: tuple[float, float]


def make_initial_data(grid: Grid, epsilon: float, profile_name: str = "polynomial-bump",
                      seed: int = 0) -> InitialData:
    """u0 = v0 = eps*phi, u1 = v1 = eps*phi*(1 + (a x1 + b x2)/4) with (a, b) from the seed."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if profile_name not in PROFILES:
        raise ProfileError(f"unknown profile {profile_name!r}; expected one of {PROFILES}")
    rng = np.random.default_rng(seed)
    a, b = (float(x) for x in rng.uniform(-1.0, 1.0, 2))
    X1, X2 = grid.mesh()
    phi = profile(profile_name, np.hypot(X1, X2))
    u0 = epsilon * phi
    u1 = epsilon * phi * (1.0 + 0.25 * (a * X1 + b * X2))
    state = GridState(u0, u1, u0.copy(), u1.copy(), T0)
    sob = {name: discrete_sobolev(arr, grid.h, 3) for name, arr in
           (("u0", u0), ("u1", u1), ("v0", u0), ("v1", u1))}
    return InitialData(state=state, sobolev=sob, tilt=(a, b))


def discrete_sobolev(f: np.ndarray, h: float, order: int = 3) -> float:
    """(sum over |alpha| <= order of ||d^alpha f||^2_{L^2})^{1/2} with centred differences."""
    total = 0.0
    for nx in range(order + 1):
        for ny in range(order + 1 - nx):
            g = f
            for axis, k in ((0, nx), (1, ny)):
                if k:
                    w = kernels.centred_weights(k, 2)
                    g = _apply(g, w, axis) / h ** k
            total += float(np.sum(g * g)) * h * h
    return float(np.sqrt(total))


def _apply(f, w, axis):
    R = (w.size - 1) // 2
    out = np.zeros_like(f)
    n = f.shape[axis]
    for k, wk in enumerate(w):
        if wk == 0.0:
            continue
        off = k - R
        src = [slice(None)] * 2
        dst = [slice(None)] * 2
        src[axis] = slice(max(0, off), n + min(0, off))
        dst[axis] = slice(max(0, -off), n - max(0, off))
        out[tuple(dst)] += wk * f[tuple(src)]
    return out
