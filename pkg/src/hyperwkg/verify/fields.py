"""Closed-form test fields evaluated through a calculus backend.

A field is a function of the backend coordinates built from ordinary
arithmetic, so the jet backend yields its exact derivatives and the grid
backend yields samples for finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import jets
from ..jets import GridCalculus, JetCalculus


@dataclass(frozen=True)
class TestField:
    name: str
    build: Callable
    params: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def __call__(self, calc):
        return self.build(calc, **self.params)

    def jet(self, points: np.ndarray, order: int = 3):
        pts = np.atleast_2d(points)
        calc = JetCalculus(pts[:, 0], pts[:, 1], pts[:, 2], order=order)
        return calc, self(calc)


def _gaussian_trig(calc, amp=1.0, center=(0.3, -0.2), width=2.5, omega=0.7, phase=0.3):
    t, x1, x2 = calc.coords
    q = ((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2) / (width * width)
    return amp * jets.exp(-q) * jets.sin(omega * t + phase)


def _polynomial_bump(calc, amp=1.0, center=(0.0, 0.0), radius=30.0, power=3, tscale=40.0):
    t, x1, x2 = calc.coords
    q = ((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2) / (radius * radius)
    return amp * (1.0 - q) ** power * (1.0 + t / tscale) ** 2


def _homogeneous(calc, degree=1, a=0.5, b=0.3, c=-0.2):
    t, x1, x2 = calc.coords
    y1, y2 = x1 / t, x2 / t
    base = t if degree == 1 else t ** degree if degree >= 0 else (1.0 / t) ** (-degree)
    return base * (1.0 + a * y1 + b * y2 * y2 + c * y1 * y2)


def _mixed(calc):
    t, x1, x2 = calc.coords
    return (jets.sin(t / 3 + x1 / 2) * jets.exp(-(x1 * x1 + 2 * x2 * x2) / 20) + x2 * t / 7
            + 0.05 * x1 * x1 * x2)


def _coord(calc, axis=0):
    return calc.coords[axis] * 1.0


def _product(calc):
    t, x1, x2 = calc.coords
    return x1 * x2


def _t_squared(calc):
    t, _, _ = calc.coords
    return t * t


def gaussian_trig(**params) -> TestField:
    return TestField("gaussian_trig", _gaussian_trig, params)


def polynomial_bump(**params) -> TestField:
    return TestField("polynomial_bump", _polynomial_bump, params)


def homogeneous(**params) -> TestField:
    return TestField("homogeneous", _homogeneous, params)


def mixed() -> TestField:
    return TestField("mixed", _mixed)


def coordinate(axis: int) -> TestField:
    return TestField(("t", "x1", "x2")[axis], _coord, {"axis": axis})


def x1x2() -> TestField:
    return TestField("x1x2", _product)


def t_squared() -> TestField:
    return TestField("t2", _t_squared)


def generic_fields() -> list[TestField]:
    return [gaussian_trig(), polynomial_bump(), homogeneous(degree=2), homogeneous(degree=-1),
            mixed()]


# Metric perturbations ----------------------------------------------------

@dataclass(frozen=True)
class HField:
    """Symmetric perturbation h^{alpha beta}(t, x) given by a builder."""

    name: str
    build: Callable
    params: dict = field(default_factory=dict)

    def __call__(self, calc):
        return self.build(calc, **self.params)


def _zero_h(calc):
    return [[0.0] * 3 for _ in range(3)]


def _bump_h00(calc, scale=1e-3, width=4.0):
    t, x1, x2 = calc.coords
    st = jets.sqrt(t * t - x1 * x1 - x2 * x2) / t
    h = _zero_h(calc)
    h[0][0] = scale * st * jets.exp(-(x1 * x1 + x2 * x2) / (width * width))
    return h


def _generic_h(calc, scale=1e-2):
    t, x1, x2 = calc.coords
    h = _zero_h(calc)
    h[0][0] = scale * jets.cos(x1 + t / 5)
    h[0][1] = h[1][0] = scale * jets.sin(x2 - t / 4) / 2
    h[0][2] = h[2][0] = scale * x1 * x2 / (t * t)
    h[1][1] = scale * jets.exp(-(x1 * x1) / 10) / 3
    h[1][2] = h[2][1] = scale * x1 / (t + 1)
    h[2][2] = scale * jets.cos(x1 * x2 / 5)
    return h


def zero_h() -> HField:
    return HField("zero", _zero_h)


def bump_h00(scale: float = 1e-3) -> HField:
    return HField("bump_h00", _bump_h00, {"scale": scale})


def generic_h(scale: float = 1e-2) -> HField:
    return HField("generic", _generic_h, {"scale": scale})


# Self-check --------------------------------------------------------------

SELFCHECK_DERIVS = ((1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0), (1, 1, 0), (0, 1, 1), (0, 0, 2))


def _fd_derivative(calc: GridCalculus, f, m):
    for axis, count in enumerate(m):
        for _ in range(count):
            f = calc.d(f, axis)
    return f


def selfcheck(tf: TestField, center=(6.5, 1.0, -0.5), half=0.4, h=0.05) -> dict:
    """Compare jet derivatives with centred differences at spacings h and h/2.

    Returns per-derivative max errors and their ratio (about 4 expected).
    """
    out = {}
    errs = []
    for hh in (h, h / 2):
        calc = GridCalculus(*[(c - half, c + half) for c in center], hh)
        f = calc.value(tf(calc))
        pts = np.stack([a.ravel() for a in calc.coords], -1)
        _, J = tf.jet(pts, order=2)
        k = int(round(2 * 0.1 / hh))  # skip boundary cells
        inner = (slice(k, -k),) * 3
        e = {}
        for m in SELFCHECK_DERIVS:
            fd = _fd_derivative(calc, f, m)
            ex = J.deriv(m).reshape(f.shape)
            e[m] = float(np.max(np.abs(fd - ex)[inner]))
        errs.append(e)
    for m in SELFCHECK_DERIVS:
        coarse, fine = errs[0][m], errs[1][m]
        out["".join(map(str, m))] = {"err_h": coarse, "err_h2": fine,
                                     "ratio": coarse / fine if fine > 0 else float("inf")}
    return out
