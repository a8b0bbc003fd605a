"""Energy densities and quadratures on hyperboloids.

Integrals over H*_s use the flat measure dx on the grid of the sample, so
each quadrature is h^2 times a sum over the recorded points.  The solution
vanishes near the rim of H*_s, which makes this the trapezoid rule.
"""
from __future__ import annotations

import numpy as np

FORM_TOL = 1e-12


def density_standard(wt, w1, w2, w, t, x1, x2, c: float = 0.0):
    """e_c[w] = |d_t w|^2 + sum |d_a w|^2 + 2 (x^a/t) d_t w d_a w + c^2 w^2."""
    return (wt * wt + w1 * w1 + w2 * w2 + 2.0 * (x1 / t) * wt * w1 + 2.0 * (x2 / t) * wt * w2
            + c * c * w * w)


def density_standard_frame(wt, w1, w2, w, t, x1, x2, c: float = 0.0):
    """Equivalent form sum |dbar_a w|^2 + |(s/t) d_t w|^2 + c^2 w^2."""
    u1 = (x1 / t) * wt + w1
    u2 = (x2 / t) * wt + w2
    st2 = 1.0 - (x1 * x1 + x2 * x2) / (t * t)
    return u1 * u1 + u2 * u2 + st2 * wt * wt + c * c * w * w


def check_forms(wt, w1, w2, w, t, x1, x2, c: float = 0.0, tol: float = FORM_TOL) -> float:
    """Max relative disagreement of the two density forms; raises above tol."""
    a = density_standard(wt, w1, w2, w, t, x1, x2, c)
    b = density_standard_frame(wt, w1, w2, w, t, x1, x2, c)
    scale = np.maximum(np.abs(a), np.abs(b))
    top = float(np.max(scale, initial=0.0))
    if top == 0.0:
        return 0.0
    err = float(np.max(np.abs(a - b)) / top)
    if err > tol:
        raise AssertionError(f"energy density forms disagree: relative {err:.3g}")
    return err


def energy_from_values(wt, w1, w2, w, t, x1, x2, c: float, weight: float, check: bool = True) -> float:
    if check:
        check_forms(wt, w1, w2, w, t, x1, x2, c)
    return float(np.sum(density_standard_frame(wt, w1, w2, w, t, x1, x2, c)) * weight)


def energy_standard(sample, c: float, field: str = "u") -> float:
    """E_c(s, w) = int_{H*_s} e_c[w] dx for w = u or v of a hyperboloid sample."""
    sample.require_complete()
    w, wt, w1, w2 = sample.values(field)
    return energy_from_values(wt, w1, w2, w, sample.t, sample.x1, sample.x2, c, sample.quadrature_weight())


def conformal_parts(w, wt, w1, w2, t, x1, x2):
    """(K w + w, s dbar_1 w, s dbar_2 w) with K = s (s/t) d_t + 2 x^a dbar_a."""
    s2 = t * t - x1 * x1 - x2 * x2
    s = np.sqrt(s2)
    u1 = (x1 / t) * wt + w1
    u2 = (x2 / t) * wt + w2
    K = (s2 / t) * wt + 2.0 * (x1 * u1 + x2 * u2)
    return K + w, s * u1, s * u2


def energy_conformal(sample, field: str = "u"):
    """int_{H*_s} (K w + w)^2 + sum |s dbar_a w|^2 dx, and the K w + w array."""
    sample.require_complete()
    w, wt, w1, w2 = sample.values(field)
    kw, a1, a2 = conformal_parts(w, wt, w1, w2, sample.t, sample.x1, sample.x2)
    val = float(np.sum(kw * kw + a1 * a1 + a2 * a2) * sample.quadrature_weight())
    return val, kw


def weighted_l2(sample, field: str = "u") -> float:
    """||(s/t) w||_{L^2(H_s)}."""
    w = sample.u if field == "u" else sample.v
    st = np.sqrt(1.0 - (sample.x1 ** 2 + sample.x2 ** 2) / sample.t ** 2)
    return float(np.sqrt(np.sum((st * w) ** 2) * sample.quadrature_weight()))


def weighted_gradient_l2(sample, field: str = "u") -> float:
    """max over alpha of ||s (s/t)^2 d_alpha w||_{L^2(H_s)}."""
    w, wt, w1, w2 = sample.values(field)
    s2 = sample.t ** 2 - sample.x1 ** 2 - sample.x2 ** 2
    fac = np.sqrt(s2) * s2 / sample.t ** 2
    return max(float(np.sqrt(np.sum((fac * d) ** 2) * sample.quadrature_weight())) for d in (wt, w1, w2))
