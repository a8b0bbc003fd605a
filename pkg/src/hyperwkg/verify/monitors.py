"""Bound monitors evaluated on hyperboloid samples.

The monitors report measured constants; they never compare against a fixed
theoretical constant.  What is asserted is stability of the constant under
grid refinement (see ``refinement_stable``).
"""
from __future__ import annotations

import numpy as np

from .. import jets
from ..diagnostics.energy import energy_standard
from ..diagnostics.series import relative_drift
from ..evolve.sampler import HyperboloidSample
from .fields import TestField

FLOOR = 1e-14
_E = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def synthetic_sample(u: TestField | None, v: TestField | None, s: float, h: float,
                     order: int = 2) -> HyperboloidSample:
    """Sample of analytic fields on the grid points of H*_s (spacing h, centred at 0)."""
    rmax = (s * s - 1.0) / 2.0
    n = int(np.floor(rmax / h))
    ax = h * np.arange(-n, n + 1)
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    mask = np.hypot(X1, X2) <= rmax
    ij = np.argwhere(mask)
    x1, x2 = X1[mask], X2[mask]
    t = np.sqrt(s * s + x1 * x1 + x2 * x2)
    mi = jets.multi_indices(order)
    calc = jets.JetCalculus(t, x1, x2, order=order)

    def table(tf):
        if tf is None:
            return np.zeros((len(mi), t.size))
        J = tf(calc)
        if not isinstance(J, jets.Jet):
            J = jets.Jet.constant(J, t.size, order)
        return np.stack([J.deriv(m) for m in mi])

    return HyperboloidSample(s=s, order=order, ij=ij, t=t, x1=x1, x2=x2, du=table(u), dv=table(v), h=h,
                             filled=np.ones(t.size, dtype=bool))


def _second(sample, which):
    """All second partials as a dict keyed by (alpha, beta), alpha <= beta."""
    out = {}
    for a in range(3):
        for b in range(a, 3):
            m = tuple(np.add(_E[a], _E[b]))
            out[(a, b)] = sample.component(which, m)
    return out


def _abs_11(sample, which, second=None):
    """|dw|_{1,1}: max over alpha and Z in {id, L_1, L_2} of |Z d_alpha w|."""
    second = second or _second(sample, which)
    t, xs = sample.t, (sample.x1, sample.x2)
    out = np.zeros(sample.npts)
    for a in range(3):
        out = np.maximum(out, np.abs(sample.component(which, _E[a])))
        for b in (1, 2):
            # L_b d_a w = x^b d_t d_a w + t d_b d_a w
            lw = xs[b - 1] * second[(0, a)] + t * second[tuple(sorted((a, b)))]
            out = np.maximum(out, np.abs(lw))
    return out


def _box(second):
    return second[(0, 0)] - second[(1, 1)] - second[(2, 2)]


def _report(s, ratio, sample):
    if ratio.size == 0:
        return {"s": float(s), "C": 0.0, "location": None}
    k = int(np.argmax(ratio))
    if ratio[k] == 0.0:
        return {"s": float(s), "C": 0.0, "location": None}
    return {"s": float(s), "C": float(ratio[k]),
            "location": (float(sample.t[k]), float(sample.x1[k]), float(sample.x2[k]))}


def monitor_hessian_bound(sample: HyperboloidSample, box_values=None, floor: float = FLOOR) -> dict:
    """sup (s/t)^2 |dd u| / (|box u| + t^{-1} |du|_{1,1} + floor) on one hyperboloid.

    ``box_values`` defaults to the box of u assembled from the sample's own
    second derivatives (which equals the source F_1 for an evolved run).
    """
    if sample.order < 2:
        raise ValueError("the Hessian monitor needs samples of derivative order >= 2")
    sec = _second(sample, "u")
    hess = np.max(np.abs(np.stack(list(sec.values()))), axis=0)
    boxu = _box(sec) if box_values is None else np.asarray(box_values, dtype=float)
    st2 = (sample.s / sample.t) ** 2
    den = np.abs(boxu) + _abs_11(sample, "u", sec) / sample.t + floor
    return _report(sample.s, st2 * hess / den, sample)


def monitor_kg_fast_decay(sample: HyperboloidSample, c: float, f=None, floor: float = FLOOR) -> dict:
    """sup c^2 |v| / ((s/t)^2 |dv|_{1,1} + |f| + floor).

    ``f`` defaults to box v + c^2 v from the sample, i.e. F_2 for an evolved run.
    """
    if sample.order < 2:
        raise ValueError("the Klein-Gordon monitor needs samples of derivative order >= 2")
    sec = _second(sample, "v")
    v = sample.v
    f = _box(sec) + c * c * v if f is None else np.asarray(f, dtype=float)
    st2 = (sample.s / sample.t) ** 2
    den = st2 * _abs_11(sample, "v", sec) + np.abs(f) + floor
    return _report(sample.s, c * c * np.abs(v) / den, sample)


def verify_standard_energy_identity(samples, c: float = 0.0, field: str = "u") -> dict:
    """Relative spread of E_c(s, w) over a linear run's samples (0 for zero data)."""
    E = [energy_standard(sm, c, field) for sm in samples]
    return {"s": [float(sm.s) for sm in samples], "energies": E, "defect": relative_drift(E)}


def refinement_stable(coarse: float, fine: float, factor: float) -> bool:
    """True when neither constant exceeds the other by more than ``factor``."""
    lo, hi = sorted((abs(coarse), abs(fine)))
    if hi == 0.0:
        return True
    return lo > 0.0 and hi / lo <= factor
