"""Least-squares decay-exponent fits in log space."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

MODELS = ("interior", "two-factor", "power")
MIN_POINTS = 8


class FitError(ValueError):
    pass


@dataclass
class FitResult:
    model: str
    exponents: dict
    log_constant: float
    residual: float
    n_used: int
    envelope: bool

    def to_dict(self):
        return asdict(self)


def envelope_maxima(t: np.ndarray, values: np.ndarray):
    """Strict local maxima of |values| (interior points only)."""
    a = np.abs(values)
    k = np.nonzero((a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:]))[0] + 1
    return t[k], a[k]


def fit_decay(t, values, model: str = "interior", lam: float = 0.0, t_min: float | None = None) -> FitResult:
    """Fit |value| against the model basis.

    interior:   |w| ~ C t^b                       (r = 0)
    power:      |w| ~ C t^b                       (any fixed ray)
    two-factor: |w| ~ C (1 + |t - r|)^a t^b       along r = lam t, lam < 1
    Samples whose values change sign are replaced by the local maxima of |w|.
    """
    if model not in MODELS:
        raise FitError(f"unknown model {model!r}; expected one of {MODELS}")
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    if t_min is not None:
        keep = t >= t_min
        t, y = t[keep], y[keep]
    envelope = False
    if y.size and (np.any(y > 0) and np.any(y < 0)):
        t, y = envelope_maxima(t, y)
        envelope = True
    keep = np.abs(y) > 0
    t, y = t[keep], np.abs(y[keep])
    if t.size < MIN_POINTS:
        raise FitError(f"only {t.size} usable points; need at least {MIN_POINTS}")
    if t.max() < 2.0 * t.min():
        raise FitError("samples must span at least a factor 2 in t")
    cols = [np.ones_like(t)]
    names = []
    if model == "two-factor":
        if not 0.0 <= lam < 1.0:
            raise FitError("two-factor model needs a ray r = lam t with 0 <= lam < 1")
        cols.append(np.log1p(np.abs(t - lam * t)))
        names.append("a")
    cols.append(np.log(t))
    names.append("b")
    M = np.stack(cols, -1)
    coef, *_ = np.linalg.lstsq(M, np.log(y), rcond=None)
    res = np.log(y) - M @ coef
    return FitResult(model=model, exponents={n: float(c) for n, c in zip(names, coef[1:])},
                     log_constant=float(coef[0]), residual=float(np.sqrt(np.mean(res ** 2))),
                     n_used=int(t.size), envelope=envelope)
