"""Energy series, the running functional F_c, global Sobolev ratio and the
bootstrap monitor."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import jets
from .energy import energy_conformal, energy_standard, weighted_gradient_l2, weighted_l2
from .tower import TowerSummary, summarize

CSV_COLUMNS = ("s", "E_std_u_0", "E_std_u_1", "E_std_u_2", "E_std_v_0", "E_std_v_1", "E_std_v_2",
               "E_con", "Fcon", "sobolev_ratio", "hessian_C", "kg_fast_C", "bootstrap_ok")


@dataclass
class EnergyRecord:
    s: float
    E_u: list
    E_v: list
    E_con: float
    l2_st_u: float
    grad_weighted_u: float
    sobolev_ratio: float = float("nan")
    sobolev_ratio_tw: float = float("nan")
    hessian_C: float = float("nan")
    kg_fast_C: float = float("nan")
    Fcon: float = float("nan")
    bootstrap_ok: bool = True


@dataclass
class EnergySeries:
    records: list = field(default_factory=list)
    tower_order: int = 0

    def append(self, rec: EnergyRecord) -> None:
        if self.records and rec.s <= self.records[-1].s:
            raise ValueError("energy series must be strictly increasing in s")
        vals = list(rec.E_u) + list(rec.E_v) + [rec.E_con]
        if not all(math.isfinite(x) and x >= 0 for x in vals):
            raise ValueError(f"non-finite or negative energy at s = {rec.s}")
        self.records.append(rec)

    @property
    def s(self) -> np.ndarray:
        return np.array([r.s for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for r in self.records:
            eu = _pad(r.E_u)
            ev = _pad(r.E_v)
            wr.writerow([_fmt(r.s), *map(_fmt, eu), *map(_fmt, ev), _fmt(r.E_con), _fmt(r.Fcon),
                         _fmt(r.sobolev_ratio), _fmt(r.hessian_C), _fmt(r.kg_fast_C), int(r.bootstrap_ok)])
        return buf.getvalue()

    def to_json(self) -> list:
        return [asdict(r) for r in self.records]


def _pad(vals):
    vals = list(vals)
    return vals + [float("nan")] * (3 - len(vals))


def _fmt(x) -> str:
    return repr(float(x))


def read_csv(text: str) -> dict:
    rows = list(csv.reader(io.StringIO(text)))
    head, body = rows[0], rows[1:]
    return {name: np.array([float(r[k]) for r in body]) for k, name in enumerate(head)}


# F_c ---------------------------------------------------------------------

def fcon_accumulate(s: np.ndarray, E_con: np.ndarray, initial: float) -> np.ndarray:
    """F_c(s0; s, u) = initial + E_con(s)^{1/2} + int_{s0}^{s} E_con^{1/2}/s' ds' (trapezoid)."""
    s = np.asarray(s, dtype=float)
    E_con = np.asarray(E_con, dtype=float)
    if s.size == 0 or s.size != E_con.size:
        raise ValueError("fcon needs one E_con record per s")
    if np.any(~np.isfinite(E_con)):
        raise ValueError("missing E_con records")
    root = np.sqrt(E_con)
    g = root / s
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(s))])
    return initial + root + integral


# Sobolev -------------------------------------------------------------------

def sobolev_ratio(summary: TowerSummary) -> dict:
    """sup |t^{-1} w|^2 / sum_{|I|+|J|<=2} ||d^I L^J w||^2 (0 for the zero field).

    The companion ratio with |t w|^2 in the numerator is reported alongside.
    """
    den = summary.sobolev_denominator()
    if den == 0.0:
        return {"ratio": 0.0, "ratio_tw": 0.0, "location": summary.sup_location}
    return {"ratio": summary.sup_tinv_w2 / den, "ratio_tw": summary.sup_tw2 / den,
            "location": summary.sup_location}


# Bootstrap ---------------------------------------------------------------

@dataclass
class BootstrapVerdict:
    passed: bool
    first_violation_s: float | None
    which: str | None
    margins: dict

    def to_dict(self):
        return asdict(self)


def bootstrap_monitor(s, high, low, econ, delta: float, budget) -> BootstrapVerdict:
    """Check high(s)^{1/2} <= budget s^delta, low(s)^{1/2} <= budget, E_con^{1/2} <= budget s^delta.

    ``high``, ``low`` and ``econ`` are energy values (not square roots).
    ``budget`` is one number or a mapping with keys high, low, conformal.
    Margins are the minimum of bound minus measured over the series
    (infinite for a vanishing series).
    """
    s = np.asarray(s, dtype=float)
    if not isinstance(budget, dict):
        budget = {"high": budget, "low": budget, "conformal": budget}
    checks = {"high": (np.sqrt(np.asarray(high, dtype=float)), budget["high"] * s ** delta),
              "low": (np.sqrt(np.asarray(low, dtype=float)), budget["low"] * np.ones_like(s)),
              "conformal": (np.sqrt(np.asarray(econ, dtype=float)), budget["conformal"] * s ** delta)}
    margins = {}
    first = None
    which = None
    for name, (val, bound) in checks.items():
        if not np.any(val):
            margins[name] = float("inf")
        else:
            margins[name] = float(np.min(bound - val))
        bad = np.nonzero(val > bound)[0]
        if bad.size and (first is None or s[bad[0]] < first):
            first = float(s[bad[0]])
            which = name
    return BootstrapVerdict(passed=first is None, first_violation_s=first, which=which, margins=margins)


# Assembling a series from samples ----------------------------------------------

def record_from_samples(sample, c: float, tower_order: int) -> tuple[EnergyRecord, dict]:
    """Energies of u (c = 0) and v (mass c) on one hyperboloid."""
    extra = {}
    if tower_order > 0:
        su = summarize(sample, "u", 0.0, tower_order)
        sv = summarize(sample, "v", c, tower_order)
        E_u = [su.cumulative(k) for k in range(tower_order + 1)]
        E_v = [sv.cumulative(k) for k in range(tower_order + 1)]
        extra["tower_u"] = su
        extra["tower_v"] = sv
    else:
        E_u = [energy_standard(sample, 0.0, "u")]
        E_v = [energy_standard(sample, c, "v")]
    econ, _ = energy_conformal(sample, "u")
    rec = EnergyRecord(s=sample.s, E_u=E_u, E_v=E_v, E_con=econ, l2_st_u=weighted_l2(sample, "u"),
                       grad_weighted_u=weighted_gradient_l2(sample, "u"))
    if tower_order >= 2:
        sob = sobolev_ratio(extra["tower_u"])
        rec.sobolev_ratio = sob["ratio"]
        rec.sobolev_ratio_tw = sob["ratio_tw"]
    return rec, extra


def relative_drift(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0 or values[0] == 0.0:
        return 0.0
    return float((values.max() - values.min()) / abs(values[0]))


def weighted_l2_monitor(series: EnergySeries, C: float = 10.0) -> dict:
    """||(s/t)u||(s1) <= ||(s/t)u||(s0) + C int s^{-1} E_con^{1/2} at every s1."""
    s = series.s
    lhs = series.column("l2_st_u")
    econ = series.column("E_con")
    g = np.sqrt(econ) / s
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(s))])
    rhs = lhs[0] + C * integral
    ok = bool(np.all(lhs <= rhs + 1e-15 * max(1.0, float(np.max(np.abs(rhs))))))
    # smallest C that works, for the record
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(integral > 0, (lhs - lhs[0]) / integral, 0.0)
    return {"C": C, "passed": ok, "C_needed": float(np.max(need, initial=0.0))}


def fcon_constants(series: EnergySeries) -> dict:
    """Ratios ||(s/t)u|| / F_c and ||s (s/t)^2 du|| / F_c (maxima over the series)."""
    F = series.column("Fcon")
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(F > 0, series.column("l2_st_u") / F, 0.0)
        b = np.where(F > 0, series.column("grad_weighted_u") / F, 0.0)
    return {"C_l2": float(np.max(a, initial=0.0)), "C_grad": float(np.max(b, initial=0.0))}
