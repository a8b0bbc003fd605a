"""The simulate pipeline: initial data, evolution with streaming hyperboloid
samples, per-s diagnostics, fits, monitors and report files."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import diagnostics as diag
from .config import ConfigError, RunConfig, check_writable
from .evolve import Grid, RayRecorder, RunFailure, Solver, make_initial_data, run_and_sample, save_checkpoint
from .structure import RANKS, theorem1_admissible
from .verify import monitors
from .verify.suite import run_suite

REPORT_SCHEMA = 1
DRIFT_TOL = 0.02


class Inadmissible(RuntimeError):
    pass


@dataclass
class SimulateOutcome:
    exit_code: int
    report: dict
    paths: dict
    message: str = ""


def _clean(obj):
    """JSON-safe copy: tuples to lists, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def is_linear(cfg: RunConfig) -> bool:
    return all(cfg.coefficients.is_zero(n) for n in RANKS)


def sample_order(cfg: RunConfig) -> int:
    order = cfg.run.sample_order
    if cfg.mode.monitors:
        order = max(order, 2)
    if cfg.run.tower_order:
        order = max(order, cfg.run.tower_order + 1)
    return order


def rays_csv(rays: RayRecorder) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    cols = [(lam, key) for lam in rays.lams for key in ("u", "v", "du", "dv")]
    wr.writerow(["t"] + [f"{key}@{lam:g}" for lam, key in cols])
    for k, t in enumerate(rays.t):
        wr.writerow([repr(float(t))] + [repr(float(rays.data[c][k])) for c in cols])
    return buf.getvalue()


def _growth(values) -> float:
    v = np.asarray(values, dtype=float)
    if v[0] == 0.0:
        return 0.0 if not np.any(v) else float("inf")
    return float(np.max(v / v[0]))


class SeriesBuilder:
    """Reduces each completed hyperboloid sample to its energy record."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.series = diag.EnergySeries(tower_order=cfg.run.tower_order)
        self.per_s = []
        self.standard = {"u": [], "v": []}
        self.monitored = False

    def add(self, smp) -> None:
        cfg = self.cfg
        c = cfg.coefficients.c
        rec, _ = diag.record_from_samples(smp, c, cfg.run.tower_order)
        if cfg.mode.monitors and smp.order >= 2:
            rec.hessian_C = monitors.monitor_hessian_bound(smp)["C"]
            rec.kg_fast_C = monitors.monitor_kg_fast_decay(smp, c)["C"]
            self.monitored = True
        if is_linear(cfg):
            self.standard["u"].append(diag.energy_standard(smp, 0.0, "u"))
            self.standard["v"].append(diag.energy_standard(smp, c, "v"))
        self.series.append(rec)
        self.per_s.append({"s": smp.s, "npts": smp.npts, "interp_error": smp.interp_error})

    def finish(self) -> diag.EnergySeries:
        series = self.series
        F = diag.fcon_accumulate(series.s, series.column("E_con"), series.records[0].l2_st_u)
        for rec, f in zip(series.records, F):
            rec.Fcon = float(f)
        return series


def build_series(samples, cfg: RunConfig):
    """Series and per-s metadata from already collected samples."""
    b = SeriesBuilder(cfg)
    for smp in samples:
        b.add(smp)
    return b.finish(), b.per_s


def bootstrap(series: diag.EnergySeries, delta: float) -> dict:
    top = series.tower_order
    Eu = np.array([r.E_u[top] for r in series.records])
    Ev = np.array([r.E_v[top] for r in series.records])
    Y = np.sqrt(Eu) + np.sqrt(Ev)
    low = (np.sqrt([r.E_u[0] for r in series.records]) + np.sqrt([r.E_v[0] for r in series.records])) ** 2
    econ = series.column("E_con")
    budget = {"high": 2.0 * Y[0], "low": 2.0 * math.sqrt(low[0]), "conformal": 2.0 * math.sqrt(econ[0])}
    verdict = diag.bootstrap_monitor(series.s, Y ** 2, low, econ, delta, budget)
    for rec, ok_s in zip(series.records, _pointwise(series.s, verdict)):
        rec.bootstrap_ok = ok_s
    growth = {}
    for k in range(top + 1):
        growth[f"u_{k}"] = _growth([r.E_u[k] for r in series.records])
        growth[f"v_{k}"] = _growth([r.E_v[k] for r in series.records])
    out = verdict.to_dict()
    out["budget"] = budget
    out["energy_growth"] = growth
    out["energy_growth_max"] = max(growth.values())
    return out


def _pointwise(s, verdict):
    if verdict.passed:
        return [True] * len(s)
    return [si < verdict.first_violation_s for si in s]


def fits(rays: RayRecorder, t_min: float) -> dict:
    out = {}
    for lam in rays.lams:
        model = "interior" if lam == 0.0 else "power"
        for key in ("u", "v", "du", "dv"):
            t, y = rays.series(lam, key)
            name = f"{key}@{lam:g}"
            if not np.any(y):
                out[name] = {"model": model, "skipped": "identically zero"}
                continue
            try:
                out[name] = diag.fit_decay(t, y, model, lam=lam, t_min=t_min).to_dict()
            except diag.FitError as exc:
                out[name] = {"model": model, "error": str(exc)}
    return out


def monitor_summary(series: diag.EnergySeries, builder: SeriesBuilder, cfg: RunConfig) -> dict:
    out = {}
    if builder.monitored:
        H = series.column("hessian_C")
        K = series.column("kg_fast_C")
        out["hessian"] = {"C_max": float(np.max(H)), "finite": bool(np.all(np.isfinite(H)))}
        out["kg_fast"] = {"C_max": float(np.max(K)), "finite": bool(np.all(np.isfinite(K)))}
    out["weighted_l2"] = diag.weighted_l2_monitor(series)
    out["fcon_constants"] = diag.fcon_constants(series)
    drift = diag.relative_drift(series.column("E_con"))
    out["conformal_drift"] = {"drift": drift}
    if is_linear(cfg):
        out["conformal_drift"]["tolerance"] = DRIFT_TOL
        out["conformal_drift"]["passed"] = drift <= DRIFT_TOL
        out["standard_energy_identity"] = {k: diag.relative_drift(v) for k, v in builder.standard.items()}
    if cfg.run.tower_order >= 2:
        out["sobolev"] = {"ratio_max": float(np.max(series.column("sobolev_ratio")))}
    return out


def simulate(cfg: RunConfig, force: bool = False, out_dir: str | None = None) -> SimulateOutcome:
    """Run the full pipeline; never raises for runtime failures (see exit_code)."""
    wall = time.perf_counter()
    classification = theorem1_admissible(cfg.coefficients)
    force = force or cfg.mode.force
    paths = cfg.resolve(out_dir)
    check_writable(paths)
    report = {"schema_version": REPORT_SCHEMA, "classification": classification.to_dict(),
              "config": cfg.to_dict(), "exploratory": False}
    if not classification.theorem1_admissible:
        if not force:
            msg = "system is not admissible: " + "; ".join(classification.violations)
            return SimulateOutcome(2, report, paths, msg)
        report["exploratory"] = True
    grid = Grid(h=cfg.grid.h, L=cfg.grid.L, cfl=cfg.grid.cfl, stencil_order=cfg.grid.stencil_order)
    t_max = cfg.t_max
    try:
        grid.check_reach(t_max)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    init = make_initial_data(grid, cfg.run.epsilon, cfg.run.profile, cfg.run.seed)
    report["resolution"] = {"h": grid.h, "L": grid.L, "n": grid.n, "dt": grid.dt, "cfl": grid.cfl,
                            "stencil_order": grid.stencil_order, "t_max": t_max}
    report["initial_data"] = {"sobolev_h3": init.sobolev, "tilt": list(init.tilt)}
    rays = RayRecorder(lams=tuple(cfg.run.rays), stride=cfg.run.ray_stride)
    solver = Solver(grid, cfg.coefficients)
    every = cfg.outputs.checkpoint_every
    builder = SeriesBuilder(cfg)

    def on_step(state, k):
        if every and k % every == 0:
            save_checkpoint(paths["checkpoint"], state, grid.h, grid.L)

    try:
        res = run_and_sample(init.state, cfg.coefficients, cfg.run.s_list, t_max, grid,
                             order=sample_order(cfg), rays=rays, solver=solver, on_step=on_step,
                             on_sample=builder.add, keep_samples=False)
    except RunFailure as exc:
        save_checkpoint(paths["checkpoint"], exc.last_state, grid.h, grid.L)
        report["status"] = "failed"
        report["failure"] = {"cause": type(exc.cause).__name__, "message": str(exc.cause),
                             "last_good_t": exc.last_state.t, "checkpoint": paths["checkpoint"]}
        _write(paths["json"], dumps(report))
        _timing(paths["json"], wall)
        return SimulateOutcome(3, report, paths, f"run failed: {exc.cause}; last good state at "
                                                 f"t = {exc.last_state.t:.6g} written to {paths['checkpoint']}")
    report["run"] = {"steps": res.steps, "max_support_leakage": res.max_leakage, "t_final": res.final.t}
    series = builder.finish()
    report["bootstrap"] = bootstrap(series, cfg.run.delta)
    report["monitors"] = monitor_summary(series, builder, cfg)
    report["fits"] = fits(rays, cfg.run.fit_t_min) if cfg.mode.fits else {}
    report["series"] = {"records": series.to_json(), "samples": builder.per_s}
    code = 0
    if cfg.mode.identity_suite:
        suite = run_suite(cfg.mode.suite)
        report["identity_suite"] = suite
        if suite["failures"]:
            code = 4
    report["status"] = "ok"
    _write(paths["csv"], series.to_csv())
    _write(paths["rays"], rays_csv(rays))
    _write(paths["json"], dumps(report))
    _timing(paths["json"], wall)
    msg = "" if code == 0 else "identity failures: " + ", ".join(report["identity_suite"]["failures"])
    return SimulateOutcome(code, report, paths, msg)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _timing(json_path: str, start: float) -> None:
    root, _ = os.path.splitext(json_path)
    _write(root + ".timing.json", json.dumps({"wall_seconds": time.perf_counter() - start}) + "\n")
