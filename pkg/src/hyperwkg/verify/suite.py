"""The identity suite: every identity in analytic and finite-difference mode.

Each check yields one entry
``{max_residual_analytic, max_residual_fd_h, max_residual_fd_h2, ratio, passed}``.
Analytic residuals must sit below ANALYTIC_TOL; FD ratios under h -> h/2
must fall in RATIO_BAND.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import geometry, normalform as nf
from . import fields, identities as ids

ANALYTIC_TOL = 1e-8
RATIO_BAND = (3.0, 5.0)
SCHEMA_VERSION = 1
SEED = 20190625
N_POINTS = 100


@dataclass
class Check:
    name: str
    run: Callable  # (corrupt_sign) -> (analytic, FDResult-like (h, h2, ratio))


def _points():
    rng = np.random.default_rng(SEED)
    return geometry.random_cone_points(N_POINTS, rng, (3.0, 30.0), st_min=0.1)


def _fd_tuple(r):
    return r.residual_h, r.residual_h2, r.ratio


def _box(corrupt):
    pts = _points()
    a = max(ids.verify_box_decomposition(f, pts, corrupt_sign=corrupt)["max_residual"]
            for f in fields.generic_fields())
    return a, _fd_tuple(ids.fd_box(fields.gaussian_trig(), corrupt_sign=corrupt))


def _flat(corrupt):
    pts = _points()
    a = max(ids.verify_conformal_identity_flat(f, pts)["max_residual"] for f in fields.generic_fields())
    return a, _fd_tuple(ids.fd_flat(fields.gaussian_trig()))


def _curved(corrupt):
    pts = _points()
    hf = fields.generic_h()
    a = max(ids.verify_conformal_identity_curved(f, hf, pts)["max_residual"] for f in fields.generic_fields())
    return a, _fd_tuple(ids.fd_curved(fields.gaussian_trig(), hf))


def _commutator(name):
    def run(corrupt):
        pts = _points()
        a = max(ids.verify_commutators(f, pts)[name] for f in fields.generic_fields())
        fd = ids.fd_convergence(lambda c: ids.commutator_terms(c, fields.mixed()(c))[name])
        return a, _fd_tuple(fd)
    return run


def _nf_constants(zero):
    if zero:
        return nf.NormalFormConstants()
    return nf.NormalFormConstants.random(np.random.default_rng(SEED), 0.3, c=1.0)


def _normal_form(zero):
    def run(corrupt):
        v = fields.gaussian_trig(amp=1e-2)
        K = _nf_constants(zero)
        pts = geometry.random_cone_points(50, np.random.default_rng(SEED), (5.0, 9.0), st_min=0.2)
        a = nf.residual_analytic(v, K, pts)["rho"]
        r = nf.residual_check(v, K)
        return a, (r["residual_inf"][0], r["residual_inf"][1], r["ratio"])
    return run


def _modified_energy(corrupt):
    Q = np.zeros((2, 2, 2))
    Q[0, 0, 1] = Q[0, 1, 0] = 0.1
    Q[1, 1, 1] = -0.05
    vs = [fields.gaussian_trig(amp=0.1), fields.gaussian_trig(amp=0.1, center=(-0.3, 0.1), omega=1.1)]
    r = nf.modified_identity_check(vs, Q, 1.0)
    return r["residual_analytic"], (r["residual_inf"][0], r["residual_inf"][1], r["ratio"])


CHECKS = [
    Check("verify_box_decomposition", _box),
    Check("verify_conformal_identity_flat", _flat),
    Check("verify_conformal_identity_curved", _curved),
    *[Check(f"verify_commutators:{n}", _commutator(n)) for n in ids.COMMUTATOR_NAMES],
    Check("normal_form_residual", _normal_form(False)),
    Check("normal_form_residual_zero_constants", _normal_form(True)),
    Check("modified_energy_identity", _modified_energy),
]
CHECK_NAMES = tuple(c.name for c in CHECKS)


def select(names=None) -> list[Check]:
    """All checks, or those whose name equals or starts with one of ``names``.

    ``names`` may be a comma-separated string; an empty string selects nothing.
    """
    if names is None:
        return list(CHECKS)
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",") if n.strip()]
    unknown = [n for n in names if not any(c.name == n or c.name.startswith(n + ":") for c in CHECKS)]
    if unknown:
        raise KeyError(f"unknown identity checks {unknown}; known: {', '.join(CHECK_NAMES)}")
    return [c for c in CHECKS if any(c.name == n or c.name.startswith(n + ":") for n in names)]


def run_suite(names=None, corrupt_sign: bool = False) -> dict:
    """Run the selected checks and return the JSON-ready identity report.

    ``corrupt_sign`` flips one sign inside the box decomposition (a negative
    control for the suite itself).
    """
    checks = select(names)
    if not checks:
        warnings.warn("identity suite selection is empty; no checks run", stacklevel=2)
    entries = {}
    failures = []
    for chk in checks:
        analytic, (fh, fh2, ratio) = chk.run(corrupt_sign)
        ok_a = analytic < ANALYTIC_TOL
        ok_fd = RATIO_BAND[0] <= ratio <= RATIO_BAND[1]
        entries[chk.name] = {
            "max_residual_analytic": float(analytic),
            "max_residual_fd_h": float(fh),
            "max_residual_fd_h2": float(fh2),
            "ratio": float(ratio),
            "passed": bool(ok_a and ok_fd),
        }
        if not (ok_a and ok_fd):
            failures.append(chk.name)
    return {"schema_version": SCHEMA_VERSION, "n_checks": len(entries), "analytic_tol": ANALYTIC_TOL,
            "ratio_band": list(RATIO_BAND), "checks": entries, "failures": failures,
            "passed": not failures}
