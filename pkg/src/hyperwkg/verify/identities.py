"""Differential identities assembled once against a calculus backend.

Every ``*_terms`` function takes a backend (``JetCalculus`` or
``GridCalculus``) and returns named expressions.  The analytic runners
evaluate them with exact jet derivatives at random cone points; the FD
runners evaluate them on a space-time block at spacings h and h/2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import geometry, jets
from ..jets import GridCalculus, JetCalculus
from .fields import HField, TestField, zero_h

MINK = ((1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, -1.0))


# Basic operators -----------------------------------------------------------

def box(calc, u):
    d = calc.d
    return d(d(u, 0), 0) - d(d(u, 1), 1) - d(d(u, 2), 2)


def dsemi(calc, f, a: int):
    """Semi-hyperboloidal derivative  (x^a/t) d_t + d_a,  a in {0, 1}."""
    t, x1, x2 = calc.coords
    return ((x1, x2)[a] / t) * calc.d(f, 0) + calc.d(f, a + 1)


def boost(calc, f, a: int):
    t, x1, x2 = calc.coords
    return (x1, x2)[a] * calc.d(f, 0) + t * calc.d(f, a + 1)


def s_of(calc):
    t, x1, x2 = calc.coords
    return jets.sqrt(t * t - x1 * x1 - x2 * x2)


# Box decomposition -----------------------------------------------------------

def box_decomposition_terms(calc, u, corrupt_sign: bool = False) -> dict:
    """box u against (s/t)^2 u_tt + (2x^a/t) d_t dsemi_a u - sum dsemi_a dsemi_a u
    + t^{-1}(2 + (r/t)^2) u_t, with dsemi_a dsemi_a read as composition.

    The frozen-coefficient reading (coefficients of dsemi_a not differentiated)
    is returned alongside so that the two readings can be compared.
    """
    t, x1, x2 = calc.coords
    x = (x1, x2)
    d = calc.d
    r2 = x1 * x1 + x2 * x2
    st2 = 1.0 - r2 / (t * t)
    ut = d(u, 0)
    lower = (2.0 + r2 / (t * t)) / t * ut
    if corrupt_sign:
        lower = -lower
    cross = sum((2.0 * x[a] / t) * d(dsemi(calc, u, a), 0) for a in range(2))
    comp = sum(dsemi(calc, dsemi(calc, u, a), a) for a in range(2))
    frozen = sum(
        (x[a] / t) ** 2 * d(ut, 0) + 2.0 * (x[a] / t) * d(d(u, a + 1), 0) + d(d(u, a + 1), a + 1)
        for a in range(2)
    )
    lhs = box(calc, u)
    main = st2 * d(ut, 0) + cross + lower
    # alternative form with A_m = (2x^a/t) d_t L_a - sum dsemi_a L_a - (x^a/t) dsemi_a + (2 + (r/t)^2) d_t
    am = sum((2.0 * x[a] / t) * d(boost(calc, u, a), 0) - dsemi(calc, boost(calc, u, a), a)
             - (x[a] / t) * dsemi(calc, u, a) for a in range(2)) + (2.0 + r2 / (t * t)) * ut
    return {
        "lhs": lhs,
        "residual": lhs - (main - comp),
        "residual_frozen": lhs - (main - frozen),
        "residual_Am": lhs - (st2 * d(ut, 0) + am / t),
    }


# Conformal identity (curved background; flat case is h = 0) ---------------

def _frame_transform(T, psi):
    return [[sum(T[a][b] * psi[a][i] * psi[b][j] for a in range(3) for b in range(3)
                 if not (isinstance(T[a][b], float) and T[a][b] == 0.0))
             for j in range(3)] for i in range(3)]


def curved_conformal_terms(calc, u, h) -> dict:
    """Every piece of the conformal identity for g = m + h.

    ``h`` is a symmetric 3x3 nested list of expressions (zeros allowed).
    The residual is
        s (K_g u + N_g u) g^{ab} d_a d_b u
          - 1/2 dbar_s(|K_g u + N_g u|^2 - s^2 gb^{00} gb^{ab} dbar_a u dbar_b u)
          - dbar_a w^a - s^2 R^{ab} dbar_a u dbar_b u - (K_g + N_g)u S_g[u] - s dbar_b u T^b[u].
    """
    t, x1, x2 = calc.coords
    x = (x1, x2)
    d = calc.d
    s = s_of(calc)
    _, psi = geometry.phi_psi(geometry.HYPERBOLIC, t, x1, x2)
    g = [[MINK[a][b] + h[a][b] for b in range(3)] for a in range(3)]
    gb = _frame_transform(g, psi)
    hb = _frame_transform(h, psi)

    def dbs(f):
        return (s / t) * d(f, 0)

    def dba(f, a):
        return (x[a] / t) * d(f, 0) + d(f, a + 1)

    du = [dba(u, 0), dba(u, 1)]
    us = dbs(u)
    Ku = s * (gb[0][0] * us + 2.0 * sum(gb[a + 1][0] * du[a] for a in range(2)))
    gpsi0 = sum(g[a][b] * d(psi[b][0], a) for a in range(3) for b in range(3))
    Ng = s * gpsi0 - dbs(s * gb[0][0])
    Ng_alt = (g[0][0] - g[1][1] - g[2][2]) - 2.0 * gb[0][0] - s * dbs(gb[0][0])
    KN = Ku + Ng * u
    gab_du = [sum(gb[a + 1][b + 1] * du[b] for b in range(2)) for a in range(2)]
    quad = sum(gab_du[a] * du[a] for a in range(2))
    w = [s * Ku * gab_du[a] - s * s * gb[a + 1][0] * quad + Ng * s * u * gab_du[a] for a in range(2)]
    Lg = [[gb[0][0] * gb[a + 1][b + 1]
           + s * sum(dba(gb[0][c + 1] * gb[a + 1][b + 1], c) for c in range(2))
           - 2.0 * s * sum(dba(gb[0][a + 1], c) * gb[c + 1][b + 1] for c in range(2))
           for b in range(2)] for a in range(2)]
    s2R = sum((s * (Lg[a][b] - Ng * gb[a + 1][b + 1])
               + 0.5 * s * s * dbs(hb[0][0] * gb[a + 1][b + 1] + hb[a + 1][b + 1])) * du[a] * du[b]
              for a in range(2) for b in range(2))
    S = -KN * (2.0 * sum(dbs(s * hb[a + 1][0]) * du[a] for a in range(2))
               + s * sum(dba(hb[a + 1][b + 1], a) * du[b] for a in range(2) for b in range(2))
               + u * dbs(Ng))
    T = -s * sum(du[b] * (u * gb[a + 1][b + 1] * dba(Ng, a) + s * gb[a + 1][b + 1] * dba(hb[0][0], a) * us)
                 for a in range(2) for b in range(2))
    box_g = sum(g[a][b] * d(d(u, b), a) for a in range(3) for b in range(3))
    lhs = s * KN * box_g
    energy = 0.5 * dbs(KN * KN - s * s * gb[0][0] * quad)
    flux = dba(w[0], 0) + dba(w[1], 1)
    residual = lhs - energy - flux - s2R - S - T
    return {
        "residual": residual,
        "lhs": lhs,
        "energy_term": energy,
        "flux_term": flux,
        "R_term": s2R,
        "S_term": S,
        "T_term": T,
        "N_g": Ng,
        "N_g_forms_diff": Ng - Ng_alt,
    }


def flat_conformal_literal_terms(calc, u) -> dict:
    """Flat identity transcribed directly with K = s dbar_s + 2x^a dbar_a."""
    t, x1, x2 = calc.coords
    x = (x1, x2)
    d = calc.d
    s = s_of(calc)
    us = (s / t) * d(u, 0)
    du = [dsemi(calc, u, 0), dsemi(calc, u, 1)]
    K = s * us + 2.0 * (x1 * du[0] + x2 * du[1])
    KN = K + u
    sq = du[0] * du[0] + du[1] * du[1]
    # w_m^a with gb^{ab} = -delta^{ab}, gb^{a0} = x^a/s
    w = [-s * K * du[a] - s * x[a] * (-sq) - s * u * du[a] for a in range(2)]
    lhs = s * KN * box(calc, u)
    rhs = 0.5 * (s / t) * d(KN * KN + s * s * sq, 0) + dsemi(calc, w[0], 0) + dsemi(calc, w[1], 1)
    return {"residual": lhs - rhs, "lhs": lhs}


# Commutators ---------------------------------------------------------------

def commutator_terms(calc, u) -> dict:
    t, x1, x2 = calc.coords
    x = (x1, x2)
    d = calc.d
    ut = d(u, 0)
    out = {}
    out["[L_a,d_t]"] = [boost(calc, ut, a) - d(boost(calc, u, a), 0) + d(u, a + 1) for a in range(2)]
    out["[L_a,d_b]"] = [
        boost(calc, d(u, b + 1), a) - d(boost(calc, u, a), b + 1) + (ut if a == b else 0.0)
        for a in range(2) for b in range(2)
    ]
    L1 = boost(calc, u, 0)
    L2 = boost(calc, u, 1)
    out["[L_1,L_2]"] = [boost(calc, L2, 0) - boost(calc, L1, 1) - ((x1 / t) * L2 - (x2 / t) * L1)]
    out["hessian_ta"] = [
        d(d(u, a + 1), 0) - (-(x[a] / t) * d(ut, 0)
                            + (d(boost(calc, u, a), 0) - dsemi(calc, u, a) + (x[a] / t) * ut) / t)
        for a in range(2)
    ]
    hab = []
    for a in range(2):
        for b in range(2):
            rhs = (x[a] * x[b] / (t * t)) * d(ut, 0) + (
                d(boost(calc, u, b), a + 1)
                - (x[b] / t) * d(boost(calc, u, a), 0)
                + (x[b] / t) * dsemi(calc, u, a)
                - (ut if a == b else 0.0)
                - (x[a] * x[b] / (t * t)) * ut
            ) / t
            hab.append(d(d(u, b + 1), a + 1) - rhs)
    out["hessian_ab"] = hab
    return out


# Runners ---------------------------------------------------------------------

IDENTITY_NAMES = (
    "verify_box_decomposition",
    "verify_conformal_identity_flat",
    "verify_conformal_identity_curved",
    "verify_commutators",
)
COMMUTATOR_NAMES = ("[L_a,d_t]", "[L_a,d_b]", "[L_1,L_2]", "hessian_ta", "hessian_ab")


def _points_array(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        pts = np.atleast_2d(points).astype(float)
    else:
        pts = np.array([[p.t, p.x1, p.x2] for p in points], dtype=float)
    return pts


def _max_abs(calc, expr) -> float:
    if isinstance(expr, list):
        return max(_max_abs(calc, e) for e in expr)
    return float(np.max(np.abs(calc.value(expr))))


def _check_points(pts, st_min=0.05):
    t, x1, x2 = pts.T
    r = np.hypot(x1, x2)
    if np.any(t <= r + 1.0):
        raise geometry.DomainError("identity points must satisfy t > r + 1")
    if np.any(np.sqrt(1 - (r / t) ** 2) < st_min):
        raise geometry.DomainError(f"identity points must satisfy s/t >= {st_min}")


def _jet_calc(points, order=3):
    pts = _points_array(points)
    _check_points(pts)
    return JetCalculus(pts[:, 0], pts[:, 1], pts[:, 2], order=order)


def verify_box_decomposition(tf: TestField, points, corrupt_sign: bool = False) -> dict:
    calc = _jet_calc(points)
    terms = box_decomposition_terms(calc, tf(calc), corrupt_sign=corrupt_sign)
    res = _max_abs(calc, terms["residual"])
    frozen = _max_abs(calc, terms["residual_frozen"])
    return {
        "max_residual": res,
        "max_residual_frozen_reading": frozen,
        "max_residual_Am_form": _max_abs(calc, terms["residual_Am"]),
        "scale": _max_abs(calc, terms["lhs"]),
        "reading": "composition" if res <= frozen else "frozen-coefficient",
    }


def verify_conformal_identity_curved(tf: TestField, hfield: HField, points) -> dict:
    calc = _jet_calc(points)
    terms = curved_conformal_terms(calc, tf(calc), hfield(calc))
    out = {k: _max_abs(calc, v) for k, v in terms.items()}
    out["max_residual"] = out.pop("residual")
    out["residual_values"] = calc.value(terms["residual"])
    return out


def verify_conformal_identity_flat(tf: TestField, points) -> dict:
    """Curved machinery with a zero perturbation, plus the literal flat form."""
    calc = _jet_calc(points)
    u = tf(calc)
    terms = curved_conformal_terms(calc, u, zero_h()(calc))
    lit = flat_conformal_literal_terms(calc, u)
    return {
        "max_residual": _max_abs(calc, terms["residual"]),
        "max_residual_literal": _max_abs(calc, lit["residual"]),
        "scale": _max_abs(calc, terms["lhs"]),
        "residual_values": calc.value(terms["residual"]),
    }


def verify_commutators(tf: TestField, points) -> dict:
    calc = _jet_calc(points)
    terms = commutator_terms(calc, tf(calc))
    return {k: _max_abs(calc, v) for k, v in terms.items()}


# Finite-difference mode ---------------------------------------------------

@dataclass
class Block:
    t_range: tuple[float, float] = (6.0, 7.0)
    x1_range: tuple[float, float] = (0.5, 1.5)
    x2_range: tuple[float, float] = (-0.5, 0.5)
    margin: float = 0.15

    def calc(self, spacing: float) -> GridCalculus:
        return GridCalculus(self.t_range, self.x1_range, self.x2_range, spacing)

    def inner(self, calc: GridCalculus):
        sl = []
        for ax, rng in zip(calc.axes, (self.t_range, self.x1_range, self.x2_range)):
            keep = np.nonzero((ax >= rng[0] + self.margin - 1e-12) & (ax <= rng[1] - self.margin + 1e-12))[0]
            sl.append(slice(keep[0], keep[-1] + 1))
        return tuple(sl)


@dataclass
class FDResult:
    residual_h: float
    residual_h2: float
    ratio: float
    extra: dict = field(default_factory=dict)


def _fd_norm(calc: GridCalculus, block: Block, expr) -> float:
    if isinstance(expr, list):
        return max(_fd_norm(calc, block, e) for e in expr)
    return float(np.max(np.abs(calc.value(expr)[block.inner(calc)])))


def fd_convergence(assemble, spacing: float = 0.05, block: Block | None = None) -> FDResult:
    """Run ``assemble(calc) -> expression`` at spacing h and h/2."""
    block = block or Block()
    norms = []
    for hh in (spacing, spacing / 2):
        calc = block.calc(hh)
        norms.append(_fd_norm(calc, block, assemble(calc)))
    ratio = norms[0] / norms[1] if norms[1] > 0 else float("inf")
    return FDResult(norms[0], norms[1], ratio)


def fd_box(tf: TestField, corrupt_sign=False, **kw) -> FDResult:
    return fd_convergence(lambda c: box_decomposition_terms(c, tf(c), corrupt_sign)["residual"], **kw)


def fd_flat(tf: TestField, **kw) -> FDResult:
    return fd_convergence(lambda c: curved_conformal_terms(c, tf(c), zero_h()(c))["residual"], **kw)


def fd_curved(tf: TestField, hfield: HField, **kw) -> FDResult:
    return fd_convergence(lambda c: curved_conformal_terms(c, tf(c), hfield(c))["residual"], **kw)


def fd_commutators(tf: TestField, **kw) -> dict[str, FDResult]:
    return {name: fd_convergence(lambda c, n=name: commutator_terms(c, tf(c))[n], **kw)
            for name in COMMUTATOR_NAMES}
