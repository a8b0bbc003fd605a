"""Normal-form transform for a quasilinear Klein-Gordon equation and the
modified energy of a semilinear Klein-Gordon system.

Starting equation (constant forms h0, h1, A, B, R):

    box v + (h0 v + h1 . dv)^{ab} d_a d_b v + c^2 v = A(dv, dv) + B^a v d_a v + R v^2 + R0.

With a, b as in :func:`ab_fields`, w = v + a v v_t + b v^2 satisfies

    box w + c^2 w = (2 (s/t)^2 R / c^2 + 2 h0_00 + A_00) w_t^2 + Rem,

where underlined (semi-hyperboloidal) components carry a trailing ``_``
index suffix in the code and Rem = R3 + (1 + h)^{-1}(R0 + R2 + R1).
All assembly routines take a calculus backend so that the same code runs
with exact jet derivatives and with finite differences.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import geometry, jets
from .jets import GridCalculus, JetCalculus
from .structure import semi_contract, symmetrize_pair

SMALL_H = 0.5
EPS_SMALL = 0.1


class SmallnessError(ValueError):
    """A smallness hypothesis of the transform or energy failed."""


@dataclass(frozen=True)
class NormalFormConstants:
    h0: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    h1: np.ndarray = field(default_factory=lambda: np.zeros((3, 3, 3)))
    A: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    B: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        for name, shape in (("h0", (3, 3)), ("h1", (3, 3, 3)), ("A", (3, 3)), ("B", (3,))):
            val = np.array(getattr(self, name), dtype=float)
            if val.shape != shape or not np.all(np.isfinite(val)):
                raise ValueError(f"{name} must be a finite array of shape {shape}")
            if val.ndim >= 2:
                val = symmetrize_pair(val)
            object.__setattr__(self, name, val)
        if not np.isfinite(self.R):
            raise ValueError("R must be finite")
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError("c must be > 0")
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "c", float(self.c))

    def scaled(self, k: float) -> "NormalFormConstants":
        return NormalFormConstants(self.h0 * k, self.h1 * k, self.A * k, self.B * k, self.R * k, self.c)

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 0.3, c: float = 1.0) -> "NormalFormConstants":
        return cls(
            h0=rng.uniform(-scale, scale, (3, 3)),
            h1=rng.uniform(-scale, scale, (3, 3, 3)),
            A=rng.uniform(-scale, scale, (3, 3)),
            B=rng.uniform(-scale, scale, 3),
            R=float(rng.uniform(-scale, scale)),
            c=c,
        )


# Coefficients a, b ---------------------------------------------------------

def ab_fields(consts: NormalFormConstants, t, x1, x2):
    """Backend-agnostic a, b:
    a = (B_0 + c^2 (t/s)^2 h1_000) / (3c^2),  b = (R + c^2 (t/s)^2 h0_00) / c^2."""
    _, psi = geometry.phi_psi(geometry.SEMI, t, x1, x2)
    c2 = consts.c ** 2
    ts2 = (t * t) / (t * t - x1 * x1 - x2 * x2)
    B_ = semi_contract(consts.B, psi)
    h0_ = semi_contract(consts.h0, psi)
    h1_ = semi_contract(consts.h1, psi)
    a = (B_[0] + c2 * ts2 * h1_[0][0][0]) / (3.0 * c2)
    b = (consts.R + c2 * ts2 * h0_[0][0]) / c2
    return a, b


def compute_ab(consts: NormalFormConstants, point: geometry.ConePoint) -> tuple[float, float]:
    if not point.in_cone:
        raise geometry.DomainError(f"{point} is outside t > r + 1")
    geometry._validate(point.t, point.x1, point.x2, geometry.HYPERBOLIC)
    a, b = ab_fields(consts, point.t, point.x1, point.x2)
    return float(a), float(b)


@dataclass
class TransformFields:
    a: np.ndarray
    b: np.ndarray
    w: np.ndarray
    h: np.ndarray
    margin: float


def h_field(consts: NormalFormConstants, a, v, vt, t, x1, x2):
    _, psi = geometry.phi_psi(geometry.SEMI, t, x1, x2)
    ts2 = (t * t) / (t * t - x1 * x1 - x2 * x2)
    h0_ = semi_contract(consts.h0, psi)
    h1_ = semi_contract(consts.h1, psi)
    return ts2 * (h0_[0][0] * v + h1_[0][0][0] * vt) - 2.0 * a * vt


def transform(v, vt, t, x1, x2, consts: NormalFormConstants) -> TransformFields:
    """w = v + a v v_t + b v^2 on a slice of points, with the |h| <= 1/2 gate."""
    v, vt, t, x1, x2 = (np.asarray(q, dtype=float) for q in (v, vt, t, x1, x2))
    if np.any(t <= np.hypot(x1, x2) + 1.0):
        raise geometry.DomainError("transform needs points with t > r + 1")
    a, b = ab_fields(consts, t, x1, x2)
    a = np.broadcast_to(a, v.shape)
    b = np.broadcast_to(b, v.shape)
    w = v + a * v * vt + b * v * v
    hh = np.broadcast_to(h_field(consts, a, v, vt, t, x1, x2), v.shape)
    _gate_h(hh, t, x1, x2)
    return TransformFields(a=np.array(a), b=np.array(b), w=w, h=np.array(hh), margin=float(SMALL_H - np.max(np.abs(hh))))


def _gate_h(hh, t, x1, x2):
    hh = np.asarray(hh)
    if hh.size and np.max(np.abs(hh)) > SMALL_H:
        k = np.unravel_index(np.argmax(np.abs(hh)), hh.shape)
        loc = tuple(float(np.broadcast_to(q, hh.shape)[k]) for q in (t, x1, x2))
        raise SmallnessError(f"|h[a,v]| = {abs(hh[k]):.3g} > 1/2 at (t,x1,x2) = {loc}")


# Remainder assembly ------------------------------------------------------

def _terms(calc, v, consts: NormalFormConstants, exact=None) -> dict:
    """Assemble w, R0..R3, Rem and rho.

    ``exact`` optionally supplies R0, f and f_t computed independently
    (the finite-difference mode takes them from exact jets of v).
    """
    t, x1, x2 = calc.coords
    x = (x1, x2)
    d = calc.d
    c2 = consts.c ** 2
    _, psi = geometry.phi_psi(geometry.SEMI, t, x1, x2)
    h0, h1, A, B, R = consts.h0, consts.h1, consts.A, consts.B, consts.R
    h0_ = semi_contract(h0, psi)
    h1_ = semi_contract(h1, psi)
    A_ = semi_contract(A, psi)
    B_ = semi_contract(B, psi)
    r2 = x1 * x1 + x2 * x2
    st2 = 1.0 - r2 / (t * t)
    ts2 = 1.0 / st2
    mu = [[st2, x1 / t, x2 / t], [x1 / t, -1.0, 0.0], [x2 / t, 0.0, -1.0]]  # m^{ab} in the semi frame
    mink = (1.0, -1.0, -1.0)

    def du(f, al):
        if al == 0:
            return d(f, 0)
        return (x[al - 1] / t) * d(f, 0) + d(f, al)

    def box(f):
        return d(d(f, 0), 0) - d(d(f, 1), 1) - d(d(f, 2), 2)

    def m_cart(f, g):
        return sum(mink[k] * d(f, k) * d(g, k) for k in range(3))

    def good2(T, f, g):
        return sum(T[i][j] * du(f, i) * du(g, j) for i in range(3) for j in range(3) if (i, j) != (0, 0))

    dv = [d(v, k) for k in range(3)]
    vt = dv[0]
    coefq = [[h0[i, j] * v + sum(h1[i, j, k] * dv[k] for k in range(3)) for j in range(3)] for i in range(3)]

    def quasi(f):
        return sum(coefq[i][j] * d(d(f, j), i) for i in range(3) for j in range(3)
                   if np.any(h0[i, j]) or np.any(h1[i, j]))

    if exact is None:
        f_src = box(v) + c2 * v
        R0 = (box(v) + quasi(v) + c2 * v
              - sum(A[i, j] * dv[i] * dv[j] for i in range(3) for j in range(3))
              - v * sum(B[k] * dv[k] for k in range(3)) - R * v * v)
        ft = d(f_src, 0)
    else:
        R0, f_src, ft = exact["R0"], exact["f"], exact["ft"]

    a, b = ab_fields(consts, t, x1, x2)
    phi = a * v * vt + b * v * v
    w = v + phi
    wt = d(w, 0)
    phit = d(phi, 0)
    hh = ts2 * (h0_[0][0] * v + h1_[0][0][0] * vt) - 2.0 * a * vt

    R1 = (2.0 * a * good2(mu, v, vt) + 2.0 * b * good2(mu, v, v)
          + v * vt * box(a) + 2.0 * vt * m_cart(a, v) + 2.0 * v * m_cart(a, vt)
          + v * v * box(b) + 4.0 * v * m_cart(b, v)
          + a * f_src * vt + a * v * ft + 2.0 * b * v * f_src
          - 2.0 * a * st2 * vt * d(d(phi, 0), 0))

    dpsi = [[[d(psi[be][bp], al) for bp in range(3)] for be in range(3)] for al in range(3)]
    ddw = [[du(du(w, be), al) for be in range(3)] for al in range(3)]
    duw = [du(w, k) for k in range(3)]
    duv = [du(v, k) for k in range(3)]
    R2 = 0.0
    for al, be in itertools.product(range(3), repeat=2):
        if (al, be) != (0, 0):
            R2 = R2 - v * h0_[al][be] * ddw[al][be]
        if h0[al, be] != 0.0:
            R2 = R2 - v * h0[al, be] * sum(dpsi[al][be][bp] * duw[bp] for bp in range(3))
        for ga in range(3):
            if (al, be, ga) != (0, 0, 0):
                R2 = R2 - h1_[al][be][ga] * duv[ga] * ddw[al][be]
            if h1[al, be, ga] != 0.0:
                R2 = R2 - h1[al, be, ga] * dv[ga] * sum(dpsi[al][be][bp] * duw[bp] for bp in range(3))
    R2 = R2 + quasi(phi) + good2(A_, v, v) + v * sum(B_[k] * duv[k] for k in (1, 2))

    C = 2.0 * st2 * b + A_[0][0]
    X = (sum((2.0 * x[k] / t) * d(du(w, k + 1), 0) - du(du(w, k + 1), k + 1) for k in range(2))
         + (2.0 + r2 / (t * t)) / t * wt)
    inv = 1.0 / (1.0 + hh)
    G = C * vt * vt + (B_[0] - 2.0 * c2 * a) * v * vt + (R - 2.0 * c2 * b) * v * v
    R3 = (C * (phit * phit - 2.0 * wt * phit)
          + (1.0 - inv - hh) * c2 * v
          + (1.0 - inv) * X
          + (inv - 1.0) * G)
    Rem = R3 + inv * (R0 + R2 + R1)
    coef = 2.0 * st2 * R / c2 + 2.0 * h0_[0][0] + A_[0][0]
    rho = box(w) + c2 * w - coef * wt * wt - Rem
    return {"w": w, "h": hh, "a": a, "b": b, "R0": R0, "R1": R1, "R2": R2, "R3": R3,
            "Rem": Rem, "rho": rho}


def remainder_terms(calc, v, consts: NormalFormConstants, exact=None) -> dict:
    return _terms(calc, v, consts, exact)


@dataclass
class NFBlock:
    t_range: tuple[float, float] = (5.0, 6.0)
    x1_range: tuple[float, float] = (-0.5, 0.5)
    x2_range: tuple[float, float] = (-0.5, 0.5)
    margin: float = 0.25

    def inner(self, calc: GridCalculus):
        sl = []
        for ax, rng in zip(calc.axes, (self.t_range, self.x1_range, self.x2_range)):
            keep = np.nonzero((ax >= rng[0] + self.margin - 1e-12) & (ax <= rng[1] - self.margin + 1e-12))[0]
            sl.append(slice(keep[0], keep[-1] + 1))
        return tuple(sl)


def _exact_sources(vfield, consts, calc: GridCalculus):
    """R0, f and f_t from exact jets of the manufactured field at grid points."""
    pts = [q.ravel() for q in calc.coords]
    jc = JetCalculus(*pts, order=3)
    terms = _exact_jet_sources(jc, vfield(jc), consts)
    return {k: terms[k].reshape(calc.t.shape) for k in terms}


def _exact_jet_sources(jc: JetCalculus, v, consts):
    d = jc.d
    c2 = consts.c ** 2
    h0, h1, A, B, R = consts.h0, consts.h1, consts.A, consts.B, consts.R
    dv = [d(v, k) for k in range(3)]
    boxv = d(dv[0], 0) - d(dv[1], 1) - d(dv[2], 2)
    quasi = 0.0
    for i in range(3):
        for j in range(3):
            if np.any(h0[i, j]) or np.any(h1[i, j]):
                quasi = quasi + (h0[i, j] * v + sum(h1[i, j, k] * dv[k] for k in range(3))) * d(dv[j], i)
    R0 = (boxv + quasi + c2 * v - sum(A[i, j] * dv[i] * dv[j] for i in range(3) for j in range(3))
          - v * sum(B[k] * dv[k] for k in range(3)) - R * v * v)
    f = boxv + c2 * v
    return {"R0": jc.value(R0), "f": jc.value(f), "ft": jc.value(d(f, 0))}


def residual_check(vfield, consts: NormalFormConstants, h: float = 0.05, block: NFBlock | None = None) -> dict:
    """FD residual of the transformed equation at spacings h and h/2.

    ``vfield`` is a closed-form field (see ``verify.fields``); R0, f and f_t
    are evaluated exactly, everything else by finite differences.
    """
    block = block or NFBlock()
    out = {"h": [h, h / 2], "residual_inf": [], "residual_l2": [], "sub_remainders": []}
    for hh in (h, h / 2):
        calc = GridCalculus(block.t_range, block.x1_range, block.x2_range, hh)
        t, x1, x2 = calc.coords
        if np.any(t <= np.hypot(x1, x2) + 1.0):
            raise geometry.DomainError("normal-form block must lie inside t > r + 1")
        v = vfield(calc)
        exact = _exact_sources(vfield, consts, calc)
        terms = _terms(calc, v, consts, exact)
        calc_h = calc.value(terms["h"])
        _gate_h(calc_h, t, x1, x2)
        inner = block.inner(calc)
        rho = calc.value(terms["rho"])[inner]
        out["residual_inf"].append(float(np.max(np.abs(rho))))
        out["residual_l2"].append(float(np.sqrt(np.sum(rho ** 2) * hh ** 3)))
        out["sub_remainders"].append({k: float(np.max(np.abs(calc.value(terms[k])[inner])))
                                      for k in ("R0", "R1", "R2", "R3", "Rem")})
    r = out["residual_inf"]
    out["ratio"] = r[0] / r[1] if r[1] > 0 else float("inf")
    out["rho"] = None
    return out


def residual_analytic(vfield, consts: NormalFormConstants, points: np.ndarray) -> dict:
    """The same chain with exact jet derivatives (round-off expected)."""
    pts = np.atleast_2d(points)
    jc = JetCalculus(pts[:, 0], pts[:, 1], pts[:, 2], order=5)
    terms = _terms(jc, vfield(jc), consts)
    _gate_h(jc.value(terms["h"]), pts[:, 0], pts[:, 1], pts[:, 2])
    return {k: float(np.max(np.abs(jc.value(terms[k])))) for k in ("rho", "R0", "R1", "R2", "R3", "Rem")}


# Modified energy -------------------------------------------------------------

@dataclass
class ModifiedEnergyData:
    Q: np.ndarray
    P: np.ndarray
    V0: np.ndarray
    Va: np.ndarray
    e: np.ndarray
    E: float
    E_standard: float
    ratio: float
    gate: float


def _check_Q(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 3 or Q.shape[1] != Q.shape[0] or Q.shape[2] != Q.shape[0]:
        raise ValueError("Q must have shape (N, N, N)")
    if not np.allclose(Q, np.swapaxes(Q, 1, 2), atol=0, rtol=0):
        raise ValueError("Q_i^{jk} must be symmetric in j, k")
    return Q


def smallness_gate(Q, v, t, x1, x2) -> float:
    """Left side of the smallness condition, maximised over points and i, j, k.

    Q is constant, so the condition on its derivatives holds trivially.
    """
    Q = _check_Q(Q)
    v = np.asarray(v)
    ts2 = t * t / (t * t - x1 * x1 - x2 * x2)
    worst = 0.0
    N = Q.shape[0]
    for i, j, k in itertools.product(range(N), repeat=3):
        q = Q[i, j, k]
        if q == 0.0:
            continue
        val = np.abs(ts2 * q) * (np.abs(v[i]) + np.abs(v[j]) + np.abs(v[k]))
        worst = max(worst, float(np.max(val)))
    return worst


def modified_density(Q, c: float, v, dv, t, x1, x2):
    """V^0_i, V^a_i and e_{Q,c} from values v[i] and gradients dv[i][alpha].

    w_i = v_i + P_i^{jk} (t/s)^2 v_j v_k with P = -Q/3.
    """
    Q = _check_Q(Q)
    P = -Q / 3.0
    N = Q.shape[0]
    v = np.asarray(v, dtype=float)
    dv = np.asarray(dv, dtype=float)
    s2 = t * t - x1 * x1 - x2 * x2
    ts2 = t * t / s2
    dts2 = np.stack([-2.0 * t * (x1 * x1 + x2 * x2) / s2 ** 2, 2.0 * t * t * x1 / s2 ** 2,
                     2.0 * t * t * x2 / s2 ** 2])
    c2 = c * c
    V0 = np.zeros_like(v)
    Va = np.zeros((N, 2) + v.shape[1:])
    x = (x1, x2)
    for i in range(N):
        w = v[i].copy()
        dw = dv[i].copy()
        extra0 = np.zeros_like(w)
        extra_a = np.zeros((2,) + w.shape)
        for j, k in itertools.product(range(N), repeat=2):
            p = P[i, j, k]
            if p == 0.0:
                continue
            w = w + p * ts2 * v[j] * v[k]
            dw = dw + p * (ts2 * (dv[j] * v[k] + v[j] * dv[k]) + dts2 * v[j] * v[k])
            extra0 += p * ts2 * v[i] * (dv[j][0] * dv[k][0] + dv[j][1] * dv[k][1] + dv[j][2] * dv[k][2]
                                        + c2 * v[j] * v[k])
            for a in range(2):
                extra_a[a] += p * ts2 * v[i] * (dv[j][0] * dv[k][a + 1] + dv[k][0] * dv[j][a + 1])
        V0[i] = 0.5 * (dw[0] ** 2 + dw[1] ** 2 + dw[2] ** 2) + 0.5 * c2 * w ** 2 + extra0
        for a in range(2):
            Va[i, a] = -(dw[0] * dw[a + 1]) - extra_a[a]
    e = 2.0 * sum(V0[i] - (x[0] / t) * Va[i, 0] - (x[1] / t) * Va[i, 1] for i in range(N))
    return V0, Va, e, P


def modified_energy(Q, c: float, v, dv, t, x1, x2, weight: float, eps_s: float = EPS_SMALL) -> ModifiedEnergyData:
    """E_{Q,c} = sum(e_{Q,c}) * weight over the supplied slice points, with the
    equivalence ratio against the sum of standard energies."""
    from .diagnostics.energy import density_standard

    gate = smallness_gate(Q, v, t, x1, x2)
    if gate > eps_s:
        raise SmallnessError(f"smallness condition fails: {gate:.3g} > {eps_s}")
    V0, Va, e, P = modified_density(Q, c, v, dv, t, x1, x2)
    E = float(np.sum(e) * weight)
    Es = float(sum(np.sum(density_standard(dv[i][0], dv[i][1], dv[i][2], v[i], t, x1, x2, c))
                   for i in range(len(v))) * weight)
    ratio = E / Es if Es > 0 else (1.0 if E == 0 else float("inf"))
    return ModifiedEnergyData(Q=np.asarray(Q), P=P, V0=V0, Va=Va, e=e, E=E, E_standard=Es, ratio=ratio, gate=gate)


def modified_identity_terms(calc, vs, Q, c: float) -> list:
    """Residual of d_t V^0_i + d_a V^a_i - S1_i - S2_i per field.

    F_i = box v_i + c^2 v_i and R_i = F_i - Q_i^{jk} v_j,t v_k,t are taken
    from the manufactured fields themselves.
    """
    Q = _check_Q(Q)
    P = -Q / 3.0
    N = Q.shape[0]
    t, x1, x2 = calc.coords
    X = (x1, x2)
    d = calc.d
    c2 = c * c

    def box(f):
        return d(d(f, 0), 0) - d(d(f, 1), 1) - d(d(f, 2), 2)

    def du(f, a):
        return (X[a] / t) * d(f, 0) + d(f, a + 1)

    def mgood(f, g):
        out = sum((X[a] / t) * (d(f, 0) * du(g, a) + du(f, a) * d(g, 0)) for a in range(2))
        return out - du(f, 0) * du(g, 0) - du(f, 1) * du(g, 1)

    def mflat(f, g):
        return d(f, 0) * d(g, 0) - d(f, 1) * d(g, 1) - d(f, 2) * d(g, 2)

    s2 = t * t - x1 * x1 - x2 * x2
    ts2 = t * t / s2
    dvt = [d(vi, 0) for vi in vs]
    F = [box(vs[i]) + c2 * vs[i] for i in range(N)]
    Rsrc = [F[i] - sum(Q[i, j, k] * dvt[j] * dvt[k] for j in range(N) for k in range(N) if Q[i, j, k] != 0)
            for i in range(N)]
    out = []
    for i in range(N):
        corr = 0.0
        G = 0.0
        for j, k in itertools.product(range(N), repeat=2):
            if P[i, j, k] != 0.0:
                corr = corr + P[i, j, k] * ts2 * vs[j] * vs[k]
                G = G + (Q[i, j, k] + 2.0 * P[i, j, k]) * dvt[j] * dvt[k] - c2 * P[i, j, k] * ts2 * vs[j] * vs[k]
        wi = vs[i] + corr
        dw = [d(wi, k) for k in range(3)]
        V0 = 0.5 * (dw[0] * dw[0] + dw[1] * dw[1] + dw[2] * dw[2]) + 0.5 * c2 * wi * wi
        Va = [-dw[0] * dw[a + 1] for a in range(2)]
        S1 = d(corr, 0) * G + Rsrc[i] * dw[0]
        S2 = 0.0
        for j, k in itertools.product(range(N), repeat=2):
            p = P[i, j, k]
            if p == 0.0:
                continue
            A = p * ts2
            om = A * vs[i]
            vv = vs[j] * vs[k]
            V0 = V0 + om * (dvt[j] * dvt[k] + d(vs[j], 1) * d(vs[k], 1) + d(vs[j], 2) * d(vs[k], 2) + c2 * vv)
            for a in range(2):
                Va[a] = Va[a] - om * (dvt[j] * d(vs[k], a + 1) + dvt[k] * d(vs[j], a + 1))
            S1 = S1 + A * dw[0] * (2.0 * mgood(vs[j], vs[k]) + vs[j] * F[k] + vs[k] * F[j]) \
                + vv * box(A) * dw[0] + 2.0 * mflat(A, vv) * dw[0]
            dA0 = d(A, 0)
            omt = d(om, 0)
            S2 = (S2 + dA0 * vs[i] * (s2 / (t * t)) * dvt[j] * dvt[k] + dA0 * vs[i] * c2 * vv
                  + omt * (du(vs[j], 0) * du(vs[k], 0) + du(vs[j], 1) * du(vs[k], 1))
                  - sum((X[a] / t) * omt * (du(vs[j], a) * dvt[k] + du(vs[k], a) * dvt[j]) for a in range(2))
                  - sum(d(om, a + 1) * (dvt[j] * du(vs[k], a) + dvt[k] * du(vs[j], a)) for a in range(2))
                  + 2.0 * sum((X[a] / t) * du(om, a) for a in range(2)) * dvt[j] * dvt[k]
                  + 2.0 * om * dvt[j] * F[k])
        out.append(d(V0, 0) + d(Va[0], 1) + d(Va[1], 2) - S1 - S2)
    return out


def modified_identity_check(vfields, Q, c: float, h: float = 0.05, block: NFBlock | None = None,
                            points: np.ndarray | None = None) -> dict:
    """Residual of the modified energy identity: FD at h, h/2 and exact jets."""
    Q = _check_Q(Q)
    block = block or NFBlock()
    res = []
    for hh in (h, h / 2):
        calc = GridCalculus(block.t_range, block.x1_range, block.x2_range, hh)
        vs = [f(calc) for f in vfields]
        gate = smallness_gate(Q, [calc.value(v) for v in vs], *calc.coords)
        if gate > EPS_SMALL:
            raise SmallnessError(f"smallness condition fails: {gate:.3g} > {EPS_SMALL}")
        terms = modified_identity_terms(calc, vs, Q, c)
        inner = block.inner(calc)
        res.append(max(float(np.max(np.abs(calc.value(r)[inner]))) for r in terms))
    out = {"h": [h, h / 2], "residual_inf": res, "ratio": res[0] / res[1] if res[1] > 0 else float("inf")}
    if points is None:
        t = np.linspace(block.t_range[0], block.t_range[1], 7)
        g = np.stack(np.meshgrid(t, np.linspace(*block.x1_range, 5), np.linspace(*block.x2_range, 5),
                                 indexing="ij"), -1).reshape(-1, 3)
        points = g
    jc = JetCalculus(points[:, 0], points[:, 1], points[:, 2], order=3)
    terms = modified_identity_terms(jc, [f(jc) for f in vfields], Q, c)
    out["residual_analytic"] = max(float(np.max(np.abs(jc.value(r)))) for r in terms)
    return out
