"""Cone coordinates, hyperbolic and semi-hyperboloidal frames, (s/t)-bounds.

Matrix convention: ``M[alpha, beta]`` stores the component with lower
(Cartesian row) index alpha and upper index beta, so that
``dbar_alpha = phi[alpha, beta] d_beta`` and ``d_alpha = psi[alpha, beta] dbar_beta``.
Contravariant tensors transform as ``psi.T @ T @ psi``.

The sign convention is box = d_t d_t - d_1 d_1 - d_2 d_2 with Minkowski metric
diag(1, -1, -1).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import jets

MINKOWSKI = np.diag([1.0, -1.0, -1.0])
HYPERBOLIC = "hyperbolic"
SEMI = "semi-hyperboloidal"
KINDS = (HYPERBOLIC, SEMI)
ST_FLOOR = 1e-8


class DomainError(ValueError):
    """A point lies outside the region where a frame is defined."""


@dataclass(frozen=True)
class ConePoint:
    t: float
    x1: float
    x2: float

    @property
    def r(self) -> float:
        return float(np.hypot(self.x1, self.x2))

    @property
    def s(self) -> float:
        r = self.r
        return float(np.sqrt(max((self.t - r) * (self.t + r), 0.0)))

    @property
    def in_cone(self) -> bool:
        return self.t > self.r + 1.0

    @classmethod
    def inside(cls, t: float, x1: float, x2: float) -> "ConePoint":
        """Constructor for points of the region t > r + 1; rejects the rest."""
        p = cls(float(t), float(x1), float(x2))
        if not p.in_cone:
            raise DomainError(f"point ({t}, {x1}, {x2}) violates t > r + 1")
        return p


@dataclass(frozen=True)
class FrameMatrices:
    phi: np.ndarray
    psi: np.ndarray
    kind: str


@dataclass(frozen=True)
class FrameMetric:
    upper: np.ndarray
    kind: str
    lower: np.ndarray | None = None


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown frame kind {kind!r}; expected one of {KINDS}")


def _validate(t, x1, x2, kind):
    t = np.asarray(t, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if kind == HYPERBOLIC:
        s2 = t * t - x1 * x1 - x2 * x2
        ok = (s2 > 0) & (t > 0)
        st = np.sqrt(np.where(ok, s2, 0.0)) / np.where(t > 0, t, 1.0)
        if not np.all(ok & (st >= ST_FLOOR)):
            raise DomainError("hyperbolic frame needs s > 0 with s/t >= 1e-8")
    elif np.any(t <= 0):
        raise DomainError("semi-hyperboloidal frame needs t > 0")
    return t, x1, x2


def phi_psi(kind: str, t, x1, x2):
    """Frame matrices as nested 3x3 lists of expressions.

    Works for floats, numpy arrays and :class:`jets.Jet` coordinates alike.
    """
    _check_kind(kind)
    zero, one = 0.0 * t, 1.0 + 0.0 * t
    if kind == HYPERBOLIC:
        s = jets.sqrt(t * t - x1 * x1 - x2 * x2)
        phi = [[s / t, zero, zero], [x1 / t, one, zero], [x2 / t, zero, one]]
        psi = [[t / s, zero, zero], [-x1 / s, one, zero], [-x2 / s, zero, one]]
    else:
        phi = [[one, zero, zero], [x1 / t, one, zero], [x2 / t, zero, one]]
        psi = [[one, zero, zero], [-x1 / t, one, zero], [-x2 / t, zero, one]]
    return phi, psi


def frame_arrays(t, x1, x2, kind: str):
    """Vectorised frame matrices with shape (..., 3, 3)."""
    t, x1, x2 = _validate(t, x1, x2, kind)
    phi, psi = phi_psi(kind, t, x1, x2)
    return np.stack([np.stack(row, -1) for row in phi], -2), np.stack([np.stack(row, -1) for row in psi], -2)


def frame_at(point: ConePoint, kind: str) -> FrameMatrices:
    _check_kind(kind)
    phi, psi = frame_arrays(point.t, point.x1, point.x2, kind)
    return FrameMatrices(phi=phi, psi=psi, kind=kind)


def metric_formula(t, x1, x2, kind: str):
    """Frame metric m^{alpha beta} from the closed form, shape (..., 3, 3)."""
    t, x1, x2 = _validate(t, x1, x2, kind)
    one = np.ones_like(t)
    if kind == HYPERBOLIC:
        s = np.sqrt(t * t - x1 * x1 - x2 * x2)
        rows = [[one, x1 / s, x2 / s], [x1 / s, -one, 0 * one], [x2 / s, 0 * one, -one]]
    else:
        st2 = 1.0 - (x1 * x1 + x2 * x2) / (t * t)
        rows = [[st2, x1 / t, x2 / t], [x1 / t, -one, 0 * one], [x2 / t, 0 * one, -one]]
    return np.stack([np.stack(r, -1) for r in rows], -2)


def semi_metric_lower(t, x1, x2):
    """Lowered semi-hyperboloidal metric m_{alpha beta}, shape (..., 3, 3)."""
    t, x1, x2 = _validate(t, x1, x2, SEMI)
    a, b = x1 / t, x2 / t
    one = np.ones_like(t)
    rows = [[one, a, b], [a, a * a - 1.0, a * b], [b, a * b, b * b - 1.0]]
    return np.stack([np.stack(r, -1) for r in rows], -2)


def contract_metric(psi: np.ndarray) -> np.ndarray:
    """Independent oracle: m^{a'b'} psi_{a'}^a psi_{b'}^b by explicit loops."""
    psi = np.asarray(psi)
    out = np.zeros(psi.shape)
    for a in range(3):
        for b in range(3):
            acc = 0.0
            for ap in range(3):
                acc = acc + MINKOWSKI[ap, ap] * psi[..., ap, a] * psi[..., ap, b]
            out[..., a, b] = acc
    return out


def metric_in_frame(point: ConePoint, kind: str) -> FrameMetric:
    upper = metric_formula(point.t, point.x1, point.x2, kind)
    lower = semi_metric_lower(point.t, point.x1, point.x2) if kind == SEMI else None
    return FrameMetric(upper=upper, kind=kind, lower=lower)


_CONTRACT = {
    1: "a,...az->...z",
    2: "ab,...az,...by->...zy",
    3: "abc,...az,...by,...cx->...zyx",
}


def transform_tensor(T: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Contract every (upper) index of a constant tensor with psi."""
    T = np.asarray(T, dtype=float)
    if T.ndim == 0:
        return T
    return np.einsum(_CONTRACT[T.ndim], T, *([psi] * T.ndim))


def tensor_to_frame(T: np.ndarray, point: ConePoint, kind: str) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if not np.all(np.isfinite(T)):
        raise ValueError("tensor components must be finite")
    psi = frame_at(point, kind).psi
    return psi.T @ T @ psi if T.ndim == 2 else transform_tensor(T, psi)


def tensor_from_frame(Tf: np.ndarray, point: ConePoint, kind: str) -> np.ndarray:
    phi = frame_at(point, kind).phi
    return phi.T @ np.asarray(Tf, dtype=float) @ phi


# Vector-field words ------------------------------------------------------

WORD_TOKENS = ("d0", "d1", "d2", "L1", "L2", "h1", "h2")


def parse_word(word) -> tuple[str, ...]:
    if isinstance(word, str):
        word = tuple(tok for tok in word.replace(",", " ").split() if tok)
    word = tuple(word)
    bad = [tok for tok in word if tok not in WORD_TOKENS]
    if bad:
        raise ValueError(f"unsupported vector-field symbols {bad}; allowed {WORD_TOKENS}")
    return word


def word_type(word) -> tuple[int, int, int]:
    """(partials, boosts, hyperbolic derivatives) counts of a word."""
    word = parse_word(word)
    return (
        sum(tok[0] == "d" for tok in word),
        sum(tok[0] == "L" for tok in word),
        sum(tok[0] == "h" for tok in word),
    )


def apply_field(tok: str, f, calc):
    """Apply one vector field to f using a calculus backend."""
    t, x1, x2 = calc.coords
    x = (x1, x2)
    if tok[0] == "d":
        return calc.d(f, int(tok[1]))
    a = int(tok[1]) - 1
    ft, fa = calc.d(f, 0), calc.d(f, a + 1)
    if tok[0] == "L":
        return x[a] * ft + t * fa
    return (x[a] / t) * ft + fa


def apply_word(word, f, calc):
    """Z^I f with the rightmost field applied first."""
    for tok in reversed(parse_word(word)):
        f = apply_field(tok, f, calc)
    return f


def all_words(max_order: int, tokens: Sequence[str] = WORD_TOKENS) -> list[tuple[str, ...]]:
    out: list[tuple[str, ...]] = []
    for n in range(max_order + 1):
        out.extend(itertools.product(tokens, repeat=n))
    return out


@dataclass
class BoundReport:
    l: int
    n: int
    word: tuple[str, ...]
    word_type: tuple[int, int, int]
    max_ratio: float
    constant: float
    satisfied: bool
    values: np.ndarray


def st_bound_check(l: int, n: int, word, points: Iterable[ConePoint] | np.ndarray,
                   constant: float = 1.0) -> BoundReport:
    """Compare |Z^I((s/t)^l t^n)| with its homogeneity bound at the given points.

    Derivatives are exact (Taylor-jet arithmetic on the closed form).
    ``points`` is either a sequence of ConePoints or an (N, 3) array.
    """
    word = parse_word(word)
    if len(word) > 3:
        raise ValueError("word length must be <= 3")
    pts = np.array([[p.t, p.x1, p.x2] for p in points]) if not isinstance(points, np.ndarray) else points
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    t, x1, x2 = pts.T
    if np.any(t <= np.hypot(x1, x2) + 1.0):
        raise DomainError("sample points must satisfy t > r + 1")
    calc = jets.JetCalculus(t, x1, x2, order=max(len(word), 1))
    T, X1, X2 = calc.coords
    st = jets.sqrt(T * T - X1 * X1 - X2 * X2) / T
    f = _int_power(st, l) * _int_power(T, n)
    val = calc.value(apply_word(word, f, calc))
    i, _, k = word_type(word)
    sv = np.sqrt(t * t - x1 * x1 - x2 * x2)
    bound = t ** (n - k) * (sv / t) ** l
    if i >= 1:
        bound = bound * t / sv ** 2
    ratio = float(np.max(np.abs(val) / bound))
    return BoundReport(l, n, word, (i, _, k), ratio, constant, ratio <= constant, val)


def _int_power(f, p: int):
    if p >= 0:
        return f ** p
    return (1.0 / f) ** (-p)


def random_cone_points(n: int, rng: np.random.Generator, t_range=(2.0, 50.0), st_min: float = 0.0) -> np.ndarray:
    """Random points of t > r + 1 (optionally with s/t >= st_min), shape (n, 3)."""
    out = np.empty((0, 3))
    while out.shape[0] < n:
        t = rng.uniform(*t_range, size=2 * n)
        r = (t - 1.0) * np.sqrt(rng.uniform(0, 1, size=2 * n))
        th = rng.uniform(0, 2 * np.pi, size=2 * n)
        keep = (r < t - 1.0) & (np.sqrt(1 - (r / t) ** 2) >= st_min)
        pts = np.stack([t, r * np.cos(th), r * np.sin(th)], -1)[keep]
        out = np.concatenate([out, pts])
    return out[:n]
