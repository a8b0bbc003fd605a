"""Coefficient tensors of the coupled system, null forms, coupling classes.

The system is

    box u         = F1,   F1 = P_w . dd u + A_w . du + D_w u + B_w . dv + K1 v^2
    box v + c^2 v = F2,   F2 = P_kg . dd v + A_kg . du + D_kg u + B_kg . dv + K2 v^2

with
    P_w  = P1 . du + P2 u + P3 . dv + P4 v,   A_w  = A1 . du + A2 u + A3 . dv + A4 v,
    P_kg = P5 . du + P6 u + P7 . dv + P8 v,   A_kg = A5 . du + A6 u + A7 . dv + A8 v,
    D_w  = D1 u + D2 . dv + D3 v,             B_w  = B1 . dv + B2 v,
    D_kg = D5 u + D6 . dv + D7 v,             B_kg = B3 . dv + B4 v.

Index placement: ``P1[a, b, g] du_g dd_ab u``; ``A3[a, b] du_a dv_b``;
``B1[a, b] dv_b dv_a``; rank-1 tensors contract with the derivative they
multiply.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry

RANKS: dict[str, int] = {
    **{n: 3 for n in ("P1", "P3", "P5", "P7")},
    **{n: 2 for n in ("P2", "P4", "P6", "P8", "A1", "A3", "A5", "A7", "B1", "B3")},
    **{n: 1 for n in ("A2", "A4", "A6", "A8", "B2", "B4", "D2", "D6")},
    **{n: 0 for n in ("D1", "D3", "D5", "D7", "K1", "K2")},
}
# Terms assumed absent under the standing hypotheses; kept but flagged.
BOXED = ("A2", "D1", "D2", "D3", "D5", "D6", "D7")
NULL_REQUIRED = ("P1", "P2", "P3", "P5", "A1", "A3", "A5", "A7")
STRONG = ("B1", "B2", "K1")
# Pair of indices contracted against a symmetric object (dd w or dw dw).
_SYM_PAIRS = {n: (0, 1) for n in ("P1", "P3", "P5", "P7")}
_SYM_PAIRS.update({n: (0, 1) for n in ("P2", "P4", "P6", "P8", "A1", "A5", "B1", "B3")})
NULL_TOL = 1e-10


class UsageError(ValueError):
    """Invalid input to a structure operation."""


class CoefficientError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        self.message = message
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


def cone_direction(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.ones_like(theta), np.cos(theta), np.sin(theta)], -1)


def evaluate_form(components: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """F(xi, ..., xi) for xi of shape (..., 3)."""
    comp = np.asarray(components, dtype=float)
    if comp.ndim == 2:
        return np.einsum("ab,...a,...b->...", comp, xi, xi)
    return np.einsum("abc,...a,...b,...c->...", comp, xi, xi, xi)


def symmetrize(components: np.ndarray) -> np.ndarray:
    comp = np.asarray(components, dtype=float)
    perms = list(itertools.permutations(range(comp.ndim)))
    return sum(np.transpose(comp, p) for p in perms) / len(perms)


def symmetrize_pair(components: np.ndarray, pair=(0, 1)) -> np.ndarray:
    comp = np.asarray(components, dtype=float)
    return 0.5 * (comp + np.swapaxes(comp, *pair))


@dataclass(frozen=True)
class MultilinearForm:
    components: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        if comp.ndim not in (2, 3) or any(n != 3 for n in comp.shape):
            raise UsageError("a form must be a 3x3 or 3x3x3 array")
        if not np.all(np.isfinite(comp)):
            raise UsageError("form components must be finite")
        scale = max(1.0, float(np.max(np.abs(comp))))
        if np.max(np.abs(comp - symmetrize(comp))) > 1e-12 * scale:
            raise UsageError("form is not symmetric; use MultilinearForm.symmetric()")
        object.__setattr__(self, "components", comp)

    @classmethod
    def symmetric(cls, components) -> "MultilinearForm":
        return cls(symmetrize(components))

    @property
    def rank(self) -> int:
        return self.components.ndim

    def on_cone(self, theta) -> np.ndarray:
        return evaluate_form(self.components, cone_direction(theta))


@dataclass(frozen=True)
class NullVerdict:
    null: bool
    witness_theta: float | None = None
    witness: tuple[float, float, float] | None = None
    max_abs: float = 0.0

    def describe(self) -> str:
        if self.null:
            return "null"
        return f"not-null (theta={self.witness_theta:.6g}, |p|={self.max_abs:.3g})"


def is_null(form: MultilinearForm) -> NullVerdict:
    """Exact decision: F(xi,...) restricted to the cone is a trigonometric
    polynomial of degree <= rank, so it vanishes identically iff it vanishes at
    2*rank + 1 equispaced angles."""
    if not isinstance(form, MultilinearForm):
        raise UsageError("is_null expects a MultilinearForm")
    n = 2 * form.rank + 1
    theta = 2 * np.pi * np.arange(n) / n
    p = form.on_cone(theta)
    scale = float(np.max(np.abs(form.components)))
    k = int(np.argmax(np.abs(p)))
    if abs(p[k]) <= NULL_TOL * scale or scale == 0.0:
        return NullVerdict(True, max_abs=float(abs(p[k])))
    return NullVerdict(False, float(theta[k]), tuple(float(x) for x in cone_direction(theta[k])), float(abs(p[k])))


def _zeros(rank: int):
    return np.zeros((3,) * rank) if rank else 0.0


@dataclass(frozen=True)
class CoefficientSet:
    P1: np.ndarray = field(default_factory=lambda: _zeros(3))
    P3: np.ndarray = field(default_factory=lambda: _zeros(3))
    P5: np.ndarray = field(default_factory=lambda: _zeros(3))
    P7: np.ndarray = field(default_factory=lambda: _zeros(3))
    P2: np.ndarray = field(default_factory=lambda: _zeros(2))
    P4: np.ndarray = field(default_factory=lambda: _zeros(2))
    P6: np.ndarray = field(default_factory=lambda: _zeros(2))
    P8: np.ndarray = field(default_factory=lambda: _zeros(2))
    A1: np.ndarray = field(default_factory=lambda: _zeros(2))
    A3: np.ndarray = field(default_factory=lambda: _zeros(2))
    A5: np.ndarray = field(default_factory=lambda: _zeros(2))
    A7: np.ndarray = field(default_factory=lambda: _zeros(2))
    A2: np.ndarray = field(default_factory=lambda: _zeros(1))
    A4: np.ndarray = field(default_factory=lambda: _zeros(1))
    A6: np.ndarray = field(default_factory=lambda: _zeros(1))
    A8: np.ndarray = field(default_factory=lambda: _zeros(1))
    B1: np.ndarray = field(default_factory=lambda: _zeros(2))
    B3: np.ndarray = field(default_factory=lambda: _zeros(2))
    B2: np.ndarray = field(default_factory=lambda: _zeros(1))
    B4: np.ndarray = field(default_factory=lambda: _zeros(1))
    D2: np.ndarray = field(default_factory=lambda: _zeros(1))
    D6: np.ndarray = field(default_factory=lambda: _zeros(1))
    D1: float = 0.0
    D3: float = 0.0
    D5: float = 0.0
    D7: float = 0.0
    K1: float = 0.0
    K2: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        for name, rank in RANKS.items():
            val = getattr(self, name)
            if rank == 0:
                val = float(val)
                if not np.isfinite(val):
                    raise UsageError(f"{name} must be finite")
            else:
                val = np.array(val, dtype=float)
                if val.shape != (3,) * rank:
                    raise UsageError(f"{name} must have shape {(3,) * rank}")
                if not np.all(np.isfinite(val)):
                    raise UsageError(f"{name} must be finite")
                if name in _SYM_PAIRS:
                    val = symmetrize_pair(val, _SYM_PAIRS[name])
                val.setflags(write=False)
            object.__setattr__(self, name, val)
        c = float(self.c)
        if not (np.isfinite(c) and c > 0):
            raise UsageError("Klein-Gordon mass c must be finite and > 0")
        object.__setattr__(self, "c", c)

    @classmethod
    def from_entries(cls, entries: dict[str, float], c: float = 1.0) -> "CoefficientSet":
        """Build from ``{"P1.000": 1.0, "K2": 0.5, ...}`` style entries."""
        vals = {n: np.array(_zeros(r), dtype=float) for n, r in RANKS.items()}
        for key, value in entries.items():
            name, idx = _split_key(key)
            if name == "c":
                c = value
                continue
            if idx:
                vals[name][idx] = value
            else:
                vals[name] = float(value)
        return cls(c=c, **vals)

    def is_zero(self, name: str) -> bool:
        return not np.any(np.asarray(getattr(self, name)))

    def scaled(self, factor: float) -> "CoefficientSet":
        return replace(self, **{n: np.asarray(getattr(self, n)) * factor for n in RANKS})

    def entries(self) -> dict[str, float]:
        """Nonzero components in the text grammar (for reports)."""
        out = {}
        for name, rank in RANKS.items():
            val = np.asarray(getattr(self, name))
            if rank == 0:
                if val != 0:
                    out[name] = float(val)
                continue
            for idx in itertools.product(range(3), repeat=rank):
                if val[idx] != 0:
                    out[f"{name}.{''.join(map(str, idx))}"] = float(val[idx])
        out["c"] = self.c
        return out


_KEY = re.compile(r"^([A-Z][0-9]|c)(?:\.([0-9]*))?$")


def _split_key(key: str) -> tuple[str, tuple[int, ...]]:
    m = _KEY.match(key.strip())
    if not m:
        raise UsageError(f"bad coefficient name {key!r}; expected NAME.INDEXDIGITS")
    name, digits = m.group(1), m.group(2)
    if name == "c":
        if digits:
            raise UsageError("c takes no index")
        return name, ()
    if name not in RANKS:
        raise UsageError(f"unknown coefficient {name!r}")
    rank = RANKS[name]
    digits = digits or ""
    if len(digits) != rank or any(d not in "012" for d in digits):
        raise UsageError(f"{name} needs exactly {rank} index digits in 0..2, got {digits!r}")
    return name, tuple(int(d) for d in digits)


def parse_coefficient_lines(lines: list[tuple[int, str]]) -> CoefficientSet:
    """Parse ``(line_number, text)`` pairs of a ``[coefficients]`` section."""
    entries: dict[str, float] = {}
    c = 1.0
    for lineno, raw in lines:
        text = raw.split("#", 1)[0].rstrip()
        if not text.strip():
            continue
        if "=" not in text:
            raise CoefficientError("expected 'NAME.INDEXDIGITS = float'", lineno, len(raw) - len(raw.lstrip()) + 1)
        key, value = text.split("=", 1)
        key_col = len(key) - len(key.lstrip()) + 1
        val_col = len(text) - len(value) + (len(value) - len(value.lstrip())) + 1
        try:
            name, _ = _split_key(key)
        except UsageError as exc:
            raise CoefficientError(str(exc), lineno, key_col) from None
        try:
            num = float(value.strip())
        except ValueError:
            raise CoefficientError(f"value {value.strip()!r} is not a float", lineno, val_col) from None
        if not np.isfinite(num):
            raise CoefficientError("value must be finite", lineno, val_col)
        if name == "c":
            c = num
        else:
            entries[key.strip()] = num
    try:
        return CoefficientSet.from_entries(entries, c=c)
    except UsageError as exc:
        raise CoefficientError(str(exc)) from None


def parse_coefficients(text: str) -> CoefficientSet:
    """Parse a text holding a ``[coefficients]`` section (or bare entries)."""
    lines = text.splitlines()
    section = None
    body = []
    for i, raw in enumerate(lines, 1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped.startswith("["):
            section = stripped.strip("[] ").lower()
            continue
        if section in (None, "coefficients"):
            body.append((i, raw))
    return parse_coefficient_lines(body)


# Classification ----------------------------------------------------------


K1_NOTE = (
    "K1 v^2 is classed as strong coupling; the verdict from B1 and B2 alone "
    "is reported as coupling_without_K1"
)


def classify_coupling(coeffs: CoefficientSet) -> str:
    return "weak" if all(coeffs.is_zero(n) for n in STRONG) else "strong"


def literal_coupling(coeffs: CoefficientSet) -> str:
    """Verdict using only B1 and B2."""
    return "weak" if coeffs.is_zero("B1") and coeffs.is_zero("B2") else "strong"


@dataclass
class ClassificationReport:
    coupling: str
    coupling_literal: str
    null_status: dict[str, NullVerdict]
    theorem1_admissible: bool
    violations: list[str]
    flags: list[str]
    notes: list[str]

    def to_dict(self) -> dict:
        return {
            "coupling": self.coupling,
            "coupling_without_K1": self.coupling_literal,
            "null_status": {
                k: ({"null": True} if v.null else {"null": False, "witness_theta": v.witness_theta,
                                                    "witness": list(v.witness), "max_abs": v.max_abs})
                for k, v in self.null_status.items()
            },
            "theorem1_admissible": self.theorem1_admissible,
            "violations": list(self.violations),
            "flags": list(self.flags),
            "notes": list(self.notes),
        }


def theorem1_admissible(coeffs: CoefficientSet) -> ClassificationReport:
    coupling = classify_coupling(coeffs)
    violations: list[str] = []
    flags: list[str] = []
    notes: list[str] = []
    if coupling == "strong":
        bad = [n for n in STRONG if not coeffs.is_zero(n)]
        violations.append("strong coupling: nonzero " + ", ".join(bad))
    if not coeffs.is_zero("K1"):
        notes.append(K1_NOTE)
    status = {}
    for name in NULL_REQUIRED:
        verdict = is_null(MultilinearForm.symmetric(getattr(coeffs, name)))
        status[name] = verdict
        if not verdict.null:
            violations.append(f"{name} not null (witness theta={verdict.witness_theta:.6g})")
    for name in BOXED + ("P6",):
        if not coeffs.is_zero(name):
            flags.append(f"{name} nonzero")
            violations.append(f"{name} must vanish")
    return ClassificationReport(
        coupling=coupling,
        coupling_literal=literal_coupling(coeffs),
        null_status=status,
        theorem1_admissible=not violations,
        violations=violations,
        flags=flags,
        notes=notes,
    )


def semi_psi_arrays(t, x1, x2) -> np.ndarray:
    return geometry.frame_arrays(t, x1, x2, geometry.SEMI)[1]


def semi_frame_coefficient(coeffs: CoefficientSet | dict, which: str, point: geometry.ConePoint):
    """Underlined components of a constant tensor at a point of the cone.

    ``coeffs`` may also be a plain mapping name -> tensor (used by the
    normal-form constants).
    """
    T = coeffs[which] if isinstance(coeffs, dict) else getattr(coeffs, which)
    if not point.in_cone:
        raise geometry.DomainError(f"point {point} is outside t > r + 1")
    psi = geometry.frame_at(point, geometry.SEMI).psi
    return geometry.transform_tensor(np.asarray(T, dtype=float), psi)


def semi_contract(T, psi) -> object:
    """Contract a constant tensor with backend-agnostic psi (nested lists).

    Returns nested lists of expressions (floats, arrays or jets).
    """
    T = np.asarray(T, dtype=float)
    if T.ndim == 0:
        return float(T)
    idx = list(itertools.product(range(3), repeat=T.ndim))

    def comp(target):
        acc = 0.0
        for src in idx:
            coef = T[src]
            if coef == 0.0:
                continue
            term = coef
            for k in range(T.ndim):
                term = term * psi[src[k]][target[k]]
            acc = acc + term
        return acc

    return _nest({tgt: comp(tgt) for tgt in idx}, T.ndim)


def _nest(flat: dict, rank: int):
    if rank == 1:
        return [flat[(i,)] for i in range(3)]
    if rank == 2:
        return [[flat[(i, j)] for j in range(3)] for i in range(3)]
    return [[[flat[(i, j, k)] for k in range(3)] for j in range(3)] for i in range(3)]

