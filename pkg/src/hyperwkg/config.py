"""Run configuration: one sectioned key-value text file.

    [coefficients]      structure grammar (NAME.INDEX = value, c = mass)
    [grid]              h, L, cfl, stencil_order
    [run]               epsilon, delta, s_list, t_max, profile, seed, ...
    [outputs]           csv, json, rays, checkpoint, checkpoint_every
    [mode]              force, monitors, fits, identity_suite, suite

``s_list`` is either a comma list ``2, 2.5, 3`` or a range ``2:6:0.25``
(inclusive of the end point).  Comments start with ``#``.
"""
from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .evolve.initial import PROFILES
from .structure import CoefficientError, CoefficientSet, parse_coefficient_lines


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


@dataclass
class GridSection:
    h: float = 1.0 / 32
    L: float = 20.0
    cfl: float = 0.4
    stencil_order: int = 2


@dataclass
class RunSection:
    epsilon: float = 1e-3
    delta: float = 0.01
    s_list: list = field(default_factory=lambda: [float(s) for s in np.arange(2.0, 6.0001, 0.25)])
    t_max: float | None = None
    profile: str = "polynomial-bump"
    seed: int = 0
    sample_order: int = 1
    tower_order: int = 0
    rays: list = field(default_factory=lambda: [0.0])
    ray_stride: int = 4
    fit_t_min: float = 4.0


@dataclass
class OutputSection:
    csv: str = "series.csv"
    json: str = "report.json"
    rays: str = "rays.csv"
    checkpoint: str = "checkpoint.bin"
    checkpoint_every: int = 0


@dataclass
class ModeSection:
    force: bool = False
    monitors: bool = True
    fits: bool = True
    identity_suite: bool = False
    suite: str | None = None


@dataclass
class RunConfig:
    coefficients: CoefficientSet
    grid: GridSection = field(default_factory=GridSection)
    run: RunSection = field(default_factory=RunSection)
    outputs: OutputSection = field(default_factory=OutputSection)
    mode: ModeSection = field(default_factory=ModeSection)
    source: str | None = None

    @property
    def t_max(self) -> float:
        if self.run.t_max is not None:
            return self.run.t_max
        s = self.run.s_list[-1]
        return (s * s + 1.0) / 2.0

    def to_dict(self) -> dict:
        return {"grid": asdict(self.grid), "run": asdict(self.run), "outputs": asdict(self.outputs),
                "mode": asdict(self.mode), "coefficients": self.coefficients.entries()}

    def resolve(self, out_dir: str | None) -> dict:
        """Absolute output paths (relative ones resolve against ``out_dir``)."""
        base = out_dir or os.getcwd()
        paths = {}
        for key in ("csv", "json", "rays", "checkpoint"):
            p = getattr(self.outputs, key)
            paths[key] = p if os.path.isabs(p) else os.path.join(base, p)
        return paths


_SECTIONS = {"coefficients", "grid", "run", "outputs", "mode"}


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _float_list(text):
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError("range form is start:stop:step with step > 0")
        a, b, d = parts
        n = int(math.floor((b - a) / d + 1e-9))
        return [round(a + k * d, 12) for k in range(n + 1)]
    return [float(p) for p in text.split(",") if p.strip()]


def _optional_float(text):
    return None if text.lower() in ("auto", "none", "") else float(text)


def _optional_str(text):
    return None if text.lower() in ("all", "none") else text


_FIELDS = {
    "grid": {"h": float, "L": float, "cfl": float, "stencil_order": int},
    "run": {"epsilon": float, "delta": float, "s_list": _float_list, "t_max": _optional_float,
            "profile": str, "seed": int, "sample_order": int, "tower_order": int,
            "rays": _float_list, "ray_stride": int, "fit_t_min": float},
    "outputs": {"csv": str, "json": str, "rays": str, "checkpoint": str, "checkpoint_every": int},
    "mode": {"force": _bool, "monitors": _bool, "fits": _bool, "identity_suite": _bool,
             "suite": _optional_str},
}


def parse_config(text: str, source: str | None = None) -> RunConfig:
    sections: dict[str, list] = {name: [] for name in _SECTIONS}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        stripped = body.strip()
        if not stripped:
            continue
        col = len(body) - len(body.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", lineno, col)
            name = stripped[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]", lineno, col)
            current = name
            continue
        if current is None:
            raise ConfigError("entry outside of any section", lineno, col)
        sections[current].append((lineno, raw))
    try:
        coeffs = parse_coefficient_lines(sections["coefficients"])
    except CoefficientError as exc:
        raise ConfigError(exc.message, exc.line, exc.col) from None
    parts = {"grid": GridSection(), "run": RunSection(), "outputs": OutputSection(), "mode": ModeSection()}
    for name, obj in parts.items():
        for lineno, raw in sections[name]:
            text = raw.split("#", 1)[0]
            col = len(text) - len(text.lstrip()) + 1
            if "=" not in text:
                raise ConfigError("expected 'key = value'", lineno, col)
            key, value = (p.strip() for p in text.split("=", 1))
            conv = _FIELDS[name].get(key)
            if conv is None:
                raise ConfigError(f"unknown key {key!r} in [{name}]", lineno, col)
            try:
                setattr(obj, key, conv(value))
            except ValueError as exc:
                rhs = text.split("=", 1)[1]
                vcol = text.index("=") + 2 + len(rhs) - len(rhs.lstrip())
                raise ConfigError(f"bad value for {key}: {exc}", lineno, vcol) from None
    cfg = RunConfig(coefficients=coeffs, source=source, **parts)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    s = cfg.run.s_list
    if not s:
        raise ConfigError("s_list is empty")
    if any(b <= a for a, b in zip(s, s[1:])):
        raise ConfigError("s_list must be sorted strictly ascending")
    if s[0] < 2.0:
        raise ConfigError("s_list must start at s >= 2")
    if cfg.run.profile not in PROFILES:
        raise ConfigError(f"unknown profile {cfg.run.profile!r}; expected one of {sorted(PROFILES)}")
    if cfg.run.sample_order not in (1, 2, 3):
        raise ConfigError("sample_order must be 1, 2 or 3")
    if cfg.run.tower_order not in (0, 1, 2):
        raise ConfigError("tower_order must be 0, 1 or 2")
    if cfg.run.tower_order and cfg.run.sample_order < cfg.run.tower_order + 1:
        raise ConfigError("tower_order k needs sample_order >= k + 1")
    if cfg.grid.h <= 0 or cfg.grid.L <= 0:
        raise ConfigError("grid h and L must be positive")
    if not 0.0 <= cfg.run.delta < 1.0:
        raise ConfigError("delta must lie in [0, 1)")
    if any(not 0.0 <= lam < 1.0 for lam in cfg.run.rays):
        raise ConfigError("rays are r = lam t with 0 <= lam < 1")
    if cfg.t_max < (s[-1] ** 2 + 1.0) / 2.0 - 1e-12:
        raise ConfigError(f"t_max must reach the last crossing of H_{s[-1]:g}, t = {(s[-1] ** 2 + 1) / 2:g}")


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=os.path.abspath(path))


def check_writable(paths: dict) -> None:
    for key, p in paths.items():
        d = os.path.dirname(os.path.abspath(p)) or "."
        os.makedirs(d, exist_ok=True)
        if not os.access(d, os.W_OK):
            raise ConfigError(f"output path for {key} is not writable: {p}")
