"""Truncated multivariate Taylor arithmetic in (t, x1, x2) and a grid backend.

A :class:`Jet` holds the Taylor coefficients of a scalar field up to a fixed
total order at a batch of points.  Arithmetic propagates the coefficients
exactly (up to round-off), so derivatives of arbitrarily nested expressions
are analytic rather than difference quotients.  :class:`GridCalculus`
exposes the same interface on numpy arrays sampled on a uniform space-time
block, with derivatives taken by second-order finite differences.  Code that
assembles an identity is written once against either backend.
"""
from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np

NVAR = 3


@lru_cache(maxsize=None)
def multi_indices(order: int) -> tuple[tuple[int, int, int], ...]:
    """All multi-indices of total degree <= order, sorted by degree first.

    The degree-first ordering makes truncation to a lower order a prefix.
    """
    out = []
    for deg in range(order + 1):
        for i in range(deg, -1, -1):
            for j in range(deg - i, -1, -1):
                out.append((i, j, deg - i - j))
    return tuple(out)


@lru_cache(maxsize=None)
def _index(order: int) -> dict:
    return {m: k for k, m in enumerate(multi_indices(order))}


def ncoef(order: int) -> int:
    return (order + 1) * (order + 2) * (order + 3) // 6


@lru_cache(maxsize=None)
def _product_table(order: int):
    mi = multi_indices(order)
    idx = _index(order)
    rows = []
    for k, n in enumerate(mi):
        for i, a in enumerate(mi):
            if a[0] <= n[0] and a[1] <= n[1] and a[2] <= n[2]:
                b = (n[0] - a[0], n[1] - a[1], n[2] - a[2])
                rows.append((k, i, idx[b]))
    rows = np.array(rows, dtype=np.intp)
    starts = np.searchsorted(rows[:, 0], np.arange(len(mi)))
    return rows[:, 1].copy(), rows[:, 2].copy(), starts


@lru_cache(maxsize=None)
def _deriv_table(order: int, axis: int):
    """Source indices and factors for d/dx_axis of an order-`order` jet."""
    idx = _index(order)
    src, fac = [], []
    for n in multi_indices(order - 1):
        m = list(n)
        m[axis] += 1
        src.append(idx[tuple(m)])
        fac.append(float(m[axis]))
    return np.array(src, dtype=np.intp), np.array(fac)[:, None]


@lru_cache(maxsize=None)
def _shift_table(order: int, axis: int):
    """Index pairs m -> m + e_axis within total order `order`."""
    idx = _index(order)
    src, dst = [], []
    for m in multi_indices(order - 1) if order > 0 else ():
        n = list(m)
        n[axis] += 1
        src.append(idx[m])
        dst.append(idx[tuple(n)])
    return np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp)


class Jet:
    """Taylor coefficients c[k, p] of a field at points p, total order `order`."""

    __array_ufunc__ = None
    __slots__ = ("c", "order")

    def __init__(self, coeffs: np.ndarray, order: int):
        coeffs = np.asarray(coeffs)
        if coeffs.shape[0] != ncoef(order):
            raise ValueError(f"expected {ncoef(order)} coefficients for order {order}")
        self.c = coeffs
        self.order = order

    # construction
    @classmethod
    def constant(cls, value, npts: int, order: int) -> "Jet":
        c = np.zeros((ncoef(order), npts), dtype=np.result_type(value, float))
        c[0] = value
        return cls(c, order)

    @classmethod
    def variable(cls, values, axis: int, order: int) -> "Jet":
        values = np.asarray(values, dtype=float)
        c = np.zeros((ncoef(order), values.size))
        c[0] = values
        if order >= 1:
            e = [0, 0, 0]
            e[axis] = 1
            c[_index(order)[tuple(e)]] = 1.0
        return cls(c, order)

    @classmethod
    def from_derivatives(cls, derivs: dict, order: int, npts: int) -> "Jet":
        """Build from a mapping multi-index -> array of partial derivatives."""
        c = np.zeros((ncoef(order), npts))
        for k, m in enumerate(multi_indices(order)):
            if m in derivs:
                c[k] = np.asarray(derivs[m]) / (factorial(m[0]) * factorial(m[1]) * factorial(m[2]))
        return cls(c, order)

    @property
    def npts(self) -> int:
        return self.c.shape[1]

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def deriv(self, m) -> np.ndarray:
        """Partial derivative of multi-index m at every point."""
        m = tuple(m)
        if sum(m) > self.order:
            raise ValueError(f"derivative {m} exceeds jet order {self.order}")
        k = _index(self.order)[m]
        return self.c[k] * (factorial(m[0]) * factorial(m[1]) * factorial(m[2]))

    def times_coordinate(self, x0, axis: int) -> "Jet":
        """Product with the coordinate jet (x0 + dx_axis), cheaper than a full product."""
        src, dst = _shift_table(self.order, axis)
        c = self.c * np.asarray(x0)
        c[dst] += self.c[src]
        return Jet(c, self.order)

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.c[: ncoef(order)], order)

    def d(self, axis: int) -> "Jet":
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = _deriv_table(self.order, axis)
        return Jet(self.c[src] * fac, self.order - 1)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Jet):
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        return self, Jet.constant(other, self.npts, self.order)

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a.c + b.c, a.order)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.c - b.c, a.order)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(b.c - a.c, a.order)

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * np.asarray(other), self.order)
        a, b = self._coerce(other)
        ii, jj, starts = _product_table(a.order)
        prod = a.c[ii] * b.c[jj]
        return Jet(np.add.reduceat(prod, starts, axis=0), a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other), self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(1.0, self.npts, self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base
                p >>= 1
            return out
        return self._compose(lambda x, k: _falling(p, k) * x ** (p - k))

    def _compose(self, dphi) -> "Jet":
        """phi(self) from dphi(x0, k) = k-th derivative of phi at x0."""
        x0 = self.c[0]
        delta = Jet(self.c.copy(), self.order)
        delta.c[0] = 0.0
        out = Jet.constant(dphi(x0, 0), self.npts, self.order)
        power = None
        for k in range(1, self.order + 1):
            power = delta if power is None else power * delta
            out = out + power * (dphi(x0, k) / factorial(k))
        return out

    def reciprocal(self) -> "Jet":
        return self._compose(lambda x, k: (-1) ** k * factorial(k) * x ** (-k - 1))

    def sqrt(self) -> "Jet":
        return self._compose(lambda x, k: _falling(0.5, k) * x ** (0.5 - k))

    def exp(self) -> "Jet":
        return self._compose(lambda x, k: np.exp(x))

    def log(self) -> "Jet":
        return self._compose(
            lambda x, k: np.log(x) if k == 0 else (-1) ** (k - 1) * factorial(k - 1) * x ** (-k)
        )

    def sin(self) -> "Jet":
        return self._compose(lambda x, k: (np.sin, np.cos, lambda y: -np.sin(y), lambda y: -np.cos(y))[k % 4](x))

    def cos(self) -> "Jet":
        return self._compose(lambda x, k: (np.cos, lambda y: -np.sin(y), lambda y: -np.cos(y), np.sin)[k % 4](x))


def _falling(p: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= p - i
    return out


def _dispatch(name):
    npfun = getattr(np, name)

    def f(x):
        if isinstance(x, Jet):
            return getattr(x, name)()
        return npfun(x)

    f.__name__ = name
    return f


sqrt = _dispatch("sqrt")
exp = _dispatch("exp")
log = _dispatch("log")
sin = _dispatch("sin")
cos = _dispatch("cos")


class JetCalculus:
    """Analytic backend: coordinates are order-`order` jets at given points."""

    mode = "analytic"

    def __init__(self, t, x1, x2, order: int = 4):
        self.order = order
        self.t = Jet.variable(t, 0, order)
        self.x1 = Jet.variable(x1, 1, order)
        self.x2 = Jet.variable(x2, 2, order)
        self.npts = self.t.npts

    @property
    def x(self):
        return (self.x1, self.x2)

    @property
    def coords(self):
        return (self.t, self.x1, self.x2)

    def d(self, f, axis: int):
        if isinstance(f, Jet):
            return f.d(axis)
        return 0.0

    def value(self, f) -> np.ndarray:
        if isinstance(f, Jet):
            return f.value
        return np.broadcast_to(np.asarray(f, dtype=float), (self.npts,))


class GridCalculus:
    """Finite-difference backend on a uniform (t, x1, x2) block."""

    mode = "fd"

    def __init__(self, t_range, x1_range, x2_range, spacing: float):
        axes = [np.arange(a, b + 0.5 * spacing, spacing) for a, b in (t_range, x1_range, x2_range)]
        self.axes = axes
        self.spacing = spacing
        self.t, self.x1, self.x2 = np.meshgrid(*axes, indexing="ij")

    @property
    def x(self):
        return (self.x1, self.x2)

    @property
    def coords(self):
        return (self.t, self.x1, self.x2)

    def d(self, f, axis: int):
        if np.ndim(f) == 0:
            return 0.0
        return np.gradient(f, self.spacing, axis=axis, edge_order=2)

    def value(self, f) -> np.ndarray:
        return np.broadcast_to(np.asarray(f, dtype=float), self.t.shape)
