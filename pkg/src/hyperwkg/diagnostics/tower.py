"""Vector-field towers Z^I w on a hyperboloid sample.

Words run over {d0, d1, d2, L1, L2} in the ordered form d^I L^J (partials
to the left), with |I| + |J| <= 2.  Each Z^I w is computed exactly from the
local Taylor data of the sample (a jet of order 3), so towers need no
extra differencing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import jets
from .energy import check_forms, density_standard_frame

PARTIALS = ("d0", "d1", "d2")
BOOSTS = ("L1", "L2")
CHUNK = 65536


def tower_words(order: int = 2) -> list[tuple[str, ...]]:
    """d^I L^J words with |I| + |J| <= order, multi-indices sorted."""
    out = [()]
    for n in range(1, order + 1):
        for nb in range(n + 1):
            np_ = n - nb
            for I in _sorted_tuples(PARTIALS, np_):
                for J in _sorted_tuples(BOOSTS, nb):
                    out.append(I + J)
    return out


def _sorted_tuples(tokens, n):
    if n == 0:
        return [()]
    out = []
    for k, tok in enumerate(tokens):
        for rest in _sorted_tuples(tokens[k:], n - 1):
            out.append((tok,) + rest)
    return out


def apply_token(tok: str, J: jets.Jet, t, x1, x2) -> jets.Jet:
    if tok[0] == "d":
        return J.d(int(tok[1]))
    a = int(tok[1])
    xa = x1 if a == 1 else x2
    return J.d(0).times_coordinate(xa, a) + J.d(a).times_coordinate(t, 0)


def apply_word_jet(word, J: jets.Jet, t, x1, x2) -> jets.Jet:
    for tok in reversed(word):
        J = apply_token(tok, J, t, x1, x2)
    return J


@dataclass
class DerivativeTower:
    """Values and gradients of Z^I w at the sample points (or a chunk of them)."""

    words: list
    values: dict
    grads: dict
    dbar: tuple
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray

    def check_definitions(self, tol: float = 1e-12) -> float:
        """L_a w = x^a d_t w + t d_a w and dbar_a w = L_a w / t, both pointwise."""
        wt, w1, w2 = self.grads[()]
        worst = 0.0
        for a, (xa, wa) in enumerate(((self.x1, w1), (self.x2, w2)), start=1):
            la = self.values[("L%d" % a,)]
            ref = xa * wt + self.t * wa
            scale = max(float(np.max(np.abs(ref), initial=0.0)), 1e-300)
            worst = max(worst, float(np.max(np.abs(la - ref), initial=0.0)) / scale)
            worst = max(worst, float(np.max(np.abs(self.dbar[a - 1] - la / self.t), initial=0.0)) / scale)
        if worst > tol:
            raise AssertionError(f"tower definitions violated: {worst:.3g}")
        return worst


def build_tower(sample, which: str, order: int = 2, sl=slice(None)) -> DerivativeTower:
    if sample.order < order + 1:
        raise ValueError(f"tower of order {order} needs samples of derivative order {order + 1}")
    sample.require_complete()
    t, x1, x2 = sample.t[sl], sample.x1[sl], sample.x2[sl]
    J = sample.jet(which, order + 1)
    J = jets.Jet(J.c[:, sl], J.order)
    values, grads = {}, {}
    for word in tower_words(order):
        Z = apply_word_jet(word, J, t, x1, x2)
        values[word] = Z.value.copy()
        grads[word] = tuple(Z.deriv(m).copy() for m in ((1, 0, 0), (0, 1, 0), (0, 0, 1)))
    wt = grads[()][0]
    dbar = tuple((xa / t) * wt + grads[()][a] for a, xa in ((1, x1), (2, x2)))
    return DerivativeTower(words=tower_words(order), values=values, grads=grads, dbar=dbar, t=t, x1=x1, x2=x2)


@dataclass
class TowerSummary:
    field: str
    c: float
    energies: dict = field(default_factory=dict)
    l2: dict = field(default_factory=dict)
    sup_tinv_w2: float = 0.0
    sup_tw2: float = 0.0
    sup_location: tuple = (0.0, 0.0, 0.0)

    def cumulative(self, order: int) -> float:
        return float(sum(E for w, E in self.energies.items() if len(w) <= order))

    def sobolev_denominator(self) -> float:
        return float(sum(v for w, v in self.l2.items() if len(w) <= 2))


def summarize(sample, which: str, c: float, order: int = 2, chunk: int = CHUNK) -> TowerSummary:
    """Energies E_c(s, Z^I w) and L^2 norms of Z^I w over all words, streamed in chunks."""
    out = TowerSummary(field=which, c=c)
    words = tower_words(order)
    for w in words:
        out.energies[w] = 0.0
        out.l2[w] = 0.0
    wq = sample.quadrature_weight()
    for start in range(0, sample.npts, chunk):
        sl = slice(start, min(start + chunk, sample.npts))
        tw = build_tower(sample, which, order, sl)
        if start == 0:
            tw.check_definitions(1e-10)
        for w in words:
            val = tw.values[w]
            gt, g1, g2 = tw.grads[w]
            check_forms(gt, g1, g2, val, tw.t, tw.x1, tw.x2, c)
            out.energies[w] += float(np.sum(density_standard_frame(gt, g1, g2, val, tw.t, tw.x1, tw.x2, c))) * wq
            out.l2[w] += float(np.sum(val * val)) * wq
        w0 = tw.values[()]
        r = (w0 / tw.t) ** 2
        if r.size and float(r.max()) > out.sup_tinv_w2:
            k = int(np.argmax(r))
            out.sup_tinv_w2 = float(r[k])
            out.sup_location = (float(tw.t[k]), float(tw.x1[k]), float(tw.x2[k]))
        if w0.size:
            out.sup_tw2 = max(out.sup_tw2, float(np.max((w0 * tw.t) ** 2)))
    return out
