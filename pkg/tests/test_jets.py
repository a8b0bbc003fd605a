import numpy as np
import pytest

from hyperwkg import jets
from hyperwkg.jets import GridCalculus, JetCalculus


def test_multi_indices_degree_first():
    mi = jets.multi_indices(2)
    assert mi[0] == (0, 0, 0)
    assert [sum(m) for m in mi] == sorted(sum(m) for m in mi)
    assert len(mi) == jets.ncoef(2) == 10


def test_products_and_compositions_match_closed_forms():
    t = np.array([2.0, 3.5])
    x1 = np.array([0.3, -1.0])
    x2 = np.array([0.1, 0.7])
    calc = JetCalculus(t, x1, x2, order=3)
    T, X1, X2 = calc.coords
    f = jets.exp(X1 * T) * jets.sin(X2) / T
    # d_t d_x1 of e^{x1 t} sin(x2)/t = sin(x2) e^{x1 t} (x1 + x1^2 t - x1/t... ) computed by hand:
    # g = e^{x1 t}/t ; g_x1 = e^{x1 t};  g_x1t = x1 e^{x1 t}
    np.testing.assert_allclose(f.deriv((1, 1, 0)), x1 * np.exp(x1 * t) * np.sin(x2), rtol=1e-13)
    np.testing.assert_allclose(f.deriv((0, 2, 1)), t * np.exp(x1 * t) * np.cos(x2), rtol=1e-13)
    g = (T * T - X1 * X1) ** 0.5
    np.testing.assert_allclose(g.deriv((1, 0, 0)), t / np.sqrt(t * t - x1 * x1), rtol=1e-13)
    np.testing.assert_allclose(jets.log(T).deriv((3, 0, 0)), 2 / t ** 3, rtol=1e-13)


def test_times_coordinate_equals_full_product():
    rng = np.random.default_rng(0)
    t, x1, x2 = rng.uniform(2, 4, 5), rng.normal(size=5), rng.normal(size=5)
    calc = JetCalculus(t, x1, x2, order=3)
    T, X1, X2 = calc.coords
    f = jets.exp(X1 - X2 * T) + X2 ** 3
    for axis, coord in ((0, T), (1, X1), (2, X2)):
        a = f.times_coordinate(calc.value(coord), axis).c
        b = (f * coord).c
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)


def test_grid_calculus_second_order():
    errs = []
    for h, stride in ((0.05, 1), (0.025, 2)):
        calc = GridCalculus((1.0, 1.5), (0.0, 0.5), (0.0, 0.5), h)
        t, x1, x2 = calc.coords
        f = np.sin(t) * np.cos(x1 + 2 * x2)
        fx = calc.d(f, 2)
        exact = -2 * np.sin(t) * np.sin(x1 + 2 * x2)
        # compare on the common coarse nodes away from the one-sided edges
        err = np.abs(fx - exact)[::stride, ::stride, ::stride]
        errs.append(np.max(err[1:-1, 1:-1, 1:-1]))
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.2)


def test_derivative_beyond_order_rejected():
    calc = JetCalculus(np.array([2.0]), np.array([0.0]), np.array([0.0]), order=1)
    with pytest.raises(ValueError):
        calc.coords[0].deriv((2, 0, 0))
