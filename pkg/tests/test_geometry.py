import numpy as np
import pytest

from hyperwkg import geometry as g
from hyperwkg.geometry import HYPERBOLIC, SEMI, ConePoint


def test_cone_point_invariants():
    p = ConePoint.inside(5.0, 3.0, 0.0)
    assert p.r == 3.0 and p.s == 4.0
    rng = np.random.default_rng(0)
    for t, x1, x2 in g.random_cone_points(200, rng):
        q = ConePoint.inside(t, x1, x2)
        assert q.s <= q.t
        assert abs(q.s ** 2 + q.r ** 2 - q.t ** 2) < 1e-12 * q.t ** 2


@pytest.mark.parametrize("pt", [(2.0, 1.0, 0.0), (3.0, 1.5, 1.5), (1.0, 0.0, 0.0)])
def test_inside_rejects_points_off_the_region(pt):
    with pytest.raises(g.DomainError):
        ConePoint.inside(*pt)


def test_hyperbolic_frame_at_origin_is_identity():
    fr = g.frame_at(ConePoint(2.0, 0.0, 0.0), HYPERBOLIC)
    assert np.array_equal(fr.phi, np.eye(3))
    assert np.array_equal(fr.psi, np.eye(3))


def test_hyperbolic_frame_values():
    fr = g.frame_at(ConePoint(5.0, 3.0, 0.0), HYPERBOLIC)
    np.testing.assert_allclose(fr.phi, [[0.8, 0, 0], [0.6, 1, 0], [0, 0, 1]], atol=1e-15)
    np.testing.assert_allclose(fr.psi, [[1.25, 0, 0], [-0.75, 1, 0], [0, 0, 1]], atol=1e-15)
    # independent inverse
    np.testing.assert_allclose(np.linalg.inv(fr.phi), fr.psi, atol=1e-14)


def test_hyperbolic_frame_rejects_cone():
    with pytest.raises(g.DomainError, match="s"):
        g.frame_at(ConePoint(3.0, 3.0, 0.0), HYPERBOLIC)
    with pytest.raises(g.DomainError):
        g.frame_at(ConePoint(-1.0, 0.0, 0.0), SEMI)


@pytest.mark.parametrize("kind", [HYPERBOLIC, SEMI])
def test_phi_psi_inverse_many_points(kind):
    pts = g.random_cone_points(10_000, np.random.default_rng(1))
    phi, psi = g.frame_arrays(pts[:, 0], pts[:, 1], pts[:, 2], kind)
    err = np.abs(phi @ psi - np.eye(3)).max()
    assert err < 1e-12


def test_metric_values():
    m = g.metric_in_frame(ConePoint(2.0, 0.0, 0.0), HYPERBOLIC).upper
    np.testing.assert_array_equal(m, np.diag([1.0, -1.0, -1.0]))
    m = g.metric_in_frame(ConePoint(5.0, 3.0, 0.0), SEMI)
    np.testing.assert_allclose(m.upper, [[0.64, 0.6, 0], [0.6, -1, 0], [0, 0, -1]], atol=1e-15)
    # lowered metric is the matrix inverse of the raised one
    np.testing.assert_allclose(m.lower @ m.upper, np.eye(3), atol=1e-14)


@pytest.mark.parametrize("kind", [HYPERBOLIC, SEMI])
def test_metric_matches_contraction_oracle(kind):
    pts = g.random_cone_points(10_000, np.random.default_rng(2))
    _, psi = g.frame_arrays(pts[:, 0], pts[:, 1], pts[:, 2], kind)
    closed = g.metric_formula(pts[:, 0], pts[:, 1], pts[:, 2], kind)
    oracle = g.contract_metric(psi)
    assert np.abs(closed - oracle).max() < 1e-12 * max(1.0, np.abs(oracle).max())


def test_tensor_to_frame_consistency_and_round_trip():
    p = ConePoint(5.0, 3.0, 0.0)
    np.testing.assert_allclose(g.tensor_to_frame(g.MINKOWSKI, p, SEMI), g.metric_in_frame(p, SEMI).upper,
                               atol=1e-15)
    assert not np.any(g.tensor_to_frame(np.zeros((3, 3)), p, HYPERBOLIC))
    rng = np.random.default_rng(3)
    for t, x1, x2 in g.random_cone_points(50, rng, (2.0, 20.0), st_min=0.05):
        T = rng.normal(size=(3, 3))
        T = T + T.T
        q = ConePoint(t, x1, x2)
        for kind in (HYPERBOLIC, SEMI):
            back = g.tensor_to_frame(g.tensor_from_frame(T, q, kind), q, kind)
            assert np.abs(back - T).max() < 1e-12 * np.abs(T).max() * (t / q.s) ** 2


def test_semi_frame_dbar_of_t():
    from hyperwkg.jets import JetCalculus

    pts = g.random_cone_points(100, np.random.default_rng(4))
    calc = JetCalculus(pts[:, 0], pts[:, 1], pts[:, 2], order=1)
    t = calc.coords[0]
    for a in (1, 2):
        val = calc.value(g.apply_field(f"h{a}", t, calc))
        np.testing.assert_allclose(val, pts[:, a] / pts[:, 0], rtol=1e-14)


def test_st_bound_boost_example():
    rep = g.st_bound_check(1, 0, ("L1",), [ConePoint(5.0, 3.0, 0.0)])
    assert rep.values[0] == pytest.approx(-0.48, abs=1e-14)
    assert rep.max_ratio == pytest.approx(0.6, abs=1e-14)
    assert rep.satisfied


def test_st_bound_constant_function_vanishes():
    pts = g.random_cone_points(50, np.random.default_rng(5))
    for word in (("d0",), ("L2",), ("h1", "d2")):
        rep = g.st_bound_check(0, 0, word, pts)
        assert rep.max_ratio == 0.0


def test_st_bound_time_derivative_on_cloud():
    pts = g.random_cone_points(1000, np.random.default_rng(6))
    rep = g.st_bound_check(1, 0, ("d0",), pts)
    assert rep.max_ratio <= 1.0


def test_st_bound_all_low_order_words():
    pts = g.random_cone_points(200, np.random.default_rng(7), (2.0, 40.0))
    worst = 0.0
    for l in range(-2, 3):
        for n in range(-2, 3):
            for word in g.all_words(2):
                worst = max(worst, g.st_bound_check(l, n, word, pts, constant=30.0).max_ratio)
    assert worst <= 30.0


def test_st_bound_rejects_unknown_symbols():
    with pytest.raises(ValueError):
        g.st_bound_check(1, 0, ("S",), [ConePoint(5.0, 3.0, 0.0)])
    with pytest.raises(ValueError):
        g.st_bound_check(1, 0, ("d0",) * 4, [ConePoint(5.0, 3.0, 0.0)])
