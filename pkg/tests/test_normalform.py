import numpy as np
import pytest

from hyperwkg import geometry
from hyperwkg import normalform as nf
from hyperwkg.geometry import ConePoint
from hyperwkg.jets import GridCalculus, JetCalculus
from hyperwkg.verify import fields
from hyperwkg.verify.identities import box
from hyperwkg.verify.monitors import synthetic_sample

MINK = np.diag([1.0, -1.0, -1.0])


def test_compute_ab_closed_forms():
    c = 1.5
    K = nf.NormalFormConstants(B=[0.9, 0.0, 0.0], h1=np.zeros((3, 3, 3)), c=c)
    # at r = 0 both frames are the identity
    assert nf.compute_ab(K, ConePoint(4.0, 0.0, 0.0)) == pytest.approx((0.9 / (3 * c * c), 0.0))
    # B^0 in the semi frame is B^0 - (x^a/t) B^a
    K = nf.NormalFormConstants(B=[1.0, 1.0, 0.0], c=1.0)
    a, b = nf.compute_ab(K, ConePoint(5.0, 3.0, 0.0))
    assert a == pytest.approx(0.4 / 3, abs=1e-15) and b == 0.0
    # h0 = Minkowski gives (t/s)^2 (s/t)^2 = 1
    K = nf.NormalFormConstants(h0=MINK, R=0.5, c=2.0)
    for pt in (ConePoint(5.0, 3.0, 0.0), ConePoint(9.0, 2.0, -5.0)):
        assert nf.compute_ab(K, pt)[1] == pytest.approx(0.5 / 4 + 1.0, abs=1e-13)


def test_compute_ab_is_constant_along_rays():
    K = nf.NormalFormConstants.random(np.random.default_rng(1))
    base = ConePoint(4.0, 1.2, -0.9)
    ref = nf.compute_ab(K, base)
    for lam in (1.5, 3.0, 10.0):
        got = nf.compute_ab(K, ConePoint(lam * base.t, lam * base.x1, lam * base.x2))
        np.testing.assert_allclose(got, ref, rtol=1e-12)


def test_compute_ab_rejects_outside_points():
    with pytest.raises(geometry.DomainError):
        nf.compute_ab(nf.NormalFormConstants(), ConePoint(2.0, 1.5, 0.0))


def test_transform_trivial_cases():
    pts = geometry.random_cone_points(50, np.random.default_rng(2))
    t, x1, x2 = pts.T
    K = nf.NormalFormConstants.random(np.random.default_rng(3))
    z = np.zeros_like(t)
    assert not np.any(nf.transform(z, z, t, x1, x2, K).w)
    v = 1e-3 * np.cos(x1)
    vt = 1e-3 * np.sin(x2)
    out = nf.transform(v, vt, t, x1, x2, nf.NormalFormConstants())
    assert np.array_equal(out.w, v)
    assert not np.any(out.a) and not np.any(out.b)


def test_transform_near_identity():
    pts = geometry.random_cone_points(200, np.random.default_rng(4), (3.0, 20.0), st_min=0.3)
    t, x1, x2 = pts.T
    K = nf.NormalFormConstants.random(np.random.default_rng(5))
    rng = np.random.default_rng(6)
    v, vt = 1e-3 * rng.normal(size=t.size), 1e-3 * rng.normal(size=t.size)
    out = nf.transform(v, vt, t, x1, x2, K)
    bound = (np.abs(out.a) * np.abs(vt) + np.abs(out.b) * np.abs(v)) * np.abs(v)
    assert np.all(np.abs(out.w - v) <= bound + 4 * np.spacing(np.abs(v)))
    assert out.margin > 0


def test_transform_smallness_gate():
    t, x1, x2 = np.array([4.0]), np.array([0.0]), np.array([0.0])
    K = nf.NormalFormConstants(h0=np.eye(3))
    with pytest.raises(nf.SmallnessError):
        nf.transform(np.array([2.0]), np.array([0.0]), t, x1, x2, K)


def test_residual_second_order_generic_constants():
    K = nf.NormalFormConstants.random(np.random.default_rng(20190625), 0.3)
    r = nf.residual_check(fields.gaussian_trig(amp=1e-2), K)
    assert r["ratio"] == pytest.approx(4.0, abs=1.0)


def test_residual_analytic_is_round_off():
    K = nf.NormalFormConstants.random(np.random.default_rng(7), 0.3)
    pts = geometry.random_cone_points(50, np.random.default_rng(8), (5.0, 9.0), st_min=0.2)
    assert nf.residual_analytic(fields.gaussian_trig(amp=1e-2), K, pts)["rho"] < 1e-12


def test_residual_zero_constants_is_truncation_only():
    v = fields.gaussian_trig(amp=1e-2)
    r = nf.residual_check(v, nf.NormalFormConstants())
    block = nf.NFBlock()
    trunc = []
    for hh in r["h"]:
        calc = GridCalculus(block.t_range, block.x1_range, block.x2_range, hh)
        pts = [q.ravel() for q in calc.coords]
        jc = JetCalculus(*pts, order=3)
        vj = v(jc)
        f = (jc.value(box(jc, vj)) + jc.value(vj)).reshape(calc.t.shape)
        lhs = calc.value(box(calc, v(calc))) + calc.value(v(calc))
        trunc.append(float(np.max(np.abs(lhs - f)[block.inner(calc)])))
    np.testing.assert_allclose(r["residual_inf"], trunc, rtol=1e-9)
    for sub in r["sub_remainders"]:
        assert sub["R1"] == sub["R2"] == sub["R3"] == 0.0


def test_scaled_by_zero_matches_zero_constants_bitwise():
    v = fields.gaussian_trig(amp=1e-2)
    K0 = nf.NormalFormConstants.random(np.random.default_rng(9)).scaled(0.0)
    a = nf.residual_check(v, K0)
    b = nf.residual_check(v, nf.NormalFormConstants())
    assert a["residual_inf"] == b["residual_inf"]


def _sample_fields(rng, n):
    out = []
    for _ in range(n):
        out.append(fields.gaussian_trig(amp=float(rng.uniform(1e-3, 2e-2)),
                                        center=tuple(rng.uniform(-0.5, 0.5, 2)),
                                        width=float(rng.uniform(1.0, 3.0)),
                                        omega=float(rng.uniform(0.5, 1.5)),
                                        phase=float(rng.uniform(0, 6))))
    return out


def _slice_data(tfs, s=3.0, h=0.1):
    samples = [synthetic_sample(tf, None, s, h, order=1) for tf in tfs]
    smp = samples[0]
    v = np.stack([q.u for q in samples])
    dv = np.stack([np.stack(q.values("u")[1:]) for q in samples])
    return v, dv, smp.t, smp.x1, smp.x2, smp.quadrature_weight()


def test_modified_energy_q_zero_is_standard():
    v, dv, t, x1, x2, w = _slice_data(_sample_fields(np.random.default_rng(10), 2))
    rep = nf.modified_energy(np.zeros((2, 2, 2)), 1.0, v, dv, t, x1, x2, w)
    assert rep.ratio == pytest.approx(1.0, abs=1e-13)


def test_modified_energy_zero_fields():
    v, dv, t, x1, x2, w = _slice_data([fields.gaussian_trig(amp=0.0)] * 2)
    Q = np.zeros((2, 2, 2))
    Q[0, 1, 1] = 0.3
    rep = nf.modified_energy(Q, 1.0, v, dv, t, x1, x2, w)
    assert rep.E == 0.0 and rep.ratio == 1.0


def test_modified_energy_equivalence_random_sets():
    rng = np.random.default_rng(11)
    ratios = []
    while len(ratios) < 100:
        N = int(rng.integers(1, 4))
        Q = rng.uniform(-1, 1, (N, N, N))
        Q = 0.5 * (Q + np.swapaxes(Q, 1, 2))
        data = _slice_data(_sample_fields(rng, N), s=float(rng.uniform(2.5, 4.0)), h=0.15)
        if nf.smallness_gate(Q, *data[:1], *data[2:5]) > nf.EPS_SMALL:
            continue
        ratios.append(nf.modified_energy(Q, float(rng.uniform(0.5, 2.0)), *data).ratio)
    assert 0.25 <= min(ratios) and max(ratios) <= 4.0


def test_modified_energy_smallness_rejected():
    v, dv, t, x1, x2, w = _slice_data(_sample_fields(np.random.default_rng(12), 1))
    Q = np.full((1, 1, 1), 1e3)
    with pytest.raises(nf.SmallnessError):
        nf.modified_energy(Q, 1.0, v, dv, t, x1, x2, w)


def test_modified_energy_rejects_asymmetric_q():
    Q = np.zeros((2, 2, 2))
    Q[0, 0, 1] = 1.0
    with pytest.raises(ValueError):
        nf.smallness_gate(Q, np.zeros((2, 1)), np.array([3.0]), np.array([0.0]), np.array([0.0]))


def test_modified_identity_second_order():
    Q = np.zeros((2, 2, 2))
    Q[0, 0, 1] = Q[0, 1, 0] = 0.1
    Q[1, 1, 1] = -0.05
    vs = [fields.gaussian_trig(amp=0.1), fields.gaussian_trig(amp=0.1, center=(-0.3, 0.1), omega=1.1)]
    r = nf.modified_identity_check(vs, Q, 1.0)
    assert 3.0 <= r["ratio"] <= 5.0
    assert r["residual_analytic"] < 1e-10
