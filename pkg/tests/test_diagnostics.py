import math

import numpy as np
import pytest

from hyperwkg import diagnostics as diag
from hyperwkg.diagnostics import series as ser
from hyperwkg.diagnostics import tower
from hyperwkg.verify import fields
from hyperwkg.verify.fields import TestField
from hyperwkg.verify.monitors import synthetic_sample

# int over H*_2 of e_1[w] for w = t (1 - r^2)^4 (r < 1), computed symbolically offline
BUMP_ENERGY_H2 = 3257 * math.pi / 630


def _bump(calc):
    t, x1, x2 = calc.coords
    return t * (1.0 - x1 * x1 - x2 * x2) ** 4


def bump_sample(s, h, order=1):
    smp = synthetic_sample(TestField("bump", _bump), None, s, h, order=order)
    outside = np.hypot(smp.x1, smp.x2) >= 1.0
    smp.du[:, outside] = 0.0
    return smp


def test_zero_field_energies():
    smp = synthetic_sample(None, None, 3.0, 0.1)
    assert diag.energy_standard(smp, 1.0, "u") == 0.0
    assert diag.energy_conformal(smp, "v")[0] == 0.0
    assert diag.weighted_l2(smp) == 0.0


def test_standard_energy_matches_symbolic_integral():
    smp = bump_sample(2.0, 1 / 32)
    E = diag.energy_standard(smp, 1.0, "u")
    assert abs(E - BUMP_ENERGY_H2) / BUMP_ENERGY_H2 < 1e-4


def test_conformal_energy_of_constant_is_area():
    one = TestField("one", lambda calc: calc.coords[0] * 0.0 + 1.0)
    smp = synthetic_sample(one, None, 3.0, 0.1)
    val, kw = diag.energy_conformal(smp, "u")
    assert val == pytest.approx(smp.npts * 0.01, rel=1e-14)
    assert np.all(kw == 1.0)


def test_fcon_closed_forms():
    s = np.linspace(2.0, 4.0, 2001)
    F = diag.fcon_accumulate(s, np.ones_like(s), 0.0)
    assert F[-1] == pytest.approx(1 + math.log(2), abs=1e-7)
    delta = 0.01
    F = diag.fcon_accumulate(s, s ** (2 * delta), 0.25)
    exact = 0.25 + s ** delta + (s ** delta - 2.0 ** delta) / delta
    np.testing.assert_allclose(F, exact, rtol=1e-7)
    with pytest.raises(ValueError):
        diag.fcon_accumulate(s, np.full_like(s, np.nan), 0.0)


def test_sobolev_ratio_scale_invariant_and_refinement_stable():
    g = fields.gaussian_trig(width=1.0)
    big = fields.gaussian_trig(width=1.0, amp=10.0)
    ratios = {}
    for h in (0.2, 0.1):
        ratios[h] = ser.sobolev_ratio(tower.summarize(synthetic_sample(g, None, 3.0, h, order=3), "u", 0.0))
    scaled = ser.sobolev_ratio(tower.summarize(synthetic_sample(big, None, 3.0, 0.1, order=3), "u", 0.0))
    assert scaled["ratio"] == pytest.approx(ratios[0.1]["ratio"], rel=1e-12)
    assert abs(ratios[0.2]["ratio"] / ratios[0.1]["ratio"] - 1) < 0.1
    zero = tower.summarize(synthetic_sample(None, None, 3.0, 0.2, order=3), "u", 0.0)
    assert ser.sobolev_ratio(zero)["ratio"] == 0.0


def test_tower_definitions_and_order_zero_energy():
    smp = synthetic_sample(fields.mixed(), fields.gaussian_trig(), 3.0, 0.2, order=3)
    tw = tower.build_tower(smp, "u", 2)
    assert tw.check_definitions() < 1e-12
    summ = tower.summarize(smp, "v", 1.3, 2)
    assert summ.cumulative(0) == pytest.approx(diag.energy_standard(smp, 1.3, "v"), rel=1e-12)
    assert len(tower.tower_words(2)) == 21
    with pytest.raises(ValueError):
        tower.build_tower(synthetic_sample(fields.mixed(), None, 3.0, 0.2, order=2), "u", 2)


def test_fit_recovers_exponents():
    t = np.geomspace(2.0, 40.0, 30)
    lam = 0.5
    y = 2.0 * (1 + np.abs(t - lam * t)) ** -0.5 * t ** -0.5
    res = diag.fit_decay(t, y, "two-factor", lam=lam)
    assert res.exponents["a"] == pytest.approx(-0.5, abs=0.02)
    assert res.exponents["b"] == pytest.approx(-0.5, abs=0.02)
    res = diag.fit_decay(t, 3.0 / t, "interior")
    assert res.exponents["b"] == pytest.approx(-1.0, abs=0.01)


def test_fit_uses_envelope_for_oscillating_series():
    t = np.linspace(2.0, 60.0, 4000)
    res = diag.fit_decay(t, np.cos(2 * t) / t, "power")
    assert res.envelope
    assert res.exponents["b"] == pytest.approx(-1.0, abs=0.02)


def test_fit_errors():
    with pytest.raises(diag.FitError):
        diag.fit_decay(np.arange(2.0, 9.0), np.ones(7))
    with pytest.raises(diag.FitError):
        diag.fit_decay(np.geomspace(2, 40, 20), np.ones(20), "cubic")


def _series(values, s=None):
    s = np.linspace(2.0, 6.0, len(values)) if s is None else s
    out = ser.EnergySeries()
    for si, v in zip(s, values):
        out.append(ser.EnergyRecord(s=si, E_u=[v], E_v=[v], E_con=v, l2_st_u=0.0, grad_weighted_u=0.0))
    return out


def test_bootstrap_zero_series_has_infinite_margin():
    s = np.linspace(2, 6, 5)
    z = np.zeros_like(s)
    v = ser.bootstrap_monitor(s, z, z, z, 0.01, 1.0)
    assert v.passed and all(m == math.inf for m in v.margins.values())


def test_bootstrap_injected_violation():
    s = np.linspace(2, 6, 9)
    delta, budget = 0.01, 1.0
    grown = (1.01 * budget * s ** delta) ** 2
    v = ser.bootstrap_monitor(s, grown, np.zeros_like(s), np.zeros_like(s), delta, budget)
    assert not v.passed
    assert v.first_violation_s == 2.0 and v.which == "high"
    ok = ser.bootstrap_monitor(s, (0.99 * s ** delta) ** 2, np.full_like(s, 0.5), np.zeros_like(s), delta,
                               {"high": 1.0, "low": 1.0, "conformal": 1.0})
    assert ok.passed


def test_series_csv_layout_and_round_trip():
    sr = _series([1.0, 2.0, 3.0])
    text = sr.to_csv()
    assert text.splitlines()[0].split(",") == list(ser.CSV_COLUMNS)
    cols = diag.read_csv(text)
    np.testing.assert_array_equal(cols["s"], [2.0, 4.0, 6.0])
    np.testing.assert_array_equal(cols["E_con"], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        sr.append(ser.EnergyRecord(s=1.0, E_u=[0.0], E_v=[0.0], E_con=0.0, l2_st_u=0.0, grad_weighted_u=0.0))


def test_relative_drift():
    assert diag.relative_drift([2.0, 2.02, 1.99]) == pytest.approx(0.015)
    assert diag.relative_drift([0.0, 0.0]) == 0.0
