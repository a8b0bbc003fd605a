import numpy as np
import pytest

from hyperwkg import structure as st
from hyperwkg.geometry import MINKOWSKI, ConePoint
from hyperwkg.structure import CoefficientSet, MultilinearForm, is_null


def dense_oracle(comp, n=1000, tol=1e-10):
    theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
    p = st.evaluate_form(comp, st.cone_direction(theta))
    return bool(np.max(np.abs(p)) <= tol * max(np.max(np.abs(comp)), 1e-300))


def cubic_null():
    Q = np.zeros((3, 3, 3))
    Q[0, 0, 0] = 1.0
    for a in (1, 2):
        for idx in ((0, a, a), (a, 0, a), (a, a, 0)):
            Q[idx] = -1.0 / 3.0
    return Q


def test_minkowski_is_null():
    assert is_null(MultilinearForm(MINKOWSKI)).null


def test_single_component_not_null_with_witness():
    A = np.zeros((3, 3))
    A[0, 0] = 1.0
    v = is_null(MultilinearForm(A))
    assert not v.null
    assert v.witness_theta == 0.0
    assert v.max_abs == pytest.approx(1.0)


def test_cubic_null_form():
    assert is_null(MultilinearForm(cubic_null())).null


def test_nonsymmetric_input_rejected():
    A = np.zeros((3, 3))
    A[0, 1] = 1.0
    with pytest.raises(st.UsageError):
        MultilinearForm(A)
    assert not is_null(MultilinearForm.symmetric(A)).null


def test_symmetrize_idempotent():
    T = np.random.default_rng(0).normal(size=(3, 3, 3))
    S = st.symmetrize(T)
    np.testing.assert_allclose(st.symmetrize(S), S, atol=1e-15)


@pytest.mark.parametrize("rank", [2, 3])
def test_is_null_matches_dense_oracle(rank):
    rng = np.random.default_rng(10 + rank)
    for k in range(200):
        if k < 50:
            if rank == 2:
                comp = rng.normal() * MINKOWSKI
            else:
                ell = rng.normal(size=3)
                comp = st.symmetrize(np.einsum("a,bc->abc", ell, MINKOWSKI))
        else:
            comp = st.symmetrize(rng.normal(size=(3,) * rank))
        verdict = is_null(MultilinearForm(comp))
        assert verdict.null == dense_oracle(comp)
        if k < 50:
            assert verdict.null


def test_is_null_scale_invariant_and_witness_maximises():
    rng = np.random.default_rng(5)
    for _ in range(20):
        comp = st.symmetrize(rng.normal(size=(3, 3, 3)))
        v1 = is_null(MultilinearForm(comp))
        v2 = is_null(MultilinearForm(7.5 * comp))
        assert v1.null == v2.null and v1.witness_theta == v2.witness_theta
        n = 2 * 3 + 1
        p = MultilinearForm(comp).on_cone(2 * np.pi * np.arange(n) / n)
        assert v1.max_abs == pytest.approx(np.max(np.abs(p)))


def test_classify_coupling_examples():
    assert st.classify_coupling(CoefficientSet()) == "weak"
    assert st.classify_coupling(CoefficientSet(B2=[0.0, 0.0, 1.0])) == "strong"
    rep = st.theorem1_admissible(CoefficientSet(K1=1.0))
    assert rep.coupling == "strong"
    assert rep.coupling_literal == "weak"
    assert rep.notes and "K1" in rep.notes[0]


def test_classify_coupling_ignores_other_coefficients():
    rng = np.random.default_rng(6)
    for _ in range(20):
        entries = {}
        for name, rank in st.RANKS.items():
            if name in st.STRONG:
                continue
            entries[name] = rng.normal(size=(3,) * rank) if rank else float(rng.normal())
        assert st.classify_coupling(CoefficientSet(**entries)) == "weak"
        assert st.classify_coupling(CoefficientSet(B1=np.eye(3), **entries)) == "strong"


def test_admissibility_examples():
    assert st.theorem1_admissible(CoefficientSet()).theorem1_admissible
    rep = st.theorem1_admissible(CoefficientSet(P1=cubic_null()))
    assert rep.theorem1_admissible
    A5 = np.zeros((3, 3))
    A5[0, 0] = 1.0
    rep = st.theorem1_admissible(CoefficientSet(A5=A5))
    assert not rep.theorem1_admissible
    assert any(v.startswith("A5 not null") for v in rep.violations)
    assert rep.null_status["A5"].witness_theta == 0.0


def test_boxed_terms_flagged():
    rep = st.theorem1_admissible(CoefficientSet(D1=0.5))
    assert not rep.theorem1_admissible
    assert "D1 nonzero" in rep.flags


def test_admissible_report_implies_all_null():
    rng = np.random.default_rng(8)
    for _ in range(30):
        P1 = cubic_null() * rng.normal() if rng.random() < 0.5 else st.symmetrize(rng.normal(size=(3, 3, 3)))
        A1 = MINKOWSKI * rng.normal() if rng.random() < 0.5 else st.symmetrize(rng.normal(size=(3, 3)))
        rep = st.theorem1_admissible(CoefficientSet(P1=P1, A1=A1)).to_dict()
        if rep["theorem1_admissible"]:
            assert all(v["null"] for v in rep["null_status"].values())


def test_parse_coefficients_grammar():
    co = st.parse_coefficients("[coefficients]\nP1.000 = 1.0\nB2.2 = -0.5  # comment\nK2 = 3\nc = 2\n")
    assert co.P1[0, 0, 0] == 1.0
    assert co.B2[2] == -0.5
    assert co.K2 == 3.0 and co.c == 2.0


@pytest.mark.parametrize("text,line,col", [
    ("P1.00 = 1", 1, 1),
    ("P1.000 = x", 1, 10),
    ("\nQ9.0 = 1", 2, 1),
    ("junk", 1, 1),
])
def test_parse_errors_carry_position(text, line, col):
    with pytest.raises(st.CoefficientError) as err:
        st.parse_coefficients(text)
    assert (err.value.line, err.value.col) == (line, col)


def test_semi_frame_coefficient_examples():
    c = 1.7
    for pt in (ConePoint(5.0, 3.0, 0.0), ConePoint(9.0, -2.0, 4.0)):
        B = st.semi_frame_coefficient({"B": [3 * c * c, 0.0, 0.0]}, "B", pt)
        assert B[0] == pytest.approx(3 * c * c, abs=1e-14)
    P2 = st.semi_frame_coefficient(CoefficientSet(P2=MINKOWSKI), "P2", ConePoint(5.0, 3.0, 0.0))
    assert P2[0, 0] == pytest.approx(0.64, abs=1e-15)
    assert not np.any(st.semi_frame_coefficient(CoefficientSet(), "A1", ConePoint(5.0, 3.0, 0.0)))
