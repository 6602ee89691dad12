import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracphi import (
    CaseTag,
    ComplexOrder,
    FDEProblem,
    Grid,
    GridFunction,
    PhiSpec,
    classify_case,
    validate_problem,
)


def problem(betas, coeffs, rhs, init, phi="t", T=1.0):
    return FDEProblem.from_strings(betas, coeffs, rhs, init, phi, T)


def test_complex_order_invariants():
    assert ComplexOrder(1.5).n == 2
    assert ComplexOrder(1.0).n == 1
    assert ComplexOrder(2.0).n == 2
    assert ComplexOrder(0.0).n == 0
    assert ComplexOrder(1.0, 0.5).n == 2     # integer real part but complex
    assert ComplexOrder(0.8, 0.1).n == 1
    with pytest.raises(ValueError):
        ComplexOrder(-0.5)
    with pytest.raises(ValueError):
        ComplexOrder(0.0, 0.3)               # zero order must be exactly 0


def test_grid_invariants():
    g = Grid.uniform(129, 2.0)
    assert g.nodes[0] == 0.0 and g.T == 2.0 and len(g) == 129
    with pytest.raises(ValueError):
        Grid(np.array([0.1, 0.5, 1.0]))      # must start at 0
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 0.5, 0.5]))      # strictly increasing


def test_grid_function_shape_checked():
    g = Grid.uniform(9, 1.0)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(5))
    f = GridFunction(g, np.ones(9))
    assert f.sup_norm() == 1.0


def test_validate_all_hypotheses_hold():
    p = problem([1.5, 0.5, 0.0], ["1", "1"], "t", [0.0, 0.0])
    g = Grid.uniform(65, 1.0)
    assert validate_problem(p, g) == []


def test_validate_flags_nonmonotone_orders():
    p = problem([0.5, 0.8], ["1"], "t", [0.0])
    findings = validate_problem(p, Grid.uniform(65, 1.0))
    assert any("not strictly decreasing" in f.message for f in findings)


def test_validate_flags_negative_phi_prime():
    p = problem([0.5], [], "t", [0.0], phi="-t")
    findings = validate_problem(p, Grid.uniform(65, 1.0))
    assert any("phi' <= 0" in f.message for f in findings)


def test_validate_collects_everything_at_once():
    p = problem([0.5, 0.8], ["1", "1"], "1/(t - 0.5)", [0.0, 0.0], phi="-t")
    findings = validate_problem(p, Grid.uniform(65, 1.0))
    fields = {f.field for f in findings}
    assert {"beta", "init", "coeffs", "phi"} <= fields


def test_validate_init_length_and_horizon():
    p = problem([1.5, 0.5], ["1"], "t", [0.0])          # needs n0 = 2 values
    findings = validate_problem(p, Grid.uniform(65, 1.0))
    assert any(f.field == "init" for f in findings)
    p2 = problem([0.5], [], "t", [0.0], T=2.0)
    findings = validate_problem(p2, Grid.uniform(65, 1.0))
    assert any(f.field == "T" for f in findings)


def test_classify_beta_m_zero():
    p = problem([1.5, 0.5, 0.0], ["1", "1"], "t", [0.0, 0.0])
    cls = classify_case(p)
    assert cls.n == (2, 1, 0)
    assert cls.Kj == (frozenset({2}), frozenset({1, 2}))
    assert cls.kappa == (2, 1)
    assert cls.case_tag is CaseTag.BETA_M_ZERO_N0_GT_N1


def test_classify_all_empty():
    p = problem([0.75, 0.25], ["1"], "t", [0.0])
    cls = classify_case(p)
    assert cls.n == (1, 1)
    assert cls.Kj == (frozenset(),)
    assert cls.case_tag is CaseTag.ALL_EMPTY


def test_classify_gap():
    p = problem([2.5, 1.5], ["1"], "t", [0.0, 0.0, 0.0])
    cls = classify_case(p)
    assert cls.n == (3, 2)
    assert cls.Kj == (frozenset(), frozenset(), frozenset({1}))
    assert cls.j0 == 1
    assert cls.case_tag is CaseTag.GAP_N0_GT_N1


def test_classify_gap_equal_n():
    # n0 = n1 = 2 with K_0 empty: Re(beta_1) in (0, 1] fails, so take 1.2
    p = problem([1.8, 1.2, 1.0], ["1", "1"], "t", [0.0, 0.0])
    cls = classify_case(p)
    assert cls.case_tag is CaseTag.GAP_N0_EQ_N1
    assert cls.j0 == 0


def test_classify_integer_order_pair():
    p = problem([1.0, 0.0], ["1"], "1", [0.0])
    cls = classify_case(p)
    assert cls.n == (1, 0)
    assert cls.kappa == (1,)
    assert cls.case_tag is CaseTag.BETA_M_ZERO_N0_GT_N1


def test_classify_is_pure_in_coefficients():
    p1 = problem([1.5, 0.5, 0.0], ["1", "1"], "t", [0.0, 0.0])
    p2 = dataclasses.replace(p1, coeffs=problem([1.5, 0.5, 0.0], ["sin(t)", "exp(t)"], "1", [0.0, 0.0]).coeffs)
    assert classify_case(p1) == classify_case(p2)


_order_lists = st.lists(
    st.floats(min_value=0.05, max_value=4.0), min_size=2, max_size=5, unique=True
).map(lambda v: sorted(v, reverse=True))


@settings(max_examples=120, deadline=None)
@given(_order_lists, st.booleans())
def test_kj_monotone_and_tag_unique(res, zero_tail):
    betas = [ComplexOrder(r) for r in res]
    if zero_tail:
        betas.append(ComplexOrder(0.0))
    m = len(betas) - 1
    p = FDEProblem.from_strings(
        [(b.re, b.im) for b in betas], ["1"] * m, "t",
        [0.0] * betas[0].n, "t", 1.0,
    )
    cls = classify_case(p)
    for j1 in range(len(cls.Kj) - 1):
        assert cls.Kj[j1] <= cls.Kj[j1 + 1]
    if zero_tail:
        assert all(k for k in cls.Kj)  # beta_m = 0 makes every K_j nonempty
        assert cls.case_tag in (CaseTag.BETA_M_ZERO_N0_GT_N1, CaseTag.BETA_M_ZERO_N0_EQ_N1)
    assert isinstance(cls.case_tag, CaseTag)


def test_phi_spec_identity_detection():
    assert PhiSpec.from_string("t").is_identity
    assert not PhiSpec.from_string("ln(t + 1.0)").is_identity
