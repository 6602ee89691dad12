import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracphi import (
    ComplexOrder,
    Grid,
    GridFunction,
    PhiSpec,
    caputo_derivative,
    caputo_smooth,
    frac_integral,
    gamma_complex,
    integral_weights,
    phi_power_der,
    phi_power_int,
    reciprocal_gamma,
    rl_derivative,
)
from fracphi.errors import GammaPoleError

PHI_T = PhiSpec.from_string("t")
PHI_LOG = PhiSpec.from_string("ln(t + 1.0)")


# --- gamma -------------------------------------------------------------------


def test_gamma_classical_values():
    assert gamma_complex(1.0) == pytest.approx(1.0)
    assert gamma_complex(0.5).real == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_gamma_complex_identity():
    # |Gamma(1+i)|^2 = pi / sinh(pi)
    val = gamma_complex(complex(1, 1))
    assert abs(val) ** 2 == pytest.approx(math.pi / math.sinh(math.pi), rel=1e-13)


def test_gamma_matches_mpmath_up_to_50():
    mpmath.mp.dps = 30
    for z in (0.1, 7.3, 49.5, complex(3, 4), complex(0.2, -12.0), complex(-4.5, 2.0)):
        ref = complex(mpmath.gamma(z))
        assert gamma_complex(z) == pytest.approx(ref, rel=1e-12)


def test_gamma_pole_and_reciprocal():
    with pytest.raises(GammaPoleError):
        gamma_complex(0.0)
    with pytest.raises(GammaPoleError):
        gamma_complex(-3.0)
    assert reciprocal_gamma(-2.0) == 0.0
    assert reciprocal_gamma(2.0) == pytest.approx(1.0)


# --- fractional integral -------------------------------------------------------


def test_integral_of_one_is_t():
    g = Grid.uniform(257, 1.0)
    f = GridFunction(g, np.ones(len(g)))
    out = frac_integral(f, ComplexOrder(1.0), PHI_T)
    assert_allclose(out.values, g.nodes, atol=1e-12)


def test_power_rule_classical():
    # I^lambda t^beta = Gamma(beta+1)/Gamma(lambda+beta+1) t^(lambda+beta);
    # the two-sample rule at node 1 cannot hold linears and half-powers at
    # once, so node 1 carries a small O(h^1.5) error while the rest is exact
    g = Grid.uniform(513, 1.0)
    f = GridFunction(g, g.nodes**1.0)
    out = frac_integral(f, ComplexOrder(0.5), PHI_T)
    ref = math.gamma(2.0) / math.gamma(2.5) * g.nodes**1.5
    err = np.abs(out.values - ref)
    assert np.max(err[2:]) < 1e-12
    assert np.max(err) < 2e-5


def test_power_rule_general_phi():
    g = Grid.uniform(513, 1.0)
    uu = PHI_LOG.sample(g)
    for p in (0.5, 2.0):
        f = GridFunction(g, uu**p)
        out = frac_integral(f, ComplexOrder(0.5), PHI_LOG)
        ref = phi_power_int(0.5, p, PHI_LOG, g)
        tol = 1e-12 if p == 0.5 else 5e-7
        assert np.max(np.abs(out.values - ref.values)) < tol


def test_zero_order_is_identity():
    g = Grid.uniform(65, 1.0)
    f = GridFunction(g, np.sin(g.nodes))
    assert frac_integral(f, ComplexOrder(0.0), PHI_T) is f


def test_rejects_nonpositive_order():
    g = Grid.uniform(65, 1.0)
    with pytest.raises(ValueError):
        integral_weights(0.0, g, PHI_T)      # exact zero order has no weights
    with pytest.raises(ValueError):
        ComplexOrder(-0.5)                   # negative orders cannot be built


def test_weights_lower_triangular_row0_zero():
    g = Grid.uniform(33, 1.0)
    for phi in (PHI_T, PHI_LOG):
        W = integral_weights(ComplexOrder(0.7), g, phi).matrix
        assert np.all(W[0] == 0.0)
        assert np.allclose(W, np.tril(W))


def test_integral_vanishes_at_origin_exactly():
    g = Grid.uniform(129, 1.0)
    rng = np.random.default_rng(7)
    f = GridFunction(g, rng.normal(size=len(g)))
    out = frac_integral(f, ComplexOrder(0.6), PHI_LOG)
    assert out.values[0] == 0.0


def test_linearity_exact():
    g = Grid.uniform(129, 1.0)
    rng = np.random.default_rng(3)
    fa, fb = rng.normal(size=len(g)), rng.normal(size=len(g))
    W = integral_weights(ComplexOrder(0.8), g, PHI_T)
    lhs = W.apply(2.0 * fa - 3.0 * fb)
    rhs = 2.0 * W.apply(fa) - 3.0 * W.apply(fb)
    assert_allclose(lhs, rhs, rtol=0, atol=1e-13)


def test_complex_path_matches_real_path():
    g = Grid.uniform(257, 1.0)
    f = GridFunction(g, np.cos(g.nodes))
    real = integral_weights(ComplexOrder(0.8), g, PHI_LOG).apply(f.values)
    forced = integral_weights(ComplexOrder(0.8), g, PHI_LOG, force_complex=True).apply(f.values)
    assert np.max(np.abs(real - forced)) < 1e-13
    assert np.max(np.abs(forced.imag)) < 1e-13


def test_semigroup_under_refinement():
    errs = []
    for n in (257, 513):
        g = Grid.uniform(n, 1.0)
        f = GridFunction(g, np.cos(g.nodes))
        mid = frac_integral(f, ComplexOrder(0.6), PHI_T)
        lhs = frac_integral(mid, ComplexOrder(0.7), PHI_T, singular_powers=(0.6, 1.6))
        rhs = frac_integral(f, ComplexOrder(1.3), PHI_T)
        errs.append(np.max(np.abs(lhs.values - rhs.values)))
    assert errs[1] < errs[0] / 3.0  # ~O(N^-2)
    assert errs[1] < 1e-6


# --- derivatives ---------------------------------------------------------------


def test_rl_derivative_power_rule():
    g = Grid.uniform(1025, 1.0)
    for phi in (PHI_T, PHI_LOG):
        uu = phi.sample(g) - phi.sample(g)[0]
        f = GridFunction(g, uu**1.7)
        out = rl_derivative(f, ComplexOrder(0.7), phi, singular_powers=[1.7])
        ref = phi_power_der(0.7, 1.7, phi, g)
        assert np.max(np.abs(out.values - ref.values)) < 1e-8


def test_rl_inverts_integral():
    g = Grid.uniform(1025, 1.0)
    f = GridFunction(g, np.cos(g.nodes))
    for a in (ComplexOrder(0.4), ComplexOrder(1.3), ComplexOrder(0.8, 0.2)):
        out = rl_derivative(frac_integral(f, a, PHI_LOG), a, PHI_LOG)
        assert np.max(np.abs(out.values - f.values)) < 2e-6


def test_composition_reduction():
    # D^beta I^alpha = I^(alpha-beta) for Re(alpha) > Re(beta) > 0
    g = Grid.uniform(1025, 1.0)
    f = GridFunction(g, np.exp(-g.nodes))
    mid = frac_integral(f, ComplexOrder(1.3), PHI_T)
    out = rl_derivative(mid, ComplexOrder(0.5), PHI_T, singular_powers=[1.3, 2.3])
    ref = frac_integral(f, ComplexOrder(0.8), PHI_T)
    assert np.max(np.abs(out.values - ref.values)) < 2e-5


def test_caputo_of_constant_is_zero():
    g = Grid.uniform(257, 1.0)
    f = GridFunction(g, np.full(len(g), 3.7))
    for a in (ComplexOrder(0.3), ComplexOrder(1.0)):
        out = caputo_derivative(f, a, PHI_T, init=[3.7])
        assert np.max(np.abs(out.values)) < 1e-12


def test_caputo_equals_rl_for_zero_init():
    g = Grid.uniform(257, 1.0)
    uu = g.nodes
    f = GridFunction(g, uu**2.5)
    cd = caputo_derivative(f, ComplexOrder(0.6), PHI_T, init=[0.0])
    rd = rl_derivative(f, ComplexOrder(0.6), PHI_T)
    assert np.max(np.abs(cd.values - rd.values)) < 1e-12


def test_caputo_inversion_with_data():
    # I^alpha CD^alpha f = f - quasi-Taylor part (Theorem-style identity)
    g = Grid.uniform(1025, 1.0)
    f = GridFunction(g, np.cos(g.nodes))
    for a, init in ((ComplexOrder(0.6), [1.0]), (ComplexOrder(1.5), [1.0, 0.0])):
        cd = caputo_derivative(f, a, PHI_T, init=init)
        back = frac_integral(cd, a, PHI_T)
        taylor = sum(
            c / math.factorial(j) * g.nodes**j for j, c in enumerate(init)
        )
        assert np.max(np.abs(back.values - (f.values - taylor))) < 1e-5


def test_caputo_smooth_power_rule():
    # CD^0.5 of t^2 = Gamma(3)/Gamma(2.5) t^1.5 (zero low-order data)
    g = Grid.uniform(1025, 1.0)
    f = GridFunction(g, g.nodes**2)
    out = caputo_smooth(f, ComplexOrder(0.5), PHI_T)
    ref = math.gamma(3.0) / math.gamma(2.5) * g.nodes**1.5
    assert np.max(np.abs(out.values - ref)) < 1e-5


def test_caputo_smooth_of_constant_is_zero():
    g = Grid.uniform(129, 1.0)
    f = GridFunction(g, np.ones(len(g)))
    out = caputo_smooth(f, ComplexOrder(0.5), PHI_LOG)
    assert np.max(np.abs(out.values)) < 1e-12


def test_caputo_smooth_agrees_with_modified():
    g = Grid.uniform(2049, 1.0)
    f = GridFunction(g, np.cos(2 * g.nodes) + g.nodes**2)
    for phi in (PHI_T, PHI_LOG):
        a = ComplexOrder(0.6)
        sm = caputo_smooth(f, a, phi)
        mod = caputo_derivative(f, a, phi)
        assert np.max(np.abs(sm.values - mod.values)) < 1e-5


def test_rl_composition_on_zero_start_function():
    # I^alpha D^alpha f = f when the lower boundary terms vanish (f(0) = 0)
    g = Grid.uniform(1025, 1.0)
    f = GridFunction(g, np.sin(g.nodes))
    a = ComplexOrder(0.6)
    deriv = rl_derivative(f, a, PHI_T, singular_powers=[1.0, 3.0])
    out = frac_integral(deriv, a, PHI_T, singular_powers=[0.4, 1.0, 0.5])
    assert np.max(np.abs(out.values - f.values)) < 5e-6


# --- analytic power rules --------------------------------------------------------


def test_phi_power_int_values():
    g = Grid.uniform(33, 1.0)
    out = phi_power_int(1.0, 0.0, PHI_T, g)
    assert_allclose(out.values, g.nodes, rtol=0, atol=1e-15)
    out = phi_power_int(0.5, 1.0, PHI_T, g)
    ref = math.gamma(2.0) / math.gamma(2.5) * g.nodes**1.5
    assert_allclose(out.values, ref, rtol=1e-13, atol=1e-15)


def test_phi_power_der_reciprocal_gamma_zero():
    # derivative kills low powers exactly: D^2 (phi - phi0)^1 = 0
    g = Grid.uniform(33, 1.0)
    out = phi_power_der(2.0, 1.0, PHI_T, g)
    assert np.all(out.values == 0.0)
    out = phi_power_der(2.5, 1.5, PHI_LOG, g)   # 1/Gamma(0) = 0 again
    assert np.all(out.values == 0.0)


def test_phi_power_der_complex_exponent():
    g = Grid.uniform(33, 1.0)
    a = ComplexOrder(0.5, 0.2)
    out = phi_power_der(a, 2.0, PHI_T, g)
    coef = gamma_complex(3.0) * reciprocal_gamma(3.0 - a.value)
    ref = coef * g.nodes[1:] ** (2.0 - a.value)
    assert_allclose(out.values[1:], ref, rtol=1e-12)
    assert out.values[0] == 0.0
