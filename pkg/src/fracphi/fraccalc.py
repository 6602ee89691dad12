"""Discretized fractional integro-differential operators with respect to phi.

The fractional integral of order alpha (Re > 0) with respect to phi,

    (I f)(x) = 1/Gamma(alpha) * integral_0^x phi'(s) (phi(x)-phi(s))^(alpha-1) f(s) ds,

is discretized by product integration in the coordinate u = phi(s): f is
interpolated piecewise linearly in u and the power kernel is integrated in
closed form on every cell, so the weak singularity costs no accuracy order.
On top of that, each weight row is corrected (still a fixed linear rule) to
integrate (phi(t)-phi(0))^(1/2) exactly; without the correction the plain
product-trapezoidal rule loses an accuracy order near t = 0 on half-power
integrands, which the power-rule suite exercises.

Derivatives follow the composition definitions: the Riemann-Liouville form
applies (1/phi' d/dt)^n to I^(n-alpha) discretely; the modified (Caputo-type)
form first removes the quasi-Taylor polynomial in (phi(t)-phi(0)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as sps

from . import expr as ex
from .core import ComplexOrder, Grid, GridFunction, PhiSpec
from .errors import GammaPoleError

__all__ = [
    "gamma_complex",
    "reciprocal_gamma",
    "log_gamma",
    "OperatorWeights",
    "integral_weights",
    "frac_integral",
    "rl_derivative",
    "caputo_derivative",
    "caputo_smooth",
    "phi_power_int",
    "phi_power_der",
    "phi_derivative",
]


def _is_nonpositive_integer(z: complex) -> bool:
    z = complex(z)
    return z.imag == 0 and z.real <= 0 and float(z.real).is_integer()


def gamma_complex(z) -> complex:
    """Gamma for complex argument; raises at the poles."""
    if _is_nonpositive_integer(z):
        raise GammaPoleError(f"gamma pole at {z}")
    return complex(sps.gamma(complex(z)))


def reciprocal_gamma(z) -> complex:
    """1/Gamma, entire: exactly zero at non-positive integers."""
    if _is_nonpositive_integer(z):
        return 0.0 + 0.0j
    return complex(sps.rgamma(complex(z)))


def log_gamma(z) -> complex:
    """Principal branch of log Gamma."""
    if _is_nonpositive_integer(z):
        raise GammaPoleError(f"gamma pole at {z}")
    return complex(sps.loggamma(complex(z)))


# ---------------------------------------------------------------------------
# operator weights


@dataclass(frozen=True)
class OperatorWeights:
    """Lower-triangular quadrature weights for I^(alpha,phi) on a fixed grid.

    Row k holds the weights over source nodes 0..k; row 0 is identically zero
    because the integral from 0 to 0 vanishes.
    """

    order: ComplexOrder
    grid: Grid
    phi: PhiSpec
    matrix: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(values)

    def apply_gf(self, f: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.apply(f.values))


def _pow_positive(base: np.ndarray, exponent, *, zero_mask=None) -> np.ndarray:
    """base**exponent for base >= 0 real, principal branch, with 0**e := 0."""
    out = base ** exponent if not isinstance(exponent, complex) else np.exp(
        exponent * np.log(np.where(base > 0, base, 1.0))
    ) * (base > 0)
    if zero_mask is not None:
        out = np.where(zero_mask, 0.0, out)
    return out


def integral_weights(
    alpha,
    grid: Grid,
    phi: PhiSpec,
    *,
    singular_powers=(0.5,),
    force_complex: bool = False,
) -> OperatorWeights:
    """Build the product-integration weight matrix for I^(alpha,phi).

    ``singular_powers`` lists exponents p for which the rule is corrected to
    integrate (phi(t)-phi(0))**p exactly (in priority order, ahead of the
    built-in linear exactness); callers that know the singular behaviour of
    their integrands (e.g. residual substitution, where the solution behaves
    like (phi-phi0)**beta0 near 0) pass those exponents here.
    """
    alpha = ComplexOrder.coerce(alpha)
    if alpha.re <= 0:
        raise ValueError(f"integral order must have positive real part, got {alpha}")
    u = phi.sample(grid)
    if not np.all(np.diff(u) > 0):
        raise ValueError("phi must be strictly increasing on the grid")

    powers = _clean_powers(singular_powers)
    real_path = alpha.is_real and not force_complex and all(p.imag == 0 for p in powers)
    mu = alpha.re if real_path else complex(alpha.re, alpha.im)
    dtype = np.float64 if real_path else np.complex128
    n = len(u)
    W = np.zeros((n, n), dtype=dtype)

    du = np.diff(u)
    uniform = np.max(np.abs(du - du[0])) <= 1e-12 * du[0]
    if uniform:
        _fill_uniform(W, n, du[0], mu)
    else:
        _fill_general(W, u, mu)

    if powers:
        _apply_power_corrections(W, u, mu, powers)

    W *= np.complex128(sps.rgamma(complex(mu))) if not real_path else sps.rgamma(mu)
    W.flags.writeable = False
    return OperatorWeights(order=alpha, grid=grid, phi=phi, matrix=W)


def _clean_powers(singular_powers) -> list:
    """Deduplicated exponents in caller priority order.

    1.0 may appear as a priority marker (it decides where the built-in linear
    exactness ranks); near-duplicates are dropped because exponents closer
    than 1e-6 would make the correction system ill-conditioned without adding
    accuracy.
    """
    powers = []
    for p in singular_powers or ():
        p = complex(p)
        if p.real <= 0:
            continue
        if any(abs(p - q) < 1e-6 for q in powers):
            continue
        powers.append(p)
    return powers


def _fill_uniform(W: np.ndarray, n: int, delta: float, mu) -> None:
    # Weights depend only on the node distance d = k - j; one set of cell
    # moments serves every row.
    d = np.arange(n, dtype=float)
    P = _pow_positive(d * delta, mu)
    P1 = P * (d * delta)
    M0 = (P[1:] - P[:-1]) / mu
    M1 = (np.arange(1, n) * delta) * M0 - (P1[1:] - P1[:-1]) / (mu + 1)
    WB = M1 / delta
    WA = M0 - WB
    for k in range(1, n):
        W[k, :k] = WA[k - 1 :: -1]
        W[k, 1 : k + 1] += WB[k - 1 :: -1]


def _fill_general(W: np.ndarray, u: np.ndarray, mu) -> None:
    n = len(u)
    duj = np.diff(u)
    for k in range(1, n):
        v = u[k] - u[: k + 1]
        pv = _pow_positive(v, mu, zero_mask=(v == 0))
        pv1 = pv * v
        a = v[:-1]
        M0 = (pv[:-1] - pv[1:]) / mu
        M1 = a * M0 - (pv1[:-1] - pv1[1:]) / (mu + 1)
        WB = M1 / duj[:k]
        W[k, :k] = M0 - WB
        W[k, 1 : k + 1] += WB


def _apply_power_corrections(W: np.ndarray, u: np.ndarray, mu, powers: list) -> None:
    # Correct row k on its first min(k+1, 2+len(powers)) columns so the rule
    # is exact on 1, then the leading power, then u, then the rest (in that
    # priority); product integration is already exact on {1, u}, so the
    # correction is a small perturbation that transfers exactness to the
    # singular powers.  Everything here is in pre-1/Gamma units (targets
    # carry a Gamma(mu)).
    n = len(u)
    uu = u - u[0]
    cplx = np.iscomplexobj(W)

    exponents = [0.0] + list(powers)
    if not any(abs(p - 1) < 1e-6 for p in powers):
        exponents.append(1.0)
    samples = []
    exact = []
    for p in exponents:
        p = complex(p)
        fs = _pow_positive(uu, p, zero_mask=(uu == 0)) if p != 0 else np.ones_like(uu)
        coef = complex(
            sps.gamma(complex(mu)) * sps.gamma(p + 1) * sps.rgamma(complex(mu) + p + 1)
        )
        ex = coef * _pow_positive(uu, complex(mu) + p, zero_mask=(uu == 0))
        if not cplx:
            fs, ex = fs.real, ex.real
        samples.append(fs)
        exact.append(ex)
    samples = np.array(samples)          # (q, n)
    exact = np.array(exact)              # (q, n)
    applied = W @ samples.T              # (n, q)

    q_full = len(exponents)
    for k in range(1, n):
        q = min(k + 1, q_full)
        A = samples[:q, :q]
        rhs = exact[:q, k] - applied[k, :q]
        # scale columns for conditioning: entries span many magnitudes of u
        scale = np.max(np.abs(A), axis=0)
        delta = np.linalg.solve(A / scale[None, :], rhs)
        W[k, :q] += delta / scale


# ---------------------------------------------------------------------------
# operators


def frac_integral(f: GridFunction, alpha, phi: PhiSpec, *, singular_powers=(0.5,)) -> GridFunction:
    """I^(alpha,phi) f by product integration; order 0 is the identity."""
    alpha = ComplexOrder.coerce(alpha)
    if alpha.is_zero:
        return f
    return integral_weights(alpha, f.grid, phi, singular_powers=singular_powers).apply_gf(f)


def _fd_weights(x: np.ndarray, x0: float, m: int) -> np.ndarray:
    """Fornberg weights for the m-th derivative at x0 from nodes x."""
    n = len(x)
    C = np.zeros((n, m + 1))
    C[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5, c4 = c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    C[i, k] = c1 * (k * C[i - 1, k - 1] - c5 * C[i - 1, k]) / c2
                C[i, 0] = -c1 * c5 * C[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                C[j, k] = (c4 * C[j, k] - k * C[j, k - 1]) / c3
            C[j, 0] = c4 * C[j, 0] / c3
        c1 = c2
    return C[:, m]


def _second_derivative_u(vals: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Direct 3-point second derivative in u (4-point one-sided at the ends)."""
    n = len(u)
    out = np.empty_like(vals, dtype=complex if np.iscomplexobj(vals) else float)
    h1 = u[1:-1] - u[:-2]
    h2 = u[2:] - u[1:-1]
    out[1:-1] = 2.0 * (h2 * vals[:-2] - (h1 + h2) * vals[1:-1] + h1 * vals[2:]) / (
        h1 * h2 * (h1 + h2)
    )
    for k, sl in ((0, slice(0, 4)), (n - 1, slice(n - 4, n))):
        w = _fd_weights(u[sl], u[k], 2)
        out[k] = w @ vals[sl]
    return out


def phi_derivative(
    f: GridFunction, phi: PhiSpec, times: int = 1, singular_powers=None
) -> GridFunction:
    """Discrete (1/phi' d/dt)^times = (d/du)^times in the coordinate u = phi(t).

    Second-order differences throughout; pairs of derivatives use one direct
    3-point second difference instead of two composed first differences (the
    composition is an effective 2h-spacing stencil with four times the
    truncation error near the origin).

    ``singular_powers`` lists exponents p of (u - u0)**p components of f;
    near the origin (where plain polynomial stencils lose accuracy on such
    terms) the first nodes get stencils exact on those powers as well.
    """
    vals = f.values
    u = phi.sample(f.grid)
    if times <= 2:
        out = _derivative_u(vals, u, times)
        powers = _clean_derivative_powers(singular_powers, times)
        if powers:
            _adapt_derivative_near_origin(out, vals, u, times, powers)
        return GridFunction(f.grid, out)
    while times >= 2:
        vals = _second_derivative_u(vals, u)
        times -= 2
    if times:
        vals = np.gradient(vals, u, edge_order=2)
    return GridFunction(f.grid, vals)


def _derivative_u(vals: np.ndarray, u: np.ndarray, m: int) -> np.ndarray:
    if m == 0:
        return vals.copy()
    if m == 1:
        return np.gradient(vals, u, edge_order=2)
    return _second_derivative_u(vals, u)


def _clean_derivative_powers(singular_powers, m: int) -> list:
    """Exponents worth adapting the stencils to: non-integer up to degree m+1
    (those integer powers sit in the polynomial part of the stencil), singular
    enough to matter (Re p < m + 2.5), most singular first, at most three."""
    cand = []
    for p in singular_powers or ():
        p = complex(p)
        if p.imag == 0 and abs(p.real - round(p.real)) < 1e-6 and round(p.real) <= m + 1:
            continue
        if p.real <= 0 or p.real >= m + 2.5:
            continue
        if any(abs(p - q) < 1e-6 for q in cand):
            continue
        cand.append(p)
    cand.sort(key=lambda p: p.real)
    return cand[:3]


_ADAPT_NODES = 12


def _adapt_derivative_near_origin(
    out: np.ndarray, vals: np.ndarray, u: np.ndarray, m: int, powers: list
) -> None:
    # Replace the first interior nodes' derivative values with stencils exact
    # on {1, u, ..., u^m} plus the singular powers (anchored at u0).
    n = len(u)
    uu = u - u[0]
    cplx = np.iscomplexobj(vals) or any(p.imag != 0 for p in powers)
    if cplx and not np.iscomplexobj(out):
        raise TypeError("complex adaptation on a real output buffer")
    # polynomial part up to degree m+1, matching the plain stencils' exactness
    poly_deg = m + 1
    width = poly_deg + 1 + len(powers)
    last = min(_ADAPT_NODES, n - width)
    # node 0 is adapted only when every power has a finite m-th derivative at 0
    start_node = 0 if all(p.real > m + 1e-9 for p in powers) else 1
    for k in range(start_node, last + 1):
        start = min(max(k - width // 2, 0), n - width)
        sl = slice(start, start + width)
        cols = uu[sl]
        A = []
        rhs = []
        for j in range(poly_deg + 1):
            A.append(cols**j)
            if j < m:
                rhs.append(0.0)
            else:
                rhs.append(math.factorial(j) / math.factorial(j - m) * uu[k] ** (j - m))
        for p in powers:
            pe = p.real if p.imag == 0 else p
            A.append(_pow_positive(cols, pe, zero_mask=(cols == 0)))
            coef = gamma_complex(p + 1) * reciprocal_gamma(p + 1 - m)
            val = coef * _pow_positive(np.array([uu[k]]), pe - m)[0]
            rhs.append(val if cplx else val.real)
        A = np.array(A)
        rhs = np.array(rhs)
        scale = np.max(np.abs(A), axis=0)
        try:
            w = np.linalg.solve(A / scale[None, :], rhs) / scale
        except np.linalg.LinAlgError:
            continue
        out[k] = w @ vals[sl]


def rl_derivative(f: GridFunction, alpha, phi: PhiSpec, *, singular_powers=None) -> GridFunction:
    """Riemann-Liouville derivative: (1/phi' d/dt)^n I^(n-alpha,phi) f.

    ``singular_powers`` lists the quasi-power exponents of f near the origin
    (see :func:`integral_weights`); by default the derivative adapts to its
    own order alpha, the right choice whenever f came out of I^(alpha,phi).
    """
    alpha = ComplexOrder.coerce(alpha)
    if alpha.is_zero:
        return f
    if singular_powers is None:
        # for f in the image of I^(alpha,phi) of a smooth function, the
        # leading quasi-powers of f are alpha and alpha+1
        singular_powers = (alpha.value, alpha.value + 1)
    n = alpha.n
    rem = ComplexOrder(n - alpha.re, -alpha.im)
    if rem.is_zero:
        return phi_derivative(f, phi, times=n, singular_powers=singular_powers)
    g = frac_integral(f, rem, phi, singular_powers=singular_powers)
    # I^(n-alpha) shifts every quasi-power of f by n-alpha; the difference
    # stencils then adapt to whatever lands on a non-integer exponent
    inner = [complex(p) + rem.value for p in (singular_powers or ())]
    return phi_derivative(g, phi, times=n, singular_powers=inner)


def ex_phi0(phi: PhiSpec) -> float:
    """phi evaluated at 0 (the base point of every quasi-power)."""
    return ex.evaluate(phi.phi, 0.0)


def estimate_phi_derivatives_at_zero(f: GridFunction, phi: PhiSpec, count: int) -> list[float]:
    """(D_phi^j f)(0) for j = 0..count-1 read off the discrete operator."""
    out = []
    g = f
    for j in range(count):
        out.append(complex(g.values[0]))
        if j + 1 < count:
            g = phi_derivative(g, phi)
    return out


def caputo_derivative(
    f: GridFunction, alpha, phi: PhiSpec, init=None, *, singular_powers=None
) -> GridFunction:
    """Modified (Caputo-type) derivative: remove the quasi-Taylor polynomial
    built from (D_phi^j f)(0), j < n, then apply the Riemann-Liouville form.

    ``init`` supplies those derivative values; when omitted they are estimated
    from the samples (problem-driven callers pass the initial data instead).
    """
    alpha = ComplexOrder.coerce(alpha)
    if alpha.is_zero:
        return f
    n = alpha.n
    if init is None:
        init = estimate_phi_derivatives_at_zero(f, phi, n)
    init = list(init)
    if len(init) != n:
        raise ValueError(f"need {n} initial derivative values for order {alpha}, got {len(init)}")
    vals = f.values - _quasi_taylor_complex(f.grid, phi, init)
    return rl_derivative(GridFunction(f.grid, vals), alpha, phi, singular_powers=singular_powers)


def _quasi_taylor_complex(grid: Grid, phi: PhiSpec, init) -> np.ndarray:
    uu = phi.sample(grid) - ex_phi0(phi)
    out = np.zeros(len(grid), dtype=complex if any(isinstance(c, complex) for c in init) else float)
    for j, c in enumerate(init):
        out = out + (c / math.factorial(j)) * uu**j
    return out


def caputo_smooth(f: GridFunction, alpha, phi: PhiSpec) -> GridFunction:
    """Caputo form for smooth f: differentiate n times first, then I^(n-alpha).

    The differentiated input is smooth, so the quadrature keeps its built-in
    linear exactness first in priority.
    """
    alpha = ComplexOrder.coerce(alpha)
    if alpha.is_zero:
        return f
    n = alpha.n
    g = phi_derivative(f, phi, times=n)
    if (n - alpha.re, alpha.im) == (0.0, 0.0):
        return g
    return frac_integral(g, ComplexOrder(n - alpha.re, -alpha.im), phi, singular_powers=(1.0, 0.5))


# ---------------------------------------------------------------------------
# analytic power rules


def _power_values(exponent: complex, coef: complex, uu: np.ndarray) -> np.ndarray:
    """coef * uu**exponent with the origin handled by the limit convention."""
    if coef == 0:
        return np.zeros(len(uu), dtype=complex)
    exponent = complex(exponent)
    if exponent.real < 0:
        raise ValueError(
            f"power rule result has negative real exponent {exponent}; singular at the origin"
        )
    body = _pow_positive(uu, exponent, zero_mask=(uu == 0))
    if exponent == 0:
        body = np.ones_like(uu)
    elif exponent.real == 0:
        # purely imaginary exponent: bounded oscillation, defined as 0 at u=0
        body = np.where(uu > 0, body, 0.0)
    return coef * body


def phi_power_int(alpha, p, phi: PhiSpec, grid: Grid) -> GridFunction:
    """Analytic I^(alpha,phi) (phi-phi(0))^p via the Gamma-ratio rule."""
    alpha = ComplexOrder.coerce(alpha)
    p = complex(p)
    if p.real <= -1:
        raise ValueError(f"power-rule integral needs Re(p) > -1, got {p}")
    uu = phi.sample(grid) - ex_phi0(phi)
    coef = gamma_complex(p + 1) * reciprocal_gamma(p + 1 + alpha.value)
    return GridFunction(grid, _power_values(p + alpha.value, coef, uu))


def phi_power_der(alpha, p, phi: PhiSpec, grid: Grid) -> GridFunction:
    """Analytic D^(alpha,phi) (phi-phi(0))^p; exact zero when 1/Gamma kills it."""
    alpha = ComplexOrder.coerce(alpha)
    p = complex(p)
    if _is_nonpositive_integer(p + 1):
        raise GammaPoleError(f"gamma pole at p+1 = {p + 1}")
    uu = phi.sample(grid) - ex_phi0(phi)
    coef = gamma_complex(p + 1) * reciprocal_gamma(p + 1 - alpha.value)
    return GridFunction(grid, _power_values(p - alpha.value, coef, uu))
