"""Scratch validation (not part of the package): quadrature orders and the
closed-form interpretation checks."""
import numpy as np
import scipy.special as sps

from fracphi import (
    ComplexOrder, Grid, GridFunction, PhiSpec, frac_integral, integral_weights,
    phi_power_int, picard_solve, neumann_solve, FDEProblem,
)
from fracphi.core import classify_case
from fracphi import kilbas_saigo_coefficients, KsParams

print("=== AC1-style power-rule convergence ===")
for phis in ["t", "ln(t + 1.0)"]:
    phi = PhiSpec.from_string(phis)
    for alpha in [ComplexOrder(0.5), ComplexOrder(1.3), ComplexOrder(0.8, 0.2)]:
        for p in [0.5, 1.0, 2.0]:
            errs_all, errs_int = [], []
            for N in [129, 257, 513, 1025, 2049, 4097]:
                g = Grid.uniform(N, 1.0)
                uu = phi.sample(g) - phi.sample(g)[0]
                f = GridFunction(g, uu**p)
                num = frac_integral(f, alpha, phi)
                ref = phi_power_int(alpha, p, phi, g)
                err = np.abs(num.values - ref.values)
                errs_all.append(err.max())
                errs_int.append(err[2:].max())
            e = np.array(errs_int)
            with np.errstate(divide="ignore"):
                slopes = np.log2(e[:-1] / np.maximum(e[1:], 1e-300))
            print(f"phi={phis:12s} a={alpha} p={p}: err_all(4097)={errs_all[-1]:.2e} "
                  f"err_int(4097)={errs_int[-1]:.2e} slopes={np.round(slopes,2)}")

print()
print("=== Example 1 closed form vs picard/neumann (sign check) ===")
# orders 0.75 / 0.25, coefficient t^1, rhs t^1, phi = t, [0,1]
p1 = FDEProblem.from_strings(
    betas=[0.75, 0.25], coeffs=["t"], rhs="t", init=[0.0], phi="t", horizon=1.0)
g = Grid.uniform(2049, 1.0)
xp = picard_solve(p1, g, tol=1e-12, kmax=200)
xn, depth = neumann_solve(p1, g, tol=1e-12, kmax=200)
print("picard vs neumann:", np.abs(xp.values - xn.values).max(), "depth", depth)

beta0, beta1, al, be = 0.75, 0.25, 1.0, 1.0
gam = al + beta0 - beta1
ks = KsParams(alpha=1.0, beta=gam, gamma=be, lam=beta0 - beta1)
c = kilbas_saigo_coefficients(ks, 60)
t = g.nodes
# closed form, derivation sign: x = +I^{b0}( t^be * E(-t^gam) )
# term-analytic: sum_k (-1)^k c_k G(gk+be+1)/G(gk+be+b0+1) t^(gk+be+b0)
xcf = np.zeros_like(t)
for k in range(60):
    ex = gam * k + be
    coef = ((-1) ** k) * c[k].real * sps.gamma(ex + 1) * sps.rgamma(ex + 1 + beta0)
    xcf += coef * t ** (ex + beta0)
print("closed(+) vs picard:", np.abs(xcf - xp.values).max())
print("closed(-) vs picard:", np.abs(-xcf - xp.values).max())

print()
print("=== KS integral identity (example 2 family): I^1 vs I^{b0} ===")
b0, b1, al2 = 1.5, 0.5, 1.0
gam2 = al2 + b0 - b1        # = 2
ks2 = KsParams(alpha=1.0, beta=gam2, gamma=b0, lam=1.0)
c2 = kilbas_saigo_coefficients(ks2, 60)
phi_t = PhiSpec.identity()
E = np.zeros_like(t)
for k in range(60):
    E += c2[k].real * (-(t**gam2)) ** k
fsamp = GridFunction(g, t**b0 * E)
lhs_i1 = frac_integral(fsamp, ComplexOrder(b0 - b1), phi_t).values      # I^1
lhs_ib0 = frac_integral(fsamp, ComplexOrder(b0), phi_t).values          # printed order
rhs = -(t ** (b1 - al2 + 1)) * (E - 1)
print("I^(b0-b1) identity error:", np.abs(lhs_i1 - rhs).max())
print("I^(b0)    identity error:", np.abs(lhs_ib0 - rhs).max())

print()
print("=== Example 2 (beta=b0): solver vs corrected closed form ===")
p2 = FDEProblem.from_strings(
    betas=[1.5, 0.5], coeffs=["t"], rhs="t^1.5", init=[0.0, 0.0], phi="t", horizon=1.0)
xn2, d2 = neumann_solve(p2, g, tol=1e-12, kmax=200)
xcf2 = np.zeros_like(t)
for k in range(60):
    ex = gam2 * k + b0
    coef = ((-1) ** k) * c2[k].real * sps.gamma(ex + 1) * sps.rgamma(ex + 1 + b0)
    xcf2 += coef * t ** (ex + b0)
lit = t ** (b1 - al2 + 1) * E - t ** (b1 - al2 + 1)   # paper's printed formula
print("corrected closed form vs neumann:", np.abs(xcf2 - xn2.values).max())
print("printed formula vs neumann:      ", np.abs(lit - xn2.values).max())
print(classify_case(p2).case_tag)
