import dataclasses
import numpy as np
from fracphi import (
    ComplexOrder, Grid, GridFunction, FDEProblem, canonical_set, residual,
    caputo_derivative, frac_integral, neumann_solve, PhiSpec,
)
from fracphi.fraccalc import phi_derivative

ph = FDEProblem.from_strings([1.5, 0.5, 0.0], ["1 + t", "0.5"], "0",
                             [0.0, 0.0], "t", 1.0)
N = 1025
g = Grid.uniform(N, 1.0)
xs = canonical_set(ph, g)
x0 = xs[0]

p_ic = dataclasses.replace(ph, init=(1.0, 0.0))
r, rn = residual(p_ic, x0, g)
k = np.argmax(np.abs(r.values[2:-2])) + 2
print("residual max at node", k, "of", N, "t=", g.nodes[k], "val", r.values[k])
print("profile:", np.round(np.abs(r.values[[2,3,5,10,50,200,512,900,1020,1022]]), 5))

# independent check: x0 - 1 solves the zero-IC problem with h = -0.5
p_inh = FDEProblem.from_strings([1.5, 0.5, 0.0], ["1 + t", "0.5"], "-0.5",
                                [0.0, 0.0], "t", 1.0)
y, _ = neumann_solve(p_inh, g)
print("x0 vs 1 + neumann(h=-0.5):", np.abs(x0.values - 1 - y.values).max())

# decompose residual terms
phi = ph.phi
cd0 = caputo_derivative(x0, ComplexOrder(1.5), phi, init=[1.0, 0.0])
cd1 = caputo_derivative(x0, ComplexOrder(0.5), phi, init=[1.0])
d1 = 1 + g.nodes
term = cd0.values + d1 * cd1.values + 0.5 * x0.values
print("terms at peak:", cd0.values[k], cd1.values[k], x0.values[k])

# what should cd0 be at the peak? from the ODE: -(1+t)cd1 - 0.5 x0
print("cd0 expected:", -d1[k] * cd1.values[k] - 0.5 * x0.values[k])

# examine the inner I^{0.5}(x0-1) and its second derivative
inner = frac_integral(GridFunction(g, x0.values - 1.0), ComplexOrder(0.5), phi)
d2 = phi_derivative(phi_derivative(inner, phi), phi)
print("cd0 recomputed:", d2.values[k])
# compare with spectrally-clean route: represent x0-1 by its series?  check smoothness:
print("inner first few:", inner.values[:6])
print("x0-1 first few:", (x0.values - 1)[:6])
