"""Scratch validation round 2: residuals, constant-coefficient route, complex orders."""
import time
import numpy as np

from fracphi import (
    ComplexOrder, Grid, GridFunction, FDEProblem, solve_ivp, solve_constant,
    picard_solve, neumann_solve, residual, check_contraction,
)

t0 = time.time()

print("=== AC6: integer-order sanity x' + x = 1, x(0)=0 ===")
p = FDEProblem.from_strings([1.0, 0.0], ["1"], "1", [0.0], "t", 1.0)
for N in (1025, 4097):
    g = Grid.uniform(N, 1.0)
    sol = solve_ivp(p, g)
    exact = 1 - np.exp(-g.nodes)
    print(f"N={N}: err={np.abs(sol.x.values - exact).max():.2e} residual={sol.residual_norm:.2e} "
          f"cert nu={sol.certificate.nu} C={sol.certificate.C:.3f} terms={sol.terms_used}")

print("\n=== AC3: example 1 solve + residual ===")
p1 = FDEProblem.from_strings([0.75, 0.25], ["t"], "t", [0.0], "t", 1.0)
for N in (1025, 2049, 4097):
    g = Grid.uniform(N, 1.0)
    sol = solve_ivp(p1, g)
    print(f"N={N}: residual={sol.residual_norm:.2e}")

print("\n=== AC5: constant coefficients beta=(1.5,0.7,0), lam=(0.3,0.5), h=sin t ===")
for phis in ("t", "ln(t + 1.0)"):
    pc = FDEProblem.from_strings([1.5, 0.7, 0.0], ["0.3", "0.5"], "sin(t)",
                                 [0.0, 0.0], phis, 1.0)
    g = Grid.uniform(2049, 1.0)
    t1 = time.time()
    xn, _ = neumann_solve(pc.with_zero_init(), g)
    t2 = time.time()
    sc = solve_constant(pc, g)
    t3 = time.time()
    print(f"phi={phis}: |const - neumann|={np.abs(sc.particular.values - xn.values).max():.2e} "
          f"resid={sc.residual_norm:.2e} neumann {t2-t1:.1f}s closed {t3-t2:.1f}s levels={sc.terms_used}")

print("\n=== AC8: canonical set beta=(1.5,0.5,0), d1=1+t, d2=0.5 ===")
from fracphi import canonical_set
ph = FDEProblem.from_strings([1.5, 0.5, 0.0], ["1 + t", "0.5"], "0",
                             [0.0, 0.0], "t", 1.0)
for N in (513, 1025, 2049, 4097):
    g = Grid.uniform(N, 1.0)
    xs = canonical_set(ph, g)
    import dataclasses
    r0 = residual(dataclasses.replace(ph, init=(1.0, 0.0)), xs[0], g)[1]
    r1 = residual(dataclasses.replace(ph, init=(0.0, 1.0)), xs[1], g)[1]
    uu = g.nodes
    dev0 = np.abs(xs[0].values[:5] - 1.0).max()
    dev1 = np.abs(xs[1].values[:5] - uu[:5]).max()
    print(f"N={N}: resid x0={r0:.2e} x1={r1:.2e} first5 dev0={dev0:.2e} dev1={dev1:.2e}")

print("\n=== AC10: complex order smoke ===")
pz = FDEProblem(
    beta=(ComplexOrder(0.8, 0.1), ComplexOrder(0.3)),
    coeffs=(__import__("fracphi.expr", fromlist=["parse"]).parse("t"),),
    rhs=__import__("fracphi.expr", fromlist=["parse"]).parse("1"),
    init=(0.0,), phi=__import__("fracphi").PhiSpec.from_string("t"), horizon=1.0)
g = Grid.uniform(2049, 1.0)
xp = picard_solve(pz, g)
xn, _ = neumann_solve(pz, g)
print("picard vs neumann:", np.abs(xp.values - xn.values).max())
r, rn = residual(pz, xn, g)
print("residual:", rn)
print("cert:", check_contraction(pz, g).satisfied)

print(f"\ntotal {time.time()-t0:.1f}s")
