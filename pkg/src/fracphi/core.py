"""Domain model: orders, grids, grid functions, problems, case classification.

All types are immutable after construction and all operations are pure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import expr as ex
from .errors import ExprDomainError, ValidationFailure

__all__ = [
    "ComplexOrder",
    "Grid",
    "GridFunction",
    "PhiSpec",
    "FDEProblem",
    "Finding",
    "CaseTag",
    "CaseClassification",
    "ContractionCertificate",
    "validate_problem",
    "classify_case",
]


@dataclass(frozen=True)
class ComplexOrder:
    """A fractional order with Re > 0, or exactly zero (the lowest-order slot)."""

    re: float
    im: float = 0.0

    def __post_init__(self):
        if not (self.re > 0 or (self.re == 0 and self.im == 0)):
            raise ValueError(
                f"order must have positive real part or be exactly 0, got {self.re}+{self.im}i"
            )

    @classmethod
    def coerce(cls, value) -> "ComplexOrder":
        if isinstance(value, ComplexOrder):
            return value
        if isinstance(value, complex):
            return cls(value.real, value.imag)
        if isinstance(value, (tuple, list)) and len(value) == 2:
            return cls(float(value[0]), float(value[1]))
        return cls(float(value))

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    @property
    def is_real(self) -> bool:
        return self.im == 0

    @property
    def n(self) -> int:
        """The smallest integer n with n-1 < Re <= n, with n = re for real
        positive-integer orders and n = 0 for the zero order."""
        if self.is_zero:
            return 0
        if self.im == 0 and float(self.re).is_integer():
            return int(self.re)
        return math.floor(self.re) + 1

    def __str__(self) -> str:
        return f"{self.re}" if self.im == 0 else f"{self.re}{self.im:+}i"


@dataclass(frozen=True)
class Grid:
    """Strictly increasing time nodes on [0, T]."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 3:
            raise ValueError("grid needs at least 3 nodes")
        if nodes[0] != 0.0:
            raise ValueError("grid must start at t = 0")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, n_nodes: int, horizon: float) -> "Grid":
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        return cls(np.linspace(0.0, horizon, n_nodes))

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash((len(self.nodes), self.T))


@dataclass(frozen=True)
class GridFunction:
    """Samples of a (possibly complex) function at every grid node."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(complex if vals.dtype.kind == "c" else float)
        if vals.shape != self.grid.nodes.shape:
            raise ValueError(
                f"got {vals.shape[0] if vals.ndim else 0} values for "
                f"{len(self.grid)} grid nodes"
            )
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        return cls(grid, np.array([fn(t) for t in grid.nodes]))

    @classmethod
    def from_expr(cls, grid: Grid, ast: ex.ExprAst) -> "GridFunction":
        return cls(grid, np.array([ex.evaluate(ast, t) for t in grid.nodes]))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values - other.values)
        return GridFunction(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values * other.values)
        return GridFunction(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)


@dataclass(frozen=True)
class PhiSpec:
    """The reference function phi with its symbolic derivative."""

    phi: ex.ExprAst
    phi_prime: ex.ExprAst

    @classmethod
    def from_string(cls, src: str) -> "PhiSpec":
        ast = ex.parse(src)
        return cls(ast, ex.differentiate(ast))

    @classmethod
    def identity(cls) -> "PhiSpec":
        return cls.from_string("t")

    @property
    def is_identity(self) -> bool:
        return ex.fold(self.phi) == ex.Var()

    def sample(self, grid: Grid) -> np.ndarray:
        return np.array([ex.evaluate(self.phi, t) for t in grid.nodes])

    def sample_prime(self, grid: Grid) -> np.ndarray:
        return np.array([ex.evaluate(self.phi_prime, t) for t in grid.nodes])

    def __str__(self) -> str:
        return ex.unparse(self.phi)


@dataclass(frozen=True)
class FDEProblem:
    """Multi-term problem data: orders beta_0..beta_m, coefficients d_1..d_m,
    right-hand side h, initial values c_0..c_{n0-1}, reference function phi,
    horizon T."""

    beta: tuple
    coeffs: tuple
    rhs: ex.ExprAst
    init: tuple
    phi: PhiSpec
    horizon: float

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(ComplexOrder.coerce(b) for b in self.beta))
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        object.__setattr__(self, "init", tuple(float(c) for c in self.init))

    @classmethod
    def from_strings(cls, betas, coeffs, rhs, init, phi, horizon) -> "FDEProblem":
        return cls(
            beta=tuple(ComplexOrder.coerce(b) for b in betas),
            coeffs=tuple(ex.parse(c) for c in coeffs),
            rhs=ex.parse(rhs),
            init=tuple(init),
            phi=PhiSpec.from_string(phi),
            horizon=float(horizon),
        )

    @property
    def m(self) -> int:
        return len(self.beta) - 1

    @property
    def n0(self) -> int:
        return self.beta[0].n

    def with_zero_init(self) -> "FDEProblem":
        return replace(self, init=(0.0,) * len(self.init))

    def constant_coefficients(self):
        """The coefficient values if every d_i is constant, else None."""
        vals = []
        for c in self.coeffs:
            v = ex.as_constant(c)
            if v is None:
                return None
            vals.append(v)
        return vals


@dataclass(frozen=True)
class Finding:
    """One violated invariant, addressed by field and (optionally) grid node."""

    field: str
    message: str
    node: int | None = None

    def __str__(self) -> str:
        loc = f" at node {self.node}" if self.node is not None else ""
        return f"{self.field}: {self.message}{loc}"


class CaseTag(enum.Enum):
    BETA_M_ZERO_N0_GT_N1 = "BETA_M_ZERO_N0_GT_N1"
    BETA_M_ZERO_N0_EQ_N1 = "BETA_M_ZERO_N0_EQ_N1"
    GAP_N0_GT_N1 = "GAP_N0_GT_N1"
    GAP_N0_EQ_N1 = "GAP_N0_EQ_N1"
    ALL_EMPTY = "ALL_EMPTY"


@dataclass(frozen=True)
class CaseClassification:
    """n_i for every order, the index sets K_j, their minima, the gap index j0
    (when some K_j are empty but not all), and the dispatch tag."""

    n: tuple
    Kj: tuple
    kappa: tuple
    j0: int | None
    case_tag: CaseTag


@dataclass(frozen=True)
class ContractionCertificate:
    """Witness (nu, C) for the weighted-norm contraction bound; per-node margin
    is 1 minus the weighted-ratio at each node (positive margin everywhere
    means the bound holds there)."""

    nu: float
    C: float
    satisfied: bool
    per_node_margin: GridFunction
    analytic_nu: float | None = None
    analytic_C: float | None = None


# ---------------------------------------------------------------------------
# operations


def validate_problem(problem: FDEProblem, grid: Grid) -> list[Finding]:
    """Collect every violated invariant (empty list means valid)."""
    findings: list[Finding] = []
    beta = problem.beta
    m = problem.m

    if beta[0].is_zero:
        findings.append(Finding("beta[0]", "leading order must have positive real part"))
    res = [b.re for b in beta]
    if any(res[i] <= res[i + 1] for i in range(len(res) - 1)):
        findings.append(Finding("beta", "orders not strictly decreasing in real part"))
    if len(problem.coeffs) != m:
        findings.append(
            Finding("coeffs", f"expected {m} coefficients for {m + 1} orders, got {len(problem.coeffs)}")
        )
    n0 = problem.n0
    if len(problem.init) != n0:
        findings.append(Finding("init", f"expected n0 = {n0} initial values, got {len(problem.init)}"))
    if problem.horizon <= 0:
        findings.append(Finding("T", "horizon must be positive"))
    elif not math.isclose(grid.T, problem.horizon, rel_tol=1e-12):
        findings.append(Finding("T", f"grid ends at {grid.T}, problem horizon is {problem.horizon}"))

    findings.extend(_check_phi(problem.phi, grid))
    for i, c in enumerate(problem.coeffs):
        findings.extend(_check_finite(c, f"coeffs[{i}]", grid))
    findings.extend(_check_finite(problem.rhs, "rhs", grid))
    return findings


def _check_phi(phi: PhiSpec, grid: Grid) -> list[Finding]:
    findings = []
    for k, t in enumerate(grid.nodes):
        try:
            v = ex.evaluate(phi.phi, t)
            dv = ex.evaluate(phi.phi_prime, t)
        except ExprDomainError as err:
            findings.append(Finding("phi", str(err), k))
            return findings
        if not (math.isfinite(v) and math.isfinite(dv)):
            findings.append(Finding("phi", "phi or phi' not finite", k))
            return findings
        if dv <= 0:
            findings.append(Finding("phi", f"phi' <= 0 at node (phi'={dv:g})", k))
            return findings
    return findings


def _check_finite(ast: ex.ExprAst, name: str, grid: Grid) -> list[Finding]:
    for k, t in enumerate(grid.nodes):
        try:
            v = ex.evaluate(ast, t)
        except ExprDomainError as err:
            return [Finding(name, str(err), k)]
        if not math.isfinite(v):
            return [Finding(name, "value not finite", k)]
    return []


def require_valid(problem: FDEProblem, grid: Grid) -> None:
    findings = validate_problem(problem, grid)
    if findings:
        raise ValidationFailure(findings)


def classify_case(problem: FDEProblem) -> CaseClassification:
    """Compute n_i, K_j, kappa_j, j0 and the canonical-set dispatch tag.

    Pure function of the order list: coefficients and right-hand side never
    affect the classification.
    """
    beta = problem.beta
    m = problem.m
    n = tuple(b.n for b in beta)
    n0 = n[0]

    Kj = []
    kappa = []
    for j in range(n0):
        members = frozenset(i for i in range(1, m + 1) if beta[i].re <= j)
        Kj.append(members)
        kappa.append(min(members) if members else None)
    Kj = tuple(Kj)
    kappa = tuple(kappa)

    if m >= 1 and beta[m].is_zero:
        n1 = n[1]
        tag = CaseTag.BETA_M_ZERO_N0_GT_N1 if n0 > n1 else CaseTag.BETA_M_ZERO_N0_EQ_N1
        j0 = None
    elif not Kj or not Kj[n0 - 1]:
        tag = CaseTag.ALL_EMPTY
        j0 = None
    else:
        j0 = max(j for j in range(n0) if not Kj[j])
        n1 = n[1]
        tag = CaseTag.GAP_N0_GT_N1 if n0 > n1 else CaseTag.GAP_N0_EQ_N1

    return CaseClassification(n=n, Kj=Kj, kappa=kappa, j0=j0, case_tag=tag)
