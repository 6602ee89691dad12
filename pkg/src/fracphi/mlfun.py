"""Multivariate Mittag-Leffler and Kilbas-Saigo-type series.

Both series are summed level by level with terms assembled in log space
(log-multinomial plus log-gamma), so large levels neither overflow nor lose
the sign/phase information.  The stopping rule requires three consecutive
small levels because neither series is alternating-monotone in general.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.special as sps

from .errors import GammaPoleError, SeriesDivergenceError
from .fraccalc import _is_nonpositive_integer

__all__ = [
    "MlParams",
    "KsParams",
    "ml_multivariate",
    "ml_two_param",
    "kilbas_saigo",
    "kilbas_saigo_coefficients",
    "ml_power_series",
]

DEFAULT_LEVEL_CAP = 400


@dataclass(frozen=True)
class MlParams:
    """Parameters (a_1..a_n, b) of the n-variate Mittag-Leffler function."""

    a: tuple
    b: complex

    def __post_init__(self):
        a = tuple(complex(v) for v in self.a)
        b = complex(self.b)
        if not a:
            raise ValueError("need at least one a parameter")
        if any(v.real <= 0 for v in a) or b.real <= 0:
            raise ValueError("all a_i and b must have positive real part")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class KsParams:
    """Parameters of the Kilbas-Saigo-type series sum c_k z^k with
    c_k = prod_{j<k} Gamma(alpha[j beta + gamma] + 1) / Gamma(alpha[j beta + gamma] + lam + 1)."""

    alpha: float
    beta: float
    gamma: complex
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", complex(self.gamma))


class _Kahan:
    """Compensated complex accumulator with a fixed summation order."""

    def __init__(self):
        self.total = 0.0 + 0.0j
        self._c = 0.0 + 0.0j

    def add(self, term: complex) -> None:
        y = term - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


def _compositions(total: int, parts: int):
    """All tuples of `parts` non-negative integers summing to `total`,
    lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _log_multinomial(k: int, ls) -> float:
    return math.lgamma(k + 1) - sum(math.lgamma(l + 1) for l in ls)


def ml_multivariate(params: MlParams, z, tol: float = 1e-13, level_cap: int = DEFAULT_LEVEL_CAP) -> complex:
    """E_{(a_1..a_n),b}(z_1..z_n) by exhaustive level-by-level summation."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = tuple(complex(v) for v in z)
    if len(z) != params.n:
        raise ValueError(f"expected {params.n} arguments, got {len(z)}")
    logz = [cmath.log(v) if v != 0 else None for v in z]

    acc = _Kahan()
    acc.add(complex(sps.rgamma(params.b)))
    small_levels = 0
    level_abs = 0.0
    for k in range(1, level_cap + 1):
        level = _Kahan()
        level_abs = 0.0
        for ls in _compositions(k, params.n):
            if any(l > 0 and logz[i] is None for i, l in enumerate(ls)):
                continue
            arg = params.b + sum(a * l for a, l in zip(params.a, ls))
            logterm = _log_multinomial(k, ls) - complex(sps.loggamma(arg))
            logterm += sum(l * logz[i] for i, l in enumerate(ls) if l > 0)
            term = cmath.exp(logterm)
            level.add(term)
            level_abs += abs(term)
        acc.add(level.total)
        if level_abs < tol * max(1.0, abs(acc.total)):
            small_levels += 1
            if small_levels >= 3:
                return acc.total
        else:
            small_levels = 0
    raise SeriesDivergenceError(
        f"multivariate Mittag-Leffler did not settle within {level_cap} levels "
        f"(last level magnitude {level_abs:.3e})",
        acc.total,
        level_abs,
    )


def ml_two_param(a, b, z, tol: float = 1e-13, level_cap: int = DEFAULT_LEVEL_CAP) -> complex:
    """Two-parameter E_{a,b}(z): the n = 1 collapse of the multivariate series."""
    return ml_multivariate(MlParams((a,), b), (z,), tol=tol, level_cap=level_cap)


def _ks_ratio_args(params: KsParams, j: int) -> tuple[complex, complex]:
    base = params.alpha * (j * params.beta + params.gamma)
    return base + 1, base + 1 + params.lam


def kilbas_saigo_coefficients(params: KsParams, count: int) -> np.ndarray:
    """The first `count` coefficients c_0..c_{count-1} of the series.

    A pole in a numerator gamma raises; a pole in a denominator gamma makes
    every later coefficient exactly zero (reciprocal gamma is entire).
    """
    out = np.zeros(count, dtype=complex)
    if count == 0:
        return out
    out[0] = 1.0
    c = 1.0 + 0.0j
    for k in range(1, count):
        num_arg, den_arg = _ks_ratio_args(params, k - 1)
        if _is_nonpositive_integer(num_arg):
            raise GammaPoleError(
                f"gamma pole in numerator at j = {k - 1} (argument {num_arg})"
            )
        c = c * complex(sps.gamma(num_arg)) * complex(sps.rgamma(den_arg))
        out[k] = c
        if c == 0:
            break
    return out


def kilbas_saigo(params: KsParams, z, tol: float = 1e-13, term_cap: int = DEFAULT_LEVEL_CAP) -> complex:
    """Sum c_k z^k with the running-product coefficients, in log form."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = complex(z)
    acc = _Kahan()
    acc.add(1.0)
    if z == 0:
        return acc.total
    logz = cmath.log(z)
    logc = 0.0 + 0.0j
    small = 0
    term_abs = 0.0
    for k in range(1, term_cap + 1):
        num_arg, den_arg = _ks_ratio_args(params, k - 1)
        if _is_nonpositive_integer(num_arg):
            raise GammaPoleError(
                f"gamma pole in numerator at j = {k - 1} (argument {num_arg})"
            )
        if _is_nonpositive_integer(den_arg):
            # 1/Gamma hits a zero: every later coefficient vanishes exactly
            return acc.total
        logc += complex(sps.loggamma(num_arg)) - complex(sps.loggamma(den_arg))
        term = cmath.exp(logc + k * logz)
        acc.add(term)
        term_abs = abs(term)
        if term_abs < tol * max(1.0, abs(acc.total)):
            small += 1
            if small >= 3:
                return acc.total
        else:
            small = 0
    raise SeriesDivergenceError(
        f"Kilbas-Saigo series did not settle within {term_cap} terms "
        f"(last term magnitude {term_abs:.3e})",
        acc.total,
        term_abs,
    )


# ---------------------------------------------------------------------------
# vectorized power-argument evaluation (solver kernels)


def ml_power_series(
    a,
    b,
    coefs,
    v: np.ndarray,
    tol: float = 1e-13,
    level_cap: int = DEFAULT_LEVEL_CAP,
):
    """E_{(a),b}(coefs_1 v**a_1, ..., coefs_n v**a_n) elementwise on v >= 0.

    Entries with v <= 0 are given the v = 0 value (1/Gamma(b)); callers mask
    them out.  Returns (values, levels_used).
    """
    a = np.asarray([complex(x) for x in a])
    coefs = np.asarray([complex(x) for x in coefs])
    b = complex(b)
    v = np.asarray(v, dtype=float)
    n = len(a)
    if len(coefs) != n:
        raise ValueError("coefficient count must match parameter count")

    real_output = (
        b.imag == 0 and np.all(a.imag == 0) and np.all(coefs.imag == 0)
    )
    positive = v > 0
    L = np.log(np.where(positive, v, 1.0))
    mask = positive.astype(float)
    vmax = float(v.max()) if v.size else 0.0

    acc = np.full(v.shape, sps.rgamma(b).real if real_output else complex(sps.rgamma(b)),
                  dtype=float if real_output else complex)
    logcoef = [cmath.log(c) if c != 0 else None for c in coefs]
    buf = np.empty_like(L)

    small = 0
    level_bound = 0.0
    levels = 0
    for k in range(1, level_cap + 1):
        level_bound = 0.0
        for ls in _compositions(k, n):
            if any(l > 0 and logcoef[i] is None for i, l in enumerate(ls)):
                continue
            q = sum(ai * l for ai, l in zip(a, ls))
            logw = _log_multinomial(k, ls) - complex(sps.loggamma(b + q))
            logw += sum(l * logcoef[i] for i, l in enumerate(ls) if l > 0)
            w = cmath.exp(logw)
            w_bound = abs(w) * (vmax ** q.real if vmax > 0 else 0.0)
            level_bound += w_bound
            if w_bound < 1e-3 * tol:
                continue
            if real_output:
                np.multiply(L, q.real, out=buf)
                np.exp(buf, out=buf)
                buf *= mask
                acc += w.real * buf
            else:
                body = np.exp(q * L) if q.imag != 0 else np.exp(q.real * L)
                acc = acc + w * (body * mask)
        levels = k
        if level_bound < tol * max(1.0, float(np.max(np.abs(acc)))):
            small += 1
            if small >= 3:
                return acc, levels
        else:
            small = 0
    raise SeriesDivergenceError(
        f"Mittag-Leffler kernel series did not settle within {level_cap} levels "
        f"(last level bound {level_bound:.3e})",
        acc,
        level_bound,
    )
