"""Batch front end: problem ingestion from YAML configs, command dispatch,
CSV/JSON emission.

Exit codes: 0 success, 1 validation failure, 2 numerical failure (iteration
cap or series divergence; partial outputs are still written with a "status"
field).
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import expr as ex
from .core import ComplexOrder, FDEProblem, Grid, GridFunction, PhiSpec, validate_problem
from .errors import (
    ExprDomainError,
    ExprSyntaxError,
    FracphiError,
    GammaPoleError,
    IterationLimitError,
    SeriesDivergenceError,
    ValidationFailure,
)
from .fraccalc import caputo_derivative, frac_integral, rl_derivative
from .mlfun import KsParams, MlParams, kilbas_saigo, ml_multivariate
from .solver import (
    canonical_set,
    check_contraction,
    classify_case,
    neumann_solve,
    picard_solve,
    residual,
    solve_constant,
    solve_ivp,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def fmt(x: float) -> str:
    """Shortest round-trip float text, integers without a trailing .0."""
    s = repr(float(x))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _diag(payload: dict) -> None:
    """Machine-readable diagnostic on stderr next to the human message."""
    click.echo(json.dumps(payload, sort_keys=True), err=True)


# ---------------------------------------------------------------------------
# config handling


class ConfigError(FracphiError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _want(mapping, path, key, kind, default=None, required=False):
    if key not in mapping:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    value = mapping[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{path}.{key}", f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_order(value, path):
    if isinstance(value, (int, float)):
        return ComplexOrder(float(value))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            return ComplexOrder(float(value[0]), float(value[1]))
        except (TypeError, ValueError) as err:
            raise ConfigError(path, str(err)) from None
    raise ConfigError(path, "expected a number or a [re, im] pair")


def load_config(path: str) -> dict:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(path, "config file not found") from None
    except yaml.YAMLError as err:
        raise ConfigError(path, f"not valid YAML: {err}") from None
    if not isinstance(raw, dict):
        raise ConfigError(path, "top level must be a mapping")
    schema = raw.get("schema")
    if schema != 1:
        raise ConfigError("schema", f"expected schema: 1, got {schema!r}")
    return raw


def problem_from_config(cfg: dict) -> FDEProblem:
    prob = _want(cfg, "", "problem", dict, required=True)
    betas_raw = _want(prob, "problem", "betas", list, required=True)
    betas = [_parse_order(b, f"problem.betas[{i}]") for i, b in enumerate(betas_raw)]
    coeffs_raw = _want(prob, "problem", "coeffs", list, default=[])
    rhs_raw = _want(prob, "problem", "rhs", str, required=True)
    init_raw = _want(prob, "problem", "init", list, default=[])
    phi_raw = _want(prob, "problem", "phi", str, default="t")
    horizon = _want(prob, "problem", "T", float, required=True)

    def parse_field(src, path):
        if not isinstance(src, str):
            raise ConfigError(path, "expected an expression string")
        try:
            return ex.parse(src)
        except ExprSyntaxError as err:
            raise ConfigError(path, str(err)) from None

    coeffs = [parse_field(c, f"problem.coeffs[{i}]") for i, c in enumerate(coeffs_raw)]
    rhs = parse_field(rhs_raw, "problem.rhs")
    try:
        phi = PhiSpec.from_string(phi_raw)
    except ExprSyntaxError as err:
        raise ConfigError("problem.phi", str(err)) from None
    init = []
    for i, c in enumerate(init_raw):
        if not isinstance(c, (int, float)):
            raise ConfigError(f"problem.init[{i}]", "expected a real number")
        init.append(float(c))
    return FDEProblem(
        beta=tuple(betas), coeffs=tuple(coeffs), rhs=rhs,
        init=tuple(init), phi=phi, horizon=horizon,
    )


def numerics_from_config(cfg: dict, overrides: dict) -> dict:
    num = _want(cfg, "", "numerics", dict, default={})
    out = {
        "N": _want(num, "numerics", "N", int, default=1025),
        "tol": _want(num, "numerics", "tol", float, default=1e-10),
        "kmax": _want(num, "numerics", "kmax", int, default=200),
        "ml_tol": _want(num, "numerics", "ml_tol", float, default=1e-13),
    }
    for key, value in overrides.items():
        if value is not None:
            out[key] = value
    return out


def output_from_config(cfg: dict, out_opt, format_opt) -> tuple:
    outb = _want(cfg, "", "output", dict, default={})
    path = out_opt or _want(outb, "output", "path", str, default=None)
    fstyle = format_opt or _want(outb, "output", "format", str, default="csv")
    if fstyle not in ("csv", "json"):
        raise ConfigError("output.format", f"expected csv or json, got {fstyle!r}")
    return path, fstyle


# ---------------------------------------------------------------------------
# emission helpers


def _write_text(path, text):
    if path is None:
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text)


def _solution_csv(grid: Grid, x: GridFunction, r: GridFunction) -> str:
    lines = ["t,re_x,im_x,re_residual,im_residual"]
    xv = np.asarray(x.values, dtype=complex)
    rv = np.asarray(r.values, dtype=complex)
    for t, xi, ri in zip(grid.nodes, xv, rv):
        lines.append(
            f"{fmt(t)},{fmt(xi.real)},{fmt(xi.imag)},{fmt(ri.real)},{fmt(ri.imag)}"
        )
    return "\n".join(lines) + "\n"


def _values_csv(grid: Grid, f: GridFunction) -> str:
    lines = ["t,re_x,im_x"]
    fv = np.asarray(f.values, dtype=complex)
    for t, v in zip(grid.nodes, fv):
        lines.append(f"{fmt(t)},{fmt(v.real)},{fmt(v.imag)}")
    return "\n".join(lines) + "\n"


def _summary(sol, status="ok") -> dict:
    cert = sol.certificate
    return {
        "status": status,
        "terms_used": sol.terms_used,
        "residual_norm": sol.residual_norm,
        "certificate": {
            "nu": cert.nu,
            "C": cert.C,
            "satisfied": cert.satisfied,
            "analytic_nu": cert.analytic_nu,
            "analytic_C": cert.analytic_C,
        },
    }


def _json_out(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _write_text(path, text)


def _sidecar_json(path) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p.with_suffix(".json")) if p.suffix == ".csv" else str(p) + ".json"


# ---------------------------------------------------------------------------
# CLI


SEED_CONFIGS = {
    "demo1.yaml": """\
# half-order pair with a power coefficient on [0,1]
schema: 1
problem:
  phi: "t"
  betas: [[0.75, 0.0], [0.25, 0.0]]
  coeffs: ["t"]
  rhs: "t"
  init: [0.0]
  T: 1.0
numerics:
  N: 2049
  tol: 1.0e-10
  kmax: 200
  ml_tol: 1.0e-13
output:
  path: demo1.csv
  format: csv
""",
    "demo2.yaml": """\
# order pair (1.5, 0.5) with unit gap and power data on [0,1]
schema: 1
problem:
  phi: "t"
  betas: [[1.5, 0.0], [0.5, 0.0]]
  coeffs: ["t"]
  rhs: "t^1.5"
  init: [0.0, 0.0]
  T: 1.0
numerics:
  N: 2049
  tol: 1.0e-10
  kmax: 200
  ml_tol: 1.0e-13
output:
  path: demo2.csv
  format: csv
""",
}


def _seed_docs(ctx, param, value):
    if not value or ctx.resilient_parsing:
        return
    outdir = Path(".")
    for i, arg in enumerate(sys.argv):
        if arg == "--out" and i + 1 < len(sys.argv):
            outdir = Path(sys.argv[i + 1])
    outdir.mkdir(parents=True, exist_ok=True)
    for name, text in SEED_CONFIGS.items():
        (outdir / name).write_text(text)
        click.echo(f"wrote {outdir / name}")
    ctx.exit(EXIT_OK)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--seed-docs", is_flag=True, callback=_seed_docs, expose_value=False,
              is_eager=True, help="Write the bundled example configs and exit.")
def main():
    """Explicit solutions of multi-term linear fractional differential
    equations with respect to a function phi.

    Expression syntax for phi/coefficients/right-hand sides: numbers, pi, e,
    the variable t, + - * / ^ (right-associative), and exp, ln, sin, cos,
    sqrt, pow(x, y).
    """


_common = [
    click.option("--config", "config_path", type=str, required=True, help="YAML problem config."),
    click.option("--out", "out_path", type=str, default=None, help="Output path (stdout if omitted)."),
    click.option("--format", "format_opt", type=click.Choice(["csv", "json"]), default=None),
    click.option("--n", "n_opt", type=int, default=None, help="Override grid node count."),
    click.option("--tol", "tol_opt", type=float, default=None, help="Override series tolerance."),
    click.option("--kmax", "kmax_opt", type=int, default=None, help="Override iteration cap."),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


def _load_problem(config_path, n_opt, tol_opt, kmax_opt):
    cfg = load_config(config_path)
    problem = problem_from_config(cfg)
    numerics = numerics_from_config(cfg, {"N": n_opt, "tol": tol_opt, "kmax": kmax_opt})
    grid = Grid.uniform(numerics["N"], problem.horizon)
    return cfg, problem, numerics, grid


def _validate_or_exit(ctx, problem, grid):
    findings = validate_problem(problem, grid)
    if findings:
        for f in findings:
            click.echo(f"validation: {f}", err=True)
        _diag({"status": "validation_failure",
               "findings": [{"field": f.field, "message": f.message, "node": f.node} for f in findings]})
        ctx.exit(EXIT_VALIDATION)


@main.command()
@common_options
@click.option("--method", type=click.Choice(["series", "picard", "closed-form"]), default=None,
              help="Solver path; default picks closed-form for constant coefficients.")
@click.pass_context
def solve(ctx, config_path, out_path, format_opt, n_opt, tol_opt, kmax_opt, method):
    """Solve the initial value problem from a config."""
    try:
        cfg, problem, numerics, grid = _load_problem(config_path, n_opt, tol_opt, kmax_opt)
    except ConfigError as err:
        click.echo(f"config: {err}", err=True)
        _diag({"status": "validation_failure", "error": str(err)})
        ctx.exit(EXIT_VALIDATION)
    _validate_or_exit(ctx, problem, grid)
    out_path, fstyle = output_from_config(cfg, out_path, format_opt)

    if method is None:
        method = "closed-form" if problem.constant_coefficients() is not None else "series"

    status = "ok"
    try:
        if method == "closed-form":
            sol = solve_constant(problem, grid, tol=numerics["tol"], ml_tol=numerics["ml_tol"])
        elif method == "picard":
            x = picard_solve(problem.with_zero_init(), grid, tol=numerics["tol"], kmax=numerics["kmax"])
            sol = _assemble_picard(problem, grid, x, numerics)
        else:
            sol = solve_ivp(problem, grid, tol=numerics["tol"], kmax=numerics["kmax"])
    except (IterationLimitError, SeriesDivergenceError) as err:
        click.echo(f"numerical failure: {err}", err=True)
        _diag({"status": "numerical_failure", "error": str(err)})
        partial = getattr(err, "last_iterate", None) or getattr(err, "partial", None)
        if isinstance(partial, GridFunction):
            _write_text(out_path, _values_csv(grid, partial))
            sidecar = _sidecar_json(out_path)
            if sidecar:
                _json_out(sidecar, {"status": "numerical_failure", "error": str(err)})
        ctx.exit(EXIT_NUMERICAL)

    if fstyle == "json":
        payload = _summary(sol, status)
        payload["t"] = [fmt(v) for v in grid.nodes]
        xv = np.asarray(sol.x.values, dtype=complex)
        rv = np.asarray(sol.residual.values, dtype=complex)
        payload["re_x"] = [fmt(v.real) for v in xv]
        payload["im_x"] = [fmt(v.imag) for v in xv]
        payload["re_residual"] = [fmt(v.real) for v in rv]
        payload["im_residual"] = [fmt(v.imag) for v in rv]
        _json_out(out_path, payload)
    else:
        _write_text(out_path, _solution_csv(grid, sol.x, sol.residual))
        sidecar = _sidecar_json(out_path)
        if sidecar:
            _json_out(sidecar, _summary(sol, status))
        else:
            click.echo(json.dumps(_summary(sol, status), sort_keys=True), err=True)
    ctx.exit(EXIT_OK)


def _assemble_picard(problem, grid, particular, numerics):
    from .solver import Solution

    cert = check_contraction(problem, grid)
    canonical = canonical_set(problem, grid, tol=numerics["tol"], kmax=numerics["kmax"])
    vals = particular.values
    for c, xj in zip(problem.init, canonical):
        if c != 0:
            vals = vals + c * xj.values
    x = GridFunction(grid, vals)
    r, rnorm = residual(problem, x, grid)
    return Solution(x=x, particular=particular, canonical=tuple(canonical), terms_used=0,
                    certificate=cert, residual_norm=rnorm, residual=r)


@main.command()
@common_options
@click.pass_context
def canonical(ctx, config_path, out_path, format_opt, n_opt, tol_opt, kmax_opt):
    """Emit the canonical solution set and the case classification."""
    try:
        cfg, problem, numerics, grid = _load_problem(config_path, n_opt, tol_opt, kmax_opt)
    except ConfigError as err:
        click.echo(f"config: {err}", err=True)
        _diag({"status": "validation_failure", "error": str(err)})
        ctx.exit(EXIT_VALIDATION)
    _validate_or_exit(ctx, problem, grid)
    out_path, _ = output_from_config(cfg, out_path, format_opt)

    cls = classify_case(problem)
    try:
        xs = canonical_set(problem, grid, tol=numerics["tol"], kmax=numerics["kmax"])
    except (IterationLimitError, SeriesDivergenceError) as err:
        click.echo(f"numerical failure: {err}", err=True)
        _diag({"status": "numerical_failure", "error": str(err)})
        ctx.exit(EXIT_NUMERICAL)

    info = {
        "status": "ok",
        "n": list(cls.n),
        "Kj": [sorted(s) for s in cls.Kj],
        "kappa": list(cls.kappa),
        "j0": cls.j0,
        "case_tag": cls.case_tag.value,
    }
    if out_path is None:
        for j, xj in enumerate(xs):
            click.echo(f"# canonical x{j}")
            click.echo(_values_csv(grid, xj), nl=False)
        click.echo(json.dumps(info, sort_keys=True))
    else:
        stem = Path(out_path)
        base = stem.with_suffix("") if stem.suffix == ".csv" else stem
        for j, xj in enumerate(xs):
            Path(f"{base}_x{j}.csv").write_text(_values_csv(grid, xj))
        _json_out(f"{base}_classification.json", info)
    ctx.exit(EXIT_OK)


@main.command()
@click.option("--a", "a_list", multiple=True, help="Parameter a_i (repeatable); 're' or 're,im'.")
@click.option("--b", "b_val", default="1", help="Parameter b; 're' or 're,im'.")
@click.option("--z", "z_list", multiple=True, help="Argument z_i (repeatable); 're' or 're,im'.")
@click.option("--tol", type=float, default=1e-13)
@click.option("--ks", is_flag=True, help="Evaluate the Kilbas-Saigo-type series instead.")
@click.option("--alpha", type=float, default=None, help="(--ks) first parameter.")
@click.option("--beta", type=float, default=None, help="(--ks) second parameter.")
@click.option("--gamma", "gamma_val", default=None, help="(--ks) third parameter; 're' or 're,im'.")
@click.option("--lambda", "lam", type=float, default=None, help="(--ks) numerator shift.")
@click.pass_context
def ml(ctx, a_list, b_val, z_list, tol, ks, alpha, beta, gamma_val, lam):
    """Evaluate the multivariate Mittag-Leffler function (or --ks series);
    prints 're im'."""
    try:
        if ks:
            if alpha is None or beta is None or gamma_val is None or lam is None:
                raise click.UsageError("--ks needs --alpha, --beta, --gamma, --lambda")
            if len(z_list) != 1:
                raise click.UsageError("--ks takes exactly one --z")
            params = KsParams(alpha=alpha, beta=beta, gamma=_parse_complex(gamma_val), lam=lam)
            value = kilbas_saigo(params, _parse_complex(z_list[0]), tol=tol)
        else:
            if not a_list or len(a_list) != len(z_list):
                raise click.UsageError("need matching --a and --z lists")
            params = MlParams(tuple(_parse_complex(a) for a in a_list), _parse_complex(b_val))
            value = ml_multivariate(params, tuple(_parse_complex(z) for z in z_list), tol=tol)
    except SeriesDivergenceError as err:
        click.echo(f"numerical failure: {err}", err=True)
        partial = complex(err.partial)
        _diag({"status": "numerical_failure", "error": str(err),
               "partial": [partial.real, partial.imag], "last_level": err.last_level})
        click.echo(f"{fmt(partial.real)} {fmt(partial.imag)}")
        ctx.exit(EXIT_NUMERICAL)
    except (GammaPoleError, ValueError) as err:
        click.echo(f"invalid parameters: {err}", err=True)
        _diag({"status": "validation_failure", "error": str(err)})
        ctx.exit(EXIT_VALIDATION)
    value = complex(value)
    click.echo(f"{fmt(value.real)} {fmt(value.imag)}")
    ctx.exit(EXIT_OK)


def _parse_complex(text) -> complex:
    if isinstance(text, (int, float)):
        return complex(text)
    parts = str(text).split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise click.UsageError(f"cannot parse complex value {text!r} (use 're' or 're,im')")


def _operator_command(name, doc):
    @main.command(name=name, help=doc)
    @click.option("--f", "f_expr", required=True, help="Input function as an expression in t.")
    @click.option("--alpha", required=True, help="Order; 're' or 're,im'.")
    @click.option("--phi", "phi_expr", default="t", help="Reference function phi(t).")
    @click.option("--n", "n_nodes", type=int, default=1025)
    @click.option("--T", "horizon", type=float, default=1.0)
    @click.option("--out", "out_path", type=str, default=None)
    @click.pass_context
    def _cmd(ctx, f_expr, alpha, phi_expr, n_nodes, horizon, out_path):
        try:
            phi = PhiSpec.from_string(phi_expr)
            fast = ex.parse(f_expr)
            order = _parse_complex(alpha)
            grid = Grid.uniform(n_nodes, horizon)
            f = GridFunction.from_expr(grid, fast)
        except (ExprSyntaxError, ExprDomainError, ValueError) as err:
            click.echo(f"invalid input: {err}", err=True)
            _diag({"status": "validation_failure", "error": str(err)})
            ctx.exit(EXIT_VALIDATION)
        try:
            if name == "fracint":
                out = frac_integral(f, ComplexOrder(order.real, order.imag), phi)
            else:
                out = rl_derivative(f, ComplexOrder(order.real, order.imag), phi)
        except (ValueError, GammaPoleError) as err:
            click.echo(f"invalid input: {err}", err=True)
            _diag({"status": "validation_failure", "error": str(err)})
            ctx.exit(EXIT_VALIDATION)
        _write_text(out_path, _values_csv(grid, out))
        ctx.exit(EXIT_OK)

    return _cmd


fracint = _operator_command("fracint", "Fractional integral of an expression sampled on the grid.")
fracderiv = _operator_command("fracderiv", "Riemann-Liouville derivative of an expression sampled on the grid.")


@main.command(name="residual")
@common_options
@click.option("--x", "x_expr", required=True, help="Candidate solution as an expression in t.")
@click.pass_context
def residual_cmd(ctx, config_path, out_path, format_opt, n_opt, tol_opt, kmax_opt, x_expr):
    """Substitute a candidate solution into the equation and report the defect."""
    try:
        cfg, problem, numerics, grid = _load_problem(config_path, n_opt, tol_opt, kmax_opt)
        xf = GridFunction.from_expr(grid, ex.parse(x_expr))
    except (ConfigError, ExprSyntaxError, ExprDomainError) as err:
        click.echo(f"config: {err}", err=True)
        _diag({"status": "validation_failure", "error": str(err)})
        ctx.exit(EXIT_VALIDATION)
    _validate_or_exit(ctx, problem, grid)
    out_path, _ = output_from_config(cfg, out_path, format_opt)
    r, rnorm = residual(problem, xf, grid)
    _write_text(out_path, _solution_csv(grid, xf, r))
    sidecar = _sidecar_json(out_path)
    payload = {"status": "ok", "residual_norm": rnorm}
    if sidecar:
        _json_out(sidecar, payload)
    else:
        click.echo(json.dumps(payload, sort_keys=True), err=True)
    ctx.exit(EXIT_OK)


@main.command(name="contraction")
@common_options
@click.pass_context
def contraction_cmd(ctx, config_path, out_path, format_opt, n_opt, tol_opt, kmax_opt):
    """Evaluate the contraction certificate for a problem."""
    try:
        cfg, problem, numerics, grid = _load_problem(config_path, n_opt, tol_opt, kmax_opt)
    except ConfigError as err:
        click.echo(f"config: {err}", err=True)
        _diag({"status": "validation_failure", "error": str(err)})
        ctx.exit(EXIT_VALIDATION)
    _validate_or_exit(ctx, problem, grid)
    out_path, _ = output_from_config(cfg, out_path, format_opt)
    cert = check_contraction(problem, grid)
    payload = {
        "status": "ok",
        "nu": cert.nu,
        "C": cert.C,
        "satisfied": cert.satisfied,
        "analytic_nu": cert.analytic_nu,
        "analytic_C": cert.analytic_C,
        "min_margin": float(np.min(cert.per_node_margin.values.real)),
    }
    _json_out(out_path, payload)
    ctx.exit(EXIT_OK)


if __name__ == "__main__":
    main()
