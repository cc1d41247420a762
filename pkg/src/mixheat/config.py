"""Experiment configuration files (TOML).

Grammar, with defaults shown::

    command = "solve"              # solve | net | uniqueness | consistency | check
    seed = 0
    output_dir = "."

    [grid]
    dimension = 1
    points = 64                    # power of two >= 16
    period = 6.283185307179586

    [operator]
    s = 0.5
    dealias = false

    [operator.a]                   # likewise [operator.b], [operator.c]
    floor = 1.0
    smooth = ["1 + sin(x)"]        # expressions, each nonnegative on the grid
    dirac = [{location = [3.0], weight = 1.0}]

    [initial]
    smooth = ["cos(x)"]
    dirac = []
    dirac_derivative = [{location = [3.0], weight = 1.0, order = 1, axis = 0}]

    [mollifier]
    profile = "bump"               # bump | hat | truncated_gaussian
    scale_power = 1.0
    epsilon = 0.125                # used by `solve` when data are singular

    [run]
    T = 1.0
    dt = 0.01
    scheme = "backward_euler"      # or crank_nicolson
    cg_rel_tol = 1e-10
    cg_max_iter = 500
    snapshot_stride = 1

    [net]
    epsilons = [0.125, 0.0625]     # omitted: 2^-3 .. 2^-8, clamped to the grid
    perturbation = "exp_small"     # uniqueness only

Expressions use the language of :mod:`mixheat.expr`.  Every problem found
is reported, each prefixed with the dotted path of the offending field.
"""

from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import dataclass, field

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .coefficients import (
    CoefficientSpec,
    DiracDerivativeTerm,
    DiracTerm,
    DistributionSpec,
    MollifierSpec,
    SmoothTerm,
    coefficient_field,
    evaluate_regular,
    regularize,
    regularize_coefficient,
)
from .errors import ParseError, ValidationError
from .evolve import SCHEMES, RunConfig
from .expr import Expression
from .operator import OperatorData
from .nets import DEFAULT_EPSILONS, PERTURBATIONS, NetConfig, resolved_epsilons
from .spectral import GridSpec

__all__ = ["COMMANDS", "ExperimentConfig", "parse_config", "emit_config", "config_dict", "default_config", "run_id"]

COMMANDS = ("solve", "net", "uniqueness", "consistency", "check")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    grid: GridSpec
    s: float
    coeff_a: CoefficientSpec
    coeff_b: CoefficientSpec
    coeff_c: CoefficientSpec
    u0: DistributionSpec
    run: RunConfig
    mollifier: MollifierSpec = MollifierSpec()
    dealias: bool = False
    epsilon: float | None = None
    epsilons: tuple | None = None
    perturbation: str = "exp_small"
    output_dir: str = "."
    seed: int = 0
    clamped_epsilons: tuple = field(default=(), compare=False)

    @property
    def is_regular(self) -> bool:
        parts = (self.coeff_a.singular, self.coeff_b.singular, self.coeff_c.singular, self.u0)
        return all(p.is_regular for p in parts)

    def problem(self):
        """Operator data and initial value for a single solve.

        Regular data are sampled directly unless ``epsilon`` is set; otherwise
        everything is mollified at ``epsilon`` (or the coarsest net epsilon).
        """
        grid, coeffs = self.grid, (self.coeff_a, self.coeff_b, self.coeff_c)
        if self.is_regular and self.epsilon is None:
            a, b, c = (coefficient_field(C, grid) for C in coeffs)
            u0 = evaluate_regular(self.u0, grid)
        else:
            eps = self.epsilon if self.epsilon is not None else max(self.net_config().epsilons)
            a, b, c = (regularize_coefficient(C, self.mollifier, eps, grid) for C in coeffs)
            u0 = regularize(self.u0, self.mollifier, eps, grid)
        floors = (C.floor for C in coeffs)
        return OperatorData(a, b, c, self.s, *floors, self.dealias), u0

    def net_config(self) -> NetConfig:
        eps = self.epsilons
        if eps is None:
            eps, _ = resolved_epsilons(DEFAULT_EPSILONS, self.mollifier, self.grid)
        return NetConfig(
            self.grid, self.s, self.coeff_a, self.coeff_b, self.coeff_c, self.u0, self.run, self.mollifier, eps
        )


class _Collector:
    def __init__(self):
        self.errors = []

    def add(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def attempt(self, path, func, *args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ValueError, TypeError) as exc:
            self.add(path, f"{type(exc).__name__}: {exc}" if type(exc).__module__ != "builtins" else str(exc))
            return None


def _table(doc, key, errs, path=None):
    value = doc.get(key, {})
    if not isinstance(value, dict):
        errs.add(path or key, "must be a table")
        return {}
    return value


def _unknown(table, allowed, path, errs):
    for key in table:
        if key not in allowed:
            errs.add(f"{path}.{key}" if path else key, "unknown key")


def _number(table, key, default, path, errs, kind=float):
    value = table.get(key, default)
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is bool:
        ok = isinstance(value, bool)
    else:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if not ok:
        errs.add(f"{path}.{key}" if path else key, f"must be {kind.__name__}, got {value!r}")
        return None
    return kind(value) if kind is not bool else value


def _terms(table, path, errs, grid, allow_derivatives):
    terms, paths = [], []
    _unknown(table, ("smooth", "dirac", "dirac_derivative", "floor"), path, errs)
    for i, text in enumerate(table.get("smooth", [])):
        expr = errs.attempt(f"{path}.smooth[{i}]", Expression, text)
        if expr is not None:
            terms.append(SmoothTerm(expr))
            paths.append(f"{path}.smooth[{i}]")
    for i, item in enumerate(table.get("dirac", [])):
        p = f"{path}.dirac[{i}]"
        if not isinstance(item, dict):
            errs.add(p, "must be a table")
            continue
        _unknown(item, ("location", "weight"), p, errs)
        term = errs.attempt(p, DiracTerm, item.get("location", ()), item.get("weight", 1.0))
        if term is not None:
            terms.append(term)
            paths.append(p)
    derivs = table.get("dirac_derivative", [])
    if derivs and not allow_derivatives:
        errs.add(f"{path}.dirac_derivative", "coefficients must be nonnegative; derivative terms are not")
        derivs = []
    for i, item in enumerate(derivs):
        p = f"{path}.dirac_derivative[{i}]"
        if not isinstance(item, dict):
            errs.add(p, "must be a table")
            continue
        _unknown(item, ("location", "weight", "order", "axis"), p, errs)
        term = errs.attempt(
            p,
            DiracDerivativeTerm,
            item.get("location", ()),
            item.get("weight", 1.0),
            item.get("order", 1),
            item.get("axis", 0),
        )
        if term is not None:
            terms.append(term)
            paths.append(p)
    if grid is not None:
        # locations, axes and expression variables against the grid
        for p, t in zip(paths, terms):
            errs.attempt(p, DistributionSpec((t,)).validate, grid)
    return tuple(terms)


def _coefficient(table, path, errs, grid):
    floor = _number(table, "floor", 1.0, path, errs)
    terms = _terms(table, path, errs, grid, allow_derivatives=False)
    diracs = [t for t in terms if isinstance(t, DiracTerm)]
    for i, t in enumerate(diracs):
        if t.weight < 0:
            errs.add(f"{path}.dirac[{i}].weight", "must be nonnegative in a coefficient")
    smooth = [t for t in terms if isinstance(t, SmoothTerm)]
    if grid is not None and smooth:
        total = errs.attempt(f"{path}.smooth", lambda: sum(t.expr.evaluate(grid) for t in smooth))
        if total is not None and float(np.min(total)) < 0:
            errs.add(f"{path}.smooth", f"PositivityViolation: sum dips to {float(np.min(total)):.6g} on the grid")
    if floor is None:
        return None
    try:
        singular = DistributionSpec(terms, True)
    except ValueError:
        return None
    return errs.attempt(f"{path}.floor", CoefficientSpec, floor, singular)


def parse_config(text: str, command: str | None = None) -> ExperimentConfig:
    """Parse and validate a TOML experiment description.

    ``command`` overrides the file's ``command`` key.  Raises
    :class:`ParseError` for malformed TOML and :class:`ValidationError`
    listing every invalid field otherwise.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError([f"line {getattr(exc, 'lineno', '?')}: {exc}"]) from None
    errs = _Collector()
    _unknown(
        doc, ("command", "seed", "output_dir", "grid", "operator", "initial", "mollifier", "run", "net"), "", errs
    )
    cmd = command or doc.get("command", "solve")
    if cmd not in COMMANDS:
        errs.add("command", f"must be one of {COMMANDS}, got {cmd!r}")
    seed = _number(doc, "seed", 0, "", errs, int)
    output_dir = doc.get("output_dir", ".")
    if not isinstance(output_dir, str):
        errs.add("output_dir", "must be a string")

    g = _table(doc, "grid", errs)
    _unknown(g, ("dimension", "points", "period"), "grid", errs)
    dims = (_number(g, "dimension", 1, "grid", errs, int), _number(g, "points", 64, "grid", errs, int))
    period = _number(g, "period", 2 * math.pi, "grid", errs)
    grid = None
    if None not in dims and period is not None:
        grid = errs.attempt("grid", GridSpec, dims[0], dims[1], period)

    op = _table(doc, "operator", errs)
    _unknown(op, ("s", "dealias", "a", "b", "c"), "operator", errs)
    s = _number(op, "s", 0.5, "operator", errs)
    if s is not None and not 0 < s < 1:
        errs.add("operator.s", f"must lie in (0, 1), got {s}")
    dealias = _number(op, "dealias", False, "operator", errs, bool)
    coeffs = [_coefficient(_table(op, k, errs, f"operator.{k}"), f"operator.{k}", errs, grid) for k in "abc"]

    init = _table(doc, "initial", errs)
    u0_terms = _terms(init, "initial", errs, grid, allow_derivatives=True)
    if not init:
        u0_terms = (SmoothTerm("cos(x)"),)
    u0 = DistributionSpec(u0_terms)

    mt = _table(doc, "mollifier", errs)
    _unknown(mt, ("profile", "scale_power", "epsilon"), "mollifier", errs)
    mollifier = errs.attempt(
        "mollifier", MollifierSpec, mt.get("profile", "bump"), _number(mt, "scale_power", 1.0, "mollifier", errs) or 1.0
    )
    epsilon = None
    if "epsilon" in mt:
        epsilon = _number(mt, "epsilon", None, "mollifier", errs)
        if epsilon is not None and mollifier is not None and grid is not None:
            errs.attempt("mollifier.epsilon", mollifier.check_scale, epsilon, grid)

    rt = _table(doc, "run", errs)
    before = len(errs.errors)
    _unknown(rt, ("T", "dt", "scheme", "cg_rel_tol", "cg_max_iter", "snapshot_stride"), "run", errs)
    fields = dict(
        T=_number(rt, "T", 1.0, "run", errs),
        dt=_number(rt, "dt", 0.01, "run", errs),
        scheme=rt.get("scheme", "backward_euler"),
        cg_rel_tol=_number(rt, "cg_rel_tol", 1e-10, "run", errs),
        cg_max_iter=_number(rt, "cg_max_iter", 500, "run", errs, int),
        snapshot_stride=_number(rt, "snapshot_stride", 1, "run", errs, int),
    )
    rules = (
        ("T", lambda v: v > 0, "must be positive"),
        ("dt", lambda v: v > 0, "must be positive"),
        ("scheme", lambda v: v in SCHEMES, f"must be one of {SCHEMES}"),
        ("cg_rel_tol", lambda v: 0 < v <= 1e-4, "must lie in (0, 1e-4]"),
        ("cg_max_iter", lambda v: v >= 1, "must be at least 1"),
        ("snapshot_stride", lambda v: v >= 1, "must be at least 1"),
    )
    for key, ok, msg in rules:
        if fields[key] is not None and not ok(fields[key]):
            errs.add(f"run.{key}", f"{msg}, got {fields[key]!r}")
    if fields["T"] and fields["dt"] and 0 < fields["T"] < fields["dt"]:
        errs.add("run.dt", f"must not exceed T = {fields['T']}")
    run = RunConfig(**fields) if len(errs.errors) == before else None

    nt = _table(doc, "net", errs)
    _unknown(nt, ("epsilons", "perturbation"), "net", errs)
    epsilons, clamped = None, ()
    if "epsilons" in nt:
        raw = nt["epsilons"]
        if not isinstance(raw, list) or not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in raw):
            errs.add("net.epsilons", "must be a list of numbers")
        else:
            epsilons = tuple(float(e) for e in raw)
            if not epsilons:
                errs.add("net.epsilons", "must not be empty")
            if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
                errs.add("net.epsilons", "must be strictly decreasing")
            if mollifier is not None and grid is not None:
                for i, e in enumerate(epsilons):
                    errs.attempt(f"net.epsilons[{i}]", mollifier.check_scale, e, grid)
    elif mollifier is not None and grid is not None and cmd in ("net", "uniqueness", "consistency"):
        kept, clamped = errs.attempt("net.epsilons", resolved_epsilons, DEFAULT_EPSILONS, mollifier, grid) or ((), ())
        if len(kept) < 4 and cmd != "consistency":
            errs.add("net.epsilons", f"only {len(kept)} default epsilons are resolved by the grid; need 4")
    perturbation = nt.get("perturbation", "exp_small")
    if perturbation not in PERTURBATIONS:
        errs.add("net.perturbation", f"must be one of {PERTURBATIONS}, got {perturbation!r}")
    if cmd in ("uniqueness", "net") and epsilons is not None and len(epsilons) < 4:
        errs.add("net.epsilons", "need at least 4 values")

    if not errs.errors and cmd == "consistency":
        if not all(c.singular.is_regular for c in coeffs) or not u0.is_regular:
            errs.add("operator", "NotRegularData: consistency needs data without Dirac terms")
    if not errs.errors and cmd == "solve" and epsilon is None:
        if not all(c.singular.is_regular for c in coeffs) or not u0.is_regular:
            errs.add("mollifier.epsilon", "required by solve when the data have Dirac terms")

    if errs.errors:
        raise ValidationError(errs.errors)
    return ExperimentConfig(
        command=cmd,
        grid=grid,
        s=s,
        coeff_a=coeffs[0],
        coeff_b=coeffs[1],
        coeff_c=coeffs[2],
        u0=u0,
        run=run,
        mollifier=mollifier,
        dealias=dealias,
        epsilon=epsilon,
        epsilons=epsilons,
        perturbation=perturbation,
        output_dir=output_dir,
        seed=seed,
        clamped_epsilons=tuple(clamped),
    )


def _emit_terms(D: DistributionSpec) -> dict:
    out = {}
    smooth = [t.expr.text for t in D.terms if isinstance(t, SmoothTerm)]
    dirac = [{"location": list(t.location), "weight": t.weight} for t in D.terms if isinstance(t, DiracTerm)]
    deriv = [
        {"location": list(t.location), "weight": t.weight, "order": t.order, "axis": t.axis}
        for t in D.terms
        if isinstance(t, DiracDerivativeTerm)
    ]
    if smooth:
        out["smooth"] = smooth
    if dirac:
        out["dirac"] = dirac
    if deriv:
        out["dirac_derivative"] = deriv
    return out


def config_dict(cfg: ExperimentConfig, with_output: bool = True) -> dict:
    doc = {"command": cfg.command, "seed": cfg.seed}
    if with_output:
        doc["output_dir"] = cfg.output_dir
    doc["grid"] = {"dimension": cfg.grid.dimension, "points": cfg.grid.points, "period": cfg.grid.period}
    op = {"s": cfg.s, "dealias": cfg.dealias}
    for k, C in zip("abc", (cfg.coeff_a, cfg.coeff_b, cfg.coeff_c)):
        op[k] = {"floor": C.floor, **_emit_terms(C.singular)}
    doc["operator"] = op
    doc["initial"] = _emit_terms(cfg.u0) or {"smooth": []}
    mol = {"profile": cfg.mollifier.profile, "scale_power": cfg.mollifier.scale_power}
    if cfg.epsilon is not None:
        mol["epsilon"] = cfg.epsilon
    doc["mollifier"] = mol
    r = cfg.run
    doc["run"] = {
        "T": r.T,
        "dt": r.dt,
        "scheme": r.scheme,
        "cg_rel_tol": r.cg_rel_tol,
        "cg_max_iter": r.cg_max_iter,
        "snapshot_stride": r.snapshot_stride,
    }
    net = {"perturbation": cfg.perturbation}
    if cfg.epsilons is not None:
        net["epsilons"] = list(cfg.epsilons)
    doc["net"] = net
    return doc


def emit_config(cfg: ExperimentConfig) -> str:
    """Canonical TOML text; ``parse_config(emit_config(c)) == c``."""
    return tomli_w.dumps(config_dict(cfg))


def run_id(cfg: ExperimentConfig) -> str:
    """Short hash of the canonical config, independent of ``output_dir``."""
    text = tomli_w.dumps(config_dict(cfg, with_output=False))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


DEFAULT_TEXT = """\
command = "check"
seed = 0

[grid]
dimension = 1
points = 32

[operator]
s = 0.5

[operator.a]
floor = 1.0
smooth = ["1 + sin(x)"]

[operator.b]
floor = 1.0
smooth = ["0.5 + 0.5*cos(x)"]

[operator.c]
floor = 1.0
smooth = ["0.5*cos(x)**2"]

[initial]
smooth = ["cos(x) + 0.5*sin(2*x)"]

[run]
T = 0.5
dt = 0.05
"""


def default_config(command: str = "check") -> ExperimentConfig:
    return parse_config(DEFAULT_TEXT, command=command)
