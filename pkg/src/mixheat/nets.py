"""Families of regularised solves indexed by the mollification parameter.

A net is one solve per epsilon: every datum (the three coefficients and
the initial value) is convolved with the mollifier at scale
``omega(eps)``, the regularised problem is integrated, and scalar
summaries are collected.  The experiments here ask three questions of
such nets:

* existence: do the solution norms grow at most polynomially in
  ``1 / omega``?  (:func:`run_net`)
* uniqueness: does a negligible change of the data give a negligible
  change of the solutions?  (:func:`uniqueness_experiment`)
* consistency: for smooth data, does the net converge to the solution
  with unmollified data, and how fast?  (:func:`consistency_experiment`)

Per-epsilon runs are independent and can be spread over threads; results
are always assembled in epsilon order, so reports do not depend on
scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .coefficients import (
    CoefficientSpec,
    DistributionSpec,
    ModerationReport,
    MollifierSpec,
    coefficient_field,
    evaluate_regular,
    fit_moderateness,
    kernel_profile,
    moderate_order,
    power_bound_holds,
    regularize,
    regularize_coefficient,
)
from .errors import MixHeatError, NetAborted, NotRegularData, UnresolvedKernel
from .evolve import SCHEMES, RunConfig, solve_ivp, verify_apriori
from .operator import OperatorData, apriori_constant
from .spectral import Field, GridSpec, norms

__all__ = [
    "DEFAULT_EPSILONS",
    "PERTURBATIONS",
    "NetConfig",
    "EpsilonResult",
    "NetReport",
    "UniquenessReport",
    "ConsistencyReport",
    "RefinementReport",
    "resolved_epsilons",
    "run_net",
    "uniqueness_experiment",
    "consistency_experiment",
    "refinement_study",
]

DEFAULT_EPSILONS = tuple(2.0**-k for k in range(3, 9))
PERTURBATIONS = ("none", "exp_small", "initial_exp_small", "power")
_Q_MAX = 10


def resolved_epsilons(epsilons, mollifier: MollifierSpec, grid: GridSpec):
    """Split ``epsilons`` into those the grid resolves and those it does not.

    Returns ``(kept, clamped)``; ``clamped`` lists the values whose kernel
    would be narrower than two grid cells.  Other scale problems still
    raise.
    """
    kept, clamped = [], []
    for eps in epsilons:
        try:
            mollifier.check_scale(eps, grid)
        except UnresolvedKernel:
            clamped.append(float(eps))
        else:
            kept.append(float(eps))
    return tuple(kept), tuple(clamped)


@dataclass(frozen=True)
class NetConfig:
    grid: GridSpec
    s: float
    coeff_a: CoefficientSpec
    coeff_b: CoefficientSpec
    coeff_c: CoefficientSpec
    u0_spec: DistributionSpec
    run: RunConfig
    mollifier: MollifierSpec = MollifierSpec()
    epsilons: tuple = DEFAULT_EPSILONS

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps:
            raise ValueError("epsilons must not be empty")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        for e in eps:
            self.mollifier.check_scale(e, self.grid)
        self.u0_spec.validate(self.grid)
        for C in (self.coeff_a, self.coeff_b, self.coeff_c):
            C.singular.validate(self.grid)

    @property
    def is_regular(self) -> bool:
        parts = (self.coeff_a.singular, self.coeff_b.singular, self.coeff_c.singular, self.u0_spec)
        return all(p.is_regular for p in parts)

    def omegas(self) -> np.ndarray:
        return np.array([self.mollifier.omega(e) for e in self.epsilons])


def _regularized_problem(cfg: NetConfig, eps: float):
    grid, m = cfg.grid, cfg.mollifier
    a = regularize_coefficient(cfg.coeff_a, m, eps, grid)
    b = regularize_coefficient(cfg.coeff_b, m, eps, grid)
    c = regularize_coefficient(cfg.coeff_c, m, eps, grid)
    P = OperatorData(a, b, c, cfg.s, cfg.coeff_a.floor, cfg.coeff_b.floor, cfg.coeff_c.floor)
    return P, regularize(cfg.u0_spec, m, eps, grid)


def _map(func, items, threads):
    if threads is None or threads <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _guarded(func):
    def run(eps):
        try:
            return func(eps)
        except MixHeatError as exc:
            return exc
    return run


def _check_failures(epsilons, outcomes):
    failures = {e: f"{type(o).__name__}: {o}" for e, o in zip(epsilons, outcomes) if isinstance(o, Exception)}
    if len(failures) > len(epsilons) / 2:
        raise NetAborted(failures)
    return failures


# -- existence ------------------------------------------------------------------

@dataclass(frozen=True)
class EpsilonResult:
    eps: float
    sup_t_h1_sq: float
    sup_t_hs_sq: float
    apriori_satisfied: bool
    C_eps: float
    apriori_lhs: float
    apriori_rhs: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class NetReport:
    per_eps: tuple
    moderateness: ModerationReport | None
    verdict: str
    failures: dict = field(default_factory=dict)
    clamped_epsilons: tuple = ()

    @property
    def all_apriori_satisfied(self) -> bool:
        return all(r.apriori_satisfied for r in self.per_eps)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "per_eps": [r.to_dict() for r in self.per_eps],
            "moderateness": None if self.moderateness is None else self.moderateness.to_dict(),
            "failures": {f"{e:.17g}": msg for e, msg in self.failures.items()},
            "clamped_epsilons": list(self.clamped_epsilons),
        }


def _sup_norms(snapshots, s):
    h1 = hs = 0.0
    for u in snapshots:
        nm = norms(u, s)
        h1 = max(h1, nm.h1**2)
        hs = max(hs, nm.hs_seminorm**2)
    return h1, hs


def _net_member(cfg: NetConfig, eps: float) -> EpsilonResult:
    P, u0 = _regularized_problem(cfg, eps)
    result = solve_ivp(P, u0, cfg.run)
    h1, hs = _sup_norms(result.snapshots, cfg.s)
    check = verify_apriori(P, result, u0)
    return EpsilonResult(eps, h1, hs, check.satisfied, apriori_constant(P), check.lhs_max, check.rhs)


def run_net(cfg: NetConfig, threads: int | None = None, clamped: tuple = ()) -> NetReport:
    """Solve the regularised problem for every epsilon and fit moderateness.

    Failed members are recorded in ``failures``; the net aborts with
    :class:`NetAborted` only when more than half of them fail.  The verdict
    is ``moderate`` when a finite polynomial bound on the sup-in-time H^1
    norms was found.
    """
    outcomes = _map(_guarded(lambda e: _net_member(cfg, e)), cfg.epsilons, threads)
    failures = _check_failures(cfg.epsilons, outcomes)
    good = [o for o in outcomes if not isinstance(o, Exception)]
    moderation = None
    verdict = "not_moderate"
    if len(good) >= 4:
        eps = [r.eps for r in good]
        sup_h1 = [math.sqrt(r.sup_t_h1_sq) for r in good]
        moderation = fit_moderateness(eps, sup_h1, cfg.mollifier.scale_power)
        if moderation.bound_order is not None:
            verdict = "moderate"
    return NetReport(tuple(good), moderation, verdict, failures, tuple(clamped))


# -- uniqueness -------------------------------------------------------------------

@dataclass(frozen=True)
class UniquenessReport:
    perturbation: str
    epsilons: tuple
    differences: tuple
    per_q: tuple
    conclusive: bool
    base_order: int | None
    perturbed_order: int | None

    @property
    def negligible_up_to_q(self) -> int | None:
        best = None
        for q, ok in self.per_q:
            if not ok:
                break
            best = q
        return best

    def to_dict(self) -> dict:
        return {
            "perturbation": self.perturbation,
            "epsilons": list(self.epsilons),
            "differences": list(self.differences),
            "per_q": [{"q": q, "passes": ok} for q, ok in self.per_q],
            "negligible_up_to_q": self.negligible_up_to_q,
            "conclusive": self.conclusive,
            "base_moderate_order": self.base_order,
            "perturbed_moderate_order": self.perturbed_order,
        }


def _difference_norm(times, snaps_a, snaps_b, s):
    """``sup_t |w|_{L^2} + (int_0^T |w|_{H^1}^2 dt)^(1/2)`` over snapshots."""
    l2, h1_sq = [], []
    for ua, ub in zip(snaps_a, snaps_b):
        nm = norms(ub - ua, s)
        l2.append(nm.l2)
        h1_sq.append(nm.h1**2)
    return max(l2) + math.sqrt(float(np.trapezoid(h1_sq, times)))


def _center_bump(grid: GridSpec) -> Field:
    half = grid.period / 2
    z = [(x - half) / (grid.period / 4) for x in grid.coordinates]
    return Field(grid, np.broadcast_to(kernel_profile("bump", z), grid.shape))


def _shift(P: OperatorData, delta: float) -> OperatorData:
    return replace(P, a=P.a + delta, b=P.b + delta, c=P.c + delta)


def _uniqueness_member(cfg: NetConfig, perturbation: str, eps: float):
    P, u0 = _regularized_problem(cfg, eps)
    w = cfg.mollifier.omega(eps)
    base = solve_ivp(P, u0, cfg.run)
    if perturbation == "initial_exp_small":
        # the scheme is linear in the initial value, so the difference of the
        # two runs is the run started from the perturbation itself; solving it
        # directly avoids cancellation in u - u~ at tiny amplitudes
        diff = solve_ivp(P, math.exp(-1.0 / w) * _center_bump(cfg.grid), cfg.run)
        zero = [Field.zeros(cfg.grid)] * len(diff.snapshots)
        d = _difference_norm(diff.snapshot_times, zero, diff.snapshots, cfg.s)
        other = diff
    else:
        delta = {"none": 0.0, "exp_small": math.exp(-1.0 / w), "power": w}[perturbation]
        other = solve_ivp(_shift(P, delta), u0, cfg.run)
        d = _difference_norm(base.snapshot_times, base.snapshots, other.snapshots, cfg.s)
    if perturbation == "initial_exp_small":
        # perturbed net norms = norms of base + difference
        h1 = max(norms(b + o, cfg.s).h1 for b, o in zip(base.snapshots, other.snapshots))
    else:
        h1 = math.sqrt(_sup_norms(other.snapshots, cfg.s)[0])
    return d, math.sqrt(_sup_norms(base.snapshots, cfg.s)[0]), h1


def uniqueness_experiment(cfg: NetConfig, perturbation: str = "exp_small", threads: int | None = None) -> UniquenessReport:
    """Compare the net with a perturbed copy of itself.

    ``exp_small`` adds ``exp(-1/omega)`` to every coefficient,
    ``initial_exp_small`` adds ``exp(-1/omega)`` times a bump to the initial
    value, ``power`` adds ``omega`` to every coefficient (a control that is
    not negligible) and ``none`` changes nothing.  The difference net is
    tested against ``C_q omega^q`` for q = 0..10.  The verdict is only
    conclusive when both solution nets are themselves moderate.
    """
    if perturbation not in PERTURBATIONS:
        raise ValueError(f"perturbation must be one of {PERTURBATIONS}, got {perturbation!r}")
    if len(cfg.epsilons) < 4:
        raise ValueError("uniqueness needs at least 4 epsilon values")
    rows = _map(lambda e: _uniqueness_member(cfg, perturbation, e), cfg.epsilons, threads)
    diffs = [r[0] for r in rows]
    omegas = cfg.omegas()
    per_q = tuple((q, power_bound_holds(omegas, diffs, q)) for q in range(_Q_MAX + 1))
    base_order = moderate_order(cfg.epsilons, [r[1] for r in rows], cfg.mollifier.scale_power)
    pert_order = moderate_order(cfg.epsilons, [r[2] for r in rows], cfg.mollifier.scale_power)
    conclusive = base_order is not None and pert_order is not None
    return UniquenessReport(perturbation, cfg.epsilons, tuple(diffs), per_q, conclusive, base_order, pert_order)


# -- consistency -------------------------------------------------------------------

@dataclass(frozen=True)
class ConsistencyReport:
    epsilons: tuple
    errors_CL2: tuple
    errors_L2H1: tuple
    fitted_rate: float
    fitted_rate_L2H1: float

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.errors_CL2, self.errors_CL2[1:])) and all(
            b <= a for a, b in zip(self.errors_L2H1, self.errors_L2H1[1:])
        )

    def to_dict(self) -> dict:
        return {
            "epsilons": list(self.epsilons),
            "errors_CL2": list(self.errors_CL2),
            "errors_L2H1": list(self.errors_L2H1),
            "fitted_rate": self.fitted_rate,
            "fitted_rate_L2H1": self.fitted_rate_L2H1,
            "monotone": self.monotone,
        }


def _rate(omegas, errors):
    errors = np.asarray(errors)
    if len(errors) < 2 or np.any(errors <= 0):
        return float("nan")
    return float(np.polyfit(np.log(omegas), np.log(errors), 1)[0])


def consistency_experiment(cfg: NetConfig, mollify: bool = True, threads: int | None = None) -> ConsistencyReport:
    """Errors of the net against the solution with unmollified smooth data.

    The reference is computed on the same grid with the same time steps, so
    the errors isolate the effect of regularisation.  With ``mollify=False``
    every member uses the unmollified data and the errors vanish.
    """
    if not cfg.is_regular:
        raise NotRegularData("consistency needs data without Dirac terms")
    grid = cfg.grid
    ref_P = OperatorData(
        coefficient_field(cfg.coeff_a, grid),
        coefficient_field(cfg.coeff_b, grid),
        coefficient_field(cfg.coeff_c, grid),
        cfg.s,
        cfg.coeff_a.floor,
        cfg.coeff_b.floor,
        cfg.coeff_c.floor,
    )
    u0 = evaluate_regular(cfg.u0_spec, grid)
    ref = solve_ivp(ref_P, u0, cfg.run)

    def member(eps):
        P, v0 = _regularized_problem(cfg, eps) if mollify else (ref_P, u0)
        run = solve_ivp(P, v0, cfg.run)
        l2, h1_sq = [], []
        for ua, ub in zip(ref.snapshots, run.snapshots):
            nm = norms(ub - ua, cfg.s)
            l2.append(nm.l2)
            h1_sq.append(nm.h1**2)
        return max(l2), math.sqrt(float(np.trapezoid(h1_sq, ref.snapshot_times)))

    rows = _map(member, cfg.epsilons, threads)
    e_c, e_h = zip(*rows)
    omegas = cfg.omegas()
    return ConsistencyReport(cfg.epsilons, tuple(e_c), tuple(e_h), _rate(omegas, e_c), _rate(omegas, e_h))


# -- refinement ----------------------------------------------------------------------

@dataclass(frozen=True)
class RefinementReport:
    dts: tuple
    temporal_errors: dict
    temporal_orders: dict
    spatial_errors: dict

    def to_dict(self) -> dict:
        return {
            "dts": list(self.dts),
            "temporal_errors": {k: list(v) for k, v in self.temporal_errors.items()},
            "temporal_orders": dict(self.temporal_orders),
            "spatial_errors": {str(k): v for k, v in self.spatial_errors.items()},
        }


def _mode_factor(lam, dt, steps, scheme):
    if scheme == "backward_euler":
        return (1 + lam * dt) ** -steps
    return ((1 - lam * dt / 2) / (1 + lam * dt / 2)) ** steps


def refinement_study(
    a0: float = 1.0,
    b0: float = 1.0,
    c0: float = 1.0,
    s: float = 0.5,
    mode: int = 1,
    T: float = 1.0,
    dts=(0.1, 0.05, 0.025, 0.0125),
    ns=(16, 32, 64),
    period: float = 2 * math.pi,
    schemes=SCHEMES,
) -> RefinementReport:
    """Convergence study on the single mode ``cos(k x)``, ``k = 2 pi mode / L``.

    Temporal errors are measured in L^2 against ``exp(-lambda T) cos(k x)``
    on the coarsest grid in ``ns`` and fitted to a log-log slope per scheme.
    Spatial errors compare the computed amplitude after ``T`` on each grid
    with the scalar recursion of the scheme, which isolates the spatial
    discretisation (exact for a represented mode) from the time error.
    """
    k = 2 * math.pi * mode / period
    lam = a0 * k**2 + b0 * k ** (2 * s) + c0
    exact = math.exp(-lam * T)
    temporal_errors, orders = {}, {}
    g = GridSpec(1, min(ns), period)
    P = OperatorData.constant(g, a0, b0, c0, s)
    u0 = Field.from_function(g, lambda x: np.cos(k * x))
    for scheme in schemes:
        errs = []
        for dt in dts:
            final = solve_ivp(P, u0, RunConfig(T=T, dt=dt, scheme=scheme)).final
            errs.append(norms(final - exact * u0, s).l2)
        temporal_errors[scheme] = tuple(errs)
        orders[scheme] = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    spatial = {}
    dt = dts[-1]
    for n in ns:
        g = GridSpec(1, n, period)
        P = OperatorData.constant(g, a0, b0, c0, s)
        u0 = Field.from_function(g, lambda x: np.cos(k * x))
        result = solve_ivp(P, u0, RunConfig(T=T, dt=dt))
        factor = math.prod(_mode_factor(lam, h, 1, "backward_euler") for h in np.diff(result.trace.times))
        spatial[n] = float(np.max(np.abs(result.final.values - factor * u0.values)) / factor)
    return RefinementReport(tuple(dts), temporal_errors, orders, spatial)
