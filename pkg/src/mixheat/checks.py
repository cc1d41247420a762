"""Property suite run by the ``check`` command.

Each check returns a :class:`CheckResult` holding the worst observed
defect and the tolerance it was held to, so reports show how close each
property came to failing and not only whether it passed.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .evolve import solve_ivp, verify_apriori
from .operator import OperatorData, apply_L, bilinear_form, coercivity_margin
from .spectral import (
    Field,
    GridSpec,
    forward_transform,
    fractional_laplacian_half,
    inner,
    inverse_transform,
    norms,
    spectral_l2,
)

__all__ = ["CheckResult", "SPECTRAL_GRIDS", "spectral_checks", "operator_checks", "evolution_checks", "run_property_suite"]

SPECTRAL_GRIDS = tuple(GridSpec(d, n) for d in (1, 2) for n in (16, 64, 256))


class CheckResult(NamedTuple):
    name: str
    passed: bool
    defect: float
    tolerance: float


def _result(name, defect, tol):
    return CheckResult(name, bool(defect <= tol), float(defect), float(tol))


def _random(grid, rng):
    return Field(grid, rng.standard_normal(grid.shape))


def spectral_checks(rng: np.random.Generator, grids=SPECTRAL_GRIDS, s: float = 0.5) -> list[CheckResult]:
    """Round trip, Plancherel, self-adjointness of Lam and Fourier domination."""
    trip = planch = adj = dom = 0.0
    for g in grids:
        u, v = _random(g, rng), _random(g, rng)
        back = inverse_transform(forward_transform(u))
        trip = max(trip, (back - u).max_abs() / u.max_abs())
        l2 = inner(u, u)
        planch = max(planch, abs(l2 - spectral_l2(forward_transform(u)) ** 2) / l2)
        lu, lv = fractional_laplacian_half(u, s), fractional_laplacian_half(v, s)
        adj = max(adj, abs(inner(lu, v) - inner(u, lv)) / np.sqrt(inner(lu, lu) * inner(v, v)))
        nm = norms(u, s)
        dom = max(dom, (nm.hs_seminorm**2 - nm.h1**2) / nm.h1**2)
    return [
        _result("spectral.round_trip", trip, 1e-12),
        _result("spectral.plancherel", planch, 1e-12),
        _result("spectral.fractional_self_adjoint", adj, 1e-10),
        _result("spectral.fourier_domination", max(dom, 0.0), 1e-12),
    ]


def operator_checks(P: OperatorData, rng: np.random.Generator, samples: int = 100) -> list[CheckResult]:
    """Duality with the quadrature form, symmetry and coercivity on random fields."""
    dual = sym = coer = 0.0
    for _ in range(samples):
        u, v = _random(P.grid, rng), _random(P.grid, rng)
        B = bilinear_form(P, u, v)
        scale = np.sqrt(bilinear_form(P, u, u) * bilinear_form(P, v, v))
        dual = max(dual, abs(inner(apply_L(P, u), v) - B) / scale)
        sym = max(sym, abs(bilinear_form(P, v, u) - B) / scale)
        coer = max(coer, -coercivity_margin(P, u) / bilinear_form(P, u, u))
    return [
        _result("operator.duality", dual, 1e-10),
        _result("operator.symmetry", sym, 1e-12),
        _result("operator.coercivity", max(coer, 0.0), 1e-10),
    ]


def evolution_checks(P: OperatorData, u0: Field, run) -> list[CheckResult]:
    """L^2 contraction, energy monotonicity and the a priori bound for one run."""
    result = solve_ivp(P, u0, run)
    l2 = result.trace.l2_sq()
    contraction = float(np.max(np.diff(l2) / l2[:-1])) if len(l2) > 1 and l2[0] > 0 else 0.0
    totals = result.trace.totals()
    rel_bump = float(np.max(np.diff(totals) / totals[:-1])) if len(totals) > 1 and totals[0] > 0 else 0.0
    apriori = verify_apriori(P, result, u0)
    excess = (apriori.lhs_max - apriori.rhs) / apriori.rhs if apriori.rhs > 0 else 0.0
    out = [_result("evolve.l2_contraction", max(contraction, 0.0), 1e-9)]
    if run.scheme == "backward_euler":
        # the weighted energy is only guaranteed to decay under backward Euler
        out.append(_result("evolve.energy_monotone", max(rel_bump, 0.0), 1e-9))
    out.append(_result("evolve.apriori_bound", max(excess, 0.0), 1e-9))
    return out


def run_property_suite(cfg) -> list[CheckResult]:
    """All checks for an :class:`~mixheat.config.ExperimentConfig`, seeded by ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    P, u0 = cfg.problem()
    return spectral_checks(rng, s=cfg.s) + operator_checks(P, rng) + evolution_checks(P, u0, cfg.run)
