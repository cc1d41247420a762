"""Pseudo-spectral solver for mixed local-nonlocal heat flow with rough data.

The main entry points, by layer:

* :mod:`mixheat.spectral` -- periodic grids, fields, transforms, norms
* :mod:`mixheat.coefficients` -- mollifiers, Dirac data, moderateness fits
* :mod:`mixheat.operator` -- the operator, its bilinear form and energy
* :mod:`mixheat.evolve` -- implicit time stepping and energy verification
* :mod:`mixheat.nets` -- epsilon nets: existence, uniqueness, consistency
* :mod:`mixheat.config`, :mod:`mixheat.cli` -- TOML experiments and reports
"""

from .coefficients import (
    CoefficientSpec,
    DiracDerivativeTerm,
    DiracTerm,
    DistributionSpec,
    MollifierSpec,
    SmoothTerm,
    fit_moderateness,
    regularize,
    regularize_coefficient,
)
from .evolve import RunConfig, implicit_step, solve_ivp, verify_apriori, verify_energy_monotonicity
from .nets import NetConfig, consistency_experiment, refinement_study, run_net, uniqueness_experiment
from .operator import OperatorData, apply_L, apriori_constant, bilinear_form, energy
from .spectral import Field, GridSpec, forward_transform, inverse_transform, norms

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "Field",
    "forward_transform",
    "inverse_transform",
    "norms",
    "MollifierSpec",
    "SmoothTerm",
    "DiracTerm",
    "DiracDerivativeTerm",
    "DistributionSpec",
    "CoefficientSpec",
    "regularize",
    "regularize_coefficient",
    "fit_moderateness",
    "OperatorData",
    "apply_L",
    "bilinear_form",
    "energy",
    "apriori_constant",
    "RunConfig",
    "implicit_step",
    "solve_ivp",
    "verify_energy_monotonicity",
    "verify_apriori",
    "NetConfig",
    "run_net",
    "uniqueness_experiment",
    "consistency_experiment",
    "refinement_study",
]
