"""Distributional data, Friedrichs mollifiers and regularising nets.

A coefficient is described as a positive floor plus a nonnegative singular
part built from smooth closed-form expressions, Dirac masses and
derivatives of Dirac masses.  For a scale ``eps`` the singular part is
convolved with ``psi_w(x) = w**-d psi(x / w)`` where ``w = eps**p``.
Dirac terms are regularised by translating (and differentiating) the
closed-form kernel, never by convolving a grid delta.

All mollifier profiles are radial with unit support radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    InsufficientSamples,
    KernelTooWide,
    NotRegularData,
    PositivityViolation,
    UnresolvedKernel,
)
from .expr import Expression
from .spectral import Field, GridSpec

__all__ = [
    "PROFILES",
    "MollifierSpec",
    "SmoothTerm",
    "DiracTerm",
    "DiracDerivativeTerm",
    "DistributionSpec",
    "CoefficientSpec",
    "ModerationReport",
    "kernel_profile",
    "sample_mollifier",
    "regularize",
    "regularize_coefficient",
    "evaluate_regular",
    "coefficient_field",
    "power_bound_holds",
    "fit_moderateness",
]

PROFILES = ("bump", "hat", "truncated_gaussian")
_GAUSS_SIGMA = 0.25  # support radius 4 sigma = 1
_MAX_Q = 10


# -- kernel profiles ----------------------------------------------------------
#
# Each profile is g(q) with q = |z|^2 on the unit ball; the kernel is
# psi(z) = g(|z|^2) / Z_d.  Derivatives along an axis follow from the chain
# rule: d/dz_j g = 2 z_j g'(q), d2/dz_j2 g = 2 g'(q) + 4 z_j^2 g''(q).

def _bump(q, order):
    out = np.zeros_like(q)
    t = np.zeros_like(q)
    inside = q < 1.0
    t[inside] = 1.0 / (1.0 - q[inside])
    live = inside & (t < 700.0)
    g = np.exp(-t[live])
    if order == 0:
        out[live] = g
    elif order == 1:
        out[live] = -g * t[live] ** 2
    else:
        out[live] = g * (2.0 * q[live] - 1.0) * t[live] ** 4
    return out


def _hat(q, order):
    out = np.zeros_like(q)
    inside = q < 1.0
    r = np.sqrt(q[inside])
    if order == 0:
        out[inside] = 1.0 - r
    elif order == 1:
        with np.errstate(divide="ignore"):
            out[inside] = np.where(r > 0, -0.5 / np.where(r > 0, r, 1.0), 0.0)
    else:
        raise ValueError("the hat kernel is only Lipschitz; second derivatives are not functions")
    return out


def _gauss(q, order):
    a = 1.0 / (2.0 * _GAUSS_SIGMA**2)
    g = np.where(q < 1.0, np.exp(-a * q), 0.0)
    return g * (-a) ** order


_G = {"bump": _bump, "hat": _hat, "truncated_gaussian": _gauss}


def _leggauss_integral(f, a, b, nodes=400):
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (b - a) * x + 0.5 * (b + a)
    return 0.5 * (b - a) * float(np.sum(w * f(t)))


def _mass(profile, d):
    """Integral of the unnormalised profile over the unit ball in R^d."""
    if profile == "hat":
        return 1.0 if d == 1 else math.pi / 3.0
    if profile == "truncated_gaussian":
        s = _GAUSS_SIGMA
        if d == 1:
            return s * math.sqrt(2 * math.pi) * math.erf(1.0 / (s * math.sqrt(2)))
        return 2 * math.pi * s**2 * (1.0 - math.exp(-1.0 / (2 * s**2)))
    if d == 1:
        return 2.0 * _leggauss_integral(lambda r: _bump(r * r, 0), 0.0, 1.0)
    return 2 * math.pi * _leggauss_integral(lambda r: r * _bump(r * r, 0), 0.0, 1.0)


_MASS = {(p, d): _mass(p, d) for p in PROFILES for d in (1, 2)}


def kernel_profile(profile: str, z: Sequence[np.ndarray], order: int = 0, axis: int = 0) -> np.ndarray:
    """Unit-scale normalised kernel ``psi`` or its derivative along ``axis``.

    ``z`` holds one (broadcastable) coordinate array per dimension.
    """
    if profile not in _G:
        raise ValueError(f"unknown mollifier profile {profile!r}")
    if order not in (0, 1, 2):
        raise ValueError(f"kernel derivative order must be 0, 1 or 2, got {order}")
    g = _G[profile]
    z = np.broadcast_arrays(*z)
    q = sum(zj**2 for zj in z)
    zj = z[axis]
    if order == 0:
        val = g(q, 0)
    elif order == 1:
        val = 2.0 * zj * g(q, 1)
    else:
        val = 2.0 * g(q, 1) + 4.0 * zj**2 * g(q, 2)
    return val / _MASS[profile, len(z)]


@dataclass(frozen=True)
class MollifierSpec:
    profile: str = "bump"
    scale_power: float = 1.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        if not self.scale_power > 0:
            raise ValueError(f"scale_power must be positive, got {self.scale_power}")

    def omega(self, eps: float) -> float:
        return float(eps) ** self.scale_power

    def check_scale(self, eps: float, grid: GridSpec) -> float:
        """Return ``omega(eps)`` after checking the kernel fits and is resolved."""
        if not 0 < eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {eps}")
        w = self.omega(eps)
        if w >= grid.period / 2:
            raise KernelTooWide(
                f"kernel radius {w:.4g} (eps={eps:g}) must be below half the box {grid.period / 2:.4g}"
            )
        if w < 2 * grid.spacing:
            raise UnresolvedKernel(
                f"kernel radius {w:.4g} (eps={eps:g}) is below two grid cells (2h = {2 * grid.spacing:.4g})"
            )
        return w


# -- distributions ------------------------------------------------------------

@dataclass(frozen=True)
class SmoothTerm:
    expr: Expression

    def __post_init__(self):
        if not isinstance(self.expr, Expression):
            object.__setattr__(self, "expr", Expression(self.expr))


@dataclass(frozen=True)
class DiracTerm:
    location: tuple
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "location", tuple(float(v) for v in np.atleast_1d(self.location)))
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True)
class DiracDerivativeTerm:
    """The functional ``phi -> weight * d^order phi / dx_axis^order (location)``."""

    location: tuple
    weight: float = 1.0
    order: int = 1
    axis: int = 0

    def __post_init__(self):
        object.__setattr__(self, "location", tuple(float(v) for v in np.atleast_1d(self.location)))
        object.__setattr__(self, "weight", float(self.weight))
        if self.order not in (1, 2):
            raise ValueError(f"delta derivative order must be 1 or 2, got {self.order}")


Term = Union[SmoothTerm, DiracTerm, DiracDerivativeTerm]


@dataclass(frozen=True)
class DistributionSpec:
    """Finite sum of smooth terms, Dirac masses and Dirac derivatives.

    ``nonnegative`` declares the distribution nonnegative.  The declaration
    is rejected when it is visibly false (negative Dirac weights or any
    derivative term); the sign of smooth terms is checked when sampled.
    """

    terms: tuple = ()
    nonnegative: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not isinstance(t, (SmoothTerm, DiracTerm, DiracDerivativeTerm)):
                raise TypeError(f"unsupported term {t!r}")
        if self.nonnegative:
            for t in self.terms:
                if isinstance(t, DiracDerivativeTerm):
                    raise ValueError("a distribution with delta-derivative terms is not nonnegative")
                if isinstance(t, DiracTerm) and t.weight < 0:
                    raise ValueError(f"negative Dirac weight {t.weight} in a nonnegative distribution")

    @property
    def is_regular(self) -> bool:
        return all(isinstance(t, SmoothTerm) for t in self.terms)

    def validate(self, grid: GridSpec) -> None:
        for t in self.terms:
            if isinstance(t, SmoothTerm):
                if grid.dimension == 1 and t.expr.uses("y"):
                    raise ValueError(f"expression {t.expr.text!r} uses y on a 1-D grid")
                continue
            if len(t.location) != grid.dimension:
                raise ValueError(f"location {t.location} does not match dimension {grid.dimension}")
            if not all(0 < v < grid.period for v in t.location):
                raise ValueError(f"location {t.location} must lie strictly inside [0, {grid.period:g})")
            if isinstance(t, DiracDerivativeTerm) and t.axis >= grid.dimension:
                raise ValueError(f"derivative axis {t.axis} out of range")

    def __add__(self, other):
        return DistributionSpec(self.terms + other.terms, self.nonnegative and other.nonnegative)


@dataclass(frozen=True)
class CoefficientSpec:
    floor: float
    singular: DistributionSpec = field(default_factory=lambda: DistributionSpec((), True))

    def __post_init__(self):
        if not self.floor > 0:
            raise ValueError(f"coefficient floor must be positive, got {self.floor}")
        if not self.singular.nonnegative:
            raise ValueError("the singular part of a coefficient must be declared nonnegative")


# -- sampling and regularisation ----------------------------------------------

def _displacement(grid, center):
    # minimum-image displacement of every grid point from center
    L = grid.period
    out = []
    for xj, cj in zip(grid.coordinates, center):
        out.append((xj - cj + L / 2) % L - L / 2)
    return out


def _kernel_at(m, w, grid, center, order=0, axis=0):
    z = [dj / w for dj in _displacement(grid, center)]
    val = kernel_profile(m.profile, z, order, axis) * w ** (-grid.dimension - order)
    return np.broadcast_to(val, grid.shape)


def _unit_mass(v, grid):
    return v / (np.sum(v) * grid.cell_volume)


def sample_mollifier(m: MollifierSpec, eps: float, grid: GridSpec) -> Field:
    """Kernel ``psi_w`` centred at the origin, renormalised to unit discrete mass."""
    w = m.check_scale(eps, grid)
    v = _kernel_at(m, w, grid, (0.0,) * grid.dimension)
    return Field(grid, _unit_mass(v, grid))


def _smooth_sum(D, grid):
    acc = np.zeros(grid.shape)
    for t in D.terms:
        if isinstance(t, SmoothTerm):
            acc = acc + t.expr.evaluate(grid)
    return acc


def regularize(D: DistributionSpec, m: MollifierSpec, eps: float, grid: GridSpec) -> Field:
    """Convolution of ``D`` with ``psi_{omega(eps)}`` sampled on ``grid``."""
    w = m.check_scale(eps, grid)
    D.validate(grid)
    out = np.zeros(grid.shape)
    if any(isinstance(t, SmoothTerm) for t in D.terms):
        kernel = _unit_mass(_kernel_at(m, w, grid, (0.0,) * grid.dimension), grid)
        f = _smooth_sum(D, grid)
        axes = tuple(range(grid.dimension))
        conv = np.fft.irfftn(np.fft.rfftn(f) * np.fft.rfftn(kernel), s=grid.shape, axes=axes)
        out += conv * grid.cell_volume
    for t in D.terms:
        if isinstance(t, DiracTerm):
            out += t.weight * _unit_mass(_kernel_at(m, w, grid, t.location), grid)
        elif isinstance(t, DiracDerivativeTerm):
            sign = (-1.0) ** t.order
            out += sign * t.weight * _kernel_at(m, w, grid, t.location, t.order, t.axis)
    return Field(grid, out)


def evaluate_regular(D: DistributionSpec, grid: GridSpec) -> Field:
    """Sample a purely smooth distribution directly, without mollification."""
    if not D.is_regular:
        raise NotRegularData("distribution has singular (Dirac) terms")
    D.validate(grid)
    return Field(grid, _smooth_sum(D, grid))


def _check_floor(values, floor, what):
    lo = float(np.min(values))
    if lo < floor - 1e-9:
        raise PositivityViolation(f"{what} dips to {lo:.6g}, below its floor {floor:g}")


def regularize_coefficient(C: CoefficientSpec, m: MollifierSpec, eps: float, grid: GridSpec) -> Field:
    out = C.floor + regularize(C.singular, m, eps, grid)
    _check_floor(out.values, C.floor, "regularised coefficient")
    return out


def coefficient_field(C: CoefficientSpec, grid: GridSpec) -> Field:
    """Unmollified coefficient; only defined when the singular part is smooth."""
    out = C.floor + evaluate_regular(C.singular, grid)
    _check_floor(out.values, C.floor, "coefficient")
    return out


# -- moderateness and negligibility -------------------------------------------

@dataclass(frozen=True)
class ModerationReport:
    epsilons: tuple
    norms: tuple
    fitted_exponent: float
    fit_quality: float
    negligible_up_to_q: int | None
    bound_order: int | None = None

    def to_dict(self) -> dict:
        return {
            "epsilons": list(self.epsilons),
            "norms": list(self.norms),
            "fitted_exponent": self.fitted_exponent,
            "fit_quality": self.fit_quality,
            "negligible_up_to_q": self.negligible_up_to_q,
            "bound_order": self.bound_order,
        }


def power_bound_holds(omegas, norms, q: float, factor: float = 10.0) -> bool:
    """Whether ``norms <= C * omega**q`` with a constant fixed by the coarsest sample.

    The ratios ``norm / omega**q`` are formed along the (decreasing) omega
    sequence; the bound is accepted when none of them exceeds ``factor``
    times the ratio at the largest omega, i.e. the required constant does
    not deteriorate as ``omega -> 0``.  An identically zero net passes.
    """
    omegas = np.asarray(omegas, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if np.all(norms == 0):
        return True
    with np.errstate(over="ignore"):
        r = norms / omegas**q
    if not (r[0] > 0 and np.isfinite(r[0])):
        return False
    return bool(np.all(r <= factor * r[0]))


def _check_samples(epsilons, norms, allow_zero=False):
    eps = np.asarray(epsilons, dtype=float)
    nrm = np.asarray(norms, dtype=float)
    if eps.size < 4 or nrm.size != eps.size:
        raise InsufficientSamples(f"need at least 4 aligned samples, got {eps.size} and {nrm.size}")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be strictly decreasing")
    if np.any(nrm < 0) or (not allow_zero and np.any(nrm <= 0)):
        raise ValueError("norms must be positive")
    return eps, nrm


def negligibility_order(epsilons, norms, scale_power: float = 1.0, q_max: int = _MAX_Q) -> int | None:
    """Largest ``q <= q_max`` such that every order ``0..q`` bound holds."""
    eps, nrm = _check_samples(epsilons, norms, allow_zero=True)
    omegas = eps**scale_power
    best = None
    for q in range(q_max + 1):
        if not power_bound_holds(omegas, nrm, q):
            break
        best = q
    return best


def moderate_order(epsilons, norms, scale_power: float = 1.0, n_max: int = 20) -> int | None:
    """Smallest integer ``N >= 0`` with ``norms <= C * omega**-N``."""
    eps, nrm = _check_samples(epsilons, norms, allow_zero=True)
    omegas = eps**scale_power
    for n in range(n_max + 1):
        if power_bound_holds(omegas, nrm, -n):
            return n
    return None


def fit_moderateness(epsilons, norms, scale_power: float = 1.0) -> ModerationReport:
    """Least-squares power law ``norm ~ C omega**-N`` plus negligibility order."""
    eps, nrm = _check_samples(epsilons, norms)
    x = np.log(eps**scale_power)
    y = np.log(nrm)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    quality = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ModerationReport(
        epsilons=tuple(float(e) for e in eps),
        norms=tuple(float(v) for v in nrm),
        fitted_exponent=float(-slope),
        fit_quality=float(quality),
        negligible_up_to_q=negligibility_order(eps, nrm, scale_power),
        bound_order=moderate_order(eps, nrm, scale_power),
    )
