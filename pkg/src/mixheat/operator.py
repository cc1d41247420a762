"""The mixed local-nonlocal operator and its energy form.

    L u = -div(a grad u) + Lam(b Lam u) + c u,     Lam = (-Laplacian)^(s/2)

Products with the coefficients are taken pointwise on the grid
(pseudo-spectral collocation), optionally on a 3/2 padded grid.  Because
the discrete gradient and divergence are exact negative adjoints and
``Lam`` is self-adjoint in the grid inner product, ``<L u, v>`` equals the
quadrature of the bilinear form ``B(u, v)`` up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CostGuard, GridMismatch, SupportViolation
from .spectral import (
    Field,
    GridSpec,
    _check_order,
    _frac_half,
    _grad,
    _inner,
    _irfft,
    _product,
    _rfft,
)

__all__ = [
    "OperatorData",
    "EnergyBreakdown",
    "apply_L",
    "bilinear_form",
    "energy",
    "coercivity_margin",
    "apriori_constant",
    "constant_symbol",
    "gagliardo_seminorm_bruteforce",
    "gagliardo_tail",
    "gagliardo_tail_bound",
]

_FLOOR_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class OperatorData:
    """Coefficient fields ``a, b, c`` with floors and the fractional order ``s``."""

    a: Field
    b: Field
    c: Field
    s: float
    a0: float
    b0: float
    c0: float
    dealias: bool = False

    def __post_init__(self):
        _check_order(self.s)
        g = self.a.grid
        if self.b.grid != g or self.c.grid != g:
            raise GridMismatch("coefficients a, b, c must share one grid")
        if self.a0 <= 0 or self.b0 <= 0:
            raise ValueError(f"floors a0, b0 must be positive, got {self.a0}, {self.b0}")
        if self.c0 <= 0:
            raise ValueError(
                f"floor c0 must be positive (got {self.c0}); the well-posedness "
                "estimates used here assume c >= c0 > 0"
            )
        for name, f, lo in (("a", self.a, self.a0), ("b", self.b, self.b0), ("c", self.c, self.c0)):
            m = float(f.values.min())
            if m < lo - _FLOOR_SLACK:
                raise ValueError(f"coefficient {name} has minimum {m:.6g} below its floor {lo:g}")

    @classmethod
    def constant(cls, grid: GridSpec, a0: float, b0: float, c0: float, s: float) -> OperatorData:
        return cls(Field.constant(grid, a0), Field.constant(grid, b0), Field.constant(grid, c0), s, a0, b0, c0)

    @property
    def grid(self) -> GridSpec:
        return self.a.grid


@dataclass(frozen=True)
class EnergyBreakdown:
    l2_sq: float
    grad_w_sq: float
    frac_w_sq: float
    mass_w_sq: float

    @property
    def total(self) -> float:
        return self.l2_sq + self.grad_w_sq + self.frac_w_sq + self.mass_w_sq

    @property
    def form_part(self) -> float:
        """The ``B(u, u)`` part of the energy."""
        return self.grad_w_sq + self.frac_w_sq + self.mass_w_sq


def _check_grid(P, *fields):
    for f in fields:
        if f.grid != P.grid:
            raise GridMismatch(f"field on {f.grid} does not match operator grid {P.grid}")


def _apply_L_values(P: OperatorData, v: np.ndarray) -> np.ndarray:
    # 1 forward + (d+1) inverse + (d+1) forward + 1 inverse transform
    grid = P.grid
    ks = grid._rfft_k
    lam = grid._rfft_k2 ** (P.s / 2)
    vh = _rfft(v, grid)
    acc = 0
    for kj in ks:
        flux = _product(P.a.values, _irfft(1j * kj * vh, grid), grid, P.dealias)
        acc = acc - 1j * kj * _rfft(flux, grid)
    frac = _product(P.b.values, _irfft(lam * vh, grid), grid, P.dealias)
    acc = acc + lam * _rfft(frac, grid)
    return _irfft(acc, grid) + _product(P.c.values, v, grid, P.dealias)


def apply_L(P: OperatorData, u: Field) -> Field:
    _check_grid(P, u)
    return Field(P.grid, _apply_L_values(P, u.values))


def _form_parts(P, u, v):
    grid = P.grid
    gu, gv = _grad(u, grid), _grad(v, grid)
    grad = sum(_inner(_product(P.a.values, x, grid, P.dealias), y, grid) for x, y in zip(gu, gv))
    lu, lv = _frac_half(u, grid, P.s), _frac_half(v, grid, P.s)
    frac = _inner(_product(P.b.values, lu, grid, P.dealias), lv, grid)
    mass = _inner(_product(P.c.values, u, grid, P.dealias), v, grid)
    return grad, frac, mass


def bilinear_form(P: OperatorData, u: Field, v: Field) -> float:
    _check_grid(P, u, v)
    return float(sum(_form_parts(P, u.values, v.values)))


def energy(P: OperatorData, u: Field) -> EnergyBreakdown:
    """Weighted energy ``|u|^2 + |a^1/2 grad u|^2 + |b^1/2 Lam u|^2 + |c^1/2 u|^2``."""
    _check_grid(P, u)
    grad, frac, mass = _form_parts(P, u.values, u.values)
    return EnergyBreakdown(_inner(u.values, u.values, P.grid), grad, frac, mass)


def coercivity_margin(P: OperatorData, u: Field) -> float:
    _check_grid(P, u)
    grid = P.grid
    v = u.values
    grad, frac, mass = _form_parts(P, v, v)
    grad_sq = sum(_inner(g, g, grid) for g in _grad(v, grid))
    lam = _frac_half(v, grid, P.s)
    lower = P.a0 * grad_sq + P.b0 * _inner(lam, lam, grid) + P.c0 * _inner(v, v, grid)
    return float(grad + frac + mass - lower)


def apriori_constant(P: OperatorData) -> float:
    """``2 (1 + 1/a0 + 1/b0) (1 + |a|_inf + |b|_inf + |c|_inf)``."""
    sup = P.a.max_abs() + P.b.max_abs() + P.c.max_abs()
    return 2.0 * (1.0 + 1.0 / P.a0 + 1.0 / P.b0) * (1.0 + sup)


def constant_symbol(grid: GridSpec, a0: float, b0: float, c0: float, s: float) -> np.ndarray:
    """Symbol of ``L`` with constant coefficients, full FFT layout."""
    k = grid.abs_wavenumber()
    return a0 * k**2 + b0 * k ** (2 * s) + c0


# -- brute-force Gagliardo seminorm ------------------------------------------

_COST_LIMIT = 2**16


def gagliardo_seminorm_bruteforce(u: Field, s: float, truncation_radius: float) -> float:
    """Squared Gagliardo seminorm by direct double Riemann sum.

    Sums ``|u(x) - u(y)|^2 / |x - y|^(d + 2s)`` over all ordered pairs of
    distinct grid points whose minimum-image distance is at most
    ``truncation_radius``.  The excluded far field is bounded by
    :func:`gagliardo_tail_bound`.
    """
    _check_order(s)
    grid = u.grid
    d, n = grid.dimension, grid.points
    if d * grid.size > _COST_LIMIT:
        raise CostGuard(f"d * n^d = {d * grid.size} exceeds {_COST_LIMIT}")
    if not 0 < truncation_radius <= grid.period / 2:
        raise ValueError(f"truncation radius must lie in (0, L/2], got {truncation_radius}")
    v = u.values
    peak = float(np.max(np.abs(v)))
    if peak == 0:
        return 0.0
    shell = np.zeros(grid.shape, dtype=bool)
    for ax in range(d):
        idx = [slice(None)] * d
        idx[ax] = [0, n - 1]
        shell[tuple(idx)] = True
    if np.max(np.abs(v[shell])) >= 1e-8 * peak:
        raise SupportViolation("field is not compactly supported inside the box")

    h = grid.spacing
    offsets = np.arange(-(n // 2), n // 2)
    grids = np.meshgrid(*([offsets] * d), indexing="ij")
    shifts = np.stack([g.ravel() for g in grids], axis=1)
    dist = h * np.sqrt(np.sum(shifts.astype(float) ** 2, axis=1))
    keep = (dist > 0) & (dist <= truncation_radius * (1 + 1e-12))
    total = 0.0
    for shift, r in zip(shifts[keep], dist[keep]):
        diff = np.roll(v, tuple(shift), axis=tuple(range(d))) - v
        total += float(np.sum(diff * diff)) / r ** (d + 2 * s)
    return total * grid.cell_volume**2


def gagliardo_tail_bound(u: Field, s: float, truncation_radius: float) -> float:
    """Upper bound on pairs farther apart than the truncation radius.

    Uses ``|u(x) - u(y)|^2 <= 2 u(x)^2 + 2 u(y)^2``, giving
    ``4 |u|^2 * |S^(d-1)| * R^(-2s) / (2s)``.
    """
    _check_order(s)
    sphere = 2.0 if u.grid.dimension == 1 else 2.0 * math.pi
    l2_sq = _inner(u.values, u.values, u.grid)
    return 4.0 * l2_sq * sphere * truncation_radius ** (-2 * s) / (2 * s)


def gagliardo_tail(u: Field, s: float, truncation_radius: float) -> float:
    """Exact far-field contribution for data of small support.

    When the support of ``u`` has diameter at most ``truncation_radius``,
    every pair farther apart has at most one point in the support, so the
    excluded part of the whole-space seminorm is exactly
    ``2 |u|^2 * |S^(d-1)| * R^(-2s) / (2s)``, half of the crude bound.
    Raises :class:`SupportViolation` when the support is too wide.
    """
    grid = u.grid
    v = np.abs(u.values)
    peak = float(v.max())
    if peak > 0:
        idx = np.nonzero(v >= 1e-8 * peak)
        span = [(int(i.max()) - int(i.min()) + 1) * grid.spacing for i in idx]
        if math.hypot(*span) > truncation_radius:
            raise SupportViolation(
                f"support diameter up to {math.hypot(*span):.4g} exceeds the truncation radius {truncation_radius:g}"
            )
    return 0.5 * gagliardo_tail_bound(u, s, truncation_radius)
