"""Periodic grids, discrete Fourier transforms and Fourier multipliers.

Fields live on the torus ``[0, L)^d`` sampled at ``n`` points per axis.
The forward transform divides by ``n**d`` so a coefficient is the average
of the field against its Fourier mode, and the wavenumber of integer
frequency ``m`` is ``k = 2*pi*m/L``.

Derivative-type symbols (``i k``, ``|k|^2``, ``|k|^s``) are built from the
*represented* wavenumbers: the Nyquist frequency of each axis is treated
as unresolved and given wavenumber zero.  This keeps odd derivatives of
real fields real, and makes gradient, divergence and the fractional
multiplier share one consistent set of symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .errors import GridMismatch, InvalidOrder, SymmetryViolation

__all__ = [
    "GridSpec",
    "Field",
    "Spectrum",
    "Norms",
    "forward_transform",
    "inverse_transform",
    "fractional_laplacian_half",
    "apply_multiplier",
    "gradient",
    "divergence",
    "laplacian",
    "norms",
    "inner",
    "spectral_l2",
    "pointwise_product",
]

_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[0, period)^dimension``."""

    dimension: int
    points: int
    period: float = 2 * np.pi

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        n = int(self.points)
        if n != self.points or n < 16 or n & (n - 1):
            raise ValueError(f"points must be a power of two >= 16, got {self.points}")
        if not (np.isfinite(self.period) and self.period > 0):
            raise ValueError(f"period must be positive, got {self.period}")
        object.__setattr__(self, "points", n)
        object.__setattr__(self, "period", float(self.period))

    @property
    def spacing(self) -> float:
        return self.period / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dimension

    @property
    def size(self) -> int:
        return self.points**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Grid point coordinates, one broadcastable array per axis."""
        x = np.arange(self.points) * self.spacing
        return _frozen(_axis_arrays(x, self.dimension))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Physical wavenumbers ``2*pi*m/L`` in numpy FFT ordering."""
        k = 2 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)
        return _frozen(_axis_arrays(k, self.dimension))

    @cached_property
    def represented_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers with the Nyquist frequency of each axis set to zero."""
        k = 2 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)
        k[self.points // 2] = 0.0
        return _frozen(_axis_arrays(k, self.dimension))

    @cached_property
    def _rfft_k(self) -> tuple[np.ndarray, ...]:
        # represented wavenumbers laid out for rfftn (last axis halved)
        n, h = self.points, self.spacing
        full = 2 * np.pi * np.fft.fftfreq(n, d=h)
        full[n // 2] = 0.0
        half = 2 * np.pi * np.fft.rfftfreq(n, d=h)
        half[-1] = 0.0
        if self.dimension == 1:
            return _frozen((half,))
        return _frozen((full[:, None], half[None, :]))

    @cached_property
    def _rfft_k2(self) -> np.ndarray:
        k2 = np.broadcast_to(sum(kj**2 for kj in self._rfft_k), self._rfft_shape).copy()
        k2.setflags(write=False)
        return k2

    @property
    def _rfft_shape(self) -> tuple[int, ...]:
        n = self.points
        return (n // 2 + 1,) if self.dimension == 1 else (n, n // 2 + 1)

    def abs_wavenumber(self) -> np.ndarray:
        """``|k|`` over the full FFT layout, Nyquist frequencies excluded."""
        k2 = sum(kj**2 for kj in self.represented_wavenumbers)
        return np.sqrt(np.broadcast_to(k2, self.shape))


def _axis_arrays(v, d):
    if d == 1:
        return (v.copy(),)
    return (v[:, None].copy(), v[None, :].copy())


def _frozen(arrays):
    for a in arrays:
        a.setflags(write=False)
    return tuple(arrays)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a function on a periodic grid.

    ``values`` may be given flat (row-major, length ``n**d``) or already
    shaped; it is stored as a read-only array of shape ``grid.shape``.
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> Field:
        """Sample ``func(*coords)`` on the grid."""
        out = np.broadcast_to(func(*grid.coordinates), grid.shape)
        return cls(grid, out)

    @classmethod
    def zeros(cls, grid: GridSpec) -> Field:
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> Field:
        return cls(grid, np.full(grid.shape, float(value)))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def _other(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.grid, self.values / self._other(other))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients of a field, in numpy FFT ordering."""

    grid: GridSpec
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex).reshape(self.grid.shape)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def conjugate_symmetry_error(self) -> float:
        """Relative size of ``c[-m] - conj(c[m])`` over all modes."""
        c = self.coefficients
        flipped = np.conj(np.roll(np.flip(c), 1, axis=tuple(range(c.ndim))))
        scale = np.max(np.abs(c))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(c - flipped)) / scale)


class Norms(NamedTuple):
    l2: float
    h1: float
    hs_seminorm: float


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatch(f"grid {f.grid} does not match {g}")


def _check_order(s):
    if not (0 < s < 1):
        raise InvalidOrder(f"fractional order s must lie in (0, 1), got {s}")


def forward_transform(u: Field) -> Spectrum:
    return Spectrum(u.grid, np.fft.fftn(u.values) / u.grid.size)


def inverse_transform(U: Spectrum) -> Field:
    z = np.fft.ifftn(U.coefficients) * U.grid.size
    ref = np.max(np.abs(z)) if z.size else 0.0
    resid = np.max(np.abs(z.imag)) if z.size else 0.0
    if ref > 0 and resid > _SYMMETRY_TOL * ref:
        raise SymmetryViolation(
            f"imaginary residue {resid:.3e} exceeds {_SYMMETRY_TOL:g} relative to {ref:.3e}"
        )
    return Field(U.grid, z.real)


# -- array kernels shared with the operator and time stepper -----------------

def _rfft(v, grid):
    return np.fft.rfftn(v, axes=tuple(range(grid.dimension)))


def _irfft(c, grid):
    return np.fft.irfftn(c, s=grid.shape, axes=tuple(range(grid.dimension)))


def _frac_symbol(grid, s):
    return grid._rfft_k2 ** (s / 2)


def _frac_half(v, grid, s):
    return _irfft(_frac_symbol(grid, s) * _rfft(v, grid), grid)


def _grad(v, grid):
    c = _rfft(v, grid)
    return [_irfft(1j * kj * c, grid) for kj in grid._rfft_k]


def _div(components, grid):
    acc = 0
    for kj, w in zip(grid._rfft_k, components):
        acc = acc + 1j * kj * _rfft(w, grid)
    return _irfft(acc, grid)


def _pad_axis(c, axis, n, m):
    h = n // 2
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=complex)
    src = [slice(None)] * c.ndim
    dst = [slice(None)] * c.ndim
    src[axis], dst[axis] = slice(0, h), slice(0, h)
    out[tuple(dst)] = c[tuple(src)]
    src[axis], dst[axis] = slice(h + 1, n), slice(m - h + 1, m)
    out[tuple(dst)] = c[tuple(src)]
    src[axis] = h
    for j in (h, m - h):
        dst[axis] = j
        out[tuple(dst)] = 0.5 * c[tuple(src)]
    return out


def _truncate_axis(C, axis, n, m):
    h = n // 2
    shape = list(C.shape)
    shape[axis] = n
    out = np.zeros(shape, dtype=complex)
    src = [slice(None)] * C.ndim
    dst = [slice(None)] * C.ndim
    src[axis], dst[axis] = slice(0, h), slice(0, h)
    out[tuple(dst)] = C[tuple(src)]
    src[axis], dst[axis] = slice(m - h + 1, m), slice(h + 1, n)
    out[tuple(dst)] = C[tuple(src)]
    lo, hi = list(src), list(src)
    lo[axis], hi[axis], dst[axis] = h, m - h, h
    out[tuple(dst)] = 0.5 * (C[tuple(lo)] + C[tuple(hi)])
    return out


def _product(f, g, grid, dealias=False):
    """Pointwise product, optionally evaluated on a 3/2 zero-padded grid.

    The padded variant truncates back with the adjoint of the padding, so
    ``<product(f, g), w>`` equals the fine-grid quadrature of ``f g w``.
    """
    if not dealias:
        return f * g
    n = grid.points
    m = 3 * n // 2
    axes = tuple(range(grid.dimension))

    def pad(v):
        c = np.fft.fftn(v) / v.size
        for ax in axes:
            c = _pad_axis(c, ax, n, m)
        return np.fft.ifftn(c * m**grid.dimension).real

    C = np.fft.fftn(pad(f) * pad(g)) / m**grid.dimension
    for ax in axes:
        C = _truncate_axis(C, ax, n, m)
    return np.fft.ifftn(C * grid.size).real


def _inner(f, g, grid):
    return float(np.sum(f * g) * grid.cell_volume)


# -- public operations --------------------------------------------------------

def apply_multiplier(u: Field, symbol: np.ndarray) -> Field:
    """Multiply the spectrum of ``u`` by a real even ``symbol`` (full FFT layout)."""
    c = np.fft.fftn(u.values) * symbol
    return Field(u.grid, np.fft.ifftn(c).real)


def fractional_laplacian_half(u: Field, s: float) -> Field:
    """Fourier multiplier ``|k|^s``, the half power of ``(-Laplacian)^s``."""
    _check_order(s)
    return Field(u.grid, _frac_half(u.values, u.grid, s))


def gradient(u: Field) -> tuple[Field, ...]:
    return tuple(Field(u.grid, g) for g in _grad(u.values, u.grid))


def divergence(F: Sequence[Field]) -> Field:
    F = list(F)
    _check_same_grid(*F)
    grid = F[0].grid
    if len(F) != grid.dimension:
        raise GridMismatch(f"need {grid.dimension} components, got {len(F)}")
    return Field(grid, _div([f.values for f in F], grid))


def laplacian(u: Field) -> Field:
    return Field(u.grid, _irfft(-u.grid._rfft_k2 * _rfft(u.values, u.grid), u.grid))


def inner(u: Field, v: Field) -> float:
    """Grid quadrature of the L2 inner product."""
    _check_same_grid(u, v)
    return _inner(u.values, v.values, u.grid)


def spectral_l2(U: Spectrum) -> float:
    """L2 norm from Fourier coefficients (discrete Plancherel)."""
    return float(np.sqrt(U.grid.period**U.grid.dimension * np.sum(np.abs(U.coefficients) ** 2)))


def pointwise_product(f: Field, g: Field, dealias: bool = False) -> Field:
    _check_same_grid(f, g)
    return Field(f.grid, _product(f.values, g.values, f.grid, dealias))


def norms(u: Field, s: float) -> Norms:
    _check_order(s)
    grid = u.grid
    l2_sq = _inner(u.values, u.values, grid)
    grad_sq = sum(_inner(g, g, grid) for g in _grad(u.values, grid))
    lam = _frac_half(u.values, grid, s)
    return Norms(
        l2=float(np.sqrt(l2_sq)),
        h1=float(np.sqrt(l2_sq + grad_sq)),
        hs_seminorm=float(np.sqrt(_inner(lam, lam, grid))),
    )
