"""Implicit time stepping for ``u_t + L u = 0`` on the periodic grid.

Every represented Fourier mode is kept, so the semi-discrete system is
the Galerkin projection onto the full mode set.  Each step solves a
symmetric positive definite system ``(I + theta dt L) x = rhs`` by
preconditioned conjugate gradients; the preconditioner inverts the
constant-coefficient symbol built from the floors ``a0, b0, c0``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import CgDivergence, GridMismatch, TraceMismatch
from .operator import OperatorData, _apply_L_values, apriori_constant, energy
from .spectral import Field, _irfft, _rfft, norms

__all__ = [
    "SCHEMES",
    "RunConfig",
    "EnergyTrace",
    "StepResult",
    "SolveResult",
    "MonotonicityReport",
    "AprioriReport",
    "implicit_step",
    "solve_ivp",
    "verify_energy_monotonicity",
    "verify_apriori",
    "TRACE_COLUMNS",
]

SCHEMES = ("backward_euler", "crank_nicolson")
_THETA = {"backward_euler": 1.0, "crank_nicolson": 0.5}
_SLACK = 1e-9


@dataclass(frozen=True)
class RunConfig:
    T: float
    dt: float
    scheme: str = "backward_euler"
    cg_rel_tol: float = 1e-10
    cg_max_iter: int = 500
    snapshot_stride: int = 1

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not 0 < self.dt <= self.T:
            raise ValueError(f"dt must lie in (0, T], got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0 < self.cg_rel_tol <= 1e-4:
            raise ValueError(f"cg_rel_tol must lie in (0, 1e-4], got {self.cg_rel_tol}")
        if int(self.cg_max_iter) != self.cg_max_iter or self.cg_max_iter < 1:
            raise ValueError(f"cg_max_iter must be a positive integer, got {self.cg_max_iter}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be an integer >= 1, got {self.snapshot_stride}")

    @property
    def steps(self) -> int:
        # guard against T/dt landing a rounding error above an integer
        return max(1, math.ceil(self.T / self.dt * (1 - 1e-12)))


TRACE_COLUMNS = (
    "time",
    "l2_sq",
    "grad_w_sq",
    "frac_w_sq",
    "mass_w_sq",
    "total",
    "ut_l2_sq",
    "cg_iterations",
)


@dataclass
class EnergyTrace:
    """Per-step scalars; entry 0 is the initial state (``ut_l2_sq`` and
    ``cg_iterations`` are 0 there)."""

    times: list = field(default_factory=list)
    breakdowns: list = field(default_factory=list)
    ut_l2_sq: list = field(default_factory=list)
    cg_iterations: list = field(default_factory=list)

    def append(self, t, breakdown, ut_sq, iters):
        if self.times and not t > self.times[-1]:
            raise ValueError("trace times must be strictly increasing")
        self.times.append(float(t))
        self.breakdowns.append(breakdown)
        self.ut_l2_sq.append(float(ut_sq))
        self.cg_iterations.append(int(iters))

    def __len__(self):
        return len(self.times)

    def totals(self) -> np.ndarray:
        return np.array([b.total for b in self.breakdowns])

    def l2_sq(self) -> np.ndarray:
        return np.array([b.l2_sq for b in self.breakdowns])

    def ut_integral(self) -> float:
        """``sum_n dt_n |(u_{n+1} - u_n) / dt_n|^2``."""
        dts = np.diff(self.times)
        return float(np.dot(dts, self.ut_l2_sq[1:]))

    def rows(self):
        for t, b, ut, it in zip(self.times, self.breakdowns, self.ut_l2_sq, self.cg_iterations):
            yield (t, b.l2_sq, b.grad_w_sq, b.frac_w_sq, b.mass_w_sq, b.total, ut, it)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in self.rows():
            writer.writerow(["%.17g" % v for v in row[:-1]] + [str(row[-1])])
        return buf.getvalue()


class StepResult(NamedTuple):
    u_next: Field
    cg_iters: int


@dataclass
class SolveResult:
    snapshot_times: list
    snapshots: list
    trace: EnergyTrace

    @property
    def final(self) -> Field:
        return self.snapshots[-1]


def _preconditioner(P: OperatorData, theta_dt: float) -> np.ndarray:
    grid = P.grid
    k2 = grid._rfft_k2
    return 1.0 / (1.0 + theta_dt * (P.a0 * k2 + P.b0 * k2**P.s + P.c0))


def _pcg(P, theta_dt, rhs, x0, tol, max_iter):
    """Preconditioned CG for ``(I + theta_dt L) x = rhs`` on grid arrays.

    Stops when the relative residual ``|rhs - A x| / |rhs|`` drops below
    ``tol``.  Returns ``(x, iterations, relative_residual)``.
    """
    grid = P.grid
    inv_symbol = _preconditioner(P, theta_dt)

    def A(v):
        return v + theta_dt * _apply_L_values(P, v)

    def M(r):
        return _irfft(inv_symbol * _rfft(r, grid), grid)

    b_norm = np.linalg.norm(rhs)
    if b_norm == 0:
        return np.zeros_like(rhs), 0, 0.0
    x = x0.copy()
    r = rhs - A(x)
    res = np.linalg.norm(r) / b_norm
    if res <= tol:
        return x, 0, res
    z = M(r)
    p = z.copy()
    rz = np.vdot(r, z)
    for it in range(1, max_iter + 1):
        Ap = A(p)
        alpha = rz / np.vdot(p, Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / b_norm
        if not np.isfinite(res):
            break
        if res <= tol:
            # confirm against the true residual; recurrence drift is rare
            res = np.linalg.norm(rhs - A(x)) / b_norm
            if res <= tol:
                return x, it, res
        z = M(r)
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise CgDivergence(res, max_iter)


def implicit_step(
    P: OperatorData,
    u_n: Field,
    dt: float,
    scheme: str = "backward_euler",
    *,
    cg_rel_tol: float = 1e-10,
    cg_max_iter: int = 500,
) -> StepResult:
    """Advance one step of backward Euler or Crank-Nicolson."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if u_n.grid != P.grid:
        raise GridMismatch(f"field on {u_n.grid} does not match operator grid {P.grid}")
    theta_dt = _THETA[scheme] * dt
    v = u_n.values
    rhs = v if scheme == "backward_euler" else v - theta_dt * _apply_L_values(P, v)
    x, iters, _ = _pcg(P, theta_dt, rhs, v, cg_rel_tol, cg_max_iter)
    return StepResult(Field(P.grid, x), iters)


def solve_ivp(P: OperatorData, u0: Field, cfg: RunConfig) -> SolveResult:
    """Integrate from ``u0`` to ``cfg.T`` in ``ceil(T / dt)`` steps.

    The last step is shortened so the run ends exactly at ``T``.  Snapshots
    are taken at t = 0, every ``snapshot_stride`` steps and at ``T``.
    """
    if u0.grid != P.grid:
        raise GridMismatch(f"initial data on {u0.grid} does not match operator grid {P.grid}")
    n_steps = cfg.steps
    trace = EnergyTrace()
    trace.append(0.0, energy(P, u0), 0.0, 0)
    snap_times, snaps = [0.0], [u0]
    u, t = u0, 0.0
    for step in range(1, n_steps + 1):
        t_next = cfg.T if step == n_steps else step * cfg.dt
        dt = t_next - t
        try:
            u_next, iters = implicit_step(
                P, u, dt, cfg.scheme, cg_rel_tol=cfg.cg_rel_tol, cg_max_iter=cfg.cg_max_iter
            )
        except CgDivergence as exc:
            raise CgDivergence(exc.residual, exc.iterations, step=step) from None
        du = (u_next.values - u.values) / dt
        ut_sq = float(np.sum(du * du)) * P.grid.cell_volume
        trace.append(t_next, energy(P, u_next), ut_sq, iters)
        if step % cfg.snapshot_stride == 0 or step == n_steps:
            snap_times.append(t_next)
            snaps.append(u_next)
        u, t = u_next, t_next
    return SolveResult(snap_times, snaps, trace)


class MonotonicityReport(NamedTuple):
    monotone_l2: bool
    monotone_total: bool
    max_violation: float


def _max_increase(values):
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0, True
    inc = np.diff(v)
    ok = bool(np.all(inc <= _SLACK * np.abs(v[:-1])))
    return float(max(0.0, inc.max())), ok


def verify_energy_monotonicity(trace: EnergyTrace) -> MonotonicityReport:
    """Check that ``l2_sq`` and ``total`` never increase beyond 1e-9 relative.

    ``max_violation`` is the largest raw step-to-step increase in either
    series (0 when both are nonincreasing).
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    inc_l2, ok_l2 = _max_increase(trace.l2_sq())
    inc_tot, ok_tot = _max_increase(trace.totals())
    return MonotonicityReport(ok_l2, ok_tot, max(inc_l2, inc_tot))


class AprioriReport(NamedTuple):
    lhs_max: float
    rhs: float
    satisfied: bool


def verify_apriori(P: OperatorData, result: SolveResult, u0: Field) -> AprioriReport:
    """Compare the unweighted energy of each snapshot against ``C |u0|_{H^1}^2``."""
    if not result.snapshots or len(result.snapshots) != len(result.snapshot_times):
        raise TraceMismatch("solve result carries no snapshots to check")
    if result.snapshot_times[0] != 0.0 or result.snapshot_times[-1] != result.trace.times[-1]:
        raise TraceMismatch("snapshots do not span the trace")
    if result.snapshots[0].grid != u0.grid:
        raise TraceMismatch("snapshots and initial data live on different grids")
    lhs = 0.0
    for u in result.snapshots:
        nm = norms(u, P.s)
        lhs = max(lhs, nm.h1**2 + nm.hs_seminorm**2)
    rhs = apriori_constant(P) * norms(u0, P.s).h1 ** 2
    return AprioriReport(lhs, rhs, lhs <= rhs * (1 + _SLACK))

