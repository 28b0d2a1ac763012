"""Rothe time stepping: truncated initial data, the alternating loop, interpolants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constitutive.energy import EnergyFunctional, dissipation, functional
from .constitutive.loads import LoadSchedule
from .constitutive.params import ModelParams
from .grid import ScalarField, VectorField
from .kinematics import det_lower_bound
from .optim import SolveReport, SolverOptions, solve_y_step, solve_z_step


class SolverFailure(RuntimeError):
    def __init__(self, step: int, stage: str, report: SolveReport):
        super().__init__(f"{stage}-solver did not converge at step {step} "
                         f"(|grad|={report.final_grad_norm:.3e}, iterations={report.iterations})")
        self.step, self.stage, self.report = step, stage, report


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be an integer >= 1")

    @property
    def tau(self) -> float:
        return self.T / self.N

    def t(self, k: int) -> float:
        """Node ``k`` as ``k*T/N`` (so node ``N`` is ``T`` exactly)."""
        return k * self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.array([self.t(k) for k in range(self.N + 1)])


@dataclass
class RotheOptions:
    y: SolverOptions = field(default_factory=SolverOptions)
    z: SolverOptions = field(default_factory=lambda: SolverOptions(grad_tol=1e-10))
    lambda0: float = 1.0
    y_init: VectorField | None = None


def _as_options(opts) -> RotheOptions:
    if opts is None:
        return RotheOptions()
    if isinstance(opts, SolverOptions):
        return RotheOptions(y=opts, z=opts)
    return opts


# -- Lipschitz truncation -------------------------------------------------------
@dataclass
class TruncationResult:
    truncated: ScalarField
    lam: float
    mismatch_nodes: np.ndarray
    sup_norm_bound: float


def lipschitz_truncate(u: ScalarField, lam: float, clamp: bool = True) -> TruncationResult:
    """Double McShane envelope with the grid-geodesic (l1 path) distance.

    ``u_lo = min_y u(y) + lam dist(., y)`` followed by
    ``u_lam = max_y u_lo(y) - lam dist(., y)``; both envelopes are computed by
    forward/backward sweeps along each axis.  With ``clamp`` the result is
    cut back into ``[0, 1]``, which keeps the Lipschitz bound.  Nodes that
    agree with ``u`` up to rounding are not counted as mismatches.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    g = u.grid
    v = u.values.reshape(g.shape)
    lower = kernels.envelope_sweep(v, g.spacing, float(lam), 1)
    out = kernels.envelope_sweep(lower, g.spacing, float(lam), -1).ravel()
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    # the second pass may move coincident nodes by a few ulps
    tol = 8 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(u.values))))
    mismatch = np.flatnonzero(np.abs(out - u.values) > tol)
    return TruncationResult(ScalarField(g, out), float(lam), mismatch, float(lam))


def truncation_schedule(tau: float, params: ModelParams, lambda0: float = 1.0) -> float:
    """``lambda(tau) = lambda0 * tau^(-kappa/(2 beta))`` so ``tau^kappa lambda^beta ~ tau^(kappa/2)``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return lambda0 * tau ** (-params.kappa / (2.0 * params.beta))


# -- trajectory -------------------------------------------------------------------
@dataclass
class Trajectory:
    """States ``(y_k, z_k)`` and the per-step bookkeeping of the alternating scheme.

    ``E[k]`` excludes the regularization, ``H[k] = H_tau(z_k)``,
    ``R[k] = R(z_k - z_{k-1})`` (``R[0] = 0``), ``theta[k]`` is the power at
    ``(kτ, y_k, z_k)`` and ``work[k]`` the exact integral of the power along
    the frozen state ``(y_{k-1}, z_{k-1})`` over step ``k``.  ``E_mid[k]`` and
    ``E_pre[k]`` are ``E(kτ, y_k, z_{k-1})`` and ``E(kτ, y_{k-1}, z_{k-1})``.
    """

    time_grid: TimeGrid
    schedule: LoadSchedule
    params: ModelParams
    ys: list = field(default_factory=list)
    zs: list = field(default_factory=list)
    E: list = field(default_factory=list)
    H: list = field(default_factory=list)
    R: list = field(default_factory=list)
    theta: list = field(default_factory=list)
    work: list = field(default_factory=list)
    E_mid: list = field(default_factory=list)
    E_pre: list = field(default_factory=list)
    det_min: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    failure: SolverFailure | None = None
    z_initial: ScalarField | None = None
    options: RotheOptions | None = None

    @property
    def tau(self) -> float:
        return self.time_grid.tau

    @property
    def num_steps(self) -> int:
        return len(self.ys) - 1

    @property
    def completed(self) -> bool:
        return self.failure is None and self.num_steps == self.time_grid.N

    def t(self, k: int) -> float:
        return self.time_grid.t(k)

    def functional(self) -> EnergyFunctional:
        return functional(self.ys[0].grid, self.schedule, self.params)

    def cumulative_dissipation(self) -> np.ndarray:
        return np.cumsum(self.R)


def _step_work(ef: EnergyFunctional, t0: float, t1: float, Y, Z) -> float:
    """Integral of ``d/dt E(t, Y, Z)`` over ``[t0, t1]``.

    The power is affine in ``t`` on each schedule piece, so the trapezoid rule
    with one-sided end values is exact piece by piece.
    """
    bps = ef.schedule.breakpoints()
    cuts = [t0] + [b for b in bps if t0 < b < t1] + [t1]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        pa = ef.power(a, Y, Z, "right")
        pb = ef.power(b, Y, Z, "left")
        total += 0.5 * (b - a) * (pa + pb)
    return total


def default_initial_guess(grid, schedule: LoadSchedule) -> VectorField:
    """Dirichlet-matching affine map at ``t=0`` (the identity without Dirichlet faces)."""
    if schedule.dirichlet_faces:
        H, b = schedule.dirichlet_map(0.0)
        return VectorField.affine(grid, np.eye(grid.dim) + H, b)
    return VectorField.identity(grid)


def initialize(z0: ScalarField, schedule: LoadSchedule, params: ModelParams, opts=None,
               tau: float = 1.0) -> tuple[VectorField, ScalarField]:
    """Truncate ``z0`` at ``lambda(tau)`` and solve the initial elastic problem."""
    if np.any(z0.values < 0) or np.any(z0.values > 1):
        raise ValueError("z0 must lie in [0, 1]")
    opts = _as_options(opts)
    lam = truncation_schedule(tau, params, opts.lambda0)
    z_tau = lipschitz_truncate(z0, lam).truncated
    guess = opts.y_init if opts.y_init is not None else default_initial_guess(z0.grid, schedule)
    y0, rep = solve_y_step(0.0, guess, z_tau, schedule, params, opts.y)
    if not rep.converged:
        raise SolverFailure(0, "y", rep)
    return y0, z_tau


def run(z0: ScalarField, time_grid: TimeGrid, schedule: LoadSchedule, params: ModelParams,
        opts=None, progress=None) -> Trajectory:
    """The alternating scheme: y-step at fixed damage, then z-step at fixed deformation.

    A solver failure stops the loop; the trajectory keeps the completed steps
    and records the failure.
    """
    opts = _as_options(opts)
    if abs(time_grid.T - schedule.T) > 1e-12 * schedule.T:
        raise ValueError("time grid horizon differs from the schedule horizon")
    tau = time_grid.tau
    traj = Trajectory(time_grid, schedule, params, z_initial=z0, options=opts)
    ef = functional(z0.grid, schedule, params)
    try:
        y, z = initialize(z0, schedule, params, opts, tau)
    except SolverFailure as exc:
        traj.failure = exc
        return traj

    def record(y, z, k, R, work, e_mid, e_pre, reports):
        t = time_grid.t(k)
        traj.ys.append(y)
        traj.zs.append(z)
        traj.E.append(ef.value(t, y.values, z.values, None))
        traj.H.append(ef.regularization(z.values, tau))
        traj.R.append(R)
        traj.theta.append(ef.power(t, y.values, z.values, "left" if k > 0 else "right"))
        traj.work.append(work)
        traj.E_mid.append(e_mid)
        traj.E_pre.append(e_pre)
        traj.det_min.append(det_lower_bound(y))
        traj.reports.append(reports)

    record(y, z, 0, 0.0, 0.0, math.nan, math.nan, ())
    for k in range(1, time_grid.N + 1):
        t = time_grid.t(k)
        y_prev, z_prev = y, z
        y, rep_y = solve_y_step(t, y_prev, z_prev, schedule, params, opts.y)
        if not rep_y.converged:
            traj.failure = SolverFailure(k, "y", rep_y)
            break
        z, rep_z = solve_z_step(t, y, z_prev, tau, schedule, params, opts.z)
        if not rep_z.converged:
            traj.failure = SolverFailure(k, "z", rep_z)
            break
        work = _step_work(ef, time_grid.t(k - 1), t, y_prev.values, z_prev.values)
        e_pre = ef.value(t, y_prev.values, z_prev.values, None)
        e_mid = ef.value(t, y.values, z_prev.values, None)
        R = dissipation(ScalarField(z.grid, z.values - z_prev.values), params)
        record(y, z, k, R, work, e_mid, e_pre, (rep_y, rep_z))
        if progress is not None:
            progress(k, traj)
    return traj


# -- interpolants and variation -------------------------------------------------
def _index(traj: Trajectory, t: float, side: str) -> int:
    T = traj.time_grid.T
    if t < -1e-12 * T or t > T * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, {T}]")
    r = t / traj.tau
    k = round(r)
    if abs(r - k) <= 1e-9:
        return int(k)
    if side == "right":
        return int(math.floor(r))
    if side == "left":
        return int(math.ceil(r))
    raise ValueError("side must be 'left' or 'right'")


def interpolant(traj: Trajectory, side: str, t: float) -> tuple[VectorField, ScalarField]:
    """Piecewise-constant interpolants.

    ``right``: state ``k-1`` on ``[(k-1)τ, kτ)``; ``left``: state ``k`` on
    ``((k-1)τ, kτ]``.  Both return state ``k`` at ``t = kτ``.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    k = _index(traj, t, side)
    if k > traj.num_steps:
        raise ValueError(f"t={t} lies beyond the last completed step")
    return traj.ys[k], traj.zs[k]


def total_variation(traj: Trajectory, t1: float, t2: float) -> float:
    """Dissipated energy of the left interpolant of ``z`` over ``[t1, t2]``."""
    if t2 < t1:
        raise ValueError("need t1 <= t2")
    k1, k2 = _index(traj, t1, "left"), _index(traj, t2, "left")
    total = 0.0
    for j in range(k1 + 1, k2 + 1):
        v = ScalarField(traj.zs[j].grid, traj.zs[j].values - traj.zs[j - 1].values)
        total += dissipation(v, traj.params)
    return total
