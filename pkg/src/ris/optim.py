"""Inner solvers of the incremental problem.

``solve_y_step`` is a limited-memory quasi-Newton descent with a backtracking
Armijo search that also rejects steps leaving ``det grad y >= det_floor``.
``solve_z_step`` is a spectral projected-gradient method for the convex damage
problem on the box ``0 <= z <= z_prev``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .constitutive.energy import EnergyFunctional, functional
from .constitutive.loads import LoadSchedule
from .constitutive.params import ModelParams
from .grid import GridMismatchError, ScalarField, VectorField, nodal_gradient
from .kinematics import determinant


class InfeasibleStartError(ValueError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    grad_tol: float = 1e-9
    max_iters: int = 2000
    ls_shrink: float = 0.5
    ls_armijo: float = 1e-4
    det_floor: float = 1e-6
    memory: int = 10
    seed: int = 0
    multistart: int = 0
    multistart_amplitude: float = 0.02

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.ls_shrink < 1:
            raise ValueError("ls_shrink must lie in (0, 1)")
        if not 0 < self.ls_armijo < 0.5:
            raise ValueError("ls_armijo must lie in (0, 0.5)")
        if not self.det_floor > 0:
            raise ValueError("det_floor must be positive")
        if self.memory < 0 or self.multistart < 0:
            raise ValueError("memory and multistart must be nonnegative")

    def replace(self, **kw) -> "SolverOptions":
        return replace(self, **kw)


@dataclass
class SolveReport:
    iterations: int = 0
    final_grad_norm: float = math.inf
    final_value: float = math.inf
    line_search_failures: int = 0
    feasibility_rejections: int = 0
    converged: bool = False


# -- y-step -------------------------------------------------------------------
def _det_min(ef: EnergyFunctional, Y: np.ndarray) -> float:
    return float(determinant(nodal_gradient(ef.grid, Y)).min())


def minimize_y(ef: EnergyFunctional, t: float, Y0: np.ndarray, Z: np.ndarray,
               opts: SolverOptions) -> tuple[np.ndarray, SolveReport]:
    """L-BFGS descent on ``Y -> E(t, Y, Z)`` with a determinant floor."""
    rep = SolveReport()
    Y = np.array(Y0, dtype=float, copy=True)
    if _det_min(ef, Y) < opts.det_floor:
        raise InfeasibleStartError("initial deformation violates the determinant floor")
    f, g = ef.value_and_grad_y(t, Y, Z)
    if g is None:
        raise InfeasibleStartError("initial deformation has infinite energy")
    pairs: deque = deque(maxlen=opts.memory)
    gnorm = float(np.max(np.abs(g)))
    f0, gnorm0 = f, gnorm
    while True:
        rep.final_value, rep.final_grad_norm = f, gnorm
        if gnorm <= opts.grad_tol:
            rep.converged = True
            break
        if rep.iterations >= opts.max_iters:
            break
        d = _lbfgs_direction(g, pairs)
        slope = float(np.sum(g * d))
        if not slope < 0:
            pairs.clear()
            d, slope = -g, -float(np.sum(g * g))
        step = 1.0 if pairs else _first_step(ef, d)
        accepted = None
        for _ in range(80):
            Yt = Y + step * d
            if _det_min(ef, Yt) < opts.det_floor:
                rep.feasibility_rejections += 1
                step *= opts.ls_shrink
                continue
            ft, gt = ef.value_and_grad_y(t, Yt, Z)
            if gt is not None and (
                (ft < f and ft <= f + opts.ls_armijo * step * slope)
                or _approximate_wolfe(f, ft, slope, float(np.sum(gt * d)), opts.ls_armijo)
            ):
                accepted = (Yt, ft, gt)
                break
            if gt is None:
                rep.feasibility_rejections += 1
            step *= opts.ls_shrink
        if accepted is None:
            rep.line_search_failures += 1
            if pairs:
                pairs.clear()
                continue
            break
        Yt, ft, gt = accepted
        s = (Yt - Y).ravel()
        yv = (gt - g).ravel()
        sy = float(s @ yv)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(yv)):
            pairs.append((s, yv, 1.0 / sy))
        Y, f, g = Yt, ft, gt
        gnorm = float(np.max(np.abs(g)))
        rep.iterations += 1
    if f > f0:
        # approximate-Wolfe steps may drift upward by rounding; never return worse than the start
        Y, rep.final_value = np.array(Y0, dtype=float, copy=True), f0
        rep.final_grad_norm, rep.converged = gnorm0, gnorm0 <= opts.grad_tol
    return Y, rep


def _approximate_wolfe(f: float, ft: float, slope: float, slope_t: float, armijo: float) -> bool:
    """Gradient-based acceptance once value differences drown in rounding.

    Used only when ``ft`` is within a few ulps of ``f``.  The directional
    derivative at the trial point must not exceed ``(2 armijo - 1) slope``,
    which on a locally quadratic model means the step did not overshoot the
    line minimum by more than a factor of two.  Backtracking from the full
    step supplies the progress that the usual lower Wolfe bound would.
    """
    if ft > f + 64 * np.finfo(float).eps * (1.0 + abs(f)):
        return False
    return slope_t <= (2 * armijo - 1) * slope


def _first_step(ef: EnergyFunctional, d: np.ndarray) -> float:
    # without curvature information, move no node by more than 1% of the mesh size
    dmax = float(np.max(np.abs(d)))
    return 1.0 if dmax == 0 else 0.01 * min(ef.grid.spacing) / dmax


def _lbfgs_direction(g: np.ndarray, pairs) -> np.ndarray:
    q = g.ravel().copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, rho = pairs[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q.reshape(g.shape)


def _smooth_perturbation(grid, rng: np.random.Generator, amplitude: float) -> np.ndarray:
    """Low-frequency sine perturbation vanishing nowhere in particular."""
    x = grid.coords / np.asarray(grid.extents)
    out = np.zeros_like(x)
    for c in range(grid.dim):
        for _ in range(3):
            k = rng.integers(1, 3, size=grid.dim)
            ph = rng.uniform(0, 2 * np.pi, size=grid.dim)
            out[:, c] += rng.standard_normal() * np.prod(np.sin(np.pi * k * x + ph), axis=1)
    return amplitude * out / 3.0


def solve_y_step(t: float, y_init: VectorField, z_fixed: ScalarField, schedule: LoadSchedule,
                 params: ModelParams, opts: SolverOptions) -> tuple[VectorField, SolveReport]:
    """Minimize ``y -> E(t, y, z_fixed)`` from ``y_init`` (plus optional multistarts)."""
    if y_init.grid != z_fixed.grid:
        raise GridMismatchError("grid mismatch")
    ef = functional(y_init.grid, schedule, params)
    Y, rep = minimize_y(ef, t, y_init.values, z_fixed.values, opts)
    if opts.multistart:
        rng = np.random.default_rng(opts.seed)
        for _ in range(opts.multistart):
            Y0 = y_init.values + _smooth_perturbation(y_init.grid, rng, opts.multistart_amplitude)
            if _det_min(ef, Y0) < opts.det_floor:
                continue
            Yc, rc = minimize_y(ef, t, Y0, z_fixed.values, opts)
            if rc.converged and rc.final_value < rep.final_value:
                Y, rep = Yc, rc
    return VectorField(y_init.grid, Y), rep


# -- z-step -------------------------------------------------------------------
def project_box(z, lower, upper):
    """Nodewise clamp; accepts fields or arrays and returns the same kind."""
    zv = z.values if isinstance(z, ScalarField) else np.asarray(z, dtype=float)
    lo = lower.values if isinstance(lower, ScalarField) else np.asarray(lower, dtype=float)
    hi = upper.values if isinstance(upper, ScalarField) else np.asarray(upper, dtype=float)
    if np.any(np.broadcast_to(lo, zv.shape) > np.broadcast_to(hi, zv.shape)):
        raise ValueError("bound violation: lower > upper")
    out = np.minimum(np.maximum(zv, lo), hi)
    return ScalarField(z.grid, out) if isinstance(z, ScalarField) else out


class ZObjective:
    """``F(z) = E(t, y, z) + H_tau(z) + G rho0 int (z_prev - z)`` with ``y`` frozen."""

    def __init__(self, ef: EnergyFunctional, t: float, Y: np.ndarray, z_prev: np.ndarray,
                 tau: float | None):
        self.ef, self.t, self.Y, self.z_prev, self.tau = ef, t, Y, z_prev, tau
        F, G = ef.kinematics(Y)
        if np.any(determinant(F) <= 0):
            raise InfeasibleStartError("z-step needs an orientation-preserving deformation")
        from .constitutive.densities import stored_density

        self.F = F
        self.W = stored_density(F, G, ef.params)
        P = ef.params
        self.lin = P.G * P.rho0 * ef.w

    def __call__(self, z: np.ndarray):
        val, grad = self.ef.value_and_grad_z(self.t, self.Y, z, self.tau, W=self.W, F=self.F)
        val += float(np.sum(self.lin * (self.z_prev - z)))
        return val, grad - self.lin


def minimize_z(obj: ZObjective, z0: np.ndarray, lower: np.ndarray, upper: np.ndarray,
               opts: SolverOptions) -> tuple[np.ndarray, SolveReport]:
    rep = SolveReport()
    z = project_box(z0, lower, upper)
    f, g = obj(z)
    z_start, f0 = z, f
    alpha = 1.0 / max(float(np.max(np.abs(g))), 1e-12)
    while True:
        pg = float(np.max(np.abs(z - project_box(z - g, lower, upper))))
        rep.final_value, rep.final_grad_norm = f, pg
        if pg <= opts.grad_tol:
            rep.converged = True
            break
        if rep.iterations >= opts.max_iters:
            break
        d = project_box(z - alpha * g, lower, upper) - z
        slope = float(np.sum(g * d))
        lam = 1.0
        accepted = None
        for _ in range(60):
            zt = z + lam * d
            ft, gt = obj(zt)
            if (ft < f and ft <= f + opts.ls_armijo * lam * slope) or _approximate_wolfe(
                    f, ft, slope, float(np.sum(gt * d)), opts.ls_armijo):
                accepted = (zt, ft, gt)
                break
            lam *= opts.ls_shrink
        if accepted is None or slope >= 0:
            rep.line_search_failures += 1
            break
        zt, ft, gt = accepted
        s, yv = zt - z, gt - g
        sy = float(np.sum(s * yv))
        alpha = float(np.sum(s * s)) / sy if sy > 0 else 1e10
        alpha = min(max(alpha, 1e-10), 1e10)
        z, f, g = zt, ft, gt
        rep.iterations += 1
    if f > f0:
        z, rep.final_value = z_start, f0
        g = obj(z)[1]
        rep.final_grad_norm = float(np.max(np.abs(z - project_box(z - g, lower, upper))))
        rep.converged = rep.final_grad_norm <= opts.grad_tol
    return z, rep


def solve_z_step(t: float, y_fixed: VectorField, z_prev: ScalarField, tau: float | None,
                 schedule: LoadSchedule, params: ModelParams,
                 opts: SolverOptions) -> tuple[ScalarField, SolveReport]:
    """Minimize the damage objective over ``0 <= z <= z_prev``, starting at ``z_prev``."""
    if y_fixed.grid != z_prev.grid:
        raise GridMismatchError("grid mismatch")
    zp = z_prev.values
    if np.any(zp < 0) or np.any(zp > 1):
        raise ValueError("z_prev must lie in [0, 1]")
    ef = functional(y_fixed.grid, schedule, params)
    obj = ZObjective(ef, t, y_fixed.values, zp, tau)
    z, rep = minimize_z(obj, zp, np.zeros_like(zp), zp, opts)
    return ScalarField(z_prev.grid, z), rep
