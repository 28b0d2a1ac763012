"""Assembled energy, regularization, dissipation and their nodal gradients."""
from __future__ import annotations

import math

import numpy as np

from ..grid import Grid, GridMismatchError, ScalarField, VectorField, nodal_gradient, nodal_hessian
from ..kinematics import OrientationError, cofactor, determinant
from . import densities as dens
from .loads import (
    LoadSchedule,
    loading_gradient,
    loading_time_derivative,
    loading_value,
)
from .params import ModelParams


class EnergyFunctional:
    """Discrete energy ``E(t, y, z) (+ H_tau(z))`` on one grid.

    Works on raw nodal arrays: ``Y`` of shape ``(n, d)``, ``Z`` of shape ``(n,)``.
    All gradients are exact derivatives of the discrete values (chain rule
    through the difference stencils and the nodal quadrature).
    """

    def __init__(self, grid: Grid, schedule: LoadSchedule, params: ModelParams):
        if params.dim != grid.dim or schedule.dim != grid.dim:
            raise GridMismatchError("grid mismatch: params/schedule dimension differs from grid")
        self.grid = grid
        self.schedule = schedule
        self.params = params
        self.w = grid.weights
        self._DT = [D.T.tocsr() for D in grid.diff_ops]
        self._HT = {jk: H.T.tocsr() for jk, H in grid.hess_ops.items()}
        self.nonsimple = params.material_mode == "nonsimple"

    # -- kinematic fields ---------------------------------------------------
    def kinematics(self, Y: np.ndarray):
        F = nodal_gradient(self.grid, Y)
        G = nodal_hessian(self.grid, Y) if self.nonsimple else None
        return F, G

    def _grad_z(self, Z: np.ndarray) -> np.ndarray:
        return nodal_gradient(self.grid, Z)

    def _apply_DT(self, P: np.ndarray) -> np.ndarray:
        """``sum_j D_j^T P[..., j]`` for nodal ``P`` of shape ``(n, ..., d)``."""
        out = self._DT[0] @ P[..., 0]
        for j in range(1, self.grid.dim):
            out = out + self._DT[j] @ P[..., j]
        return out

    def _apply_HT(self, Q: np.ndarray) -> np.ndarray:
        out = 0.0
        for (j, k), HT in self._HT.items():
            q = Q[..., j, k] if j == k else Q[..., j, k] + Q[..., k, j]
            out = out + HT @ q
        return out

    # -- values -------------------------------------------------------------
    def regularization(self, Z: np.ndarray, tau: float | None) -> float:
        if tau is None or not self.params.uses_regularization:
            return 0.0
        P = self.params
        gz = self._grad_z(Z)
        return float(tau ** P.kappa * np.sum(self.w * np.linalg.norm(gz, axis=1) ** P.beta))

    def parts(self, t: float, Y: np.ndarray, Z: np.ndarray, tau: float | None = None) -> dict:
        """Individual energy contributions; ``stored`` is ``int gamma(z) W + phi``."""
        P = self.params
        F, G = self.kinematics(Y)
        det = determinant(F)
        if np.any(det <= 0):
            return {"feasible": False, "total": math.inf}
        try:
            W = dens.stored_density(F, G, P)
        except OrientationError:
            return {"feasible": False, "total": math.inf}
        gz = self._grad_z(Z)
        ph = dens.phi_terms(F, gz, P)
        bulk = float(np.sum(self.w * (dens.gamma(Z, P) * W)))
        grad_term = float(np.sum(self.w * ph))
        load = loading_value(self.grid, t, Y, det, self.schedule, P.eps_pen)
        reg = self.regularization(Z, tau)
        E = bulk + grad_term - load
        return {
            "feasible": True,
            "bulk": bulk,
            "phi": grad_term,
            "loading": load,
            "energy": E,
            "regularization": reg,
            "total": E + reg,
            "W": W,
            "det_min": float(det.min()),
        }

    def value(self, t: float, Y: np.ndarray, Z: np.ndarray, tau: float | None = None) -> float:
        return self.parts(t, Y, Z, tau)["total"]

    def power(self, t: float, Y: np.ndarray, Z: np.ndarray, side: str = "right") -> float:
        """``d/dt E(t, y, z) = -d/dt l(t, y, z)`` (one-sided at breakpoints)."""
        det = None
        if self.schedule.pressure is not None:
            det = determinant(nodal_gradient(self.grid, Y))
        return -loading_time_derivative(self.grid, t, Y, det, self.schedule,
                                        self.params.eps_pen, side)

    def stored_W(self, Y: np.ndarray) -> np.ndarray:
        F, G = self.kinematics(Y)
        return dens.stored_density(F, G, self.params)

    # -- gradients ------------------------------------------------------------
    def value_and_grad_y(self, t: float, Y: np.ndarray, Z: np.ndarray):
        """``E(t, Y, Z)`` and ``dE/dY``; ``(inf, None)`` when infeasible."""
        P = self.params
        F, G = self.kinematics(Y)
        det = determinant(F)
        if np.any(det <= 0):
            return math.inf, None
        try:
            W, dWdF, dWdG = dens.stored_density(F, G, P, grad=True)
        except OrientationError:
            return math.inf, None
        gz = self._grad_z(Z)
        ph, dphidF, _ = dens.phi_terms(F, gz, P, grad=True)
        gam = dens.gamma(Z, P)
        w = self.w
        load = loading_value(self.grid, t, Y, det, self.schedule, P.eps_pen)
        E = float(np.sum(w * (gam * W)) + np.sum(w * ph)) - load

        PF = (w * gam)[:, None, None] * dWdF + w[:, None, None] * dphidF
        pi = self.schedule.pressure
        if pi is not None:
            piv = float(np.asarray(pi(t)).ravel()[0])
            if piv != 0.0:
                PF = PF + (w * piv)[:, None, None] * cofactor(F)
        g = self._apply_DT(PF)
        if self.nonsimple:
            g = g + self._apply_HT((w * gam)[:, None, None, None] * dWdG)
        g = g - loading_gradient(self.grid, t, Y, self.schedule, P.eps_pen)
        return E, g

    def grad_y(self, t: float, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
        E, g = self.value_and_grad_y(t, Y, Z)
        if g is None:
            raise OrientationError("infeasible deformation: det grad y <= 0")
        return g

    def value_and_grad_z(self, t: float, Y: np.ndarray, Z: np.ndarray, tau: float | None,
                         W: np.ndarray | None = None, F: np.ndarray | None = None):
        """``E + H_tau`` and its gradient in ``Z`` for fixed ``Y``.

        ``W`` and ``F`` may be passed to skip recomputing the deformation part.
        """
        P = self.params
        if F is None:
            F, G = self.kinematics(Y)
            if np.any(determinant(F) <= 0):
                raise OrientationError("infeasible deformation: det grad y <= 0")
            W = dens.stored_density(F, G, P)
        w = self.w
        gz = self._grad_z(Z)
        ph, _, dphidg = dens.phi_terms(F, gz, P, grad=True)
        Zc = Z
        val = float(np.sum(w * (dens.gamma(Zc, P) * W)) + np.sum(w * ph))
        grad = w * dens.gamma_prime(Zc, P) * W + self._apply_DT(w[:, None] * dphidg)
        if tau is not None and P.uses_regularization:
            ng = np.linalg.norm(gz, axis=1)
            tk = tau ** P.kappa
            val += float(tk * np.sum(w * ng ** P.beta))
            coef = tk * P.beta * dens._safe_pow(ng, P.beta - 2)
            grad = grad + self._apply_DT((w * coef)[:, None] * gz)
        det = None
        if self.schedule.pressure is not None:
            det = determinant(F)
        val -= loading_value(self.grid, t, Y, det, self.schedule, P.eps_pen)
        return val, grad


# -- field-level API ----------------------------------------------------------
def _same_grid(*fields) -> Grid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("grid mismatch")
    return g


_CACHE: dict = {}


def functional(grid: Grid, schedule: LoadSchedule, params: ModelParams) -> EnergyFunctional:
    key = (grid, id(schedule), params)
    ef = _CACHE.get(key)
    if ef is None or ef.schedule is not schedule:
        if len(_CACHE) > 64:
            _CACHE.clear()
        ef = _CACHE[key] = EnergyFunctional(grid, schedule, params)
    return ef


def gamma(z, params: ModelParams):
    return dens.gamma(z, params)


def loading(t: float, y: VectorField, z: ScalarField, schedule: LoadSchedule,
            params: ModelParams) -> float:
    """Value of the loading functional; ``z`` is accepted but unused by this model."""
    grid = _same_grid(y, z)
    det = None
    if schedule.pressure is not None:
        det = determinant(nodal_gradient(grid, y.values))
    return loading_value(grid, t, y.values, det, schedule, params.eps_pen)


def power(t: float, y: VectorField, z: ScalarField, schedule: LoadSchedule,
          params: ModelParams, side: str = "right") -> float:
    grid = _same_grid(y, z)
    return functional(grid, schedule, params).power(t, y.values, z.values, side)


def dissipation(v: ScalarField, params: ModelParams, tol: float = 1e-12) -> float:
    """``int G rho0 |v|`` for ``v <= 0`` nodewise (up to ``tol``), else ``inf``."""
    vals = v.values if isinstance(v, ScalarField) else np.asarray(v, dtype=float)
    if np.any(vals > tol):
        return math.inf
    w = v.grid.weights
    return float(params.G * params.rho0 * np.sum(w * np.abs(vals)))


def regularization(z: ScalarField, tau: float, params: ModelParams) -> float:
    if not tau > 0:
        raise ValueError("tau must be positive")
    gz = nodal_gradient(z.grid, z.values)
    return float(tau ** params.kappa * np.sum(z.grid.weights * np.linalg.norm(gz, axis=1) ** params.beta))


def total_energy(t: float, y: VectorField, z: ScalarField, tau: float | None,
                 schedule: LoadSchedule, params: ModelParams) -> float:
    """``E(t, y, z)``, plus ``H_tau(z)`` when ``tau`` is given; ``inf`` if infeasible."""
    grid = _same_grid(y, z)
    return functional(grid, schedule, params).value(t, y.values, z.values, tau)


def grad_energy_y(t: float, y: VectorField, z: ScalarField, schedule: LoadSchedule,
                  params: ModelParams) -> VectorField:
    grid = _same_grid(y, z)
    return VectorField(grid, functional(grid, schedule, params).grad_y(t, y.values, z.values))


def grad_energy_z(t: float, y: VectorField, z: ScalarField, tau: float | None,
                  schedule: LoadSchedule, params: ModelParams) -> ScalarField:
    grid = _same_grid(y, z)
    _, g = functional(grid, schedule, params).value_and_grad_z(t, y.values, z.values, tau)
    return ScalarField(grid, g)
