"""Brute-force reference computations.

The three-node bar oracle re-derives the discrete energy from scratch with
explicit 1D formulas (``np.gradient`` stencils, closed-form densities) and
minimizes it by exhaustive coarse-to-fine grid search, so it shares no code
with the assembled functional or the descent solvers.
"""
from __future__ import annotations

import itertools

import numpy as np

from ..constitutive.energy import dissipation
from ..constitutive.loads import LoadSchedule
from ..constitutive.params import ModelParams
from ..grid import Grid, ScalarField


# -- inf-convolution -------------------------------------------------------------
def inf_convolution_truncate(grid: Grid, values, lam: float, clamp: bool = True) -> np.ndarray:
    """Double McShane envelope by direct O(n^2) evaluation over all node pairs."""
    x = grid.coords
    u = np.asarray(values, dtype=float)
    dist = np.sum(np.abs(x[:, None, :] - x[None, :, :]), axis=2)
    lower = np.min(u[None, :] + lam * dist, axis=1)
    out = np.max(lower[None, :] - lam * dist, axis=1)
    return np.clip(out, 0.0, 1.0) if clamp else out


# -- total variation ---------------------------------------------------------------
def partition_supremum(zs, params: ModelParams, k1: int, k2: int) -> float:
    """Largest partition sum of dissipation distances of the left interpolant on
    ``[k1 τ, k2 τ]``, by enumerating every subset of intermediate nodes."""
    if k2 <= k1:
        return 0.0
    inner = list(range(k1 + 1, k2))
    best = 0.0
    for r in range(len(inner) + 1):
        for sub in itertools.combinations(inner, r):
            idx = [k1, *sub, k2]
            total = 0.0
            for a, b in zip(idx[:-1], idx[1:]):
                total += dissipation(ScalarField(zs[b].grid, zs[b].values - zs[a].values), params)
            best = max(best, total)
    return best


# -- three-node bar ------------------------------------------------------------------
class ThreeNodeBar:
    """Explicit energy of a 1D bar with three nodes, vectorized over candidates."""

    def __init__(self, grid: Grid, schedule: LoadSchedule, params: ModelParams):
        if grid.dim != 1 or grid.num_nodes != 3:
            raise ValueError("the bar oracle needs a 1D grid with three nodes")
        if params.psi != "ogden":
            raise ValueError("the bar oracle implements the Ogden-type density only")
        self.grid, self.schedule, self.P = grid, schedule, params
        self.h = grid.spacing[0]
        self.x = grid.axes[0]
        self.w = np.array([0.5, 1.0, 0.5]) * self.h
        self.ends = [i for i, f in ((0, "x0-"), (2, "x0+")) if f in schedule.dirichlet_faces]
        if schedule.neumann_faces or schedule.pressure is not None:
            raise ValueError("the bar oracle supports bulk and Dirichlet loads only")

    def _d1(self, V):
        return np.gradient(V, self.h, axis=-1, edge_order=2)

    def _W(self, Y):
        P = self.P
        F = self._d1(Y)
        with np.errstate(divide="ignore", invalid="ignore"):
            W = (P.a * np.abs(F) ** P.p + P.b + P.c * F ** P.r - 2 * P.d_log * np.log(F)
                 + P.e_s * F ** (-P.s)) - (P.a + P.b + P.c + P.e_s)
            if P.material_mode == "nonsimple":
                G2 = (Y[..., 0] - 2 * Y[..., 1] + Y[..., 2]) / self.h**2
                W = W + (P.eps_reg / P.p) * np.abs(G2)[..., None] ** P.p
        W = np.where(F > 0, W, np.inf)
        return F, W

    def _phi(self, F, Z):
        P = self.P
        gz = self._d1(Z)
        u = gz / F if P.material_mode == "nonsimple" else gz
        return P.rho0 / P.alpha * np.abs(u) ** P.alpha

    def _load(self, t, Y):
        s = self.schedule
        B = float(np.asarray(s.bulk(t)).ravel()[0])
        val = np.sum(self.w * B * Y, axis=-1)
        if self.ends:
            H, b = s.dirichlet_map(t)
            yD = (1 + H[0, 0]) * self.x + b[0]
            for i in self.ends:
                val = val - (Y[..., i] - yD[i]) ** 2 / (2 * self.P.eps_pen)
        return val

    def energy(self, t, Y, Z, tau=None):
        """``E(t, Y, Z)`` (+ ``H_tau``) for candidate arrays with last axis 3."""
        P = self.P
        Y = np.asarray(Y, float)
        Z = np.asarray(Z, float)
        F, W = self._W(Y)
        gam = np.maximum(Z, 0) ** 2 + P.eps_gamma
        with np.errstate(invalid="ignore"):
            val = np.sum(self.w * (gam * W + self._phi(F, Z)), axis=-1) - self._load(t, Y)
        if tau is not None and P.uses_regularization:
            val = val + tau ** P.kappa * np.sum(self.w * np.abs(self._d1(Z)) ** P.beta, axis=-1)
        return val

    def z_objective(self, t, Y, Z, z_prev, tau):
        P = self.P
        return self.energy(t, Y, Z, tau) + P.G * P.rho0 * np.sum(self.w * (z_prev - Z), axis=-1)


def _grid_search(fun, center, lo, hi, steps=(1e-2, 1e-3), span=10):
    """Coarse-to-fine exhaustive search over a box (at most three coordinates).

    The first level scans ``[lo, hi]``; each later level scans ``±span`` of
    its own step around the incumbent.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    best = None
    for level, h in enumerate(steps):
        if level == 0:
            axes = [np.arange(a, b + 0.5 * h, h) for a, b in zip(lo, hi)]
        else:
            axes = [np.clip(c + h * np.arange(-span, span + 1), a, b)
                    for c, a, b in zip(best, lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        vals = fun(pts)
        best = pts[int(np.nanargmin(np.where(np.isfinite(vals), vals, np.nan)))]
    return best, float(fun(best[None])[0])


def bar_y_oracle(bar: ThreeNodeBar, t, Z, width=0.1, steps=(1e-2, 1e-3, 1e-4)):
    """Global minimizer of ``Y -> E(t, Y, Z)`` over a box around the Dirichlet map."""
    H, b = bar.schedule.dirichlet_map(t)
    c = (1 + H[0, 0]) * bar.x + b[0]
    return _grid_search(lambda Y: bar.energy(t, Y, Z), c, c - width, c + width, steps)


def bar_z_oracle(bar: ThreeNodeBar, t, Y, z_prev, tau, steps=(1e-2, 1e-3, 1e-4)):
    """Global minimizer of the damage objective over ``0 <= Z <= z_prev``."""
    z_prev = np.asarray(z_prev, float)

    def fun(Z):
        Z = np.minimum(Z, z_prev)
        return bar.z_objective(t, Y, Z, z_prev, tau)

    Z, _ = _grid_search(fun, z_prev, np.zeros(3), z_prev, steps)
    Z = np.minimum(Z, z_prev)
    return Z, float(fun(Z[None])[0])


def bar_alternating_oracle(bar: ThreeNodeBar, z0, N: int, lambda0: float = 1.0,
                           width: float = 0.1):
    """Exhaustive-search version of the alternating scheme on the three-node bar."""
    from ..rothe import lipschitz_truncate, truncation_schedule

    T = bar.schedule.T
    tau = T / N
    z = lipschitz_truncate(ScalarField(bar.grid, z0), truncation_schedule(tau, bar.P, lambda0)
                           ).truncated.values
    y, _ = bar_y_oracle(bar, 0.0, z, width)
    ys, zs = [y], [z]
    for k in range(1, N + 1):
        t = k * T / N
        y, _ = bar_y_oracle(bar, t, z, width)
        z, _ = bar_z_oracle(bar, t, y, z, tau)
        ys.append(y)
        zs.append(z)
    return ys, zs


def one_node_z_oracle(W: float, z_prev: float, params: ModelParams, step: float = 1e-6):
    """Dense scan of ``(z^2 + eps) W - G rho0 z`` over ``[0, z_prev]``."""
    z = np.arange(0.0, z_prev + 0.5 * step, step)
    z = z[z <= z_prev]
    vals = (z * z + params.eps_gamma) * W - params.G * params.rho0 * z
    return float(z[int(np.argmin(vals))])
