"""Spatially uniform (0-D) toy: energetic vs separately global incremental paths.

State: scalar stretch ``y`` and damage ``z`` on the grid ``{0, dz, ..., 1}``.
Energy ``E(t, y, z) = (z^2 + eps) psi(y) + k (y - L(t))^2`` with a quadratic or
double-well ``psi``; dissipation ``G (z_prev - z)`` for ``z <= z_prev``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class ToyParams:
    mu: float = 1.0
    k_pen: float = 0.05
    eps_gamma: float = 1e-3
    G: float = 0.1
    psi: str = "quadratic"
    y_well: float = 1.5
    L0: float = 1.0
    L1: float = 3.0
    N: int = 40
    z_step: float = 1e-3
    y_lo: float = 0.0
    y_hi: float = 5.0
    y_step: float = 1e-3

    def __post_init__(self):
        if self.psi not in ("quadratic", "double_well"):
            raise ValueError("psi must be 'quadratic' or 'double_well'")
        if self.psi == "double_well" and self.y_well == 1.0:
            raise ValueError("y_well must differ from 1")
        if not (self.mu > 0 and self.k_pen > 0 and self.eps_gamma > 0 and self.G >= 0):
            raise ValueError("mu, k_pen, eps_gamma must be positive and G nonnegative")
        if self.N < 1 or not 0 < self.z_step <= 1 or not self.y_lo < self.y_hi:
            raise ValueError("invalid discretization")
        if abs(round(1 / self.z_step) * self.z_step - 1) > 1e-12:
            raise ValueError("z_step must divide 1")

    def replace(self, **kw) -> "ToyParams":
        return replace(self, **kw)

    def load(self, k: int) -> float:
        return self.L0 + (self.L1 - self.L0) * k / self.N

    @property
    def z_grid(self) -> np.ndarray:
        m = int(round(1 / self.z_step))
        return np.arange(m + 1) / m

    def psi_value(self, y):
        y = np.asarray(y, dtype=float)
        q = 0.5 * self.mu * (y - 1.0) ** 2
        if self.psi == "quadratic":
            return q
        return q * (y - self.y_well) ** 2 / (self.y_well - 1.0) ** 2

    def energy(self, k: int, y, z):
        z = np.asarray(z, dtype=float)
        return (z * z + self.eps_gamma) * self.psi_value(y) + self.k_pen * (y - self.load(k)) ** 2


# -- y minimization: two independent routes -----------------------------------------
def _y_scan(P: ToyParams, k: int, z: np.ndarray):
    """Dense scan plus vectorized golden-section refinement, one ``y`` per ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    ys = np.arange(P.y_lo, P.y_hi + 0.5 * P.y_step, P.y_step)
    vals = P.energy(k, ys[None, :], z[:, None])
    i = np.argmin(vals, axis=1)
    a = ys[np.maximum(i - 1, 0)]
    b = ys[np.minimum(i + 1, ys.size - 1)]
    g = (math.sqrt(5) - 1) / 2
    for _ in range(60):
        c = b - g * (b - a)
        d = a + g * (b - a)
        left = P.energy(k, c, z) <= P.energy(k, d, z)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    y = 0.5 * (a + b)
    return y, P.energy(k, y, z)


def _y_roots(P: ToyParams, k: int, z: float) -> float:
    """Global minimizer over ``[y_lo, y_hi]`` from the real roots of the cubic
    (or linear) stationarity equation and the interval ends."""
    g = z * z + P.eps_gamma
    L = P.load(k)
    if P.psi == "quadratic":
        # g mu (y - 1) + 2 k (y - L) = 0
        cands = [(g * P.mu + 2 * P.k_pen * L) / (g * P.mu + 2 * P.k_pen)]
    else:
        # psi = c (y-1)^2 (y-w)^2, c = mu / (2 (w-1)^2)
        c = 0.5 * P.mu / (P.y_well - 1.0) ** 2
        w = P.y_well
        # d/dy (y-1)^2 (y-w)^2 = 2 (y-1)(y-w)(2y - 1 - w)
        p1 = np.polymul([1.0, -1.0], [1.0, -w])
        dpsi = 2 * c * np.polymul(p1, [2.0, -1.0 - w])
        coeffs = g * dpsi + np.array([0.0, 0.0, 2 * P.k_pen, -2 * P.k_pen * L])
        roots = np.roots(coeffs)
        cands = [r.real for r in roots if abs(r.imag) < 1e-9]
    cands = [min(max(y, P.y_lo), P.y_hi) for y in cands] + [P.y_lo, P.y_hi]
    vals = [P.energy(k, y, z) for y in cands]
    return float(cands[int(np.argmin(vals))])


# -- paths --------------------------------------------------------------------------------
def energetic_path(P: ToyParams):
    """Joint global minimization of ``E + R`` over the z-grid at every step."""
    zg = P.z_grid
    ys_best, _ = _y_scan(P, 0, np.array([1.0]))
    z_idx = zg.size - 1
    zs, ys = [1.0], [float(ys_best[0])]
    for k in range(1, P.N + 1):
        cand = zg[: z_idx + 1]
        y, e = _y_scan(P, k, cand)
        total = e + P.G * (zg[z_idx] - cand)
        j = int(np.argmin(total))
        z_idx = j
        zs.append(float(zg[j]))
        ys.append(float(y[j]))
    return np.array(ys), np.array(zs)


def separately_global_oracle(P: ToyParams):
    """Alternating steps with exhaustive search: global ``y`` at fixed ``z``,
    then the best grid ``z <= z_prev`` at fixed ``y``."""
    zg = P.z_grid
    z_idx = zg.size - 1
    y0, _ = _y_scan(P, 0, np.array([1.0]))
    ys, zs = [float(y0[0])], [1.0]
    for k in range(1, P.N + 1):
        y, _ = _y_scan(P, k, np.array([zg[z_idx]]))
        y = float(y[0])
        cand = zg[: z_idx + 1]
        total = P.energy(k, y, cand) + P.G * (zg[z_idx] - cand)
        z_idx = int(np.argmin(total))
        ys.append(y)
        zs.append(float(zg[z_idx]))
    return np.array(ys), np.array(zs)


def alternating_path(P: ToyParams):
    """The alternating scheme with closed-form solves.

    y-step from the stationarity roots; z-step ``z = clip(G / (2 psi), 0, z_prev)``
    (the minimizer of the convex quadratic ``(z^2 + eps) psi - G z``) rounded
    to the nearest grid value, which is the grid minimizer of that parabola.
    """
    m = int(round(1 / P.z_step))
    z_idx = m
    ys, zs = [_y_roots(P, 0, 1.0)], [1.0]
    for k in range(1, P.N + 1):
        y = _y_roots(P, k, z_idx / m)
        psi = float(P.psi_value(y))
        if psi > 0:
            zc = min(max(P.G / (2 * psi), 0.0), z_idx / m)
            z_idx = min(int(round(zc * m)), z_idx)
        ys.append(y)
        zs.append(z_idx / m)
    return np.array(ys), np.array(zs)


def onset_step(zs) -> int | None:
    idx = np.flatnonzero(np.asarray(zs) < 1.0)
    return int(idx[0]) if idx.size else None


@dataclass
class ComparisonRecord:
    params: ToyParams
    loads: np.ndarray
    energetic_y: np.ndarray
    energetic_z: np.ndarray
    oracle_y: np.ndarray
    oracle_z: np.ndarray
    alternating_y: np.ndarray
    alternating_z: np.ndarray
    onset_energetic: int | None
    onset_alternating: int | None
    extra: dict = field(default_factory=dict)

    @property
    def paths_differ(self) -> bool:
        return not np.array_equal(self.energetic_z, self.alternating_z)

    @property
    def oracle_agrees(self) -> bool:
        """Alternating z-path equals the exhaustive separately global path on the grid."""
        m = int(round(1 / self.params.z_step))
        return bool(np.array_equal(np.rint(self.oracle_z * m), np.rint(self.alternating_z * m)))

    @property
    def ordering_holds(self) -> bool:
        """Energetic onset is no later than the separately global one."""
        if self.onset_alternating is None:
            return True
        return self.onset_energetic is not None and self.onset_energetic <= self.onset_alternating

    def rows(self) -> list[dict]:
        return [
            {"k": k, "load": self.loads[k], "energetic_y": self.energetic_y[k],
             "energetic_z": self.energetic_z[k], "oracle_y": self.oracle_y[k],
             "oracle_z": self.oracle_z[k], "alternating_y": self.alternating_y[k],
             "alternating_z": self.alternating_z[k]}
            for k in range(self.params.N + 1)
        ]

    def summary(self) -> dict:
        return {
            **{f"param_{k}": v for k, v in asdict(self.params).items()},
            "onset_energetic": self.onset_energetic,
            "onset_alternating": self.onset_alternating,
            "paths_differ": self.paths_differ,
            "ordering_holds": self.ordering_holds,
            "oracle_agrees": self.oracle_agrees,
        }


def compare_solution_concepts(toy_params: ToyParams | None = None) -> ComparisonRecord:
    P = ToyParams() if toy_params is None else toy_params
    ey, ez = energetic_path(P)
    oy, oz = separately_global_oracle(P)
    ay, az = alternating_path(P)
    loads = np.array([P.load(k) for k in range(P.N + 1)])
    return ComparisonRecord(P, loads, ey, ez, oy, oz, ay, az, onset_step(ez), onset_step(az))


def scan_dissipation(base: ToyParams, Gs) -> list[ComparisonRecord]:
    """Compare both concepts for each ``G`` in ``Gs``."""
    return [compare_solution_concepts(base.replace(G=float(G))) for G in Gs]
