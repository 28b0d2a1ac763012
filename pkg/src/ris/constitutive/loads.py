"""Time-dependent loading: bulk and surface forces, penalized Dirichlet data, pressure."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..grid import Grid


class ScheduleError(ValueError):
    pass


class PiecewiseAffine:
    """Continuous, piecewise-affine function of time with array values.

    ``values[i]`` is the value at ``times[i]``.  Outside the breakpoint
    range the function is extended by constants.
    """

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float).ravel()
        self.values = np.asarray(values, dtype=float)
        if self.values.shape[0] != self.times.size or self.times.size == 0:
            raise ScheduleError("need one value per breakpoint")
        if np.any(np.diff(self.times) <= 0):
            raise ScheduleError("breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, value) -> "PiecewiseAffine":
        value = np.asarray(value, dtype=float)
        return cls([0.0], value[None])

    @property
    def is_constant(self) -> bool:
        return self.times.size == 1 or bool(np.all(self.values == self.values[0]))

    def _piece(self, t: float, side: str) -> int:
        if self.times.size == 1:
            return -1
        if side == "right":
            i = int(np.searchsorted(self.times, t, side="right")) - 1
        else:
            i = int(np.searchsorted(self.times, t, side="left")) - 1
        return min(max(i, 0), self.times.size - 2)

    def __call__(self, t: float) -> np.ndarray:
        if t <= self.times[0]:
            return self.values[0]
        if t >= self.times[-1]:
            return self.values[-1]
        i = self._piece(t, "right")
        t0, t1 = self.times[i], self.times[i + 1]
        lam = (t - t0) / (t1 - t0)
        return (1.0 - lam) * self.values[i] + lam * self.values[i + 1]

    def slope(self, t: float, side: str = "right") -> np.ndarray:
        """Time derivative on the piece to the ``side`` of ``t``."""
        tt = self.times
        if tt.size == 1 or (side == "right" and t >= tt[-1]) or (side == "left" and t <= tt[0]) \
                or t < tt[0] or t > tt[-1]:
            return np.zeros_like(self.values[0])
        i = self._piece(t, side)
        return (self.values[i + 1] - self.values[i]) / (self.times[i + 1] - self.times[i])


def _zero(shape) -> PiecewiseAffine:
    return PiecewiseAffine.constant(np.zeros(shape))


@dataclass
class LoadSchedule:
    """Loads of the form

    ``l(t, y) = int B.y + int_{Gamma_N} S.y - 1/(2 eps_pen) int_{Gamma_D} |y - y_D|^2
    - int pi det grad y``

    with ``y_D(t)(x) = (I + H(t)) x + b(t)``.  ``dirichlet`` holds the
    flattened ``(H, b)`` pair.
    """

    dim: int
    T: float = 1.0
    bulk: PiecewiseAffine | None = None
    surface: PiecewiseAffine | None = None
    dirichlet: PiecewiseAffine | None = None
    pressure: PiecewiseAffine | None = None
    dirichlet_faces: tuple[str, ...] = ()
    neumann_faces: tuple[str, ...] = ()
    _components: tuple = field(init=False, repr=False, default=())

    def __post_init__(self):
        d = self.dim
        if self.bulk is None:
            self.bulk = _zero(d)
        if self.surface is None:
            self.surface = _zero(d)
        if self.dirichlet is None:
            self.dirichlet = _zero(d * d + d)
        self.dirichlet_faces = tuple(self.dirichlet_faces)
        self.neumann_faces = tuple(self.neumann_faces)
        self._components = tuple(
            c for c in (self.bulk, self.surface, self.dirichlet, self.pressure) if c is not None
        )

    @classmethod
    def static(cls, dim: int, T: float = 1.0, **kw) -> "LoadSchedule":
        return cls(dim=dim, T=T, **kw)

    def breakpoints(self) -> np.ndarray:
        pts = {0.0, float(self.T)}
        for c in self._components:
            pts.update(float(t) for t in c.times if 0.0 < t < self.T)
        return np.array(sorted(pts))

    @property
    def is_static(self) -> bool:
        return all(c.is_constant for c in self._components)

    def check_time(self, t: float) -> None:
        if t < -1e-12 * max(1.0, self.T) or t > self.T * (1 + 1e-12):
            raise ScheduleError(f"t={t} outside schedule [0, {self.T}]")

    def dirichlet_map(self, t: float, side: str | None = None) -> tuple[np.ndarray, np.ndarray]:
        d = self.dim
        v = self.dirichlet(t) if side is None else self.dirichlet.slope(t, side)
        H = v[: d * d].reshape(d, d)
        b = v[d * d:]
        return H, b

    def dirichlet_values(self, grid: Grid, t: float) -> np.ndarray:
        H, b = self.dirichlet_map(t)
        x = grid.coords
        return x + x @ H.T + b

    def dirichlet_rate(self, grid: Grid, t: float, side: str = "right") -> np.ndarray:
        H, b = self.dirichlet_map(t, side)
        return grid.coords @ H.T + b

    def weights(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        return _boundary_weights(grid, self.dirichlet_faces, self.neumann_faces)


@lru_cache(maxsize=32)
def _boundary_weights(grid: Grid, dfaces: tuple, nfaces: tuple):
    wd = grid.face_weights(dfaces)
    wn = grid.face_weights(nfaces)
    wd.setflags(write=False)
    wn.setflags(write=False)
    return wd, wn


def _pressure_value(schedule: LoadSchedule, t: float) -> float:
    return 0.0 if schedule.pressure is None else float(np.asarray(schedule.pressure(t)).ravel()[0])


def loading_value(grid: Grid, t: float, Y: np.ndarray, det: np.ndarray | None,
                  schedule: LoadSchedule, eps_pen: float) -> float:
    """Array form of the loading functional (``det`` needed only with pressure)."""
    schedule.check_time(t)
    w = grid.weights
    wd, wn = schedule.weights(grid)
    B = np.broadcast_to(schedule.bulk(t), Y.shape)
    S = np.broadcast_to(schedule.surface(t), Y.shape)
    val = np.sum(w * np.sum(B * Y, axis=1)) + np.sum(wn * np.sum(S * Y, axis=1))
    if wd.any():
        r = Y - schedule.dirichlet_values(grid, t)
        val -= np.sum(wd * np.sum(r * r, axis=1)) / (2.0 * eps_pen)
    pi = _pressure_value(schedule, t)
    if pi != 0.0:
        val -= pi * np.sum(w * det)
    return float(val)


def loading_time_derivative(grid: Grid, t: float, Y: np.ndarray, det: np.ndarray | None,
                            schedule: LoadSchedule, eps_pen: float,
                            side: str = "right") -> float:
    schedule.check_time(t)
    w = grid.weights
    wd, wn = schedule.weights(grid)
    dB = np.broadcast_to(schedule.bulk.slope(t, side), Y.shape)
    dS = np.broadcast_to(schedule.surface.slope(t, side), Y.shape)
    val = np.sum(w * np.sum(dB * Y, axis=1)) + np.sum(wn * np.sum(dS * Y, axis=1))
    if wd.any():
        r = Y - schedule.dirichlet_values(grid, t)
        val += np.sum(wd * np.sum(r * schedule.dirichlet_rate(grid, t, side), axis=1)) / eps_pen
    if schedule.pressure is not None:
        dpi = float(np.asarray(schedule.pressure.slope(t, side)).ravel()[0])
        if dpi != 0.0:
            val -= dpi * np.sum(w * det)
    return float(val)


def loading_gradient(grid: Grid, t: float, Y: np.ndarray, schedule: LoadSchedule,
                     eps_pen: float) -> np.ndarray:
    """``d l / dY`` without the pressure part (that one goes through ``cof``)."""
    w = grid.weights
    wd, wn = schedule.weights(grid)
    g = w[:, None] * np.broadcast_to(schedule.bulk(t), Y.shape)
    g = g + wn[:, None] * np.broadcast_to(schedule.surface(t), Y.shape)
    if wd.any():
        g = g - wd[:, None] * (Y - schedule.dirichlet_values(grid, t)) / eps_pen
    return g
