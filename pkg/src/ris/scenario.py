"""A complete problem description: grid, model, loads, initial damage and options."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .constitutive.loads import LoadSchedule
from .constitutive.params import ModelParams
from .grid import Grid, ScalarField
from .rothe import RotheOptions, TimeGrid, Trajectory, run


@dataclass(frozen=True)
class VerifyOptions:
    stability_rtol: float = 1e-6
    semistability_rtol: float = 1e-8
    energy_rtol: float = 1e-8
    amplitudes: tuple = (1e-3, 1e-2, 5e-2)
    draws: int = 20
    semi_random: int = 200
    semi_truncated: int = 20
    shifts: tuple = (0.01, 0.05, 0.1)
    long_pairs: int = 10
    multistart: int = 0
    cn_enabled: bool = True
    cn_resolution: int = 64
    seed: int = 0


@dataclass
class Scenario:
    name: str
    grid: Grid
    params: ModelParams
    schedule: LoadSchedule
    z0: ScalarField
    time: TimeGrid
    rothe: RotheOptions = field(default_factory=RotheOptions)
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    snapshots: tuple = ()
    seed: int = 0
    workers: int = 1

    def with_steps(self, N: int) -> "Scenario":
        return replace(self, time=TimeGrid(self.time.T, N))

    def run(self, progress=None) -> Trajectory:
        return run(self.z0, self.time, self.schedule, self.params, self.rothe, progress)

    def snapshot_steps(self, num_steps: int) -> list[int]:
        if self.snapshots == ("all",):
            return list(range(num_steps + 1))
        return sorted({int(k) for k in self.snapshots if 0 <= int(k) <= num_steps})
