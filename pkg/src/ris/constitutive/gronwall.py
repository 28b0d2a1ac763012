"""A posteriori power-control data ``(C0, lambda, Lambda)``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .energy import EnergyFunctional
from .loads import LoadSchedule
from .params import ModelParams


@dataclass(frozen=True)
class GronwallData:
    """``C0`` and a rate ``lambda`` that is constant on each ``[times[i], times[i+1])``."""

    C0: float
    times: np.ndarray
    rates: np.ndarray

    def lambda_rate(self, t: float) -> float:
        i = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.rates) - 1))
        return float(self.rates[i])

    def Lambda(self, t: float) -> float:
        """Exact integral of the piecewise-constant rate from 0 to ``t``."""
        total = 0.0
        for t0, t1, r in zip(self.times[:-1], self.times[1:], self.rates):
            if t <= t0:
                break
            total += r * (min(t, t1) - t0)
        return total

    def scaled(self, factor: float) -> "GronwallData":
        return GronwallData(self.C0, self.times, self.rates * factor)


def gronwall_estimate(schedule: LoadSchedule, params: ModelParams,
                      samples: Iterable[tuple], functional: EnergyFunctional,
                      pad: float = 1.1) -> GronwallData:
    """Estimate ``C0`` and ``lambda`` from sampled states.

    ``samples`` yields ``(t, Y, Z, H)`` with ``H`` the (time-independent)
    regularization value already evaluated for ``Z``.  ``C0`` is
    ``1 + max(0, -min(E + H))``; on every schedule piece the rate is the
    largest sampled ``|dE/dt| / (E + H + C0)``, padded by 10%.  Samples
    sitting on a breakpoint contribute to both neighbouring pieces with the
    matching one-sided derivative.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sampled state")
    times = schedule.breakpoints()
    energies = []
    for t, Y, Z, H in samples:
        energies.append(functional.value(t, Y, Z, None) + H)
    energies = np.array(energies)
    C0 = 1.0 + max(0.0, -float(energies.min()))
    rates = np.zeros(len(times) - 1)
    if schedule.is_static:
        return GronwallData(C0, times, rates)
    for (t, Y, Z, H), e in zip(samples, energies):
        for i, (t0, t1) in enumerate(zip(times[:-1], times[1:])):
            if t0 <= t < t1:
                side = "right"
            elif t == t1:
                side = "left"
            else:
                continue
            p = functional.power(t, Y, Z, side)
            rates[i] = max(rates[i], abs(p) / (e + C0))
    return GronwallData(C0, times, pad * rates)
