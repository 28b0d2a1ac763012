"""Time-step refinement sweeps."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..rothe import Trajectory, interpolant
from ..scenario import Scenario


def worker_count(requested: int | None = None) -> int:
    """Worker bound: ``RIS_THREADS`` when set, else ``requested`` (default 1)."""
    env = os.environ.get("RIS_THREADS", "").strip()
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("RIS_THREADS must be a positive integer")
        return n
    return max(1, int(requested or 1))


@dataclass
class SweepReport:
    Ns: list
    taus: list
    probe_times: np.ndarray
    final_energy: list = field(default_factory=list)
    max_H: list = field(default_factory=list)
    H0: list = field(default_factory=list)
    det_min: list = field(default_factory=list)
    total_dissipation: list = field(default_factory=list)
    dissipation_curves: list = field(default_factory=list)
    field_diffs: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    @property
    def uniform_det_bound(self) -> float:
        return float(min(self.det_min)) if self.det_min else math.nan

    @property
    def max_H_strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.max_H, self.max_H[1:]))

    def H0_rate_factors(self, kappa: float) -> list[float]:
        """Observed ``H0`` ratio between consecutive levels over the ``τ^(κ/2)`` prediction."""
        out = []
        for (t0, h0), (t1, h1) in zip(zip(self.taus, self.H0), zip(self.taus[1:], self.H0[1:])):
            out.append((h1 / h0) / (t1 / t0) ** (kappa / 2) if h0 > 0 else math.nan)
        return out

    def rows(self) -> list[dict]:
        rows = []
        for i, N in enumerate(self.Ns):
            rows.append({
                "N": N,
                "tau": self.taus[i],
                "final_energy": self.final_energy[i],
                "max_H": self.max_H[i],
                "H0": self.H0[i],
                "det_min": self.det_min[i],
                "total_dissipation": self.total_dissipation[i],
                "field_diff_to_previous": self.field_diffs[i - 1] if i > 0 else math.nan,
                "failure": self.failures.get(N, ""),
            })
        return rows


def _check_nested(Ns) -> list[int]:
    Ns = [int(n) for n in Ns]
    if not Ns or any(n < 1 for n in Ns):
        raise ValueError("need positive step counts")
    for a, b in zip(Ns, Ns[1:]):
        if b <= a or b % a:
            raise ValueError("step counts must increase with each one dividing the next")
    return Ns


def _run(scenario: Scenario) -> Trajectory:
    return scenario.run()


def tau_sweep(scenario: Scenario, Ns, workers: int | None = None,
              keep_trajectories: bool = False):
    """Run ``scenario`` for each step count in ``Ns`` (nested refinements).

    Runs are independent and may execute in parallel processes; results do
    not depend on the worker count.
    """
    Ns = _check_nested(Ns)
    runs = [scenario.with_steps(N) for N in Ns]
    nw = min(worker_count(workers if workers is not None else scenario.workers), len(runs))
    if nw > 1:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            trajs = list(ex.map(_run, runs))
    else:
        trajs = [_run(s) for s in runs]
    T = scenario.time.T
    probes = np.array([k * T / Ns[0] for k in range(Ns[0] + 1)])
    rep = SweepReport(Ns, [T / N for N in Ns], probes)
    prev_z = None
    for N, tr in zip(Ns, trajs):
        if not tr.completed:
            rep.failures[N] = str(tr.failure) if tr.failure else "incomplete"
        rep.final_energy.append(tr.E[-1] + tr.H[-1] if tr.E else math.nan)
        rep.max_H.append(max(tr.H) if tr.H else math.nan)
        rep.H0.append(tr.H[0] if tr.H else math.nan)
        rep.det_min.append(min(tr.det_min) if tr.det_min else math.nan)
        cum = tr.cumulative_dissipation()
        rep.total_dissipation.append(float(cum[-1]) if len(cum) else math.nan)
        ratio = N // Ns[0]
        curve = np.array([cum[k * ratio] if k * ratio < len(cum) else math.nan
                          for k in range(Ns[0] + 1)])
        rep.dissipation_curves.append(curve)
        zs = np.stack([interpolant(tr, "left", t)[1].values for t in probes]) \
            if tr.completed else None
        if N != Ns[0]:
            ok = zs is not None and prev_z is not None
            rep.field_diffs.append(float(np.max(np.abs(zs - prev_z))) if ok else math.nan)
        prev_z = zs
    if keep_trajectories:
        return rep, trajs
    return rep
