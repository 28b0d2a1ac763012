"""Discrete certificates for the alternating scheme.

Each check evaluates energies through the public energy functions and
returns a ``CheckResult``; ``margin >= -tolerance`` is a pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..constitutive.energy import dissipation
from ..constitutive.gronwall import GronwallData, gronwall_estimate
from ..grid import ScalarField
from ..kinematics import ciarlet_necas_defect, det_lower_bound
from ..optim import SolverOptions, _smooth_perturbation, minimize_y
from ..rothe import Trajectory, lipschitz_truncate, total_variation, truncation_schedule
from ..scenario import VerifyOptions


@dataclass
class CheckResult:
    name: str
    where: str
    margin: float
    tolerance: float
    evaluated: int = 1
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return bool(self.margin >= -self.tolerance)

    def line(self) -> str:
        return (f"{self.name} {self.where} margin={self.margin:.17g} tol={self.tolerance:.17g} "
                f"evaluated={self.evaluated} skipped={self.skipped} "
                f"{'PASS' if self.passed else 'FAIL'}")


@dataclass
class StepCertificate:
    step: int
    stability_margin: float = math.nan
    semistability_margin: float = math.nan
    energy_inequality_slack: float = math.nan
    gronwall_slack: float = math.nan
    det_min: float = math.nan
    cn_defect: float | None = None
    passed: dict = field(default_factory=dict)


def _rng(opts: VerifyOptions, *key) -> np.random.Generator:
    return np.random.default_rng([opts.seed, *key])


def _opts(opts) -> VerifyOptions:
    return VerifyOptions() if opts is None else opts


def _truncation_level(traj: Trajectory) -> float:
    lam0 = traj.options.lambda0 if traj.options is not None else 1.0
    return truncation_schedule(traj.tau, traj.params, lam0)


# -- stability in y -------------------------------------------------------------
def check_stability(traj: Trajectory, k: int, competitors: VerifyOptions | None = None,
                    y_opts=None) -> CheckResult:
    """``min E(kτ, ỹ, z_{k-1}) - E(kτ, y_k, z_{k-1})`` over the competitor families.

    Families: smooth random perturbations of ``y_k`` (every amplitude x
    ``draws``), all earlier states ``y_j``, and local re-solves started at
    ``y_k`` and at ``multistart`` perturbed points.  At ``k = 0`` the damage
    is the truncated initial datum ``z_0``.
    """
    opts = _opts(competitors)
    ef = traj.functional()
    t = traj.t(k)
    zc = traj.zs[max(k - 1, 0)].values
    yk = traj.ys[k].values
    ref = ef.value(t, yk, zc)
    rng = _rng(opts, 1, k)
    cands = []
    for amp in opts.amplitudes:
        for _ in range(opts.draws):
            cands.append(yk + _smooth_perturbation(traj.ys[k].grid, rng, amp))
    cands.extend(traj.ys[j].values for j in range(k))
    if y_opts is None:
        y_opts = traj.options.y if traj.options is not None else SolverOptions()
    starts = [yk] + [yk + _smooth_perturbation(traj.ys[k].grid, rng, opts.amplitudes[-1])
                     for _ in range(opts.multistart)]
    for Y0 in starts:
        try:
            cands.append(minimize_y(ef, t, Y0, zc, y_opts)[0])
        except ValueError:
            continue
    margin, skipped = math.inf, 0
    for Y in cands:
        val = ef.value(t, Y, zc)
        if not math.isfinite(val):
            skipped += 1
            continue
        margin = min(margin, val - ref)
    tol = opts.stability_rtol * (1 + abs(ref))
    return CheckResult("stability", f"k={k}", margin, tol, len(cands) - skipped, skipped)


# -- semi-stability in z -----------------------------------------------------------
def semistability_competitors(traj: Trajectory, k: int, opts: VerifyOptions) -> list[np.ndarray]:
    """Feasible damage competitors ``0 <= z~ <= z_k``."""
    zk = traj.zs[k].values
    grid = traj.zs[k].grid
    rng = _rng(opts, 2, k)
    out = [zk.copy()]
    for i in range(opts.semi_random):
        amp = 10.0 ** rng.uniform(-4, -0.3)
        if i % 2 == 0:
            r = rng.uniform(0, 1, zk.shape)
        else:
            r = np.abs(_smooth_perturbation(grid, rng, 1.0)[:, 0])
            r /= max(float(r.max()), 1e-300)
        out.append(np.clip(zk - amp * r, 0.0, zk))
    lam = _truncation_level(traj)
    for _ in range(opts.semi_truncated):
        amp = 10.0 ** rng.uniform(-3, -0.3)
        u = np.clip(zk - amp * rng.uniform(0, 1, zk.shape), 0.0, 1.0)
        trunc = lipschitz_truncate(ScalarField(grid, u), lam).truncated.values
        out.append(np.minimum(trunc, zk))
    for c in opts.shifts:
        out.append(np.maximum(zk - c, 0.0))
    return out


def check_semistability(traj: Trajectory, k: int, competitors: VerifyOptions | None = None
                        ) -> CheckResult:
    """``min [E(z~) + H(z~) + R(z~ - z_k)] - [E(z_k) + H(z_k)]`` at ``(kτ, y_k)``."""
    opts = _opts(competitors)
    ef = traj.functional()
    t, tau = traj.t(k), traj.tau
    yk, zk = traj.ys[k].values, traj.zs[k]
    ref = ef.value(t, yk, zk.values, tau)
    cands = semistability_competitors(traj, k, opts)
    margin = math.inf
    for z in cands:
        R = dissipation(ScalarField(zk.grid, z - zk.values), traj.params)
        margin = min(margin, ef.value(t, yk, z, tau) + R - ref)
    tol = opts.semistability_rtol * (1 + abs(ref))
    return CheckResult("semistability", f"k={k}", margin, tol, len(cands))


# -- energy inequality ----------------------------------------------------------------
def energy_inequality_slack(traj: Trajectory, k1: int, k2: int) -> float:
    lhs = traj.E[k2] + traj.H[k2] + total_variation(traj, traj.t(k1), traj.t(k2))
    rhs = traj.E[k1] + traj.H[k1] + math.fsum(traj.work[k1 + 1:k2 + 1])
    return rhs - lhs


def check_energy_inequality(traj: Trajectory, k1: int, k2: int,
                            opts: VerifyOptions | None = None) -> CheckResult:
    """Upper energy estimate between nodes ``k1 <= k2`` with exact power integrals."""
    opts = _opts(opts)
    if not 0 <= k1 <= k2 <= traj.num_steps:
        raise ValueError("need 0 <= k1 <= k2 <= N")
    slack = energy_inequality_slack(traj, k1, k2)
    scale = 1 + max(abs(traj.E[j]) for j in range(k1, k2 + 1))
    return CheckResult("energy_inequality", f"k1={k1} k2={k2}", slack,
                       (k2 - k1) * opts.energy_rtol * scale)


def energy_inequality_pairs(N: int, opts: VerifyOptions) -> list[tuple[int, int]]:
    """All consecutive pairs plus ``long_pairs`` random long-range pairs."""
    pairs = [(k - 1, k) for k in range(1, N + 1)]
    if N >= 2:
        rng = _rng(opts, 3, N)
        seen = set(pairs)
        total = N * (N + 1) // 2
        while len(seen) < min(total, N + opts.long_pairs):
            a, b = sorted(int(v) for v in rng.integers(0, N + 1, size=2))
            if a < b and (a, b) not in seen:
                seen.add((a, b))
                pairs.append((a, b))
    return pairs


# -- Gronwall ------------------------------------------------------------------------
def gronwall_data(traj: Trajectory, pad: float = 1.1) -> GronwallData:
    """Sample ``(y_{k-1}, z_{k-1})`` at five times across each step and ``(y_k, z_k)`` at ``kτ``."""
    samples = [(0.0, traj.ys[0].values, traj.zs[0].values, traj.H[0])]
    for k in range(1, traj.num_steps + 1):
        Y, Z, H = traj.ys[k - 1].values, traj.zs[k - 1].values, traj.H[k - 1]
        for s in np.linspace(traj.t(k - 1), traj.t(k), 5):
            samples.append((float(s), Y, Z, H))
        samples.append((traj.t(k), traj.ys[k].values, traj.zs[k].values, traj.H[k]))
    return gronwall_estimate(traj.schedule, traj.params, samples, traj.functional(), pad)


def check_gronwall(traj: Trajectory, gronwall: GronwallData,
                   opts: VerifyOptions | None = None) -> list[CheckResult]:
    """``E_k + H_k + C0 + sum R_j <= (E_0 + H_0 + C0) exp(Lambda(kτ))`` for every ``k``."""
    opts = _opts(opts)
    C0 = gronwall.C0
    base = traj.E[0] + traj.H[0] + C0
    out = []
    diss = 0.0
    for k in range(traj.num_steps + 1):
        diss += traj.R[k]
        lhs = traj.E[k] + traj.H[k] + C0 + diss
        rhs = base * math.exp(gronwall.Lambda(traj.t(k)))
        tol = max(k, 1) * opts.energy_rtol * (1 + abs(traj.E[k]))
        out.append(CheckResult("gronwall", f"k={k}", rhs - lhs, tol))
    return out


# -- bundle -------------------------------------------------------------------------
@dataclass
class CertificateBundle:
    records: list
    steps: list
    passed: bool
    failure: str | None = None

    def lines(self, header: dict | None = None) -> list[str]:
        out = ["RIS-CERTIFICATE v1"]
        for key, val in (header or {}).items():
            out.append(f"{key} {val}")
        out.extend(r.line() for r in self.records)
        if self.failure:
            out.append(f"solver_failure {self.failure}")
        out.append(f"CERTIFICATE {'PASS' if self.passed else 'FAIL'}")
        return out

    def write(self, path, header: dict | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(self.lines(header)) + "\n")


def _initial_condition(traj: Trajectory) -> CheckResult:
    """``z_0`` must be the truncation of the supplied initial damage."""
    lam = _truncation_level(traj)
    ref = lipschitz_truncate(traj.z_initial, lam).truncated.values
    err = float(np.max(np.abs(ref - traj.zs[0].values)))
    return CheckResult("initial_condition", "k=0", -err, 0.0)


def check_separately_global_certificate(traj: Trajectory, opts: VerifyOptions | None = None,
                                        y_opts=None, snapshots=(), gronwall=None
                                        ) -> CertificateBundle:
    """All discrete conditions: initial datum, stability and semi-stability at
    every step, energy inequality on consecutive and random long-range pairs,
    the Gronwall bound, and the injectivity defect at the snapshot steps."""
    opts = _opts(opts)
    N = traj.num_steps
    records: list[CheckResult] = []
    steps = [StepCertificate(k) for k in range(N + 1)]
    if traj.z_initial is not None and N >= 0:
        records.append(_initial_condition(traj))
    for k in range(N + 1):
        r = check_stability(traj, k, opts, y_opts)
        records.append(r)
        steps[k].stability_margin = r.margin
        steps[k].passed["stability"] = r.passed
        steps[k].det_min = det_lower_bound(traj.ys[k])
    for k in range(1, N + 1):
        r = check_semistability(traj, k, opts)
        records.append(r)
        steps[k].semistability_margin = r.margin
        steps[k].passed["semistability"] = r.passed
    for k1, k2 in energy_inequality_pairs(N, opts):
        r = check_energy_inequality(traj, k1, k2, opts)
        records.append(r)
        if k2 == k1 + 1:
            steps[k2].energy_inequality_slack = r.margin
            steps[k2].passed["energy_inequality"] = r.passed
    if N >= 0 and traj.ys:
        g = gronwall if gronwall is not None else gronwall_data(traj)
        for k, r in enumerate(check_gronwall(traj, g, opts)):
            records.append(r)
            steps[k].gronwall_slack = r.margin
            steps[k].passed["gronwall"] = r.passed
    if opts.cn_enabled:
        for k in snapshots:
            if k > N:
                continue
            cn = ciarlet_necas_defect(traj.ys[k], opts.cn_resolution)
            records.append(CheckResult("ciarlet_necas", f"k={k}", cn.tolerance - cn.defect, 0.0))
            steps[k].cn_defect = float(cn.defect)
            steps[k].passed["ciarlet_necas"] = cn.defect <= cn.tolerance
    failure = None if traj.failure is None else str(traj.failure)
    passed = all(r.passed for r in records) and failure is None
    return CertificateBundle(records, steps, passed, failure)
