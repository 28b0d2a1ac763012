import copy
import dataclasses
import re

import numpy as np
import pytest

from conftest import bundled
from ris.constitutive.energy import dissipation
from ris.grid import ScalarField, VectorField
from ris.scenario import VerifyOptions
from ris.verify import (
    check_energy_inequality,
    check_gronwall,
    check_semistability,
    check_stability,
    tau_sweep,
)
from ris.verify.certificates import energy_inequality_pairs, gronwall_data
from ris.verify.sweep import worker_count


def test_certificate_of_bundled_bar_passes(runs):
    cert = runs.certificate("bar1d")
    assert cert.passed, [r.line() for r in cert.records if not r.passed]
    names = {r.name for r in cert.records}
    assert names == {"initial_condition", "stability", "semistability", "energy_inequality",
                     "gronwall", "ciarlet_necas"}


def test_stability_detects_perturbed_state(runs):
    traj = copy.copy(runs.trajectory("bar1d"))
    k = 20
    traj.ys = list(traj.ys)
    traj.ys[k] = VectorField(traj.ys[k].grid, traj.ys[k].values + 0.05)
    r = check_stability(traj, k, VerifyOptions(draws=2))
    assert r.margin < -0.01 and not r.passed


def test_semistability_self_competitor_has_zero_slack(runs):
    traj = runs.trajectory("bar1d")
    opts = VerifyOptions(semi_random=0, semi_truncated=0, shifts=())
    r = check_semistability(traj, 10, opts)
    assert r.margin == 0.0 and r.evaluated == 1


def test_uniform_shift_dissipation_closed_form(runs):
    traj = runs.trajectory("bar1d")
    P = traj.params
    z = traj.zs[10]
    c = 0.05
    zt = np.maximum(z.values - c, 0.0)
    assert np.all(z.values >= c)
    R = dissipation(ScalarField(z.grid, zt - z.values), P)
    assert R == pytest.approx(P.G * P.rho0 * c * 1.0, rel=1e-12)


def test_energy_inequality_on_equal_nodes_is_zero(runs):
    traj = runs.trajectory("bar1d")
    r = check_energy_inequality(traj, 7, 7)
    assert r.margin == 0.0 and r.passed
    with pytest.raises(ValueError):
        check_energy_inequality(traj, 5, 3)


def test_energy_inequality_pairs():
    opts = VerifyOptions(long_pairs=10, seed=3)
    pairs = energy_inequality_pairs(40, opts)
    assert pairs[:40] == [(k - 1, k) for k in range(1, 41)]
    assert len(pairs) == 50 and len(set(pairs)) == 50
    assert pairs == energy_inequality_pairs(40, opts)
    assert energy_inequality_pairs(2, opts) == [(0, 1), (1, 2), (0, 2)]


def test_gronwall_fails_with_underestimated_rate(runs):
    traj = runs.trajectory("bar1d")
    g = gronwall_data(traj)
    assert all(r.passed for r in check_gronwall(traj, g))
    assert not all(r.passed for r in check_gronwall(traj, g.scaled(0.1)))


def test_certificate_file_format(runs, tmp_path):
    cert = runs.certificate("static")
    path = tmp_path / "certificate.txt"
    cert.write(path, {"config_sha256": "ab" * 32, "N": 10})
    lines = path.read_text().splitlines()
    assert lines[0] == "RIS-CERTIFICATE v1"
    assert lines[1] == "config_sha256 " + "ab" * 32
    assert lines[-1] == "CERTIFICATE PASS"
    for line in lines[3:-1]:
        assert re.fullmatch(r"[a-z_]+ (k\d?=\d+ ?)+ margin=\S+ tol=\S+ evaluated=\d+ "
                            r"skipped=\d+ (PASS|FAIL)", line), line


def test_certificate_is_deterministic(runs):
    a = runs.certificate("static")
    traj = runs.trajectory("static")
    sc = bundled("static").scenario
    from ris.verify.certificates import check_separately_global_certificate
    b = check_separately_global_certificate(traj, sc.verify, sc.rothe.y,
                                            snapshots=sc.snapshot_steps(traj.num_steps))
    assert a.lines() == b.lines()


# -- sweeps ---------------------------------------------------------------------------
def test_worker_count(monkeypatch):
    monkeypatch.delenv("RIS_THREADS", raising=False)
    assert worker_count() == 1 and worker_count(3) == 3
    monkeypatch.setenv("RIS_THREADS", "2")
    assert worker_count(8) == 2
    monkeypatch.setenv("RIS_THREADS", "0")
    with pytest.raises(ValueError):
        worker_count()


def test_sweep_rejects_non_nested_steps():
    sc = bundled("static").scenario
    for Ns in ([], [4, 6], [4, 4], [0, 2]):
        with pytest.raises(ValueError):
            tau_sweep(sc, Ns)


def test_sweep_of_static_scenario(monkeypatch):
    monkeypatch.delenv("RIS_THREADS", raising=False)
    sc = bundled("static").scenario
    sc = dataclasses.replace(sc, verify=VerifyOptions())
    rep = tau_sweep(sc, [2, 4, 8], workers=1)
    par = tau_sweep(sc, [2, 4, 8], workers=3)
    assert rep.rows() == par.rows()
    assert rep.max_H_strictly_decreasing
    assert all(d == 0.0 for d in rep.total_dissipation)
    # without evolution H0 scales exactly like tau^kappa
    kappa = sc.params.kappa
    for f in rep.H0_rate_factors(kappa):
        assert f == pytest.approx(2.0 ** (-kappa / 2), rel=1e-9)
    assert rep.uniform_det_bound > 0
