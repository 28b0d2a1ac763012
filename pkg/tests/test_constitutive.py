import math
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import gradient_fd_errors, loaded_schedule, model, random_state
from ris.constitutive import (
    LoadSchedule,
    ModelParams,
    ParameterError,
    PiecewiseAffine,
    ScheduleError,
    calibration_constant,
    dissipation,
    gamma,
    grad_energy_y,
    grad_energy_z,
    gronwall_estimate,
    growth_constants,
    loading,
    phi,
    power,
    psi_svk,
    regularization,
    stored_density,
    stored_density_nonsimple,
    total_energy,
)
from ris.constitutive.densities import gamma_prime
from ris.constitutive.energy import EnergyFunctional
from ris.grid import Grid, ScalarField, VectorField


# -- parameters ----------------------------------------------------------------
@pytest.mark.parametrize("kw, key, text", [
    (dict(dim=2, alpha=2.0), "alpha", "α > d"),
    (dict(dim=2, beta=4.0, alpha=4.0), "beta", "β > α + κ"),
    (dict(dim=2, p=2.0), "p", "p > d"),
    (dict(dim=2, p=3.0, s=5.0), "s", "s must be ≥ d·p/(p−d)"),
    (dict(dim=3, p=4.0, s=11.0, alpha=4.0), "s", "s must be ≥ d·p/(p−d)"),
    (dict(G=0.0), "G", "positive"),
    (dict(material_mode="simple"), "material_mode", "one of"),
])
def test_parameter_constraints(kw, key, text):
    with pytest.raises(ParameterError, match=re.escape(text)) as exc:
        ModelParams(**kw)
    assert exc.value.key == key


def test_polyconvex_simple_extra_constraint():
    with pytest.raises(ParameterError, match=r"1/p \+ 1/s \+ 1/α"):
        ModelParams(material_mode="polyconvex_simple")
    ModelParams(material_mode="polyconvex_simple", p=6, s=6, q=3, alpha=6, beta=8)


def test_default_exponents_admissible_in_2d():
    P = ModelParams()
    assert (P.p, P.q, P.r, P.s, P.alpha, P.kappa, P.beta) == (4, 2, 2, 4, 4, 1, 6)


# -- gamma and phi -------------------------------------------------------------
def test_gamma_examples():
    P = ModelParams(eps_gamma=0.01)
    assert gamma(1.0, P) == pytest.approx(1.01)
    assert gamma(0.0, P) == 0.01
    assert gamma(-0.5, P) == 0.01
    assert gamma_prime(0.0, P) == 0.0 and gamma_prime(-1.0, P) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 1))
def test_gamma_convex(a, b, s):
    P = ModelParams()
    m = s * a + (1 - s) * b
    assert gamma(m, P) <= s * gamma(a, P) + (1 - s) * gamma(b, P) + 1e-12


def test_phi_examples():
    P = ModelParams(dim=2, rho0=2.0, alpha=2.1, beta=4.0)
    assert phi(np.zeros(2), P) == 0.0
    P2 = ModelParams(dim=1, rho0=2.0, alpha=2.0, beta=4.0, p=2.0, s=2.0)
    assert phi(np.array([1.0, 1.0]), P2) == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_phi_homogeneous_and_strictly_convex(seed):
    r = np.random.default_rng(seed)
    P = ModelParams()
    u, v = r.normal(size=2), r.normal(size=2)
    assert phi(2 * u, P) == pytest.approx(2**P.alpha * phi(u, P), rel=1e-12)
    gap = 0.5 * (phi(u, P) + phi(v, P)) - phi(0.5 * (u + v), P)
    # uniform convexity of |.|^alpha: gap >= c |u - v|^alpha
    assert gap >= 1e-3 * (P.rho0 / P.alpha) * np.linalg.norm(u - v) ** P.alpha


# -- stored energy ---------------------------------------------------------------
def test_ogden_identity_closed_form():
    P = ModelParams(dim=2, a=1, b=1, c=1, d_log=0.0, e_s=0.0)
    val = stored_density_nonsimple(np.eye(2)[None], np.zeros((1, 2, 2, 2)), P)[0]
    assert val == pytest.approx(2 ** (P.p / 2) + 2 ** (P.q / 2) + 1.0, rel=1e-14)
    assert calibration_constant(P) == pytest.approx(val)
    assert stored_density(np.eye(2)[None], np.zeros((1, 2, 2, 2)), P)[0] == 0.0


def test_svk_identity_zero():
    P = ModelParams(psi="svk")
    assert psi_svk(np.eye(2)[None], P)[0] == 0.0
    assert psi_svk(np.eye(3)[None], P.replace(dim=3, p=4, s=12, alpha=4))[0] == 0.0


def test_barrier_as_det_vanishes():
    P = model(2)
    ts = np.logspace(-4, -1, 40)
    F = np.array([np.diag([t, 1.0]) for t in ts])
    W = stored_density(F, np.zeros((len(ts), 2, 2, 2)), P)
    assert np.all(np.diff(W) < 0)          # increasing as t decreases
    assert W[0] > 1e12


def test_nonpositive_det_rejected():
    from ris.kinematics import OrientationError

    with pytest.raises(OrientationError):
        stored_density(np.diag([-1.0, 1.0])[None], None, model(2))


def test_growth_sandwich(rng):
    P = model(2)
    c, C_lo, C_hi = growth_constants(P)
    n = 10_000
    F = rng.normal(size=(n, 2, 2))
    F[np.linalg.det(F) < 0, :, 0] *= -1
    target = np.exp(rng.uniform(np.log(0.05), np.log(20.0), n))
    F *= np.sqrt(target / np.linalg.det(F))[:, None, None]
    G = rng.normal(size=(n, 2, 2, 2)) * rng.uniform(0, 3, size=(n, 1, 1, 1))
    W = stored_density(F, G, P)
    S = (np.linalg.norm(F.reshape(n, -1), axis=1) ** P.p + np.linalg.det(F) ** -P.s
         + np.linalg.norm(G.reshape(n, -1), axis=1) ** P.p)
    assert np.all(c * S - C_lo <= W)
    assert np.all(W <= C_hi * (S + 1))


# -- loading and power -----------------------------------------------------------
def test_loading_examples():
    g = Grid((1.0, 1.0), (5, 5))
    P = model(2)
    y, z = VectorField.identity(g), ScalarField(g, np.ones(g.num_nodes))
    assert loading(0.5, y, z, LoadSchedule(dim=2), P) == 0.0
    bulk = LoadSchedule(dim=2, bulk=PiecewiseAffine.constant([1.0, 0.0]))
    assert loading(0.5, y, z, bulk, P) == pytest.approx(0.5, abs=1e-14)
    sched = loaded_schedule(2).__class__(
        dim=2, dirichlet=PiecewiseAffine([0, 1], [np.zeros(6), [0.1, 0, 0, 0, 0.2, 0]]),
        dirichlet_faces=("x0-", "x1+"))
    yD = VectorField(g, sched.dirichlet_values(g, 0.4))
    assert loading(0.4, yD, z, sched, P) == 0.0
    with pytest.raises(ScheduleError):
        bulk.check_time(2.0)


def test_power_examples():
    g = Grid((1.0, 1.0), (5, 5))
    P = model(2)
    y, z = VectorField.identity(g), ScalarField(g, np.ones(g.num_nodes))
    assert power(0.3, y, z, LoadSchedule(dim=2, bulk=PiecewiseAffine.constant([1, 2])), P) == 0.0
    ramp = LoadSchedule(dim=2, bulk=PiecewiseAffine([0, 1], [[0, 0], [1, 0]]))
    assert power(0.3, y, z, ramp, P) == pytest.approx(-0.5, abs=1e-14)


def test_power_matches_time_differences(rng):
    g = Grid((1.0, 1.0), (5, 5))
    P = model(2)
    sch = loaded_schedule(2)
    Y, Z = random_state(g, rng)
    y, z = VectorField(g, Y), ScalarField(g, Z)
    h = 1e-5
    for t in (0.2, 0.5, 0.8):
        fd = -(loading(t + h, y, z, sch, P) - loading(t - h, y, z, sch, P)) / (2 * h)
        assert abs(fd - power(t, y, z, sch, P)) <= 1e-8


# -- dissipation and regularization -----------------------------------------------
def test_dissipation_examples():
    g = Grid((1.0, 1.0), (5, 5))
    P = model(2, G=1.0, rho0=1.0)
    assert dissipation(ScalarField(g, np.zeros(25)), P) == 0.0
    assert dissipation(ScalarField(g, np.full(25, -0.1)), P) == pytest.approx(0.1)
    v = np.zeros(25)
    v[7] = 1e-6
    assert dissipation(ScalarField(g, v), P) == math.inf


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 5.0))
def test_dissipation_gauge_and_triangle(seed, a):
    r = np.random.default_rng(seed)
    g = Grid((1.0, 2.0), (4, 5))
    P = model(2, G=0.7, rho0=1.3)
    z1 = r.uniform(0.5, 1.0, g.num_nodes)
    z2 = z1 - r.uniform(0, 0.3, g.num_nodes)
    z3 = z2 - r.uniform(0, 0.2, g.num_nodes)

    def R(v):
        return dissipation(ScalarField(g, v), P)

    v = z3 - z1
    assert R(a * v) == pytest.approx(a * R(v), rel=1e-12, abs=1e-15)
    assert R(z3 - z1) <= R(z3 - z2) + R(z2 - z1) + 1e-14
    assert R(v) / np.sum(g.weights * np.abs(v)) == pytest.approx(P.G * P.rho0, rel=1e-12)


def test_regularization_examples():
    g = Grid((1.0, 1.0), (6, 6))
    P = model(2, kappa=1.0, beta=6.0)
    assert regularization(ScalarField(g, np.full(36, 0.4)), 0.1, P) == 0.0
    zx = ScalarField(g, g.coords[:, 0])
    assert regularization(zx, 0.1, P) == pytest.approx(0.1, rel=1e-12)
    z = ScalarField(g, np.sin(g.coords[:, 0] * 3) * 0.2 + 0.5)
    assert regularization(z, 0.05, P) == pytest.approx(2 ** -P.kappa * regularization(z, 0.1, P))


# -- assembled energy -------------------------------------------------------------
def test_total_energy_reference_states():
    g = Grid((1.0, 1.0), (5, 5))
    y, z = VectorField.identity(g), ScalarField(g, np.ones(25))
    svk = ModelParams(psi="svk")
    assert total_energy(0.0, y, z, None, LoadSchedule(dim=2), svk) == 0.0
    assert total_energy(0.0, y, z, 0.1, LoadSchedule(dim=2), model(2)) == pytest.approx(0, abs=1e-12)
    Y = g.coords.copy()
    # swapping the x-neighbours of the centre node flips det grad y there
    Y[[7, 17]] = Y[[17, 7]]
    assert total_energy(0.0, VectorField(g, Y), z, None, LoadSchedule(dim=2), model(2)) == math.inf


def test_energy_rejects_grid_mismatch():
    from ris.grid import GridMismatchError

    g1, g2 = Grid((1.0, 1.0), (5, 5)), Grid((1.0, 1.0), (4, 4))
    with pytest.raises(GridMismatchError):
        total_energy(0, VectorField.identity(g1), ScalarField(g2, np.ones(16)), None,
                     LoadSchedule(dim=2), model(2))


@pytest.mark.parametrize("mode", ["nonsimple", "polyconvex_simple"])
def test_gradients_match_finite_differences(mode):
    ey, ez = gradient_fd_errors(mode, states=20, seed=1)
    assert ey <= 1e-6 and ez <= 1e-6


def test_translation_invariance_of_gradient(rng):
    g = Grid((1.0, 1.0), (5, 6))
    P = model(2)
    Y, Z = random_state(g, rng)
    gy = grad_energy_y(0.0, VectorField(g, Y), ScalarField(g, Z), LoadSchedule(dim=2), P)
    scale = np.abs(gy.values).max()
    assert np.allclose(gy.values.sum(axis=0), 0.0, atol=1e-12 * scale * g.num_nodes)


def test_grad_z_closed_form_on_uniform_stretch():
    g = Grid((1.0, 1.0), (5, 5))
    P = model(2)
    y = VectorField.affine(g, np.diag([1.1, 0.95]))
    z = ScalarField(g, np.full(25, 0.7))
    W = stored_density(np.diag([1.1, 0.95])[None], np.zeros((1, 2, 2, 2)), P)[0]
    gz = grad_energy_z(0.0, y, z, 0.1, LoadSchedule(dim=2), P).values
    assert np.allclose(gz, 2 * 0.7 * W * g.weights, rtol=1e-10)
    # the regularization adds nothing for constant z
    gz0 = grad_energy_z(0.0, y, z, None, LoadSchedule(dim=2), P).values
    assert np.array_equal(gz, gz0)


# -- Gronwall data ---------------------------------------------------------------
def test_gronwall_static_and_single_sample():
    g = Grid((1.0, 1.0), (4, 4))
    P = model(2)
    ef_static = EnergyFunctional(g, LoadSchedule(dim=2), P)
    Y, Z = g.coords.copy(), np.ones(16)
    gd = gronwall_estimate(ef_static.schedule, P, [(0.0, Y, Z, 0.0)], ef_static)
    assert np.all(gd.rates == 0) and gd.Lambda(1.0) == 0.0
    ramp = LoadSchedule(dim=2, bulk=PiecewiseAffine([0, 1], [[0, 0], [1, 0]]))
    ef = EnergyFunctional(g, ramp, P)
    gd = gronwall_estimate(ramp, P, [(0.5, Y, Z, 0.0)], ef)
    E = ef.value(0.5, Y, Z)
    assert gd.C0 == pytest.approx(1.0 + max(0.0, -E))
    assert gd.lambda_rate(0.2) == pytest.approx(1.1 * abs(ef.power(0.5, Y, Z)) / (E + gd.C0))
    assert gd.Lambda(1.0) == pytest.approx(gd.lambda_rate(0.0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=1, max_size=6), st.integers(0, 2**31 - 1))
def test_Lambda_nondecreasing(rates, seed):
    from ris.constitutive import GronwallData

    times = np.linspace(0, 1, len(rates) + 1)
    gd = GronwallData(1.0, times, np.array(rates))
    ts = np.sort(np.random.default_rng(seed).uniform(0, 1, 20))
    vals = [gd.Lambda(t) for t in ts]
    assert gd.Lambda(0.0) == 0.0
    assert all(b >= a for a, b in zip(vals, vals[1:]))
