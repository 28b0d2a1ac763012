"""Shared fixtures and oracles for the test modules."""
import numpy as np

from ris.constitutive import LoadSchedule, ModelParams, PiecewiseAffine, stress_free_d_log
from ris.constitutive.energy import EnergyFunctional
from ris.grid import Grid


def model(dim=2, **kw) -> ModelParams:
    base = dict(dim=dim, a=1.0, b=1.0, c=1.0, e_s=0.01, p=4.0, q=2.0, r=2.0, s=4.0)
    base.update(kw)
    if "d_log" not in kw:
        base["d_log"] = stress_free_d_log(dim, base["a"], base["b"], base["c"], base["e_s"],
                                          base["p"], base["q"], base["r"], base["s"])
    return ModelParams(**base)


def loaded_schedule(dim: int) -> LoadSchedule:
    """Bulk, surface and penalized Dirichlet loads, all ramped in time."""
    n = dim * dim + dim
    dval = np.zeros(n)
    dval[0] = 0.1
    return LoadSchedule(
        dim=dim, T=1.0,
        bulk=PiecewiseAffine([0, 1], [np.zeros(dim), 0.3 * np.ones(dim)]),
        surface=PiecewiseAffine([0, 1], [np.zeros(dim), -0.2 * np.ones(dim)]),
        dirichlet=PiecewiseAffine([0, 1], [np.zeros(n), dval]),
        dirichlet_faces=("x0-",),
        neumann_faces=("x0+",),
    )


def random_state(grid: Grid, rng, amp=0.05):
    x = grid.coords
    d = grid.dim
    A = np.eye(d) + 0.1 * rng.normal(size=(d, d))
    if np.linalg.det(A) < 0.5:
        A = np.eye(d)
    K = rng.normal(size=(d, d)) * 2.0
    Y = x @ A.T + amp * np.sin(x @ K + rng.normal(size=d))
    Z = rng.uniform(0.2, 1.0, size=grid.num_nodes)
    return Y, Z


def gradient_fd_errors(mode: str, states: int = 20, seed: int = 0, h: float = 1e-6):
    """Largest relative error of the analytic y- and z-gradients against
    central differences along random nodal directions, over random states."""
    rng = np.random.default_rng(seed)
    grid = Grid((1.0, 1.0), (5, 6))
    if mode == "polyconvex_simple":
        # needs 1/p + 1/s + 1/alpha <= (q-1)/q
        P = model(2, material_mode=mode, p=6.0, s=6.0, q=3.0, alpha=6.0, beta=8.0)
    else:
        P = model(2, material_mode=mode)
    ef = EnergyFunctional(grid, loaded_schedule(2), P)
    tau = 0.1
    ey = ez = 0.0
    for _ in range(states):
        Y, Z = random_state(grid, rng)
        t = float(rng.uniform(0.05, 0.95))
        _, gy = ef.value_and_grad_y(t, Y, Z)
        V = rng.normal(size=Y.shape)
        fd = (ef.value(t, Y + h * V, Z) - ef.value(t, Y - h * V, Z)) / (2 * h)
        an = float(np.sum(gy * V))
        ey = max(ey, abs(fd - an) / abs(an))
        _, gz = ef.value_and_grad_z(t, Y, Z, tau)
        v = rng.normal(size=Z.shape)
        fd = (ef.value(t, Y, Z + h * v, tau) - ef.value(t, Y, Z - h * v, tau)) / (2 * h)
        an = float(np.sum(gz * v))
        ez = max(ez, abs(fd - an) / abs(an))
    return ey, ez
