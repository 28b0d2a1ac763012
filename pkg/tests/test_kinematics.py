import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ris.grid import Grid, VectorField
from ris.kinematics import (
    DegenerateCellError,
    KinematicState,
    OrientationError,
    ciarlet_necas_defect,
    cofactor,
    det_lower_bound,
    determinant,
    distortion_norm,
    eulerian_gradient,
    inverse_transpose,
)


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def two_sheet_wrap(n1=129, n2=17):
    """Orientation-preserving map winding the square twice around an annulus.

    The annulus has area 1/2, every point of it is covered twice, and the
    determinant integrates to 1, so the injectivity defect is 1/2.
    """
    g = Grid((1.0, 1.0), (n1, n2))
    x = g.coords
    r0 = 0.3
    r1 = math.sqrt(r0**2 + 1 / (2 * math.pi))
    R = r0 + (r1 - r0) * x[:, 1]
    th = -4 * math.pi * x[:, 0]
    return VectorField(g, np.stack([R * np.cos(th), R * np.sin(th)], axis=1))


def test_cofactor_examples():
    assert np.allclose(cofactor(np.eye(2)), np.eye(2))
    assert np.allclose(cofactor(np.diag([2.0, 3.0])), np.diag([3.0, 2.0]))
    assert np.allclose(cofactor(np.diag([1.0, 2.0, 3.0])), np.diag([6.0, 3.0, 2.0]))
    assert np.allclose(cofactor(np.array([[5.0]])), [[1.0]])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_cramer_identities(d, seed):
    r = np.random.default_rng(seed)
    F = r.normal(size=(d, d))
    det = np.linalg.det(F)
    if abs(det) < 1e-3:
        return
    if det < 0:
        F[0] *= -1
    F *= (r.uniform(0.1, 10.0) / abs(np.linalg.det(F))) ** (1 / d)
    ks = KinematicState.from_matrix(F)
    assert ks.detF == pytest.approx(np.linalg.det(F), rel=1e-12)
    assert np.allclose(F @ ks.cofF.T, ks.detF * np.eye(d), atol=1e-10 * max(1, abs(ks.detF)))
    assert np.allclose(ks.FinvT @ F.T, np.eye(d), atol=1e-10)
    assert np.allclose(ks.FinvT * ks.detF, ks.cofF, rtol=1e-10, atol=1e-12)
    assert np.allclose(inverse_transpose(F), np.linalg.inv(F).T, rtol=1e-9, atol=1e-10)


def test_eulerian_gradient_examples(rng):
    assert np.allclose(eulerian_gradient(np.eye(2), [1.0, 2.0]), [1.0, 2.0])
    assert np.allclose(eulerian_gradient(np.diag([2.0, 1.0]), [1.0, 0.0]), [0.5, 0.0])
    for _ in range(20):
        F = np.eye(3) + 0.3 * rng.normal(size=(3, 3))
        if np.linalg.det(F) <= 0:
            continue
        gz = rng.normal(size=3)
        assert np.allclose(F.T @ eulerian_gradient(F, gz), gz, atol=1e-10)
    with pytest.raises(OrientationError, match="non-orientation-preserving state"):
        eulerian_gradient(np.diag([-1.0, 1.0]), [1.0, 0.0])


def test_det_lower_bound_examples():
    g = Grid((1.0, 1.0), (5, 5))
    assert det_lower_bound(VectorField.identity(g)) == pytest.approx(1.0)
    assert det_lower_bound(VectorField.affine(g, np.diag([2.0, 0.5]))) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * math.pi), st.integers(0, 2**31 - 1))
def test_det_lower_bound_rotation_invariant(theta, seed):
    g = Grid((1.0, 1.0), (6, 6))
    r = np.random.default_rng(seed)
    y = g.coords + 0.05 * np.sin(3 * g.coords @ r.normal(size=(2, 2)))
    Q = rotation(theta)
    a = det_lower_bound(VectorField(g, y))
    b = det_lower_bound(VectorField(g, y @ Q.T + r.normal(size=2)))
    assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


def test_distortion_norm_examples():
    g = Grid((1.0, 1.0), (5, 5))
    assert distortion_norm(VectorField.identity(g), 3.0) == pytest.approx(2.0, rel=1e-12)
    assert distortion_norm(VectorField.affine(g, 2 * np.eye(2)), 3.0) == pytest.approx(2.0)
    rot = VectorField.affine(g, rotation(0.7), [1.0, -2.0])
    assert distortion_norm(rot, 3.0) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ValueError):
        distortion_norm(VectorField.identity(g), 2.0)
    with pytest.raises(OrientationError):
        distortion_norm(VectorField.affine(g, np.diag([-1.0, 1.0])), 3.0)


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.2])
def test_cn_defect_injective_maps(theta):
    g = Grid((1.0, 1.0), (9, 9))
    y = VectorField.affine(g, rotation(theta), [0.5, -0.25])
    cn = ciarlet_necas_defect(y, 128)
    assert cn.integral_det == pytest.approx(1.0, rel=1e-12)
    assert abs(cn.defect) <= cn.tolerance


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([64, 128, 256]))
def test_cn_defect_of_smooth_injective_maps_within_twice_tolerance(seed, res):
    r = np.random.default_rng(seed)
    g = Grid((1.0, 1.0), (9, 9))
    A = np.eye(2) + 0.2 * r.normal(size=(2, 2))
    if np.linalg.det(A) < 0.3:
        return
    x = g.coords
    y = x @ A.T + 0.02 * np.sin(2 * np.pi * x[:, ::-1])
    cn = ciarlet_necas_defect(VectorField(g, y), res)
    assert cn.defect <= 2 * cn.tolerance


def test_cn_defect_two_sheet_wrap():
    cn = ciarlet_necas_defect(two_sheet_wrap(), 512)
    assert cn.defect >= 0.4
    assert cn.image_measure == pytest.approx(0.5, abs=0.02)
    assert cn.integral_det == pytest.approx(1.0, abs=0.01)


def test_cn_defect_3d_identity():
    g = Grid((1.0, 1.0, 1.0), (4, 4, 4))
    cn = ciarlet_necas_defect(VectorField.identity(g), 64)
    assert cn.integral_det == pytest.approx(1.0, rel=1e-12)
    assert abs(cn.defect) <= cn.tolerance


def test_cn_defect_1d():
    g = Grid((1.0,), (6,))
    cn = ciarlet_necas_defect(VectorField(g, 1.5 * g.coords + 0.1), 64)
    assert abs(cn.defect) <= cn.tolerance
    assert cn.integral_det == pytest.approx(1.5)


def test_cn_defect_errors():
    g = Grid((1.0, 1.0), (5, 5))
    with pytest.raises(ValueError):
        ciarlet_necas_defect(VectorField.identity(g), 32)
    with pytest.raises(OrientationError):
        ciarlet_necas_defect(VectorField.affine(g, np.diag([1.0, -1.0])), 64)
    # a single pinched cell: nodal determinants stay positive, one cell inverts
    y = g.coords.copy()
    y[12] = [0.55, 0.55] + np.array([0.3, 0.3])
    try:
        ciarlet_necas_defect(VectorField(g, y), 64)
    except DegenerateCellError as exc:
        assert exc.cell_index >= 0
    except OrientationError:
        pass
    else:
        pytest.fail("expected a degenerate-cell or orientation error")


def test_determinant_matches_numpy(rng):
    for d in (1, 2, 3):
        F = rng.normal(size=(10, d, d))
        assert np.allclose(determinant(F), np.linalg.det(F))
