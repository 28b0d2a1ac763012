"""Pointwise and global kinematics of a nodal deformation.

All pointwise helpers act on stacks of matrices with shape ``(..., d, d)``.
The inverse transpose is always formed by Cramer's rule, ``cof F / det F``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .grid import VectorField, nodal_gradient


class OrientationError(ValueError):
    """Raised when a state is not orientation preserving."""


class DegenerateCellError(OrientationError):
    def __init__(self, cell_index: int):
        super().__init__(f"degenerate deformed cell {cell_index} (non-positive Jacobian)")
        self.cell_index = cell_index


def determinant(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    d = F.shape[-1]
    if d == 1:
        return F[..., 0, 0].copy()
    if d == 2:
        return F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]
    return (
        F[..., 0, 0] * (F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1])
        - F[..., 0, 1] * (F[..., 1, 0] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 0])
        + F[..., 0, 2] * (F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0])
    )


def cofactor(F: np.ndarray) -> np.ndarray:
    """Cofactor matrix (transposed adjugate): ``F @ cof(F).T == det(F) * I``.

    In one dimension the cofactor is the constant 1.
    """
    F = np.asarray(F, dtype=float)
    d = F.shape[-1]
    if d == 1:
        return np.ones_like(F)
    if d == 2:
        C = np.empty_like(F)
        C[..., 0, 0] = F[..., 1, 1]
        C[..., 0, 1] = -F[..., 1, 0]
        C[..., 1, 0] = -F[..., 0, 1]
        C[..., 1, 1] = F[..., 0, 0]
        return C
    a, b, c = F[..., 0, :], F[..., 1, :], F[..., 2, :]
    return np.stack([np.cross(b, c), np.cross(c, a), np.cross(a, b)], axis=-2)


def inverse_transpose(F: np.ndarray) -> np.ndarray:
    return cofactor(F) / determinant(F)[..., None, None]


@dataclass(frozen=True)
class KinematicState:
    F: np.ndarray
    detF: float
    cofF: np.ndarray
    FinvT: np.ndarray

    @classmethod
    def from_matrix(cls, F) -> "KinematicState":
        F = np.array(F, dtype=float)
        det = float(determinant(F))
        cof = cofactor(F)
        return cls(F, det, cof, cof / det)


def eulerian_gradient(F, gz) -> np.ndarray:
    """``F^{-T} gz`` evaluated as ``cof(F) gz / det(F)``."""
    F = np.asarray(F, dtype=float)
    det = determinant(F)
    if np.any(det <= 0):
        raise OrientationError("non-orientation-preserving state")
    return np.einsum("...ij,...j->...i", cofactor(F), np.asarray(gz, dtype=float)) / det[..., None]


def deformation_gradient(y: VectorField) -> np.ndarray:
    return nodal_gradient(y.grid, y.values)


def det_lower_bound(y: VectorField) -> float:
    """Smallest nodal ``det grad y`` (boundary nodes included)."""
    return float(np.min(determinant(deformation_gradient(y))))


def distortion_norm(y: VectorField, delta: float) -> float:
    """``L^delta`` norm of ``|grad y|^d / det grad y`` over the domain."""
    if delta <= 2:
        raise ValueError("delta must exceed 2")
    F = deformation_gradient(y)
    det = determinant(F)
    if np.any(det <= 0):
        raise OrientationError("non-orientation-preserving state")
    d = y.grid.dim
    dens = np.linalg.norm(F.reshape(len(F), -1), axis=1) ** d / det
    return float(np.sum(y.grid.weights * dens**delta)) ** (1.0 / delta)


# -- Ciarlet-Necas --------------------------------------------------------
class CNDefect(NamedTuple):
    defect: float
    tolerance: float
    integral_det: float
    image_measure: float


def _quad_cells(y: VectorField) -> np.ndarray:
    nx, ny = y.grid.shape
    P = y.values.reshape(nx, ny, 2)
    return np.stack([P[:-1, :-1], P[1:, :-1], P[1:, 1:], P[:-1, 1:]], axis=2).reshape(-1, 4, 2)


def _quad_areas(quads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed areas and minimal corner Jacobians of the bilinear cells."""
    x, y = quads[..., 0], quads[..., 1]
    area = 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)
    nxt, prv = np.roll(quads, -1, axis=1), np.roll(quads, 1, axis=1)
    e1, e2 = nxt - quads, prv - quads
    corner = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
    return area, corner.min(axis=1)


# Kuhn split of the unit cube into 6 tetrahedra along the main diagonal.
def _kuhn_tets() -> list[tuple[list[tuple[int, int, int]], float]]:
    out = []
    for perm in itertools.permutations(range(3)):
        v = np.zeros(3, dtype=int)
        verts = [tuple(v)]
        for axis in perm:
            v = v.copy()
            v[axis] = 1
            verts.append(tuple(v))
        M = np.array(verts[1:]) - np.array(verts[0])
        out.append((verts, float(np.sign(np.linalg.det(M.T)))))
    return out


def _tet_cells(y: VectorField) -> tuple[np.ndarray, np.ndarray]:
    shape = y.grid.shape
    P = y.values.reshape(*shape, 3)
    tets, owner = [], []
    n_cells = [n - 1 for n in shape]
    for verts, sign in _kuhn_tets():
        corners = [P[a:a + n_cells[0], b:b + n_cells[1], c:c + n_cells[2]] for a, b, c in verts]
        T = np.stack(corners, axis=3).reshape(-1, 4, 3)
        if sign < 0:
            T = T[:, [0, 2, 1, 3]]
        tets.append(T)
        owner.append(np.arange(T.shape[0]))
    return np.concatenate(tets), np.concatenate(owner)


def _tet_volumes(T: np.ndarray) -> np.ndarray:
    return np.linalg.det(np.stack([T[:, 1] - T[:, 0], T[:, 2] - T[:, 0], T[:, 3] - T[:, 0]], axis=2)) / 6.0


def _boundary_pixel_count(mask: np.ndarray) -> int:
    padded = np.pad(mask.astype(bool), 1)
    edge = np.zeros_like(padded)
    for axis in range(mask.ndim):
        for shift in (1, -1):
            nb = np.roll(padded, shift, axis=axis)
            edge |= padded != nb
    return int(edge.sum())


def ciarlet_necas_defect(y: VectorField, resolution: int = 64) -> CNDefect:
    """``int det grad y - measure(y(Omega))`` with a rasterized image measure.

    Deformed cells are taken as multilinear images of the grid cells (2D:
    bilinear quads, whose images are the quads spanned by the deformed
    corners; 3D: Kuhn tetrahedra).  ``int det grad y`` is integrated over
    the same cells so an injective map gives zero up to pixel error.
    ``tolerance`` is pixel measure times the number of pixels touching the
    image boundary.  In 1D the image is an exact union of intervals and the tolerance only
    covers rounding.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64 pixels per unit length")
    grid = y.grid
    F = deformation_gradient(y)
    if np.any(determinant(F) <= 0):
        raise OrientationError("det grad y must be positive at every quadrature point")

    if grid.dim == 1:
        v = y.values[:, 0]
        lengths = np.diff(v)
        bad = np.flatnonzero(lengths <= 0)
        if bad.size:
            raise DegenerateCellError(int(bad[0]))
        integral = float(np.sum(lengths))
        ivals = np.stack([v[:-1], v[1:]], axis=1)
        order = ivals[np.argsort(ivals[:, 0], kind="stable")]
        total, cur_lo, cur_hi = 0.0, order[0, 0], order[0, 1]
        for lo, hi in order[1:]:
            if lo > cur_hi:
                total += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        total += cur_hi - cur_lo
        # exact image; allow rounding in the two sums
        tol = 4 * np.finfo(float).eps * lengths.size * (integral + np.abs(v).max())
        return CNDefect(float(integral - total), float(tol), integral, float(total))

    pix = 1.0 / resolution
    lo = y.values.min(axis=0)
    hi = y.values.max(axis=0)
    shape = tuple(int(np.ceil((h - l) / pix)) + 1 for l, h in zip(lo, hi))

    if grid.dim == 2:
        quads = _quad_cells(y)
        area, corner = _quad_areas(quads)
        bad = np.flatnonzero(corner <= 0)
        if bad.size:
            raise DegenerateCellError(int(bad[0]))
        integral = float(np.sum(area))
        mask = kernels.rasterize_quads(quads, float(lo[0]), float(lo[1]), pix, *shape)
    else:
        tets, owner = _tet_cells(y)
        vol = _tet_volumes(tets)
        bad = np.flatnonzero(vol <= 0)
        if bad.size:
            raise DegenerateCellError(int(owner[bad[0]]))
        integral = float(np.sum(vol))
        mask = kernels.rasterize_tets(tets, lo, pix, shape)

    cell = pix ** grid.dim
    image = float(mask.sum()) * cell
    tol = cell * _boundary_pixel_count(mask)
    return CNDefect(integral - image, tol, integral, image)
