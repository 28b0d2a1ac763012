"""Structured rectangular grids, nodal fields and finite-difference operators.

Fields live on the nodes of a tensor-product grid over ``[0, L_1] x ... x [0, L_d]``.
Derivatives use central differences in the interior and one-sided second-order
stencils on the boundary, so affine and quadratic fields are differentiated
exactly.  Quadrature points coincide with the nodes and carry tensor-product
trapezoid weights.

Node ordering is row-major (C order) over ``nodes_per_axis``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp


class GridMismatchError(ValueError):
    pass


def _first_derivative_1d(n: int, h: float) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for i in range(n):
        if i == 0:
            stencil = ((0, -1.5), (1, 2.0), (2, -0.5))
        elif i == n - 1:
            stencil = ((n - 3, 0.5), (n - 2, -2.0), (n - 1, 1.5))
        else:
            stencil = ((i - 1, -0.5), (i + 1, 0.5))
        for j, v in stencil:
            rows.append(i)
            cols.append(j)
            vals.append(v / h)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _second_derivative_1d(n: int, h: float) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for i in range(n):
        if 0 < i < n - 1:
            stencil = ((i - 1, 1.0), (i, -2.0), (i + 1, 1.0))
        elif n == 3:
            stencil = ((0, 1.0), (1, -2.0), (2, 1.0))
        elif i == 0:
            stencil = ((0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0))
        else:
            stencil = ((n - 4, -1.0), (n - 3, 4.0), (n - 2, -5.0), (n - 1, 2.0))
        for j, v in stencil:
            rows.append(i)
            cols.append(j)
            vals.append(v / h**2)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _trapezoid_weights_1d(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _kron_axis(mats: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return sp.csr_matrix(out)


@dataclass(frozen=True)
class QuadraturePoint:
    location: np.ndarray
    weight: float
    cell_index: int
    grid: "Grid" = field(repr=False, compare=False)


class Grid:
    """Tensor-product grid on a box anchored at the origin.

    Parameters
    ----------
    extents : sequence of float
        Side lengths of the box, one per axis.
    nodes_per_axis : sequence of int
        Number of nodes per axis (at least 3, so every stencil is defined).
    """

    def __init__(self, extents: Sequence[float], nodes_per_axis: Sequence[int]):
        extents = tuple(float(e) for e in extents)
        nodes = tuple(int(n) for n in nodes_per_axis)
        if len(extents) != len(nodes) or len(nodes) not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3 with one extent per axis")
        if any(e <= 0 for e in extents):
            raise ValueError("extents must be positive")
        if any(n < 3 for n in nodes):
            raise ValueError("need at least 3 nodes per axis")
        self.extents = extents
        self.nodes_per_axis = nodes
        self.dim = len(nodes)
        self.spacing = tuple(e / (n - 1) for e, n in zip(extents, nodes))

    def __repr__(self) -> str:
        return f"Grid(extents={self.extents}, nodes_per_axis={self.nodes_per_axis})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.extents == other.extents and self.nodes_per_axis == other.nodes_per_axis

    def __hash__(self) -> int:
        return hash((self.extents, self.nodes_per_axis))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes_per_axis

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.nodes_per_axis))

    @property
    def measure(self) -> float:
        return float(np.prod(self.extents))

    @cached_property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(0.0, e, n) for e, n in zip(self.extents, self.nodes_per_axis)]

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(num_nodes, dim)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def weights(self) -> np.ndarray:
        ws = [_trapezoid_weights_1d(n, h) for n, h in zip(self.nodes_per_axis, self.spacing)]
        out = ws[0]
        for w in ws[1:]:
            out = np.multiply.outer(out, w)
        return np.ascontiguousarray(out, dtype=float).ravel()

    def _axis_operator(self, axis: int, op: sp.spmatrix) -> sp.csr_matrix:
        mats = [sp.identity(n, format="csr") for n in self.nodes_per_axis]
        mats[axis] = op
        return _kron_axis(mats)

    @cached_property
    def diff_ops(self) -> list[sp.csr_matrix]:
        """First-derivative operators ``D_j`` acting on nodal vectors."""
        return [
            self._axis_operator(j, _first_derivative_1d(n, h))
            for j, (n, h) in enumerate(zip(self.nodes_per_axis, self.spacing))
        ]

    @cached_property
    def hess_ops(self) -> dict[tuple[int, int], sp.csr_matrix]:
        """Second-derivative operators for ``j <= k``; mixed ones are ``D_j D_k``."""
        ops = {}
        for j in range(self.dim):
            n, h = self.nodes_per_axis[j], self.spacing[j]
            ops[(j, j)] = self._axis_operator(j, _second_derivative_1d(n, h))
            for k in range(j + 1, self.dim):
                ops[(j, k)] = sp.csr_matrix(self.diff_ops[j] @ self.diff_ops[k])
        return ops

    # -- boundary -------------------------------------------------------
    def face_nodes(self, face: str) -> np.ndarray:
        """Indices of nodes on a face named like ``x0-`` / ``x1+``."""
        axis, side = _parse_face(face, self.dim)
        idx = np.arange(self.num_nodes).reshape(self.shape)
        sl = [slice(None)] * self.dim
        sl[axis] = 0 if side == "-" else -1
        return np.sort(idx[tuple(sl)].ravel())

    def face_weights(self, faces: Sequence[str]) -> np.ndarray:
        """Nodal surface-quadrature weights for a union of faces.

        Each face carries the trapezoid rule of its own (d-1)-dimensional grid;
        in 1D a face is a point with unit counting measure.
        """
        w = np.zeros(self.num_nodes)
        for face in faces:
            axis, side = _parse_face(face, self.dim)
            ws = []
            for j, (n, h) in enumerate(zip(self.nodes_per_axis, self.spacing)):
                if j == axis:
                    e = np.zeros(n)
                    e[0 if side == "-" else -1] = 1.0
                    ws.append(e)
                else:
                    ws.append(_trapezoid_weights_1d(n, h))
            out = ws[0]
            for v in ws[1:]:
                out = np.multiply.outer(out, v)
            w += np.asarray(out).ravel()
        return w

    def quadrature_points(self) -> list[QuadraturePoint]:
        return [
            QuadraturePoint(self.coords[i], float(self.weights[i]), i, self)
            for i in range(self.num_nodes)
        ]

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All axis-aligned grid edges as ``(a, b, length)`` arrays."""
        idx = np.arange(self.num_nodes).reshape(self.shape)
        a_all, b_all, l_all = [], [], []
        for j in range(self.dim):
            lo = [slice(None)] * self.dim
            hi = [slice(None)] * self.dim
            lo[j] = slice(0, -1)
            hi[j] = slice(1, None)
            a = idx[tuple(lo)].ravel()
            a_all.append(a)
            b_all.append(idx[tuple(hi)].ravel())
            l_all.append(np.full(a.size, self.spacing[j]))
        return np.concatenate(a_all), np.concatenate(b_all), np.concatenate(l_all)


FACE_NAMES = ("x0-", "x0+", "x1-", "x1+", "x2-", "x2+")


def _parse_face(face: str, dim: int) -> tuple[int, str]:
    face = face.strip()
    if face not in FACE_NAMES or int(face[1]) >= dim:
        raise ValueError(f"unknown face {face!r} for dim={dim}")
    return int(face[1]), face[2]


# -- fields ---------------------------------------------------------------
class ScalarField:
    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size != grid.num_nodes:
            raise ValueError("value count does not match grid node count")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values

    components = 1

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def __repr__(self) -> str:
        return f"ScalarField({self.grid!r})"


class VectorField:
    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float).reshape(grid.num_nodes, grid.dim)
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values

    @property
    def components(self) -> int:
        return self.grid.dim

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.values.copy())

    @classmethod
    def identity(cls, grid: Grid) -> "VectorField":
        return cls(grid, grid.coords.copy())

    @classmethod
    def affine(cls, grid: Grid, A, b=None) -> "VectorField":
        A = np.asarray(A, dtype=float).reshape(grid.dim, grid.dim)
        b = np.zeros(grid.dim) if b is None else np.asarray(b, dtype=float)
        return cls(grid, grid.coords @ A.T + b)

    def __repr__(self) -> str:
        return f"VectorField({self.grid!r})"


def _check_grid(f, grid: Grid) -> None:
    if f.grid != grid:
        raise GridMismatchError("grid mismatch")


# -- differential operators -------------------------------------------------
def nodal_gradient(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Gradient at every node.

    ``values`` of shape ``(n,)`` gives ``(n, d)``; shape ``(n, c)`` gives
    ``(n, c, d)`` with entry ``[i, a, j] = d f_a / d x_j``.
    """
    values = np.asarray(values, dtype=float)
    return np.stack([D @ values for D in grid.diff_ops], axis=-1)


def nodal_hessian(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Second derivatives at every node, shape ``(n, c, d, d)`` for ``(n, c)`` input.

    The mixed entries are filled from a single operator, so the result is
    exactly symmetric in the two derivative indices.
    """
    values = np.asarray(values, dtype=float)
    d = grid.dim
    out = np.empty(values.shape + (d, d))
    for (j, k), H in grid.hess_ops.items():
        v = H @ values
        out[..., j, k] = v
        out[..., k, j] = v
    return out


def gradient(f: ScalarField | VectorField, qp: QuadraturePoint) -> np.ndarray:
    """Gradient of ``f`` at one quadrature point (``(d,)`` or ``(d, d)``)."""
    _check_grid(f, qp.grid)
    i = qp.cell_index
    rows = [np.asarray(D[i] @ f.values).ravel() for D in f.grid.diff_ops]
    out = np.stack(rows, axis=-1)
    return out[0] if isinstance(f, ScalarField) else out


def hessian(y: VectorField, qp: QuadraturePoint) -> np.ndarray:
    _check_grid(y, qp.grid)
    i = qp.cell_index
    d = y.grid.dim
    out = np.empty((d, d, d))
    for (j, k), H in y.grid.hess_ops.items():
        v = np.asarray(H[i] @ y.values).ravel()
        out[:, j, k] = v
        out[:, k, j] = v
    return out


def integrate(density, grid: Grid) -> float:
    """Nodal-quadrature integral of per-node density values.

    Uses numpy's fixed-order pairwise summation, so the result is
    bit-reproducible.
    """
    density = np.asarray(density, dtype=float).ravel()
    if density.size != grid.num_nodes:
        raise ValueError(
            f"density count {density.size} does not match {grid.num_nodes} quadrature points"
        )
    return float(np.sum(grid.weights * density))


def edge_lipschitz(grid: Grid, values: np.ndarray) -> float:
    a, b, length = grid.edges()
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(values[a] - values[b]) / length)) if a.size else 0.0


# -- field dump format ------------------------------------------------------
_HEADER = "RISFIELD v1"


def format_field(f: ScalarField | VectorField) -> str:
    g = f.grid
    comps = 1 if isinstance(f, ScalarField) else g.dim
    header = (
        f"{_HEADER} dim={g.dim} nodes={','.join(map(str, g.nodes_per_axis))} "
        f"extents={','.join(repr(e) for e in g.extents)} components={comps}"
    )
    vals = np.asarray(f.values).reshape(g.num_nodes, comps)
    lines = [" ".join(f"{v:.17g}" for v in row) for row in vals]
    return header + "\n" + "\n".join(lines) + "\n"


def parse_field(text: str, as_vector: bool = False) -> ScalarField | VectorField:
    """Inverse of ``format_field``.

    One-component dumps are scalar fields unless ``as_vector`` is set (a 1D
    deformation has a single component as well).
    """
    head, _, body = text.partition("\n")
    if not head.startswith(_HEADER):
        raise ValueError("not a RISFIELD v1 file")
    kv = dict(tok.split("=", 1) for tok in head[len(_HEADER):].split())
    dim = int(kv["dim"])
    nodes = [int(v) for v in kv["nodes"].split(",")]
    extents = [float(v) for v in kv["extents"].split(",")]
    comps = int(kv["components"])
    if len(nodes) != dim or len(extents) != dim:
        raise ValueError("header dim does not match nodes/extents")
    grid = Grid(extents, nodes)
    vals = np.array([float(v) for v in body.split()])
    if vals.size != grid.num_nodes * comps:
        raise ValueError("value count does not match header")
    if comps == 1 and not (as_vector and dim == 1):
        return ScalarField(grid, vals)
    if comps != dim:
        raise ValueError("vector fields must have dim components")
    return VectorField(grid, vals.reshape(grid.num_nodes, dim))


def write_field(path, f: ScalarField | VectorField) -> None:
    with open(path, "w") as fh:
        fh.write(format_field(f))


def read_field(path, as_vector: bool = False) -> ScalarField | VectorField:
    with open(path) as fh:
        return parse_field(fh.read(), as_vector)
