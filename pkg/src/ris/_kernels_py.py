"""Pure numpy versions of the hot kernels (used when the extension is absent)."""
from __future__ import annotations

import numpy as np


def envelope_sweep(values, spacing, lam, sign):
    """Min-plus (sign=+1) or max-minus (sign=-1) convolution with ``lam * |.|_1``.

    For ``sign=+1`` returns ``min_y u(y) + lam * dist(x, y)`` over grid nodes,
    ``dist`` being the grid-geodesic (axis-aligned path) distance.
    """
    v = np.array(values, dtype=float, copy=True)
    for axis, h in enumerate(spacing):
        step = lam * h
        w = np.moveaxis(v, axis, 0)
        n = w.shape[0]
        if w.ndim == 1:
            w = w[:, None]          # keep rows as views for the in-place updates
        if sign > 0:
            for i in range(1, n):
                np.minimum(w[i], w[i - 1] + step, out=w[i])
            for i in range(n - 2, -1, -1):
                np.minimum(w[i], w[i + 1] + step, out=w[i])
        else:
            for i in range(1, n):
                np.maximum(w[i], w[i - 1] - step, out=w[i])
            for i in range(n - 2, -1, -1):
                np.maximum(w[i], w[i + 1] - step, out=w[i])
    return v


def rasterize_quads(quads, x0, y0, pix, nx, ny):
    """Mark pixels whose centres lie in any counter-clockwise convex quad."""
    mask = np.zeros((nx, ny), dtype=np.uint8)
    quads = np.asarray(quads, dtype=float)
    for q in quads:
        lo = np.floor((q.min(axis=0) - (x0, y0)) / pix - 0.5).astype(int)
        hi = np.ceil((q.max(axis=0) - (x0, y0)) / pix - 0.5).astype(int)
        i0, j0 = max(lo[0], 0), max(lo[1], 0)
        i1, j1 = min(hi[0], nx - 1), min(hi[1], ny - 1)
        if i1 < i0 or j1 < j0:
            continue
        px = x0 + (np.arange(i0, i1 + 1) + 0.5) * pix
        py = y0 + (np.arange(j0, j1 + 1) + 0.5) * pix
        X, Y = np.meshgrid(px, py, indexing="ij")
        inside = np.ones(X.shape, dtype=bool)
        for e in range(4):
            ax, ay = q[e]
            bx, by = q[(e + 1) % 4]
            inside &= (bx - ax) * (Y - ay) - (by - ay) * (X - ax) >= 0.0
        mask[i0:i1 + 1, j0:j1 + 1] |= inside.astype(np.uint8)
    return mask


def rasterize_tets(tets, origin, pix, shape):
    """Mark voxels whose centres lie in any positively oriented tetrahedron."""
    nx, ny, nz = shape
    mask = np.zeros((nx, ny, nz), dtype=np.uint8)
    origin = np.asarray(origin, dtype=float)
    for t in np.asarray(tets, dtype=float):
        lo = np.maximum(np.floor((t.min(axis=0) - origin) / pix - 0.5).astype(int), 0)
        hi = np.minimum(np.ceil((t.max(axis=0) - origin) / pix - 0.5).astype(int),
                        np.array(shape) - 1)
        if np.any(hi < lo):
            continue
        axes = [origin[k] + (np.arange(lo[k], hi[k] + 1) + 0.5) * pix for k in range(3)]
        P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        T = np.stack([t[1] - t[0], t[2] - t[0], t[3] - t[0]], axis=1)
        lam = np.linalg.solve(T, (P - t[0]).reshape(-1, 3).T).T
        inside = np.all(lam >= 0.0, axis=1) & (lam.sum(axis=1) <= 1.0)
        sl = tuple(slice(lo[k], hi[k] + 1) for k in range(3))
        mask[sl] |= inside.reshape(P.shape[:3]).astype(np.uint8)
    return mask
