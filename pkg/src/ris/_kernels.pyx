# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; mirrors ``_kernels_py`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil

cnp.import_array()


cdef void _sweep_line(double[:, ::1] w, double step, int sign) noexcept nogil:
    cdef Py_ssize_t n = w.shape[0], m = w.shape[1], i, j
    cdef double c
    if sign > 0:
        for i in range(1, n):
            for j in range(m):
                c = w[i - 1, j] + step
                if c < w[i, j]:
                    w[i, j] = c
        for i in range(n - 2, -1, -1):
            for j in range(m):
                c = w[i + 1, j] + step
                if c < w[i, j]:
                    w[i, j] = c
    else:
        for i in range(1, n):
            for j in range(m):
                c = w[i - 1, j] - step
                if c > w[i, j]:
                    w[i, j] = c
        for i in range(n - 2, -1, -1):
            for j in range(m):
                c = w[i + 1, j] - step
                if c > w[i, j]:
                    w[i, j] = c


def envelope_sweep(values, spacing, double lam, int sign):
    v = np.array(values, dtype=np.float64, copy=True)
    cdef double[:, ::1] w
    for axis, h in enumerate(spacing):
        moved = np.ascontiguousarray(np.moveaxis(v, axis, 0))
        flat = moved.reshape(moved.shape[0], -1)
        w = flat
        _sweep_line(w, lam * h, sign)
        v = np.moveaxis(flat.reshape(moved.shape), 0, axis)
    return np.ascontiguousarray(v)


def rasterize_quads(quads, double x0, double y0, double pix, int nx, int ny):
    cdef double[:, :, ::1] q = np.ascontiguousarray(quads, dtype=np.float64)
    out = np.zeros((nx, ny), dtype=np.uint8)
    cdef unsigned char[:, ::1] mask = out
    cdef Py_ssize_t c, e, i, j
    cdef int i0, i1, j0, j1
    cdef double xmin, xmax, ymin, ymax, px, py, ax, ay, bx, by
    cdef bint inside
    with nogil:
        for c in range(q.shape[0]):
            xmin = xmax = q[c, 0, 0]
            ymin = ymax = q[c, 0, 1]
            for e in range(1, 4):
                xmin = min(xmin, q[c, e, 0]); xmax = max(xmax, q[c, e, 0])
                ymin = min(ymin, q[c, e, 1]); ymax = max(ymax, q[c, e, 1])
            i0 = max(<int>floor((xmin - x0) / pix - 0.5), 0)
            i1 = min(<int>ceil((xmax - x0) / pix - 0.5), nx - 1)
            j0 = max(<int>floor((ymin - y0) / pix - 0.5), 0)
            j1 = min(<int>ceil((ymax - y0) / pix - 0.5), ny - 1)
            for i in range(i0, i1 + 1):
                px = x0 + (i + 0.5) * pix
                for j in range(j0, j1 + 1):
                    if mask[i, j]:
                        continue
                    py = y0 + (j + 0.5) * pix
                    inside = True
                    for e in range(4):
                        ax = q[c, e, 0]; ay = q[c, e, 1]
                        bx = q[c, (e + 1) % 4, 0]; by = q[c, (e + 1) % 4, 1]
                        if (bx - ax) * (py - ay) - (by - ay) * (px - ax) < 0.0:
                            inside = False
                            break
                    if inside:
                        mask[i, j] = 1
    return out


def rasterize_tets(tets, origin, double pix, shape):
    cdef double[:, :, ::1] t = np.ascontiguousarray(tets, dtype=np.float64)
    cdef int nx = shape[0], ny = shape[1], nz = shape[2]
    out = np.zeros((nx, ny, nz), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] mask = out
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef Py_ssize_t c, a, i, j, k
    cdef int lo[3]
    cdef int hi[3]
    cdef double mn[3]
    cdef double mx[3]
    cdef double org[3]
    cdef int dims[3]
    cdef double M[3][3]
    cdef double inv[3][3]
    cdef double det, p0, p1, p2, l0, l1, l2
    org[0] = ox; org[1] = oy; org[2] = oz
    dims[0] = nx; dims[1] = ny; dims[2] = nz
    with nogil:
        for c in range(t.shape[0]):
            for a in range(3):
                mn[a] = t[c, 0, a]; mx[a] = t[c, 0, a]
                for i in range(1, 4):
                    mn[a] = min(mn[a], t[c, i, a]); mx[a] = max(mx[a], t[c, i, a])
                lo[a] = max(<int>floor((mn[a] - org[a]) / pix - 0.5), 0)
                hi[a] = min(<int>ceil((mx[a] - org[a]) / pix - 0.5), dims[a] - 1)
            for a in range(3):
                for i in range(3):
                    M[a][i] = t[c, i + 1, a] - t[c, 0, a]
            det = (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
                   - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
                   + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]))
            if det == 0.0:
                continue
            inv[0][0] = (M[1][1] * M[2][2] - M[1][2] * M[2][1]) / det
            inv[0][1] = (M[0][2] * M[2][1] - M[0][1] * M[2][2]) / det
            inv[0][2] = (M[0][1] * M[1][2] - M[0][2] * M[1][1]) / det
            inv[1][0] = (M[1][2] * M[2][0] - M[1][0] * M[2][2]) / det
            inv[1][1] = (M[0][0] * M[2][2] - M[0][2] * M[2][0]) / det
            inv[1][2] = (M[0][2] * M[1][0] - M[0][0] * M[1][2]) / det
            inv[2][0] = (M[1][0] * M[2][1] - M[1][1] * M[2][0]) / det
            inv[2][1] = (M[0][1] * M[2][0] - M[0][0] * M[2][1]) / det
            inv[2][2] = (M[0][0] * M[1][1] - M[0][1] * M[1][0]) / det
            for i in range(lo[0], hi[0] + 1):
                p0 = ox + (i + 0.5) * pix - t[c, 0, 0]
                for j in range(lo[1], hi[1] + 1):
                    p1 = oy + (j + 0.5) * pix - t[c, 0, 1]
                    for k in range(lo[2], hi[2] + 1):
                        if mask[i, j, k]:
                            continue
                        p2 = oz + (k + 0.5) * pix - t[c, 0, 2]
                        l0 = inv[0][0] * p0 + inv[0][1] * p1 + inv[0][2] * p2
                        l1 = inv[1][0] * p0 + inv[1][1] * p1 + inv[1][2] * p2
                        l2 = inv[2][0] * p0 + inv[2][1] * p1 + inv[2][2] * p2
                        if l0 >= 0.0 and l1 >= 0.0 and l2 >= 0.0 and l0 + l1 + l2 <= 1.0:
                            mask[i, j, k] = 1
    return out
