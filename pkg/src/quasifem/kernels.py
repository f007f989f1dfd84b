"""Hot inner loops.

Every kernel exists twice: an explicit-loop version compiled by numba
(``*_loops``) and a vectorized numpy version (``*_numpy``).  The public name
is bound to one of them according to :data:`quasifem._accel.USE_NUMBA`.
Both versions are importable so tests and the benchmark can compare them.
"""
import math

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# triangle geometry
# ---------------------------------------------------------------------------


@njit
def triangle_geometry_loops(points, tris):
    nt = tris.shape[0]
    area = np.empty(nt)
    edges = np.empty((nt, 3))
    grads = np.empty((nt, 3, 2))
    gram = np.empty((nt, 3, 3))
    for e in range(nt):
        for i in range(3):
            j = (i + 1) % 3
            k = (i + 2) % 3
            dx = points[tris[e, k], 0] - points[tris[e, j], 0]
            dy = points[tris[e, k], 1] - points[tris[e, j], 1]
            edges[e, i] = math.sqrt(dx * dx + dy * dy)
        x1 = points[tris[e, 0], 0]
        y1 = points[tris[e, 0], 1]
        x2 = points[tris[e, 1], 0]
        y2 = points[tris[e, 1], 1]
        x3 = points[tris[e, 2], 0]
        y3 = points[tris[e, 2], 1]
        det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
        area[e] = 0.5 * det
        grads[e, 0, 0] = (y2 - y3) / det
        grads[e, 0, 1] = (x3 - x2) / det
        grads[e, 1, 0] = (y3 - y1) / det
        grads[e, 1, 1] = (x1 - x3) / det
        grads[e, 2, 0] = (y1 - y2) / det
        grads[e, 2, 1] = (x2 - x1) / det
        a = abs(area[e])
        for i in range(3):
            for j in range(i, 3):
                g = a * (grads[e, i, 0] * grads[e, j, 0] + grads[e, i, 1] * grads[e, j, 1])
                gram[e, i, j] = g
                gram[e, j, i] = g
    return area, edges, grads, gram


def triangle_geometry_numpy(points, tris):
    p = points[tris]
    x, y = p[..., 0], p[..., 1]
    d = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]
    edges = np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1])
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    grads = np.empty(p.shape)
    grads[:, 0, 0] = (y[:, 1] - y[:, 2]) / det
    grads[:, 0, 1] = (x[:, 2] - x[:, 1]) / det
    grads[:, 1, 0] = (y[:, 2] - y[:, 0]) / det
    grads[:, 1, 1] = (x[:, 0] - x[:, 2]) / det
    grads[:, 2, 0] = (y[:, 0] - y[:, 1]) / det
    grads[:, 2, 1] = (x[:, 1] - x[:, 0]) / det
    area = 0.5 * det
    a = np.abs(area)
    gram = np.empty((len(tris), 3, 3))
    for i in range(3):
        for j in range(i, 3):
            g = a * (grads[:, i, 0] * grads[:, j, 0] + grads[:, i, 1] * grads[:, j, 1])
            gram[:, i, j] = g
            gram[:, j, i] = g
    return area, edges, grads, gram


# ---------------------------------------------------------------------------
# nodal variation per element
# ---------------------------------------------------------------------------


@njit
def element_variation_loops(values, elements):
    ne, nv = elements.shape
    out = np.empty(ne)
    for e in range(ne):
        lo = values[elements[e, 0]]
        hi = lo
        for a in range(1, nv):
            v = values[elements[e, a]]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        out[e] = hi - lo
    return out


def element_variation_numpy(values, elements):
    local = values[elements]
    return local.max(axis=1) - local.min(axis=1)


# ---------------------------------------------------------------------------
# CSR accumulation (element order, hence deterministic)
# ---------------------------------------------------------------------------


@njit
def scatter_add_loops(data, positions, values):
    for n in range(positions.shape[0]):
        data[positions[n]] += values[n]
    return data


def scatter_add_numpy(data, positions, values):
    np.add.at(data, positions, values)
    return data
    return data


# ---------------------------------------------------------------------------
# Jacobi-preconditioned conjugate gradients on CSR arrays
# ---------------------------------------------------------------------------


@njit
def _csr_matvec(indptr, indices, data, x, out):
    for r in range(indptr.shape[0] - 1):
        acc = 0.0
        for p in range(indptr[r], indptr[r + 1]):
            acc += data[p] * x[indices[p]]
        out[r] = acc


@njit
def pcg_loops(indptr, indices, data, b, x0, tol, maxiter):
    n = b.shape[0]
    diag = np.ones(n)
    for r in range(n):
        for p in range(indptr[r], indptr[r + 1]):
            if indices[p] == r:
                diag[r] = data[p]
    x = x0.copy()
    ax = np.empty(n)
    _csr_matvec(indptr, indices, data, x, ax)
    r = b - ax
    bnorm = math.sqrt(np.dot(b, b))
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0
    res = math.sqrt(np.dot(r, r)) / bnorm
    if res <= tol:
        return x, 0, res
    d = r / diag
    rz = 0.0
    for q in range(n):
        rz += r[q] * d[q]
    ad = np.empty(n)
    it = 0
    while it < maxiter:
        it += 1
        _csr_matvec(indptr, indices, data, d, ad)
        dad = 0.0
        for q in range(n):
            dad += d[q] * ad[q]
        alpha = rz / dad
        rr = 0.0
        rz_new = 0.0
        for q in range(n):
            x[q] += alpha * d[q]
            r[q] -= alpha * ad[q]
            rr += r[q] * r[q]
            rz_new += r[q] * r[q] / diag[q]
        res = math.sqrt(rr) / bnorm
        if res <= tol:
            break
        beta = rz_new / rz
        for q in range(n):
            d[q] = r[q] / diag[q] + beta * d[q]
        rz = rz_new
    # true residual, guards against drift of the recursive update
    _csr_matvec(indptr, indices, data, x, ax)
    r = b - ax
    return x, it, math.sqrt(np.dot(r, r)) / bnorm


def pcg_numpy(indptr, indices, data, b, x0, tol, maxiter):
    n = b.shape[0]
    A = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    diag = A.diagonal().copy()
    diag[diag == 0.0] = 1.0
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0
    x = x0.copy()
    r = b - A @ x
    res = np.linalg.norm(r) / bnorm
    if res <= tol:
        return x, 0, res
    z = r / diag
    d = z.copy()
    rz = r @ z
    it = 0
    while it < maxiter:
        it += 1
        ad = A @ d
        alpha = rz / (d @ ad)
        x += alpha * d
        r -= alpha * ad
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            break
        z = r / diag
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    return x, it, np.linalg.norm(b - A @ x) / bnorm


# ---------------------------------------------------------------------------
# tridiagonal elimination (1D systems)
# ---------------------------------------------------------------------------


@njit
def tridiag_solve_loops(sub, diag, sup, rhs):
    n = diag.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    c[0] = sup[0] / diag[0] if n > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - sub[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = sup[i] / m
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m
    x = np.empty(n)
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def tridiag_solve_numpy(sub, diag, sup, rhs):
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = sup
    ab[1] = diag
    ab[2, :-1] = sub
    return solve_banded((1, 1), ab, rhs)


if USE_NUMBA:
    triangle_geometry = triangle_geometry_loops
    element_variation = element_variation_loops
    scatter_add = scatter_add_loops
    pcg = pcg_loops
    tridiag_solve = tridiag_solve_loops
else:
    triangle_geometry = triangle_geometry_numpy
    element_variation = element_variation_numpy
    scatter_add = scatter_add_numpy
    pcg = pcg_numpy
    tridiag_solve = tridiag_solve_numpy
