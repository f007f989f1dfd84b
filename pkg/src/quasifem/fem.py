"""P1 finite element machinery: basis gradients, element matrices, assembly, field I/O."""
import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import CoefficientBoundsViolation, MeshFormatError, MeshMismatch, UnsupportedBC
from .geometry import jacobian, triangle_quality
from .quadrature import QuadratureRule, interval_rule, triangle_rule

REFERENCE_GRADIENTS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class FEField:
    mesh: object
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.shape[0] != self.mesh.n_vertices:
            raise MeshMismatch(f"field has {v.shape[0]} values but mesh has {self.mesh.n_vertices} vertices")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


def interpolate(mesh, func):
    """Nodal interpolant of ``func(x)`` with ``x`` of shape (n, dim)."""
    return FEField(mesh, np.asarray(func(mesh.coords), dtype=float))


def dirichlet_values(mesh, dirichlet=None):
    """Full nodal vector holding the boundary data at Dirichlet vertices and 0 elsewhere."""
    g = np.zeros(mesh.n_vertices)
    mask = mesh.dirichlet_mask
    if dirichlet is not None and mask.any():
        g[mask] = np.asarray(dirichlet(mesh.coords[mask]), dtype=float)
    return g


# ---------------------------------------------------------------------------
# single element
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ElementGradients:
    grads: np.ndarray  # (3, 2), row i is grad phi_i

    def __getitem__(self, i):
        return self.grads[i]


def basis_gradients(T):
    """Constant gradients of the three nodal basis functions, via the inverse-transpose Jacobian."""
    amap = jacobian(T)
    return ElementGradients((amap.inverse_transpose() @ REFERENCE_GRADIENTS.T).T)


def grad_inner_products(T):
    """``int_T grad phi_i . grad phi_j`` from edge lengths and angles.

    Diagonal ``|e_i|^2 / (4|T|)``, off-diagonal ``-|e_i||e_j| cos(theta_k) / (4|T|)``.
    """
    q = triangle_quality(T)
    e = q.edges
    G = np.empty((3, 3))
    v = np.asarray(T, dtype=float)
    cos = []
    for i in range(3):
        a = v[(i + 1) % 3] - v[i]
        b = v[(i + 2) % 3] - v[i]
        cos.append(float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b)))
    for i in range(3):
        G[i, i] = e[i] ** 2 / (4.0 * q.area)
        for j in range(i + 1, 3):
            k = 3 - i - j
            G[i, j] = G[j, i] = -e[i] * e[j] * cos[k] / (4.0 * q.area)
    return G


def _rule(quad, dim):
    if isinstance(quad, QuadratureRule):
        return quad
    return (interval_rule if dim == 1 else triangle_rule)(int(quad))


def _check_bounds(model, kappa):
    lo, hi = float(kappa.min()), float(kappa.max())
    if lo < model.k_alpha or hi > model.k_beta:
        raise CoefficientBoundsViolation(
            f"model {model.name!r} evaluated to [{lo:.6g}, {hi:.6g}], outside [{model.k_alpha}, {model.k_beta}]"
        )


def element_stiffness(T, model, u_local, quad=2, check_bounds=True):
    """``K_ij = sum_q w_q kappa(x_q, u_h(x_q)) grad phi_i . grad phi_j`` on one triangle."""
    v = np.asarray(T, dtype=float)
    rule = _rule(quad, 2)
    bary = rule.barycentric
    xq = bary @ v
    uq = bary @ np.asarray(u_local, dtype=float)
    kappa = model(xq, uq)
    if check_bounds:
        _check_bounds(model, kappa)
    return float(rule.weights @ kappa) * grad_inner_products(v)


# ---------------------------------------------------------------------------
# global assembly
# ---------------------------------------------------------------------------


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix  # over free vertices
    rhs: np.ndarray
    free: np.ndarray  # free vertex indices, ascending
    lifting: np.ndarray  # full nodal vector with Dirichlet data
    full_matrix: sp.csr_matrix  # before elimination
    full_rhs: np.ndarray

    def expand(self, x_free):
        u = self.lifting.copy()
        u[self.free] = x_free
        return u


@lru_cache(maxsize=16)
def _pattern(mesh):
    """CSR structure of the full stiffness matrix and each local entry's slot in ``data``."""
    el = np.asarray(mesh.elements)
    nv, nloc = mesh.n_vertices, el.shape[1]
    rows = np.repeat(el, nloc, axis=1).ravel()
    cols = np.tile(el, (1, nloc)).ravel()
    keys = rows * nv + cols
    uniq, slots = np.unique(keys, return_inverse=True)
    indices = (uniq % nv).astype(np.int64)
    counts = np.bincount(uniq // nv, minlength=nv)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return indptr, indices, slots.astype(np.int64)


def element_matrices(mesh, model, u, quad_order=2, check_bounds=True):
    """Local stiffness matrices (ne, nloc, nloc) with kappa frozen at the nodal vector ``u``."""
    el = np.asarray(mesh.elements)
    rule = _rule(quad_order, mesh.dim)
    bary = rule.barycentric
    xq = np.einsum("qa,ead->eqd", bary, mesh.coords[el])
    uq = u[el] @ bary.T
    kappa = model(xq.reshape(-1, mesh.dim), uq.ravel()).reshape(uq.shape)
    if check_bounds:
        _check_bounds(model, kappa)
    kbar = kappa @ rule.weights
    if mesh.dim == 1:
        local = np.array([[1.0, -1.0], [-1.0, 1.0]])
        return kbar[:, None, None] * local[None] / mesh.h[:, None, None]
    return kbar[:, None, None] * mesh.geometry[3]


def load_vector(mesh, source, neumann=0.0, quad_order=2):
    """``(f, v)`` plus the Neumann contribution, for every vertex."""
    el = np.asarray(mesh.elements)
    rule = _rule(quad_order, mesh.dim)
    bary = rule.barycentric
    xq = np.einsum("qa,ead->eqd", bary, mesh.coords[el])
    fq = np.asarray(source(xq.reshape(-1, mesh.dim)), dtype=float).reshape(len(el), -1)
    local = (mesh.element_measures[:, None] * (fq * rule.weights)) @ bary  # (ne, nloc)
    F = np.zeros(mesh.n_vertices)
    kernels.scatter_add(F, el.ravel(), local.ravel())
    if mesh.dim == 1:
        for v in mesh.neumann_vertices:
            psi = neumann(mesh.coords[[v]])[0] if callable(neumann) else float(neumann)
            F[v] += psi
        return F
    edges = mesh.neumann_edges
    if len(edges):
        erule = interval_rule(max(quad_order, 1))
        t = erule.points[:, 0]
        a, b = mesh.points[edges[:, 0]], mesh.points[edges[:, 1]]
        length = np.linalg.norm(b - a, axis=1)
        xq = a[:, None, :] * (1.0 - t)[None, :, None] + b[:, None, :] * t[None, :, None]
        if callable(neumann):
            psi = np.asarray(neumann(xq.reshape(-1, 2)), dtype=float).reshape(len(edges), -1)
        else:
            psi = np.full((len(edges), len(t)), float(neumann))
        wpsi = length[:, None] * psi * erule.weights
        contrib = np.column_stack([wpsi @ (1.0 - t), wpsi @ t])
        kernels.scatter_add(F, edges.ravel(), contrib.ravel())
    return F


def assemble(mesh, model, u_current, source, neumann=0.0, dirichlet=None, quad_order=2, check_bounds=True):
    """Linear system with kappa frozen at ``u_current``, Dirichlet rows and columns eliminated."""
    mask = mesh.dirichlet_mask
    if not mask.any():
        raise UnsupportedBC("assembly needs a non-empty Dirichlet set")
    u = np.asarray(u_current.values if isinstance(u_current, FEField) else u_current, dtype=float)
    if u.shape[0] != mesh.n_vertices:
        raise MeshMismatch("current iterate does not match the mesh")
    indptr, indices, slots = _pattern(mesh)
    K = element_matrices(mesh, model, u, quad_order, check_bounds)
    data = np.zeros(len(indices))
    kernels.scatter_add(data, slots, K.ravel())
    A = sp.csr_matrix((data, indices, indptr), shape=(mesh.n_vertices, mesh.n_vertices))
    F = load_vector(mesh, source, neumann, quad_order)
    lifting = dirichlet_values(mesh, dirichlet)
    free = np.flatnonzero(~mask)
    A_ff = A[free][:, free].tocsr()
    A_ff.sort_indices()
    rhs = F[free] - A[free] @ lifting
    return LinearSystem(A_ff, rhs, free, lifting, A, F)


def nonlinear_residual(mesh, model, u, source, neumann=0.0, dirichlet=None, quad_order=2):
    """``K(u) u - F`` restricted to free vertices."""
    u = np.asarray(u.values if isinstance(u, FEField) else u, dtype=float)
    sys_ = assemble(mesh, model, u, source, neumann, dirichlet, quad_order)
    return (sys_.full_matrix @ u - sys_.full_rhs)[sys_.free], sys_


# ---------------------------------------------------------------------------
# errors against exact solutions
# ---------------------------------------------------------------------------


def error_norms(field, exact, exact_grad, quad_order=7):
    """(L2 error, H1-seminorm error) of a P1 field against an exact solution."""
    mesh = field.mesh
    el = np.asarray(mesh.elements)
    rule = _rule(quad_order, mesh.dim)
    bary = rule.barycentric
    xq = np.einsum("qa,ead->eqd", bary, mesh.coords[el]).reshape(-1, mesh.dim)
    uh = (field.values[el] @ bary.T).ravel()
    meas = mesh.element_measures
    diff = (uh - exact(xq)).reshape(len(el), -1)
    l2 = np.sqrt(np.sum(meas * ((diff * diff) @ rule.weights)))
    if mesh.dim == 1:
        gh = (np.diff(field.values[el], axis=1)[:, 0] / mesh.h)[:, None, None]
    else:
        gh = np.einsum("ea,ead->ed", field.values[el], mesh.geometry[2])[:, None, :]
    g = np.asarray(exact_grad(xq)).reshape(len(el), len(rule.weights), mesh.dim)
    gd = ((g - gh) ** 2).sum(axis=2)
    h1 = np.sqrt(np.sum(meas * (gd @ rule.weights)))
    return float(l2), float(h1)


# ---------------------------------------------------------------------------
# field output
# ---------------------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def format_vtk(field, title="quasifem field", cell_data=None):
    """Legacy VTK unstructured grid with point scalar ``u`` and optional cell scalars."""
    mesh = field.mesh
    out = io.StringIO()
    out.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    out.write(f"POINTS {mesh.n_vertices} double\n")
    c = mesh.coords
    for row in c:
        x, y = row[0], (row[1] if mesh.dim == 2 else 0.0)
        out.write(f"{_fmt(x)} {_fmt(y)} 0\n")
    el = np.asarray(mesh.elements)
    nloc = el.shape[1]
    out.write(f"CELLS {len(el)} {len(el) * (nloc + 1)}\n")
    for row in el.tolist():
        out.write(f"{nloc} " + " ".join(map(str, row)) + "\n")
    cell_type = 3 if nloc == 2 else 5
    out.write(f"CELL_TYPES {len(el)}\n")
    out.write(f"{cell_type}\n" * len(el))
    out.write(f"POINT_DATA {mesh.n_vertices}\nSCALARS u double 1\nLOOKUP_TABLE default\n")
    for v in field.values:
        out.write(_fmt(v) + "\n")
    if cell_data:
        out.write(f"CELL_DATA {len(el)}\n")
        for name, vals in cell_data.items():
            out.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in np.asarray(vals, dtype=float):
                out.write(_fmt(v) + "\n")
    return out.getvalue()


def write_vtk(field, path, **kwargs):
    Path(path).write_text(format_vtk(field, **kwargs))


def write_field_csv(field, path):
    mesh = field.mesh
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex_id", "x", "u"] if mesh.dim == 1 else ["vertex_id", "x", "y", "u"])
        for i, (row, u) in enumerate(zip(mesh.coords, field.values)):
            w.writerow([i, *(_fmt(c) for c in row), _fmt(u)])


def read_field_csv(path, mesh):
    """Read a field written by :func:`write_field_csv` and attach it to ``mesh``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MeshFormatError("empty field file", 1)
    header = [h.strip() for h in rows[0]]
    expected = ["vertex_id", "x", "u"] if mesh.dim == 1 else ["vertex_id", "x", "y", "u"]
    if header != expected:
        raise MeshFormatError(f"field header must be {','.join(expected)}", 1)
    data = [r for r in rows[1:] if r]
    if len(data) != mesh.n_vertices:
        raise MeshMismatch(f"field has {len(data)} rows but mesh has {mesh.n_vertices} vertices")
    values = np.empty(mesh.n_vertices)
    for n, r in enumerate(data, start=2):
        try:
            vid, u = int(r[0]), float(r[-1])
        except (ValueError, IndexError):
            raise MeshFormatError(f"cannot parse field row {r}", n) from None
        if len(r) != len(expected) or vid != n - 2:
            raise MeshFormatError("field rows must be ordered by vertex_id with all columns", n)
        values[vid] = u
    return FEField(mesh, values)
