"""Meshes and element geometry.

Two mesh types share a small duck-typed interface (``dim``, ``n_vertices``,
``n_elements``, ``elements``, ``coords``, ``dirichlet_mask``,
``element_measures``):

* :class:`IntervalMesh` -- a partition ``a_0 < a_1 < ... < a_n`` of an
  interval with a Dirichlet/Neumann tag at each end.
* :class:`TriMesh` -- a conforming triangulation with counterclockwise
  triangles and labelled boundary edges.

Meshes are immutable; :func:`refine` returns a new mesh.
"""
import io
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DegenerateElement, InvalidMesh, MeshFormatError, RefinementOverflow, UnsupportedBC

DIRICHLET = "D"
NEUMANN = "N"
BC_TAGS = (DIRICHLET, NEUMANN)

# area <= DEGENERACY_TOL * (longest edge)**2 counts as degenerate
DEGENERACY_TOL = 1e-14


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# 1D
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IntervalMesh:
    x: np.ndarray
    bc: tuple = (DIRICHLET, DIRICHLET)

    dim = 1

    @property
    def n_vertices(self):
        return len(self.x)

    @property
    def n_elements(self):
        return len(self.x) - 1

    @cached_property
    def elements(self):
        k = np.arange(self.n_elements)
        return _frozen(np.column_stack([k, k + 1]), np.int64)

    @property
    def coords(self):
        return self.x[:, None]

    @cached_property
    def h(self):
        return _frozen(np.diff(self.x), float)

    @property
    def element_measures(self):
        return self.h

    @cached_property
    def dirichlet_mask(self):
        m = np.zeros(self.n_vertices, dtype=bool)
        m[0] = self.bc[0] == DIRICHLET
        m[-1] = self.bc[1] == DIRICHLET
        m.flags.writeable = False
        return m

    @property
    def neumann_vertices(self):
        """Indices of Neumann endpoints."""
        return [v for v, tag in zip((0, self.n_vertices - 1), self.bc) if tag == NEUMANN]

    def element_vertices(self, e):
        return self.x[[e, e + 1]]


def build_interval_mesh(breakpoints, bc_tags=(DIRICHLET, DIRICHLET)):
    x = np.asarray(breakpoints, dtype=float).ravel()
    if x.size < 2:
        raise InvalidMesh("an interval mesh needs at least two breakpoints")
    if not np.all(np.isfinite(x)):
        raise InvalidMesh("breakpoints must be finite")
    if np.any(np.diff(x) <= 0.0):
        raise InvalidMesh("breakpoints must be strictly increasing")
    bc = tuple(str(t).upper() for t in bc_tags)
    if len(bc) != 2 or any(t not in BC_TAGS for t in bc):
        raise InvalidMesh(f"boundary tags must be two of {BC_TAGS}, got {bc_tags!r}")
    if bc == (NEUMANN, NEUMANN):
        raise UnsupportedBC("pure Neumann problems are not supported")
    return IntervalMesh(_frozen(x, float), bc)


def uniform_interval(n, a=0.0, b=1.0, bc=(DIRICHLET, DIRICHLET)):
    return build_interval_mesh(np.linspace(a, b, n + 1), bc)


# ---------------------------------------------------------------------------
# single-triangle quantities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TriangleQuality:
    angles: tuple  # interior angle at vertex i, radians
    gamma: float  # min ratio of sines of interior angles
    c: float  # min cosine of interior angles
    area: float
    edges: tuple  # |e_i|, edge i opposite vertex i
    acute: bool


@dataclass(frozen=True)
class AffineMap:
    J: np.ndarray
    translation: np.ndarray
    det: float

    def __call__(self, ref_points):
        """Map reference coordinates (n, 2) to physical coordinates."""
        return np.asarray(ref_points) @ self.J.T + self.translation

    def inverse_transpose(self):
        return np.linalg.inv(self.J).T


def _as_triangle(T):
    v = np.asarray(T, dtype=float)
    if v.shape != (3, 2):
        raise ValueError(f"triangle must be a (3, 2) array of vertices, got shape {v.shape}")
    return v


def _edge_lengths(v):
    return tuple(float(math.dist(v[(i + 1) % 3], v[(i + 2) % 3])) for i in range(3))


def _signed_area(v):
    return 0.5 * ((v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1]))


def _check_nondegenerate(v):
    area = _signed_area(v)
    longest = max(_edge_lengths(v))
    if area <= DEGENERACY_TOL * longest * longest:
        raise DegenerateElement(f"triangle {v.tolist()} has non-positive or vanishing area {area:.3e}")
    return area


def triangle_quality(T):
    v = _as_triangle(T)
    area = _check_nondegenerate(v)
    edges = _edge_lengths(v)
    angles, sines, cosines = [], [], []
    for i in range(3):
        p = v[(i + 1) % 3] - v[i]
        q = v[(i + 2) % 3] - v[i]
        cross = abs(p[0] * q[1] - p[1] * q[0])
        dot = p[0] * q[0] + p[1] * q[1]
        norm = math.hypot(*p) * math.hypot(*q)
        angles.append(math.atan2(cross, dot))
        sines.append(cross / norm)
        cosines.append(dot / norm)
    return TriangleQuality(
        angles=tuple(angles),
        gamma=min(sines) / max(sines),
        c=min(cosines),
        area=float(area),
        edges=edges,
        acute=min(cosines) > 0.0,
    )


def jacobian(T):
    v = _as_triangle(T)
    _check_nondegenerate(v)
    J = np.column_stack([v[1] - v[0], v[2] - v[0]])
    return AffineMap(J=J, translation=v[0].copy(), det=float(np.linalg.det(J)))


# ---------------------------------------------------------------------------
# 2D meshes
# ---------------------------------------------------------------------------


def _edge_keys(tris):
    """(nt, 3, 2) sorted vertex pairs; edge i is opposite local vertex i."""
    e = np.stack([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]], axis=1)
    return np.sort(e, axis=2)


@dataclass(frozen=True, eq=False)
class TriMesh:
    points: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_labels: tuple
    meta: dict = field(default_factory=dict, compare=False)

    dim = 2

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def n_elements(self):
        return len(self.triangles)

    @property
    def elements(self):
        return self.triangles

    @property
    def coords(self):
        return self.points

    @cached_property
    def geometry(self):
        """(signed area, edge lengths, basis gradients, gradient Gram matrices)."""
        return kernels.triangle_geometry(self.points, self.triangles)

    @property
    def element_measures(self):
        return np.abs(self.geometry[0])

    @cached_property
    def dirichlet_mask(self):
        m = np.zeros(self.n_vertices, dtype=bool)
        labels = np.asarray(self.boundary_labels)
        m[self.boundary_edges[labels == DIRICHLET].ravel()] = True
        m.flags.writeable = False
        return m

    @property
    def neumann_edges(self):
        labels = np.asarray(self.boundary_labels)
        return self.boundary_edges[labels == NEUMANN]

    def element_vertices(self, e):
        return self.points[self.triangles[e]]

    @cached_property
    def angles(self):
        """(nt, 3) interior angles."""
        p = self.points[self.triangles]
        out = np.empty((self.n_elements, 3))
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cross = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
            out[:, i] = np.arctan2(cross, (a * b).sum(axis=1))
        return out

    @cached_property
    def cosines(self):
        p = self.points[self.triangles]
        out = np.empty((self.n_elements, 3))
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            out[:, i] = (a * b).sum(axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        return out

    @cached_property
    def gamma(self):
        """Per-element min ratio of sines, via the law of sines on edge lengths."""
        e = self.geometry[1]
        return e.min(axis=1) / e.max(axis=1)

    @property
    def c(self):
        return self.cosines.min(axis=1)


def build_tri_mesh(points, triangles, boundary_edges, boundary_labels, meta=None):
    """Validate and freeze a triangulation.

    Clockwise triangles are reoriented (with a warning).  Raises
    :class:`InvalidMesh` for non-conforming input or a missing Dirichlet part.
    """
    pts = np.array(points, dtype=float)
    tris = np.array(triangles, dtype=np.int64)
    bedges = np.array(boundary_edges, dtype=np.int64).reshape(-1, 2)
    labels = tuple(str(s).upper() for s in boundary_labels)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidMesh("points must be an (n, 2) array")
    if tris.ndim != 2 or tris.shape[1] != 3:
        raise InvalidMesh("triangles must be an (m, 3) array")
    if len(labels) != len(bedges):
        raise InvalidMesh("one label per boundary edge required")
    if any(t not in BC_TAGS for t in labels):
        raise InvalidMesh(f"boundary labels must be in {BC_TAGS}")
    if tris.size and (tris.min() < 0 or tris.max() >= len(pts)):
        raise InvalidMesh("triangle vertex index out of range")
    if bedges.size and (bedges.min() < 0 or bedges.max() >= len(pts)):
        raise InvalidMesh("boundary vertex index out of range")
    if len(tris) == 0:
        raise InvalidMesh("mesh has no triangles")

    p = pts[tris]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    longest2 = np.max(((p[:, [1, 2, 0]] - p) ** 2).sum(axis=2), axis=1)
    bad = np.abs(det) <= 2.0 * DEGENERACY_TOL * longest2
    if bad.any():
        raise DegenerateElement(f"degenerate triangles: {np.flatnonzero(bad).tolist()}")
    cw = det < 0
    if cw.any():
        warnings.warn(f"reoriented {int(cw.sum())} clockwise triangles", stacklevel=2)
        tris[cw] = tris[cw][:, [0, 2, 1]]

    problems = conformity_problems(tris, bedges)
    if problems:
        raise InvalidMesh("; ".join(problems[:5]))
    if DIRICHLET not in labels:
        raise UnsupportedBC("the Dirichlet boundary must contain at least one edge")
    return TriMesh(_frozen(pts, float), _frozen(tris, np.int64), _frozen(bedges, np.int64), labels, dict(meta or {}))


def conformity_problems(triangles, boundary_edges):
    """Human-readable conformity violations; empty when the mesh conforms.

    Interior edges must be shared by exactly two triangles and every edge used
    by a single triangle must be a listed boundary edge (hanging nodes show up
    as unlisted single-use edges).
    """
    tris = np.asarray(triangles)
    keys = _edge_keys(tris).reshape(-1, 2)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    problems = []
    over = uniq[counts > 2]
    if len(over):
        problems.append(f"edges shared by more than two triangles: {over.tolist()[:5]}")
    single = {tuple(e) for e in uniq[counts == 1]}
    listed = {tuple(sorted(e)) for e in np.asarray(boundary_edges).tolist()}
    if len(listed) != len(np.asarray(boundary_edges)):
        problems.append("duplicate boundary edges")
    missing = single - listed
    if missing:
        problems.append(f"single-use edges not on the boundary list (hanging nodes?): {sorted(missing)[:5]}")
    extra = listed - single
    if extra:
        problems.append(f"boundary edges not belonging to exactly one triangle: {sorted(extra)[:5]}")
    return problems


def is_conforming(mesh):
    if mesh.dim == 1:
        return True
    return not conformity_problems(mesh.triangles, mesh.boundary_edges)


def relabel_boundary(mesh, labeler):
    """Return a copy of ``mesh`` with boundary labels ``labeler(midpoint) -> 'D'|'N'``."""
    mids = mesh.points[mesh.boundary_edges].mean(axis=1)
    labels = [labeler(m) for m in mids]
    return build_tri_mesh(mesh.points, mesh.triangles, mesh.boundary_edges, labels, mesh.meta)


# ---------------------------------------------------------------------------
# regularity
# ---------------------------------------------------------------------------


@dataclass
class RegularityReport:
    t_min: float
    violations: list  # (element, reason)
    min_angle: float
    max_angle: float
    s_min: float  # sin of smallest angle in the mesh
    c_min: float  # min over elements of c_T

    @property
    def ok(self):
        return not self.violations

    @property
    def elements(self):
        return sorted({e for e, _ in self.violations})


def check_regularity(mesh, t_min):
    """Scan every triangle for angles below ``t_min`` or not strictly acute."""
    ang = mesh.angles
    cos = mesh.cosines
    violations = []
    for e in range(mesh.n_elements):
        if ang[e].min() < t_min:
            violations.append((e, f"angle {ang[e].min():.6g} below t_min {t_min:.6g}"))
        if cos[e].min() <= 0.0:
            violations.append((e, f"angle {ang[e].max():.6g} not below pi/2"))
    amin = float(ang.min())
    return RegularityReport(
        t_min=float(t_min),
        violations=violations,
        min_angle=amin,
        max_angle=float(ang.max()),
        s_min=math.sin(amin),
        c_min=float(cos.min()),
    )


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------


@dataclass
class Refinement:
    mesh: object
    parents: np.ndarray  # new element -> element of the previous mesh
    midpoints: np.ndarray = None  # 2D: new vertex -> (old vertex, old vertex)
    old_mesh: object = None

    def prolong(self, values):
        """Interpolate a P1 nodal vector from the old mesh onto the refined mesh."""
        values = np.asarray(values, dtype=float)
        if self.mesh.dim == 1:
            return np.interp(self.mesh.x, self.old_mesh.x, values)
        return np.concatenate([values, values[self.midpoints].mean(axis=1)])


def refine(mesh, marked, max_depth=64):
    """Refine the marked elements.

    1D: bisect each marked interval.  2D: red-refine marked triangles and close
    the mesh -- a triangle with two or more split edges is itself red-refined,
    one with a single split edge is bisected toward that edge's midpoint
    (green).  ``max_depth`` bounds the number of closure sweeps.
    """
    marked = np.unique(np.asarray(list(marked), dtype=np.int64))
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.n_elements):
        raise IndexError("marked element index out of range")
    if mesh.dim == 1:
        return _refine_1d(mesh, marked)
    return _refine_2d(mesh, marked, max_depth)


def _refine_1d(mesh, marked):
    x = mesh.x
    mids = 0.5 * (x[marked] + x[marked + 1])
    new_x = np.sort(np.concatenate([x, mids]))
    split = np.zeros(mesh.n_elements, dtype=bool)
    split[marked] = True
    parents = np.repeat(np.arange(mesh.n_elements), np.where(split, 2, 1))
    return Refinement(IntervalMesh(_frozen(new_x, float), mesh.bc), parents, old_mesh=mesh)


def _refine_2d(mesh, marked, max_depth):
    tris = mesh.triangles
    keys = _edge_keys(tris)
    red = np.zeros(mesh.n_elements, dtype=bool)
    red[marked] = True
    depth = 0
    while True:
        split = {tuple(k) for k in keys[red].reshape(-1, 2).tolist()}
        nsplit = np.array([[tuple(k) in split for k in row] for row in keys[~red].tolist()], dtype=bool).reshape(-1, 3)
        upgrade = np.flatnonzero(~red)[nsplit.sum(axis=1) >= 2]
        if upgrade.size == 0:
            break
        depth += 1
        if depth > max_depth:
            raise RefinementOverflow(f"red/green closure exceeded {max_depth} sweeps")
        red[upgrade] = True

    edges = sorted(split)
    mid_index = {e: mesh.n_vertices + n for n, e in enumerate(edges)}
    midpoints = np.array(edges, dtype=np.int64).reshape(-1, 2)
    new_pts = np.vstack([mesh.points, mesh.points[midpoints].mean(axis=1)]) if len(edges) else mesh.points.copy()

    new_tris, parents = [], []
    for e, (a, b, c) in enumerate(tris.tolist()):
        ka, kb, kc = (tuple(k) for k in keys[e].tolist())  # opposite a, b, c
        if red[e]:
            mab, mbc, mca = mid_index[kc], mid_index[ka], mid_index[kb]
            new_tris += [(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)]
            parents += [e] * 4
            continue
        hit = [k in mid_index for k in (ka, kb, kc)]
        if not any(hit):
            new_tris.append((a, b, c))
            parents.append(e)
            continue
        i = hit.index(True)
        vi, vj, vk = (a, b, c)[i], (a, b, c)[(i + 1) % 3], (a, b, c)[(i + 2) % 3]
        m = mid_index[(ka, kb, kc)[i]]
        new_tris += [(vi, vj, m), (vi, m, vk)]
        parents += [e, e]

    new_bedges, new_labels = [], []
    for (u, v), lab in zip(mesh.boundary_edges.tolist(), mesh.boundary_labels):
        m = mid_index.get(tuple(sorted((u, v))))
        if m is None:
            new_bedges.append((u, v))
            new_labels.append(lab)
        else:
            new_bedges += [(u, m), (m, v)]
            new_labels += [lab, lab]

    new_mesh = TriMesh(
        _frozen(new_pts, float),
        _frozen(new_tris, np.int64),
        _frozen(new_bedges, np.int64).reshape(-1, 2),
        tuple(new_labels),
        dict(mesh.meta),
    )
    return Refinement(new_mesh, np.array(parents, dtype=np.int64), midpoints, mesh)


def refine_uniform(mesh, times=1):
    for _ in range(times):
        mesh = refine(mesh, range(mesh.n_elements)).mesh
    return mesh


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def equilateral_triangle_mesh(n, side=1.0):
    """Uniform partition of the equilateral triangle (0,0), (side,0), (side/2, side*sqrt(3)/2).

    Every element is equilateral with edge ``side/n``; the whole boundary is Dirichlet.
    """
    if n < 1:
        raise InvalidMesh("n must be >= 1")
    idx = {}
    pts = []
    for r in range(n + 1):
        for i in range(n + 1 - r):
            idx[r, i] = len(pts)
            pts.append(((i + 0.5 * r) * side / n, r * side * math.sqrt(3.0) / 2.0 / n))
    tris = []
    for r in range(n):
        for i in range(n - r):
            tris.append((idx[r, i], idx[r, i + 1], idx[r + 1, i]))
            if i < n - r - 1:
                tris.append((idx[r, i + 1], idx[r + 1, i + 1], idx[r + 1, i]))
    bedges = []
    for i in range(n):
        bedges.append((idx[0, i], idx[0, i + 1]))
    for r in range(n):
        bedges.append((idx[r, n - r], idx[r + 1, n - r - 1]))
        bedges.append((idx[r + 1, 0], idx[r, 0]))
    return build_tri_mesh(pts, tris, bedges, [DIRICHLET] * len(bedges), {"generator": f"equilateral {n}"})


# Acute triangulation of the unit square (max angle ~72.03 deg, min ~40.36 deg).
_SQUARE_POINTS = [
    (0.0, 0.0), (0.3429, 0.0), (0.6622, 0.0), (1.0, 0.0), (1.0, 0.3669), (1.0, 0.6331),
    (1.0, 1.0), (0.6622, 1.0), (0.3429, 1.0), (0.0, 1.0), (0.0, 0.6308), (0.0, 0.3692),
    (0.2513, 0.2173), (0.4588, 0.2348), (0.7497, 0.2127), (0.3175, 0.5), (0.6799, 0.5),
    (0.2513, 0.7827), (0.4588, 0.7652), (0.7497, 0.7873),
]
_SQUARE_TRIANGLES = [
    (4, 5, 16), (14, 4, 16), (4, 14, 3), (14, 2, 3), (15, 13, 16), (13, 14, 16), (14, 13, 2),
    (18, 15, 16), (10, 11, 15), (11, 12, 15), (12, 13, 15), (12, 11, 0), (5, 19, 16),
    (19, 18, 16), (19, 5, 6), (18, 17, 15), (17, 10, 15), (17, 18, 8), (10, 17, 9),
    (17, 8, 9), (1, 12, 0), (12, 1, 13), (13, 1, 2), (7, 19, 6), (18, 7, 8), (19, 7, 18),
]
_SQUARE_BOUNDARY = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9), (9, 10), (10, 11), (11, 0)]


def unit_square_mesh(level=0, labeler=None):
    """Acute triangulation of [0,1]^2, red-refined ``level`` times (stays acute)."""
    labels = [DIRICHLET] * len(_SQUARE_BOUNDARY)
    mesh = build_tri_mesh(_SQUARE_POINTS, _SQUARE_TRIANGLES, _SQUARE_BOUNDARY, labels, {"generator": f"square {level}"})
    mesh = refine_uniform(mesh, level)
    if labeler is not None:
        mesh = relabel_boundary(mesh, labeler)
    return mesh


def perturb_interior(mesh, amplitude, rng):
    """Jitter interior vertices by ``amplitude`` times the shortest edge (uniform in a square)."""
    h = mesh.geometry[1].min()
    on_boundary = np.zeros(mesh.n_vertices, dtype=bool)
    on_boundary[mesh.boundary_edges.ravel()] = True
    pts = mesh.points.copy()
    jitter = rng.uniform(-amplitude * h, amplitude * h, size=pts.shape)
    pts[~on_boundary] += jitter[~on_boundary]
    return build_tri_mesh(pts, mesh.triangles, mesh.boundary_edges, mesh.boundary_labels, mesh.meta)


def generate_mesh(spec):
    """Build a mesh from a generator string such as ``"interval 8"``, ``"equilateral 4"`` or ``"square 2"``.

    Optional trailing tokens for intervals give the end tags, e.g. ``"interval 8 N D"``.
    """
    parts = spec.split()
    if not parts:
        raise ValueError("empty mesh generator spec")
    kind, args = parts[0].lower(), parts[1:]
    try:
        if kind == "interval":
            n = int(args[0])
            bc = tuple(args[1:3]) if len(args) >= 3 else (DIRICHLET, DIRICHLET)
            return uniform_interval(n, bc=bc)
        if kind == "equilateral":
            return equilateral_triangle_mesh(int(args[0]))
        if kind == "square":
            return unit_square_mesh(int(args[0]) if args else 0)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad mesh generator spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown mesh generator {kind!r}")


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def format_mesh(mesh):
    out = io.StringIO()
    if mesh.dim == 1:
        out.write(f"1 {mesh.n_vertices} {mesh.n_elements} 2\n")
        for x in mesh.x:
            out.write(_fmt(x) + "\n")
        for a, b in mesh.elements.tolist():
            out.write(f"{a} {b}\n")
        out.write(f"0 {mesh.bc[0]}\n{mesh.n_vertices - 1} {mesh.bc[1]}\n")
    else:
        out.write(f"2 {mesh.n_vertices} {mesh.n_elements} {len(mesh.boundary_edges)}\n")
        for x, y in mesh.points:
            out.write(f"{_fmt(x)} {_fmt(y)}\n")
        for a, b, c in mesh.triangles.tolist():
            out.write(f"{a} {b} {c}\n")
        for (a, b), lab in zip(mesh.boundary_edges.tolist(), mesh.boundary_labels):
            out.write(f"{a} {b} {lab}\n")
    return out.getvalue()


def write_mesh(mesh, path):
    Path(path).write_text(format_mesh(mesh))


def parse_mesh(text):
    """Parse the line-oriented mesh format; errors carry 1-based line numbers."""
    lines = [(n, ln.split()) for n, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise MeshFormatError("empty mesh file", 1)
    lineno, header = lines[0]
    if len(header) != 4:
        raise MeshFormatError("header must be 'dim n_vertices n_elements n_boundary'", lineno)
    try:
        dim, nv, ne, nb = (int(t) for t in header)
    except ValueError:
        raise MeshFormatError("header fields must be integers", lineno) from None
    if dim not in (1, 2) or min(nv, ne, nb) < 0:
        raise MeshFormatError(f"invalid header {header}", lineno)
    expected = 1 + nv + ne + nb
    if len(lines) != expected:
        where = lines[expected][0] if len(lines) > expected else lines[-1][0]
        raise MeshFormatError(f"expected {expected} non-empty lines, found {len(lines)}", where)

    def numbers(k, count, kind, what):
        n, toks = lines[k]
        if len(toks) != count:
            raise MeshFormatError(f"{what} line needs {count} fields, got {len(toks)}", n)
        try:
            vals = [kind(t) for t in toks]
        except ValueError:
            raise MeshFormatError(f"cannot parse {what} line {' '.join(toks)!r}", n) from None
        if kind is int and any(v < 0 or v >= nv for v in vals):
            raise MeshFormatError(f"vertex index out of range in {what} line", n)
        return vals

    verts = [numbers(1 + i, dim, float, "vertex") for i in range(nv)]
    elems = [numbers(1 + nv + i, dim + 1, int, "element") for i in range(ne)]
    bnd, labels = [], []
    for i in range(nb):
        n, toks = lines[1 + nv + ne + i]
        if len(toks) != dim + 1:
            raise MeshFormatError(f"boundary line needs {dim + 1} fields, got {len(toks)}", n)
        label = toks[-1]
        if label not in BC_TAGS:
            raise MeshFormatError(f"boundary label must be D or N, got {label!r}", n)
        try:
            idx = [int(t) for t in toks[:-1]]
        except ValueError:
            raise MeshFormatError("cannot parse boundary vertex index", n) from None
        if any(v < 0 or v >= nv for v in idx):
            raise MeshFormatError("vertex index out of range in boundary line", n)
        bnd.append(idx)
        labels.append(label)

    try:
        if dim == 1:
            return _assemble_interval(verts, elems, bnd, labels, lines, nv)
        return build_tri_mesh(verts, elems, bnd, labels)
    except (InvalidMesh, UnsupportedBC, DegenerateElement) as exc:
        if isinstance(exc, MeshFormatError):
            raise
        raise MeshFormatError(str(exc), lines[0][0]) from exc


def _assemble_interval(verts, elems, bnd, labels, lines, nv):
    x = np.array([v[0] for v in verts])
    if np.any(np.diff(x) <= 0):
        bad = int(np.flatnonzero(np.diff(x) <= 0)[0]) + 1
        raise MeshFormatError("1D vertices must be strictly increasing", lines[1 + bad][0])
    if sorted(tuple(sorted(e)) for e in elems) != [(k, k + 1) for k in range(nv - 1)]:
        raise MeshFormatError("1D elements must join consecutive vertices", lines[1 + nv][0])
    tags = {}
    for (v,), lab in zip(bnd, labels):
        if v not in (0, nv - 1) or v in tags:
            raise MeshFormatError(f"1D boundary entries must tag each endpoint once (vertex {v})", lines[0][0])
        tags[v] = lab
    if len(tags) != 2:
        raise MeshFormatError("1D meshes need a tag for both endpoints", lines[0][0])
    return build_interval_mesh(x, (tags[0], tags[nv - 1]))


def read_mesh(path):
    return parse_mesh(Path(path).read_text())
