"""Local uniqueness certificates and comparison checks for P1 solutions.

The certificate bounds the nodal variation of a computed solution on every
element:

* 1D: ``|u(a_k) - u(a_{k+1})| < 2 k_alpha / L0``;
* 2D: ``max_{i,j} |u(a_i) - u(a_j)| < 6 k_alpha c_T / (7 L0 g^{-1} (1 + g^{-1}))``
  with ``g = gamma_T`` the min ratio of sines of the angles of T and ``c_T``
  the min cosine.

All inequalities are strict: a zero margin fails.
"""
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InapplicablePattern, InvalidConstants, MeshMismatch
from .geometry import triangle_quality
from .quadrature import triangle_rule

DEFAULT_COMPARE_TOL = 1e-9


@dataclass
class Certificate:
    dim: int
    variation: np.ndarray
    threshold: np.ndarray
    k_alpha: float
    lipschitz: float
    applicable: np.ndarray = None
    slope: np.ndarray = None  # 1D: |u'| per element
    slope_bound: np.ndarray = None  # 1D: 2 k_alpha / (h_k L0)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.applicable is None:
            self.applicable = np.ones(len(self.variation), dtype=bool)

    @property
    def margin(self):
        return self.threshold - self.variation

    @property
    def element_pass(self):
        return self.applicable & (self.variation < self.threshold)

    @property
    def passed(self):
        return bool(np.all(self.element_pass))

    @property
    def failing(self):
        return np.flatnonzero(~self.element_pass)

    @property
    def n_elements(self):
        return len(self.variation)

    def records(self):
        ok = self.element_pass
        return [
            {"element_id": e, "variation": float(v), "threshold": float(t), "margin": float(t - v), "pass": bool(p)}
            for e, (v, t, p) in enumerate(zip(self.variation, self.threshold, ok))
        ]

    def summary(self):
        return {
            "global_pass": self.passed,
            "elements": self.n_elements,
            "failing": int(len(self.failing)),
            "inapplicable": int((~self.applicable).sum()),
            "max_variation": float(self.variation.max(initial=0.0)),
            "min_margin": float(self.margin.min(initial=math.inf)),
            "k_alpha": self.k_alpha,
            "lipschitz": self.lipschitz,
        }

    def to_csv(self):
        out = io.StringIO()
        out.write("element_id,variation,threshold,margin,pass\n")
        for r in self.records():
            out.write(f"{r['element_id']},{r['variation']:.17g},{r['threshold']:.17g},{r['margin']:.17g},"
                      f"{'true' if r['pass'] else 'false'}\n")
        s = self.summary()
        out.write(f"# global_pass={'true' if s['global_pass'] else 'false'} elements={s['elements']} "
                  f"failing={s['failing']} inapplicable={s['inapplicable']} "
                  f"max_variation={s['max_variation']:.17g} min_margin={s['min_margin']:.17g}\n")
        return out.getvalue()


def _check_constants(k_alpha, lipschitz):
    if not (k_alpha > 0 and lipschitz > 0):
        raise InvalidConstants(f"need k_alpha > 0 and L0 > 0, got {k_alpha}, {lipschitz}")


def element_variation(u, element=None):
    """Max nodal difference of ``u`` on one element, or on all elements when ``element`` is None."""
    el = np.asarray(u.mesh.elements)
    if element is not None:
        vals = u.values[el[element]]
        return float(vals.max() - vals.min())
    return kernels.element_variation(np.ascontiguousarray(u.values), np.ascontiguousarray(el))


def certify_1d(u, k_alpha, lipschitz):
    _check_constants(k_alpha, lipschitz)
    mesh = u.mesh
    if mesh.dim != 1:
        raise MeshMismatch("certify_1d needs an interval mesh")
    var = element_variation(u)
    bound = 2.0 * k_alpha / lipschitz
    return Certificate(
        dim=1,
        variation=var,
        threshold=np.full(mesh.n_elements, bound),
        k_alpha=k_alpha,
        lipschitz=lipschitz,
        slope=var / mesh.h,
        slope_bound=bound / mesh.h,
    )


def variation_bound_2d(k_alpha, lipschitz, gamma, c):
    """Per-element variation bound ``6 k_alpha c / (7 L0 gamma^{-1} (1 + gamma^{-1}))``."""
    inv = 1.0 / np.asarray(gamma, dtype=float)
    return 6.0 * k_alpha * np.asarray(c, dtype=float) / (7.0 * lipschitz * inv * (1.0 + inv))


def certify_2d(u, k_alpha, lipschitz):
    """Per-element certificate; elements with ``c_T <= 0`` are marked inapplicable (and fail)."""
    _check_constants(k_alpha, lipschitz)
    mesh = u.mesh
    if mesh.dim != 2:
        raise MeshMismatch("certify_2d needs a triangle mesh")
    c = mesh.c
    applicable = c > 0.0
    threshold = np.where(applicable, variation_bound_2d(k_alpha, lipschitz, mesh.gamma, c), 0.0)
    return Certificate(
        dim=2,
        variation=element_variation(u),
        threshold=threshold,
        k_alpha=k_alpha,
        lipschitz=lipschitz,
        applicable=applicable,
    )


def certify(u, k_alpha, lipschitz):
    return certify_1d(u, k_alpha, lipschitz) if u.mesh.dim == 1 else certify_2d(u, k_alpha, lipschitz)


def global_bound_2d(k_alpha, lipschitz, s_min, c_min):
    return 6.0 * k_alpha / (7.0 * lipschitz) * (s_min * s_min * c_min / (1.0 + s_min))


def certify_2d_global(u, k_alpha, lipschitz, t_min):
    """Mesh-wide sufficient condition with ``s_min = sin(t_min)`` and ``c_min = min_T c_T``.

    Returns ``(passed, bound)``.
    """
    _check_constants(k_alpha, lipschitz)
    mesh = u.mesh
    bound = global_bound_2d(k_alpha, lipschitz, math.sin(t_min), float(mesh.c.min()))
    if bound <= 0.0:
        return False, bound
    return bool(element_variation(u).max() < bound), bound


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    min_difference: float  # min over vertices of u2 - u1
    violating: list
    tolerance: float

    @property
    def ordered(self):
        return self.min_difference >= -self.tolerance


def compare_fields(u1, u2, tolerance=DEFAULT_COMPARE_TOL):
    """Check ``u1 <= u2`` nodally (equivalent to the P1 ordering)."""
    if u1.mesh is not u2.mesh and (
        u1.mesh.n_vertices != u2.mesh.n_vertices or not np.array_equal(u1.mesh.coords, u2.mesh.coords)
    ):
        raise MeshMismatch("fields live on different meshes")
    d = u2.values - u1.values
    return ComparisonReport(float(d.min()), np.flatnonzero(d < -tolerance).tolist(), tolerance)


# ---------------------------------------------------------------------------
# element-level inequalities behind the 2D comparison argument
# ---------------------------------------------------------------------------


@dataclass
class LemmaCheck:
    lemma: int  # 1: w positive at one vertex, 2: at two vertices
    order: tuple  # local indices (i, j, k)
    coercive_lhs: float  # int kappa(x,u1) grad w . grad v
    coercive_rhs: float
    lipschitz_lhs: float  # int (kappa(x,u2) - kappa(x,u1)) grad u2 . grad v
    lipschitz_rhs: float
    eps: float

    @property
    def coercive_ok(self):
        return self.coercive_lhs >= self.coercive_rhs - self.eps

    @property
    def lipschitz_ok(self):
        return self.lipschitz_lhs <= self.lipschitz_rhs + self.eps

    @property
    def ok(self):
        return self.coercive_ok and self.lipschitz_ok


def verify_lemma_bounds(T, u1_local, u2_local, model, quad_order=7, eps=1e-8):
    """Evaluate both sides of the one- or two-positive-vertex element inequalities.

    ``w = u1 - u2`` selects the case.  The left sides are integrated with a
    rule of order ``quad_order``; the right sides are the closed-form bounds in
    ``k_alpha gamma_T c_T`` and ``(7 L0 / 6)(1 + gamma_T^{-1}) max |u2(a_i) - u2(a_j)|``.
    """
    v = np.asarray(T, dtype=float)
    u1 = np.asarray(u1_local, dtype=float)
    u2 = np.asarray(u2_local, dtype=float)
    w = u1 - u2
    pos = np.flatnonzero(w > 0)
    if len(pos) == 1:
        lemma = 1
        i = int(pos[0])
        j, k = sorted((n for n in range(3) if n != i), key=lambda n: -w[n])
        test = np.zeros(3)
        test[i] = 1.0
    elif len(pos) == 2:
        lemma = 2
        i, j = sorted(pos.tolist(), key=lambda n: -w[n])
        k = 3 - i - j
        test = np.zeros(3)
        test[[i, j]] = 1.0
    else:
        raise InapplicablePattern(f"w = {w.tolist()} is positive at {len(pos)} vertices; need one or two")

    q = triangle_quality(v)
    p = v[1] - v[0], v[2] - v[0]
    det = p[0][0] * p[1][1] - p[0][1] * p[1][0]
    grads = np.array([
        [v[1, 1] - v[2, 1], v[2, 0] - v[1, 0]],
        [v[2, 1] - v[0, 1], v[0, 0] - v[2, 0]],
        [v[0, 1] - v[1, 1], v[1, 0] - v[0, 0]],
    ]) / det
    grad_w, grad_v, grad_u2 = w @ grads, test @ grads, u2 @ grads

    rule = triangle_rule(quad_order)
    bary = rule.barycentric
    xq = bary @ v
    k1 = model(xq, bary @ u1)
    k2 = model(xq, bary @ u2)
    coercive_lhs = q.area * float(rule.weights @ k1) * float(grad_w @ grad_v)
    lipschitz_lhs = q.area * float(rule.weights @ (k2 - k1)) * float(grad_u2 @ grad_v)

    e = q.edges
    scale = (w[i] - w[k]) * e[i] * e[k] / (4.0 * q.area)
    coercive_rhs = scale * model.k_alpha * q.gamma * q.c
    spread = float(u2.max() - u2.min())
    lipschitz_rhs = scale * (7.0 * model.lipschitz / 6.0) * (1.0 + 1.0 / q.gamma) * spread
    return LemmaCheck(lemma, (i, j, k), coercive_lhs, coercive_rhs, lipschitz_lhs, lipschitz_rhs, eps)
