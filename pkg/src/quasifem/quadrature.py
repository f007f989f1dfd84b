"""Quadrature rules on the reference interval [0, 1] and reference triangle.

Weights are normalized to sum to one, so integrating over an element means
multiplying the weighted sum by the element measure.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_ORDER = 7


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, dim) reference coordinates
    weights: np.ndarray  # (nq,) summing to 1
    order: int

    @property
    def barycentric(self):
        """(nq, dim+1) barycentric coordinates of the points."""
        return np.column_stack([1.0 - self.points.sum(axis=1), self.points])


def _check_order(order):
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"quadrature order must be in [1, {MAX_ORDER}], got {order}")


@lru_cache(maxsize=None)
def interval_rule(order=2):
    """Gauss-Legendre on [0, 1], exact for polynomials of degree <= order."""
    _check_order(order)
    n = (order + 2) // 2
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(((x + 1.0) / 2.0)[:, None], w / 2.0, order)


@lru_cache(maxsize=None)
def triangle_rule(order=2):
    """Rule on the reference triangle (0,0), (1,0), (0,1).

    Order 1 is the centroid rule, order 2 the three-point mid-edge rule.
    Higher orders use a collapsed (Duffy) tensor Gauss rule.
    """
    _check_order(order)
    if order == 1:
        return QuadratureRule(np.array([[1.0 / 3.0, 1.0 / 3.0]]), np.array([1.0]), 1)
    if order == 2:
        pts = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
        return QuadratureRule(pts, np.full(3, 1.0 / 3.0), 2)
    # the Duffy Jacobian adds one degree in the collapsed direction
    n = (order + 3) // 2
    g, w = np.polynomial.legendre.leggauss(n)
    g = (g + 1.0) / 2.0
    w = w / 2.0
    xi, eta = np.meshgrid(g, g, indexing="ij")
    wxi, weta = np.meshgrid(w, w, indexing="ij")
    x = xi
    y = eta * (1.0 - xi)
    weights = (wxi * weta * (1.0 - xi)).ravel() * 2.0
    return QuadratureRule(np.column_stack([x.ravel(), y.ravel()]), weights, order)
