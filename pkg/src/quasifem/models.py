"""Coefficient models, benchmark problems and the counterexample threshold arithmetic.

A coefficient ``kappa(x, s)`` is called with ``x`` of shape ``(n, dim)`` and
``s`` of shape ``(n,)``.  Sources, Neumann data and exact solutions take
``x`` of shape ``(n, dim)``.
"""
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry
from .errors import InvalidConstants, UnknownModel, UnknownProblem


@dataclass(frozen=True)
class CoefficientModel:
    """``kappa(x, s)`` plus caller-certified bounds ``k_alpha <= kappa <= k_beta`` and Lipschitz constant in ``s``."""

    name: str
    func: Callable
    k_alpha: float
    k_beta: float
    lipschitz: float
    ds: Optional[Callable] = None  # d kappa / d s, used to derive manufactured sources
    x_independent: bool = True

    def __post_init__(self):
        if not (0.0 < self.k_alpha < self.k_beta):
            raise InvalidConstants(f"need 0 < k_alpha < k_beta, got {self.k_alpha}, {self.k_beta}")
        if not self.lipschitz > 0.0:
            raise InvalidConstants(f"Lipschitz constant must be positive, got {self.lipschitz}")

    def __call__(self, x, s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(np.asarray(self.func(np.asarray(x, dtype=float), s), dtype=float), s.shape)


def _unit(L0=1.0):
    return CoefficientModel(
        "unit", lambda x, s: np.ones_like(s), 0.5, 1.5, L0, ds=lambda x, s: np.zeros_like(s)
    )


def _atan():
    return CoefficientModel(
        "atan",
        lambda x, s: 2.0 + (2.0 / math.pi) * np.arctan(s),
        1.0,
        3.0,
        2.0 / math.pi,
        ds=lambda x, s: (2.0 / math.pi) / (1.0 + s * s),
    )


def _rational():
    return CoefficientModel(
        "rational",
        lambda x, s: 2.0 + s / (1.0 + s * s),
        1.5,
        2.5,
        1.0,
        ds=lambda x, s: (1.0 - s * s) / (1.0 + s * s) ** 2,
    )


# max |d/ds 1/(1+(a s)^2)| = a * 3*sqrt(3)/8, attained at s = 1/(a*sqrt(3))
_BUMP_SLOPE = 3.0 * math.sqrt(3.0) / 8.0
_STEEP_HEIGHT = 0.9


def _steep(L):
    if not L > 0:
        raise UnknownModel(f"steep(L) needs L > 0, got {L}")
    a = L / (_STEEP_HEIGHT * _BUMP_SLOPE)

    def func(x, s):
        return 1.0 + _STEEP_HEIGHT / (1.0 + (a * s) ** 2)

    def ds(x, s):
        return -_STEEP_HEIGHT * 2.0 * a * a * s / (1.0 + (a * s) ** 2) ** 2

    return CoefficientModel(f"steep({L:g})", func, 1.0, 2.0, float(L), ds=ds)


def builtin_model(model_id):
    """Look up ``unit``, ``unit(L0)``, ``atan``, ``rational`` or ``steep(L)``."""
    key = str(model_id).strip()
    m = re.fullmatch(r"(\w+)\s*(?:\(\s*([^)]*)\s*\))?", key)
    if m is None:
        raise UnknownModel(f"unknown coefficient model {model_id!r}")
    name, arg = m.group(1), m.group(2)
    try:
        if name == "unit":
            return _unit(float(arg)) if arg else _unit()
        if name == "atan" and not arg:
            return _atan()
        if name == "rational" and not arg:
            return _rational()
        if name == "steep" and arg:
            return _steep(float(arg))
    except ValueError:
        pass
    raise UnknownModel(f"unknown coefficient model {model_id!r}")


def sinusoidal_model(base, x_amp, s_amp, omega, phase=0.0, x_freq=1.0):
    """``base + x_amp*cos(x_freq*sum(x)) + s_amp*sin(omega*s + phase)`` with exact certified constants."""
    k_alpha = base - abs(x_amp) - abs(s_amp)
    k_beta = base + abs(x_amp) + abs(s_amp)

    def func(x, s):
        return base + x_amp * np.cos(x_freq * x.sum(axis=-1)) + s_amp * np.sin(omega * s + phase)

    def ds(x, s):
        return s_amp * omega * np.cos(omega * s + phase)

    return CoefficientModel(
        f"sinusoidal({base:g},{x_amp:g},{s_amp:g},{omega:g})",
        func,
        k_alpha,
        k_beta,
        abs(s_amp * omega),
        ds=ds,
        x_independent=(x_amp == 0.0),
    )


def random_model(rng):
    """Random nonmonotone sinusoidal model with certified (k_alpha, k_beta, L0)."""
    return sinusoidal_model(
        base=rng.uniform(1.5, 3.0),
        x_amp=rng.uniform(0.0, 0.4),
        s_amp=rng.uniform(0.1, 0.6),
        omega=rng.uniform(0.5, 3.0),
        phase=rng.uniform(0.0, 2.0 * math.pi),
        x_freq=rng.uniform(0.5, 4.0),
    )


def estimate_lipschitz(kappa, x_samples, s_range, n):
    """Sampled ``(L0, min kappa, max kappa)``.

    The Lipschitz value is the largest difference quotient between adjacent
    points of an ``n``-point grid on ``s_range``; it is a lower bound for the
    true constant, and the range is likewise not certified.
    """
    if n < 2:
        raise ValueError("need n >= 2 samples")
    s = np.linspace(s_range[0], s_range[1], n)
    xs = np.atleast_2d(np.asarray(x_samples, dtype=float))
    if xs.shape[0] == 1 and xs.shape[1] > 3:
        xs = xs.T
    L, lo, hi = 0.0, math.inf, -math.inf
    for x in xs:
        k = np.asarray(kappa(np.broadcast_to(x, (n, len(x))), s), dtype=float)
        L = max(L, float(np.max(np.abs(np.diff(k)) / np.diff(s))))
        lo = min(lo, float(k.min()))
        hi = max(hi, float(k.max()))
    return L, lo, hi


# ---------------------------------------------------------------------------
# counterexample threshold arithmetic
# ---------------------------------------------------------------------------


@dataclass
class CounterexampleAnalysis:
    dim: int
    k: float
    u1: float
    k_alpha: float
    lipschitz_bound: float  # lower bound on L0 forced by the construction
    threshold: float  # variation bound of the uniqueness condition at that L0
    violated: bool  # threshold <= u1: the condition cannot hold on the element
    secant_slope: float  # slope magnitude the profile must exceed somewhere
    linear_lipschitz_bound: float = None  # 1D: (1-k)/u1 from the straight secant
    linear_threshold: float = None
    s: float = None  # 1D: slope parameter of psi(t) = max{k, 1 - s t}
    ratio_squared: float = None  # 1D: 2k(1-2k)/(1-k)^2
    ratio_printed: float = None  # 1D: 2k(1-2k)/(1-k^2), the printed denominator

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items()}


def _check_k(k, u1):
    if not (0.0 < k < 0.5):
        raise InvalidConstants(f"k must lie in (0, 1/2), got {k}")
    if not u1 > 0.0:
        raise InvalidConstants(f"u1 must be positive, got {u1}")


def counterexample_1d(k, u1):
    """Threshold arithmetic for the 1D two-solution construction with ``k <= phi <= 1``.

    The profile must average 1/2 while starting at 1 and staying above k, so
    its secant slope from 0 exceeds ``(1-k)^2/(1-2k)`` somewhere, forcing
    ``L0 > (1-k)^2/((1-2k) u1)``.  The cruder straight secant down to k gives
    ``L0 > (1-k)/u1`` (``(2/3)/u1`` at k = 1/3).
    """
    _check_k(k, u1)
    slope = (1.0 - k) ** 2 / (1.0 - 2.0 * k)
    L0 = slope / u1
    threshold = 2.0 * k / L0
    L_lin = (1.0 - k) / u1
    return CounterexampleAnalysis(
        dim=1,
        k=k,
        u1=u1,
        k_alpha=k,
        lipschitz_bound=L0,
        threshold=threshold,
        violated=threshold <= u1,
        secant_slope=slope,
        linear_lipschitz_bound=L_lin,
        linear_threshold=2.0 * k / L_lin,
        s=-slope,
        ratio_squared=2.0 * k * (1.0 - 2.0 * k) / (1.0 - k) ** 2,
        ratio_printed=2.0 * k * (1.0 - 2.0 * k) / (1.0 - k * k),
    )


def counterexample_2d(k, u1):
    """Threshold arithmetic for the 2D construction on a uniform equilateral mesh.

    The secant from 1 down to k over the reference height sqrt(3)/2 has slope
    ``2(1-k)/sqrt(3)``; with the ``sqrt(3)/(2 u1)`` scaling this forces
    ``L0 > (1-k)/u1``.  With gamma_T = 1 and c_T = 1/2 the per-element bound
    becomes ``3k u1 / (14 (1-k))``.
    """
    _check_k(k, u1)
    L0 = (1.0 - k) / u1
    gamma, c = 1.0, 0.5
    threshold = 6.0 * k * c / (7.0 * L0 * (1.0 / gamma) * (1.0 + 1.0 / gamma))
    return CounterexampleAnalysis(
        dim=2,
        k=k,
        u1=u1,
        k_alpha=k,
        lipschitz_bound=L0,
        threshold=threshold,
        violated=threshold <= u1,
        secant_slope=2.0 * (1.0 - k) / math.sqrt(3.0),
    )


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------


@dataclass
class ProblemSpec:
    mesh: object
    model: CoefficientModel
    source: Callable
    neumann: object = 0.0  # callable on Gamma_N (2D) or scalar psi_a (1D); outward flux
    dirichlet: Optional[Callable] = None  # None means homogeneous
    exact: Optional[Callable] = None
    exact_grad: Optional[Callable] = None
    name: str = "custom"
    extra: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.mesh.dim

    def with_mesh(self, mesh):
        return ProblemSpec(mesh, self.model, self.source, self.neumann, self.dirichlet,
                           self.exact, self.exact_grad, self.name, dict(self.extra))


def constant_source(c):
    c = float(c)
    return lambda x: np.full(len(x), c)


def _manufactured_source_1d(model, u, du, d2u):
    def f(x):
        t = x[:, 0]
        s = u(t)
        return -(model.ds(x, s) * du(t) ** 2 + model(x, s) * d2u(t))

    return f


def _sin_problem(mesh):
    model = builtin_model("rational")
    pi = math.pi
    u = lambda t: np.sin(pi * t)
    du = lambda t: pi * np.cos(pi * t)
    d2u = lambda t: -pi * pi * np.sin(pi * t)
    return ProblemSpec(
        mesh or geometry.uniform_interval(8),
        model,
        _manufactured_source_1d(model, u, du, d2u),
        exact=lambda x: u(x[:, 0]),
        exact_grad=lambda x: du(x[:, 0])[:, None],
        name="sin",
    )


STEEP_AMPLITUDE = 2.0
STEEP_WIDTH = 0.02
STEEP_CENTER = 0.525


def _steep_problem(mesh):
    """Interior tanh layer of width 0.02 at x = 0.525; mild slope elsewhere."""
    model = builtin_model("rational")
    A, d, x0 = STEEP_AMPLITUDE, STEEP_WIDTH, STEEP_CENTER
    t0, t1 = math.tanh(-x0 / d), math.tanh((1.0 - x0) / d)

    def u(t):
        return A * (np.tanh((t - x0) / d) - (1.0 - t) * t0 - t * t1)

    def du(t):
        return A * ((1.0 - np.tanh((t - x0) / d) ** 2) / d + t0 - t1)

    def d2u(t):
        th = np.tanh((t - x0) / d)
        return A * (-2.0 * th * (1.0 - th * th) / (d * d))

    return ProblemSpec(
        mesh or geometry.uniform_interval(20),
        model,
        _manufactured_source_1d(model, u, du, d2u),
        exact=lambda x: u(x[:, 0]),
        exact_grad=lambda x: du(x[:, 0])[:, None],
        name="steep",
    )


def _affine_problem(mesh):
    """u = 1 - x with unit coefficient, flux 1 out of x = 0, u(1) = 0."""
    model = builtin_model("unit")
    return ProblemSpec(
        mesh or geometry.uniform_interval(8, bc=(geometry.NEUMANN, geometry.DIRICHLET)),
        model,
        constant_source(0.0),
        neumann=1.0,
        exact=lambda x: 1.0 - x[:, 0],
        exact_grad=lambda x: -np.ones((len(x), 1)),
        name="affine",
    )


def _bubble_problem(mesh):
    model = builtin_model("rational")
    pi = math.pi

    def u(x):
        return np.sin(pi * x[:, 0]) * np.sin(pi * x[:, 1])

    def grad(x):
        return pi * np.column_stack([
            np.cos(pi * x[:, 0]) * np.sin(pi * x[:, 1]),
            np.sin(pi * x[:, 0]) * np.cos(pi * x[:, 1]),
        ])

    def f(x):
        s = u(x)
        g = grad(x)
        return -(model.ds(x, s) * (g * g).sum(axis=1) + model(x, s) * (-2.0 * pi * pi * s))

    return ProblemSpec(mesh or geometry.unit_square_mesh(0), model, f, exact=u, exact_grad=grad, name="bubble")


def _plane_problem(mesh):
    """u = 1 + x + 2y, unit coefficient, Dirichlet data on the whole boundary."""
    model = builtin_model("unit")
    u = lambda x: 1.0 + x[:, 0] + 2.0 * x[:, 1]
    return ProblemSpec(
        mesh or geometry.unit_square_mesh(0),
        model,
        constant_source(0.0),
        dirichlet=u,
        exact=u,
        exact_grad=lambda x: np.tile([1.0, 2.0], (len(x), 1)),
        name="plane",
    )


MANUFACTURED = {
    "sin": _sin_problem,
    "steep": _steep_problem,
    "affine": _affine_problem,
    "bubble": _bubble_problem,
    "plane": _plane_problem,
}


def manufactured_problem(problem_id, mesh=None):
    try:
        build = MANUFACTURED[problem_id]
    except KeyError:
        raise UnknownProblem(f"unknown problem {problem_id!r}; known: {sorted(MANUFACTURED)}") from None
    return build(mesh)
