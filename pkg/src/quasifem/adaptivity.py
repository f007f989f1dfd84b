"""Solve, certify, mark and refine until the uniqueness certificate passes."""
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .certificate import certify
from .errors import LinearSolveFailure, NonlinearSolveFailure
from .geometry import check_regularity, refine
from .solver import SolverOptions, picard_solve

log = logging.getLogger(__name__)

ALL_VIOLATING = "all-violating"
WORST_FRACTION = "worst-fraction"


class Status(str, enum.Enum):
    CERTIFIED = "Certified"
    BUDGET_EXCEEDED = "BudgetExceeded"
    ROUNDS_EXHAUSTED = "RoundsExhausted"
    SOLVE_FAILED = "SolveFailed"
    REGULARITY_LOST = "RegularityLost"


@dataclass(frozen=True)
class AdaptiveOptions:
    rounds: int = 20
    strategy: str = ALL_VIOLATING
    theta: float = 1.0
    budget: int = 100_000
    solver: SolverOptions = field(default_factory=SolverOptions)
    t_min: float = None  # 2D; defaults to the smallest angle of the initial mesh

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.strategy not in (ALL_VIOLATING, WORST_FRACTION):
            raise ValueError(f"unknown marking strategy {self.strategy!r}")
        if not (0.0 < self.theta <= 1.0):
            raise ValueError("theta must lie in (0, 1]")


@dataclass
class RoundRecord:
    round: int
    elements: int
    violations: int
    max_variation: float
    min_margin: float
    marked: int
    solve: object  # SolveReport

    def as_dict(self):
        return {
            "round": self.round,
            "elements": self.elements,
            "violations": self.violations,
            "max_variation": self.max_variation,
            "min_margin": self.min_margin,
            "marked": self.marked,
            "picard_iterations": self.solve.iterations if self.solve else None,
            "converged": self.solve.converged if self.solve else False,
        }


@dataclass
class CertifiedSolution:
    status: Status
    field: object  # FEField, None if the very first solve failed
    certificate: object
    history: list
    roots: np.ndarray  # initial-mesh ancestor of every final element
    refined_roots: set  # initial elements that were ever refined
    initial_elements: int
    offending: list = field(default_factory=list)  # RegularityLost: (element, reason)
    message: str = ""

    @property
    def certified(self):
        return self.status == Status.CERTIFIED

    @property
    def mesh(self):
        return self.field.mesh if self.field is not None else None

    @property
    def refined_fraction(self):
        return len(self.refined_roots) / self.initial_elements

    def summary(self):
        return {
            "summary": True,
            "status": self.status.value,
            "rounds": len(self.history),
            "initial_elements": self.initial_elements,
            "final_elements": self.history[-1].elements if self.history else self.initial_elements,
            "refined_initial_elements": len(self.refined_roots),
            "refined_fraction": self.refined_fraction,
            "message": self.message,
        }


def mark(cert, strategy=ALL_VIOLATING, theta=1.0):
    """Elements to refine: every failing one, or the worst ``ceil(theta * #failing)`` by margin."""
    failing = cert.failing
    if strategy == ALL_VIOLATING or failing.size == 0:
        return failing
    if strategy != WORST_FRACTION:
        raise ValueError(f"unknown marking strategy {strategy!r}")
    n = math.ceil(theta * failing.size)
    order = np.lexsort((failing, cert.margin[failing]))
    return np.sort(failing[order[:n]])


def adaptive_certify(problem, opts=None):
    opts = opts or AdaptiveOptions()
    model = problem.model
    mesh = problem.mesh
    n0 = mesh.n_elements
    if opts.budget < n0:
        raise ValueError("budget must be at least the initial element count")
    t_min = opts.t_min
    if mesh.dim == 2 and t_min is None:
        t_min = float(mesh.angles.min()) * (1.0 - 1e-9)  # red children are similar up to roundoff

    roots = np.arange(n0)
    refined_roots = set()
    history = []
    u = cert = None
    warm = None

    def done(status, message="", offending=()):
        log.info("adaptive loop finished: %s %s", status.value, message)
        return CertifiedSolution(status, u, cert, history, roots, refined_roots, n0, list(offending), message)

    for rnd in range(1, opts.rounds + 1):
        try:
            u, report = picard_solve(problem, opts.solver, warm)
        except (NonlinearSolveFailure, LinearSolveFailure) as exc:
            return done(Status.SOLVE_FAILED, str(exc))
        cert = certify(u, model.k_alpha, model.lipschitz)
        marked = mark(cert, opts.strategy, opts.theta)
        s = cert.summary()
        history.append(RoundRecord(rnd, mesh.n_elements, s["failing"], s["max_variation"], s["min_margin"],
                                   int(marked.size), report))
        if cert.passed:
            return done(Status.CERTIFIED)
        if rnd == opts.rounds:
            return done(Status.ROUNDS_EXHAUSTED)

        ref = refine(mesh, marked)
        if ref.mesh.n_elements > opts.budget:
            return done(Status.BUDGET_EXCEEDED, f"refinement would need {ref.mesh.n_elements} elements")
        refined_roots.update(roots[np.unique(ref.parents[np.diff(ref.parents, prepend=-1) == 0])].tolist())
        roots = roots[ref.parents]
        if mesh.dim == 2:
            reg = check_regularity(ref.mesh, t_min)
            if not reg.ok:  # offending ids refer to the rejected refined mesh
                return done(Status.REGULARITY_LOST, f"{len(reg.violations)} elements violate regularity",
                            reg.violations)
        warm = ref.prolong(u.values)
        mesh = ref.mesh
        problem = problem.with_mesh(mesh)
    return done(Status.ROUNDS_EXHAUSTED)  # pragma: no cover
