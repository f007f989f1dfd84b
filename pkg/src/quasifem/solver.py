"""SPD linear solves, Picard iteration and the multi-start nonuniqueness probe."""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import LinearSolveFailure, NonlinearSolveFailure
from .fem import FEField, assemble, dirichlet_values

log = logging.getLogger(__name__)

DISTINCT_TOL = 1e-6
MIN_DAMPING_FRACTION = 1.0 / 16.0


@dataclass(frozen=True)
class SolverOptions:
    linear_tol: float = 1e-10
    linear_max_iter: int = 10_000
    nonlinear_tol: float = 1e-10
    nonlinear_max_iter: int = 200
    damping: float = 1.0
    quad_order: int = 2
    direct_1d: bool = True

    def __post_init__(self):
        if not (self.linear_tol > 0 and self.nonlinear_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.linear_max_iter < 1 or self.nonlinear_max_iter < 1:
            raise ValueError("iteration limits must be >= 1")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class SolveReport:
    iterations: int = 0
    changes: list = field(default_factory=list)  # max nodal displacement of the fixed-point map
    residuals: list = field(default_factory=list)  # max-norm nonlinear residual after each step
    dampings: list = field(default_factory=list)
    linear_residual: float = 0.0
    converged: bool = False

    def as_records(self):
        """One dict per iteration, then a summary dict (for JSON lines)."""
        rows = [
            {"iteration": i + 1, "change": c, "residual": r, "damping": d}
            for i, (c, r, d) in enumerate(zip(self.changes, self.residuals, self.dampings))
        ]
        rows.append({
            "summary": True,
            "iterations": self.iterations,
            "converged": self.converged,
            "linear_residual": self.linear_residual,
        })
        return rows


def solve_spd(A, b, opts=None):
    """Solve ``A x = b`` for SPD ``A`` (scipy sparse or dense).

    Jacobi-preconditioned CG; tridiagonal matrices (1D meshes) use direct
    elimination when ``opts.direct_1d`` is set.  Returns ``(x, relative residual)``.
    """
    opts = opts or SolverOptions()
    A = sp.csr_matrix(A)
    A.sort_indices()
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if n == 0:
        return np.zeros(0), 0.0
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0.0
    if opts.direct_1d and _is_tridiagonal(A):
        x = kernels.tridiag_solve(A.diagonal(-1).copy(), A.diagonal().copy(), A.diagonal(1).copy(), b)
        res = np.linalg.norm(b - A @ x) / bnorm
        if res <= opts.linear_tol:
            return x, res
        log.debug("direct tridiagonal residual %.3e above tolerance, falling back to CG", res)
    x, it, res = kernels.pcg(A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data, b,
                             np.zeros(n), opts.linear_tol, opts.linear_max_iter)
    if not res <= opts.linear_tol:
        raise LinearSolveFailure("conjugate gradients did not reach the tolerance", res, it)
    return x, res


def _is_tridiagonal(A):
    if A.shape[0] < 2:
        return A.shape[0] == 1
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    return bool(np.all(np.abs(A.indices - rows) <= 1))


def _initial_vector(problem, u0):
    mesh = problem.mesh
    g = dirichlet_values(mesh, problem.dirichlet)
    if u0 is None:
        return g
    u = np.array(u0.values if isinstance(u0, FEField) else u0, dtype=float)
    u[mesh.dirichlet_mask] = g[mesh.dirichlet_mask]
    return u


def picard_solve(problem, opts=None, u0=None):
    """Frozen-coefficient fixed-point iteration for the discrete nonlinear problem.

    Each step solves ``K(u_m) u_hat = F`` and sets ``u_{m+1} = u_m + lam (u_hat - u_m)``;
    ``lam`` starts at ``opts.damping`` and is halved (down to 1/16 of it) while the
    nonlinear residual grows.  Converged once ``max|u_hat - u_m| <= nonlinear_tol``
    and the residual is below ``10 nonlinear_tol max|F|`` (or the step has
    stagnated at roundoff).

    Returns ``(FEField, SolveReport)``; raises :class:`NonlinearSolveFailure`.
    """
    opts = opts or SolverOptions()
    mesh = problem.mesh
    report = SolveReport()

    def system(u):
        s = assemble(mesh, problem.model, u, problem.source, problem.neumann, problem.dirichlet, opts.quad_order)
        r = s.full_matrix @ u - s.full_rhs
        return s, float(np.max(np.abs(r[s.free]), initial=0.0))

    u = _initial_vector(problem, u0)
    sys_, res = system(u)
    eps = np.finfo(float).eps
    for it in range(1, opts.nonlinear_max_iter + 1):
        x, lin_res = solve_spd(sys_.matrix, sys_.rhs, opts)
        report.linear_residual = float(lin_res)
        u_hat = sys_.expand(x)
        step = u_hat - u
        change = float(np.max(np.abs(step), initial=0.0))

        lam = opts.damping
        while True:
            u_new = u + lam * step if lam != 1.0 else u_hat
            new_sys, new_res = system(u_new)
            floor = 1e3 * eps * max(1.0, float(np.max(np.abs(new_sys.full_rhs), initial=0.0)))
            if new_res <= res or new_res <= floor or lam <= opts.damping * MIN_DAMPING_FRACTION:
                break
            lam *= 0.5

        report.iterations = it
        report.changes.append(change)
        report.residuals.append(new_res)
        report.dampings.append(lam)
        u, sys_, res = u_new, new_sys, new_res

        fscale = float(np.max(np.abs(sys_.rhs), initial=0.0))
        stagnated = change <= 100.0 * eps * max(1.0, float(np.max(np.abs(u))))
        if change <= opts.nonlinear_tol and (res <= 10.0 * opts.nonlinear_tol * fscale or stagnated):
            report.converged = True
            return FEField(mesh, u), report

    raise NonlinearSolveFailure(
        f"Picard iteration did not converge in {opts.nonlinear_max_iter} iterations "
        f"(last change {report.changes[-1]:.3e}, residual {report.residuals[-1]:.3e})",
        field=FEField(mesh, u),
        report=report,
    )


@dataclass
class MultiStartResult:
    clusters: list  # representative FEField per distinct solution
    members: list  # start indices per cluster
    failures: list  # start indices whose solve failed
    reports: list
    distances: list = field(default_factory=list)  # per converged start, to its representative

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def __getitem__(self, i):
        return self.clusters[i]

    @property
    def max_intra_distance(self):
        """Largest max-norm distance between any member and its representative."""
        return max(self.distances, default=0.0)


def multi_start(problem, opts=None, n_starts=10, seed=0, start_range=(-1.0, 1.0), tol=DISTINCT_TOL):
    """Solve from ``n_starts`` random initial fields and cluster the converged solutions.

    Initial values are uniform in ``start_range`` at free vertices.  Solutions
    closer than ``tol`` in max norm to a cluster representative join it.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    opts = opts or SolverOptions()
    rng = np.random.default_rng(seed)
    mesh = problem.mesh
    free = ~mesh.dirichlet_mask
    clusters, members, failures, reports, dists = [], [], [], [], []
    for k in range(n_starts):
        u0 = np.zeros(mesh.n_vertices)
        u0[free] = rng.uniform(start_range[0], start_range[1], size=int(free.sum()))
        try:
            u, rep = picard_solve(problem, opts, u0)
        except NonlinearSolveFailure as exc:
            log.info("multi-start %d failed: %s", k, exc)
            failures.append(k)
            reports.append(exc.report)
            continue
        reports.append(rep)
        for c, rep_field in enumerate(clusters):
            d = float(np.max(np.abs(u.values - rep_field.values)))
            if d <= tol:
                members[c].append(k)
                dists.append(d)
                break
        else:
            clusters.append(u)
            members.append([k])
            dists.append(0.0)
    if not clusters:
        raise NonlinearSolveFailure(f"all {n_starts} starts failed")
    return MultiStartResult(clusters, members, failures, reports, dists)
