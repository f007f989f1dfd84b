import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import fsolve

from quasifem.errors import LinearSolveFailure, NonlinearSolveFailure
from quasifem.fem import nonlinear_residual
from quasifem.geometry import NEUMANN, DIRICHLET, uniform_interval, unit_square_mesh
from quasifem.models import ProblemSpec, builtin_model, constant_source, manufactured_problem
from quasifem.solver import SolverOptions, multi_start, picard_solve, solve_spd


class TestSolverOptions:
    @pytest.mark.parametrize("kw", [{"linear_tol": 0}, {"nonlinear_max_iter": 0}, {"damping": 0.0}, {"damping": 1.5}])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            SolverOptions(**kw)

    def test_with_(self):
        assert SolverOptions().with_(damping=0.5).damping == 0.5


class TestSolveSPD:
    def test_tridiagonal_direct(self):
        n = 50
        A = sp.diags([-np.ones(n - 1), 2.5 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
        b = np.arange(n, dtype=float)
        x, res = solve_spd(A, b)
        np.testing.assert_allclose(A @ x, b, atol=1e-10)
        assert res <= 1e-12

    def test_cg_on_2d_matrix(self):
        mesh = unit_square_mesh(1)
        from quasifem.fem import assemble

        s = assemble(mesh, builtin_model("atan"), np.zeros(mesh.n_vertices), constant_source(1.0))
        x, res = solve_spd(s.matrix, s.rhs)
        np.testing.assert_allclose(x, np.linalg.solve(s.matrix.toarray(), s.rhs), rtol=1e-9)

    def test_failure_raises(self):
        rng = np.random.default_rng(0)
        B = rng.standard_normal((40, 40))
        A = B @ B.T + 1e-3 * np.eye(40)
        with pytest.raises(LinearSolveFailure) as exc:
            solve_spd(A, rng.standard_normal(40), SolverOptions(linear_max_iter=2, direct_1d=False))
        assert exc.value.iterations == 2

    def test_empty_and_zero(self):
        assert solve_spd(sp.csr_matrix((0, 0)), np.zeros(0))[0].size == 0
        x, res = solve_spd(sp.eye(3), np.zeros(3))
        assert not x.any() and res == 0.0


class TestPicard:
    def test_linear_problem_takes_two_iterations(self):
        p = manufactured_problem("affine")
        u, rep = picard_solve(p)
        assert rep.converged and rep.iterations == 2
        np.testing.assert_allclose(u.values, 1 - p.mesh.x, atol=1e-13)

    def test_start_at_solution_takes_one_iteration(self):
        p = manufactured_problem("sin")
        u, _ = picard_solve(p)
        u2, rep = picard_solve(p, u0=u)
        assert rep.iterations == 1
        np.testing.assert_allclose(u2.values, u.values, atol=1e-10)

    def test_matches_independent_root_finder(self):
        # fsolve on the discrete residual is an independent route to the same discrete solution
        p = manufactured_problem("sin")
        u, _ = picard_solve(p)
        free = ~p.mesh.dirichlet_mask

        def F(v):
            full = np.zeros(p.mesh.n_vertices)
            full[free] = v
            return nonlinear_residual(p.mesh, p.model, full, p.source)[0]

        ref = fsolve(F, np.zeros(free.sum()), xtol=1e-13)
        np.testing.assert_allclose(u.values[free], ref, atol=1e-9)

    def test_nonhomogeneous_dirichlet_plane(self):
        p = manufactured_problem("plane")
        u, rep = picard_solve(p)
        np.testing.assert_allclose(u.values, p.exact(p.mesh.points), atol=1e-11)

    def test_failure_carries_field_and_report(self):
        p = manufactured_problem("sin")
        with pytest.raises(NonlinearSolveFailure) as exc:
            picard_solve(p, SolverOptions(nonlinear_max_iter=1))
        assert exc.value.report.iterations == 1 and exc.value.field is not None

    def test_dirichlet_values_imposed_on_initial_guess(self):
        p = manufactured_problem("plane")
        u0 = np.full(p.mesh.n_vertices, 7.0)
        u, _ = picard_solve(p, u0=u0)
        m = p.mesh.dirichlet_mask
        np.testing.assert_allclose(u.values[m], p.exact(p.mesh.points[m]))

    def test_report_records(self):
        _, rep = picard_solve(manufactured_problem("sin"))
        rows = rep.as_records()
        assert rows[-1]["summary"] and rows[-1]["converged"]
        assert len(rows) == rep.iterations + 1
        assert all(0 < r["damping"] <= 1 for r in rows[:-1])

    def test_changes_decrease_to_tolerance(self):
        _, rep = picard_solve(manufactured_problem("bubble"))
        assert rep.changes[-1] <= 1e-10 < rep.changes[0]

    def test_damped_run_reaches_same_solution(self):
        p = manufactured_problem("sin")
        u, _ = picard_solve(p)
        v, rep = picard_solve(p, SolverOptions(damping=0.5, nonlinear_max_iter=400))
        np.testing.assert_allclose(u.values, v.values, atol=1e-9)
        assert rep.dampings[0] <= 0.5

    def test_mixed_bc(self):
        mesh = uniform_interval(10, bc=(NEUMANN, DIRICHLET))
        p = ProblemSpec(mesh, builtin_model("atan"), constant_source(1.0), neumann=-0.5)
        u, rep = picard_solve(p)
        # the discrete residual including the Neumann load vanishes at the free nodes
        r, _ = nonlinear_residual(mesh, p.model, u, p.source, p.neumann)
        assert rep.converged and np.abs(r).max() < 1e-9


class TestMultiStart:
    def test_unique_solution_single_cluster(self):
        res = multi_start(manufactured_problem("sin"), n_starts=5, seed=1)
        assert len(res) == 1 and res.members == [[0, 1, 2, 3, 4]]
        assert res.max_intra_distance <= 1e-6

    def test_deterministic_under_seed(self):
        a = multi_start(manufactured_problem("sin"), n_starts=3, seed=7)
        b = multi_start(manufactured_problem("sin"), n_starts=3, seed=7)
        np.testing.assert_array_equal(a[0].values, b[0].values)

    def test_all_failures_raise(self):
        with pytest.raises(NonlinearSolveFailure):
            multi_start(manufactured_problem("sin"), SolverOptions(nonlinear_max_iter=1), n_starts=2)

    def test_rejects_zero_starts(self):
        with pytest.raises(ValueError):
            multi_start(manufactured_problem("sin"), n_starts=0)
