import numpy as np
import pytest

from quasifem.adaptivity import (
    ALL_VIOLATING,
    WORST_FRACTION,
    AdaptiveOptions,
    Status,
    adaptive_certify,
    mark,
)
from quasifem.certificate import Certificate, certify
from quasifem.errors import CoefficientBoundsViolation
from quasifem.geometry import is_conforming, uniform_interval
from quasifem.models import STEEP_CENTER, ProblemSpec, constant_source, manufactured_problem
from quasifem.solver import SolverOptions


def fake_certificate(margins):
    margins = np.asarray(margins, dtype=float)
    return Certificate(dim=1, variation=1.0 - margins, threshold=np.ones(len(margins)), k_alpha=1.0, lipschitz=1.0)


class TestMark:
    def test_all_pass_gives_empty(self):
        assert mark(fake_certificate([0.5, 0.1])).size == 0
        assert mark(fake_certificate([0.5, 0.1]), WORST_FRACTION, 0.5).size == 0

    def test_all_violating(self):
        assert mark(fake_certificate([0.5, -0.1, 0.0, -2.0])).tolist() == [1, 2, 3]

    def test_worst_fraction_ceiling(self):
        # ceil(0.34 * 3) = 2: the two most negative margins
        assert mark(fake_certificate([-0.1, -0.3, 0.2, -0.2]), WORST_FRACTION, 0.34).tolist() == [1, 3]

    def test_ties_broken_by_id(self):
        assert mark(fake_certificate([-1.0, 0.5, -1.0, -1.0]), WORST_FRACTION, 0.5).tolist() == [0, 2]

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            mark(fake_certificate([-1.0]), "random", 0.5)


class TestOptions:
    @pytest.mark.parametrize("kw", [{"rounds": 0}, {"strategy": "x"}, {"theta": 0.0}, {"theta": 1.5}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            AdaptiveOptions(**kw)

    def test_budget_below_initial(self):
        with pytest.raises(ValueError):
            adaptive_certify(manufactured_problem("steep"), AdaptiveOptions(budget=5))


class TestAdaptiveLoop:
    def test_already_certified(self):
        r = adaptive_certify(manufactured_problem("sin"))
        assert r.status == Status.CERTIFIED and len(r.history) == 1
        assert r.refined_roots == set() and r.mesh.n_elements == 8

    def test_steep_refinement_is_local(self):
        p = manufactured_problem("steep")
        r = adaptive_certify(p, AdaptiveOptions(strategy=ALL_VIOLATING))
        assert r.status == Status.CERTIFIED
        # initial neighbourhood of the layer: the element holding it and its neighbours
        x = p.mesh.x
        hot = int(np.searchsorted(x, STEEP_CENTER) - 1)
        assert r.refined_roots <= {hot - 1, hot, hot + 1}
        assert r.refined_fraction < 0.5
        # roots of the final mesh cover every initial element in order
        assert np.all(np.diff(r.roots) >= 0) and set(r.roots) == set(range(p.mesh.n_elements))

    def test_certified_result_recertifies(self):
        p = manufactured_problem("steep")
        r = adaptive_certify(p)
        again = certify(r.field, p.model.k_alpha, p.model.lipschitz)
        assert again.passed
        np.testing.assert_array_equal(again.margin, r.certificate.margin)

    def test_history_monotone(self):
        r = adaptive_certify(manufactured_problem("steep"), AdaptiveOptions(strategy=WORST_FRACTION, theta=0.5))
        counts = [h.elements for h in r.history]
        assert counts == sorted(counts)
        assert all(h.solve.converged for h in r.history)
        assert is_conforming(r.mesh)

    def test_budget_exceeded(self):
        p = manufactured_problem("steep")
        r = adaptive_certify(p, AdaptiveOptions(budget=p.mesh.n_elements))
        assert r.status == Status.BUDGET_EXCEEDED and len(r.history) == 1
        assert r.summary()["status"] == "BudgetExceeded"

    def test_rounds_exhausted(self):
        r = adaptive_certify(manufactured_problem("steep"), AdaptiveOptions(rounds=1))
        assert r.status == Status.ROUNDS_EXHAUSTED

    def test_solver_failure_is_status(self):
        r = adaptive_certify(manufactured_problem("steep"),
                             AdaptiveOptions(solver=SolverOptions(nonlinear_max_iter=1)))
        assert r.status == Status.SOLVE_FAILED and r.field is None and "converge" in r.message

    def test_partial_2d_refinement_loses_regularity(self):
        # green closure of acute triangles produces right or obtuse angles
        r = adaptive_certify(manufactured_problem("bubble"), AdaptiveOptions(rounds=4))
        assert r.status == Status.REGULARITY_LOST
        assert r.offending and r.history[0].violations == 26

    def test_uniform_2d_refinement_keeps_regularity(self):
        p = manufactured_problem("bubble")
        r = adaptive_certify(p, AdaptiveOptions(rounds=2))
        # round one fails everywhere, so every element is red-refined
        assert r.status == Status.ROUNDS_EXHAUSTED
        assert [h.elements for h in r.history] == [26, 104]

    def test_model_errors_propagate(self):
        from quasifem.models import CoefficientModel

        liar = CoefficientModel("liar", lambda x, s: 1.0 + s, 0.5, 1.5, 1.0)
        p = ProblemSpec(uniform_interval(4), liar, constant_source(30.0))
        with pytest.raises(CoefficientBoundsViolation):
            adaptive_certify(p)
