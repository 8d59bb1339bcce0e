"""Unit tests for the budget projections"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from solver.projection import project_box, project_capped_simplex, project_log_budget


def brute_projection(v, lower, total, samples=20000, seed=0):
    """Best of many random feasible points, for a loose cross-check"""
    rng = np.random.default_rng(seed)
    budget = total - lower.sum()
    pts = lower + rng.dirichlet(np.ones(v.size), size=samples) * budget * rng.uniform(0, 1, size=(samples, 1))
    d = np.linalg.norm(pts - v, axis=1)
    return d.min()


@pytest.mark.unit
class TestCappedSimplex:
    """Test projection onto {P >= lower, sum P <= total}"""

    def test_inside_is_unchanged(self):
        """Test a feasible point projects to itself"""
        v = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(project_capped_simplex(v, np.zeros(3), 10.0), v)

    def test_lower_bound_clip(self):
        """Test coordinates below the bound are raised"""
        out = project_capped_simplex(np.array([-1.0, 2.0]), np.array([0.5, 0.5]), 10.0)
        np.testing.assert_allclose(out, [0.5, 2.0])

    def test_binding_budget(self):
        """Test an excess is removed evenly from active coordinates"""
        out = project_capped_simplex(np.array([3.0, 3.0]), np.zeros(2), 4.0)
        np.testing.assert_allclose(out, [2.0, 2.0])

    def test_one_user_grows(self):
        """Test pushing one user up takes power from the others"""
        out = project_capped_simplex(np.array([2.0, 1.0, 1.0, 1.0]), np.full(4, 0.1), 4.0)
        assert out.sum() == pytest.approx(4.0)
        assert out[0] > 1.0
        np.testing.assert_allclose(out[1:], out[1])

    def test_no_spare_budget(self):
        """Test bounds summing past the budget return the bounds"""
        lower = np.array([2.0, 3.0])
        np.testing.assert_array_equal(project_capped_simplex(np.array([9.0, 9.0]), lower, 4.0), lower)

    @settings(max_examples=60, deadline=None)
    @given(v=arrays(np.float64, 3, elements=st.floats(-5.0, 10.0)))
    def test_feasible_and_not_beaten(self, v):
        """Test the output is feasible and no sampled feasible point is closer"""
        lower = np.array([0.1, 0.2, 0.3])
        out = project_capped_simplex(v, lower, 6.0)
        assert np.all(out >= lower - 1e-12)
        assert out.sum() <= 6.0 + 1e-9
        assert np.linalg.norm(out - v) <= brute_projection(v, lower, 6.0, samples=2000) + 1e-9


@pytest.mark.unit
class TestLogBudget:
    """Test projection of log powers onto {y >= l, sum exp(y) <= T}"""

    def test_inside_is_unchanged(self):
        """Test feasible log powers are returned"""
        z = np.log([1.0, 2.0])
        np.testing.assert_array_equal(project_log_budget(z, np.log([0.1, 0.1]), 10.0), z)

    def test_single_user_pinned(self):
        """Test one user is pinned at the budget"""
        out = project_log_budget(np.array([np.log(50.0)]), np.array([np.log(0.1)]), 31.62)
        assert np.exp(out[0]) == pytest.approx(31.62)

    def test_budget_binds(self):
        """Test an excess lands exactly on the budget"""
        z = np.log([10.0, 10.0, 10.0, 10.0]) + np.array([0.1, 0.0, 0.0, 0.0])
        out = project_log_budget(z, np.log(np.full(4, 0.01)), 31.62)
        assert np.exp(out).sum() == pytest.approx(31.62, rel=1e-12)
        assert out[0] > out[1]
        np.testing.assert_allclose(out[1:], out[1], rtol=1e-12)

    def test_lower_bounds_hold(self):
        """Test coordinates never fall below their bounds"""
        z = np.array([np.log(30.0), np.log(1e-3)])
        lower = np.log([0.5, 0.5])
        out = project_log_budget(z, lower, 31.62)
        assert np.all(out >= lower)
        assert np.exp(out).sum() <= 31.62 * (1 + 1e-12)

    def test_optimality_condition(self):
        """Test y - z = -lambda e^y on the free coordinates with one lambda"""
        z = np.log([20.0, 15.0, 5.0])
        out = project_log_budget(z, np.log(np.full(3, 0.01)), 31.62)
        lam = (z - out) / np.exp(out)
        np.testing.assert_allclose(lam, lam[0], rtol=1e-8)

    def test_budget_within_rounding(self):
        """Test budgets a few ulps either side of sum exp(z) return promptly near z"""
        z = np.array([2.2556, 1.9688, 2.4907, 1.0472])
        lower = np.log(np.full(4, 0.01))
        exact = float(np.exp(z).sum())
        totals = [exact]
        for _ in range(3):
            totals.append(float(np.nextafter(totals[-1], 0.0)))
        totals.append(float(np.nextafter(exact, np.inf)))
        for total in totals:
            out = project_log_budget(z, lower, total)
            assert np.all(out >= lower)
            assert np.exp(out).sum() <= total * (1 + 1e-12)
            np.testing.assert_allclose(out, z, atol=1e-9)

    def test_closer_than_scaling(self):
        """Test the projection is no farther than the rescaled point"""
        z = np.log([20.0, 15.0, 5.0])
        out = project_log_budget(z, np.log(np.full(3, 0.01)), 31.62)
        scaled = z + np.log(31.62 / 40.0)
        assert np.linalg.norm(out - z) <= np.linalg.norm(scaled - z) + 1e-12


@pytest.mark.unit
class TestBox:
    """Test box projection"""

    def test_clip(self):
        """Test clipping both ways"""
        np.testing.assert_array_equal(project_box(np.array([-1.0, 0.5, 3.0]), 0.0, 1.0), [0.0, 0.5, 1.0])
