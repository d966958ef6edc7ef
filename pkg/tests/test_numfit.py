"""
Unit tests for the Levenberg-Marquardt core
"""
import warnings

import numpy as np
import pytest

from sicmag.core.exceptions import EvaluationError, InvalidInputError
from sicmag.core.numfit import (
    check_jacobian,
    finite_difference_jacobian,
    levenberg_marquardt,
    normalize_sigma,
    weighted_residuals,
)
from sicmag.models.fit import FitOptions, ResidualProblem


def _rosenbrock(analytic: bool = True) -> ResidualProblem:
    def residual_fn(p):
        return np.array([10.0 * (p[1] - p[0] ** 2), 1.0 - p[0]])

    def jacobian(p):
        return np.array([[-20.0 * p[0], 10.0], [-1.0, 0.0]])

    return ResidualProblem(
        param_count=2,
        residual_fn=residual_fn,
        analytic_jacobian=jacobian if analytic else None,
    )


def _trig_problem(lower=None, upper=None) -> ResidualProblem:
    def residual_fn(p):
        return np.array([np.sin(p[0]) * p[1], p[0] ** 2, p[1] ** 3])

    def jacobian(p):
        return np.array([
            [np.cos(p[0]) * p[1], np.sin(p[0])],
            [2.0 * p[0], 0.0],
            [0.0, 3.0 * p[1] ** 2],
        ])

    return ResidualProblem(
        param_count=2,
        residual_fn=residual_fn,
        lower_bounds=lower,
        upper_bounds=upper,
        analytic_jacobian=jacobian,
    )


class TestLevenbergMarquardt:
    """Test suite for the bounded LM solver"""

    def test_rosenbrock_converges_to_minimum(self):
        """Test the Rosenbrock valley is solved from the classic start"""
        result = levenberg_marquardt(_rosenbrock(), np.array([-1.2, 1.0]))

        assert result.converged
        assert np.allclose(result.params, [1.0, 1.0], atol=1e-6)
        assert result.residual_norm < 1e-6

    def test_rosenbrock_with_finite_differences(self):
        """Test the solver works without an analytic Jacobian"""
        result = levenberg_marquardt(_rosenbrock(analytic=False), np.array([-1.2, 1.0]))

        assert result.converged
        assert np.allclose(result.params, [1.0, 1.0], atol=1e-6)

    def test_covariance_unavailable_without_degrees_of_freedom(self):
        """Test that two residuals for two parameters give no scaled covariance"""
        result = levenberg_marquardt(_rosenbrock(), np.array([-1.2, 1.0]))

        assert result.covariance is None
        assert np.all(np.isinf(result.std_errors))

    def test_linear_fit_with_noise(self, rng):
        """Test a noisy straight line gives finite symmetric covariance"""
        x = np.linspace(0.0, 1.0, 50)
        y = 2.0 * x + 1.0 + rng.normal(0.0, 0.01, x.size)
        problem = ResidualProblem(param_count=2, residual_fn=lambda p: p[0] * x + p[1] - y)

        result = levenberg_marquardt(problem, np.zeros(2))

        assert result.converged
        assert abs(result.params[0] - 2.0) < 0.05
        assert abs(result.params[1] - 1.0) < 0.05
        assert np.all(np.isfinite(result.std_errors))
        assert np.allclose(result.covariance, result.covariance.T)
        assert np.allclose(np.diag(result.covariance), result.std_errors ** 2)

    def test_rank_deficient_jacobian_reports_infinite_errors(self):
        """Test that parameters entering only as a sum have no covariance"""
        x = np.linspace(1.0, 2.0, 10)
        y = 3.0 * x + 0.01 * np.sin(7.0 * x)
        problem = ResidualProblem(
            param_count=2,
            residual_fn=lambda p: (p[0] + p[1]) * x - y,
            analytic_jacobian=lambda p: np.column_stack([x, x]),
        )

        result = levenberg_marquardt(problem, np.array([1.0, 1.0]))

        assert result.covariance is None
        assert np.all(np.isinf(result.std_errors))
        assert result.correlation() is None
        assert result.covariance_entry(0, 1) == np.inf

    def test_upper_bound_is_respected(self):
        """Test the solution is projected onto an active bound"""
        problem = ResidualProblem(
            param_count=1,
            residual_fn=lambda p: np.array([p[0] - 5.0]),
            upper_bounds=np.array([3.0]),
        )

        result = levenberg_marquardt(problem, np.array([0.0]))

        assert result.converged
        assert result.params[0] == pytest.approx(3.0)

    def test_max_iterations_exceeded(self):
        """Test a truncated run reports non-convergence"""
        result = levenberg_marquardt(
            _rosenbrock(), np.array([-1.2, 1.0]), FitOptions(max_iterations=1)
        )

        assert not result.converged
        assert result.message == "maximum iterations exceeded"
        assert result.iterations == 1

    def test_cost_never_increases(self):
        """Test the final residual norm does not exceed the initial one"""
        problem = _rosenbrock()
        init = np.array([-1.2, 1.0])
        initial = np.linalg.norm(problem.residual_fn(init))

        result = levenberg_marquardt(problem, init, FitOptions(max_iterations=3))

        assert result.residual_norm <= initial

    def test_overflowing_trial_is_rejected_quietly(self):
        """Test a trial step into an overflow region neither warns nor is accepted"""
        problem = ResidualProblem(
            param_count=1,
            residual_fn=lambda p: np.array([p[0] - 3.0, np.exp(1000.0 * (p[0] - 2.0))]),
        )

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            result = levenberg_marquardt(problem, np.array([0.0]))

        assert np.isfinite(result.residual_norm)
        assert 1.9 < result.params[0] < 2.1

    def test_wrong_init_length(self):
        """Test init of the wrong length is rejected"""
        with pytest.raises(InvalidInputError):
            levenberg_marquardt(_rosenbrock(), np.array([1.0, 2.0, 3.0]))

    def test_init_outside_bounds(self):
        """Test init outside the bounds is rejected"""
        problem = ResidualProblem(
            param_count=1,
            residual_fn=lambda p: p,
            lower_bounds=np.array([0.0]),
        )
        with pytest.raises(InvalidInputError):
            levenberg_marquardt(problem, np.array([-1.0]))

    def test_non_finite_initial_residual(self):
        """Test a NaN residual at init is rejected"""
        problem = ResidualProblem(param_count=1, residual_fn=lambda p: np.array([np.nan]))
        with pytest.raises(InvalidInputError):
            levenberg_marquardt(problem, np.array([0.0]))

    def test_inconsistent_bounds(self):
        """Test lower above upper is rejected at construction"""
        with pytest.raises(InvalidInputError):
            ResidualProblem(
                param_count=1,
                residual_fn=lambda p: p,
                lower_bounds=np.array([2.0]),
                upper_bounds=np.array([1.0]),
            )


class TestFiniteDifferenceJacobian:
    """Test suite for the finite-difference Jacobian"""

    def test_central_difference_matches_analytic(self):
        """Test interior points against the analytic Jacobian"""
        problem = _trig_problem()
        params = np.array([0.3, 2.0])

        numeric = finite_difference_jacobian(problem, params)

        assert np.allclose(numeric, problem.analytic_jacobian(params), atol=1e-7)

    def test_one_sided_difference_at_lower_bound(self):
        """Test a parameter sitting on its lower bound"""
        problem = _trig_problem(lower=np.array([0.3, -np.inf]))
        params = np.array([0.3, 2.0])

        numeric = finite_difference_jacobian(problem, params)

        assert np.allclose(numeric, problem.analytic_jacobian(params), atol=1e-7)

    def test_one_sided_difference_at_upper_bound(self):
        """Test a parameter sitting on its upper bound"""
        problem = _trig_problem(upper=np.array([np.inf, 2.0]))
        params = np.array([0.3, 2.0])

        numeric = finite_difference_jacobian(problem, params)

        assert np.allclose(numeric, problem.analytic_jacobian(params), atol=1e-6)

    @pytest.mark.parametrize("value", [1e-12, 1e-30, 1e-147, 0.0])
    def test_tiny_parameter_keeps_its_derivative(self, value):
        """Test a near-zero parameter is differenced with a usable step"""
        x = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
        problem = ResidualProblem(param_count=1, residual_fn=lambda p: x * p[0] + 1.0)

        numeric = finite_difference_jacobian(problem, np.array([value]))

        assert np.allclose(numeric[:, 0], x, atol=1e-8)

    def test_bounds_narrower_than_step(self):
        """Test a pinned parameter cannot be differenced"""
        problem = _trig_problem(lower=np.array([0.3, -np.inf]), upper=np.array([0.3, np.inf]))
        with pytest.raises(InvalidInputError):
            finite_difference_jacobian(problem, np.array([0.3, 2.0]))

    def test_non_finite_stencil_point(self):
        """Test the offending parameter index is reported"""
        problem = ResidualProblem(
            param_count=2,
            residual_fn=lambda p: np.array([np.sqrt(p[0]) if p[0] >= 0 else np.nan, p[1]]),
        )
        with pytest.raises(EvaluationError) as excinfo:
            finite_difference_jacobian(problem, np.array([0.0, 1.0]))

        assert excinfo.value.parameter_index == 0

    def test_non_positive_step(self):
        """Test rel_step must be positive"""
        with pytest.raises(InvalidInputError):
            finite_difference_jacobian(_trig_problem(), np.array([0.3, 2.0]), rel_step=0.0)

    def test_check_jacobian_accepts_correct_derivative(self):
        """Test a correct analytic Jacobian has negligible deviation"""
        assert check_jacobian(_trig_problem(), np.array([0.3, 2.0])) < 1e-6

    def test_check_jacobian_flags_wrong_derivative(self):
        """Test a doubled analytic Jacobian is detected"""
        good = _trig_problem()
        bad = ResidualProblem(
            param_count=2,
            residual_fn=good.residual_fn,
            analytic_jacobian=lambda p: 2.0 * good.analytic_jacobian(p),
        )

        assert check_jacobian(bad, np.array([0.3, 2.0])) > 0.1

    def test_check_jacobian_requires_analytic(self):
        """Test problems without an analytic Jacobian are rejected"""
        with pytest.raises(InvalidInputError):
            check_jacobian(_rosenbrock(analytic=False), np.array([0.0, 0.0]))


class TestWeighting:
    """Test suite for residual weighting helpers"""

    def test_normalize_sigma_defaults_to_ones(self):
        assert np.array_equal(normalize_sigma(None, 3), np.ones(3))

    def test_normalize_sigma_fills_unknown_entries(self):
        """Test zero, negative and infinite sigmas take the median positive value"""
        sigma = normalize_sigma(np.array([1.0, 0.0, 3.0, -1.0, np.inf, 2.0]), 6)

        assert np.array_equal(sigma, [1.0, 2.0, 3.0, 2.0, 2.0, 2.0])

    def test_normalize_sigma_all_unknown(self):
        assert np.array_equal(normalize_sigma(np.zeros(4), 4), np.ones(4))

    def test_weighted_residuals(self):
        """Test residuals are (model - y) / sigma"""
        y = np.array([1.0, 2.0])
        residual_fn = weighted_residuals(lambda p: p[0] * np.ones(2), y, np.array([0.5, 2.0]))

        assert np.allclose(residual_fn(np.array([3.0])), [4.0, 0.5])
