"""
Property-based tests for the Levenberg-Marquardt core
"""
import numpy as np
from hypothesis import given, strategies as st, settings as hyp_settings

from sicmag.core.numfit import check_jacobian, levenberg_marquardt
from sicmag.models.fit import ResidualProblem

_X = np.linspace(0.0, 1.0, 20)


@given(
    slope=st.floats(min_value=-10.0, max_value=10.0),
    intercept=st.floats(min_value=-10.0, max_value=10.0),
)
@hyp_settings(max_examples=100, deadline=None)
def test_property_linear_model_recovered_exactly(slope, intercept):
    """
    Property: noise-free linear data is fitted to its generating parameters
    """
    y = slope * _X + intercept
    problem = ResidualProblem(
        param_count=2,
        residual_fn=lambda p: p[0] * _X + p[1] - y,
        analytic_jacobian=lambda p: np.column_stack([_X, np.ones_like(_X)]),
    )

    result = levenberg_marquardt(problem, np.zeros(2))

    assert result.converged
    assert np.allclose(result.params, [slope, intercept], atol=1e-6)


@given(
    rate=st.floats(min_value=0.2, max_value=5.0),
    amplitude=st.floats(min_value=0.5, max_value=2.0),
    start=st.floats(min_value=0.1, max_value=10.0),
)
@hyp_settings(max_examples=100, deadline=None)
def test_property_residual_norm_never_increases(rate, amplitude, start):
    """
    Property: the returned residual norm never exceeds the initial one
    """
    y = amplitude * np.exp(-rate * _X * 3.0)

    def residual_fn(p):
        return p[0] * np.exp(-p[1] * _X * 3.0) - y

    problem = ResidualProblem(param_count=2, residual_fn=residual_fn, lower_bounds=np.array([0.0, 0.0]))
    init = np.array([1.0, start])

    result = levenberg_marquardt(problem, init)

    assert result.residual_norm <= np.linalg.norm(residual_fn(init)) + 1e-12
    assert problem.within_bounds(result.params)


@given(
    center=st.floats(min_value=-5.0, max_value=5.0),
    width=st.floats(min_value=0.5, max_value=3.0),
)
@hyp_settings(max_examples=100, deadline=None)
def test_property_gaussian_jacobian_matches_differences(center, width):
    """
    Property: an analytic Jacobian agrees with central differences
    """
    x = np.linspace(-10.0, 10.0, 81)

    def residual_fn(p):
        return np.exp(-0.5 * ((x - p[0]) / p[1]) ** 2)

    def jacobian(p):
        g = residual_fn(p)
        d = x - p[0]
        return np.column_stack([g * d / p[1] ** 2, g * d * d / p[1] ** 3])

    problem = ResidualProblem(param_count=2, residual_fn=residual_fn, analytic_jacobian=jacobian)

    assert check_jacobian(problem, np.array([center, width])) < 1e-5
