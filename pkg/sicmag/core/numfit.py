"""
Levenberg-Marquardt least-squares core shared by every fitting service
"""
import logging
from typing import Callable, Optional

import numpy as np

from sicmag.core.exceptions import EvaluationError, InvalidInputError
from sicmag.models.fit import FitOptions, FitResult, ResidualProblem

logger = logging.getLogger(__name__)

_MAX_DAMPING = 1e16
_MIN_DAMPING = 1e-15


def _evaluate(problem: ResidualProblem, params: np.ndarray) -> np.ndarray:
    return np.asarray(problem.residual_fn(params), dtype=float).ravel()


def _checked_evaluate(problem: ResidualProblem, params: np.ndarray, index: int) -> np.ndarray:
    residuals = _evaluate(problem, params)
    if not np.all(np.isfinite(residuals)):
        raise EvaluationError(
            f"non-finite residual while differencing parameter {index} at value {params[index]!r}",
            parameter_index=index,
        )
    return residuals


def finite_difference_jacobian(
    problem: ResidualProblem,
    params: np.ndarray,
    rel_step: float = 1e-6,
) -> np.ndarray:
    """
    Second-order finite-difference Jacobian of the residuals

    Central differences are used where the stencil fits inside the bounds;
    next to a bound the one-sided three-point formula (also second order)
    is used instead.

    Args:
        problem: Residual problem
        params: Point of evaluation, within bounds
        rel_step: Step relative to each parameter's magnitude, never below rel_step itself

    Returns:
        Matrix with one row per residual and one column per parameter

    Raises:
        InvalidInputError: If rel_step is not positive or params are out of bounds
        EvaluationError: If a stencil point yields a non-finite residual
    """
    if not rel_step > 0:
        raise InvalidInputError(f"rel_step must be positive, got {rel_step}")
    params = np.asarray(params, dtype=float)
    if params.shape != (problem.param_count,):
        raise InvalidInputError(
            f"expected {problem.param_count} parameters, got shape {params.shape}"
        )
    if not problem.within_bounds(params):
        raise InvalidInputError("parameters lie outside the problem bounds")

    lower, upper = problem.lower, problem.upper
    columns = []
    base: Optional[np.ndarray] = None
    for j in range(problem.param_count):
        # tiny values would lose the step to rounding
        h = rel_step * max(abs(params[j]), 1.0)

        def shifted(delta: float) -> np.ndarray:
            p = params.copy()
            p[j] = params[j] + delta
            return _checked_evaluate(problem, p, j)

        if params[j] - h >= lower[j] and params[j] + h <= upper[j]:
            column = (shifted(h) - shifted(-h)) / (2.0 * h)
        else:
            if base is None:
                base = _checked_evaluate(problem, params, j)
            if params[j] + 2.0 * h <= upper[j]:
                column = (-3.0 * base + 4.0 * shifted(h) - shifted(2.0 * h)) / (2.0 * h)
            elif params[j] - 2.0 * h >= lower[j]:
                column = (3.0 * base - 4.0 * shifted(-h) + shifted(-2.0 * h)) / (2.0 * h)
            else:
                raise InvalidInputError(
                    f"bounds of parameter {j} are narrower than the difference step"
                )
        columns.append(column)
    return np.column_stack(columns)


def check_jacobian(problem: ResidualProblem, params: np.ndarray, rel_step: float = 1e-6) -> float:
    """
    Largest column-wise relative deviation between the analytic and the
    finite-difference Jacobian
    """
    if problem.analytic_jacobian is None:
        raise InvalidInputError("problem has no analytic Jacobian")
    params = np.asarray(params, dtype=float)
    analytic = np.asarray(problem.analytic_jacobian(params), dtype=float)
    numeric = finite_difference_jacobian(problem, params, rel_step)
    worst = 0.0
    for j in range(problem.param_count):
        scale = max(np.max(np.abs(numeric[:, j])), np.max(np.abs(analytic[:, j])))
        if scale == 0:
            continue
        worst = max(worst, float(np.max(np.abs(analytic[:, j] - numeric[:, j])) / scale))
    return worst


def weighted_residuals(
    model_fn: Callable[[np.ndarray], np.ndarray],
    y: np.ndarray,
    sigma: Optional[np.ndarray] = None,
) -> Callable[[np.ndarray], np.ndarray]:
    """
    Build a residual function (model - y) / sigma

    Zero uncertainties are replaced by the median positive uncertainty.
    """
    y = np.asarray(y, dtype=float)
    weights = 1.0 / normalize_sigma(sigma, y.size)

    def residual_fn(params: np.ndarray) -> np.ndarray:
        return (model_fn(params) - y) * weights

    return residual_fn


def normalize_sigma(sigma: Optional[np.ndarray], size: int) -> np.ndarray:
    """Uncertainties with non-positive entries replaced by the median positive value"""
    if sigma is None:
        return np.ones(size)
    sigma = np.asarray(sigma, dtype=float).copy()
    positive = sigma[np.isfinite(sigma) & (sigma > 0)]
    fill = float(np.median(positive)) if positive.size else 1.0
    sigma[~(np.isfinite(sigma) & (sigma > 0))] = fill
    return sigma


def _column_scale(jacobian: np.ndarray) -> np.ndarray:
    scale = np.sqrt(np.sum(jacobian * jacobian, axis=0))
    scale[scale == 0] = 1.0
    return scale


def _damped_step(scaled_jacobian: np.ndarray, residuals: np.ndarray, damping: float) -> np.ndarray:
    """Solve (Js^T Js + damping I) step = -Js^T r as an augmented least-squares system"""
    n = scaled_jacobian.shape[1]
    augmented = np.vstack([scaled_jacobian, np.sqrt(damping) * np.eye(n)])
    rhs = np.concatenate([-residuals, np.zeros(n)])
    step, *_ = np.linalg.lstsq(augmented, rhs, rcond=None)
    return step


def _covariance(
    jacobian: np.ndarray,
    cost: float,
    options: FitOptions,
) -> Optional[np.ndarray]:
    m, n = jacobian.shape
    dof = m - n
    if options.scale_covariance and dof <= 0:
        return None
    scale = _column_scale(jacobian)
    scaled = jacobian / scale
    if np.linalg.matrix_rank(scaled) < n:
        return None
    try:
        inverse = np.linalg.inv(scaled.T @ scaled)
    except np.linalg.LinAlgError:
        return None
    covariance = inverse / np.outer(scale, scale)
    if options.scale_covariance:
        covariance = covariance * (cost / dof)
    covariance = 0.5 * (covariance + covariance.T)
    if not np.all(np.isfinite(covariance)):
        return None
    return covariance


def levenberg_marquardt(
    problem: ResidualProblem,
    init: np.ndarray,
    options: Optional[FitOptions] = None,
) -> FitResult:
    """
    Bounded Levenberg-Marquardt minimization of the residual norm

    Damping is Marquardt-scaled by the diagonal of J^T J, multiplied by 10
    on a rejected step and divided by 10 on an accepted one. Bounds are
    enforced by projecting each trial point. Only steps that do not increase
    the residual norm are accepted.

    Convergence is declared when the relative step, measured in variables
    scaled by the Jacobian column norms, falls below xtol or the
    scaled gradient (cosine between residual and every Jacobian column)
    falls below gtol. Exhausting max_iterations returns converged=False.

    Args:
        problem: Residual problem
        init: Initial parameters, within bounds
        options: Solver tolerances

    Returns:
        FitResult

    Raises:
        InvalidInputError: If init has the wrong length, lies outside the bounds
            or gives non-finite residuals
    """
    options = options or FitOptions()
    x = np.asarray(init, dtype=float).copy()
    n = problem.param_count
    if x.shape != (n,):
        raise InvalidInputError(f"expected {n} initial parameters, got shape {x.shape}")
    if not problem.within_bounds(x):
        raise InvalidInputError("initial parameters lie outside the problem bounds")

    residuals = _evaluate(problem, x)
    nfev = 1
    if not np.all(np.isfinite(residuals)):
        raise InvalidInputError("non-finite residual at the initial parameters")
    cost = float(residuals @ residuals)

    def jacobian(params: np.ndarray) -> np.ndarray:
        if problem.analytic_jacobian is not None:
            return np.asarray(problem.analytic_jacobian(params), dtype=float)
        return finite_difference_jacobian(problem, params, options.fd_rel_step)

    J = jacobian(x)
    damping = options.initial_damping
    converged = False
    message = "maximum iterations exceeded"
    iterations = 0
    stalled = False

    while iterations < options.max_iterations:
        iterations += 1
        if cost == 0.0:
            converged, message = True, "exact fit"
            break
        scale = _column_scale(J)
        gradient = J.T @ residuals
        scaled_gradient = np.max(np.abs(gradient) / scale) / np.sqrt(cost)
        if scaled_gradient <= options.gtol:
            converged, message = True, "gradient tolerance met"
            break

        scaled_J = J / scale
        while True:
            step = _damped_step(scaled_J, residuals, damping) / scale
            trial = problem.project(x + step)
            actual = trial - x
            small_step = np.linalg.norm(scale * actual) <= options.xtol * (np.linalg.norm(scale * x) + options.xtol)
            # trials that overflow get an infinite cost and are rejected
            with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
                trial_residuals = _evaluate(problem, trial)
                if np.all(np.isfinite(trial_residuals)):
                    trial_cost = float(trial_residuals @ trial_residuals)
                else:
                    trial_cost = np.inf
            nfev += 1
            if trial_cost <= cost:
                x, residuals, cost = trial, trial_residuals, trial_cost
                damping = max(damping / 10.0, _MIN_DAMPING)
                break
            damping *= 10.0
            if small_step or damping > _MAX_DAMPING:
                stalled = True
                break

        if stalled:
            if small_step:
                converged, message = True, "relative step tolerance met"
            else:
                message = "no decrease found at maximum damping"
            break
        if small_step:
            converged, message = True, "relative step tolerance met"
            break
        J = jacobian(x)

    if not converged:
        logger.warning(f"Levenberg-Marquardt did not converge: {message} after {iterations} iterations")

    J = jacobian(x)
    covariance = _covariance(J, cost, options)
    if covariance is None:
        std_errors = np.full(n, np.inf)
    else:
        std_errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
        covariance[np.diag_indices(n)] = std_errors ** 2

    return FitResult(
        params=x,
        std_errors=std_errors,
        residual_norm=float(np.sqrt(cost)),
        iterations=iterations,
        converged=converged,
        covariance=covariance,
        nfev=nfev,
        message=message,
        residuals=residuals,
    )
