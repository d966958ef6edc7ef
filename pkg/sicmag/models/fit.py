"""
Least-squares problem and result records
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from sicmag.core.config import settings
from sicmag.core.exceptions import InvalidInputError

ResidualFn = Callable[[np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ResidualProblem:
    """
    A nonlinear least-squares problem: minimize |residual_fn(p)|^2

    residual_fn must be re-entrant; its output length is fixed for given data.
    """
    param_count: int
    residual_fn: ResidualFn
    lower_bounds: Optional[np.ndarray] = None
    upper_bounds: Optional[np.ndarray] = None
    analytic_jacobian: Optional[JacobianFn] = None

    def __post_init__(self):
        if self.param_count < 1:
            raise InvalidInputError(f"param_count must be positive, got {self.param_count}")
        for name in ("lower_bounds", "upper_bounds"):
            bounds = getattr(self, name)
            if bounds is None:
                continue
            bounds = np.asarray(bounds, dtype=float)
            if bounds.shape != (self.param_count,):
                raise InvalidInputError(
                    f"{name} must have length {self.param_count}, got shape {bounds.shape}"
                )
            object.__setattr__(self, name, bounds)
        if np.any(self.lower > self.upper):
            raise InvalidInputError("lower_bounds must not exceed upper_bounds")

    @property
    def lower(self) -> np.ndarray:
        if self.lower_bounds is None:
            return np.full(self.param_count, -np.inf)
        return self.lower_bounds

    @property
    def upper(self) -> np.ndarray:
        if self.upper_bounds is None:
            return np.full(self.param_count, np.inf)
        return self.upper_bounds

    def within_bounds(self, params: np.ndarray) -> bool:
        return bool(np.all(params >= self.lower) and np.all(params <= self.upper))

    def project(self, params: np.ndarray) -> np.ndarray:
        return np.clip(params, self.lower, self.upper)


@dataclass(frozen=True)
class FitOptions:
    """Solver tolerances"""
    xtol: float = settings.FIT_XTOL
    gtol: float = settings.FIT_GTOL
    max_iterations: int = settings.FIT_MAX_ITERATIONS
    initial_damping: float = 1e-3
    fd_rel_step: float = 1e-6
    # scale covariance by the reduced chi-square (residual_norm^2 / (m - n))
    scale_covariance: bool = True


@dataclass
class FitResult:
    """
    Outcome of a least-squares fit

    When the normal matrix is singular the covariance is None and the
    standard errors are reported as +inf.
    """
    params: np.ndarray
    std_errors: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    covariance: Optional[np.ndarray] = None
    nfev: int = 0
    message: str = ""
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def covariance_available(self) -> bool:
        return self.covariance is not None

    def correlation(self) -> Optional[np.ndarray]:
        """Normalized covariance, or None when unavailable"""
        if self.covariance is None:
            return None
        scale = np.sqrt(np.diag(self.covariance))
        scale[scale == 0] = 1.0
        return self.covariance / np.outer(scale, scale)

    def covariance_entry(self, i: int, j: int) -> float:
        """Covariance element, +inf when the covariance is unavailable"""
        if self.covariance is None:
            return np.inf
        return float(self.covariance[i, j])
