"""
Fe3GaTe2 phenomenology: magnetization, hysteresis, B_FGT at the sensor and Tc estimation
"""
import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from sicmag.core.exceptions import InvalidInputError, NoTransitionError
from sicmag.core.numfit import levenberg_marquardt, normalize_sigma, weighted_residuals
from sicmag.models.enums import Branch
from sicmag.models.fit import FitOptions, FitResult, ResidualProblem
from sicmag.models.magnet import CoerciveEstimate, HysteresisLoop, TcEstimate
from sicmag.schemas.magnet import (
    BfgtPoint,
    FieldSweepPoint,
    FlakeGeometry,
    MagnetizationModel,
    SensorPlacement,
)
from sicmag.services.stray_field_service import StrayFieldService

logger = logging.getLogger(__name__)

# 1 Oe of applied field in A/m
AMPERE_PER_METER_PER_GAUSS = 1000.0 / (4.0 * np.pi)
MIN_TC_POINTS = 5
BETA_BOUNDS = (1e-3, 0.999)
# a point counts as magnetized when above this fraction of the series maximum
_SIGNIFICANT_FRACTION = 0.1


def _branch(branch: Union[Branch, str]) -> Branch:
    try:
        return Branch(branch)
    except ValueError:
        raise InvalidInputError(f"unknown branch {branch!r}; expected 'ascending' or 'descending'")


def _series_arrays(series) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    points = [p if isinstance(p, BfgtPoint) else BfgtPoint(temperature_k=p[0], b_fgt_g=p[1], sigma_g=p[2] if len(p) > 2 else 0.0) for p in series]
    points.sort(key=lambda p: p.temperature_k)
    T = np.array([p.temperature_k for p in points], dtype=float)
    B = np.array([p.b_fgt_g for p in points], dtype=float)
    sigma = np.array([p.sigma_g for p in points], dtype=float)
    return T, B, sigma


class MagnetService:
    """Magnetization and Curie-temperature operations"""

    @staticmethod
    def magnetization(
        model: MagnetizationModel,
        T: float,
        H_applied: float,
        branch: Union[Branch, str] = Branch.DESCENDING,
    ) -> float:
        """
        Signed magnetization along the easy axis

        Below Tc the magnitude is M_sat (1 - T/Tc)^beta. The sign is positive
        at and above the switching field (+Hc ascending, -Hc descending) and
        negative below it, so the magnetization never vanishes on a branch and
        a loop with Hc = 0 keeps its remanence. At or above Tc, M = chi_para H.

        Args:
            model: Magnetization model
            T: Temperature in K
            H_applied: Applied field in G
            branch: Hysteresis branch

        Returns:
            M in A/m

        Raises:
            InvalidInputError: If T is not positive or the branch is unknown
        """
        branch = _branch(branch)
        if not T > 0:
            raise InvalidInputError(f"temperature must be positive, got {T}")
        H = H_applied * AMPERE_PER_METER_PER_GAUSS
        if T >= model.Tc:
            return model.chi_para * H

        switching = model.Hc if branch == Branch.ASCENDING else -model.Hc
        sign = 1.0 if H_applied >= switching else -1.0
        magnitude = model.M_sat * (1.0 - T / model.Tc) ** model.beta_crit
        return sign * magnitude + model.chi_high * H

    @classmethod
    def hysteresis_loop(cls, model: MagnetizationModel, T: float, fields_g: Sequence[float]) -> HysteresisLoop:
        """M(H) on both branches over an ascending field grid"""
        fields = np.sort(np.asarray(fields_g, dtype=float))
        ascending = np.array([cls.magnetization(model, T, h, Branch.ASCENDING) for h in fields])
        descending = np.array([cls.magnetization(model, T, h, Branch.DESCENDING) for h in fields])
        return HysteresisLoop(fields_g=fields, ascending=ascending, descending=descending)

    @staticmethod
    def loop_area(loop: HysteresisLoop) -> float:
        """Enclosed loop area in A/m * G"""
        return float(trapezoid(loop.descending - loop.ascending, loop.fields_g))

    @classmethod
    def signed_field_at_sensor(
        cls,
        model: MagnetizationModel,
        geometry: FlakeGeometry,
        placement: SensorPlacement,
        T: float,
        H_applied: float,
        branch: Union[Branch, str] = Branch.DESCENDING,
    ) -> float:
        """z-component of the flake stray field at the sensor, G"""
        M = cls.magnetization(model, T, H_applied, branch)
        return StrayFieldService.stray_field(geometry, M, placement.point_um(geometry)).Bz

    @classmethod
    def field_at_sensor(
        cls,
        model: MagnetizationModel,
        geometry: FlakeGeometry,
        placement: SensorPlacement,
        T: float,
        H_applied: float,
        branch: Union[Branch, str] = Branch.DESCENDING,
    ) -> float:
        """Predicted B_FGT: |Bz| of the stray field at the sensor, G"""
        return abs(cls.signed_field_at_sensor(model, geometry, placement, T, H_applied, branch))

    @classmethod
    def calibrate_m_sat(
        cls,
        model: MagnetizationModel,
        geometry: FlakeGeometry,
        placement: SensorPlacement,
        T: float,
        target_B: float,
        H_applied: float = 0.0,
        branch: Union[Branch, str] = Branch.DESCENDING,
    ) -> MagnetizationModel:
        """
        Rescale M_sat so that field_at_sensor(T, H_applied) equals target_B

        Raises:
            InvalidInputError: If the model predicts no field to rescale
        """
        current = cls.field_at_sensor(model, geometry, placement, T, H_applied, branch)
        if current == 0:
            raise InvalidInputError(f"model predicts no stray field at T={T} K, cannot calibrate")
        calibrated = model.model_copy(update={'M_sat': model.M_sat * target_B / current})
        logger.info(f"Calibrated M_sat to {calibrated.M_sat:.6g} A/m for {target_B} G at {T} K")
        return calibrated

    @classmethod
    def estimate_tc(cls, series, options: Optional[FitOptions] = None) -> TcEstimate:
        """
        Fit B_FGT(T) = B0_scale * max(0, 1 - T/Tc)^beta with weights 1/sigma^2

        Args:
            series: BfgtPoint items or (T, B_FGT, sigma) tuples
            options: Solver tolerances

        Returns:
            TcEstimate, including the steepest-decline temperature as a
            secondary estimate and an extrapolation flag

        Raises:
            InvalidInputError: With fewer than 5 points or repeated temperatures
            NoTransitionError: If the series is identically zero
        """
        T, B, sigma = _series_arrays(series)
        if T.size < MIN_TC_POINTS:
            raise InvalidInputError(f"estimate_tc needs at least {MIN_TC_POINTS} points, got {T.size}")
        if np.any(T <= 0):
            raise InvalidInputError("temperatures must be positive")
        repeated = T[1:][np.diff(T) == 0]
        if repeated.size:
            raise InvalidInputError(f"temperatures must be distinct, repeated: {sorted(set(repeated.tolist()))}")
        peak = float(np.max(np.abs(B)))
        if peak == 0:
            raise NoTransitionError("B_FGT series is identically zero")

        # fit in units of the series maximum so the result is scale-free
        y = B / peak
        sigma_y = normalize_sigma(sigma, T.size) / peak
        weights = 1.0 / sigma_y

        significant = np.nonzero(y > _SIGNIFICANT_FRACTION)[0]
        last = int(significant[-1]) if significant.size else 0
        if last + 1 < T.size:
            tc0 = 0.5 * (T[last] + T[last + 1])
        else:
            tc0 = T[last] + (T[-1] - T[0]) / max(T.size - 1, 1)
        lower = np.array([0.0, 0.5 * T[0], BETA_BOUNDS[0]])
        upper = np.array([np.inf, 2.0 * T[-1], BETA_BOUNDS[1]])
        tc0 = float(np.clip(tc0, lower[1], upper[1]))
        beta0 = 0.5
        x_first = max(1.0 - T[0] / tc0, 1e-6)
        scale0 = max(float(y[0]), 1e-3) / x_first ** beta0

        def model_fn(p: np.ndarray) -> np.ndarray:
            x = np.clip(1.0 - T / p[1], 0.0, None)
            return p[0] * x ** p[2]

        def jacobian(p: np.ndarray) -> np.ndarray:
            scale, tc, beta = p
            x = 1.0 - T / tc
            J = np.zeros((T.size, 3))
            inside = x > 0
            xi = x[inside]
            J[inside, 0] = xi ** beta
            J[inside, 1] = scale * beta * xi ** (beta - 1.0) * T[inside] / tc ** 2
            J[inside, 2] = scale * xi ** beta * np.log(xi)
            return J * weights[:, None]

        problem = ResidualProblem(
            param_count=3,
            residual_fn=weighted_residuals(model_fn, y, sigma_y),
            lower_bounds=lower,
            upper_bounds=upper,
            analytic_jacobian=jacobian,
        )
        result = levenberg_marquardt(problem, np.array([scale0, tc0, beta0]), options)
        result = cls._rescale_amplitude(result, peak)
        B0_scale, Tc, beta = (float(v) for v in result.params)

        slopes = np.diff(B) / np.diff(T)
        k = int(np.argmin(slopes))
        tc_derivative = 0.5 * (T[k] + T[k + 1])

        warnings = []
        extrapolated = not (T[0] <= Tc <= T[-1])
        if extrapolated:
            warnings.append(f"fitted Tc={Tc:.2f} K lies outside the sampled range [{T[0]}, {T[-1]}] K")
            logger.warning(warnings[-1])
        if not result.converged:
            warnings.append(f"Tc fit did not converge: {result.message}")

        logger.info(f"Estimated Tc={Tc:.2f} K (beta={beta:.3f}), dB/dT extremum at {tc_derivative:.2f} K")
        return TcEstimate(
            Tc=Tc,
            beta_crit=beta,
            B0_scale=B0_scale,
            fit=result,
            tc_derivative=tc_derivative,
            extrapolated=extrapolated,
            warnings=warnings,
        )

    @staticmethod
    def _rescale_amplitude(result: FitResult, factor: float) -> FitResult:
        params = result.params.copy()
        std_errors = result.std_errors.copy()
        params[0] *= factor
        std_errors[0] *= factor
        covariance = None
        if result.covariance is not None:
            covariance = result.covariance.copy()
            covariance[0, :] *= factor
            covariance[:, 0] *= factor
        result.params, result.std_errors, result.covariance = params, std_errors, covariance
        return result

    @staticmethod
    def estimate_coercive_field(points) -> CoerciveEstimate:
        """
        Coercive field from the sign switches of the signed stray field

        Each branch is walked in sweep order (descending: high to low field,
        ascending: low to high) and the switch is placed midway between the
        last sample with the starting sign and the first with the opposite one.

        Args:
            points: FieldSweepPoint items or (H, signed B, branch) tuples

        Returns:
            CoerciveEstimate with Hc the mean switching-field magnitude

        Raises:
            NoTransitionError: If neither branch switches sign
        """
        parsed = [p if isinstance(p, FieldSweepPoint) else FieldSweepPoint(field_g=p[0], signed_g=p[1], branch=str(getattr(p[2], 'value', p[2]))) for p in points]
        switches = {}
        for branch in Branch:
            rows = sorted(
                (p for p in parsed if _branch(p.branch) == branch),
                key=lambda p: p.field_g,
                reverse=branch == Branch.DESCENDING,
            )
            signs = np.sign([p.signed_g for p in rows])
            switches[branch] = None
            nonzero = np.nonzero(signs)[0]
            if nonzero.size == 0:
                continue
            start = signs[nonzero[0]]
            flipped = np.nonzero(signs == -start)[0]
            if flipped.size:
                k = int(flipped[0])
                previous = max(int(i) for i in nonzero if i < k)
                switches[branch] = 0.5 * (rows[previous].field_g + rows[k].field_g)

        found = [abs(v) for v in switches.values() if v is not None]
        if not found:
            raise NoTransitionError("no sign switch found on either hysteresis branch")
        Hc = float(np.mean(found))
        logger.info(f"Coercive field estimate {Hc:.2f} G from switches {switches}")
        return CoerciveEstimate(
            Hc=Hc,
            ascending_switch=switches[Branch.ASCENDING],
            descending_switch=switches[Branch.DESCENDING],
        )
