"""
Spin relaxometry: stretched-exponential traces, phonon background and
the sample fluctuation rate
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import constants
from scipy.optimize import nnls

from sicmag.core.config import settings
from sicmag.core.exceptions import (
    InitializationError,
    InvalidInputError,
    NoPeakError,
)
from sicmag.core.numfit import levenberg_marquardt, normalize_sigma, weighted_residuals
from sicmag.models.fit import FitOptions, ResidualProblem
from sicmag.models.trace import FluctuationFit, PhononFit, PhononRate, RelaxationFit, RelaxationTrace
from sicmag.schemas.odmr import MeasurementMeta
from sicmag.schemas.relaxometry import (
    DifferentialRate,
    FluctuationModel,
    PhononModelParams,
    RatePoint,
)

logger = logging.getLogger(__name__)

# delays in us times rates in kHz
RATE_TIME_UNIT = 1e-3
MIN_TRACE_SAMPLES = 6
MIN_PHONON_POINTS = 5
MIN_FLUCTUATION_POINTS = 6
STRETCH_BOUNDS = (1e-3, 2.0)
ROOM_TEMPERATURE_K = 296.0
_DELTA_GRID = np.geomspace(20.0, 20000.0, 121)


def _rate_arrays(series) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    points = [p if isinstance(p, RatePoint) else RatePoint(temperature_k=p[0], rate_khz=p[1], sigma_khz=p[2] if len(p) > 2 else 0.0) for p in series]
    points.sort(key=lambda p: p.temperature_k)
    T = np.array([p.temperature_k for p in points], dtype=float)
    rate = np.array([p.rate_khz for p in points], dtype=float)
    sigma = np.array([p.sigma_khz for p in points], dtype=float)
    return T, rate, sigma


def _bose(delta_over_k: float, T: np.ndarray) -> np.ndarray:
    with np.errstate(over='ignore'):
        return 1.0 / np.expm1(delta_over_k / T)


class RelaxometryService:
    """Trace fitting and rate-model operations"""

    @staticmethod
    def delta_to_mev(delta_over_k: float) -> float:
        """Activation energy Delta in meV from Delta/k in K"""
        return delta_over_k * constants.k / constants.e * 1e3

    @staticmethod
    def decay(delays: np.ndarray, Gamma: float, n_stretch: float, amplitude: float) -> np.ndarray:
        """amplitude * exp(-(t * Gamma)^n), t in us and Gamma in kHz"""
        x = np.asarray(delays, dtype=float) * Gamma * RATE_TIME_UNIT
        return amplitude * np.exp(-np.power(x, n_stretch))

    @classmethod
    def synthesize_trace(
        cls,
        Gamma: float,
        delays: Sequence[float],
        n_stretch: float = 1.0,
        amplitude: float = 1.0,
        noise_sigma: float = 0.0,
        seed: Optional[int] = None,
        meta: Optional[MeasurementMeta] = None,
    ) -> RelaxationTrace:
        """
        Stretched-exponential trace with additive Gaussian noise

        Args:
            Gamma: Rate in kHz
            delays: Strictly increasing delays in us, first >= 0
            n_stretch: Stretch exponent in (0, 2]
            amplitude: Signal at zero delay
            noise_sigma: Noise standard deviation
            seed: Generator seed, defaults to settings.MASTER_SEED
            meta: Metadata attached to the trace

        Returns:
            RelaxationTrace

        Raises:
            InvalidInputError: On a non-positive rate, bad exponent or bad delays
        """
        if not Gamma > 0:
            raise InvalidInputError(f"Gamma must be positive, got {Gamma}")
        if not 0 < n_stretch <= STRETCH_BOUNDS[1]:
            raise InvalidInputError(f"n_stretch must lie in (0, 2], got {n_stretch}")
        if not noise_sigma >= 0:
            raise InvalidInputError(f"noise_sigma must be non-negative, got {noise_sigma}")
        delays = np.asarray(delays, dtype=float)
        seed = settings.MASTER_SEED if seed is None else seed
        signal = cls.decay(delays, Gamma, n_stretch, amplitude)
        if noise_sigma > 0:
            signal = signal + np.random.default_rng(seed).normal(0.0, noise_sigma, size=delays.size)
        if meta is None:
            meta = MeasurementMeta(temperature_k=ROOM_TEMPERATURE_K, seed=seed)
        else:
            meta = meta.model_copy(update={'seed': seed})
        return RelaxationTrace(delays=delays, signal=signal, meta=meta)

    @classmethod
    def fit_trace(
        cls,
        trace: RelaxationTrace,
        fix_n: Optional[float] = None,
        options: Optional[FitOptions] = None,
    ) -> RelaxationFit:
        """
        Fit amplitude * exp(-(t Gamma)^n)

        Initial values come from a straight-line fit of ln(-ln(y/A)) against
        ln t over samples with y/A in (0.05, 0.95).

        Args:
            trace: Trace to fit
            fix_n: Hold the stretch exponent at this value
            options: Solver tolerances

        Returns:
            RelaxationFit

        Raises:
            InvalidInputError: With fewer than 6 samples or delays spanning under a decade
            InitializationError: If the signal has no usable positive decay
        """
        if len(trace) < MIN_TRACE_SAMPLES:
            raise InvalidInputError(f"trace has {len(trace)} samples, need at least {MIN_TRACE_SAMPLES}")
        if fix_n is not None and not 0 < fix_n <= STRETCH_BOUNDS[1]:
            raise InvalidInputError(f"fix_n must lie in (0, 2], got {fix_n}")
        t = trace.delays
        y = trace.signal
        positive_delays = t[t > 0]
        if positive_delays.size < 2 or positive_delays[-1] < 10.0 * positive_delays[0]:
            raise InvalidInputError("trace delays must span at least one decade")

        amplitude0 = float(np.max(y[: max(3, len(y) // 10)]))
        if not amplitude0 > 0:
            raise InitializationError("signal plateau is not positive", context=f"T={trace.meta.temperature_k} K")
        ratio = y / amplitude0
        usable = (t > 0) & (ratio > 0.05) & (ratio < 0.95)
        if np.count_nonzero(usable) < 2:
            raise InitializationError(
                "too few samples inside the decay to initialize the fit",
                context=f"T={trace.meta.temperature_k} K",
            )
        log_t = np.log(t[usable])
        log_log = np.log(-np.log(ratio[usable]))
        if fix_n is None:
            slope, intercept = np.polyfit(log_t, log_log, 1)
            n0 = float(np.clip(slope, 0.1, STRETCH_BOUNDS[1]))
        else:
            n0 = float(fix_n)
        intercept = float(np.mean(log_log - n0 * log_t))
        gamma0 = float(np.exp(intercept / n0)) / RATE_TIME_UNIT

        free_n = fix_n is None

        def unpack(p: np.ndarray) -> Tuple[float, float, float]:
            return p[0], p[1], (p[2] if free_n else fix_n)

        def model_fn(p: np.ndarray) -> np.ndarray:
            amplitude, gamma, n = unpack(p)
            return cls.decay(t, gamma, n, amplitude)

        def jacobian(p: np.ndarray) -> np.ndarray:
            amplitude, gamma, n = unpack(p)
            x = t * gamma * RATE_TIME_UNIT
            xn = np.power(x, n)
            e = np.exp(-xn)
            columns = [e, -amplitude * e * n * xn / gamma]
            if free_n:
                log_x = np.log(np.where(x > 0, x, 1.0))
                columns.append(-amplitude * e * xn * log_x)
            return np.column_stack(columns)

        lower = [0.0, 1e-9] + ([STRETCH_BOUNDS[0]] if free_n else [])
        upper = [np.inf, np.inf] + ([STRETCH_BOUNDS[1]] if free_n else [])
        x0 = [amplitude0, gamma0] + ([n0] if free_n else [])
        problem = ResidualProblem(
            param_count=len(x0),
            residual_fn=weighted_residuals(model_fn, y),
            lower_bounds=np.array(lower),
            upper_bounds=np.array(upper),
            analytic_jacobian=jacobian,
        )
        result = levenberg_marquardt(problem, np.array(x0), options)
        if not result.converged:
            logger.warning(f"Trace fit at T={trace.meta.temperature_k} K did not converge: {result.message}")

        amplitude, gamma, n = unpack(result.params)
        return RelaxationFit(
            Gamma=float(gamma),
            n_stretch=float(n),
            amplitude=float(amplitude),
            fit=result,
            sigma_Gamma=float(result.std_errors[1]),
            sigma_n=float(result.std_errors[2]) if free_n else 0.0,
        )

    @staticmethod
    def phonon_rate(params: PhononModelParams, T: float) -> PhononRate:
        """
        Gamma_r(T) = a + b / (exp(Delta/kT) - 1) + c T^5 in kHz

        An overflowing T^5 term saturates at the largest float and sets the
        saturated flag.

        Raises:
            InvalidInputError: If T is not positive
        """
        if not T > 0:
            raise InvalidInputError(f"temperature must be positive, got {T}")
        bose = float(_bose(params.Delta_over_k, np.array([T]))[0])
        with np.errstate(over='ignore'):
            power = params.c * float(np.power(T, 5.0)) if params.c > 0 else 0.0
        value = params.a + params.b * bose + power
        if not np.isfinite(value):
            logger.warning(f"Phonon rate overflowed at T={T} K")
            return PhononRate(value=float(np.finfo(float).max), saturated=True)
        return PhononRate(value=float(value), saturated=False)

    @classmethod
    def fit_phonon_model(cls, series, options: Optional[FitOptions] = None) -> PhononFit:
        """
        Weighted non-negative fit of the phonon background

        Delta/k is seeded by scanning a grid and solving the linear (a, b, c)
        subproblem with non-negative least squares at every grid value.

        Args:
            series: RatePoint items or (T, Gamma_r, sigma) tuples
            options: Solver tolerances

        Returns:
            PhononFit

        Raises:
            InvalidInputError: With fewer than 5 points or non-positive temperatures
        """
        T, rate, sigma = _rate_arrays(series)
        if T.size < MIN_PHONON_POINTS:
            raise InvalidInputError(f"phonon fit needs at least {MIN_PHONON_POINTS} points, got {T.size}")
        if np.any(T <= 0):
            raise InvalidInputError("temperatures must be positive")
        weights = 1.0 / normalize_sigma(sigma, T.size)
        T5 = T ** 5

        best = None
        for delta in _DELTA_GRID:
            design = np.column_stack([np.ones_like(T), _bose(delta, T), T5]) * weights[:, None]
            norms = np.linalg.norm(design, axis=0)
            norms[norms == 0] = 1.0
            coeffs, residual = nnls(design / norms, rate * weights)
            if best is None or residual < best[0]:
                best = (residual, delta, coeffs / norms)
        _, delta0, (a0, b0, c0) = best
        logger.debug(f"Phonon grid seed: a={a0:.4g}, b={b0:.4g}, c={c0:.4g}, Delta/k={delta0:.4g} K")

        def model_fn(p: np.ndarray) -> np.ndarray:
            a, b, c, delta = p
            return a + b * _bose(delta, T) + c * T5

        def jacobian(p: np.ndarray) -> np.ndarray:
            _, b, _, delta = p
            bose = _bose(delta, T)
            # d/dDelta of 1/(e^(D/T) - 1) = -e^(D/T) / (T (e^(D/T) - 1)^2) = -(bose + bose^2) / T
            d_delta = -b * (bose + bose * bose) / T
            return np.column_stack([np.ones_like(T), bose, T5, d_delta]) * weights[:, None]

        problem = ResidualProblem(
            param_count=4,
            residual_fn=weighted_residuals(model_fn, rate, sigma),
            lower_bounds=np.array([0.0, 0.0, 0.0, 1e-6]),
            analytic_jacobian=jacobian,
        )
        result = levenberg_marquardt(problem, np.array([a0, b0, c0, delta0]), options)
        if not result.converged:
            logger.warning(f"Phonon fit did not converge: {result.message}")
        a, b, c, delta = (float(v) for v in result.params)
        params = PhononModelParams(a=a, b=b, c=c, Delta_over_k=delta)
        logger.info(f"Phonon fit a={a:.4g} kHz, b={b:.4g} kHz, c={c:.4g} kHz/K^5, Delta/k={delta:.4g} K")
        return PhononFit(params=params, fit=result)

    @staticmethod
    def differential_rate(
        Gamma_p: float,
        Gamma_r: float,
        sigma_p: float = 0.0,
        sigma_r: float = 0.0,
    ) -> DifferentialRate:
        """
        Signed Gamma_p - Gamma_r with quadrature uncertainty; values within
        two sigma of zero are marked noise-consistent

        Raises:
            InvalidInputError: If either rate is not finite
        """
        if not (np.isfinite(Gamma_p) and np.isfinite(Gamma_r)):
            raise InvalidInputError("rates must be finite")
        value = Gamma_p - Gamma_r
        sigma = float(np.hypot(sigma_p, sigma_r))
        return DifferentialRate(value=value, sigma=sigma, noise_consistent=bool(abs(value) < 2.0 * sigma))

    @staticmethod
    def fluctuation_rate(model: FluctuationModel, T: float) -> float:
        """
        Sample fluctuation rate in kHz; single maximum A w^(-exponent_below) at Tc

        Raises:
            InvalidInputError: If T is not positive
        """
        if not T > 0:
            raise InvalidInputError(f"temperature must be positive, got {T}")
        exponent = model.exponent_below if T < model.Tc else model.exponent_above
        return model.peak_rate * (1.0 + abs(T - model.Tc) / model.width) ** (-exponent)

    @classmethod
    def fit_fluctuation_model(
        cls,
        series,
        exponent_below: float = 1.0,
        exponent_above: float = 1.0,
        fit_exponents: bool = False,
        options: Optional[FitOptions] = None,
    ) -> FluctuationFit:
        """
        Weighted fit of the peak model to a Gamma_FGT(T) series

        The fit runs on (peak height, Tc, width) and, when fit_exponents is
        set, both exponents; otherwise the exponents are held at the given values.

        Args:
            series: RatePoint items or (T, Gamma_FGT, sigma) tuples
            exponent_below: Exponent below Tc (initial value when fitted)
            exponent_above: Exponent at and above Tc (initial value when fitted)
            fit_exponents: Free the exponents
            options: Solver tolerances

        Returns:
            FluctuationFit with peak_T = fitted Tc

        Raises:
            InvalidInputError: With fewer than 6 points
            NoPeakError: If the series maximum sits at either end
        """
        T, rate, sigma = _rate_arrays(series)
        if T.size < MIN_FLUCTUATION_POINTS:
            raise InvalidInputError(
                f"fluctuation fit needs at least {MIN_FLUCTUATION_POINTS} points, got {T.size}"
            )
        k = int(np.argmax(rate))
        if k == 0 or k == T.size - 1:
            raise NoPeakError(f"series maximum at T={T[k]} K is not bracketed")
        weights = 1.0 / normalize_sigma(sigma, T.size)
        span = float(T[-1] - T[0])

        def unpack(p: np.ndarray) -> Tuple[float, float, float, float, float]:
            if fit_exponents:
                return p[0], p[1], p[2], p[3], p[4]
            return p[0], p[1], p[2], exponent_below, exponent_above

        def model_fn(p: np.ndarray) -> np.ndarray:
            peak, tc, width, p_below, p_above = unpack(p)
            exponent = np.where(T < tc, p_below, p_above)
            return peak * (1.0 + np.abs(T - tc) / width) ** (-exponent)

        def jacobian(p: np.ndarray) -> np.ndarray:
            peak, tc, width, p_below, p_above = unpack(p)
            below = T < tc
            exponent = np.where(below, p_below, p_above)
            d = T - tc
            g = 1.0 + np.abs(d) / width
            f = peak * g ** (-exponent)
            common = peak * exponent * g ** (-exponent - 1.0) / width
            columns = [g ** (-exponent), common * np.sign(d), common * np.abs(d) / width]
            if fit_exponents:
                log_g = np.log(g)
                columns.append(np.where(below, -f * log_g, 0.0))
                columns.append(np.where(below, 0.0, -f * log_g))
            return np.column_stack(columns) * weights[:, None]

        x0 = [float(rate[k]), float(T[k]), max(span / 10.0, 1e-3)]
        lower = [0.0, float(T[0]), 1e-3 * span]
        upper = [np.inf, float(T[-1]), 10.0 * span]
        if fit_exponents:
            x0 += [exponent_below, exponent_above]
            lower += [0.05, 0.05]
            upper += [5.0, 5.0]
        problem = ResidualProblem(
            param_count=len(x0),
            residual_fn=weighted_residuals(model_fn, rate, sigma),
            lower_bounds=np.array(lower),
            upper_bounds=np.array(upper),
            analytic_jacobian=jacobian,
        )
        result = levenberg_marquardt(problem, np.array(x0), options)
        if not result.converged:
            logger.warning(f"Fluctuation fit did not converge: {result.message}")

        peak, tc, width, p_below, p_above = (float(v) for v in unpack(result.params))
        model = FluctuationModel.from_peak(
            peak, Tc=tc, width=width, exponent_below=p_below, exponent_above=p_above
        )
        logger.info(f"Fluctuation peak at {tc:.2f} K (height {peak:.4g} kHz, width {width:.3g} K)")
        return FluctuationFit(model=model, peak_T=tc, fit=result, sigma_peak_T=float(result.std_errors[1]))
