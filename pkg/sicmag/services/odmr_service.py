"""
ODMR spectrum synthesis, Lorentzian fitting and differential magnetometry
"""
import logging
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks, peak_widths

from sicmag.core.config import settings
from sicmag.core.exceptions import FitDivergenceError, InitializationError, InvalidInputError
from sicmag.core.numfit import levenberg_marquardt, weighted_residuals
from sicmag.models.fit import FitOptions, ResidualProblem
from sicmag.models.spectrum import OdmrSpectrum, SpectrumFit
from sicmag.schemas.odmr import (
    DifferentialField,
    FieldEstimate,
    FrequencyGrid,
    LorentzianPeak,
    MeasurementMeta,
)
from sicmag.schemas.sensor import FieldVector, SensorSpinModel
from sicmag.services.spin_service import SpinModelService

logger = logging.getLogger(__name__)

SMOOTHING_WIDTH = 5
# fwhm is held above this during fits
_MIN_FWHM = 1e-9
_PARAMS_PER_PEAK = 3
# weaker line of an accepted doublet, relative to the stronger one
_MIN_AMPLITUDE_RATIO = 0.2


def lorentzian(f: np.ndarray, center: float, fwhm: float, amplitude: float) -> np.ndarray:
    """Lorentzian with peak value `amplitude` at `center`"""
    hw2 = 0.25 * fwhm * fwhm
    d = f - center
    return amplitude * hw2 / (d * d + hw2)


def _lorentzian_columns(f: np.ndarray, center: float, fwhm: float, amplitude: float) -> np.ndarray:
    hw = 0.5 * fwhm
    d = f - center
    denom = d * d + hw * hw
    d_center = amplitude * hw * hw * 2.0 * d / denom ** 2
    d_fwhm = amplitude * hw * d * d / denom ** 2
    d_amplitude = hw * hw / denom
    return np.column_stack([d_center, d_fwhm, d_amplitude])


def _rejection(fitted: SpectrumFit, frequencies: np.ndarray) -> Optional[str]:
    """Why a doublet fit does not describe two transitions, None when it does"""
    lo, hi = float(np.min(frequencies)), float(np.max(frequencies))
    for peak in fitted.peaks:
        if not np.all(np.isfinite([peak.center, peak.fwhm, peak.amplitude])):
            return "non-finite line parameters"
        # runaway centers end up pinned to the sweep edges
        if not lo < peak.center < hi:
            return f"line at {peak.center:.3f} MHz sits on the sweep edge"
        if peak.fwhm >= hi - lo:
            return f"line width {peak.fwhm:.4g} MHz covers the whole sweep"
    weak, strong = sorted(abs(p.amplitude) for p in fitted.peaks)
    if weak < _MIN_AMPLITUDE_RATIO * strong:
        return "one line is too weak to be a transition"
    if np.sign(fitted.peaks[0].amplitude) != np.sign(fitted.peaks[1].amplitude):
        return "lines have opposite polarity"
    if not fitted.fit.converged:
        return f"solver stopped early ({fitted.fit.message})"
    return None


class OdmrService:
    """Synthesis, fitting and field extraction for ODMR spectra"""

    @staticmethod
    def grid_points(grid: Union[FrequencyGrid, Sequence[float], np.ndarray]) -> np.ndarray:
        """Frequencies of a grid description, or the array itself"""
        if isinstance(grid, FrequencyGrid):
            count = int(np.floor((grid.stop_mhz - grid.start_mhz) / grid.step_mhz + 1e-9)) + 1
            return grid.start_mhz + grid.step_mhz * np.arange(count)
        points = np.asarray(grid, dtype=float)
        if points.ndim != 1 or points.size == 0:
            raise InvalidInputError("frequency grid must be a non-empty 1-D array")
        return points

    @staticmethod
    def window_grid(centers: Sequence[float], half_width_mhz: float = 60.0, step_mhz: float = 0.5) -> np.ndarray:
        """
        Union of windows around the expected lines, snapped to a common
        step lattice and restricted to positive frequencies
        """
        if step_mhz <= 0 or half_width_mhz <= 0:
            raise InvalidInputError("window half width and step must be positive")
        indices = []
        for c in centers:
            lo = int(np.ceil((c - half_width_mhz) / step_mhz))
            hi = int(np.floor((c + half_width_mhz) / step_mhz))
            indices.append(np.arange(lo, hi + 1))
        grid = np.unique(np.concatenate(indices)) * step_mhz
        grid = grid[grid > 0]
        if grid.size == 0:
            raise InvalidInputError("window grid has no positive frequencies")
        return grid

    @classmethod
    def synthesize_spectrum(
        cls,
        model: SensorSpinModel,
        B: FieldVector,
        T: float,
        grid: Union[FrequencyGrid, Sequence[float], np.ndarray],
        peak_fwhm: float = 12.0,
        contrast: float = -0.01,
        noise_sigma: float = 0.0,
        baseline: float = 0.0,
        seed: Optional[int] = None,
        meta: Optional[MeasurementMeta] = None,
    ) -> OdmrSpectrum:
        """
        Lock-in style spectrum: baseline + one Lorentzian per transition + white noise

        Args:
            model: Sensor model
            B: Field at the sensor in G
            T: Temperature in K
            grid: FrequencyGrid or explicit ascending frequencies in MHz
            peak_fwhm: Line width in MHz
            contrast: Signed line contrast, negative for dips
            noise_sigma: Standard deviation of the additive Gaussian noise
            baseline: Constant offset
            seed: Generator seed, defaults to settings.MASTER_SEED
            meta: Metadata; temperature and field are filled in when absent

        Returns:
            OdmrSpectrum, with a warning for every transition lying more than
            3 fwhm outside the grid

        Raises:
            InvalidInputError: On an empty grid, non-positive fwhm or negative noise
        """
        if not peak_fwhm > 0:
            raise InvalidInputError(f"peak_fwhm must be positive, got {peak_fwhm}")
        if not noise_sigma >= 0:
            raise InvalidInputError(f"noise_sigma must be non-negative, got {noise_sigma}")
        frequencies = cls.grid_points(grid)
        seed = settings.MASTER_SEED if seed is None else seed

        transitions = SpinModelService.transition_frequencies(model, B, T)
        signal = np.full(frequencies.size, float(baseline))
        for f0 in transitions:
            signal += lorentzian(frequencies, f0, peak_fwhm, contrast)
        if noise_sigma > 0:
            rng = np.random.default_rng(seed)
            signal += rng.normal(0.0, noise_sigma, size=frequencies.size)

        if meta is None:
            meta = MeasurementMeta(temperature_k=T, field_g=B.Bz, seed=seed)
        else:
            meta = meta.model_copy(update={'seed': seed})

        warnings = []
        margin = 3.0 * peak_fwhm
        for f0 in transitions:
            if f0 < frequencies[0] - margin or f0 > frequencies[-1] + margin:
                warnings.append(f"transition at {f0:.3f} MHz lies outside the grid")
        for w in warnings:
            logger.warning(f"Synthesized spectrum: {w}; fits will be unreliable")

        return OdmrSpectrum(frequencies=frequencies, signal=signal, meta=meta, warnings=warnings)

    @classmethod
    def initial_peaks(cls, spectrum: OdmrSpectrum, n_peaks: int) -> List[LorentzianPeak]:
        """
        Initial guesses from the n_peaks most prominent extrema of the
        boxcar-smoothed signal, taking the polarity of the largest deviation
        from the median

        Raises:
            InitializationError: If fewer than n_peaks extrema are found
        """
        signal = spectrum.signal
        size = min(SMOOTHING_WIDTH, signal.size)
        smoothed = uniform_filter1d(signal, size=size, mode='nearest')
        baseline = float(np.median(signal))
        deviation = smoothed - baseline
        polarity = -1.0 if deviation[np.argmax(np.abs(deviation))] < 0 else 1.0
        oriented = polarity * deviation

        # robust noise level of the smoothed signal
        if signal.size > 2:
            noise = 1.4826 * float(np.median(np.abs(np.diff(signal)))) / np.sqrt(2.0)
        else:
            noise = 0.0
        threshold = 4.0 * noise / np.sqrt(size)

        indices, props = find_peaks(oriented, prominence=threshold)
        prominences = props['prominences']
        if indices.size < n_peaks:
            raise InitializationError(
                f"found {indices.size} candidate extrema, need {n_peaks}",
                context=f"T={spectrum.meta.temperature_k} K, position={spectrum.meta.position.value}",
            )

        chosen = np.sort(indices[np.argsort(prominences)[::-1][:n_peaks]])
        _, _, left, right = peak_widths(oriented, chosen, rel_height=0.5)
        sample_axis = np.arange(spectrum.frequencies.size)
        step = float(np.median(np.diff(spectrum.frequencies))) if spectrum.frequencies.size > 1 else 1.0

        peaks = []
        for idx, lo, hi in zip(chosen, left, right):
            fwhm = float(np.interp(hi, sample_axis, spectrum.frequencies) - np.interp(lo, sample_axis, spectrum.frequencies))
            if not fwhm > 0:
                fwhm = 2.0 * step
            peaks.append(
                LorentzianPeak(
                    center=float(spectrum.frequencies[idx]),
                    fwhm=fwhm,
                    amplitude=float(signal[idx] - baseline),
                )
            )
        logger.debug(f"Initial peaks: {[(p.center, p.fwhm, p.amplitude) for p in peaks]}")
        return peaks

    @classmethod
    def fit_spectrum(
        cls,
        spectrum: OdmrSpectrum,
        n_peaks: int = 2,
        init: Optional[Sequence[LorentzianPeak]] = None,
        options: Optional[FitOptions] = None,
    ) -> SpectrumFit:
        """
        Fit baseline + n_peaks Lorentzians

        Args:
            spectrum: Spectrum to fit
            n_peaks: Number of lines (1 or 2)
            init: Optional initial peaks; detected from the data when absent
            options: Solver tolerances

        Centers are bounded to the sweep and widths to its span; initial
        values outside those bounds are clipped.

        Returns:
            SpectrumFit with peaks sorted by center

        Raises:
            InvalidInputError: If n_peaks is not 1 or 2 or the spectrum is too short
            InitializationError: If detection finds too few extrema and no init is given
        """
        if n_peaks not in (1, 2):
            raise InvalidInputError(f"n_peaks must be 1 or 2, got {n_peaks}")
        if len(spectrum) < 8 * n_peaks:
            raise InvalidInputError(
                f"spectrum has {len(spectrum)} samples, need at least {8 * n_peaks}"
            )
        if init is None:
            init = cls.initial_peaks(spectrum, n_peaks)
        elif len(init) != n_peaks:
            raise InvalidInputError(f"expected {n_peaks} initial peaks, got {len(init)}")

        f = spectrum.frequencies
        y = spectrum.signal
        x0 = [float(np.median(y))]
        for peak in init:
            x0.extend([peak.center, peak.fwhm, peak.amplitude])
        x0 = np.asarray(x0)
        param_count = x0.size

        # centers stay on the sweep, widths below its span
        lower = np.full(param_count, -np.inf)
        upper = np.full(param_count, np.inf)
        lower[1::_PARAMS_PER_PEAK] = float(np.min(f))
        upper[1::_PARAMS_PER_PEAK] = float(np.max(f))
        lower[2::_PARAMS_PER_PEAK] = _MIN_FWHM
        upper[2::_PARAMS_PER_PEAK] = max(float(np.max(f) - np.min(f)), _MIN_FWHM)
        x0 = np.clip(x0, lower, upper)

        def model_fn(p: np.ndarray) -> np.ndarray:
            out = np.full(f.size, p[0])
            for k in range(n_peaks):
                c, w, a = p[1 + _PARAMS_PER_PEAK * k: 1 + _PARAMS_PER_PEAK * (k + 1)]
                out += lorentzian(f, c, w, a)
            return out

        def jacobian(p: np.ndarray) -> np.ndarray:
            columns = [np.ones((f.size, 1))]
            for k in range(n_peaks):
                c, w, a = p[1 + _PARAMS_PER_PEAK * k: 1 + _PARAMS_PER_PEAK * (k + 1)]
                columns.append(_lorentzian_columns(f, c, w, a))
            return np.hstack(columns)

        problem = ResidualProblem(
            param_count=param_count,
            residual_fn=weighted_residuals(model_fn, y),
            lower_bounds=lower,
            upper_bounds=upper,
            analytic_jacobian=jacobian,
        )
        result = levenberg_marquardt(problem, x0, options)
        if not result.converged:
            logger.warning(
                f"ODMR fit did not converge ({result.message}) for "
                f"T={spectrum.meta.temperature_k} K, field={spectrum.meta.field_g} G"
            )

        peaks = []
        for k in range(n_peaks):
            base = 1 + _PARAMS_PER_PEAK * k
            c, w, a = result.params[base: base + _PARAMS_PER_PEAK]
            ec, ew, ea = result.std_errors[base: base + _PARAMS_PER_PEAK]
            peaks.append(
                (c, LorentzianPeak(center=c, fwhm=w, amplitude=a, center_err=ec, fwhm_err=ew, amplitude_err=ea), base)
            )
        peaks.sort(key=lambda item: item[0])

        noise = float(np.std(result.residuals)) if result.residuals.size else 0.0
        peak_height = max(abs(p.amplitude) for _, p, _ in peaks)
        snr = peak_height / noise if noise > 0 else np.inf

        return SpectrumFit(
            peaks=[p for _, p, _ in peaks],
            baseline=float(result.params[0]),
            fit=result,
            snr=snr,
            center_indices=[base for _, _, base in peaks],
        )

    @classmethod
    def split_doublet(cls, spectrum: OdmrSpectrum) -> List[LorentzianPeak]:
        """
        Initial doublet around the most prominent extremum: two half-height
        lines at +/- fwhm/4, for merged lines near zero field
        """
        single = cls.initial_peaks(spectrum, 1)[0]
        shift = 0.25 * single.fwhm
        return [
            LorentzianPeak(center=single.center - shift, fwhm=single.fwhm, amplitude=0.5 * single.amplitude),
            LorentzianPeak(center=single.center + shift, fwhm=single.fwhm, amplitude=0.5 * single.amplitude),
        ]

    @classmethod
    def extract_field(
        cls,
        spectrum: OdmrSpectrum,
        model: SensorSpinModel,
        options: Optional[FitOptions] = None,
    ) -> FieldEstimate:
        """
        Field magnitude from a two-line fit

        The fit seeded from the two most prominent extrema is kept only if it
        converged to two in-band lines of one polarity and comparable height.
        Otherwise (a merged doublet near zero field, or a noise extremum taken
        as the second line) the spectrum is refitted from split_doublet.

        Args:
            spectrum: Spectrum to analyze
            model: Sensor model
            options: Solver tolerances

        Returns:
            FieldEstimate with sigma_B propagated from the center covariance

        Raises:
            InitializationError: If not even one extremum is found
            FitDivergenceError: If neither start gives two in-band lines
        """
        context = f"T={spectrum.meta.temperature_k} K, position={spectrum.meta.position.value}"
        try:
            fitted = cls.fit_spectrum(spectrum, n_peaks=2, options=options)
            reason = _rejection(fitted, spectrum.frequencies)
        except InitializationError:
            reason = "a single extremum"
        if reason is not None:
            logger.debug(f"Two-line fit rejected ({reason}) for {context}, refitting a split doublet")
            fitted = cls.fit_spectrum(spectrum, n_peaks=2, init=cls.split_doublet(spectrum), options=options)
            reason = _rejection(fitted, spectrum.frequencies)
            if reason is not None:
                raise FitDivergenceError(f"no two in-band lines could be fitted: {reason}", context=context)

        lower, upper = fitted.peaks
        extraction = SpinModelService.field_from_splitting(
            model, lower.center, upper.center, T=spectrum.meta.temperature_k
        )

        i, j = fitted.center_indices
        result = fitted.fit
        if result.covariance_available:
            cross = -1.0 if not extraction.crossed else 1.0
            variance = result.covariance_entry(i, i) + result.covariance_entry(j, j) + 2.0 * cross * result.covariance_entry(i, j)
            sigma_B = float(np.sqrt(max(variance, 0.0))) / (2.0 * model.gamma)
        else:
            sigma_B = np.inf

        return FieldEstimate(B=extraction.B, sigma_B=sigma_B, D_est=extraction.D_center)

    @staticmethod
    def differential_field(probe: FieldEstimate, reference: FieldEstimate) -> DifferentialField:
        """
        Sample stray field |B_tot - B_0| with quadrature uncertainty
        """
        signed = probe.B - reference.B
        return DifferentialField(
            B_FGT=abs(signed),
            sigma=float(np.hypot(probe.sigma_B, reference.sigma_B)),
            signed=signed,
        )
