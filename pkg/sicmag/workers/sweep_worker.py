"""
Sweep-point workers

Each task handles one sweep point (one file to synthesize or one file to fit)
and shares no state with the others. Task functions live at module level so
they can be shipped to a process pool.
"""
import logging
import multiprocessing
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence

import numpy as np

from sicmag.core.exceptions import SicmagError
from sicmag.models.spectrum import OdmrSpectrum
from sicmag.models.trace import RelaxationFit, RelaxationTrace
from sicmag.schemas.experiment import OdmrConfig, RelaxometryConfig
from sicmag.schemas.odmr import FieldEstimate, MeasurementMeta
from sicmag.schemas.sensor import FieldVector, SensorSpinModel
from sicmag.services.odmr_service import OdmrService
from sicmag.services.relaxometry_service import RelaxometryService
from sicmag.services.spin_service import SpinModelService
from sicmag.services.storage_service import StorageService

logger = logging.getLogger(__name__)


def run_tasks(func: Callable[..., Any], tasks: Sequence[tuple], jobs: int = 1) -> List[Any]:
    """
    Run func over argument tuples, at most `jobs` at a time

    Results come back in task order whatever the job count.
    """
    if jobs <= 1 or len(tasks) <= 1:
        return [func(*args) for args in tasks]
    processes = min(jobs, len(tasks))
    logger.debug(f"Running {len(tasks)} tasks of {func.__name__} on {processes} processes")
    with multiprocessing.Pool(processes=processes) as pool:
        return pool.starmap(func, tasks)


def _with_context(exc: SicmagError, label: str) -> SicmagError:
    if not exc.context:
        exc.context = label
    return exc


def simulate_spectrum(
    sensor: SensorSpinModel,
    field: FieldVector,
    odmr: OdmrConfig,
    meta: MeasurementMeta,
    seed: int,
    path: str,
) -> str:
    """Synthesize one spectrum on a window grid around its transitions and write it"""
    try:
        centers = SpinModelService.transition_frequencies(sensor, field, meta.temperature_k)
        grid = OdmrService.window_grid(centers, odmr.window_mhz, odmr.step_mhz)
        spectrum = OdmrService.synthesize_spectrum(
            sensor,
            field,
            meta.temperature_k,
            grid,
            peak_fwhm=odmr.fwhm_mhz,
            contrast=odmr.contrast,
            noise_sigma=odmr.noise_sigma,
            baseline=odmr.baseline,
            seed=seed,
            meta=meta,
        )
        StorageService.write_spectrum(path, spectrum)
    except SicmagError as exc:
        raise _with_context(exc, Path(path).name)
    return path


def simulate_trace(
    Gamma: float,
    relax: RelaxometryConfig,
    meta: MeasurementMeta,
    seed: int,
    path: str,
) -> str:
    """Synthesize one relaxation trace and write it"""
    try:
        trace = RelaxometryService.synthesize_trace(
            Gamma,
            relax.delays(),
            n_stretch=relax.n_stretch,
            amplitude=relax.amplitude,
            noise_sigma=relax.noise_sigma,
            seed=seed,
            meta=meta,
        )
        StorageService.write_trace(path, trace)
    except SicmagError as exc:
        raise _with_context(exc, Path(path).name)
    return path


def fit_spectrum(spectrum: OdmrSpectrum, sensor: SensorSpinModel, label: str) -> FieldEstimate:
    """Field magnitude from one parsed spectrum"""
    try:
        estimate = OdmrService.extract_field(spectrum, sensor)
    except SicmagError as exc:
        logger.error(f"Fitting spectrum {label} failed: {exc}", exc_info=True)
        raise _with_context(exc, label)
    logger.debug(f"{label}: B = {estimate.B:.4f} +/- {estimate.sigma_B:.4f} G")
    return estimate


def fit_trace(trace: RelaxationTrace, label: str, fix_n: Optional[float] = None) -> RelaxationFit:
    """Relaxation rate from one parsed trace"""
    try:
        fit = RelaxometryService.fit_trace(trace, fix_n=fix_n)
    except SicmagError as exc:
        logger.error(f"Fitting trace {label} failed: {exc}", exc_info=True)
        raise _with_context(exc, label)
    if not np.isfinite(fit.sigma_Gamma):
        logger.warning(f"{label}: rate uncertainty unavailable")
    return fit
