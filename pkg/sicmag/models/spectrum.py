"""
ODMR spectrum records
"""
from dataclasses import dataclass, field
from typing import List

import numpy as np

from sicmag.core.exceptions import InvalidInputError
from sicmag.models.fit import FitResult
from sicmag.schemas.odmr import LorentzianPeak, MeasurementMeta


@dataclass
class OdmrSpectrum:
    """
    Lock-in contrast samples over a strictly increasing frequency grid (MHz)

    warnings holds non-fatal conditions such as transitions lying outside
    the sampled grid.
    """
    frequencies: np.ndarray
    signal: np.ndarray
    meta: MeasurementMeta
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.frequencies.ndim != 1 or self.frequencies.shape != self.signal.shape:
            raise InvalidInputError(
                f"frequencies and signal must be 1-D of equal length, got "
                f"{self.frequencies.shape} and {self.signal.shape}"
            )
        if self.frequencies.size == 0:
            raise InvalidInputError("spectrum is empty")
        if np.any(np.diff(self.frequencies) <= 0):
            raise InvalidInputError("frequencies must be strictly increasing")

    def __len__(self) -> int:
        return self.frequencies.size


@dataclass
class SpectrumFit:
    """Peaks sorted by center, fitted baseline and solver diagnostics"""
    peaks: List[LorentzianPeak]
    baseline: float
    fit: FitResult
    snr: float = 0.0
    # parameter index of each sorted peak center, for covariance lookups
    center_indices: List[int] = field(default_factory=list)

    @property
    def centers(self) -> np.ndarray:
        return np.array([p.center for p in self.peaks])
