"""
Relaxometry records
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from sicmag.core.exceptions import InvalidInputError
from sicmag.models.fit import FitResult
from sicmag.schemas.odmr import MeasurementMeta
from sicmag.schemas.relaxometry import FluctuationModel, PhononModelParams


@dataclass
class RelaxationTrace:
    """Normalized spin-polarization signal over delays in us"""
    delays: np.ndarray
    signal: np.ndarray
    meta: MeasurementMeta

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.delays.ndim != 1 or self.delays.shape != self.signal.shape:
            raise InvalidInputError(
                f"delays and signal must be 1-D of equal length, got "
                f"{self.delays.shape} and {self.signal.shape}"
            )
        if self.delays.size and self.delays[0] < 0:
            raise InvalidInputError("first delay must be non-negative")
        if np.any(np.diff(self.delays) <= 0):
            raise InvalidInputError("delays must be strictly increasing")

    def __len__(self) -> int:
        return self.delays.size


@dataclass
class RelaxationFit:
    """Stretched-exponential fit; Gamma in kHz"""
    Gamma: float
    n_stretch: float
    amplitude: float
    fit: FitResult
    sigma_Gamma: float = np.inf
    sigma_n: float = 0.0


class PhononRate(NamedTuple):
    """Phonon background rate; saturated marks an overflowed evaluation"""
    value: float
    saturated: bool


@dataclass
class PhononFit:
    params: PhononModelParams
    fit: FitResult


@dataclass
class FluctuationFit:
    model: FluctuationModel
    peak_T: float
    fit: FitResult
    sigma_peak_T: float = np.inf

