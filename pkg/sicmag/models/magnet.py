"""
Magnet analysis records
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from sicmag.models.fit import FitResult


@dataclass
class TcEstimate:
    """
    Curie temperature from a B_FGT(T) series

    tc_derivative is the midpoint temperature of the steepest finite-difference
    decline; extrapolated is set when the fitted Tc lies outside the sampled range.
    """
    Tc: float
    beta_crit: float
    B0_scale: float
    fit: FitResult
    tc_derivative: Optional[float] = None
    extrapolated: bool = False
    warnings: List[str] = field(default_factory=list)

    @property
    def sigma_Tc(self) -> float:
        return float(self.fit.std_errors[1])


@dataclass
class HysteresisLoop:
    """M(H) on both branches over the same field grid"""
    fields_g: np.ndarray
    ascending: np.ndarray
    descending: np.ndarray


@dataclass
class CoerciveEstimate:
    """Coercive field from the sign switches of a field sweep"""
    Hc: float
    ascending_switch: Optional[float]
    descending_switch: Optional[float]
