"""
ODMR schemas
"""
from typing import Optional

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from sicmag.models.enums import Branch, Position, Sweep


class LorentzianPeak(BaseModel):
    """Single Lorentzian line; amplitude is the signed contrast at the center"""
    model_config = ConfigDict(frozen=True)

    center: float  # MHz
    fwhm: float  # MHz
    amplitude: float
    center_err: float = 0.0
    fwhm_err: float = 0.0
    amplitude_err: float = 0.0

    @field_validator('fwhm')
    @classmethod
    def validate_fwhm(cls, v):
        if v <= 0:
            raise ValueError("fwhm must be positive")
        return v


class FrequencyGrid(BaseModel):
    """Uniform sweep start..stop (inclusive when it lands on the step)"""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    start_mhz: float
    stop_mhz: float
    step_mhz: float

    @field_validator('step_mhz')
    @classmethod
    def validate_step(cls, v):
        if v <= 0:
            raise ValueError("step_mhz must be positive")
        return v

    @model_validator(mode='after')
    def validate_range(self):
        if self.stop_mhz < self.start_mhz:
            raise ValueError("stop_mhz must not be below start_mhz")
        return self


class MeasurementMeta(BaseModel):
    """
    Metadata attached to every spectrum and trace file

    Unknown keys are kept so that sidecar files round-trip.
    """
    model_config = ConfigDict(extra='allow')

    temperature_k: float
    field_g: float = 0.0
    position: Position = Position.REFERENCE
    sweep: Sweep = Sweep.TEMPERATURE
    branch: Optional[Branch] = None
    seed: Optional[int] = None

    @field_validator('temperature_k')
    @classmethod
    def validate_temperature(cls, v):
        if v <= 0:
            raise ValueError("temperature_k must be positive")
        return v

    def pairing_key(self) -> tuple:
        """Key shared by a probe measurement and its reference"""
        return (
            self.sweep.value,
            round(self.temperature_k, 6),
            round(self.field_g, 6),
            self.branch.value if self.branch else "",
        )


class FieldEstimate(BaseModel):
    """Field recovered from one spectrum"""
    model_config = ConfigDict(frozen=True)

    B: float  # G
    sigma_B: float  # G, +inf when the fit covariance is unavailable
    D_est: float  # MHz

    @field_validator('sigma_B')
    @classmethod
    def validate_sigma(cls, v):
        if not v >= 0:
            raise ValueError("sigma_B must be non-negative")
        return v


class DifferentialField(BaseModel):
    """Sample stray field |B_tot - B_0| with its signed counterpart"""
    model_config = ConfigDict(frozen=True)

    B_FGT: float
    sigma: float
    signed: float
