"""
Relaxometry schemas
"""
from pydantic import BaseModel, ConfigDict, field_validator


class PhononModelParams(BaseModel):
    """
    Phonon background a + b/(exp(Delta_over_k/T) - 1) + c*T^5

    Rates in kHz, Delta stored as a temperature in K.
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    a: float = 2.0
    b: float = 1986.0
    c: float = 8.3e-13
    Delta_over_k: float = 2000.0

    @field_validator('a', 'b', 'c')
    @classmethod
    def validate_non_negative(cls, v, info):
        if v < 0:
            raise ValueError(f"{info.field_name} must be non-negative")
        return v

    @field_validator('Delta_over_k')
    @classmethod
    def validate_delta(cls, v):
        if v <= 0:
            raise ValueError("Delta_over_k must be positive")
        return v


class FluctuationModel(BaseModel):
    """
    Regularized power-law peak of the sample fluctuation rate around Tc

    rate(T) = A * w^(-exponent_below) * (1 + |T - Tc| / width)^(-p)
    with w = width / Tc and p = exponent_below below Tc, exponent_above at or
    above it. The peak value A * w^(-exponent_below) sits exactly at Tc.
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    A: float = 0.5556
    Tc: float = 360.0
    exponent_below: float = 1.0
    exponent_above: float = 1.0
    width: float = 10.0

    @field_validator('A')
    @classmethod
    def validate_amplitude(cls, v):
        if v < 0:
            raise ValueError("A must be non-negative")
        return v

    @field_validator('Tc', 'width', 'exponent_below', 'exponent_above')
    @classmethod
    def validate_positive(cls, v, info):
        if v <= 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @property
    def peak_rate(self) -> float:
        return self.A * (self.width / self.Tc) ** (-self.exponent_below)

    @classmethod
    def from_peak(cls, peak_rate: float, **kwargs) -> "FluctuationModel":
        """Build a model from its peak height instead of A"""
        probe = cls(**{**kwargs, 'A': 1.0})
        return cls(**{**kwargs, 'A': peak_rate / probe.peak_rate})


class RatePoint(BaseModel):
    """One rate-series sample"""
    temperature_k: float
    rate_khz: float
    sigma_khz: float = 0.0


class DifferentialRate(BaseModel):
    """Signed Gamma_p - Gamma_r"""
    model_config = ConfigDict(frozen=True)

    value: float
    sigma: float
    noise_consistent: bool
