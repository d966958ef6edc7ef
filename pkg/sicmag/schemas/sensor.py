"""
Sensor spin and field schemas
"""
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class SensorSpinModel(BaseModel):
    """
    PL6 divacancy spin-1 parameters

    D0 is taken at T_ref = 296 K; real spectra self-calibrate D(T) from the
    reference position, so dD_dT defaults to 0.
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    D0: float = 1351.0  # MHz
    dD_dT: float = 0.0  # MHz/K
    T_ref: float = 296.0  # K
    E: float = 0.0  # MHz
    gamma: float = 2.8025  # MHz/G

    @field_validator('D0', 'gamma', 'T_ref')
    @classmethod
    def validate_positive(cls, v, info):
        if v <= 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator('E')
    @classmethod
    def validate_transverse(cls, v):
        if v < 0:
            raise ValueError("E must be non-negative")
        return v

    @model_validator(mode='after')
    def validate_e_below_d(self):
        if self.E >= self.D0:
            raise ValueError("E must be smaller than D0")
        return self


class FieldVector(BaseModel):
    """
    Magnetic field in G, z along the defect c-axis

    flags carries non-fatal conditions raised while computing the field
    (for instance a point evaluated on a prism face).
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    Bx: float = 0.0
    By: float = 0.0
    Bz: float = 0.0
    flags: Tuple[str, ...] = ()

    @classmethod
    def axial(cls, Bz: float) -> "FieldVector":
        return cls(Bz=Bz)

    @classmethod
    def from_array(cls, values, flags: Tuple[str, ...] = ()) -> "FieldVector":
        bx, by, bz = (float(v) for v in values)
        return cls(Bx=bx, By=by, Bz=bz, flags=tuple(flags))

    def as_array(self) -> np.ndarray:
        return np.array([self.Bx, self.By, self.Bz])

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def __add__(self, other: "FieldVector") -> "FieldVector":
        return FieldVector.from_array(
            self.as_array() + other.as_array(),
            flags=tuple(dict.fromkeys(self.flags + other.flags)),
        )
