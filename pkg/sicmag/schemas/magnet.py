"""
Ferromagnet model, flake geometry and sensor placement schemas
"""
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


class MagnetizationModel(BaseModel):
    """
    Phenomenological Fe3GaTe2 magnetization

    M_sat in A/m, fields in G. chi_high adds a linear high-field term below Tc
    and is off by default.
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    M_sat: float = 1.0e4
    Tc: float = 360.0
    beta_crit: float = 0.5
    Hc: float = 10.0
    chi_para: float = 0.0
    chi_high: float = 0.0

    @field_validator('M_sat', 'Hc', 'chi_para', 'chi_high')
    @classmethod
    def validate_non_negative(cls, v, info):
        if v < 0:
            raise ValueError(f"{info.field_name} must be non-negative")
        return v

    @field_validator('Tc')
    @classmethod
    def validate_tc(cls, v):
        if v <= 0:
            raise ValueError("Tc must be positive")
        return v

    @field_validator('beta_crit')
    @classmethod
    def validate_beta(cls, v):
        if not 0 < v < 1:
            raise ValueError("beta_crit must lie in (0, 1)")
        return v


class FlakeGeometry(BaseModel):
    """Rectangular prism, lengths in um, magnetized along a unit direction"""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    half_extents_um: Tuple[float, float, float] = (5.0, 5.0, 0.05)
    center_um: Tuple[float, float, float] = (0.0, 0.0, 0.05)
    direction: Tuple[float, float, float] = (0.0, 0.0, 1.0)

    @field_validator('half_extents_um')
    @classmethod
    def validate_extents(cls, v):
        if any(h <= 0 for h in v):
            raise ValueError("all half extents must be positive")
        return v

    @field_validator('direction')
    @classmethod
    def validate_direction(cls, v):
        norm = float(np.linalg.norm(v))
        if norm == 0:
            raise ValueError("direction must be non-zero")
        return tuple(float(c) / norm for c in v)

    @property
    def volume_um3(self) -> float:
        a, b, c = self.half_extents_um
        return 8.0 * a * b * c

    def contains(self, point: np.ndarray) -> bool:
        """True for points strictly inside the prism"""
        offset = np.abs(np.asarray(point, dtype=float) - np.asarray(self.center_um))
        return bool(np.all(offset < np.asarray(self.half_extents_um)))


class SensorPlacement(BaseModel):
    """
    Sensor location: lateral offset from the flake center, depth below the
    SiC surface (z = 0, flake above, sensor at z = -depth)
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    offset_um: Tuple[float, float] = (5.5, 0.0)
    depth_nm: float = 40.0

    @field_validator('depth_nm')
    @classmethod
    def validate_depth(cls, v):
        if v <= 0:
            raise ValueError("depth_nm must be positive")
        return v

    def point_um(self, geometry: FlakeGeometry) -> np.ndarray:
        cx, cy, _ = geometry.center_um
        return np.array([cx + self.offset_um[0], cy + self.offset_um[1], -self.depth_nm * 1e-3])


class BfgtPoint(BaseModel):
    """One B_FGT(T) sample"""
    temperature_k: float
    b_fgt_g: float
    sigma_g: float = 0.0


class FieldSweepPoint(BaseModel):
    """Signed stray field at one applied field on one branch"""
    field_g: float
    signed_g: float
    branch: str
