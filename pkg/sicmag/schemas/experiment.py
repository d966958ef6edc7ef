"""
Experiment configuration schema
"""
import json
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from sicmag.core.exceptions import ConfigurationError
from sicmag.schemas.magnet import FlakeGeometry, MagnetizationModel, SensorPlacement
from sicmag.schemas.relaxometry import FluctuationModel, PhononModelParams
from sicmag.schemas.sensor import SensorSpinModel

DEFAULT_FIELDS_G = [-508.0, -300.0, -100.0, -50.0, -20.0, -12.0, -8.0, 8.0, 12.0, 20.0, 50.0, 100.0, 300.0, 455.0]


def _default_temperatures() -> List[float]:
    return [round(float(t), 6) for t in np.linspace(296.0, 393.0, 12)]


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid', allow_inf_nan=False)


class MagnetConfig(_Section):
    """Magnet model, geometry and sensor placement"""
    model: MagnetizationModel = MagnetizationModel()
    geometry: FlakeGeometry = FlakeGeometry()
    placement: SensorPlacement = SensorPlacement()
    # rescale M_sat so the sensor sees this |B_FGT| at calibration_temperature_k
    calibrate_to_g: Optional[float] = 3.2
    calibration_temperature_k: float = 295.8

    @field_validator('calibrate_to_g')
    @classmethod
    def validate_target(cls, v):
        if v is not None and v <= 0:
            raise ValueError("calibrate_to_g must be positive")
        return v


class OdmrConfig(_Section):
    """Synthetic ODMR settings"""
    window_mhz: float = Field(60.0, gt=0)
    step_mhz: float = Field(0.5, gt=0)
    fwhm_mhz: float = Field(12.0, gt=0)
    contrast: float = -0.01
    noise_sigma: float = Field(0.0005, ge=0)
    baseline: float = 0.0

    @field_validator('contrast')
    @classmethod
    def validate_contrast(cls, v):
        if v == 0:
            raise ValueError("contrast must be non-zero")
        return v


class RelaxometryConfig(_Section):
    """Synthetic relaxometry settings"""
    delay_min_us: float = Field(0.1, gt=0)
    delay_max_us: float = Field(2000.0, gt=0)
    delay_count: int = Field(400, ge=6)
    noise_sigma: float = Field(0.005, ge=0)
    n_stretch: float = Field(1.0, gt=0, le=2)
    amplitude: float = Field(1.0, gt=0)
    field_g: float = 190.0
    phonon: PhononModelParams = PhononModelParams()
    fluctuation: FluctuationModel = FluctuationModel()
    fit_exponents: bool = False
    # traces are fitted with n held at n_stretch unless this is set
    fit_stretch: bool = False

    @model_validator(mode='after')
    def validate_delays(self):
        if self.delay_max_us < 10.0 * self.delay_min_us:
            raise ValueError("delays must span at least one decade")
        return self

    def delays(self) -> np.ndarray:
        return np.geomspace(self.delay_min_us, self.delay_max_us, self.delay_count)

    @property
    def held_stretch(self) -> Optional[float]:
        """Exponent held during trace fits, None when it is fitted"""
        return None if self.fit_stretch else self.n_stretch


class SweepConfig(_Section):
    """Temperature and field sweeps"""
    temperatures_k: List[float] = Field(default_factory=_default_temperatures, min_length=6)
    odmr_field_g: float = 200.0
    fields_g: List[float] = Field(default_factory=lambda: list(DEFAULT_FIELDS_G))
    field_sweep_temperature_k: float = Field(295.8, gt=0)

    @field_validator('temperatures_k')
    @classmethod
    def validate_temperatures(cls, v):
        if any(t <= 0 for t in v):
            raise ValueError("temperatures must be positive")
        if len(set(v)) != len(v):
            raise ValueError("temperatures must be distinct")
        return sorted(v)

    @field_validator('fields_g')
    @classmethod
    def validate_fields(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("fields must be distinct")
        return sorted(v)


class ToleranceConfig(_Section):
    """Tolerances of the reproduce checks; rate tolerances are relative"""
    tc_bfgt_k: float = Field(3.0, ge=0)
    tc_peak_k: float = Field(5.0, ge=0)
    coercive_field_g: float = Field(2.0, ge=0)
    gamma_r_rel: float = Field(0.05, ge=0)
    phonon_curve_rel: float = Field(0.05, ge=0)


class ExperimentConfig(_Section):
    """
    Full synthetic campaign; the master seed determines every synthetic output
    """
    sensor: SensorSpinModel = SensorSpinModel()
    magnet: MagnetConfig = MagnetConfig()
    odmr: OdmrConfig = OdmrConfig()
    relaxometry: RelaxometryConfig = RelaxometryConfig()
    sweep: SweepConfig = SweepConfig()
    tolerances: ToleranceConfig = ToleranceConfig()
    output_dir: Optional[str] = None
    master_seed: Optional[int] = None

    def canonical_json(self) -> str:
        """Key-sorted JSON used for provenance hashing; the output location is left out"""
        return json.dumps(self.model_dump(mode='json', exclude={'output_dir'}), sort_keys=True, separators=(',', ':'))

    @classmethod
    def load(cls, source: Union[str, Path, None]) -> "ExperimentConfig":
        """
        Load and validate a JSON config file; None gives the defaults

        Raises:
            ConfigurationError: With one dotted path per invalid field
        """
        if source is None:
            return cls()
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}")
        return cls.parse(text, origin=str(path))

    @classmethod
    def parse(cls, text: str, origin: str = "<config>") -> "ExperimentConfig":
        try:
            return cls.model_validate_json(text)
        except ValidationError as exc:
            errors = [
                f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
                for err in exc.errors()
            ]
            raise ConfigurationError(f"invalid experiment config {origin}", errors=errors)
