"""
Pytest configuration and fixtures
"""
from pathlib import Path

import numpy as np
import pytest

from sicmag.schemas.experiment import ExperimentConfig, SweepConfig
from sicmag.schemas.magnet import FlakeGeometry, MagnetizationModel, SensorPlacement
from sicmag.schemas.odmr import MeasurementMeta
from sicmag.schemas.sensor import FieldVector, SensorSpinModel
from sicmag.services.odmr_service import OdmrService
from sicmag.services.spin_service import SpinModelService

# Short campaign: the fluctuation peak is bracketed and the field sweep switches sign
SMALL_TEMPERATURES_K = [296.0, 320.0, 340.0, 352.0, 360.0, 368.0, 380.0, 393.0]
SMALL_FIELDS_G = [-20.0, -8.0, 8.0, 20.0]


@pytest.fixture
def sensor() -> SensorSpinModel:
    """Default PL6 sensor model"""
    return SensorSpinModel()


@pytest.fixture
def magnet_model() -> MagnetizationModel:
    return MagnetizationModel()


@pytest.fixture
def geometry() -> FlakeGeometry:
    return FlakeGeometry()


@pytest.fixture
def placement() -> SensorPlacement:
    return SensorPlacement()


@pytest.fixture
def small_config(tmp_path: Path) -> ExperimentConfig:
    """Reduced experiment config writing into a temporary directory"""
    return ExperimentConfig(
        sweep=SweepConfig(temperatures_k=SMALL_TEMPERATURES_K, fields_g=SMALL_FIELDS_G),
        output_dir=str(tmp_path / "out"),
        master_seed=1234,
    )


@pytest.fixture
def small_config_file(tmp_path: Path, small_config: ExperimentConfig) -> Path:
    """The reduced config serialized to JSON"""
    path = tmp_path / "config.json"
    path.write_text(small_config.model_dump_json(indent=2))
    return path


@pytest.fixture
def make_spectrum(sensor):
    """
    Factory for synthetic spectra on a window grid around the expected lines
    """
    def factory(B: float, noise_sigma: float = 0.0, seed: int = 1, T: float = 296.0, **meta):
        field = FieldVector.axial(B)
        centers = SpinModelService.transition_frequencies(sensor, field, T)
        grid = OdmrService.window_grid(centers)
        return OdmrService.synthesize_spectrum(
            sensor,
            field,
            T,
            grid,
            noise_sigma=noise_sigma,
            seed=seed,
            meta=MeasurementMeta(temperature_k=T, field_g=B, **meta),
        )

    return factory


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240501)
