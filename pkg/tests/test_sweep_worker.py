"""
Unit tests for the sweep-point workers
"""
import pickle

import numpy as np
import pytest

from sicmag.core.exceptions import InvalidInputError, PairingError, ParseError, StageError
from sicmag.models.trace import RelaxationTrace
from sicmag.schemas.experiment import OdmrConfig, RelaxometryConfig
from sicmag.schemas.odmr import MeasurementMeta
from sicmag.schemas.sensor import FieldVector
from sicmag.services.storage_service import StorageService
from sicmag.workers import sweep_worker


class TestSweepWorker:
    """Test suite for sweep_worker"""

    @pytest.mark.parametrize("jobs", [1, 2, 4])
    def test_results_keep_task_order(self, jobs):
        tasks = [(2, 3), (3, 2), (5, 1), (7, 0)]

        assert sweep_worker.run_tasks(pow, tasks, jobs) == [8, 9, 5, 1]

    def test_simulate_and_fit_spectrum(self, tmp_path, sensor):
        """Test a written spectrum fits back to its field"""
        meta = MeasurementMeta(temperature_k=296.0, field_g=150.0)
        path = sweep_worker.simulate_spectrum(
            sensor, FieldVector.axial(150.0), OdmrConfig(noise_sigma=0.0), meta, 7, str(tmp_path / "s.csv")
        )

        spectrum = StorageService.read_spectrum(path)
        estimate = sweep_worker.fit_spectrum(spectrum, sensor, "s.csv")

        assert spectrum.meta.seed == 7
        assert estimate.B == pytest.approx(150.0, abs=1e-3)

    def test_simulate_and_fit_trace(self, tmp_path):
        meta = MeasurementMeta(temperature_k=296.0)
        path = sweep_worker.simulate_trace(6.2, RelaxometryConfig(noise_sigma=0.0), meta, 3, str(tmp_path / "t.csv"))

        fit = sweep_worker.fit_trace(StorageService.read_trace(path), "t.csv")

        assert fit.Gamma == pytest.approx(6.2, rel=1e-3)

    def test_fit_failure_names_the_file(self):
        trace = RelaxationTrace(np.arange(1.0, 4.0), np.ones(3), MeasurementMeta(temperature_k=296.0))

        with pytest.raises(InvalidInputError) as excinfo:
            sweep_worker.fit_trace(trace, "relax_T296.00K_probe.csv")

        assert excinfo.value.context == "relax_T296.00K_probe.csv"

    @pytest.mark.parametrize(
        "error",
        [
            PairingError("unpaired", orphans=["b.csv", "a.csv"]),
            ParseError("bad value", path="x.csv", line=3),
            StageError("fit-odmr", InvalidInputError("n_peaks must be 1 or 2")),
        ],
    )
    def test_errors_survive_process_boundary(self, error):
        """Test errors pickle with their attributes intact"""
        restored = pickle.loads(pickle.dumps(error))

        assert type(restored) is type(error)
        assert str(restored) == str(error)
        assert restored.__dict__.keys() == error.__dict__.keys()
