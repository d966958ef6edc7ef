"""
Unit tests for the CSV codecs
"""
import json

import numpy as np
import pandas as pd
import pytest

from sicmag.core.exceptions import ParseError
from sicmag.models.enums import Branch, OutputFormat, Position, Sweep
from sicmag.schemas.magnet import BfgtPoint
from sicmag.schemas.odmr import MeasurementMeta
from sicmag.schemas.relaxometry import RatePoint
from sicmag.services.relaxometry_service import RelaxometryService
from sicmag.services.storage_service import StorageService


class TestStorageService:
    """Test suite for StorageService"""

    def test_spectrum_keeps_data_and_metadata(self, tmp_path, make_spectrum):
        spectrum = make_spectrum(
            -12.0, noise_sigma=0.0005, seed=9, position=Position.PROBE, sweep=Sweep.FIELD, branch=Branch.ASCENDING
        )
        path = StorageService.write_spectrum(tmp_path / "spectrum.csv", spectrum)

        loaded = StorageService.read_spectrum(path)

        assert np.allclose(loaded.frequencies, spectrum.frequencies, rtol=1e-9)
        assert np.allclose(loaded.signal, spectrum.signal, rtol=1e-8, atol=1e-15)
        assert loaded.meta.position == Position.PROBE
        assert loaded.meta.sweep == Sweep.FIELD
        assert loaded.meta.branch == Branch.ASCENDING
        assert loaded.meta.field_g == -12.0
        assert loaded.meta.seed == 9

    def test_trace_file_layout(self, tmp_path):
        trace = RelaxometryService.synthesize_trace(6.2, np.geomspace(1.0, 2000.0, 10), seed=3)

        path = StorageService.write_trace(tmp_path / "trace.csv", trace)

        lines = path.read_text().splitlines()
        assert "# seed: 3" in lines
        assert "delay_us,signal" in lines
        assert StorageService.read_trace(path).meta.seed == 3

    def test_malformed_value_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# temperature_k: 296\nfreq_mhz,signal\n1300,0.0\n1301,abc\n1302,0.0\n")

        with pytest.raises(ParseError) as excinfo:
            StorageService.read_spectrum(path)

        assert excinfo.value.line == 4
        assert f"{path}:4" in str(excinfo.value)

    def test_wrong_field_count_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# temperature_k: 296\nfreq_mhz,signal\n1300,0.0\n\n1301,0.0,7\n")

        with pytest.raises(ParseError) as excinfo:
            StorageService.read_spectrum(path)

        assert excinfo.value.line == 5

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# temperature_k: 296\nfrequency,signal\n1300,0.0\n")

        with pytest.raises(ParseError) as excinfo:
            StorageService.read_spectrum(path)

        assert excinfo.value.line == 2

    def test_missing_metadata(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("freq_mhz,signal\n1300,0.0\n1301,0.0\n")

        with pytest.raises(ParseError):
            StorageService.read_spectrum(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            StorageService.read_spectrum(tmp_path / "absent.csv")

    def test_sidecar_metadata(self, tmp_path):
        """Test sidecar keys are merged and comments take precedence"""
        path = tmp_path / "trace.csv"
        path.write_text("# position: probe\ndelay_us,signal\n1,1.0\n10,0.5\n")
        (tmp_path / "trace.csv.meta").write_text("temperature_k = 310\nposition=reference\n# note\n")

        trace = StorageService.read_trace(path)

        assert trace.meta.temperature_k == 310.0
        assert trace.meta.position == Position.PROBE

    def test_malformed_sidecar(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("delay_us,signal\n1,1.0\n")
        (tmp_path / "trace.csv.meta").write_text("temperature_k 310\n")

        with pytest.raises(ParseError) as excinfo:
            StorageService.read_trace(path)

        assert excinfo.value.line == 1

    def test_rate_series_writes_unknown_sigma_as_zero(self, tmp_path):
        points = [RatePoint(temperature_k=296.0, rate_khz=6.2, sigma_khz=np.inf), RatePoint(temperature_k=310.0, rate_khz=7.5, sigma_khz=0.1)]
        path = StorageService.write_rate_series(tmp_path / "rates.csv", points)

        loaded, _ = StorageService.read_rate_series(path)

        assert [p.sigma_khz for p in loaded] == [0.0, 0.1]
        assert [p.rate_khz for p in loaded] == [6.2, 7.5]

    def test_bfgt_series(self, tmp_path):
        points = [BfgtPoint(temperature_k=296.0, b_fgt_g=3.2, sigma_g=0.05)]
        path = StorageService.write_bfgt_series(tmp_path / "bfgt.csv", points, {"source": "test"})

        loaded, meta = StorageService.read_bfgt_series(path)

        assert loaded[0].b_fgt_g == 3.2
        assert meta["source"] == "test"

    def test_records_as_json(self, tmp_path):
        frame = pd.DataFrame({"temperature_k": [296.0, 310.0], "rate_khz": [6.2, 7.5]})

        path = StorageService.write_records(tmp_path / "rates.csv", frame, OutputFormat.JSON)

        assert path.suffix == ".json"
        assert json.loads(path.read_text()) == [
            {"temperature_k": 296.0, "rate_khz": 6.2},
            {"temperature_k": 310.0, "rate_khz": 7.5},
        ]

    def test_records_as_csv(self, tmp_path):
        frame = pd.DataFrame({"temperature_k": [296.0]})

        path = StorageService.write_records(tmp_path / "rates", frame, "csv")

        assert path.name == "rates.csv"
        assert path.read_text() == "temperature_k\n296\n"

    def test_measurement_meta_rejects_non_positive_temperature(self):
        with pytest.raises(ValueError):
            MeasurementMeta(temperature_k=0.0)
