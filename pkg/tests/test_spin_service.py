"""
Unit tests for the sensor spin model
"""
import numpy as np
import pytest
from pydantic import ValidationError

from sicmag.core.exceptions import InvalidInputError, ModelRangeError
from sicmag.schemas.sensor import FieldVector, SensorSpinModel
from sicmag.services.spin_service import SpinModelService


class TestSpinModelService:
    """Test suite for SpinModelService"""

    def test_gamma_from_g(self):
        """Test the electron gyromagnetic ratio in MHz/G"""
        assert SpinModelService.gamma_from_g() == pytest.approx(2.8025, abs=1e-3)

    def test_zfs_follows_linear_temperature_law(self):
        model = SensorSpinModel(dD_dT=-0.1)

        assert SpinModelService.zfs_at(model, 296.0) == pytest.approx(1351.0)
        assert SpinModelService.zfs_at(model, 396.0) == pytest.approx(1341.0)

    def test_zfs_rejects_non_positive_temperature(self, sensor):
        with pytest.raises(InvalidInputError):
            SpinModelService.zfs_at(sensor, 0.0)

    def test_zfs_out_of_model_range(self):
        """Test a linear law driven below zero raises"""
        model = SensorSpinModel(dD_dT=-10.0)
        with pytest.raises(ModelRangeError):
            SpinModelService.zfs_at(model, 500.0)

    def test_zero_field_lines_sit_at_d(self, sensor):
        f_minus, f_plus = SpinModelService.transition_frequencies(sensor, FieldVector(), 296.0)

        assert f_minus == pytest.approx(1351.0, abs=1e-9)
        assert f_plus == pytest.approx(1351.0, abs=1e-9)

    def test_transverse_splitting_at_zero_field(self):
        """Test E splits the zero-field lines to D - E and D + E"""
        model = SensorSpinModel(E=5.0)

        f_minus, f_plus = SpinModelService.transition_frequencies(model, FieldVector(), 296.0)

        assert f_minus == pytest.approx(1346.0, abs=1e-9)
        assert f_plus == pytest.approx(1356.0, abs=1e-9)

    def test_axial_field_closed_form(self, sensor):
        """Test E = 0 axial lines are D -/+ gamma B"""
        f_minus, f_plus = SpinModelService.transition_frequencies(sensor, FieldVector.axial(200.0), 296.0)

        assert f_minus == pytest.approx(1351.0 - 2.8025 * 200.0, abs=1e-6)
        assert f_plus == pytest.approx(1351.0 + 2.8025 * 200.0, abs=1e-6)

    def test_axial_field_beyond_level_crossing(self, sensor):
        """Test the lower line becomes gamma B - D past the crossing"""
        f_minus, f_plus = SpinModelService.transition_frequencies(sensor, FieldVector.axial(508.0), 296.0)

        assert f_minus == pytest.approx(2.8025 * 508.0 - 1351.0, abs=1e-6)
        assert f_plus == pytest.approx(1351.0 + 2.8025 * 508.0, abs=1e-6)

    def test_negative_axial_field_is_symmetric(self, sensor):
        up = SpinModelService.transition_frequencies(sensor, FieldVector.axial(120.0), 296.0)
        down = SpinModelService.transition_frequencies(sensor, FieldVector.axial(-120.0), 296.0)

        assert np.allclose(up, down, atol=1e-9)

    def test_hamiltonian_is_hermitian(self, sensor):
        field = FieldVector(Bx=12.0, By=-7.0, Bz=150.0)

        H = SpinModelService.hamiltonian(sensor, field, 296.0)

        assert H.shape == (3, 3)
        assert np.allclose(H, H.conj().T)

    def test_transverse_field_keeps_lines_ordered(self, sensor):
        f_minus, f_plus = SpinModelService.transition_frequencies(sensor, FieldVector(Bx=30.0, Bz=100.0), 296.0)

        assert 0 < f_minus < f_plus

    def test_field_from_splitting_below_crossing(self, sensor):
        extraction = SpinModelService.field_from_splitting(
            sensor, 1351.0 - 2.8025 * 200.0, 1351.0 + 2.8025 * 200.0
        )

        assert extraction.B == pytest.approx(200.0)
        assert extraction.D_center == pytest.approx(1351.0)
        assert not extraction.crossed

    def test_field_from_splitting_beyond_crossing(self, sensor):
        """Test the crossed reading is chosen when its center matches D"""
        extraction = SpinModelService.field_from_splitting(
            sensor, 2.8025 * 508.0 - 1351.0, 1351.0 + 2.8025 * 508.0, T=296.0
        )

        assert extraction.B == pytest.approx(508.0)
        assert extraction.D_center == pytest.approx(1351.0)
        assert extraction.crossed

    def test_field_from_splitting_negative_splitting(self, sensor):
        with pytest.raises(InvalidInputError):
            SpinModelService.field_from_splitting(sensor, 1400.0, 1300.0)

    def test_field_from_branch(self, sensor):
        assert SpinModelService.field_from_branch(sensor, 1351.0 - 2.8025 * 100.0, 296.0) == pytest.approx(100.0)


class TestSensorSchemas:
    """Test suite for sensor and field schemas"""

    def test_e_must_stay_below_d(self):
        with pytest.raises(ValidationError):
            SensorSpinModel(E=2000.0)

    def test_gamma_must_be_positive(self):
        with pytest.raises(ValidationError):
            SensorSpinModel(gamma=0.0)

    def test_field_vector_addition_merges_flags(self):
        total = FieldVector(Bz=1.0, flags=("on_surface",)) + FieldVector(Bx=2.0, flags=("on_surface",))

        assert np.allclose(total.as_array(), [2.0, 0.0, 1.0])
        assert total.flags == ("on_surface",)

    def test_field_vector_magnitude(self):
        assert FieldVector(Bx=3.0, Bz=4.0).magnitude == pytest.approx(5.0)
