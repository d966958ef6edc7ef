"""
Unit tests for spin relaxometry
"""
import numpy as np
import pytest

from sicmag.core.exceptions import InitializationError, InvalidInputError, NoPeakError
from sicmag.models.trace import RelaxationTrace
from sicmag.schemas.experiment import RelaxometryConfig
from sicmag.schemas.odmr import MeasurementMeta
from sicmag.schemas.relaxometry import FluctuationModel, PhononModelParams, RatePoint
from sicmag.services.relaxometry_service import RelaxometryService

_DELAYS = np.geomspace(0.5, 5000.0, 60)
_TEMPERATURES = np.linspace(296.0, 393.0, 12)


def _phonon_series(temperatures=_TEMPERATURES, params=PhononModelParams()):
    return [RatePoint(temperature_k=T, rate_khz=RelaxometryService.phonon_rate(params, T).value) for T in temperatures]


class TestRelaxationTraces:
    """Test suite for trace synthesis and fitting"""

    def test_decay_shape(self):
        values = RelaxometryService.decay(np.array([0.0, 1000.0 / 6.2]), 6.2, 1.0, 1.0)

        assert values == pytest.approx([1.0, np.exp(-1.0)])

    @pytest.mark.parametrize("gamma", [6.2, 22.1])
    @pytest.mark.parametrize("n_stretch", [0.7, 1.0])
    def test_noise_free_round_trip(self, gamma, n_stretch):
        """Test rate and stretch are recovered to better than 0.1%"""
        trace = RelaxometryService.synthesize_trace(gamma, _DELAYS, n_stretch=n_stretch)

        fit = RelaxometryService.fit_trace(trace)

        assert fit.Gamma == pytest.approx(gamma, rel=1e-3)
        assert fit.n_stretch == pytest.approx(n_stretch, rel=1e-3)
        assert fit.amplitude == pytest.approx(1.0, rel=1e-3)

    def test_fixed_exponent(self):
        trace = RelaxometryService.synthesize_trace(6.2, _DELAYS, n_stretch=0.8)

        fit = RelaxometryService.fit_trace(trace, fix_n=0.8)

        assert fit.n_stretch == 0.8
        assert fit.sigma_n == 0.0
        assert fit.Gamma == pytest.approx(6.2, rel=1e-3)

    @pytest.mark.slow
    @pytest.mark.parametrize("gamma", [6.2, 22.1])
    @pytest.mark.parametrize("n_stretch", [0.7, 1.0])
    def test_noisy_traces(self, gamma, n_stretch):
        """Test SNR 10 traces on the default delays keep the median rate error under 5% over 100 seeds"""
        delays = RelaxometryConfig().delays()
        errors = []
        for seed in range(100):
            trace = RelaxometryService.synthesize_trace(gamma, delays, n_stretch=n_stretch, noise_sigma=0.1, seed=seed)
            fit = RelaxometryService.fit_trace(trace, fix_n=RelaxometryConfig(n_stretch=n_stretch).held_stretch)
            errors.append(abs(fit.Gamma - gamma) / gamma)

        assert np.median(errors) < 0.05

    @pytest.mark.parametrize("n_stretch", [0.7, 1.0])
    def test_noise_free_default_delays(self, n_stretch):
        """Test the default delay grid supports 0.1% recovery with a free exponent"""
        trace = RelaxometryService.synthesize_trace(22.1, RelaxometryConfig().delays(), n_stretch=n_stretch)

        fit = RelaxometryService.fit_trace(trace)

        assert fit.Gamma == pytest.approx(22.1, rel=1e-3)
        assert fit.n_stretch == pytest.approx(n_stretch, rel=1e-3)

    def test_seeded_trace_is_reproducible(self):
        first = RelaxometryService.synthesize_trace(6.2, _DELAYS, noise_sigma=0.01, seed=4)
        second = RelaxometryService.synthesize_trace(6.2, _DELAYS, noise_sigma=0.01, seed=4)

        assert np.array_equal(first.signal, second.signal)
        assert first.meta.seed == 4

    def test_invalid_rate(self):
        with pytest.raises(InvalidInputError):
            RelaxometryService.synthesize_trace(0.0, _DELAYS)

    def test_invalid_stretch(self):
        with pytest.raises(InvalidInputError):
            RelaxometryService.synthesize_trace(6.2, _DELAYS, n_stretch=2.5)

    def test_too_few_samples(self):
        trace = RelaxometryService.synthesize_trace(6.2, np.geomspace(1.0, 2000.0, 5))
        with pytest.raises(InvalidInputError):
            RelaxometryService.fit_trace(trace)

    def test_delays_must_span_a_decade(self):
        trace = RelaxometryService.synthesize_trace(6.2, np.linspace(10.0, 50.0, 10))
        with pytest.raises(InvalidInputError):
            RelaxometryService.fit_trace(trace)

    def test_negative_signal_cannot_be_initialized(self):
        trace = RelaxationTrace(
            delays=_DELAYS,
            signal=-RelaxometryService.decay(_DELAYS, 6.2, 1.0, 1.0),
            meta=MeasurementMeta(temperature_k=296.0),
        )
        with pytest.raises(InitializationError):
            RelaxometryService.fit_trace(trace)


class TestPhononModel:
    """Test suite for the phonon background"""

    def test_default_rates_at_sweep_ends(self):
        params = PhononModelParams()

        assert RelaxometryService.phonon_rate(params, 296.0).value == pytest.approx(6.2, abs=0.01)
        assert RelaxometryService.phonon_rate(params, 393.0).value == pytest.approx(22.1, abs=0.02)

    def test_overflow_saturates(self):
        rate = RelaxometryService.phonon_rate(PhononModelParams(), 1e70)

        assert rate.saturated
        assert rate.value == np.finfo(float).max

    def test_non_positive_temperature(self):
        with pytest.raises(InvalidInputError):
            RelaxometryService.phonon_rate(PhononModelParams(), 0.0)

    def test_noise_free_fit(self):
        """Test the fitted curve reproduces the generating model"""
        params = PhononModelParams()

        fit = RelaxometryService.fit_phonon_model(_phonon_series())

        for T in (296.0, 340.0, 393.0):
            expected = RelaxometryService.phonon_rate(params, T).value
            assert RelaxometryService.phonon_rate(fit.params, T).value == pytest.approx(expected, rel=1e-4)
        assert fit.params.Delta_over_k == pytest.approx(2000.0, rel=0.05)

    def test_fit_accepts_tuples(self):
        series = [(p.temperature_k, p.rate_khz, 0.1) for p in _phonon_series()]

        fit = RelaxometryService.fit_phonon_model(series)

        assert fit.params.a >= 0 and fit.params.b >= 0 and fit.params.c >= 0

    def test_too_few_points(self):
        with pytest.raises(InvalidInputError):
            RelaxometryService.fit_phonon_model(_phonon_series(_TEMPERATURES[:4]))

    def test_delta_in_mev(self):
        assert RelaxometryService.delta_to_mev(2000.0) == pytest.approx(172.3, abs=0.1)


class TestFluctuation:
    """Test suite for the differential rate and the fluctuation peak"""

    def test_differential_rate(self):
        rate = RelaxometryService.differential_rate(30.0, 20.0, 1.0, 1.0)

        assert rate.value == pytest.approx(10.0)
        assert rate.sigma == pytest.approx(np.sqrt(2.0))
        assert not rate.noise_consistent

    def test_differential_rate_within_noise(self):
        rate = RelaxometryService.differential_rate(20.5, 20.0, 0.3, 0.3)

        assert rate.noise_consistent

    def test_differential_rate_of_equal_rates_is_zero(self):
        for value in (0.0, 6.2, 22.1, 1e6):
            assert RelaxometryService.differential_rate(value, value, 0.4, 0.3).value == 0.0

    def test_differential_rate_is_antisymmetric(self, rng):
        for _ in range(50):
            gamma_p, gamma_r = rng.uniform(0.0, 50.0, 2)
            sigma_p, sigma_r = rng.uniform(0.0, 2.0, 2)

            forward = RelaxometryService.differential_rate(gamma_p, gamma_r, sigma_p, sigma_r)
            backward = RelaxometryService.differential_rate(gamma_r, gamma_p, sigma_r, sigma_p)

            assert forward.value == -backward.value
            assert forward.sigma == backward.sigma
            assert forward.noise_consistent == backward.noise_consistent

    def test_differential_rate_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            RelaxometryService.differential_rate(np.inf, 20.0)

    def test_peak_at_tc(self):
        model = FluctuationModel()

        assert RelaxometryService.fluctuation_rate(model, 360.0) == pytest.approx(20.0, abs=0.01)
        assert RelaxometryService.fluctuation_rate(model, 350.0) < RelaxometryService.fluctuation_rate(model, 360.0)
        assert RelaxometryService.fluctuation_rate(model, 370.0) < RelaxometryService.fluctuation_rate(model, 360.0)

    def test_symmetric_for_equal_exponents(self):
        model = FluctuationModel()

        assert RelaxometryService.fluctuation_rate(model, 340.0) == pytest.approx(
            RelaxometryService.fluctuation_rate(model, 380.0)
        )

    def test_from_peak(self):
        model = FluctuationModel.from_peak(20.0, Tc=350.0, width=5.0)

        assert model.peak_rate == pytest.approx(20.0)
        assert model.Tc == 350.0

    def test_noise_free_peak_fit(self):
        model = FluctuationModel()
        series = [(T, RelaxometryService.fluctuation_rate(model, T), 0.0) for T in _TEMPERATURES]

        fit = RelaxometryService.fit_fluctuation_model(series)

        assert fit.peak_T == pytest.approx(360.0, abs=0.5)
        assert fit.model.peak_rate == pytest.approx(20.0, rel=0.05)

    def test_fit_with_free_exponents(self):
        model = FluctuationModel(exponent_below=0.8, exponent_above=1.2)
        series = [(T, RelaxometryService.fluctuation_rate(model, T), 0.0) for T in np.linspace(296.0, 393.0, 25)]

        fit = RelaxometryService.fit_fluctuation_model(series, fit_exponents=True)

        assert fit.peak_T == pytest.approx(360.0, abs=1.0)

    def test_noisy_differential_peak(self):
        """Test the peak of 5%-noise differential rates lands within 5 K"""
        model = FluctuationModel()
        params = PhononModelParams()
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            series = []
            for T in _TEMPERATURES:
                gamma_r = RelaxometryService.phonon_rate(params, T).value
                gamma_p = gamma_r + RelaxometryService.fluctuation_rate(model, T)
                noisy_p = gamma_p * (1.0 + 0.05 * rng.normal())
                noisy_r = gamma_r * (1.0 + 0.05 * rng.normal())
                diff = RelaxometryService.differential_rate(noisy_p, noisy_r, 0.05 * gamma_p, 0.05 * gamma_r)
                series.append((T, diff.value, diff.sigma))
            try:
                fit = RelaxometryService.fit_fluctuation_model(series)
            except NoPeakError:
                continue
            hits += abs(fit.peak_T - 360.0) <= 5.0

        assert hits >= 17

    def test_unbracketed_maximum(self):
        series = [(T, float(T) / 10.0, 0.0) for T in _TEMPERATURES]
        with pytest.raises(NoPeakError):
            RelaxometryService.fit_fluctuation_model(series)

    def test_too_few_points(self):
        series = [(T, 1.0, 0.0) for T in _TEMPERATURES[:5]]
        with pytest.raises(InvalidInputError):
            RelaxometryService.fit_fluctuation_model(series)
