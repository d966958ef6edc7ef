"""
Campaign pipeline: synthetic data generation, batch fitting and the
end-to-end reproduce run behind the CLI verbs
"""
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from sicmag.core.config import settings
from sicmag.core.exceptions import PairingError, SicmagError, StageError
from sicmag.core.seeding import derive_seed
from sicmag.models.analysis import Measurement, MeasurementPair, OdmrAnalysis, RelaxAnalysis
from sicmag.models.enums import Branch, CheckStatus, OutputFormat, Position, Sweep
from sicmag.models.magnet import TcEstimate
from sicmag.models.trace import FluctuationFit, PhononFit
from sicmag.schemas.experiment import ExperimentConfig
from sicmag.schemas.magnet import BfgtPoint, FieldSweepPoint, MagnetizationModel
from sicmag.schemas.odmr import MeasurementMeta
from sicmag.schemas.relaxometry import RatePoint
from sicmag.schemas.report import AnalysisReport, CheckResult, OdmrPairResult, RateResult
from sicmag.schemas.sensor import FieldVector, SensorSpinModel
from sicmag.services.magnet_service import MagnetService
from sicmag.services.odmr_service import OdmrService
from sicmag.services.relaxometry_service import RelaxometryService
from sicmag.services.report_service import ReportService
from sicmag.services.storage_service import StorageService
from sicmag.workers import sweep_worker

logger = logging.getLogger(__name__)

ODMR_DIR = "odmr"
RELAX_DIR = "relax"
PLOTS_DIR = "plots"
CURVE_SAMPLES = 200

PathLike = Union[str, Path]


def _spectrum_name(meta: MeasurementMeta) -> str:
    if meta.sweep == Sweep.FIELD:
        return f"field_H{meta.field_g:+.1f}G_{meta.branch.value}_{meta.position.value}.csv"
    return f"temperature_T{meta.temperature_k:.2f}K_{meta.position.value}.csv"


def _trace_name(meta: MeasurementMeta) -> str:
    return f"relax_T{meta.temperature_k:.2f}K_{meta.position.value}.csv"


def _curve(fn, lo: float, hi: float, column: str) -> pd.DataFrame:
    T = np.linspace(lo, hi, CURVE_SAMPLES)
    return pd.DataFrame({"temperature_k": T, column: [fn(t) for t in T]})


class PipelineService:
    """Stages of a synthetic measurement campaign and its analysis"""

    @staticmethod
    def master_seed(config: ExperimentConfig) -> int:
        return settings.MASTER_SEED if config.master_seed is None else config.master_seed

    @staticmethod
    @contextmanager
    def stage(name: str):
        """Wrap failures of one pipeline stage in StageError"""
        logger.info(f"Stage {name} started")
        try:
            yield
        except StageError:
            raise
        except SicmagError as exc:
            logger.error(f"Stage {name} failed: {exc}")
            raise StageError(name, exc) from exc
        logger.info(f"Stage {name} completed")

    @staticmethod
    def calibrated_model(config: ExperimentConfig) -> MagnetizationModel:
        """Magnet model with M_sat rescaled to the configured calibration field, if any"""
        magnet = config.magnet
        if magnet.calibrate_to_g is None:
            return magnet.model
        return MagnetService.calibrate_m_sat(
            magnet.model,
            magnet.geometry,
            magnet.placement,
            magnet.calibration_temperature_k,
            magnet.calibrate_to_g,
            H_applied=config.sweep.odmr_field_g,
        )

    # ------------------------------------------------------------------
    # simulate
    # ------------------------------------------------------------------

    @classmethod
    def simulate(cls, config: ExperimentConfig, out_dir: PathLike, jobs: int = 1) -> List[Path]:
        """
        Generate the synthetic campaign

        Writes probe and reference spectra for the temperature sweep and for
        both branches of the field sweep under odmr/, probe and reference
        relaxation traces under relax/ and ground-truth curves under plots/.
        Probe spectra see the applied field plus the flake's axial stray
        field; reference spectra see the applied field only.

        Args:
            config: Experiment configuration
            out_dir: Output root
            jobs: Concurrent sweep points

        Returns:
            Paths of every written file, in generation order
        """
        out = Path(out_dir)
        seed = cls.master_seed(config)
        model = cls.calibrated_model(config)
        magnet, sweep, relax = config.magnet, config.sweep, config.relaxometry

        metas: List[Tuple[MeasurementMeta, float]] = []
        for T in sweep.temperatures_k:
            H = sweep.odmr_field_g
            stray = MagnetService.signed_field_at_sensor(model, magnet.geometry, magnet.placement, T, H)
            for position, total in ((Position.PROBE, H + stray), (Position.REFERENCE, H)):
                meta = MeasurementMeta(temperature_k=T, field_g=H, position=position, sweep=Sweep.TEMPERATURE)
                metas.append((meta, total))
        T_sweep = sweep.field_sweep_temperature_k
        for branch in (Branch.DESCENDING, Branch.ASCENDING):
            for H in sweep.fields_g:
                stray = MagnetService.signed_field_at_sensor(
                    model, magnet.geometry, magnet.placement, T_sweep, H, branch
                )
                for position, total in ((Position.PROBE, H + stray), (Position.REFERENCE, H)):
                    meta = MeasurementMeta(
                        temperature_k=T_sweep, field_g=H, position=position, sweep=Sweep.FIELD, branch=branch
                    )
                    metas.append((meta, total))

        spectrum_tasks = []
        for index, (meta, total) in enumerate(metas):
            file_seed = derive_seed(seed, index)
            meta = meta.model_copy(update={'seed': file_seed})
            path = out / ODMR_DIR / _spectrum_name(meta)
            spectrum_tasks.append(
                (config.sensor, FieldVector.axial(total), config.odmr, meta, file_seed, str(path))
            )

        trace_tasks = []
        for T in sweep.temperatures_k:
            gamma_r = RelaxometryService.phonon_rate(relax.phonon, T).value
            gamma_p = gamma_r + RelaxometryService.fluctuation_rate(relax.fluctuation, T)
            for position, gamma in ((Position.PROBE, gamma_p), (Position.REFERENCE, gamma_r)):
                file_seed = derive_seed(seed, len(spectrum_tasks) + len(trace_tasks))
                meta = MeasurementMeta(
                    temperature_k=T, field_g=relax.field_g, position=position, seed=file_seed
                )
                path = out / RELAX_DIR / _trace_name(meta)
                trace_tasks.append((gamma, relax, meta, file_seed, str(path)))

        logger.info(f"Simulating {len(spectrum_tasks)} spectra and {len(trace_tasks)} traces into {out}")
        written = sweep_worker.run_tasks(sweep_worker.simulate_spectrum, spectrum_tasks, jobs)
        written += sweep_worker.run_tasks(sweep_worker.simulate_trace, trace_tasks, jobs)
        written = [Path(p) for p in written]
        written += cls._write_ground_truth(config, model, out)
        return written

    @staticmethod
    def _write_ground_truth(config: ExperimentConfig, model: MagnetizationModel, out: Path) -> List[Path]:
        magnet, sweep, relax = config.magnet, config.sweep, config.relaxometry
        plots = out / PLOTS_DIR
        temperatures = sweep.temperatures_k
        source = {"source": "ground truth", "M_sat": f"{model.M_sat:.9g}"}

        bfgt = [
            BfgtPoint(
                temperature_k=T,
                b_fgt_g=MagnetService.field_at_sensor(
                    model, magnet.geometry, magnet.placement, T, sweep.odmr_field_g
                ),
            )
            for T in temperatures
        ]
        gamma_r = [
            RatePoint(temperature_k=T, rate_khz=RelaxometryService.phonon_rate(relax.phonon, T).value)
            for T in temperatures
        ]
        gamma_fgt = [
            RatePoint(temperature_k=T, rate_khz=RelaxometryService.fluctuation_rate(relax.fluctuation, T))
            for T in temperatures
        ]
        loop = MagnetService.hysteresis_loop(model, sweep.field_sweep_temperature_k, sweep.fields_g)
        loop_frame = pd.DataFrame(
            {"field_g": loop.fields_g, "m_ascending": loop.ascending, "m_descending": loop.descending}
        )
        return [
            StorageService.write_bfgt_series(plots / "truth_bfgt.csv", bfgt, source),
            StorageService.write_rate_series(plots / "truth_gamma_r.csv", gamma_r, source),
            StorageService.write_rate_series(plots / "truth_gamma_fgt.csv", gamma_fgt, source),
            StorageService.write_table(plots / "truth_hysteresis.csv", loop_frame, source),
        ]

    # ------------------------------------------------------------------
    # pairing
    # ------------------------------------------------------------------

    @staticmethod
    def pair_measurements(items: Iterable[Measurement]) -> List[MeasurementPair]:
        """
        Match probe and reference measurements on their pairing key

        Returns:
            Pairs sorted by key

        Raises:
            PairingError: Listing every measurement without a partner or
                duplicating another's key and position
        """
        groups: Dict[tuple, Dict[Position, Measurement]] = {}
        duplicates = []
        for item in items:
            slot = groups.setdefault(item.meta.pairing_key(), {})
            if item.meta.position in slot:
                duplicates.append(item.label)
                continue
            slot[item.meta.position] = item
        if duplicates:
            raise PairingError("duplicate measurements for the same pairing key", orphans=duplicates)
        orphans = [
            next(iter(slot.values())).label
            for slot in groups.values()
            if len(slot) != 2
        ]
        if orphans:
            raise PairingError("measurements without a probe/reference partner", orphans=orphans)
        return [
            MeasurementPair(key=key, probe=slot[Position.PROBE], reference=slot[Position.REFERENCE])
            for key, slot in sorted(groups.items())
        ]

    # ------------------------------------------------------------------
    # fit-odmr
    # ------------------------------------------------------------------

    @classmethod
    def fit_odmr(cls, paths: Sequence[PathLike], sensor: SensorSpinModel, jobs: int = 1) -> OdmrAnalysis:
        """
        Differential magnetometry over paired probe/reference spectra

        Raises:
            ParseError: On a malformed file
            PairingError: On unpaired or duplicated spectra
        """
        items = []
        for path in paths:
            spectrum = StorageService.read_spectrum(path)
            items.append(Measurement(label=Path(path).name, meta=spectrum.meta, payload=spectrum))
        pairs = cls.pair_measurements(items)
        logger.info(f"Fitting {len(pairs)} spectrum pairs")

        tasks = []
        for pair in pairs:
            tasks.append((pair.probe.payload, sensor, pair.probe.label))
            tasks.append((pair.reference.payload, sensor, pair.reference.label))
        estimates = sweep_worker.run_tasks(sweep_worker.fit_spectrum, tasks, jobs)

        analysis = OdmrAnalysis()
        for k, pair in enumerate(pairs):
            probe, reference = estimates[2 * k], estimates[2 * k + 1]
            analysis.pairs.append(cls.pair_result(pair.probe.meta, probe, reference))

        for row in analysis.pairs:
            if row.sweep == Sweep.TEMPERATURE.value:
                analysis.bfgt.append(
                    BfgtPoint(temperature_k=row.temperature_k, b_fgt_g=row.B_FGT, sigma_g=row.sigma_B_FGT)
                )
            else:
                analysis.field_sweep.append(
                    FieldSweepPoint(field_g=row.field_g, signed_g=row.signed_g, branch=row.branch or "")
                )
        return analysis

    @staticmethod
    def pair_result(meta: MeasurementMeta, probe, reference) -> OdmrPairResult:
        """
        Combine the probe and reference estimates of one pair

        The signed stray field is sign(H) (B_tot - B_0), valid while the
        applied field dominates the stray field.
        """
        diff = OdmrService.differential_field(probe, reference)
        signed = diff.signed if meta.field_g >= 0 else -diff.signed
        return OdmrPairResult(
            sweep=meta.sweep.value,
            temperature_k=meta.temperature_k,
            field_g=meta.field_g,
            branch=meta.branch.value if meta.branch else None,
            B_tot=probe.B,
            sigma_B_tot=probe.sigma_B,
            B_0=reference.B,
            sigma_B_0=reference.sigma_B,
            B_FGT=diff.B_FGT,
            sigma_B_FGT=diff.sigma,
            signed_g=signed,
            D_est_mhz=probe.D_est,
        )

    @staticmethod
    def write_odmr(analysis: OdmrAnalysis, out_dir: PathLike, fmt: OutputFormat = OutputFormat.CSV) -> List[Path]:
        out = Path(out_dir)
        frame = pd.DataFrame([row.model_dump() for row in analysis.pairs])
        written = [StorageService.write_records(out / "odmr_fields", frame, fmt)]
        if analysis.bfgt:
            written.append(StorageService.write_bfgt_series(out / PLOTS_DIR / "bfgt_vs_temperature.csv", analysis.bfgt))
        if analysis.field_sweep:
            sweep_frame = pd.DataFrame([p.model_dump() for p in analysis.field_sweep])
            written.append(StorageService.write_table(out / PLOTS_DIR / "field_sweep.csv", sweep_frame))
        return written

    # ------------------------------------------------------------------
    # estimate-tc
    # ------------------------------------------------------------------

    @staticmethod
    def estimate_tc(points: Sequence[BfgtPoint], out_dir: Optional[PathLike] = None,
                    fmt: OutputFormat = OutputFormat.CSV) -> TcEstimate:
        """Fit Tc and, with an output directory, emit the estimate and fit-curve samples"""
        estimate = MagnetService.estimate_tc(points)
        if out_dir is not None:
            out = Path(out_dir)
            T = [p.temperature_k for p in points]

            def curve(t: float) -> float:
                return estimate.B0_scale * max(0.0, 1.0 - t / estimate.Tc) ** estimate.beta_crit

            StorageService.write_table(out / PLOTS_DIR / "tc_fit_curve.csv", _curve(curve, min(T), max(T), "b_fgt_g"))
            record = pd.DataFrame([{
                "Tc": estimate.Tc,
                "sigma_Tc": estimate.sigma_Tc,
                "beta_crit": estimate.beta_crit,
                "B0_scale": estimate.B0_scale,
                "tc_derivative": estimate.tc_derivative,
                "extrapolated": estimate.extrapolated,
                "converged": estimate.fit.converged,
            }])
            StorageService.write_records(out / "tc_estimate", record, fmt)
        return estimate

    # ------------------------------------------------------------------
    # fit-relax
    # ------------------------------------------------------------------

    @classmethod
    def fit_relax(cls, paths: Sequence[PathLike], jobs: int = 1, fix_n: Optional[float] = None) -> RelaxAnalysis:
        """
        Rates from relaxation traces, split by position

        When both positions are present every probe trace must have a
        reference partner and the differential rates are computed.

        Raises:
            ParseError: On a malformed file
            PairingError: On unpaired traces in a mixed set
        """
        traces = [StorageService.read_trace(path) for path in paths]
        labels = [Path(path).name for path in paths]
        fits = sweep_worker.run_tasks(
            sweep_worker.fit_trace, [(trace, label, fix_n) for trace, label in zip(traces, labels)], jobs
        )

        analysis = RelaxAnalysis()
        for trace, label, fit in zip(traces, labels, fits):
            analysis.fits.append(Measurement(label=label, meta=trace.meta, payload=fit))
            point = RatePoint(temperature_k=trace.meta.temperature_k, rate_khz=fit.Gamma, sigma_khz=fit.sigma_Gamma)
            if trace.meta.position == Position.PROBE:
                analysis.probe.append(point)
            else:
                analysis.reference.append(point)
        analysis.probe.sort(key=lambda p: p.temperature_k)
        analysis.reference.sort(key=lambda p: p.temperature_k)

        if analysis.probe and analysis.reference:
            for pair in cls.pair_measurements(analysis.fits):
                probe, reference = pair.probe.payload, pair.reference.payload
                diff = RelaxometryService.differential_rate(
                    probe.Gamma, reference.Gamma, probe.sigma_Gamma, reference.sigma_Gamma
                )
                analysis.rates.append(RateResult(
                    temperature_k=pair.probe.meta.temperature_k,
                    gamma_p=probe.Gamma,
                    sigma_p=probe.sigma_Gamma,
                    gamma_r=reference.Gamma,
                    sigma_r=reference.sigma_Gamma,
                    gamma_fgt=diff.value,
                    sigma_fgt=diff.sigma,
                    noise_consistent=diff.noise_consistent,
                    n_p=probe.n_stretch,
                    n_r=reference.n_stretch,
                ))
        else:
            logger.info("Traces cover a single position; no differential rates computed")
        return analysis

    @staticmethod
    def write_relax(analysis: RelaxAnalysis, out_dir: PathLike, fmt: OutputFormat = OutputFormat.CSV) -> List[Path]:
        out = Path(out_dir)
        rows = [{
            "label": m.label,
            "temperature_k": m.meta.temperature_k,
            "position": m.meta.position.value,
            "gamma_khz": m.payload.Gamma,
            "sigma_gamma_khz": m.payload.sigma_Gamma,
            "n_stretch": m.payload.n_stretch,
            "amplitude": m.payload.amplitude,
            "converged": m.payload.fit.converged,
        } for m in analysis.fits]
        written = [StorageService.write_records(out / "relax_fits", pd.DataFrame(rows), fmt)]
        if analysis.probe:
            written.append(StorageService.write_rate_series(out / PLOTS_DIR / "gamma_p.csv", analysis.probe))
        if analysis.reference:
            written.append(StorageService.write_rate_series(out / PLOTS_DIR / "gamma_r.csv", analysis.reference))
        if analysis.rates:
            series = [RatePoint(temperature_k=r.temperature_k, rate_khz=r.gamma_fgt, sigma_khz=r.sigma_fgt)
                      for r in analysis.rates]
            written.append(StorageService.write_rate_series(out / PLOTS_DIR / "gamma_fgt.csv", series))
        return written

    # ------------------------------------------------------------------
    # fit-phonon
    # ------------------------------------------------------------------

    @staticmethod
    def fit_phonon(series: Sequence[RatePoint], out_dir: Optional[PathLike] = None,
                   fmt: OutputFormat = OutputFormat.CSV) -> PhononFit:
        """Fit the phonon background and, with an output directory, emit it with curve samples"""
        fit = RelaxometryService.fit_phonon_model(series)
        if out_dir is not None:
            out = Path(out_dir)
            T = [p.temperature_k for p in series]
            StorageService.write_table(
                out / PLOTS_DIR / "phonon_fit_curve.csv",
                _curve(lambda t: RelaxometryService.phonon_rate(fit.params, t).value, min(T), max(T), "rate_khz"),
            )
            errors = fit.fit.std_errors
            record = pd.DataFrame([{
                "a_khz": fit.params.a,
                "b_khz": fit.params.b,
                "c_khz_per_k5": fit.params.c,
                "delta_over_k": fit.params.Delta_over_k,
                "delta_mev": RelaxometryService.delta_to_mev(fit.params.Delta_over_k),
                "sigma_a": errors[0],
                "sigma_b": errors[1],
                "sigma_c": errors[2],
                "sigma_delta_over_k": errors[3],
                "converged": fit.fit.converged,
            }])
            StorageService.write_records(out / "phonon_fit", record, fmt)
        return fit

    # ------------------------------------------------------------------
    # fluctuation
    # ------------------------------------------------------------------

    @staticmethod
    def differential_series(probe: Sequence[RatePoint], reference: Sequence[RatePoint]) -> List[RatePoint]:
        """
        Gamma_FGT = Gamma_p - Gamma_r matched on temperature

        Raises:
            PairingError: If any temperature lacks its partner
        """
        probe_by_t = {round(p.temperature_k, 6): p for p in probe}
        reference_by_t = {round(p.temperature_k, 6): p for p in reference}
        orphans = [f"probe T={t:g}K" for t in probe_by_t if t not in reference_by_t]
        orphans += [f"reference T={t:g}K" for t in reference_by_t if t not in probe_by_t]
        if orphans:
            raise PairingError("rate series do not cover the same temperatures", orphans=orphans)
        series = []
        for t in sorted(probe_by_t):
            p, r = probe_by_t[t], reference_by_t[t]
            diff = RelaxometryService.differential_rate(p.rate_khz, r.rate_khz, p.sigma_khz, r.sigma_khz)
            series.append(RatePoint(temperature_k=p.temperature_k, rate_khz=diff.value, sigma_khz=diff.sigma))
        return series

    @classmethod
    def fluctuation(
        cls,
        probe: Sequence[RatePoint],
        reference: Sequence[RatePoint],
        exponent_below: float = 1.0,
        exponent_above: float = 1.0,
        fit_exponents: bool = False,
        out_dir: Optional[PathLike] = None,
        fmt: OutputFormat = OutputFormat.CSV,
    ) -> Tuple[List[RatePoint], FluctuationFit]:
        """Gamma_FGT series and its peak fit"""
        series = cls.differential_series(probe, reference)
        fit = RelaxometryService.fit_fluctuation_model(
            series, exponent_below=exponent_below, exponent_above=exponent_above, fit_exponents=fit_exponents
        )
        if out_dir is not None:
            out = Path(out_dir)
            T = [p.temperature_k for p in series]
            StorageService.write_rate_series(out / PLOTS_DIR / "gamma_fgt.csv", series)
            StorageService.write_table(
                out / PLOTS_DIR / "fluctuation_fit_curve.csv",
                _curve(lambda t: RelaxometryService.fluctuation_rate(fit.model, t), min(T), max(T), "rate_khz"),
            )
            record = pd.DataFrame([{
                "peak_T": fit.peak_T,
                "sigma_peak_T": fit.sigma_peak_T,
                "peak_rate_khz": fit.model.peak_rate,
                "width_k": fit.model.width,
                "exponent_below": fit.model.exponent_below,
                "exponent_above": fit.model.exponent_above,
                "converged": fit.fit.converged,
            }])
            StorageService.write_records(out / "fluctuation_fit", record, fmt)
        return series, fit

    # ------------------------------------------------------------------
    # reproduce
    # ------------------------------------------------------------------

    @classmethod
    def reproduce(
        cls,
        config: ExperimentConfig,
        out_dir: PathLike,
        jobs: int = 1,
        fmt: OutputFormat = OutputFormat.CSV,
    ) -> AnalysisReport:
        """
        Simulate the campaign, analyze it and compare against the configured truth

        Raises:
            StageError: Naming the first stage that failed
        """
        out = Path(out_dir)
        relax = config.relaxometry
        tolerances = config.tolerances

        with cls.stage("simulate"):
            model = cls.calibrated_model(config)
            cls.simulate(config, out, jobs)
        spectra = sorted((out / ODMR_DIR).glob("*.csv"))
        traces = sorted((out / RELAX_DIR).glob("*.csv"))

        with cls.stage("fit-odmr"):
            odmr = cls.fit_odmr(spectra, config.sensor, jobs)
            cls.write_odmr(odmr, out, fmt)
        with cls.stage("estimate-tc"):
            tc = cls.estimate_tc(odmr.bfgt, out, fmt)
        with cls.stage("coercive-field"):
            coercive = MagnetService.estimate_coercive_field(odmr.field_sweep)
        with cls.stage("fit-relax"):
            rates = cls.fit_relax(traces, jobs, fix_n=relax.held_stretch)
            cls.write_relax(rates, out, fmt)
        with cls.stage("fit-phonon"):
            phonon = cls.fit_phonon(rates.reference, out, fmt)
        with cls.stage("fluctuation"):
            _, fluctuation = cls.fluctuation(
                rates.probe,
                rates.reference,
                exponent_below=relax.fluctuation.exponent_below,
                exponent_above=relax.fluctuation.exponent_above,
                fit_exponents=relax.fit_exponents,
                out_dir=out,
                fmt=fmt,
            )

        with cls.stage("report"):
            T_low, T_high = rates.reference[0].temperature_k, rates.reference[-1].temperature_k
            truth_low = RelaxometryService.phonon_rate(relax.phonon, T_low).value
            truth_high = RelaxometryService.phonon_rate(relax.phonon, T_high).value
            checks = [
                CheckResult.compare("tc_bfgt", model.Tc, tc.Tc, tolerances.tc_bfgt_k),
                CheckResult.compare("tc_fluctuation_peak", relax.fluctuation.Tc, fluctuation.peak_T, tolerances.tc_peak_k),
                CheckResult.compare("coercive_field", model.Hc, coercive.Hc, tolerances.coercive_field_g),
                ReportService.relative_check("gamma_r_lowest_t", truth_low, rates.reference[0].rate_khz,
                                             tolerances.gamma_r_rel),
                ReportService.relative_check("gamma_r_highest_t", truth_high, rates.reference[-1].rate_khz,
                                             tolerances.gamma_r_rel),
                ReportService.relative_check("phonon_curve_lowest_t", truth_low,
                                             RelaxometryService.phonon_rate(phonon.params, T_low).value,
                                             tolerances.phonon_curve_rel),
                ReportService.relative_check("phonon_curve_highest_t", truth_high,
                                             RelaxometryService.phonon_rate(phonon.params, T_high).value,
                                             tolerances.phonon_curve_rel),
            ]
            summary = {
                "M_sat_calibrated": model.M_sat,
                "Tc_bfgt": tc.Tc,
                "sigma_Tc_bfgt": tc.sigma_Tc,
                "beta_crit": tc.beta_crit,
                "Tc_derivative": tc.tc_derivative,
                "Tc_fluctuation_peak": fluctuation.peak_T,
                "sigma_Tc_fluctuation_peak": fluctuation.sigma_peak_T,
                "Hc": coercive.Hc,
                "phonon_a": phonon.params.a,
                "phonon_b": phonon.params.b,
                "phonon_c": phonon.params.c,
                "phonon_delta_over_k": phonon.params.Delta_over_k,
                "phonon_delta_mev": RelaxometryService.delta_to_mev(phonon.params.Delta_over_k),
            }
            warnings = list(tc.warnings)
            if not phonon.fit.converged:
                warnings.append(f"phonon fit did not converge: {phonon.fit.message}")
            if not fluctuation.fit.converged:
                warnings.append(f"fluctuation fit did not converge: {fluctuation.fit.message}")
            unconverged = [m.label for m in rates.fits if not m.payload.fit.converged]
            if unconverged:
                warnings.append(f"trace fits did not converge: {', '.join(unconverged)}")

            report = AnalysisReport(
                odmr=odmr.pairs,
                rates=rates.rates,
                summary=summary,
                checks=checks,
                warnings=warnings,
                provenance=ReportService.provenance(config, spectra + traces, cls.master_seed(config), root=out),
            )
            ReportService.write(report, out)

        failed = [c.name for c in checks if c.status == CheckStatus.FAIL]
        if failed:
            logger.warning(f"Checks failed: {', '.join(failed)}")
        else:
            logger.info(f"All {len(checks)} checks passed")
        return report
