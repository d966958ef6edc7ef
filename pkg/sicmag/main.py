"""
Command-line entry point
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from sicmag import __version__
from sicmag.core.config import settings
from sicmag.core.exceptions import SicmagError
from sicmag.models.enums import OutputFormat
from sicmag.schemas.experiment import ExperimentConfig
from sicmag.schemas.report import AnalysisReport
from sicmag.services.pipeline_service import PipelineService
from sicmag.services.relaxometry_service import RelaxometryService
from sicmag.services.report_service import ReportService
from sicmag.services.storage_service import StorageService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_STAGE_ERROR = 2
EXIT_UNEXPECTED = 3


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--jobs", type=_positive_int, help="concurrent sweep points")
    common.add_argument("--out", help="output directory, overrides the config")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.CSV.value,
                        help="format of result tables")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="sicmag",
        description="SiC divacancy magnetometry and relaxometry of 2D magnets",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbs = parser.add_subparsers(dest="command", required=True)

    verbs.add_parser("simulate", parents=[common], help="write a synthetic measurement campaign")
    fit_odmr = verbs.add_parser("fit-odmr", parents=[common], help="differential magnetometry from spectra")
    fit_odmr.add_argument("inputs", nargs="+", help="probe and reference spectrum CSVs")
    estimate_tc = verbs.add_parser("estimate-tc", parents=[common], help="Curie temperature from a B_FGT series")
    estimate_tc.add_argument("input", help="temperature_k,b_fgt_g,sigma_g CSV")
    fit_relax = verbs.add_parser("fit-relax", parents=[common], help="relaxation rates from traces")
    fit_relax.add_argument("inputs", nargs="+", help="relaxation trace CSVs")
    fit_relax.add_argument("--fix-n", type=float, help="hold the stretch exponent at this value instead of the config's n_stretch")
    fit_phonon = verbs.add_parser("fit-phonon", parents=[common], help="phonon background from a rate series")
    fit_phonon.add_argument("input", help="temperature_k,rate_khz,sigma_khz CSV")
    fluctuation = verbs.add_parser("fluctuation", parents=[common], help="sample fluctuation peak")
    fluctuation.add_argument("probe", help="probe rate series CSV")
    fluctuation.add_argument("reference", help="reference rate series CSV")
    verbs.add_parser("reproduce", parents=[common], help="simulate, analyze and check against the config")
    return parser


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format=settings.LOG_FORMAT, stream=sys.stderr)


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config)
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.out is not None:
        updates["output_dir"] = args.out
    return config.model_copy(update=updates) if updates else config


def _out_dir(config: ExperimentConfig) -> Path:
    return Path(config.output_dir or settings.DEFAULT_OUTPUT_DIR)


def _emit(report: AnalysisReport) -> None:
    print(ReportService.generate_text_report(report))


def run(args: argparse.Namespace) -> int:
    """Dispatch one verb; returns the exit code"""
    config = _load_config(args)
    out = _out_dir(config)
    jobs = args.jobs or settings.DEFAULT_JOBS
    fmt = OutputFormat(args.format)
    seed = PipelineService.master_seed(config)

    if args.command == "simulate":
        written = PipelineService.simulate(config, out, jobs)
        print(f"Wrote {len(written)} files to {out}")
        return EXIT_OK

    if args.command == "reproduce":
        report = PipelineService.reproduce(config, out, jobs, fmt)
        _emit(report)
        return EXIT_OK if report.passed else EXIT_CHECK_FAILED

    if args.command == "fit-odmr":
        inputs = [Path(p) for p in args.inputs]
        analysis = PipelineService.fit_odmr(inputs, config.sensor, jobs)
        PipelineService.write_odmr(analysis, out, fmt)
        _emit(AnalysisReport(odmr=analysis.pairs, provenance=ReportService.provenance(config, inputs, seed)))
        return EXIT_OK

    if args.command == "estimate-tc":
        points, _ = StorageService.read_bfgt_series(args.input)
        estimate = PipelineService.estimate_tc(points, out, fmt)
        _emit(AnalysisReport(
            summary={
                "Tc": estimate.Tc,
                "sigma_Tc": estimate.sigma_Tc,
                "beta_crit": estimate.beta_crit,
                "B0_scale": estimate.B0_scale,
                "Tc_derivative": estimate.tc_derivative,
            },
            warnings=estimate.warnings,
            provenance=ReportService.provenance(config, [Path(args.input)], seed),
        ))
        return EXIT_OK

    if args.command == "fit-relax":
        inputs = [Path(p) for p in args.inputs]
        fix_n = args.fix_n if args.fix_n is not None else config.relaxometry.held_stretch
        analysis = PipelineService.fit_relax(inputs, jobs, fix_n=fix_n)
        PipelineService.write_relax(analysis, out, fmt)
        summary = {f"Gamma_p@{p.temperature_k:g}K": p.rate_khz for p in analysis.probe}
        summary.update({f"Gamma_r@{p.temperature_k:g}K": p.rate_khz for p in analysis.reference})
        _emit(AnalysisReport(
            rates=analysis.rates,
            summary=summary,
            provenance=ReportService.provenance(config, inputs, seed),
        ))
        return EXIT_OK

    if args.command == "fit-phonon":
        series, _ = StorageService.read_rate_series(args.input)
        fit = PipelineService.fit_phonon(series, out, fmt)
        _emit(AnalysisReport(
            summary={
                "a_khz": fit.params.a,
                "b_khz": fit.params.b,
                "c_khz_per_k5": fit.params.c,
                "Delta_over_k": fit.params.Delta_over_k,
                "Delta_meV": RelaxometryService.delta_to_mev(fit.params.Delta_over_k),
            },
            warnings=[] if fit.fit.converged else [f"phonon fit did not converge: {fit.fit.message}"],
            provenance=ReportService.provenance(config, [Path(args.input)], seed),
        ))
        return EXIT_OK

    if args.command == "fluctuation":
        probe, _ = StorageService.read_rate_series(args.probe)
        reference, _ = StorageService.read_rate_series(args.reference)
        fluct = config.relaxometry.fluctuation
        _, fit = PipelineService.fluctuation(
            probe,
            reference,
            exponent_below=fluct.exponent_below,
            exponent_above=fluct.exponent_above,
            fit_exponents=config.relaxometry.fit_exponents,
            out_dir=out,
            fmt=fmt,
        )
        _emit(AnalysisReport(
            summary={
                "peak_T": fit.peak_T,
                "sigma_peak_T": fit.sigma_peak_T,
                "peak_rate_khz": fit.model.peak_rate,
                "width_k": fit.model.width,
            },
            provenance=ReportService.provenance(config, [Path(args.probe), Path(args.reference)], seed),
        ))
        return EXIT_OK

    raise SicmagError(f"unknown command {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the CLI

    Returns:
        0 on success, 1 when a tolerance check failed, 2 on a toolkit or I/O
        error, 3 on an unexpected error
    """
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return run(args)
    except SicmagError as exc:
        logger.error(f"{args.command} failed: {exc}")
        return EXIT_STAGE_ERROR
    except OSError as exc:
        logger.error(f"{args.command} failed: {exc}")
        return EXIT_STAGE_ERROR
    except Exception as exc:
        logger.error(f"{args.command} failed unexpectedly: {exc}", exc_info=True)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
