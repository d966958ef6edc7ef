"""
Report assembly: provenance hashing, tolerance checks and the text summary
"""
import hashlib
import logging
from pathlib import Path
from typing import Iterable, List, Optional

import sicmag
from sicmag.models.enums import CheckStatus
from sicmag.schemas.experiment import ExperimentConfig
from sicmag.schemas.report import AnalysisReport, CheckResult, Provenance

logger = logging.getLogger(__name__)


class ReportService:
    """Provenance and human-readable report generation"""

    @staticmethod
    def hash_inputs(paths: Iterable[Path], root: Optional[Path] = None) -> str:
        """
        SHA-256 over every input file's bytes, sorted by relative path

        The relative path is hashed along with the content so renaming an input
        changes the digest.
        """
        root = Path(root) if root is not None else None
        entries = []
        for path in paths:
            path = Path(path)
            name = path.relative_to(root).as_posix() if root is not None else path.name
            entries.append((name, path))
        digest = hashlib.sha256()
        for name, path in sorted(entries):
            digest.update(name.encode())
            digest.update(b"\0")
            digest.update(path.read_bytes())
            digest.update(b"\0")
        return digest.hexdigest()

    @classmethod
    def provenance(
        cls,
        config: Optional[ExperimentConfig],
        inputs: Iterable[Path],
        seed: Optional[int] = None,
        root: Optional[Path] = None,
    ) -> Provenance:
        """Provenance record for a report"""
        inputs = list(inputs)
        root = Path(root) if root is not None else None
        config_text = config.canonical_json() if config is not None else ""
        names = sorted(
            (Path(p).relative_to(root).as_posix() if root is not None else Path(p).name) for p in inputs
        )
        return Provenance(
            config_hash=hashlib.sha256(config_text.encode()).hexdigest(),
            input_hash=cls.hash_inputs(inputs, root),
            seed=seed,
            tool_version=sicmag.__version__,
            inputs=names,
        )

    @staticmethod
    def relative_check(name: str, expected: float, recovered: float, rel_tolerance: float) -> CheckResult:
        """Check with a tolerance given as a fraction of the expected value"""
        return CheckResult.compare(name, expected, recovered, rel_tolerance * abs(expected))

    @staticmethod
    def generate_text_report(report: AnalysisReport) -> str:
        """
        Generate a text summary of an analysis report

        Args:
            report: Assembled report

        Returns:
            Text report string
        """
        lines = []
        lines.append("=" * 80)
        lines.append("SIC DIVACANCY MAGNETOMETRY - ANALYSIS REPORT")
        lines.append("=" * 80)
        lines.append("")

        if report.provenance:
            lines.append("PROVENANCE")
            lines.append("-" * 80)
            lines.append(f"Tool Version:           {report.provenance.tool_version}")
            lines.append(f"Master Seed:            {report.provenance.seed}")
            lines.append(f"Config Hash:            {report.provenance.config_hash}")
            lines.append(f"Input Hash:             {report.provenance.input_hash}")
            lines.append(f"Input Files:            {len(report.provenance.inputs)}")
            lines.append("")

        if report.summary:
            lines.append("SUMMARY")
            lines.append("-" * 80)
            for key, value in report.summary.items():
                shown = "n/a" if value is None else f"{value:.6g}"
                lines.append(f"{key + ':':<24}{shown}")
            lines.append("")

        if report.odmr:
            lines.append("DIFFERENTIAL MAGNETOMETRY")
            lines.append("-" * 80)
            lines.append(f"{'sweep':<12}{'T (K)':>10}{'H (G)':>10}{'branch':>12}{'B_tot':>11}{'B_0':>11}{'B_FGT':>10}{'sigma':>8}")
            for row in report.odmr:
                lines.append(
                    f"{row.sweep:<12}{row.temperature_k:>10.2f}{row.field_g:>10.1f}{row.branch or '-':>12}"
                    f"{row.B_tot:>11.3f}{row.B_0:>11.3f}{row.B_FGT:>10.3f}{row.sigma_B_FGT:>8.3f}"
                )
            lines.append("")

        if report.rates:
            lines.append("SPIN RELAXOMETRY (kHz)")
            lines.append("-" * 80)
            lines.append(f"{'T (K)':>10}{'Gamma_p':>12}{'Gamma_r':>12}{'Gamma_FGT':>12}{'sigma':>10}  note")
            for row in report.rates:
                note = "noise-consistent" if row.noise_consistent else ""
                lines.append(
                    f"{row.temperature_k:>10.2f}{row.gamma_p:>12.4f}{row.gamma_r:>12.4f}"
                    f"{row.gamma_fgt:>12.4f}{row.sigma_fgt:>10.4f}  {note}"
                )
            lines.append("")

        if report.checks:
            lines.append("CHECKS")
            lines.append("=" * 80)
            for check in report.checks:
                lines.append(
                    f"[{check.status.value.upper():<4}] {check.name:<22} expected {check.expected:>12.6g}"
                    f"  recovered {check.recovered:>12.6g}  tolerance {check.tolerance:.3g}"
                )
            failed = sum(1 for c in report.checks if c.status == CheckStatus.FAIL)
            lines.append("")
            lines.append(f"{len(report.checks) - failed} passed, {failed} failed")
            lines.append("")

        if report.warnings:
            lines.append("WARNINGS")
            lines.append("-" * 80)
            for warning in report.warnings:
                lines.append(f"- {warning}")
            lines.append("")

        return "\n".join(lines)

    @classmethod
    def write(cls, report: AnalysisReport, out_dir: Path) -> List[Path]:
        """Write report.json and report.txt"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path = out_dir / "report.json"
        text_path = out_dir / "report.txt"
        json_path.write_text(report.model_dump_json(indent=2) + "\n")
        text_path.write_text(cls.generate_text_report(report) + "\n")
        logger.info(f"Report written to {json_path}")
        return [json_path, text_path]
