"""
CSV codecs for spectra, traces and series

Files carry metadata as leading `# key: value` comment lines; on read a
`<file>.meta` sidecar of key=value lines is merged in (comments win).
"""
import io
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from sicmag.core.config import settings
from sicmag.core.exceptions import ParseError
from sicmag.models.enums import OutputFormat
from sicmag.models.spectrum import OdmrSpectrum
from sicmag.models.trace import RelaxationTrace
from sicmag.schemas.magnet import BfgtPoint
from sicmag.schemas.odmr import MeasurementMeta
from sicmag.schemas.relaxometry import RatePoint

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SPECTRUM_COLUMNS = ["freq_mhz", "signal"]
TRACE_COLUMNS = ["delay_us", "signal"]
RATE_COLUMNS = ["temperature_k", "rate_khz", "sigma_khz"]
BFGT_COLUMNS = ["temperature_k", "b_fgt_g", "sigma_g"]
SIDECAR_SUFFIX = ".meta"


def _known(sigma: float) -> float:
    # an unavailable uncertainty is written as 0, which the fits treat as unknown
    return float(sigma) if np.isfinite(sigma) else 0.0


def _read_sidecar(path: Path) -> Dict[str, str]:
    sidecar = path.with_name(path.name + SIDECAR_SUFFIX)
    if not sidecar.exists():
        return {}
    values = {}
    for lineno, raw in enumerate(sidecar.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("expected key=value", path=str(sidecar), line=lineno)
        values[key.strip()] = value.strip()
    return values


class StorageService:
    """Reading and writing the toolkit's CSV files"""

    @classmethod
    def read_table(cls, path: PathLike, columns: Sequence[str]) -> Tuple[pd.DataFrame, Dict[str, str]]:
        """
        Read a numeric CSV with comment metadata

        Args:
            path: File to read
            columns: Expected header

        Returns:
            (frame of floats, metadata strings)

        Raises:
            ParseError: On a wrong header, wrong field count or non-numeric
                value, with the offending line number
        """
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ParseError(f"cannot read file: {exc}", path=str(path))

        meta = _read_sidecar(path)
        data_lines: List[int] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            if data_lines and len(line.split(",")) != len(columns):
                raise ParseError(
                    f"expected {len(columns)} fields, got {len(line.split(','))}",
                    path=str(path),
                    line=lineno,
                )
            data_lines.append(lineno)

        if not data_lines:
            raise ParseError("file has no header row", path=str(path))
        frame = pd.read_csv(io.StringIO(text), comment="#", skip_blank_lines=True, dtype=str)
        header = [c.strip() for c in frame.columns]
        if header != list(columns):
            raise ParseError(
                f"expected header {','.join(columns)}, got {','.join(header)}",
                path=str(path),
                line=data_lines[0],
            )
        frame.columns = header
        numeric = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
        bad = ~np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1)
        if bad.any():
            row = int(np.argmax(bad))
            raise ParseError("non-numeric or non-finite value", path=str(path), line=data_lines[row + 1])
        return numeric.astype(float), meta

    @classmethod
    def write_table(cls, path: PathLike, frame: pd.DataFrame, meta: Optional[Dict[str, object]] = None) -> Path:
        """Write a CSV with leading `# key: value` comments"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            for key, value in (meta or {}).items():
                handle.write(f"# {key}: {value}\n")
            frame.to_csv(handle, index=False, float_format=settings.csv_float_format, lineterminator="\n")
        logger.debug(f"Wrote {len(frame)} rows to {path}")
        return path

    @classmethod
    def write_records(cls, path: PathLike, frame: pd.DataFrame, fmt: Union[OutputFormat, str] = OutputFormat.CSV) -> Path:
        """Write a result table as CSV or as a JSON list of records; the suffix follows fmt"""
        fmt = OutputFormat(fmt)
        path = Path(path).with_suffix(f".{fmt.value}")
        if fmt == OutputFormat.CSV:
            return cls.write_table(path, frame)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(frame.to_json(orient="records", indent=2, double_precision=settings.CSV_SIGNIFICANT_DIGITS) + "\n")
        return path

    @staticmethod
    def _meta_dict(meta: MeasurementMeta) -> Dict[str, object]:
        return meta.model_dump(mode="json", exclude_none=True)

    @staticmethod
    def _parse_meta(values: Dict[str, str], path: Path) -> MeasurementMeta:
        cleaned = {k: v for k, v in values.items() if v != ""}
        try:
            return MeasurementMeta.model_validate(cleaned)
        except ValueError as exc:
            raise ParseError(f"invalid metadata: {exc}", path=str(path))

    @classmethod
    def write_spectrum(cls, path: PathLike, spectrum: OdmrSpectrum) -> Path:
        frame = pd.DataFrame({"freq_mhz": spectrum.frequencies, "signal": spectrum.signal})
        return cls.write_table(path, frame, cls._meta_dict(spectrum.meta))

    @classmethod
    def read_spectrum(cls, path: PathLike) -> OdmrSpectrum:
        """Read a `freq_mhz,signal` spectrum file"""
        frame, values = cls.read_table(path, SPECTRUM_COLUMNS)
        meta = cls._parse_meta(values, Path(path))
        try:
            return OdmrSpectrum(frequencies=frame["freq_mhz"].to_numpy(), signal=frame["signal"].to_numpy(), meta=meta)
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path))

    @classmethod
    def write_trace(cls, path: PathLike, trace: RelaxationTrace) -> Path:
        frame = pd.DataFrame({"delay_us": trace.delays, "signal": trace.signal})
        return cls.write_table(path, frame, cls._meta_dict(trace.meta))

    @classmethod
    def read_trace(cls, path: PathLike) -> RelaxationTrace:
        """Read a `delay_us,signal` trace file"""
        frame, values = cls.read_table(path, TRACE_COLUMNS)
        meta = cls._parse_meta(values, Path(path))
        try:
            return RelaxationTrace(delays=frame["delay_us"].to_numpy(), signal=frame["signal"].to_numpy(), meta=meta)
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path))

    @classmethod
    def write_rate_series(cls, path: PathLike, points: Sequence[RatePoint], meta: Optional[Dict[str, object]] = None) -> Path:
        frame = pd.DataFrame(
            [[p.temperature_k, p.rate_khz, _known(p.sigma_khz)] for p in points], columns=RATE_COLUMNS
        )
        return cls.write_table(path, frame, meta)

    @classmethod
    def read_rate_series(cls, path: PathLike) -> Tuple[List[RatePoint], Dict[str, str]]:
        """Read a `temperature_k,rate_khz,sigma_khz` series"""
        frame, meta = cls.read_table(path, RATE_COLUMNS)
        points = [RatePoint(temperature_k=t, rate_khz=r, sigma_khz=s) for t, r, s in frame.itertuples(index=False)]
        return points, meta

    @classmethod
    def write_bfgt_series(cls, path: PathLike, points: Sequence[BfgtPoint], meta: Optional[Dict[str, object]] = None) -> Path:
        frame = pd.DataFrame(
            [[p.temperature_k, p.b_fgt_g, _known(p.sigma_g)] for p in points], columns=BFGT_COLUMNS
        )
        return cls.write_table(path, frame, meta)

    @classmethod
    def read_bfgt_series(cls, path: PathLike) -> Tuple[List[BfgtPoint], Dict[str, str]]:
        """Read a `temperature_k,b_fgt_g,sigma_g` series"""
        frame, meta = cls.read_table(path, BFGT_COLUMNS)
        points = [BfgtPoint(temperature_k=t, b_fgt_g=b, sigma_g=s) for t, b, s in frame.itertuples(index=False)]
        return points, meta
