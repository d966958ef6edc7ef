"""
Pipeline stage records
"""
from dataclasses import dataclass, field
from typing import Any, List, NamedTuple

from sicmag.schemas.magnet import BfgtPoint, FieldSweepPoint
from sicmag.schemas.odmr import MeasurementMeta
from sicmag.schemas.relaxometry import RatePoint
from sicmag.schemas.report import OdmrPairResult, RateResult


class Measurement(NamedTuple):
    """A parsed file with its metadata; payload is a spectrum, trace or fit"""
    label: str
    meta: MeasurementMeta
    payload: Any


class MeasurementPair(NamedTuple):
    key: tuple
    probe: Measurement
    reference: Measurement


@dataclass
class OdmrAnalysis:
    """Paired field results split by sweep"""
    pairs: List[OdmrPairResult] = field(default_factory=list)
    bfgt: List[BfgtPoint] = field(default_factory=list)
    field_sweep: List[FieldSweepPoint] = field(default_factory=list)


@dataclass
class RelaxAnalysis:
    """Per-position rate series and, when both positions are present, their difference"""
    probe: List[RatePoint] = field(default_factory=list)
    reference: List[RatePoint] = field(default_factory=list)
    rates: List[RateResult] = field(default_factory=list)
    fits: List[Measurement] = field(default_factory=list)

