"""
Analysis report schemas
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from sicmag.models.enums import CheckStatus


class Provenance(BaseModel):
    """Where a report's numbers came from"""
    config_hash: str
    input_hash: str
    seed: Optional[int] = None
    tool_version: str
    inputs: List[str] = Field(default_factory=list)


class OdmrPairResult(BaseModel):
    """B_tot, B_0 and B_FGT for one probe/reference pair"""
    sweep: str
    temperature_k: float
    field_g: float
    branch: Optional[str] = None
    B_tot: float
    sigma_B_tot: float
    B_0: float
    sigma_B_0: float
    B_FGT: float
    sigma_B_FGT: float
    signed_g: float
    D_est_mhz: float


class RateResult(BaseModel):
    """Probe and reference rates at one temperature"""
    temperature_k: float
    gamma_p: float
    sigma_p: float
    gamma_r: float
    sigma_r: float
    gamma_fgt: float
    sigma_fgt: float
    noise_consistent: bool
    n_p: float
    n_r: float


class CheckResult(BaseModel):
    """One recovered-versus-configured comparison"""
    name: str
    expected: float
    recovered: float
    tolerance: float
    status: CheckStatus

    @classmethod
    def compare(cls, name: str, expected: float, recovered: float, tolerance: float) -> "CheckResult":
        passed = abs(recovered - expected) <= tolerance and tolerance > 0
        return cls(
            name=name,
            expected=expected,
            recovered=recovered,
            tolerance=tolerance,
            status=CheckStatus.PASS if passed else CheckStatus.FAIL,
        )


class AnalysisReport(BaseModel):
    """Per-point quantities, derived summary, checks and provenance"""
    odmr: List[OdmrPairResult] = Field(default_factory=list)
    rates: List[RateResult] = Field(default_factory=list)
    summary: Dict[str, Optional[float]] = Field(default_factory=dict)
    checks: List[CheckResult] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)
    provenance: Optional[Provenance] = None

    @property
    def passed(self) -> bool:
        return all(check.status == CheckStatus.PASS for check in self.checks)
